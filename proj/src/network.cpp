#include "pdopf/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "pdopf/errors.hpp"
#include "pdopf/text.hpp"

namespace pdopf {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMaxAngle = std::numbers::pi / 2.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void invalid(const std::string& what) {
  throw ParseError(ParseError::Kind::InvalidNetwork, "invalid network: " + what);
}

}  // namespace

NetworkModel::NetworkModel(double base_mva, std::vector<Bus> buses,
                           std::vector<Generator> generators,
                           std::vector<Load> loads, std::vector<Line> lines)
    : base_mva_(base_mva),
      buses_(std::move(buses)),
      generators_(std::move(generators)),
      loads_(std::move(loads)),
      lines_(std::move(lines)) {
  if (!(base_mva_ > 0.0) || !std::isfinite(base_mva_)) invalid("baseMVA must be positive");
  if (buses_.empty()) invalid("no buses");
  if (generators_.empty()) invalid("at least one generator is required");
  if (loads_.empty()) invalid("at least one load is required");

  std::size_t slack_count = 0;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& b = buses_[i];
    if (!(b.v_min > 0.0) || !(b.v_min <= b.v_max) || !std::isfinite(b.v_max)) {
      invalid("bus " + std::to_string(b.id) + " has invalid voltage bounds");
    }
    if (b.is_slack) {
      slack_ = i;
      ++slack_count;
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (buses_[j].id == b.id) invalid("duplicate bus id " + std::to_string(b.id));
    }
  }
  if (slack_count == 0) {
    throw ParseError(ParseError::Kind::NoSlackBus, "network has no slack bus");
  }
  if (slack_count > 1) {
    throw ParseError(ParseError::Kind::DuplicateSlack, "network has more than one slack bus");
  }

  const std::size_t n = buses_.size();
  adjacency_.assign(n, {});
  gens_at_.assign(n, {});
  loads_at_.assign(n, {});

  for (std::size_t g = 0; g < generators_.size(); ++g) {
    const Generator& gen = generators_[g];
    if (gen.bus >= n) invalid("generator " + std::to_string(g) + " references unknown bus");
    if (!is_finite(gen.s_min) || !is_finite(gen.s_max) ||
        gen.s_min.real() > gen.s_max.real() || gen.s_min.imag() > gen.s_max.imag()) {
      invalid("generator " + std::to_string(g) + " has invalid bounds");
    }
    if (!(gen.cost_c2 >= 0.0) || !std::isfinite(gen.cost_c1) || !std::isfinite(gen.cost_c0) ||
        !std::isfinite(gen.cost_c2)) {
      invalid("generator " + std::to_string(g) + " has invalid cost coefficients");
    }
    gens_at_[gen.bus].push_back(g);
  }
  for (std::size_t d = 0; d < loads_.size(); ++d) {
    const Load& load = loads_[d];
    if (load.bus >= n) invalid("load " + std::to_string(d) + " references unknown bus");
    if (!is_finite(load.demand)) invalid("load " + std::to_string(d) + " is not finite");
    loads_at_[load.bus].push_back(d);
  }
  for (std::size_t l = 0; l < lines_.size(); ++l) {
    const Line& line = lines_[l];
    if (line.from >= n || line.to >= n) invalid("line " + std::to_string(l) + " references unknown bus");
    if (line.from == line.to) invalid("line " + std::to_string(l) + " is a self loop");
    if (!is_finite(line.admittance)) invalid("line " + std::to_string(l) + " has zero impedance");
    if (!(line.thermal_limit > 0.0)) invalid("line " + std::to_string(l) + " has non-positive thermal limit");
    if (!(line.angle_limit > 0.0) || line.angle_limit > kMaxAngle) {
      invalid("line " + std::to_string(l) + " has angle limit outside (0, pi/2]");
    }
    adjacency_[line.from].push_back({l, 0});
    adjacency_[line.to].push_back({l, 1});
  }
}

std::optional<std::size_t> NetworkModel::bus_index(int id) const {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].id == id) return i;
  }
  return std::nullopt;
}

bool NetworkModel::has_reference_costs() const {
  return std::all_of(generators_.begin(), generators_.end(),
                     [](const Generator& g) { return g.reference_cost.has_value(); });
}

NetworkModel NetworkModel::with_generators(std::vector<Generator> generators) const {
  return NetworkModel(base_mva_, buses_, std::move(generators), loads_, lines_);
}

NetworkModel NetworkModel::with_demands(std::span<const Complex> demands) const {
  if (demands.size() != loads_.size()) invalid("demand count does not match load count");
  std::vector<Load> loads = loads_;
  for (std::size_t d = 0; d < loads.size(); ++d) loads[d].demand = demands[d];
  return NetworkModel(base_mva_, buses_, generators_, std::move(loads), lines_);
}

bool NetworkModel::operator==(const NetworkModel& other) const {
  return base_mva_ == other.base_mva_ && buses_ == other.buses_ &&
         generators_ == other.generators_ && loads_ == other.loads_ && lines_ == other.lines_;
}

// ---------------------------------------------------------------------------
// Case-file parsing

namespace {

struct Row {
  std::size_t line = 0;
  std::vector<double> values;
};

// Replaces every %-comment with blanks so offsets and line numbers survive.
std::string strip_comments(std::string_view text) {
  std::string out(text);
  bool in_comment = false;
  bool in_string = false;
  for (char& c : out) {
    if (c == '\n') {
      in_comment = false;
      in_string = false;
      continue;
    }
    if (in_comment) {
      c = ' ';
    } else if (c == '\'') {
      in_string = !in_string;
    } else if (c == '%' && !in_string) {
      in_comment = true;
      c = ' ';
    }
  }
  return out;
}

std::size_t line_of(const std::string& text, std::size_t offset) {
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

double parse_scalar(const std::string& text, const std::string& name) {
  const std::regex re("(?:^|[^\\w.])(?:mpc\\.)?" + name + "\\s*=\\s*([^;\\s]+)\\s*;?");
  std::smatch m;
  if (!std::regex_search(text, m, re)) {
    throw ParseError(ParseError::Kind::MissingSection, "missing section '" + name + "'");
  }
  const auto value = parse_double(m[1].str());
  if (!value) {
    throw ParseError(ParseError::Kind::MalformedRow, "malformed value for '" + name + "'",
                     line_of(text, static_cast<std::size_t>(m.position(1))));
  }
  return *value;
}

std::vector<Row> parse_matrix(const std::string& text, const std::string& name) {
  const std::regex re("(?:^|[^\\w.])(?:mpc\\.)?" + name + "\\s*=\\s*\\[");
  std::smatch m;
  if (!std::regex_search(text, m, re)) {
    throw ParseError(ParseError::Kind::MissingSection, "missing section '" + name + "'");
  }
  std::size_t pos = static_cast<std::size_t>(m.position(0) + m.length(0));
  const std::size_t close = text.find(']', pos);
  if (close == std::string::npos) {
    throw ParseError(ParseError::Kind::MalformedRow, "unterminated matrix '" + name + "'",
                     line_of(text, pos));
  }

  std::vector<Row> rows;
  Row current;
  std::size_t line = line_of(text, pos);
  auto finish_row = [&] {
    if (!current.values.empty()) rows.push_back(std::move(current));
    current = Row{};
  };
  while (pos < close) {
    const char c = text[pos];
    if (c == '\n') {
      finish_row();
      ++line;
      ++pos;
    } else if (c == ';') {
      finish_row();
      ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
      ++pos;
    } else if (c == '.' && text.compare(pos, 3, "...") == 0) {
      // MATLAB line continuation: the row goes on after the newline.
      const std::size_t nl = text.find('\n', pos);
      pos = (nl == std::string::npos || nl > close) ? close : nl + 1;
      ++line;
    } else {
      std::size_t end = pos;
      while (end < close && text[end] != ' ' && text[end] != '\t' && text[end] != ',' &&
             text[end] != ';' && text[end] != '\n' && text[end] != '\r') {
        ++end;
      }
      const auto value = parse_double(std::string_view(text).substr(pos, end - pos));
      if (!value) {
        throw ParseError(ParseError::Kind::MalformedRow,
                         "malformed entry in '" + name + "' at line " + std::to_string(line), line);
      }
      if (current.values.empty()) current.line = line;
      current.values.push_back(*value);
      pos = end;
    }
  }
  finish_row();
  return rows;
}

void require_columns(const Row& row, std::size_t count, const std::string& name) {
  if (row.values.size() < count) {
    throw ParseError(ParseError::Kind::MalformedRow,
                     "'" + name + "' row at line " + std::to_string(row.line) + " has " +
                         std::to_string(row.values.size()) + " columns, expected at least " +
                         std::to_string(count),
                     row.line);
  }
}

int integral(const Row& row, std::size_t col, const std::string& name) {
  const double v = row.values[col];
  if (!std::isfinite(v) || std::floor(v) != v) {
    throw ParseError(ParseError::Kind::MalformedRow,
                     "'" + name + "' row at line " + std::to_string(row.line) +
                         " has a non-integer in column " + std::to_string(col + 1),
                     row.line);
  }
  return static_cast<int>(v);
}

// MATPOWER uses 0 and |angle| >= 360 to mean "no limit"; the model caps
// every line at pi/2.
double angle_limit_from(const Row& row) {
  if (row.values.size() < 13) return kMaxAngle;
  const double deg = std::min(std::abs(row.values[11]), std::abs(row.values[12]));
  if (deg == 0.0) return kMaxAngle;
  return std::min(deg * kDegToRad, kMaxAngle);
}

}  // namespace

NetworkModel parse_case(std::string_view raw) {
  const std::string text = strip_comments(raw);

  const double base = parse_scalar(text, "baseMVA");
  const auto bus_rows = parse_matrix(text, "bus");
  const auto gen_rows = parse_matrix(text, "gen");
  const auto branch_rows = parse_matrix(text, "branch");
  const auto cost_rows = parse_matrix(text, "gencost");

  if (!(base > 0.0)) invalid("baseMVA must be positive");

  std::vector<Bus> buses;
  std::vector<Load> loads;
  std::map<int, std::size_t> index_of;
  std::size_t slack_count = 0;
  for (const Row& row : bus_rows) {
    require_columns(row, 13, "bus");
    Bus bus;
    bus.id = integral(row, 0, "bus");
    const int type = integral(row, 1, "bus");
    bus.is_slack = type == 3;
    slack_count += bus.is_slack ? 1 : 0;
    bus.v_max = row.values[11];
    bus.v_min = row.values[12];
    if (!index_of.emplace(bus.id, buses.size()).second) {
      throw ParseError(ParseError::Kind::MalformedRow,
                       "duplicate bus id " + std::to_string(bus.id), row.line);
    }
    const double pd = row.values[2];
    const double qd = row.values[3];
    if (pd != 0.0 || qd != 0.0) {
      loads.push_back(Load{buses.size(), Complex(pd / base, qd / base)});
    }
    buses.push_back(bus);
  }
  if (slack_count == 0) throw ParseError(ParseError::Kind::NoSlackBus, "no bus of type 3");
  if (slack_count > 1) throw ParseError(ParseError::Kind::DuplicateSlack, "more than one bus of type 3");

  auto resolve = [&](const Row& row, std::size_t col, const std::string& name) {
    const int id = integral(row, col, name);
    const auto it = index_of.find(id);
    if (it == index_of.end()) {
      throw ParseError(ParseError::Kind::InvalidNetwork,
                       "'" + name + "' row at line " + std::to_string(row.line) +
                           " references unknown bus " + std::to_string(id),
                       row.line);
    }
    return it->second;
  };

  if (cost_rows.size() < gen_rows.size()) {
    throw ParseError(ParseError::Kind::InvalidNetwork,
                     "gencost has fewer rows than gen (" + std::to_string(cost_rows.size()) +
                         " < " + std::to_string(gen_rows.size()) + ")");
  }

  std::vector<Generator> gens;
  for (std::size_t k = 0; k < gen_rows.size(); ++k) {
    const Row& row = gen_rows[k];
    require_columns(row, 10, "gen");
    const Row& cost = cost_rows[k];
    require_columns(cost, 4, "gencost");
    const int model = integral(cost, 0, "gencost");
    if (model != 2) {
      throw ParseError(ParseError::Kind::UnsupportedCostModel,
                       "gencost model " + std::to_string(model) + " at line " +
                           std::to_string(cost.line) + " is not polynomial (2)",
                       cost.line);
    }
    const int ncost = integral(cost, 3, "gencost");
    if (ncost < 0 || ncost > 3) {
      throw ParseError(ParseError::Kind::UnsupportedCostModel,
                       "polynomial cost of " + std::to_string(ncost) + " coefficients at line " +
                           std::to_string(cost.line),
                       cost.line);
    }
    require_columns(cost, 4 + static_cast<std::size_t>(ncost), "gencost");
    if (row.values[7] <= 0.0) continue;  // out of service

    Generator gen;
    gen.bus = resolve(row, 0, "gen");
    gen.s_max = Complex(row.values[8] / base, row.values[3] / base);
    gen.s_min = Complex(row.values[9] / base, row.values[4] / base);
    // Coefficients are listed highest order first.
    double coeff[3] = {0.0, 0.0, 0.0};  // c0, c1, c2
    for (int i = 0; i < ncost; ++i) {
      coeff[ncost - 1 - i] = cost.values[4 + static_cast<std::size_t>(i)];
    }
    gen.cost_c0 = coeff[0];
    gen.cost_c1 = coeff[1] * base;
    gen.cost_c2 = coeff[2] * (base * base);
    gens.push_back(gen);
  }

  std::vector<Line> lines;
  for (const Row& row : branch_rows) {
    require_columns(row, 11, "branch");
    if (row.values[10] <= 0.0) continue;  // out of service
    Line line;
    line.from = resolve(row, 0, "branch");
    line.to = resolve(row, 1, "branch");
    line.r = row.values[2];
    line.x = row.values[3];
    line.admittance = 1.0 / Complex(line.r, line.x);
    const double rate = row.values[5];
    line.thermal_limit = rate > 0.0 ? rate / base : kInf;
    line.angle_limit = angle_limit_from(row);
    lines.push_back(line);
  }

  return NetworkModel(base, std::move(buses), std::move(gens), std::move(loads), std::move(lines));
}

NetworkModel read_case_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(ParseError::Kind::MissingSection, "cannot open case file " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

// Finds a source-unit value y with forward(y) == target bit-for-bit,
// searching outward from the naive inverse. Falls back to the naive
// inverse when no neighbour maps exactly.
template <class Forward>
double invert_exact(double target, double guess, Forward forward) {
  if (!std::isfinite(guess) || forward(guess) == target) return guess;
  double up = guess;
  double down = guess;
  for (int k = 0; k < 64; ++k) {
    up = std::nextafter(up, kInf);
    if (forward(up) == target) return up;
    down = std::nextafter(down, -kInf);
    if (forward(down) == target) return down;
  }
  return guess;
}

double to_mw(double pu, double base) {
  return invert_exact(pu, pu * base, [base](double y) { return y / base; });
}

}  // namespace

std::string serialize_case(const NetworkModel& model) {
  const double base = model.base_mva();
  const double base2 = base * base;
  std::ostringstream out;
  out << "function mpc = pdopf_case\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << format_double(base) << ";\n\n";

  out << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
  out << "mpc.bus = [\n";
  for (std::size_t i = 0; i < model.buses().size(); ++i) {
    const Bus& b = model.buses()[i];
    Complex demand;
    for (std::size_t d : model.loads_at(i)) demand += model.loads()[d].demand;
    const int type = b.is_slack ? 3 : (model.generators_at(i).empty() ? 1 : 2);
    out << '\t' << b.id << '\t' << type << '\t' << format_double(to_mw(demand.real(), base))
        << '\t' << format_double(to_mw(demand.imag(), base)) << "\t0\t0\t1\t1\t0\t0\t1\t"
        << format_double(b.v_max) << '\t' << format_double(b.v_min) << ";\n";
  }
  out << "];\n\n";

  out << "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
  out << "mpc.gen = [\n";
  for (const Generator& g : model.generators()) {
    out << '\t' << model.buses()[g.bus].id << "\t0\t0\t" << format_double(to_mw(g.s_max.imag(), base))
        << '\t' << format_double(to_mw(g.s_min.imag(), base)) << "\t1\t" << format_double(base)
        << "\t1\t" << format_double(to_mw(g.s_max.real(), base)) << '\t'
        << format_double(to_mw(g.s_min.real(), base)) << ";\n";
  }
  out << "];\n\n";

  out << "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\n";
  out << "mpc.branch = [\n";
  for (const Line& l : model.lines()) {
    const double rate = std::isinf(l.thermal_limit) ? 0.0 : to_mw(l.thermal_limit, base);
    const double deg = invert_exact(l.angle_limit, l.angle_limit / kDegToRad,
                                    [](double y) { return std::min(y * kDegToRad, kMaxAngle); });
    out << '\t' << model.buses()[l.from].id << '\t' << model.buses()[l.to].id << '\t'
        << format_double(l.r) << '\t' << format_double(l.x) << "\t0\t" << format_double(rate)
        << "\t0\t0\t0\t0\t1\t" << format_double(-deg) << '\t' << format_double(deg) << ";\n";
  }
  out << "];\n\n";

  out << "%% 2 startup shutdown n c2 c1 c0\n";
  out << "mpc.gencost = [\n";
  for (const Generator& g : model.generators()) {
    const double c2 = invert_exact(g.cost_c2, g.cost_c2 / base2, [base2](double y) { return y * base2; });
    const double c1 = invert_exact(g.cost_c1, g.cost_c1 / base, [base](double y) { return y * base; });
    out << "\t2\t0\t0\t3\t" << format_double(c2) << '\t' << format_double(c1) << '\t'
        << format_double(g.cost_c0) << ";\n";
  }
  out << "];\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Reference costs

NetworkModel load_reference_costs(const NetworkModel& model, std::span<const Complex> dispatch) {
  const auto gens_in = model.generators();
  if (dispatch.size() != gens_in.size()) {
    throw ReferenceCostError(ReferenceCostError::Kind::DispatchCountMismatch,
                             "expected " + std::to_string(gens_in.size()) +
                                 " reference dispatches, got " + std::to_string(dispatch.size()));
  }
  constexpr double tol = 1e-9;
  std::vector<Generator> gens(gens_in.begin(), gens_in.end());
  for (std::size_t g = 0; g < gens.size(); ++g) {
    const Complex s = dispatch[g];
    const Generator& gen = gens[g];
    if (!is_finite(s) || s.real() < gen.s_min.real() - tol || s.real() > gen.s_max.real() + tol ||
        s.imag() < gen.s_min.imag() - tol || s.imag() > gen.s_max.imag() + tol) {
      throw ReferenceCostError(ReferenceCostError::Kind::DispatchOutOfBounds,
                               "reference dispatch of generator " + std::to_string(g) +
                                   " is outside its bounds");
    }
    gens[g].reference_cost = gen.cost(s.real());
  }
  return model.with_generators(std::move(gens));
}

std::vector<Complex> parse_reference_dispatch(std::string_view text, std::size_t generator_count) {
  auto malformed = [](std::size_t line, const std::string& why) {
    return ReferenceCostError(ReferenceCostError::Kind::MalformedFile,
                              "reference dispatch line " + std::to_string(line) + ": " + why);
  };
  std::vector<std::optional<Complex>> values(generator_count);
  std::size_t line_no = 0;
  std::size_t seen = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_fields(body, ',');
    if (fields.size() != 3) throw malformed(line_no, "expected 3 fields");
    const auto idx = parse_double(fields[0]);
    if (!idx) {
      if (seen == 0 && line_no == 1) continue;  // header
      throw malformed(line_no, "non-numeric generator index");
    }
    const auto p = parse_double(fields[1]);
    const auto q = parse_double(fields[2]);
    if (!p || !q) throw malformed(line_no, "non-numeric dispatch");
    if (*idx < 0 || std::floor(*idx) != *idx) throw malformed(line_no, "bad generator index");
    const auto g = static_cast<std::size_t>(*idx);
    if (g >= generator_count || values[g]) {
      throw ReferenceCostError(ReferenceCostError::Kind::DispatchCountMismatch,
                               "reference dispatch line " + std::to_string(line_no) +
                                   ": generator index out of range or repeated");
    }
    values[g] = Complex(*p, *q);
    ++seen;
  }
  if (seen != generator_count) {
    throw ReferenceCostError(ReferenceCostError::Kind::DispatchCountMismatch,
                             "expected " + std::to_string(generator_count) +
                                 " reference dispatches, got " + std::to_string(seen));
  }
  std::vector<Complex> out;
  out.reserve(generator_count);
  for (const auto& v : values) out.push_back(*v);
  return out;
}

std::vector<Complex> read_reference_dispatch(const std::filesystem::path& path,
                                             std::size_t generator_count) {
  std::ifstream in(path);
  if (!in) {
    throw ReferenceCostError(ReferenceCostError::Kind::MalformedFile,
                             "cannot open reference dispatch " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_reference_dispatch(ss.str(), generator_count);
}

}  // namespace pdopf

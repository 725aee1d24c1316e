#include "pdopf/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>

#include "pdopf/errors.hpp"
#include "pdopf/text.hpp"

namespace pdopf {

std::string_view to_string(Mechanism m) {
  return m == Mechanism::PolarLaplace ? "laplace" : "piecewise";
}

Mechanism mechanism_from_string(std::string_view name) {
  if (name == "laplace" || name == "polar-laplace") return Mechanism::PolarLaplace;
  if (name == "piecewise") return Mechanism::Piecewise;
  throw PrivacyError(PrivacyError::Kind::InvalidParams,
                     "unknown mechanism '" + std::string(name) + "'");
}

void PrivacyParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw PrivacyError(PrivacyError::Kind::InvalidParams, "epsilon must be positive");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw PrivacyError(PrivacyError::Kind::InvalidParams, "alpha must be positive");
  }
}

double lambert_w_minus1(double x) {
  constexpr double e = std::numbers::e;
  constexpr double branch = -1.0 / e;
  // Accept values that round onto the branch point from either side.
  if (!(x < 0.0) || x < branch * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())) {
    throw PrivacyError(PrivacyError::Kind::DomainError,
                       "lambert_w_minus1 is defined on [-1/e, 0), got " + format_double(x));
  }
  const double q = 1.0 + e * x;
  if (q <= 0x1.0p-50) return -1.0;

  double w;
  if (q < 0.25) {
    w = -1.0 - std::sqrt(2.0 * q);
  } else {
    const double l1 = std::log(-x);
    w = l1 - std::log(-l1);
  }

  // Halley's iteration on f(w) = w e^w - x.
  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    if (ew == 0.0) break;
    const double f = w * ew - x;
    if (f == 0.0) break;
    const double wp1 = w + 1.0;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(w)) break;
  }
  return std::min(w, -1.0);
}

double polar_laplace_radius_cdf(double r, const PrivacyParams& params) {
  if (r <= 0.0) return 0.0;
  const double u = params.epsilon * r / params.alpha;
  return 1.0 - (1.0 + u) * std::exp(-u);
}

double polar_laplace_radius(double p, const PrivacyParams& params) {
  const double w = lambert_w_minus1((p - 1.0) / std::numbers::e);
  return -(params.alpha / params.epsilon) * (w + 1.0);
}

Complex polar_laplace_obfuscate(Complex load, const PrivacyParams& params,
                                const UniformSource& uniform) {
  const double p = uniform();
  const double theta = 2.0 * std::numbers::pi * uniform();
  const double r = polar_laplace_radius(p, params);
  return load + Complex(r * std::cos(theta), r * std::sin(theta));
}

double normalize(double x, const LoadRange& range) {
  return 2.0 * (x - range.lower) / (range.upper - range.lower) - 1.0;
}

double denormalize(double y, const LoadRange& range) {
  return range.lower + (y + 1.0) * (range.upper - range.lower) / 2.0;
}

PiecewiseShape piecewise_shape(const PrivacyParams& params) {
  const double t = params.epsilon / (2.0 * params.alpha);
  PiecewiseShape shape;
  // (e^t + 1)/(e^t - 1) and e^t/(e^t + 1), written to stay finite for large t.
  shape.c = 1.0 / std::tanh(t / 2.0);
  shape.center_probability = 1.0 / (1.0 + std::exp(-t));
  return shape;
}

double piecewise_obfuscate(double x, const PrivacyParams& params, const UniformSource& uniform) {
  if (!(std::abs(x) <= 1.0)) {
    throw PrivacyError(PrivacyError::Kind::InputOutOfRange,
                       "piecewise input " + format_double(x) + " is outside [-1, 1]");
  }
  const PiecewiseShape shape = piecewise_shape(params);
  const double c = shape.c;
  const double l = shape.left(x);
  const double r = shape.right(x);
  double out;
  if (uniform() <= shape.center_probability) {
    out = l + (r - l) * uniform();
  } else {
    // Uniform over [-c, l] U [r, c]: one draw over the total length.
    const double left_len = l + c;
    const double right_len = c - r;
    const double v = (left_len + right_len) * uniform();
    out = v < left_len ? -c + v : r + (v - left_len);
  }
  return std::clamp(out, -c, c);
}

std::vector<LoadRanges> default_load_ranges(const NetworkModel& model) {
  double p_min = 0.0, p_max = 0.0, q_min = 0.0, q_max = 0.0;
  for (const Load& load : model.loads()) {
    p_min = std::min(p_min, 2.0 * load.demand.real());
    p_max = std::max(p_max, 2.0 * load.demand.real());
    q_min = std::min(q_min, 2.0 * load.demand.imag());
    q_max = std::max(q_max, 2.0 * load.demand.imag());
  }
  auto make = [](double lo, double hi) {
    return lo < hi ? LoadRange{lo, hi} : LoadRange{-1.0, 1.0};
  };
  const LoadRanges shared{make(p_min, p_max), make(q_min, q_max)};
  return std::vector<LoadRanges>(model.loads().size(), shared);
}

ObfuscatedLoads obfuscate_all(const NetworkModel& model, const PrivacyParams& params,
                              std::span<const LoadRanges> ranges, std::uint64_t seed) {
  return obfuscate_all(model, params, ranges, seed, [seed](std::size_t load) -> UniformSource {
    auto rng = std::make_shared<Rng>(stream_seed(seed, load));
    return [rng] { return rng->uniform(); };
  });
}

ObfuscatedLoads obfuscate_all(const NetworkModel& model, const PrivacyParams& params,
                              std::span<const LoadRanges> ranges, std::uint64_t seed,
                              const StreamFactory& streams) {
  params.validate();
  const auto loads = model.loads();
  if (params.mechanism == Mechanism::Piecewise) {
    if (ranges.size() != loads.size()) {
      throw PrivacyError(PrivacyError::Kind::MissingRanges,
                         "piecewise mechanism needs one range per load");
    }
    for (const LoadRanges& r : ranges) {
      if (!(r.active.lower < r.active.upper) || !(r.reactive.lower < r.reactive.upper)) {
        throw PrivacyError(PrivacyError::Kind::InvalidParams, "load range must have lower < upper");
      }
    }
  }

  ObfuscatedLoads out;
  out.params = params;
  out.seed = seed;
  out.values.reserve(loads.size());
  for (std::size_t d = 0; d < loads.size(); ++d) {
    const UniformSource uniform = streams(d);
    const Complex s = loads[d].demand;
    if (params.mechanism == Mechanism::PolarLaplace) {
      out.values.push_back(polar_laplace_obfuscate(s, params, uniform));
    } else {
      const LoadRanges& r = ranges[d];
      const double p = denormalize(piecewise_obfuscate(normalize(s.real(), r.active), params, uniform),
                                   r.active);
      const double q = denormalize(
          piecewise_obfuscate(normalize(s.imag(), r.reactive), params, uniform), r.reactive);
      out.values.emplace_back(p, q);
    }
  }
  return out;
}

void write_obfuscated_csv(std::ostream& out, const ObfuscatedLoads& loads) {
  out << "load_index,p_tilde,q_tilde\n";
  for (std::size_t d = 0; d < loads.values.size(); ++d) {
    out << d << ',' << format_double(loads.values[d].real()) << ','
        << format_double(loads.values[d].imag()) << '\n';
  }
}

}  // namespace pdopf

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdopf/types.hpp"

namespace pdopf {

struct Bus {
  int id = 0;
  double v_min = 0.9;
  double v_max = 1.1;
  bool is_slack = false;

  bool operator==(const Bus&) const = default;
};

struct Generator {
  std::size_t bus = 0;  // index into NetworkModel::buses()
  Complex s_min;
  Complex s_max;
  // Cost in $ for active power in per-unit: c2*p^2 + c1*p + c0.
  double cost_c2 = 0.0;
  double cost_c1 = 0.0;
  double cost_c0 = 0.0;
  std::optional<double> reference_cost;

  double cost(double p) const { return (cost_c2 * p + cost_c1) * p + cost_c0; }

  bool operator==(const Generator&) const = default;
};

struct Load {
  std::size_t bus = 0;
  Complex demand;

  bool operator==(const Load&) const = default;
};

// Series-impedance line. Shunt charging and transformer taps are not
// modelled; flows obey S_ij = conj(Y) * (|V_i|^2 - V_i * conj(V_j)).
struct Line {
  std::size_t from = 0;
  std::size_t to = 0;
  double r = 0.0;
  double x = 0.0;
  Complex admittance;
  double thermal_limit = 0.0;  // p.u. apparent power, +inf when unlimited
  double angle_limit = 0.0;    // radians

  bool operator==(const Line&) const = default;
};

// One end of a line as seen from a bus. end == 0 is the (from, to)
// direction, end == 1 is (to, from).
struct LineEnd {
  std::size_t line = 0;
  int end = 0;

  bool operator==(const LineEnd&) const = default;
};

// Immutable per-unit network. Construction validates every invariant and
// builds the bus adjacency; all other modules share it read-only.
class NetworkModel {
 public:
  NetworkModel(double base_mva, std::vector<Bus> buses,
               std::vector<Generator> generators, std::vector<Load> loads,
               std::vector<Line> lines);

  double base_mva() const { return base_mva_; }
  std::span<const Bus> buses() const { return buses_; }
  std::span<const Generator> generators() const { return generators_; }
  std::span<const Load> loads() const { return loads_; }
  std::span<const Line> lines() const { return lines_; }

  std::size_t slack_bus() const { return slack_; }
  std::optional<std::size_t> bus_index(int id) const;

  // Incident line ends of a bus, ascending by line index.
  std::span<const LineEnd> adjacency(std::size_t bus) const {
    return adjacency_[bus];
  }
  // Generators / loads attached to a bus, ascending by entity index.
  std::span<const std::size_t> generators_at(std::size_t bus) const {
    return gens_at_[bus];
  }
  std::span<const std::size_t> loads_at(std::size_t bus) const {
    return loads_at_[bus];
  }

  bool has_reference_costs() const;

  NetworkModel with_generators(std::vector<Generator> generators) const;
  NetworkModel with_demands(std::span<const Complex> demands) const;

  bool operator==(const NetworkModel& other) const;

 private:
  double base_mva_;
  std::vector<Bus> buses_;
  std::vector<Generator> generators_;
  std::vector<Load> loads_;
  std::vector<Line> lines_;
  std::size_t slack_ = 0;
  std::vector<std::vector<LineEnd>> adjacency_;
  std::vector<std::vector<std::size_t>> gens_at_;
  std::vector<std::vector<std::size_t>> loads_at_;
};

// MATPOWER-style case text (baseMVA, bus, gen, branch, gencost).
NetworkModel parse_case(std::string_view text);
NetworkModel read_case_file(const std::filesystem::path& path);

// Canonical case text; parse_case(serialize_case(m)) == m for parsed models.
std::string serialize_case(const NetworkModel& model);

// Returns a copy whose generators carry O*_i = c2 p^2 + c1 p + c0 evaluated
// at the given per-generator reference dispatch.
NetworkModel load_reference_costs(const NetworkModel& model,
                                  std::span<const Complex> dispatch);

// CSV "gen_index,p_ref,q_ref" in per-unit, header optional.
std::vector<Complex> parse_reference_dispatch(std::string_view text,
                                              std::size_t generator_count);
std::vector<Complex> read_reference_dispatch(const std::filesystem::path& path,
                                             std::size_t generator_count);

}  // namespace pdopf

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdopf/network.hpp"
#include "pdopf/rng.hpp"
#include "pdopf/types.hpp"

namespace pdopf {

enum class Mechanism { PolarLaplace, Piecewise };

std::string_view to_string(Mechanism m);
Mechanism mechanism_from_string(std::string_view name);

struct PrivacyParams {
  double epsilon = 1.0;  // privacy loss
  double alpha = 0.1;    // indistinguishability distance, p.u.
  Mechanism mechanism = Mechanism::PolarLaplace;

  void validate() const;
};

// Public bounds of one scalar load component used by the piecewise
// mechanism's [-1, 1] normalization.
struct LoadRange {
  double lower = 0.0;
  double upper = 1.0;
};

struct LoadRanges {
  LoadRange active;
  LoadRange reactive;
};

// Output of the privacy phase. The fidelity phase reads load data from
// here and nowhere else.
struct ObfuscatedLoads {
  std::vector<Complex> values;
  PrivacyParams params;
  std::uint64_t seed = 0;

  // "planar" (one complex draw per load) or "per-component".
  std::string_view noise_layout() const {
    return params.mechanism == Mechanism::PolarLaplace ? "planar" : "per-component";
  }
};

// Lower real branch W_{-1} of the Lambert W function on [-1/e, 0).
double lambert_w_minus1(double x);

// Radius distribution of the planar Laplace mechanism with scale
// alpha/epsilon: C(r) = 1 - (1 + u) e^{-u}, u = epsilon r / alpha.
double polar_laplace_radius_cdf(double r, const PrivacyParams& params);
// Inverse of the CDF above: r = -(alpha/epsilon)(W_{-1}((p-1)/e) + 1).
double polar_laplace_radius(double p, const PrivacyParams& params);

// Draws p then theta (two uniforms) and returns load + r e^{i theta}.
Complex polar_laplace_obfuscate(Complex load, const PrivacyParams& params,
                                const UniformSource& uniform);

double normalize(double x, const LoadRange& range);
double denormalize(double y, const LoadRange& range);

struct PiecewiseShape {
  double c = 0.0;                   // output support is [-c, c]
  double center_probability = 0.0;  // mass of the interval [L(x), R(x)]

  double left(double x) const { return (c + 1.0) / 2.0 * x - (c - 1.0) / 2.0; }
  double right(double x) const { return left(x) + c - 1.0; }
};

PiecewiseShape piecewise_shape(const PrivacyParams& params);

// Piecewise mechanism on a normalized scalar in [-1, 1].
double piecewise_obfuscate(double x_normalized, const PrivacyParams& params,
                           const UniformSource& uniform);

// Default public ranges: per component, [min(0, 2*min), max(0, 2*max)] over
// all loads in the model.
std::vector<LoadRanges> default_load_ranges(const NetworkModel& model);

// Produces the uniform source for load `load_index`.
using StreamFactory = std::function<UniformSource(std::size_t load_index)>;

// Obfuscates every load independently; load d draws from stream
// stream_seed(seed, d), so the result does not depend on iteration order.
// `ranges` may be empty for the Laplace mechanism.
ObfuscatedLoads obfuscate_all(const NetworkModel& model, const PrivacyParams& params,
                              std::span<const LoadRanges> ranges, std::uint64_t seed);

ObfuscatedLoads obfuscate_all(const NetworkModel& model, const PrivacyParams& params,
                              std::span<const LoadRanges> ranges, std::uint64_t seed,
                              const StreamFactory& streams);

// CSV "load_index,p_tilde,q_tilde" with round-trip precision.
void write_obfuscated_csv(std::ostream& out, const ObfuscatedLoads& loads);

}  // namespace pdopf

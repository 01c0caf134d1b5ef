/*
Copyright 2026 The mframe Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

                http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#ifndef MFRAME_SHIFT_RDOPT_HPP
#define MFRAME_SHIFT_RDOPT_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mframe/pwc.hpp"

namespace mframe {

struct Spike {
  std::int64_t location = 0;
  double probability = 0.0;

  friend bool operator==(const Spike&, const Spike&) = default;
};

/// "Spike + uniform" shift model over [0, W): H spikes with their own
/// probabilities and one shared floor probability for every other shift.
/// H = 0 is the plain uniform model.
class ShiftDistribution {
 public:
  ShiftDistribution() = default;
  ShiftDistribution(std::int64_t step, std::vector<Spike> spikes, double floor_prob);

  static ShiftDistribution uniform(std::int64_t step);

  std::int64_t step() const noexcept { return step_; }
  const std::vector<Spike>& spikes() const noexcept { return spikes_; }
  int spike_count() const noexcept { return static_cast<int>(spikes_.size()); }
  double floor_prob() const noexcept { return floor_; }

  /// Index into spikes() or nullopt.
  std::optional<std::size_t> spike_index(std::int64_t c) const noexcept;
  double probability(std::int64_t c) const noexcept;
  double bits(std::int64_t c) const noexcept;

  /// Full probability vector over [0, W).
  std::vector<double> dense() const;

  /// Checks normalization (1e-9), ordering, and p_spike >= p_floor > 0.
  bool valid(double tol = 1e-9) const noexcept;

  /// True when every probability is an exact multiple of 1/4096 for the
  /// spikes (the transmitted form).
  bool quantized() const noexcept;

  friend bool operator==(const ShiftDistribution&, const ShiftDistribution&) = default;

 private:
  std::int64_t step_ = 1;
  std::vector<Spike> spikes_;
  double floor_ = 1.0;
};

/// Total probability mass reserved for non-spike shifts.
inline constexpr double kFloorMass = 0.01;
/// Convergence threshold on the L-infinity change of P between iterations.
inline constexpr double kRcLmEpsilon = 1e-6;

/// Builds the spike + uniform model from bin masses (any positive scale).
/// Floor mass is kFloorMass, reduced only if needed to keep every spike at
/// least as likely as a non-spike shift.
ShiftDistribution make_distribution(std::int64_t step,
                                    std::span<const std::int64_t> locations,
                                    std::span<const double> masses);

/// Rounds spike probabilities to 12-bit fixed point, the precision that is
/// transmitted and used by the entropy coder.
ShiftDistribution quantize_distribution(const ShiftDistribution& dist);

/// Spike probabilities in 1/4096 units (exact for quantized models).
std::vector<std::uint32_t> spike_weights_12bit(const ShiftDistribution& dist);

/// Empirical counts of distortion-minimizing shifts over [0, W).
struct ShiftHistogram {
  std::int64_t step = 1;
  std::vector<double> counts;

  explicit ShiftHistogram(std::int64_t w = 1)
      : step(w), counts(static_cast<std::size_t>(w), 0.0) {}
  double total() const noexcept;
  bool empty() const noexcept { return total() <= 0.0; }
};

/// Everything needed to price one block's shift at one frequency.
struct ShiftProblem {
  std::int64_t x0 = 0;  // target q-coeff
  double y0 = 0.0;      // unquantized target coefficient
  double q = 1.0;       // quantizer step
  FeasibleRange feasible;

  /// |y0 - f(x0) q|^2 for shift c.
  double distortion(std::int64_t c) const;
};

struct RdCost {
  double distortion = 0.0;
  double rate = 0.0;  // bits
  double lagrangian(double lambda) const noexcept { return distortion + lambda * rate; }
};

/// Shift in the feasible set minimizing distortion alone; ties go to the
/// smallest canonical shift.
std::int64_t distortion_min_shift(const ShiftProblem& p);

ShiftHistogram build_histogram(std::span<const ShiftProblem> blocks, std::int64_t step);

/// Unconstrained Lloyd-Max from H evenly spaced integer spikes. Returns the
/// distinct spike locations carrying mass, ascending.
std::vector<std::int64_t> lloyd_max_init(const ShiftHistogram& hist, int spikes);

/// Aggregate shift-space RD cost of a partition: sum of g(c)(c - s)^2 plus
/// lambda times the code length of each bin index.
double rc_objective(const ShiftHistogram& hist, std::span<const std::int64_t> spikes,
                    std::span<const std::int64_t> bounds, double lambda);

struct RcLmTrace {
  ShiftDistribution distribution;
  std::vector<std::int64_t> spikes;
  std::vector<std::int64_t> bounds;  // bin starts, bounds[0] = 0
  std::vector<double> objective;     // after init and after every half-step
  int iterations = 0;
};

/// Rate-constrained Lloyd-Max for a fixed spike budget.
RcLmTrace rc_lloyd_max_traced(const ShiftHistogram& hist, int spikes, double lambda);
ShiftDistribution rc_lloyd_max(const ShiftHistogram& hist, int spikes, double lambda);

/// Cheapest feasible shift under d + lambda * (-log2 P(c)); ties go to the
/// smallest canonical shift.
std::pair<std::int64_t, RdCost> select_shift(const ShiftProblem& p,
                                             const ShiftDistribution& dist,
                                             double lambda);

struct DistributionSearch {
  int max_spikes = 16;      // cap on H (also capped by W)
  int patience = 3;         // stop after this many non-improving H
  bool full_sweep = false;  // every H in [1, min(W, 32)]
};

struct OptimizedDistribution {
  ShiftDistribution distribution;  // quantized, ready for transmission
  double lagrangian = 0.0;         // realized, including side information
  int chosen_spikes = 0;
};

/// Side-information bits needed to transmit a distribution.
double distribution_side_bits(const ShiftDistribution& dist);

/// Outer search over the spike count H. Each candidate is priced by the
/// realized Lagrangian of selecting every block's shift under it.
OptimizedDistribution optimal_distribution(std::span<const ShiftProblem> blocks,
                                           double lambda, std::int64_t step,
                                           const DistributionSearch& search = {});

/// Cheapest transmitted model for shifts that are already fixed: the
/// uniform model or the H most frequent shifts as spikes, whichever minimizes
/// payload plus side bits. `total_bits` receives that sum.
ShiftDistribution model_for_shifts(std::int64_t step, std::span<const std::int64_t> shifts,
                                   double* total_bits = nullptr);

/// 2^(0.6 qp - 12).
double lambda_from_qp(double qp) noexcept;

}  // namespace mframe

#endif  // MFRAME_SHIFT_RDOPT_HPP

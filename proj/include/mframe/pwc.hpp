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

#ifndef MFRAME_PWC_HPP
#define MFRAME_PWC_HPP

// Piecewise-constant merge operator
//
//   f(x) = floor((x + c) / W) * W + W/2 - c
//
// maps every integer in one length-W interval to the interval midpoint. With
// W larger than the spread of a set of q-coeffs and a shift c from the
// feasible range, all of them land on the same output, which is what lets a
// decoder holding any single SI frame rebuild the same coefficient.
//
// Odd W makes f(x) a half-integer, so values are carried exactly as
// multiples of 1/2.

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "mframe/transform.hpp"

namespace mframe {

/// Exact value with denominator 2.
struct HalfValue {
  std::int64_t twice = 0;

  double value() const noexcept { return static_cast<double>(twice) / 2.0; }
  bool is_integer() const noexcept { return twice % 2 == 0; }
  /// Coefficient-domain value for quantizer step q.
  double scaled(double q) const noexcept {
    return static_cast<double>(twice) * q / 2.0;
  }

  static HalfValue of(std::int64_t v) noexcept { return {2 * v}; }
  friend auto operator<=>(const HalfValue&, const HalfValue&) = default;
};

/// floor(a / b) for b > 0.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  const std::int64_t q = a / b;
  return (a % b != 0 && a < 0) ? q - 1 : q;
}

/// Mathematical modulo, always in [0, m) for m > 0.
constexpr std::int64_t floor_mod(std::int64_t a, std::int64_t m) noexcept {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

HalfValue pwc_apply(std::int64_t x, std::int64_t step, std::int64_t shift);

/// Per-frequency statistics of one block across the target (index 0) and
/// the N SI frames.
struct MergeStat {
  std::int32_t x_min = 0;
  std::int32_t x_max = 0;
  std::int32_t z_star = 0;    // x_max - x_min
  std::int32_t z_target = 0;  // max_n |X^0 - X^n|, n >= 1
};

/// One MergeStat per frequency. `blocks[0]` must be the target.
std::vector<MergeStat> compute_merge_stats(std::span<const QCoeffBlock> blocks);

/// True when every SI block carries the same q-coeffs at every frequency.
bool si_identical(std::span<const QCoeffBlock> si_blocks);

struct GroupStat {
  std::int32_t z_star_group = 0;
  std::int32_t z_target_group = 0;
};

/// Step size that guarantees identical merging for the whole group.
constexpr std::int64_t optimized_step(std::int32_t z_star_group) noexcept {
  return static_cast<std::int64_t>(z_star_group) + 1;
}
/// Even step size that lets every block reproduce its target exactly.
constexpr std::int64_t fixed_step(std::int32_t z_target_group) noexcept {
  return 2 * static_cast<std::int64_t>(z_target_group) + 2;
}

/// Shifts c that merge all of [x_min, x_max]. Stored as the raw half-open
/// interval [lo, hi); membership is tested modulo W.
class FeasibleRange {
 public:
  FeasibleRange() = default;
  FeasibleRange(std::int64_t lo, std::int64_t hi, std::int64_t step)
      : lo_(lo), hi_(hi), step_(step) {}

  std::int64_t lo() const noexcept { return lo_; }
  std::int64_t hi() const noexcept { return hi_; }
  std::int64_t step() const noexcept { return step_; }
  std::int64_t size() const noexcept { return hi_ - lo_; }
  bool empty() const noexcept { return hi_ <= lo_; }

  bool contains(std::int64_t c) const noexcept {
    if (empty()) return false;
    return floor_mod(c - lo_, step_) < size();
  }

  /// Members reduced into [0, W), ascending.
  std::vector<std::int64_t> canonical() const;

 private:
  std::int64_t lo_ = 0;
  std::int64_t hi_ = 0;
  std::int64_t step_ = 1;
};

/// Throws ErrorKind::Infeasible when step <= x_max - x_min.
FeasibleRange feasible_shift_range(std::int64_t x_min, std::int64_t x_max,
                                   std::int64_t step);

/// Shift that makes f(x) = target for every x in
/// [target - step/2, target + step/2). `step` must be even.
std::int64_t fixed_target_shift(std::int64_t target, std::int64_t step);

/// Closest integer to `si_value` in coset `index` mod `step`; ties go to
/// the smaller candidate.
std::int64_t coset_decode(std::int64_t si_value, std::int64_t index,
                          std::int64_t step);

}  // namespace mframe

#endif  // MFRAME_PWC_HPP

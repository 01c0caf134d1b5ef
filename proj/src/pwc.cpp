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

#include "mframe/pwc.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "mframe/error.hpp"

namespace mframe {

HalfValue pwc_apply(std::int64_t x, std::int64_t step, std::int64_t shift) {
  if (step < 1) fail(ErrorKind::Contract, "step size must be >= 1");
  const std::int64_t cell = floor_div(x + shift, step);
  return {2 * cell * step + step - 2 * shift};
}

std::vector<MergeStat> compute_merge_stats(std::span<const QCoeffBlock> blocks) {
  if (blocks.size() < 2)
    fail(ErrorKind::Structure, "merge statistics need the target and >= 1 SI block");
  const std::size_t k_count = blocks.front().qcoeffs.size();
  for (const auto& b : blocks)
    if (b.qcoeffs.size() != k_count)
      fail(ErrorKind::Structure, "q-coeff blocks have mismatched lengths");

  std::vector<MergeStat> stats(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const std::int32_t x0 = blocks[0].qcoeffs[k];
    MergeStat s{x0, x0, 0, 0};
    for (std::size_t n = 1; n < blocks.size(); ++n) {
      const std::int32_t x = blocks[n].qcoeffs[k];
      s.x_min = std::min(s.x_min, x);
      s.x_max = std::max(s.x_max, x);
      s.z_target = std::max(s.z_target, std::abs(x0 - x));
    }
    s.z_star = s.x_max - s.x_min;
    stats[k] = s;
  }
  return stats;
}

bool si_identical(std::span<const QCoeffBlock> si_blocks) {
  if (si_blocks.empty()) return true;
  const auto& first = si_blocks.front().qcoeffs;
  return std::all_of(si_blocks.begin() + 1, si_blocks.end(),
                     [&](const QCoeffBlock& b) { return b.qcoeffs == first; });
}

std::vector<std::int64_t> FeasibleRange::canonical() const {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(size(), 0)));
  for (std::int64_t c = lo_; c < hi_; ++c) out.push_back(floor_mod(c, step_));
  std::sort(out.begin(), out.end());
  return out;
}

FeasibleRange feasible_shift_range(std::int64_t x_min, std::int64_t x_max,
                                   std::int64_t step) {
  if (x_max < x_min) fail(ErrorKind::Contract, "x_max < x_min");
  if (step <= x_max - x_min)
    fail(ErrorKind::Infeasible, "step size " + std::to_string(step) +
                                    " cannot merge a spread of " +
                                    std::to_string(x_max - x_min));
  const std::int64_t alpha = floor_mod(x_min, step);
  const std::int64_t beta = floor_mod(x_max, step);
  // alpha <= beta: both ends already share a cell at c = 0.
  // alpha > beta: x_max sits one cell higher; lift x_min into its cell.
  const std::int64_t lo = alpha <= beta ? -alpha : step - alpha;
  const std::int64_t hi = step - beta;
  return {lo, hi, step};
}

std::int64_t fixed_target_shift(std::int64_t target, std::int64_t step) {
  if (step < 2 || step % 2 != 0)
    fail(ErrorKind::Contract, "fixed-target step size must be even");
  return step / 2 - floor_mod(target, step);
}

std::int64_t coset_decode(std::int64_t si_value, std::int64_t index,
                          std::int64_t step) {
  if (step < 1 || index < 0 || index >= step)
    fail(ErrorKind::Contract, "coset index must lie in [0, W)");
  const std::int64_t below = si_value - floor_mod(si_value - index, step);
  const std::int64_t above = below + step;
  return (si_value - below) <= (above - si_value) ? below : above;
}

}  // namespace mframe

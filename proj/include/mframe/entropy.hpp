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

#ifndef MFRAME_ENTROPY_HPP
#define MFRAME_ENTROPY_HPP

// Shift symbols are binarized against a quantized spike + uniform model:
//
//   spike flag    P(spike) = sum of spike weights      (omitted if H = 0 or H = W)
//   spike index   binary split of the spike weights
//   other shift   exact uniform over the W - H non-spike values
//
// so the realized length tracks sum(-log2 P(c)) to within the 12-bit
// probability resolution plus the coder flush.

#include <cstdint>
#include <span>
#include <vector>

#include "mframe/range_coder.hpp"
#include "mframe/shift_rdopt.hpp"

namespace mframe {

void encode_shift(RangeEncoder& enc, std::int64_t shift, const ShiftDistribution& dist);
std::int64_t decode_shift(RangeDecoder& dec, const ShiftDistribution& dist);

/// Standalone payload for one group of shifts sharing a distribution.
std::vector<std::uint8_t> entropy_encode_shifts(std::span<const std::int64_t> shifts,
                                                const ShiftDistribution& dist);
std::vector<std::int64_t> entropy_decode_shifts(std::span<const std::uint8_t> bytes,
                                                const ShiftDistribution& dist,
                                                std::size_t count);

/// sum(-log2 P(c)) under `dist`.
double ideal_codelength(std::span<const std::int64_t> shifts, const ShiftDistribution& dist);

}  // namespace mframe

#endif  // MFRAME_ENTROPY_HPP

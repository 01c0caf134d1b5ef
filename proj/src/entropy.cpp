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

#include "mframe/entropy.hpp"

#include <numeric>
#include <string>

#include "mframe/error.hpp"

namespace mframe {

namespace {

struct Model {
  std::vector<std::uint32_t> weights;  // spike weights in 1/4096
  std::uint32_t spike_total = 0;
  std::int64_t others = 0;  // number of non-spike shifts
};

Model model_of(const ShiftDistribution& dist) {
  if (!dist.quantized())
    fail(ErrorKind::Contract, "entropy coding needs a quantized distribution");
  Model m;
  m.weights = spike_weights_12bit(dist);
  m.spike_total = std::accumulate(m.weights.begin(), m.weights.end(), std::uint32_t{0});
  m.others = dist.step() - dist.spike_count();
  return m;
}

std::uint32_t split_prob(const std::vector<std::uint32_t>& w, std::size_t lo,
                         std::size_t mid, std::size_t hi) {
  const double left = std::accumulate(w.begin() + lo, w.begin() + mid, 0.0);
  const double all = std::accumulate(w.begin() + lo, w.begin() + hi, 0.0);
  return clamp_prob(left / all);
}

/// Position of shift c among the non-spike values.
std::int64_t rank_among_others(const ShiftDistribution& dist, std::int64_t c) {
  std::int64_t below = 0;
  for (const auto& s : dist.spikes())
    if (s.location < c) ++below;
  return c - below;
}

std::int64_t unrank_among_others(const ShiftDistribution& dist, std::int64_t r) {
  std::int64_t c = r;
  for (const auto& s : dist.spikes()) {
    if (s.location <= c)
      ++c;
    else
      break;
  }
  return c;
}

}  // namespace

void encode_shift(RangeEncoder& enc, std::int64_t shift, const ShiftDistribution& dist) {
  if (shift < 0 || shift >= dist.step())
    fail(ErrorKind::Contract, "shift " + std::to_string(shift) + " outside [0, " +
                                  std::to_string(dist.step()) + ")");
  const Model m = model_of(dist);
  const auto index = dist.spike_index(shift);
  const bool has_spikes = !m.weights.empty();

  if (has_spikes && m.others > 0) enc.encode(!index.has_value(), m.spike_total);

  if (index) {
    std::size_t lo = 0, hi = m.weights.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool right = *index >= mid;
      enc.encode(right, split_prob(m.weights, lo, mid, hi));
      (right ? lo : hi) = mid;
    }
    return;
  }
  if (m.others == 0) fail(ErrorKind::Contract, "non-spike shift with no floor probability");
  enc.encode_uniform(static_cast<std::uint64_t>(rank_among_others(dist, shift)),
                     static_cast<std::uint64_t>(m.others));
}

std::int64_t decode_shift(RangeDecoder& dec, const ShiftDistribution& dist) {
  const Model m = model_of(dist);
  const bool has_spikes = !m.weights.empty();
  bool is_spike = has_spikes;
  if (has_spikes && m.others > 0) is_spike = !dec.decode(m.spike_total);

  if (is_spike) {
    std::size_t lo = 0, hi = m.weights.size();
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      const bool right = dec.decode(split_prob(m.weights, lo, mid, hi));
      (right ? lo : hi) = mid;
    }
    return dist.spikes()[lo].location;
  }
  const auto r = static_cast<std::int64_t>(dec.decode_uniform(static_cast<std::uint64_t>(m.others)));
  return unrank_among_others(dist, r);
}

std::vector<std::uint8_t> entropy_encode_shifts(std::span<const std::int64_t> shifts,
                                                const ShiftDistribution& dist) {
  RangeEncoder enc;
  for (auto c : shifts) encode_shift(enc, c, dist);
  return enc.finish();
}

std::vector<std::int64_t> entropy_decode_shifts(std::span<const std::uint8_t> bytes,
                                                const ShiftDistribution& dist,
                                                std::size_t count) {
  RangeDecoder dec(bytes);
  std::vector<std::int64_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(decode_shift(dec, dist));
  if (dec.overrun()) fail(ErrorKind::Malformed, "shift payload truncated");
  return out;
}

double ideal_codelength(std::span<const std::int64_t> shifts, const ShiftDistribution& dist) {
  double bits = 0.0;
  for (auto c : shifts) bits += dist.bits(c);
  return bits;
}

}  // namespace mframe

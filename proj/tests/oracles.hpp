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

// Independent reference computations shared by the unit and acceptance tests.

#ifndef MFRAME_TESTS_ORACLES_HPP
#define MFRAME_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "mframe/entropy.hpp"
#include "mframe/pwc.hpp"
#include "mframe/shift_rdopt.hpp"

namespace oracle {

inline std::int64_t fdiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

inline std::int64_t fmod_pos(std::int64_t a, std::int64_t m) { return a - fdiv(a, m) * m; }

/// 2 f(x) for f(x) = floor((x + c) / W) W + W/2 - c.
inline std::int64_t twice_pwc(std::int64_t x, std::int64_t w, std::int64_t c) {
  return 2 * fdiv(x + c, w) * w + w - 2 * c;
}

/// Shifts in [0, W) mapping every integer of [x_min, x_max] to one value.
inline std::vector<std::int64_t> feasible_shifts(std::int64_t x_min, std::int64_t x_max, std::int64_t w) {
  std::vector<std::int64_t> out;
  for (std::int64_t c = 0; c < w; ++c) {
    bool same = true;
    for (std::int64_t x = x_min + 1; x <= x_max && same; ++x) same = twice_pwc(x, w, c) == twice_pwc(x_min, w, c);
    if (same) out.push_back(c);
  }
  return out;
}

/// Integer in coset `index` mod W nearest to s, smaller on ties.
inline std::int64_t nearest_in_coset(std::int64_t s, std::int64_t index, std::int64_t w) {
  std::int64_t best = 0;
  std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
  for (std::int64_t v = s - w; v <= s + w; ++v) {
    if (fmod_pos(v, w) != index) continue;
    const std::int64_t d = v > s ? v - s : s - v;
    if (d < best_d) best = v, best_d = d;
  }
  return best;
}

/// Exhaustive minimizer of d(c) + lambda * bits(c) over the shifts of
/// [0, W) that merge [x_min, x_max], first minimum in ascending c.
inline std::int64_t exhaustive_shift(std::int64_t x0, double y0, double q, std::int64_t x_min, std::int64_t x_max,
                                     std::int64_t w, const mframe::ShiftDistribution& dist, double lambda) {
  std::int64_t best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::int64_t c : feasible_shifts(x_min, x_max, w)) {
    const double d = y0 - static_cast<double>(twice_pwc(x0, w, c)) * q / 2.0;
    const double cost = d * d + lambda * -std::log2(dist.probability(c));
    if (cost < best_cost) best = c, best_cost = cost;
  }
  return best;
}

/// Random quantized spike + uniform model and shifts drawn from it.
struct EntropyCase {
  mframe::ShiftDistribution dist;
  std::vector<std::int64_t> shifts;
};

inline EntropyCase entropy_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 1);
  const auto below = [&](std::uint64_t n) { return static_cast<std::int64_t>(rng() % n); };
  const std::int64_t w = 1 + below(below(4) == 0 ? 512 : 40);
  const std::int64_t h = below(std::min<std::int64_t>(w, 12) + 1);
  std::vector<std::int64_t> locs;
  for (std::int64_t c = 0; c < w; ++c) locs.push_back(c);
  std::shuffle(locs.begin(), locs.end(), rng);
  locs.resize(static_cast<std::size_t>(h));
  std::sort(locs.begin(), locs.end());
  std::vector<double> masses;
  for (std::int64_t i = 0; i < h; ++i) masses.push_back(1.0 + static_cast<double>(below(100)));
  EntropyCase out;
  out.dist = h == 0 ? mframe::ShiftDistribution::uniform(w)
                    : mframe::quantize_distribution(mframe::make_distribution(w, locs, masses));
  const auto pdf = out.dist.dense();
  std::vector<double> cdf(pdf.size());
  std::partial_sum(pdf.begin(), pdf.end(), cdf.begin());
  const std::int64_t n = 1 + below(64);
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out.shifts.push_back(std::min<std::int64_t>(it - cdf.begin(), w - 1));
  }
  return out;
}

/// Reference BD-rate: piecewise-linear log-rate over PSNR integrated by the
/// trapezoid rule on a fine grid.
inline double bd_rate_trapezoid(std::vector<std::pair<double, double>> test,
                                std::vector<std::pair<double, double>> anchor) {
  // pairs are (psnr, rate)
  std::sort(test.begin(), test.end());
  std::sort(anchor.begin(), anchor.end());
  const auto interp = [](const std::vector<std::pair<double, double>>& c, double p) {
    auto hi = std::lower_bound(c.begin(), c.end(), std::make_pair(p, -1e300));
    if (hi == c.begin()) return std::log(hi->second);
    if (hi == c.end()) return std::log(std::prev(hi)->second);
    const auto lo = std::prev(hi);
    const double t = (p - lo->first) / (hi->first - lo->first);
    return (1 - t) * std::log(lo->second) + t * std::log(hi->second);
  };
  const double lo = std::max(test.front().first, anchor.front().first);
  const double hi = std::min(test.back().first, anchor.back().first);
  const int steps = 20000;
  double acc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double p = lo + (hi - lo) * i / steps;
    const double wgt = (i == 0 || i == steps) ? 0.5 : 1.0;
    acc += wgt * (interp(test, p) - interp(anchor, p));
  }
  return (std::exp(acc / steps) - 1.0) * 100.0;
}

}  // namespace oracle

#endif  // MFRAME_TESTS_ORACLES_HPP

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

#include "mframe/shift_rdopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mframe/bit_io.hpp"
#include "mframe/error.hpp"
#include "mframe/range_coder.hpp"

namespace mframe {

// ---------------------------------------------------------------------------
// ShiftDistribution

ShiftDistribution::ShiftDistribution(std::int64_t step, std::vector<Spike> spikes,
                                     double floor_prob)
    : step_(step), spikes_(std::move(spikes)), floor_(floor_prob) {
  if (step < 1) fail(ErrorKind::Config, "distribution step must be >= 1");
}

ShiftDistribution ShiftDistribution::uniform(std::int64_t step) {
  return ShiftDistribution(step, {}, 1.0 / static_cast<double>(step));
}

std::optional<std::size_t> ShiftDistribution::spike_index(std::int64_t c) const noexcept {
  auto it = std::lower_bound(spikes_.begin(), spikes_.end(), c,
                             [](const Spike& s, std::int64_t v) { return s.location < v; });
  if (it != spikes_.end() && it->location == c)
    return static_cast<std::size_t>(it - spikes_.begin());
  return std::nullopt;
}

double ShiftDistribution::probability(std::int64_t c) const noexcept {
  if (c < 0 || c >= step_) return 0.0;
  if (auto i = spike_index(c)) return spikes_[*i].probability;
  return floor_;
}

double ShiftDistribution::bits(std::int64_t c) const noexcept {
  const double p = probability(c);
  return p > 0.0 ? -std::log2(p) : std::numeric_limits<double>::infinity();
}

std::vector<double> ShiftDistribution::dense() const {
  std::vector<double> out(static_cast<std::size_t>(step_), floor_);
  for (const auto& s : spikes_) out[static_cast<std::size_t>(s.location)] = s.probability;
  return out;
}

bool ShiftDistribution::valid(double tol) const noexcept {
  const auto h = static_cast<std::int64_t>(spikes_.size());
  if (h > step_) return false;
  double total = static_cast<double>(step_ - h) * floor_;
  for (std::size_t i = 0; i < spikes_.size(); ++i) {
    const auto& s = spikes_[i];
    if (s.location < 0 || s.location >= step_) return false;
    if (i > 0 && s.location <= spikes_[i - 1].location) return false;
    if (s.probability < floor_) return false;
    total += s.probability;
  }
  if (h < step_ && !(floor_ > 0.0)) return false;
  return std::abs(total - 1.0) <= tol;
}

bool ShiftDistribution::quantized() const noexcept {
  return std::all_of(spikes_.begin(), spikes_.end(), [](const Spike& s) {
    const double w = s.probability * kProbOne;
    return w >= 1.0 && std::abs(w - std::round(w)) < 1e-9;
  });
}

ShiftDistribution make_distribution(std::int64_t step,
                                    std::span<const std::int64_t> locations,
                                    std::span<const double> masses) {
  if (locations.size() != masses.size())
    fail(ErrorKind::Structure, "spike locations and masses differ in length");
  const auto h = static_cast<std::int64_t>(locations.size());
  if (h == 0) return ShiftDistribution::uniform(step);
  if (h > step) fail(ErrorKind::Contract, "more spikes than shift values");

  const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
  if (!(total > 0.0)) fail(ErrorKind::Contract, "spike masses must be positive");

  std::vector<Spike> spikes(locations.size());
  if (h == step) {
    for (std::size_t i = 0; i < spikes.size(); ++i)
      spikes[i] = {locations[i], masses[i] / total};
    return ShiftDistribution(step, std::move(spikes), 0.0);
  }

  const double free_shifts = static_cast<double>(step - h);
  const double smallest = *std::min_element(masses.begin(), masses.end()) / total;
  // Keep p_spike >= p_floor: m (1 - F) >= F / (W - H).
  const double floor_mass =
      std::min(kFloorMass, smallest * free_shifts / (1.0 + smallest * free_shifts));
  for (std::size_t i = 0; i < spikes.size(); ++i)
    spikes[i] = {locations[i], masses[i] / total * (1.0 - floor_mass)};
  return ShiftDistribution(step, std::move(spikes), floor_mass / free_shifts);
}

std::vector<std::uint32_t> spike_weights_12bit(const ShiftDistribution& dist) {
  std::vector<std::uint32_t> w;
  w.reserve(dist.spikes().size());
  for (const auto& s : dist.spikes())
    w.push_back(static_cast<std::uint32_t>(
        std::max(1.0, std::round(s.probability * kProbOne))));
  return w;
}

ShiftDistribution quantize_distribution(const ShiftDistribution& dist) {
  const auto h = static_cast<std::int64_t>(dist.spike_count());
  if (h == 0) return ShiftDistribution::uniform(dist.step());

  std::vector<std::uint32_t> w = spike_weights_12bit(dist);
  const bool all_spikes = h == dist.step();
  const std::uint32_t limit = all_spikes ? kProbOne : kProbOne - 1;
  auto sum = [&] { return std::accumulate(w.begin(), w.end(), std::uint32_t{0}); };
  auto largest = [&] { return static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin()); };

  if (h > static_cast<std::int64_t>(limit))
    fail(ErrorKind::Contract, "too many spikes for 12-bit probabilities");
  while (sum() > limit) --w[largest()];
  if (all_spikes)
    while (sum() < limit) ++w[largest()];

  if (!all_spikes) {
    const auto free_shifts = static_cast<std::uint64_t>(dist.step() - h);
    for (bool changed = true; changed;) {
      changed = false;
      const std::uint64_t floor_w = kProbOne - sum();
      for (auto& wi : w) {
        if (static_cast<std::uint64_t>(wi) * free_shifts < floor_w) {
          ++wi;
          changed = true;
          break;
        }
      }
    }
  }

  std::vector<Spike> spikes;
  spikes.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    spikes.push_back({dist.spikes()[i].location, static_cast<double>(w[i]) / kProbOne});
  const double floor_prob =
      all_spikes ? 0.0
                 : static_cast<double>(kProbOne - sum()) / kProbOne /
                       static_cast<double>(dist.step() - h);
  return ShiftDistribution(dist.step(), std::move(spikes), floor_prob);
}

// ---------------------------------------------------------------------------
// Histogram and per-block pricing

double ShiftHistogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), 0.0);
}

double ShiftProblem::distortion(std::int64_t c) const {
  const double err = y0 - pwc_apply(x0, feasible.step(), c).scaled(q);
  return err * err;
}

std::int64_t distortion_min_shift(const ShiftProblem& p) {
  if (p.feasible.empty()) fail(ErrorKind::Infeasible, "empty feasible shift range");
  std::int64_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::int64_t c : p.feasible.canonical()) {
    const double d = p.distortion(c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

ShiftHistogram build_histogram(std::span<const ShiftProblem> blocks, std::int64_t step) {
  ShiftHistogram hist(step);
  for (const auto& b : blocks) hist.counts[static_cast<std::size_t>(distortion_min_shift(b))] += 1.0;
  return hist;
}

std::pair<std::int64_t, RdCost> select_shift(const ShiftProblem& p,
                                             const ShiftDistribution& dist,
                                             double lambda) {
  if (p.feasible.empty()) fail(ErrorKind::Infeasible, "empty feasible shift range");
  std::int64_t best = 0;
  RdCost best_cost{std::numeric_limits<double>::infinity(), 0.0};
  double best_j = std::numeric_limits<double>::infinity();
  for (std::int64_t c : p.feasible.canonical()) {
    const RdCost cost{p.distortion(c), dist.bits(c)};
    const double j = lambda == 0.0 ? cost.distortion : cost.lagrangian(lambda);
    if (j < best_j) {
      best_j = j;
      best = c;
      best_cost = cost;
    }
  }
  return {best, best_cost};
}

// ---------------------------------------------------------------------------
// Lloyd-Max

namespace {

/// Prefix sums of g, g*c, g*c^2 for O(1) bin statistics.
class BinMoments {
 public:
  explicit BinMoments(const ShiftHistogram& hist) {
    const std::size_t w = hist.counts.size();
    m0_.assign(w + 1, 0.0);
    m1_.assign(w + 1, 0.0);
    m2_.assign(w + 1, 0.0);
    for (std::size_t c = 0; c < w; ++c) {
      const double g = hist.counts[c];
      const double x = static_cast<double>(c);
      m0_[c + 1] = m0_[c] + g;
      m1_[c + 1] = m1_[c] + g * x;
      m2_[c + 1] = m2_[c] + g * x * x;
    }
  }

  double mass(std::int64_t a, std::int64_t b) const { return m0_[b] - m0_[a]; }
  double total() const { return m0_.back(); }

  /// sum_{c in [a,b)} g(c) (c - s)^2
  double distortion(std::int64_t a, std::int64_t b, std::int64_t s) const {
    const double sx = static_cast<double>(s);
    const double d = (m2_[b] - m2_[a]) - 2.0 * sx * (m1_[b] - m1_[a]) + sx * sx * mass(a, b);
    return std::max(d, 0.0);
  }

  /// Integer minimizer of distortion over [a, b): the nearest integer to
  /// the bin mean, ties to the smaller. nullopt for an empty bin.
  std::optional<std::int64_t> centroid(std::int64_t a, std::int64_t b) const {
    const double m = mass(a, b);
    if (!(m > 0.0)) return std::nullopt;
    const double mean = (m1_[b] - m1_[a]) / m;
    const auto lo = static_cast<std::int64_t>(std::floor(mean));
    // compare exactly through the distortion rather than the mean's
    // fractional part, which is inexact for large moments
    return distortion(a, b, lo) <= distortion(a, b, lo + 1) ? lo : lo + 1;
  }

 private:
  std::vector<double> m0_, m1_, m2_;
};

double bin_rate(double mass, double total) {
  return mass > 0.0 ? -mass * std::log2(mass / total) : 0.0;
}

double bin_cost(const BinMoments& mom, std::int64_t a, std::int64_t b, std::int64_t s,
                double lambda) {
  return mom.distortion(a, b, s) + lambda * bin_rate(mom.mass(a, b), mom.total());
}

std::int64_t bin_end(std::span<const std::int64_t> bounds, std::size_t i, std::int64_t w) {
  return i + 1 < bounds.size() ? bounds[i + 1] : w;
}

/// Nearest-spike partition: each c goes to its closest spike, ties low.
std::vector<std::int64_t> nearest_bounds(std::span<const std::int64_t> spikes) {
  std::vector<std::int64_t> bounds{0};
  for (std::size_t i = 1; i < spikes.size(); ++i)
    bounds.push_back(floor_div(spikes[i - 1] + spikes[i], 2) + 1);
  return bounds;
}

/// Removes bins without mass; the neighbouring bin absorbs their range.
void drop_empty_bins(const BinMoments& mom, std::vector<std::int64_t>& spikes,
                     std::vector<std::int64_t>& bounds, std::int64_t w) {
  for (std::size_t i = 0; i < spikes.size() && spikes.size() > 1;) {
    if (mom.mass(bounds[i], bin_end(bounds, i, w)) > 0.0) {
      ++i;
      continue;
    }
    spikes.erase(spikes.begin() + static_cast<std::ptrdiff_t>(i));
    if (i == 0)
      bounds.erase(bounds.begin() + 1);
    else
      bounds.erase(bounds.begin() + static_cast<std::ptrdiff_t>(i));
    bounds[0] = 0;
  }
}

std::vector<double> bin_masses(const BinMoments& mom, std::span<const std::int64_t> bounds,
                               std::int64_t w) {
  std::vector<double> m;
  for (std::size_t i = 0; i < bounds.size(); ++i) m.push_back(mom.mass(bounds[i], bin_end(bounds, i, w)));
  return m;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

std::vector<std::int64_t> lloyd_max_init(const ShiftHistogram& hist, int spikes) {
  const std::int64_t w = hist.step;
  if (spikes < 1 || spikes > w) fail(ErrorKind::Contract, "spike count must lie in [1, W]");
  if (hist.empty()) return {0};

  const BinMoments mom(hist);
  std::vector<std::int64_t> s;
  for (int i = 0; i < spikes; ++i) s.push_back((2 * i + 1) * w / (2 * spikes));
  s.erase(std::unique(s.begin(), s.end()), s.end());

  for (int iter = 0; iter < 200; ++iter) {
    auto bounds = nearest_bounds(s);
    drop_empty_bins(mom, s, bounds, w);
    std::vector<std::int64_t> next;
    for (std::size_t i = 0; i < s.size(); ++i)
      next.push_back(*mom.centroid(bounds[i], bin_end(bounds, i, w)));
    if (next == s) break;
    s = std::move(next);
  }
  return s;
}

double rc_objective(const ShiftHistogram& hist, std::span<const std::int64_t> spikes,
                    std::span<const std::int64_t> bounds, double lambda) {
  const BinMoments mom(hist);
  double total = 0.0;
  for (std::size_t i = 0; i < spikes.size(); ++i)
    total += bin_cost(mom, bounds[i], bin_end(bounds, i, hist.step), spikes[i], lambda);
  return total;
}

RcLmTrace rc_lloyd_max_traced(const ShiftHistogram& hist, int spikes, double lambda) {
  const std::int64_t w = hist.step;
  RcLmTrace trace;
  if (hist.empty()) {
    const std::int64_t loc = 0;
    const double mass = 1.0;
    trace.spikes = {0};
    trace.bounds = {0};
    trace.distribution = make_distribution(w, std::span(&loc, 1), std::span(&mass, 1));
    return trace;
  }

  const BinMoments mom(hist);
  auto s = lloyd_max_init(hist, spikes);
  auto bounds = nearest_bounds(s);
  drop_empty_bins(mom, s, bounds, w);

  auto objective = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      total += bin_cost(mom, bounds[i], bin_end(bounds, i, w), s[i], lambda);
    return total;
  };
  auto current_p = [&] { return make_distribution(w, s, bin_masses(mom, bounds, w)).dense(); };

  trace.objective.push_back(objective());
  std::vector<double> prev = current_p();

  for (int t = 1; t <= 100; ++t) {
    trace.iterations = t;
    // spike update: bin centroids
    for (std::size_t i = 0; i < s.size(); ++i)
      if (auto c = mom.centroid(bounds[i], bin_end(bounds, i, w))) s[i] = *c;
    trace.objective.push_back(objective());

    // boundary update: exhaustive search of b_i in (s_{i-1}, s_i]
    for (std::size_t i = 1; i < s.size(); ++i) {
      const std::int64_t left_start = bounds[i - 1];
      const std::int64_t right_end = bin_end(bounds, i, w);
      std::int64_t best_b = bounds[i];
      double best = bin_cost(mom, left_start, best_b, s[i - 1], lambda) +
                    bin_cost(mom, best_b, right_end, s[i], lambda);
      for (std::int64_t b = s[i - 1] + 1; b <= s[i]; ++b) {
        const double cost = bin_cost(mom, left_start, b, s[i - 1], lambda) +
                            bin_cost(mom, b, right_end, s[i], lambda);
        if (cost < best) {
          best = cost;
          best_b = b;
        }
      }
      bounds[i] = best_b;
    }
    drop_empty_bins(mom, s, bounds, w);
    trace.objective.push_back(objective());

    auto p = current_p();
    const bool converged = linf(p, prev) <= kRcLmEpsilon;
    prev = std::move(p);
    if (converged) break;
  }

  trace.spikes = s;
  trace.bounds = bounds;
  trace.distribution = make_distribution(w, s, bin_masses(mom, bounds, w));
  return trace;
}

ShiftDistribution rc_lloyd_max(const ShiftHistogram& hist, int spikes, double lambda) {
  return rc_lloyd_max_traced(hist, spikes, lambda).distribution;
}

// ---------------------------------------------------------------------------
// Outer search

double distribution_side_bits(const ShiftDistribution& dist) {
  if (dist.spike_count() == 0) return 0.0;
  return 5.0 + dist.spike_count() * (index_bits(static_cast<std::uint64_t>(dist.step())) + kProbBits);
}

OptimizedDistribution optimal_distribution(std::span<const ShiftProblem> blocks,
                                           double lambda, std::int64_t step,
                                           const DistributionSearch& search) {
  OptimizedDistribution best;
  best.distribution = ShiftDistribution::uniform(step);
  if (blocks.empty()) return best;

  const ShiftHistogram hist = build_histogram(blocks, step);
  const auto occupied = static_cast<std::int64_t>(
      std::count_if(hist.counts.begin(), hist.counts.end(), [](double g) { return g > 0.0; }));
  const std::int64_t cap_by_syntax = search.full_sweep ? 32 : search.max_spikes;
  const std::int64_t cap = std::max<std::int64_t>(
      1, std::min({step, cap_by_syntax, search.full_sweep ? step : occupied}));

  // rc-LM works in shift units; one shift step moves the reconstruction by
  // one quantizer step, so scale lambda into that domain.
  const double q = blocks.front().q;
  const double shift_lambda = lambda / (q * q);

  best.lagrangian = std::numeric_limits<double>::infinity();
  int stale = 0;
  std::vector<ShiftDistribution> seen;
  for (std::int64_t h = 1; h <= cap; ++h) {
    const ShiftDistribution dist =
        quantize_distribution(rc_lloyd_max(hist, static_cast<int>(h), shift_lambda));
    double total = lambda * distribution_side_bits(dist);
    if (std::find(seen.begin(), seen.end(), dist) == seen.end()) {
      seen.push_back(dist);
      for (const auto& b : blocks) total += select_shift(b, dist, lambda).second.lagrangian(lambda);
    } else {
      total = std::numeric_limits<double>::infinity();
    }
    if (total < best.lagrangian) {
      best.lagrangian = total;
      best.distribution = dist;
      best.chosen_spikes = dist.spike_count();
      stale = 0;
    } else if (!search.full_sweep && ++stale >= search.patience) {
      break;
    }
  }
  return best;
}

ShiftDistribution model_for_shifts(std::int64_t step, std::span<const std::int64_t> shifts,
                                   double* total_bits) {
  ShiftDistribution best = ShiftDistribution::uniform(step);
  double best_bits = static_cast<double>(shifts.size()) * std::log2(static_cast<double>(step));

  std::map<std::int64_t, double> counts;
  for (auto c : shifts) counts[c] += 1.0;
  std::vector<std::pair<double, std::int64_t>> ranked;
  for (const auto& [c, n] : counts) ranked.emplace_back(-n, c);
  std::sort(ranked.begin(), ranked.end());

  const std::size_t cap = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::min<std::int64_t>(step, 32)));
  for (std::size_t h = 1; h <= cap; ++h) {
    std::vector<std::pair<std::int64_t, double>> top;
    for (std::size_t i = 0; i < h; ++i) top.emplace_back(ranked[i].second, -ranked[i].first);
    std::sort(top.begin(), top.end());
    std::vector<std::int64_t> locations;
    std::vector<double> masses;
    for (const auto& [c, n] : top) {
      locations.push_back(c);
      masses.push_back(n);
    }
    const auto dist = quantize_distribution(make_distribution(step, locations, masses));
    double bits = distribution_side_bits(dist);
    for (const auto& [c, n] : counts) bits += n * dist.bits(c);
    if (bits < best_bits) {
      best_bits = bits;
      best = dist;
    }
  }
  if (total_bits) *total_bits = best_bits;
  return best;
}

double lambda_from_qp(double qp) noexcept {
  // (3 qp - 60) / 5 == 0.6 qp - 12, but exact for integer qp
  return std::exp2((3.0 * qp - 60.0) / 5.0);
}

}  // namespace mframe

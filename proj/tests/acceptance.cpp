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

// Acceptance suite: one PASS/FAIL line per criterion. With no arguments every
// criterion runs; otherwise only the numbered ones given on the command line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "mframe/codec.hpp"
#include "mframe/entropy.hpp"
#include "mframe/eval.hpp"
#include "mframe/pwc.hpp"
#include "mframe/shift_rdopt.hpp"
#include "mframe/si_harness.hpp"
#include "oracles.hpp"

using namespace mframe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

/// Runs fn(i) for i in [0, count) on all cores and sums the results.
template <class Fn>
auto parallel_sum(int count, Fn fn) {
  using R = decltype(fn(0));
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::future<R>> jobs;
  for (int w = 0; w < workers; ++w)
    jobs.push_back(std::async(std::launch::async, [=] {
      R acc{};
      for (int i = w; i < count; i += workers) acc += fn(i);
      return acc;
    }));
  R total{};
  for (auto& j : jobs) total += j.get();
  return total;
}

constexpr int kSets = 1000;

struct SiCase {
  Frame target;
  std::vector<Frame> si;
};

SiCase si_case(int i) {
  SiCase c{synthetic_frame(64, 64, 1000u + static_cast<std::uint64_t>(i)), {}};
  SiGenConfig g;
  g.seed = 5000u + static_cast<std::uint64_t>(i);
  g.n_si = 2 + i % 3;
  g.model = static_cast<DivergenceModel>(i % 3);
  c.si = generate_si_set(c.target, g).frames;
  return c;
}

struct Tally {
  long cases = 0;
  long failures = 0;
  Tally& operator+=(const Tally& o) {
    cases += o.cases;
    failures += o.failures;
    return *this;
  }
};

Outcome drift_free() {
  const auto t0 = Clock::now();
  const Tally t = parallel_sum(kSets, [](int i) {
    const auto c = si_case(i);
    Tally out;
    for (auto mode : {MergeMode::Fixed, MergeMode::Optimized}) {
      CodecConfig cfg;
      cfg.mode = mode;
      const auto enc = encode_mframe(c.si, c.target, cfg);
      for (const auto& f : c.si) {
        ++out.cases;
        out.failures += !(decode_mframe(enc.bitstream, f) == enc.reconstruction);
      }
    }
    return out;
  });
  const double secs = seconds_since(t0);
  return {t.failures == 0 && secs < 120.0,
          fmt("%ld/%ld decodes bit-identical over %d SI sets (N=2..4, both modes) in %.1f s", t.cases - t.failures,
              t.cases, kSets, secs)};
}

Outcome fixed_exact() {
  const Tally t = parallel_sum(kSets, [](int i) {
    const auto c = si_case(i);
    CodecConfig cfg;
    cfg.mode = MergeMode::Fixed;
    const auto enc = encode_mframe(c.si, c.target, cfg);
    const BlockTransform tr(cfg.block_edge, cfg.scan);
    const double q = qstep_from_qp(cfg.qp_si);
    const auto x0 = analyze_frame(c.target, tr, q);
    Tally out;
    for (const auto& f : c.si) {
      const auto dec = decode_mframe_detailed(enc.bitstream, f);
      for (std::size_t b = 0; b < x0.size(); ++b)
        for (std::size_t k = 0; k < x0[b].qcoeffs.size(); ++k) {
          ++out.cases;
          const double ratio = dec.coefficients[b].coeffs[k] / q;
          out.failures += std::round(ratio) != x0[b].qcoeffs[k] || std::abs(ratio - std::round(ratio)) > 1e-9;
        }
    }
    return out;
  });
  return {t.failures == 0, fmt("%ld/%ld decoded q-coeffs equal the target's", t.cases - t.failures, t.cases)};
}

Outcome feasible_oracle() {
  const auto t0 = Clock::now();
  long cases = 0, failures = 0;
  for (std::int64_t w = 1; w <= 32; ++w)
    for (std::int64_t lo = -40; lo <= 40; ++lo)
      for (std::int64_t hi = lo; hi - lo < w; ++hi) {
        ++cases;
        failures += feasible_shift_range(lo, hi, w).canonical() != oracle::feasible_shifts(lo, hi, w);
      }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 30.0,
          fmt("%ld/%ld (W, x_min, x_max) ranges match enumeration in %.2f s", cases - failures, cases, secs)};
}

Outcome coset_equivalence() {
  long cases = 0, failures = 0;
  for (std::int64_t w = 2; w <= 32; w += 2)
    for (std::int64_t target = -40; target <= 40; ++target) {
      const std::int64_t z = w / 2 - 1;
      const std::int64_t c = fixed_target_shift(target, w);
      const std::int64_t index = oracle::fmod_pos(target, w);
      for (std::int64_t x = target - z; x <= target + z; ++x) {
        ++cases;
        const auto merged = pwc_apply(x, w, c);
        failures += !merged.is_integer() || merged.twice / 2 != coset_decode(x, index, w) ||
                    merged.twice != oracle::twice_pwc(x, w, c) || oracle::nearest_in_coset(x, index, w) != target;
      }
    }
  return {failures == 0, fmt("%ld/%ld fixed-target merges equal the coset decode", cases - failures, cases)};
}

Outcome rc_lloyd_max_behaviour() {
  long iterations = 0, increases = 0, invalid = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed + 77);
    const std::int64_t w = 2 + static_cast<std::int64_t>(rng() % 63);
    ShiftHistogram hist(w);
    const int clusters = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < clusters; ++k) {
      const std::int64_t centre = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(w));
      const int n = 1 + static_cast<int>(rng() % 80);
      for (int i = 0; i < n; ++i)
        hist.counts[static_cast<std::size_t>(oracle::fmod_pos(centre + static_cast<std::int64_t>(rng() % 7) - 3, w))] +=
            1.0;
    }
    const int spikes = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(std::min<std::int64_t>(w, 8)));
    const double lambda = static_cast<double>(rng() % 20);
    const auto trace = rc_lloyd_max_traced(hist, spikes, lambda);
    for (std::size_t i = 1; i < trace.objective.size(); ++i) {
      ++iterations;
      increases += trace.objective[i] > trace.objective[i - 1] + 1e-9 * (1.0 + std::abs(trace.objective[i - 1]));
    }
    double total = 0.0;
    for (double p : trace.distribution.dense()) total += p;
    invalid += !trace.distribution.valid() || std::abs(total - 1.0) > 1e-9;
  }

  long blocks = 0, mismatches = 0;
  std::mt19937_64 rng(4242);
  for (int inst = 0; inst < 2000; ++inst) {
    const std::int64_t w = 1 + static_cast<std::int64_t>(rng() % 8);
    const int count = 1 + static_cast<int>(rng() % 6);
    const double q = 0.5 + static_cast<double>(rng() % 8) / 2.0;
    std::vector<ShiftProblem> problems;
    std::vector<std::pair<std::int64_t, std::int64_t>> intervals;
    for (int b = 0; b < count; ++b) {
      const std::int64_t x_min = static_cast<std::int64_t>(rng() % 31) - 15;
      const std::int64_t x_max = x_min + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(w));
      const std::int64_t x0 = x_min + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(x_max - x_min + 3)) - 1;
      const double y0 = (static_cast<double>(x0) + static_cast<double>(rng() % 1001) / 1000.0 - 0.5) * q;
      problems.push_back({x0, y0, q, feasible_shift_range(x_min, x_max, w)});
      intervals.emplace_back(x_min, x_max);
    }
    const double lambda = static_cast<double>(rng() % 40) / 4.0;
    const int spikes = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(w));
    const auto dist = quantize_distribution(rc_lloyd_max(build_histogram(problems, w), spikes, lambda));
    for (int b = 0; b < count; ++b) {
      ++blocks;
      const auto& p = problems[static_cast<std::size_t>(b)];
      const auto [lo, hi] = intervals[static_cast<std::size_t>(b)];
      mismatches += select_shift(p, dist, lambda).first != oracle::exhaustive_shift(p.x0, p.y0, q, lo, hi, w, dist, lambda);
    }
  }
  return {increases == 0 && invalid == 0 && mismatches == 0,
          fmt("objective increases %ld/%ld steps, invalid models %ld/100, select_shift mismatches %ld/%ld", increases,
              iterations, invalid, mismatches, blocks)};
}

Outcome entropy_coding() {
  struct E {
    long trials = 0, lossy = 0, over = 0;
    double worst_excess = -1e300;
    E& operator+=(const E& o) {
      trials += o.trials;
      lossy += o.lossy;
      over += o.over;
      worst_excess = std::max(worst_excess, o.worst_excess);
      return *this;
    }
  };
  const E e = parallel_sum(100000, [](int i) {
    const auto tc = oracle::entropy_case(static_cast<std::uint64_t>(i));
    const auto bytes = entropy_encode_shifts(tc.shifts, tc.dist);
    E out;
    out.trials = 1;
    out.lossy = entropy_decode_shifts(bytes, tc.dist, tc.shifts.size()) != tc.shifts;
    const double ideal = ideal_codelength(tc.shifts, tc.dist);
    const double payload = static_cast<double>(bytes.size() * 8);
    out.over = payload > ideal * 1.02 + 64.0;
    out.worst_excess = payload - ideal * 1.02;
    return out;
  });
  return {e.lossy == 0 && e.over == 0,
          fmt("%ld trials, %ld lossy, %ld over 1.02 x ideal + 64 bits (worst excess %.1f bits)", e.trials, e.lossy,
              e.over, e.worst_excess)};
}

Outcome dominance() {
  const auto corpus = synthetic_corpus(16, 64, 64, 2026);
  struct D {
    long frames = 0, violations = 0;
    double mean_gain = 0.0;
    D& operator+=(const D& o) {
      frames += o.frames;
      violations += o.violations;
      mean_gain += o.mean_gain;
      return *this;
    }
  };
  const double lambdas[] = {1.0, 4.0, 16.0, 64.0, 256.0};
  const D d = parallel_sum(static_cast<int>(corpus.targets.size()) * 5, [&](int job) {
    const std::size_t i = static_cast<std::size_t>(job / 5);
    const double lambda = lambdas[job % 5];
    SiGenConfig g = corpus.si;
    g.seed = corpus.si.seed * 7919ull + i;
    const auto si = generate_si_set(corpus.targets[i], g);
    CodecConfig fixed, opt;
    fixed.mode = MergeMode::Fixed;
    opt.mode = MergeMode::Optimized;
    fixed.lambda = opt.lambda = lambda;
    const double jf = encode_mframe(si.frames, corpus.targets[i], fixed).report.lagrangian;
    const double jo = encode_mframe(si.frames, corpus.targets[i], opt).report.lagrangian;
    return D{1, jo > jf ? 1 : 0, (jf - jo) / jf};
  });
  return {d.violations == 0,
          fmt("%ld/%ld (frame, lambda) pairs with optimized <= fixed, mean Lagrangian saving %.1f%%",
              d.frames - d.violations, d.frames, 100.0 * d.mean_gain / static_cast<double>(d.frames))};
}

Outcome lambda_formula() {
  const double a = lambda_from_qp(30), b = lambda_from_qp(20);
  return {a == 64.0 && b == 1.0, fmt("lambda(30) = %.17g, lambda(20) = %.17g", a, b)};
}

Outcome bd_rate_report() {
  RdCurve base{"anchor", {}};
  const double rates[] = {1200, 2300, 4400, 8100, 15500};
  const double psnrs[] = {30.2, 32.9, 35.8, 38.4, 41.1};
  for (int i = 0; i < 5; ++i) base.points.push_back({0, 0.0, rates[i], psnrs[i], 0.0, false});
  auto doubled = base;
  for (auto& p : doubled.points) p.rate_bits *= 2.0;
  const double identity = bd_rate(base, base);
  const double twice = bd_rate(doubled, base);
  const bool self_ok = std::abs(identity) < 1e-9 && std::abs(twice - 100.0) <= 0.5;

  const auto corpus = synthetic_corpus(12, 64, 64, 2026);
  CodecConfig cfg;
  std::vector<SweepSetting> settings;
  for (int qp : {24, 28, 32, 36, 40}) settings.push_back({qp, {}});
  const auto opt = rd_sweep(corpus, SweepMethod::MFrameOptimized, settings, cfg);
  const auto intra = rd_sweep(corpus, SweepMethod::IntraRefresh, settings, cfg);
  const double delta = bd_rate(opt, intra);
  return {self_ok && delta <= -30.0,
          fmt("BD self-tests identity %.2g%%, doubling %+.3f%%; optimized M-frame vs intra refresh %+.1f%% "
              "(target <= -30%%)",
              identity, twice, delta)};
}

Outcome z_star_shape() {
  const CodecConfig cfg;
  double sum = 0.0;
  const int sets = 50;
  for (int i = 0; i < sets; ++i) {
    SiGenConfig g;
    g.seed = 900u + static_cast<std::uint64_t>(i);
    sum += z_star_fraction(generate_si_set(synthetic_frame(64, 64, 300u + static_cast<std::uint64_t>(i)), g).frames,
                           cfg.merge_qstep(), 5);
  }
  const double frac = sum / sets;
  return {frac >= 0.7, fmt("%.1f%% of (block, AC frequency) pairs have Z* <= 5 at qp_si %d", 100.0 * frac,
                           SiGenConfig{}.qp_si)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"drift-free merging", drift_free},
      {"fixed-target exactness", fixed_exact},
      {"feasible shift range vs enumeration", feasible_oracle},
      {"coset equivalence", coset_equivalence},
      {"rate-constrained Lloyd-Max", rc_lloyd_max_behaviour},
      {"entropy coding", entropy_coding},
      {"optimized-vs-fixed dominance", dominance},
      {"lambda from QP", lambda_formula},
      {"BD-rate machinery and intra-refresh comparison", bd_rate_report},
      {"Z* distribution shape", z_star_shape},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int n = std::atoi(argv[i]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "usage: acceptance [criterion number ...]\n");
      return 2;
    }
    selected.push_back(n);
  }
  if (selected.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);

  int failed = 0;
  for (int n : selected) {
    const auto& c = criteria[static_cast<std::size_t>(n - 1)];
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

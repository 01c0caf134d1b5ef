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

#include "mframe/si_harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mframe/error.hpp"
#include "mframe/eval.hpp"
#include "mframe/pwc.hpp"

namespace mframe {

namespace {

std::uint64_t splitmix(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// std distributions are not portable across standard libraries; the raw
// engine output is.
double unit(std::mt19937_64& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double between(std::mt19937_64& rng, double lo, double hi) noexcept {
  return lo + (hi - lo) * unit(rng);
}

int int_between(std::mt19937_64& rng, int lo, int hi) noexcept {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

Frame translate(const Frame& f, int dx, int dy) {
  Frame out(f.width(), f.height(), f.id());
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      out.at(x, y) = f.at(std::clamp(x - dx, 0, f.width() - 1), std::clamp(y - dy, 0, f.height() - 1));
  return out;
}

Frame add_noise(const Frame& f, double amplitude, std::mt19937_64& rng) {
  if (amplitude <= 0.0) return f;
  Frame out = f;
  for (auto& s : out.samples()) s = to_pixel(s + between(rng, -amplitude, amplitude));
  return out;
}

}  // namespace

void SiGenConfig::validate() const {
  if (n_si < 1) fail(ErrorKind::Config, "n_si must be >= 1");
  if (n_si > 255) fail(ErrorKind::Config, "n_si must be <= 255");
  if (qp_si < 1 || qp_si > 51) fail(ErrorKind::Config, "qp_si must lie in [1, 51]");
  if (!(noise_scale >= 0.0)) fail(ErrorKind::Config, "noise_scale must be non-negative");
  if (!valid_block_edge(block_edge)) fail(ErrorKind::Config, "block edge must be 4, 8 or 16");
}

Frame synthetic_frame(int width, int height, std::uint64_t seed) {
  if (width <= 0 || height <= 0) fail(ErrorKind::Dimension, "synthetic frame needs positive size");
  std::mt19937_64 rng(splitmix(seed));
  constexpr double two_pi = 2.0 * std::numbers::pi;

  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves(4);
  for (auto& w : waves)
    w = {between(rng, 0.0, 3.0) / width, between(rng, 0.0, 3.0) / height, between(rng, 0.0, two_pi),
         between(rng, 10.0, 30.0)};

  struct Rect {
    int x0, y0, x1, y1;
    double level;
  };
  std::vector<Rect> rects(3);
  for (auto& r : rects) {
    const int x0 = int_between(rng, 0, width - 1), y0 = int_between(rng, 0, height - 1);
    r = {x0, y0, int_between(rng, x0, width), int_between(rng, y0, height),
         between(rng, 25.0, 50.0) * (rng() & 1 ? 1.0 : -1.0)};
  }
  const double base = between(rng, 100.0, 156.0);

  Frame f(width, height, "synthetic-" + std::to_string(seed));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      double v = base;
      for (const auto& w : waves) v += w.amp * std::cos(two_pi * (w.fx * x + w.fy * y) + w.phase);
      for (const auto& r : rects)
        if (x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1) v += r.level;
      f.at(x, y) = to_pixel(v);
    }
  return f;
}

std::pair<Frame, std::size_t> intra_code(const Frame& frame, double qstep, int block_edge) {
  const BlockTransform transform(block_edge);
  const auto q = analyze_frame(frame, transform, qstep);
  std::size_t bits = 0;
  for (const auto& b : q) bits += intra_block_bits(b.qcoeffs);
  Frame out = render_qcoeffs(q, transform, frame.width(), frame.height());
  out.set_id(frame.id());
  return {std::move(out), bits};
}

SiSet generate_si_set(const Frame& target, const SiGenConfig& cfg) {
  cfg.validate();
  const double qstep = qstep_from_qp(cfg.qp_si);
  const double amplitude = cfg.noise_scale * qstep;
  SiSet set;
  for (int n = 0; n < cfg.n_si; ++n) {
    std::mt19937_64 rng(splitmix(cfg.seed ^ splitmix(static_cast<std::uint64_t>(n) + 1)));
    Frame src = target;
    const bool shift = cfg.model == DivergenceModel::ShiftedContent ||
                       (cfg.model == DivergenceModel::Mixed && n % 2 == 1);
    if (shift) {
      int dx = 0, dy = 0;
      const int reach = cfg.model == DivergenceModel::Mixed ? 1 : 2;
      while (dx == 0 && dy == 0) {
        dx = int_between(rng, -reach, reach);
        dy = int_between(rng, -reach, reach);
      }
      src = translate(src, dx, dy);
    }
    if (cfg.model != DivergenceModel::ShiftedContent) src = add_noise(src, amplitude, rng);
    auto [coded, bits] = intra_code(src, qstep, cfg.block_edge);
    coded.set_id("si" + std::to_string(n));
    set.frames.push_back(std::move(coded));
    set.rate_bits.push_back(bits);
  }
  return set;
}

double z_star_fraction(const std::vector<Frame>& si_frames, double qstep, int bound, int block_edge) {
  if (si_frames.empty()) return 1.0;
  const BlockTransform transform(block_edge);
  std::vector<std::vector<QCoeffBlock>> q;
  for (const auto& f : si_frames) q.push_back(analyze_frame(f, transform, qstep));
  std::size_t hit = 0, total = 0;
  for (std::size_t b = 0; b < q[0].size(); ++b)
    for (int k = 1; k < transform.size(); ++k) {
      std::int32_t lo = q[0][b].qcoeffs[k], hi = lo;
      for (const auto& f : q) {
        lo = std::min(lo, f[b].qcoeffs[k]);
        hi = std::max(hi, f[b].qcoeffs[k]);
      }
      hit += hi - lo <= bound;
      ++total;
    }
  return static_cast<double>(hit) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------

std::string PictureId::label() const {
  return "s" + std::to_string(stream) + "t" + std::to_string(time);
}

int InteractivityGraph::add_node(PictureId id) {
  if (auto existing = find(id)) return *existing;
  nodes_.push_back(id);
  return static_cast<int>(nodes_.size()) - 1;
}

void InteractivityGraph::add_edge(int from, int to) {
  const int n = static_cast<int>(nodes_.size());
  if (from < 0 || from >= n || to < 0 || to >= n || from == to)
    fail(ErrorKind::Structure, "edge endpoints must be distinct existing nodes");
  if (!has_edge(from, to)) edges_.emplace_back(from, to);
}

bool InteractivityGraph::has_edge(int from, int to) const {
  return std::find(edges_.begin(), edges_.end(), std::pair{from, to}) != edges_.end();
}

std::vector<int> InteractivityGraph::origins_of(int to) const {
  std::vector<int> out;
  for (const auto& [a, b] : edges_)
    if (b == to) out.push_back(a);
  return out;
}

std::optional<int> InteractivityGraph::find(PictureId id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i] == id) return static_cast<int>(i);
  return std::nullopt;
}

bool InteractivityGraph::cyclic() const {
  enum Color { White, Grey, Black };
  std::vector<Color> color(nodes_.size(), White);
  std::function<bool(int)> visit = [&](int u) {
    color[u] = Grey;
    for (const auto& [a, b] : edges_) {
      if (a != u) continue;
      if (color[b] == Grey) return true;
      if (color[b] == White && visit(b)) return true;
    }
    color[u] = Black;
    return false;
  };
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (color[i] == White && visit(static_cast<int>(i))) return true;
  return false;
}

InteractivityGraph InteractivityGraph::two_to_one() {
  InteractivityGraph g;
  const int a = g.add_node({0, 0});
  const int b = g.add_node({1, 0});
  const int d = g.add_node({1, 1});
  g.add_edge(a, d);
  g.add_edge(b, d);
  return g;
}

InteractivityGraph InteractivityGraph::static_three_view() {
  InteractivityGraph g;
  const int v0 = g.add_node({0, 0});
  const int v1 = g.add_node({1, 0});
  const int v2 = g.add_node({2, 0});
  g.add_edge(v0, v1);
  g.add_edge(v1, v0);
  g.add_edge(v1, v2);
  g.add_edge(v2, v1);
  return g;
}

bool SwitchReport::any_drift() const {
  return std::any_of(switches.begin(), switches.end(), [](const SwitchRecord& s) { return s.drift; });
}

std::string SwitchReport::to_csv() const {
  std::ostringstream os;
  os << "from,to,mframe_bits,si_bits,psnr_db,drift\n";
  for (const auto& s : switches)
    os << s.from.label() << ',' << s.to.label() << ',' << s.mframe_bits << ',' << s.si_bits << ','
       << s.psnr_db << ',' << (s.drift ? 1 : 0) << '\n';
  return os.str();
}

std::string SwitchReport::to_json() const {
  using nlohmann::json;
  json j;
  j["switches"] = json::array();
  for (const auto& s : switches)
    j["switches"].push_back({{"from", s.from.label()},
                             {"to", s.to.label()},
                             {"mframe_bits", s.mframe_bits},
                             {"si_bits", s.si_bits},
                             {"psnr_db", s.psnr_db},
                             {"drift", s.drift}});
  j["destinations"] = json::array();
  for (const auto& d : destinations)
    j["destinations"].push_back({{"picture", d.picture.label()},
                                 {"mframe_bits", d.mframe_bits},
                                 {"si_bits", d.si_bits},
                                 {"average_bits", d.average_bits},
                                 {"worst_bits", d.worst_bits}});
  j["drift"] = any_drift();
  return j.dump(2);
}

Frame picture_target(PictureId id, const SimulationConfig& cfg) {
  const std::uint64_t key = splitmix(cfg.si.seed) ^
                            splitmix(static_cast<std::uint64_t>(id.stream) << 32 |
                                     static_cast<std::uint32_t>(id.time));
  Frame f = synthetic_frame(cfg.width, cfg.height, key);
  f.set_id(id.label());
  return f;
}

namespace {

DestinationRate rate_of(PictureId picture, std::size_t mframe_bits, std::vector<std::size_t> si_bits) {
  DestinationRate r;
  r.picture = picture;
  r.mframe_bits = mframe_bits;
  r.si_bits = std::move(si_bits);
  double sum = 0.0, worst = 0.0;
  for (auto b : r.si_bits) {
    sum += static_cast<double>(b);
    worst = std::max(worst, static_cast<double>(b));
  }
  r.average_bits = sum / static_cast<double>(r.si_bits.size()) + static_cast<double>(mframe_bits);
  r.worst_bits = worst + static_cast<double>(mframe_bits);
  return r;
}

}  // namespace

SwitchReport simulate_switch(const InteractivityGraph& graph,
                             const std::vector<std::pair<PictureId, PictureId>>& trace,
                             const SimulationConfig& cfg) {
  cfg.codec.validate();
  if (graph.cyclic() && cfg.codec.mode == MergeMode::Optimized)
    fail(ErrorKind::Config, "cyclic interactivity graphs need fixed-target merging");

  struct Merged {
    std::vector<int> origins;
    SiSet si;
    Frame target;
    EncodeResult encoded;
    std::vector<Frame> decoded;  // per origin
  };
  std::map<int, Merged> cache;

  SwitchReport report;
  for (const auto& [from_id, to_id] : trace) {
    const auto from = graph.find(from_id);
    const auto to = graph.find(to_id);
    if (!from || !to || !graph.has_edge(*from, *to))
      fail(ErrorKind::Structure, "trace switch " + from_id.label() + " -> " + to_id.label() +
                                     " is not an edge of the graph");

    auto it = cache.find(*to);
    if (it == cache.end()) {
      Merged m;
      m.origins = graph.origins_of(*to);
      m.target = picture_target(to_id, cfg);
      SiGenConfig si_cfg = cfg.si;
      si_cfg.n_si = static_cast<int>(m.origins.size());
      si_cfg.qp_si = cfg.codec.qp_si;
      si_cfg.block_edge = cfg.codec.block_edge;
      si_cfg.seed = splitmix(cfg.si.seed ^ splitmix(static_cast<std::uint64_t>(*to) + 17));
      m.si = generate_si_set(m.target, si_cfg);
      m.encoded = encode_mframe(m.si.frames, m.target, cfg.codec);
      for (const auto& f : m.si.frames) m.decoded.push_back(decode_mframe(m.encoded.bitstream, f));
      report.destinations.push_back(rate_of(to_id, m.encoded.bitstream.size() * 8, m.si.rate_bits));
      it = cache.emplace(*to, std::move(m)).first;
    }
    const Merged& m = it->second;
    const auto slot = static_cast<std::size_t>(
        std::find(m.origins.begin(), m.origins.end(), *from) - m.origins.begin());

    SwitchRecord rec;
    rec.from = from_id;
    rec.to = to_id;
    rec.mframe_bits = m.encoded.bitstream.size() * 8;
    rec.si_bits = m.si.rate_bits[slot];
    rec.psnr_db = psnr(m.decoded[slot], m.target);
    for (const auto& other : m.decoded) rec.drift = rec.drift || !(other == m.decoded[slot]);
    rec.drift = rec.drift || !(m.decoded[slot] == m.encoded.reconstruction);
    report.switches.push_back(rec);
  }
  return report;
}

LadderReport aimd_ladder(const Frame& target, const SimulationConfig& cfg) {
  cfg.codec.validate();
  const double base_rate =
      static_cast<double>(intra_code(target, qstep_from_qp(cfg.si.qp_si), cfg.codec.block_edge).second);
  const double ratios[] = {2.0, 1.0, 0.9};

  LadderReport out;
  std::vector<Frame> frames;
  std::vector<std::size_t> bits;
  for (int s = 0; s < 3; ++s) {
    int best_qp = 1;
    double best_gap = std::numeric_limits<double>::infinity();
    std::pair<Frame, std::size_t> best;
    for (int qp = 1; qp <= 51; ++qp) {
      auto candidate = intra_code(target, qstep_from_qp(qp), cfg.codec.block_edge);
      const double gap = std::abs(static_cast<double>(candidate.second) / base_rate - ratios[s]);
      if (gap < best_gap) {
        best_gap = gap;
        best_qp = qp;
        best = std::move(candidate);
      }
    }
    out.qps.push_back(best_qp);
    out.rate_ratios.push_back(static_cast<double>(best.second) / base_rate);
    frames.push_back(std::move(best.first));
    bits.push_back(best.second);
  }
  const auto encoded = encode_mframe(frames, target, cfg.codec);
  out.rate = rate_of({0, 0}, encoded.bitstream.size() * 8, bits);
  for (const auto& f : frames)
    out.drift = out.drift || !(decode_mframe(encoded.bitstream, f) == encoded.reconstruction);
  return out;
}

}  // namespace mframe

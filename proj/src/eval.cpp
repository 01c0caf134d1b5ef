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

#include "mframe/eval.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <sstream>

#include "mframe/error.hpp"

namespace mframe {

double mse(const Frame& a, const Frame& b) {
  if (!a.same_shape(b))
    fail(ErrorKind::Dimension, "frames differ in size: " + std::to_string(a.width()) + "x" +
                                   std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                   "x" + std::to_string(b.height()));
  if (a.samples().empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    const double d = static_cast<double>(a.samples()[i]) - static_cast<double>(b.samples()[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.samples().size());
}

double psnr(const Frame& a, const Frame& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

void RdCurve::sort_by_rate() {
  std::sort(points.begin(), points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.rate_bits < b.rate_bits; });
}

namespace {

// ln(rate) as a cubic in PSNR, lowest order first.
Eigen::Vector4d fit_log_rate(const RdCurve& c) {
  const auto n = static_cast<Eigen::Index>(c.points.size());
  Eigen::MatrixXd v(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = c.points[static_cast<std::size_t>(i)];
    if (!(p.rate_bits > 0.0)) fail(ErrorKind::Contract, "BD-rate needs positive rates");
    double x = 1.0;
    for (int j = 0; j < 4; ++j, x *= p.psnr_db) v(i, j) = x;
    y(i) = std::log(p.rate_bits);
  }
  return v.colPivHouseholderQr().solve(y);
}

double integral(const Eigen::Vector4d& p, double lo, double hi) {
  double sum = 0.0;
  for (int j = 0; j < 4; ++j) sum += p(j) * (std::pow(hi, j + 1) - std::pow(lo, j + 1)) / (j + 1);
  return sum;
}

std::pair<double, double> psnr_span(const RdCurve& c) {
  auto [lo, hi] = std::minmax_element(c.points.begin(), c.points.end(),
                                      [](const RdPoint& a, const RdPoint& b) { return a.psnr_db < b.psnr_db; });
  return {lo->psnr_db, hi->psnr_db};
}

}  // namespace

double bd_rate(const RdCurve& test, const RdCurve& anchor) {
  if (test.points.size() < 4 || anchor.points.size() < 4)
    fail(ErrorKind::Contract, "BD-rate needs at least 4 points per curve");
  const auto [t_lo, t_hi] = psnr_span(test);
  const auto [a_lo, a_hi] = psnr_span(anchor);
  const double lo = std::max(t_lo, a_lo);
  const double hi = std::min(t_hi, a_hi);
  if (!(hi > lo)) fail(ErrorKind::Contract, "BD-rate curves do not overlap in PSNR");
  const double avg = (integral(fit_log_rate(test), lo, hi) - integral(fit_log_rate(anchor), lo, hi)) / (hi - lo);
  return (std::exp(avg) - 1.0) * 100.0;
}

std::string method_name(SweepMethod m) {
  switch (m) {
    case SweepMethod::MFrameOptimized: return "mframe-optimized";
    case SweepMethod::MFrameFixed: return "mframe-fixed";
    case SweepMethod::IntraRefresh: return "intra-refresh";
  }
  return "unknown";
}

Corpus synthetic_corpus(int count, int width, int height, std::uint64_t seed, int n_si) {
  Corpus c;
  for (int i = 0; i < count; ++i)
    c.targets.push_back(synthetic_frame(width, height, seed * 1000003ull + static_cast<std::uint64_t>(i)));
  c.si.seed = seed;
  c.si.n_si = n_si;
  return c;
}

namespace {

RdPoint sweep_point(const Corpus& corpus, SweepMethod method, const SweepSetting& s,
                    const CodecConfig& base) {
  RdPoint p;
  p.qp = s.qp;
  p.lambda = s.lambda ? *s.lambda : lambda_from_qp(s.qp);
  double psnr_sum = 0.0;
  for (std::size_t i = 0; i < corpus.targets.size(); ++i) {
    const Frame& target = corpus.targets[i];
    if (method == SweepMethod::IntraRefresh) {
      const auto [coded, bits] = intra_code(target, qstep_from_qp(s.qp), base.block_edge);
      p.rate_bits += static_cast<double>(bits);
      psnr_sum += psnr(coded, target);
      p.lagrangian += mse(coded, target) * static_cast<double>(target.samples().size()) +
                      p.lambda * static_cast<double>(bits);
      continue;
    }
    SiGenConfig si_cfg = corpus.si;
    si_cfg.qp_si = s.qp;
    si_cfg.block_edge = base.block_edge;
    si_cfg.seed = corpus.si.seed * 7919ull + i;
    const auto si = generate_si_set(target, si_cfg);

    CodecConfig cfg = base;
    cfg.qp_si = s.qp;
    cfg.lambda = p.lambda;
    cfg.mode = method == SweepMethod::MFrameFixed ? MergeMode::Fixed : MergeMode::Optimized;
    const auto enc = encode_mframe(si.frames, target, cfg);
    p.rate_bits += static_cast<double>(enc.report.rate_bits);
    p.lagrangian += enc.report.lagrangian;
    psnr_sum += psnr(enc.reconstruction, target);
    for (const auto& f : si.frames)
      p.drift = p.drift || !(decode_mframe(enc.bitstream, f) == enc.reconstruction);
  }
  p.psnr_db = corpus.targets.empty() ? 0.0 : psnr_sum / static_cast<double>(corpus.targets.size());
  return p;
}

}  // namespace

RdCurve rd_sweep(const Corpus& corpus, SweepMethod method, const std::vector<SweepSetting>& settings,
                 const CodecConfig& base) {
  if (corpus.targets.empty()) fail(ErrorKind::Config, "sweep corpus is empty");
  std::vector<std::future<RdPoint>> jobs;
  for (const auto& s : settings)
    jobs.push_back(std::async(std::launch::async, sweep_point, std::cref(corpus), method, s, std::cref(base)));
  RdCurve curve;
  curve.method = method_name(method);
  for (auto& j : jobs) curve.points.push_back(j.get());
  curve.sort_by_rate();
  return curve;
}

bool monotone_in_lambda(const RdCurve& curve) {
  auto pts = curve.points;
  std::sort(pts.begin(), pts.end(), [](const RdPoint& a, const RdPoint& b) { return a.lambda > b.lambda; });
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (pts[i].psnr_db < pts[i - 1].psnr_db - 1e-9) return false;
  return true;
}

std::string curves_to_csv(const std::vector<RdCurve>& curves) {
  std::ostringstream os;
  os << "method,qp,lambda,rate_bits,psnr_db,drift\n" << std::setprecision(10);
  for (const auto& c : curves)
    for (const auto& p : c.points)
      os << c.method << ',' << p.qp << ',' << p.lambda << ',' << p.rate_bits << ',' << p.psnr_db << ','
         << (p.drift ? 1 : 0) << '\n';
  return os.str();
}

std::string curves_to_svg(const std::vector<RdCurve>& curves, const std::string& title) {
  constexpr double w = 640, h = 420, left = 70, right = 20, top = 40, bottom = 50;
  double r_lo = 1e300, r_hi = -1e300, q_lo = 1e300, q_hi = -1e300;
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      if (p.psnr_db >= kPsnrIdentical) continue;
      r_lo = std::min(r_lo, p.rate_bits / 1000.0);
      r_hi = std::max(r_hi, p.rate_bits / 1000.0);
      q_lo = std::min(q_lo, p.psnr_db);
      q_hi = std::max(q_hi, p.psnr_db);
    }
  if (r_lo > r_hi) r_lo = 0, r_hi = 1, q_lo = 0, q_hi = 1;
  if (r_hi - r_lo < 1e-9) r_hi = r_lo + 1;
  if (q_hi - q_lo < 1e-9) q_hi = q_lo + 1;
  auto px = [&](double r) { return left + (r - r_lo) / (r_hi - r_lo) * (w - left - right); };
  auto py = [&](double q) { return h - bottom - (q - q_lo) / (q_hi - q_lo) * (h - top - bottom); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
     << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double r = r_lo + (r_hi - r_lo) * i / 4, q = q_lo + (q_hi - q_lo) * i / 4;
    os << "<text x=\"" << px(r) << "\" y=\"" << h - bottom + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
       << r << "</text>\n"
       << "<text x=\"" << left - 6 << "\" y=\"" << py(q) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << q
       << "</text>\n";
  }
  os << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-size=\"12\">rate (kbit)</text>\n"
     << "<text x=\"16\" y=\"" << h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << h / 2
     << ")\" text-anchor=\"middle\">PSNR (dB)</text>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = colors[i % 5];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[i].points)
      if (p.psnr_db < kPsnrIdentical) os << px(p.rate_bits / 1000.0) << ',' << py(p.psnr_db) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << w - right - 150 << "\" y=\"" << top + 16 * (i + 1) << "\" font-size=\"12\" fill=\""
       << color << "\">" << curves[i].method << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mframe

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

#ifndef MFRAME_EVAL_HPP
#define MFRAME_EVAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "mframe/codec.hpp"
#include "mframe/frame.hpp"
#include "mframe/si_harness.hpp"

namespace mframe {

/// Returned by psnr() for identical frames.
inline constexpr double kPsnrIdentical = 999.0;

double mse(const Frame& a, const Frame& b);
double psnr(const Frame& a, const Frame& b);

struct RdPoint {
  int qp = 0;
  double lambda = 0.0;
  double rate_bits = 0.0;
  double psnr_db = 0.0;
  double lagrangian = 0.0;  // sum over the corpus of D + lambda * R
  bool drift = false;
};

struct RdCurve {
  std::string method;
  std::vector<RdPoint> points;  // ascending rate

  void sort_by_rate();
};

/// Bjontegaard delta rate of `test` against `anchor` in percent. Negative
/// means `test` needs fewer bits for the same quality.
double bd_rate(const RdCurve& test, const RdCurve& anchor);

enum class SweepMethod { MFrameOptimized, MFrameFixed, IntraRefresh };

std::string method_name(SweepMethod m);

struct SweepSetting {
  int qp = 30;                    // SI quality and QP_SI
  std::optional<double> lambda;   // defaults to lambda_from_qp(qp)
};

struct Corpus {
  std::vector<Frame> targets;
  SiGenConfig si;  // qp_si is overridden per sweep point
};

/// Seeded synthetic corpus of `count` targets.
Corpus synthetic_corpus(int count, int width, int height, std::uint64_t seed, int n_si = 3);

/// One point per setting. Rate is the total M-frame (or intra) bits over
/// the corpus, PSNR the mean over targets. Points run concurrently.
RdCurve rd_sweep(const Corpus& corpus, SweepMethod method,
                 const std::vector<SweepSetting>& settings, const CodecConfig& base);

/// True when distortion does not increase as lambda decreases.
bool monotone_in_lambda(const RdCurve& curve);

std::string curves_to_csv(const std::vector<RdCurve>& curves);
std::string curves_to_svg(const std::vector<RdCurve>& curves, const std::string& title);

}  // namespace mframe

#endif  // MFRAME_EVAL_HPP

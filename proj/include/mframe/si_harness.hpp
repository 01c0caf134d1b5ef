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

#ifndef MFRAME_SI_HARNESS_HPP
#define MFRAME_SI_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mframe/codec.hpp"
#include "mframe/frame.hpp"

namespace mframe {

enum class DivergenceModel : std::uint8_t { QuantizedNoise, ShiftedContent, Mixed };

struct SiGenConfig {
  std::uint64_t seed = 1;
  int n_si = 3;
  int qp_si = 30;
  DivergenceModel model = DivergenceModel::QuantizedNoise;
  /// Noise amplitude as a fraction of the SI quantizer step.
  double noise_scale = 0.4;
  int block_edge = 16;

  void validate() const;
};

/// SI frames plus the intra rate that produced each of them.
struct SiSet {
  std::vector<Frame> frames;
  std::vector<std::size_t> rate_bits;
};

/// Seeded band-limited pattern with step edges, values in [0, 255].
Frame synthetic_frame(int width, int height, std::uint64_t seed);

/// Transform-codes `frame` at `qstep` and returns the decoded picture and
/// its exp-Golomb intra rate.
std::pair<Frame, std::size_t> intra_code(const Frame& frame, double qstep, int block_edge = 16);

SiSet generate_si_set(const Frame& target, const SiGenConfig& cfg);

/// Fraction of (block, AC frequency) pairs whose max pair difference across
/// the SI frames, quantized at `qstep`, is at most `bound`.
double z_star_fraction(const std::vector<Frame>& si_frames, double qstep, int bound,
                       int block_edge = 16);

// ---------------------------------------------------------------------------
// Switching simulation

struct PictureId {
  int stream = 0;
  int time = 0;
  friend bool operator==(const PictureId&, const PictureId&) = default;
  std::string label() const;
};

class InteractivityGraph {
 public:
  int add_node(PictureId id);
  void add_edge(int from, int to);

  const std::vector<PictureId>& nodes() const noexcept { return nodes_; }
  const std::vector<std::pair<int, int>>& edges() const noexcept { return edges_; }
  bool has_edge(int from, int to) const;
  std::vector<int> origins_of(int to) const;
  std::optional<int> find(PictureId id) const;
  bool cyclic() const;

  /// Two origin streams switching into one destination picture.
  static InteractivityGraph two_to_one();
  /// Three views of one instant, neighbours switchable both ways.
  static InteractivityGraph static_three_view();

 private:
  std::vector<PictureId> nodes_;
  std::vector<std::pair<int, int>> edges_;
};

struct SwitchRecord {
  PictureId from;
  PictureId to;
  std::size_t mframe_bits = 0;
  std::size_t si_bits = 0;
  double psnr_db = 0.0;
  bool drift = false;
};

struct DestinationRate {
  PictureId picture;
  std::size_t mframe_bits = 0;
  std::vector<std::size_t> si_bits;
  double average_bits = 0.0;  // mean(si_bits) + mframe_bits
  double worst_bits = 0.0;    // max(si_bits) + mframe_bits
};

struct SwitchReport {
  std::vector<SwitchRecord> switches;
  std::vector<DestinationRate> destinations;
  bool any_drift() const;

  std::string to_csv() const;
  std::string to_json() const;
};

struct SimulationConfig {
  CodecConfig codec;
  SiGenConfig si;
  int width = 64;
  int height = 64;
};

/// Per-picture target used by the simulator.
Frame picture_target(PictureId id, const SimulationConfig& cfg);

/// Replays `trace` over `graph`. Every destination gets one M-frame merged
/// from the SI frames of all its origins; each switch decodes it with the SI
/// of the origin actually taken and checks the other origins give the same
/// picture.
SwitchReport simulate_switch(const InteractivityGraph& graph,
                             const std::vector<std::pair<PictureId, PictureId>>& trace,
                             const SimulationConfig& cfg);

/// The target intra-coded at the three QPs whose rates come closest to 2.0x,
/// 1.0x and 0.9x its rate at cfg.si.qp_si, merged into one M-frame.
struct LadderReport {
  std::vector<int> qps;
  std::vector<double> rate_ratios;
  DestinationRate rate;
  bool drift = false;
};

LadderReport aimd_ladder(const Frame& target, const SimulationConfig& cfg);

}  // namespace mframe

#endif  // MFRAME_SI_HARNESS_HPP

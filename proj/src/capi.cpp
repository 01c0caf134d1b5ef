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

#include "mframe/mframe.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mframe/codec.hpp"
#include "mframe/error.hpp"
#include "mframe/eval.hpp"
#include "mframe/frame.hpp"
#include "mframe/si_harness.hpp"

struct mf_frame {
  mframe::Frame frame;
};

struct mf_bitstream {
  std::vector<std::uint8_t> bytes;
};

struct mf_config {
  mframe::CodecConfig codec;
  mframe::SiGenConfig si;
  int width = 64;
  int height = 64;
  int corpus = 8;
};

namespace {

thread_local std::string last_error;

mf_status status_of(mframe::ErrorKind kind) {
  using mframe::ErrorKind;
  switch (kind) {
    case ErrorKind::Config: return MF_E_CONFIG;
    case ErrorKind::Structure: return MF_E_STRUCTURE;
    case ErrorKind::Infeasible: return MF_E_INFEASIBLE;
    case ErrorKind::Contract: return MF_E_CONTRACT;
    case ErrorKind::Checksum: return MF_E_CHECKSUM;
    case ErrorKind::Malformed: return MF_E_MALFORMED;
    case ErrorKind::Dimension: return MF_E_DIMENSION;
    case ErrorKind::Io: return MF_E_IO;
  }
  return MF_E_INTERNAL;
}

mf_status fail_with(mf_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class F>
mf_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return MF_OK;
  } catch (const mframe::Error& e) {
    return fail_with(status_of(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail_with(MF_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail_with(MF_E_INTERNAL, e.what());
  }
}

#define MF_REQUIRE(cond, what) \
  do {                         \
    if (!(cond)) return fail_with(MF_E_INVALID_ARGUMENT, what); \
  } while (0)

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    mframe::fail(mframe::ErrorKind::Config, key + " expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    mframe::fail(mframe::ErrorKind::Config, key + " expects an unsigned integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    mframe::fail(mframe::ErrorKind::Config, key + " expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  mframe::fail(mframe::ErrorKind::Config, key + " expects a boolean, got '" + v + "'");
}

void apply(mf_config& c, const std::string& key, const std::string& v) {
  using namespace mframe;
  if (key == "mode") {
    if (v == "fixed") c.codec.mode = MergeMode::Fixed;
    else if (v == "optimized") c.codec.mode = MergeMode::Optimized;
    else fail(ErrorKind::Config, "mode must be fixed or optimized");
  } else if (key == "qp_si") {
    c.codec.qp_si = c.si.qp_si = parse_int(key, v);
  } else if (key == "lambda") {
    if (v == "auto") c.codec.lambda.reset();
    else c.codec.lambda = parse_double(key, v);
  } else if (key == "block_edge") {
    c.codec.block_edge = c.si.block_edge = parse_int(key, v);
  } else if (key == "scan") {
    if (v == "zigzag") c.codec.scan = ScanOrder::ZigZag;
    else if (v == "raster") c.codec.scan = ScanOrder::Raster;
    else fail(ErrorKind::Config, "scan must be zigzag or raster");
  } else if (key == "rd_eob") {
    c.codec.rd_eob = parse_bool(key, v);
  } else if (key == "frequency_fallback") {
    c.codec.frequency_fallback = parse_bool(key, v);
  } else if (key == "frame_fallback") {
    c.codec.frame_fallback = parse_bool(key, v);
  } else if (key == "max_spikes") {
    c.codec.search.max_spikes = parse_int(key, v);
  } else if (key == "patience") {
    c.codec.search.patience = parse_int(key, v);
  } else if (key == "full_sweep") {
    c.codec.search.full_sweep = parse_bool(key, v);
  } else if (key == "n_si") {
    c.si.n_si = parse_int(key, v);
  } else if (key == "seed") {
    c.si.seed = parse_u64(key, v);
  } else if (key == "divergence") {
    if (v == "noise") c.si.model = DivergenceModel::QuantizedNoise;
    else if (v == "shift") c.si.model = DivergenceModel::ShiftedContent;
    else if (v == "mixed") c.si.model = DivergenceModel::Mixed;
    else fail(ErrorKind::Config, "divergence must be noise, shift or mixed");
  } else if (key == "noise_scale") {
    c.si.noise_scale = parse_double(key, v);
  } else if (key == "width") {
    c.width = parse_int(key, v);
  } else if (key == "height") {
    c.height = parse_int(key, v);
  } else if (key == "corpus") {
    c.corpus = parse_int(key, v);
    if (c.corpus < 1) fail(ErrorKind::Config, "corpus must be >= 1");
  } else {
    fail(ErrorKind::Config, "unknown configuration key '" + key + "'");
  }
}

mframe::SimulationConfig simulation_of(const mf_config& c) {
  mframe::SimulationConfig s;
  s.codec = c.codec;
  s.si = c.si;
  s.width = c.width;
  s.height = c.height;
  return s;
}

}  // namespace

extern "C" {

const char* mf_version(void) { return "1.0.0"; }

const char* mf_status_string(mf_status status) {
  switch (status) {
    case MF_OK: return "ok";
    case MF_E_CONFIG: return "configuration error";
    case MF_E_STRUCTURE: return "structure error";
    case MF_E_INFEASIBLE: return "infeasible step size";
    case MF_E_CONTRACT: return "contract violation";
    case MF_E_CHECKSUM: return "checksum mismatch";
    case MF_E_MALFORMED: return "malformed stream";
    case MF_E_DIMENSION: return "dimension mismatch";
    case MF_E_IO: return "I/O error";
    case MF_E_INVALID_ARGUMENT: return "invalid argument";
    case MF_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mf_last_error(void) { return last_error.c_str(); }

void mf_string_free(char* s) { std::free(s); }

mf_status mf_frame_create(int width, int height, const uint8_t* samples, mf_frame** out) {
  MF_REQUIRE(out, "out is NULL");
  MF_REQUIRE(width > 0 && height > 0, "frame size must be positive");
  return guarded([&] {
    auto f = std::make_unique<mf_frame>();
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<std::uint8_t> data(n, 0);
    if (samples) std::copy(samples, samples + n, data.begin());
    f->frame = mframe::Frame(width, height, std::move(data));
    *out = f.release();
  });
}

mf_status mf_frame_read_raw(const char* path, int width, int height, int frame_index, int yuv420,
                            mf_frame** out) {
  MF_REQUIRE(path && out, "path or out is NULL");
  return guarded([&] {
    auto f = std::make_unique<mf_frame>();
    f->frame = mframe::read_raw(path, width, height, frame_index, yuv420 != 0);
    *out = f.release();
  });
}

mf_status mf_frame_write_raw(const mf_frame* frame, const char* path) {
  MF_REQUIRE(frame && path, "frame or path is NULL");
  return guarded([&] { mframe::write_raw(path, frame->frame); });
}

mf_status mf_frame_synthetic(int width, int height, uint64_t seed, mf_frame** out) {
  MF_REQUIRE(out, "out is NULL");
  return guarded([&] {
    auto f = std::make_unique<mf_frame>();
    f->frame = mframe::synthetic_frame(width, height, seed);
    *out = f.release();
  });
}

int mf_frame_width(const mf_frame* frame) { return frame ? frame->frame.width() : 0; }
int mf_frame_height(const mf_frame* frame) { return frame ? frame->frame.height() : 0; }
const uint8_t* mf_frame_data(const mf_frame* frame) {
  return frame ? frame->frame.samples().data() : nullptr;
}
int mf_frame_equal(const mf_frame* a, const mf_frame* b) {
  return a && b && a->frame == b->frame ? 1 : 0;
}
void mf_frame_destroy(mf_frame* frame) { delete frame; }

mf_status mf_config_create(mf_config** out) {
  MF_REQUIRE(out, "out is NULL");
  return guarded([&] { *out = new mf_config(); });
}

mf_status mf_config_set(mf_config* config, const char* key, const char* value) {
  MF_REQUIRE(config && key && value, "config, key or value is NULL");
  return guarded([&] { apply(*config, trim(key), trim(value)); });
}

mf_status mf_config_load(mf_config* config, const char* path) {
  MF_REQUIRE(config && path, "config or path is NULL");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) mframe::fail(mframe::ErrorKind::Io, std::string("cannot open config file ") + path);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        mframe::fail(mframe::ErrorKind::Config,
                     std::string(path) + ":" + std::to_string(number) + ": expected key=value");
      apply(*config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  });
}

void mf_config_destroy(mf_config* config) { delete config; }

mf_status mf_encode(const mf_config* config, const mf_frame* const* si_frames, size_t si_count,
                    const mf_frame* target, mf_bitstream** out, mf_frame** recon,
                    mf_encode_stats* stats) {
  MF_REQUIRE(config && target && out, "config, target or out is NULL");
  MF_REQUIRE(si_frames || si_count == 0, "si_frames is NULL");
  return guarded([&] {
    std::vector<mframe::Frame> si;
    for (size_t i = 0; i < si_count; ++i) {
      if (!si_frames[i]) mframe::fail(mframe::ErrorKind::Contract, "SI frame handle is NULL");
      si.push_back(si_frames[i]->frame);
    }
    auto result = mframe::encode_mframe(si, target->frame, config->codec);
    auto bits = std::make_unique<mf_bitstream>();
    bits->bytes = std::move(result.bitstream);
    if (recon) {
      auto f = std::make_unique<mf_frame>();
      f->frame = std::move(result.reconstruction);
      *recon = f.release();
    }
    if (stats) {
      const auto& r = result.report;
      *stats = mf_encode_stats{r.distortion,
                               r.rate_bits,
                               r.lambda,
                               r.lagrangian,
                               r.skip_blocks,
                               r.intra_blocks,
                               r.merge_blocks,
                               r.frequency_groups,
                               r.frame_fallback ? 1 : 0,
                               r.emitted_mode == mframe::MergeMode::Optimized ? MF_MODE_OPTIMIZED
                                                                              : MF_MODE_FIXED};
    }
    *out = bits.release();
  });
}

mf_status mf_decode(const mf_bitstream* bits, const mf_frame* si, mf_frame** out) {
  MF_REQUIRE(bits && si && out, "bits, si or out is NULL");
  return guarded([&] {
    auto f = std::make_unique<mf_frame>();
    f->frame = mframe::decode_mframe(bits->bytes, si->frame);
    *out = f.release();
  });
}

mf_status mf_bitstream_from_bytes(const uint8_t* data, size_t size, mf_bitstream** out) {
  MF_REQUIRE(out && (data || size == 0), "data or out is NULL");
  return guarded([&] {
    auto b = std::make_unique<mf_bitstream>();
    b->bytes.assign(data, data + size);
    *out = b.release();
  });
}

mf_status mf_bitstream_read(const char* path, mf_bitstream** out) {
  MF_REQUIRE(path && out, "path or out is NULL");
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) mframe::fail(mframe::ErrorKind::Io, std::string("cannot open ") + path);
    auto b = std::make_unique<mf_bitstream>();
    b->bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) mframe::fail(mframe::ErrorKind::Io, std::string("read failed: ") + path);
    *out = b.release();
  });
}

mf_status mf_bitstream_write(const mf_bitstream* bits, const char* path) {
  MF_REQUIRE(bits && path, "bits or path is NULL");
  return guarded([&] {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) mframe::fail(mframe::ErrorKind::Io, std::string("cannot create ") + path);
    outf.write(reinterpret_cast<const char*>(bits->bytes.data()),
               static_cast<std::streamsize>(bits->bytes.size()));
    if (!outf) mframe::fail(mframe::ErrorKind::Io, std::string("write failed: ") + path);
  });
}

const uint8_t* mf_bitstream_data(const mf_bitstream* bits) { return bits ? bits->bytes.data() : nullptr; }
size_t mf_bitstream_size(const mf_bitstream* bits) { return bits ? bits->bytes.size() : 0; }

mf_status mf_bitstream_dimensions(const mf_bitstream* bits, int* width, int* height) {
  MF_REQUIRE(bits && width && height, "bits, width or height is NULL");
  return guarded([&] {
    const auto h = mframe::read_header(bits->bytes);
    *width = h.width;
    *height = h.height;
  });
}

void mf_bitstream_destroy(mf_bitstream* bits) { delete bits; }

mf_status mf_generate_si(const mf_config* config, const mf_frame* target, mf_frame** out,
                         size_t capacity, size_t* produced) {
  MF_REQUIRE(config && target && out && produced, "config, target, out or produced is NULL");
  MF_REQUIRE(capacity >= static_cast<size_t>(std::max(config->si.n_si, 0)), "capacity below n_si");
  return guarded([&] {
    mframe::SiGenConfig cfg = config->si;
    cfg.qp_si = config->codec.qp_si;
    cfg.block_edge = config->codec.block_edge;
    auto set = mframe::generate_si_set(target->frame, cfg);
    std::vector<std::unique_ptr<mf_frame>> owned;
    for (auto& f : set.frames) {
      owned.push_back(std::make_unique<mf_frame>());
      owned.back()->frame = std::move(f);
    }
    for (size_t i = 0; i < owned.size(); ++i) out[i] = owned[i].release();
    *produced = owned.size();
  });
}

mf_status mf_psnr(const mf_frame* a, const mf_frame* b, double* out_db) {
  MF_REQUIRE(a && b && out_db, "a, b or out_db is NULL");
  return guarded([&] { *out_db = mframe::psnr(a->frame, b->frame); });
}

double mf_lambda_from_qp(double qp) { return mframe::lambda_from_qp(qp); }

mf_status mf_bd_rate(const double* rate_a, const double* psnr_a, size_t count_a, const double* rate_b,
                     const double* psnr_b, size_t count_b, double* out_percent) {
  MF_REQUIRE(rate_a && psnr_a && rate_b && psnr_b && out_percent, "NULL curve data");
  return guarded([&] {
    mframe::RdCurve a, b;
    for (size_t i = 0; i < count_a; ++i) a.points.push_back({0, 0.0, rate_a[i], psnr_a[i], 0.0, false});
    for (size_t i = 0; i < count_b; ++i) b.points.push_back({0, 0.0, rate_b[i], psnr_b[i], 0.0, false});
    *out_percent = mframe::bd_rate(a, b);
  });
}

mf_status mf_sweep(const mf_config* config, const char* method, const int* qps, const double* lambdas,
                   size_t count, char** csv, char** svg) {
  MF_REQUIRE(config && method && (qps || count == 0), "config, method or qps is NULL");
  return guarded([&] {
    using mframe::SweepMethod;
    std::vector<SweepMethod> methods;
    std::stringstream list(method);
    for (std::string m; std::getline(list, m, ',');) {
      m = trim(m);
      if (m == "optimized") methods.push_back(SweepMethod::MFrameOptimized);
      else if (m == "fixed") methods.push_back(SweepMethod::MFrameFixed);
      else if (m == "intra") methods.push_back(SweepMethod::IntraRefresh);
      else mframe::fail(mframe::ErrorKind::Config, "method must be optimized, fixed or intra, got '" + m + "'");
    }
    if (methods.empty()) mframe::fail(mframe::ErrorKind::Config, "no sweep method given");

    auto corpus = mframe::synthetic_corpus(config->corpus, config->width, config->height,
                                           config->si.seed, config->si.n_si);
    corpus.si.model = config->si.model;
    corpus.si.noise_scale = config->si.noise_scale;
    std::vector<mframe::SweepSetting> settings;
    for (size_t i = 0; i < count; ++i) {
      mframe::SweepSetting s;
      s.qp = qps[i];
      if (lambdas) s.lambda = lambdas[i];
      settings.push_back(s);
    }
    std::vector<mframe::RdCurve> curves;
    for (auto sm : methods) curves.push_back(mframe::rd_sweep(corpus, sm, settings, config->codec));
    std::string csv_text = mframe::curves_to_csv(curves);
    std::string svg_text = mframe::curves_to_svg(curves, "PSNR vs rate");
    char* c = csv ? dup_string(csv_text) : nullptr;
    char* s = nullptr;
    try {
      s = svg ? dup_string(svg_text) : nullptr;
    } catch (...) {
      std::free(c);
      throw;
    }
    if (csv) *csv = c;
    if (svg) *svg = s;
  });
}

mf_status mf_simulate(const mf_config* config, const char* topology, char** csv, char** json,
                      int* drift) {
  MF_REQUIRE(config && topology, "config or topology is NULL");
  return guarded([&] {
    using namespace mframe;
    const std::string t = topology;
    const auto sim = simulation_of(*config);
    std::string csv_text, json_text;
    bool any = false;
    if (t == "ladder") {
      const Frame target = picture_target({0, 0}, sim);
      const auto r = aimd_ladder(target, sim);
      std::ostringstream os;
      os << "stream,qp,rate_ratio,si_bits\n";
      for (std::size_t i = 0; i < r.qps.size(); ++i)
        os << i << ',' << r.qps[i] << ',' << r.rate_ratios[i] << ',' << r.rate.si_bits[i] << '\n';
      os << "mframe_bits," << r.rate.mframe_bits << "\naverage_bits," << r.rate.average_bits
         << "\nworst_bits," << r.rate.worst_bits << '\n';
      csv_text = os.str();
      nlohmann::json j = {{"qps", r.qps},
                          {"rate_ratios", r.rate_ratios},
                          {"si_bits", r.rate.si_bits},
                          {"mframe_bits", r.rate.mframe_bits},
                          {"average_bits", r.rate.average_bits},
                          {"worst_bits", r.rate.worst_bits},
                          {"drift", r.drift}};
      json_text = j.dump(2);
      any = r.drift;
    } else {
      InteractivityGraph g;
      if (t == "two-to-one") g = InteractivityGraph::two_to_one();
      else if (t == "three-view") g = InteractivityGraph::static_three_view();
      else fail(ErrorKind::Config, "topology must be two-to-one, three-view or ladder");
      std::vector<std::pair<PictureId, PictureId>> trace;
      for (const auto& [a, b] : g.edges()) trace.emplace_back(g.nodes()[a], g.nodes()[b]);
      const auto report = simulate_switch(g, trace, sim);
      csv_text = report.to_csv();
      json_text = report.to_json();
      any = report.any_drift();
    }
    char* c = csv ? dup_string(csv_text) : nullptr;
    char* j = nullptr;
    try {
      j = json ? dup_string(json_text) : nullptr;
    } catch (...) {
      std::free(c);
      throw;
    }
    if (csv) *csv = c;
    if (json) *json = j;
    if (drift) *drift = any ? 1 : 0;
  });
}

}  // extern "C"

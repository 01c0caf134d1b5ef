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

// mframe command-line front end. Talks to the codec only through the C API.

#include <CLI11.hpp>

#include <cstdio>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mframe/mframe.h"

namespace {

enum Exit { kOk = 0, kDrift = 1, kUsage = 2, kIo = 3 };

struct Failure {
  int code;
};

int exit_code(mf_status s) {
  switch (s) {
    case MF_OK: return kOk;
    case MF_E_IO: return kIo;
    case MF_E_CONFIG:
    case MF_E_INVALID_ARGUMENT:
    case MF_E_DIMENSION: return kUsage;
    default: return kDrift;
  }
}

void check(mf_status s, const std::string& what) {
  if (s == MF_OK) return;
  std::cerr << "mframe: " << what << ": " << mf_status_string(s);
  if (*mf_last_error()) std::cerr << ": " << mf_last_error();
  std::cerr << '\n';
  throw Failure{exit_code(s)};
}

struct FrameDeleter {
  void operator()(mf_frame* f) const { mf_frame_destroy(f); }
};
struct BitsDeleter {
  void operator()(mf_bitstream* b) const { mf_bitstream_destroy(b); }
};
struct ConfigDeleter {
  void operator()(mf_config* c) const { mf_config_destroy(c); }
};
struct StringDeleter {
  void operator()(char* s) const { mf_string_free(s); }
};
using FramePtr = std::unique_ptr<mf_frame, FrameDeleter>;
using BitsPtr = std::unique_ptr<mf_bitstream, BitsDeleter>;
using ConfigPtr = std::unique_ptr<mf_config, ConfigDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

/// Codec settings exposed as flags; each maps onto one config key and, when
/// given, overrides the config file.
class Settings {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    values_.emplace_back();
    entries_.push_back({app->add_option(flag, values_.back(), help), key, &values_.back()});
  }

  void add_codec(CLI::App* app) {
    add(app, "--mode", "mode", "fixed | optimized");
    add(app, "--qp", "qp_si", "QP of the SI frames");
    add(app, "--lambda", "lambda", "Lagrange multiplier (default from --qp)");
    add(app, "--block", "block_edge", "block edge: 4, 8 or 16");
    add(app, "--scan", "scan", "zigzag | raster");
    add(app, "--rd-eob", "rd_eob", "RD-placed end of block (optimized mode)");
    add(app, "--max-spikes", "max_spikes", "cap on spikes per frequency");
    add(app, "--full-sweep", "full_sweep", "try every spike count");
    add(app, "--frame-fallback", "frame_fallback", "emit the fixed stream when cheaper");
  }

  void add_harness(CLI::App* app) {
    add(app, "--n-si", "n_si", "number of SI frames");
    add(app, "--seed", "seed", "harness seed");
    add(app, "--divergence", "divergence", "noise | shift | mixed");
    add(app, "--noise-scale", "noise_scale", "SI noise amplitude in quantizer steps");
    add(app, "--width,-W", "width", "frame width");
    add(app, "--height,-H", "height", "frame height");
  }

  void apply(mf_config* cfg) const {
    for (const auto& e : entries_)
      if (e.option->count() > 0) check(mf_config_set(cfg, e.key.c_str(), e.value->c_str()), "--" + e.key);
  }

 private:
  struct Entry {
    CLI::Option* option;
    std::string key;
    std::string* value;
  };
  std::deque<std::string> values_;
  std::vector<Entry> entries_;
};

struct Geometry {
  int width = 64;
  int height = 64;
  int frame_index = 0;
  bool yuv420 = false;
};

FramePtr load_frame(const std::string& path, const Geometry& g) {
  mf_frame* f = nullptr;
  check(mf_frame_read_raw(path.c_str(), g.width, g.height, g.frame_index, g.yuv420 ? 1 : 0, &f), path);
  return FramePtr(f);
}

void write_text(const std::string& path, const char* text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    std::cerr << "mframe: cannot write " << path << '\n';
    throw Failure{kIo};
  }
}

std::vector<int> parse_ints(const std::string& list) {
  std::vector<int> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_doubles(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  return out;
}

/// method -> (rates, psnrs) from a sweep CSV.
std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> read_curves(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "mframe: cannot open " << path << '\n';
    throw Failure{kIo};
  }
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> curves;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() < 5) continue;
    curves[cells[0]].first.push_back(std::stod(cells[3]));
    curves[cells[0]].second.push_back(std::stod(cells[4]));
  }
  return curves;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"M-frame codec: drift-free merging of side-information frames"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config,-c", config_path, "key=value configuration file")->check(CLI::ExistingFile);

  // encode
  auto* enc = app.add_subcommand("encode", "merge SI frames into an M-frame");
  Settings enc_settings;
  Geometry enc_geo;
  std::string enc_target, enc_out, enc_recon;
  std::vector<std::string> enc_si;
  enc->add_option("--target,-t", enc_target, "target picture (raw 8-bit)")->required();
  enc->add_option("--si,-s", enc_si, "SI picture, repeat per frame")->required();
  enc->add_option("--output,-o", enc_out, "M-frame bitstream")->required();
  enc->add_option("--recon", enc_recon, "write the canonical reconstruction");
  enc->add_option("--frame-index", enc_geo.frame_index, "picture index inside YUV files");
  enc->add_flag("--yuv420", enc_geo.yuv420, "inputs are 4:2:0 YUV, luma is used");
  enc_settings.add_codec(enc);
  enc_settings.add(enc, "--width,-W", "width", "frame width");
  enc_settings.add(enc, "--height,-H", "height", "frame height");

  // decode
  auto* dec = app.add_subcommand("decode", "reconstruct the target from one SI frame");
  std::string dec_in, dec_si, dec_out;
  dec->add_option("--input,-i", dec_in, "M-frame bitstream")->required();
  dec->add_option("--si,-s", dec_si, "SI picture available at the decoder")->required();
  dec->add_option("--output,-o", dec_out, "decoded picture")->required();

  // verify
  auto* ver = app.add_subcommand("verify", "decode with every SI frame and check they agree");
  std::string ver_in, ver_target;
  std::vector<std::string> ver_si;
  ver->add_option("--input,-i", ver_in, "M-frame bitstream")->required();
  ver->add_option("--si,-s", ver_si, "SI picture, repeat per frame")->required();
  ver->add_option("--target,-t", ver_target, "report PSNR against this picture");

  // gensi
  auto* gen = app.add_subcommand("gensi", "generate a seeded SI set for a target");
  Settings gen_settings;
  std::string gen_target, gen_prefix;
  long long gen_synthetic = -1;
  gen->add_option("--target,-t", gen_target, "target picture (raw 8-bit)");
  gen->add_option("--synthetic", gen_synthetic, "use a synthetic target with this seed");
  gen->add_option("--prefix,-p", gen_prefix, "output prefix")->required();
  gen_settings.add(gen, "--qp", "qp_si", "QP of the SI frames");
  gen_settings.add(gen, "--block", "block_edge", "block edge: 4, 8 or 16");
  gen_settings.add_harness(gen);

  // sweep
  auto* swp = app.add_subcommand("sweep", "RD sweep over a synthetic corpus");
  Settings swp_settings;
  std::string swp_methods = "optimized,fixed,intra", swp_qps = "22,27,32,37", swp_lambdas, swp_csv, swp_svg;
  swp->add_option("--methods", swp_methods, "comma list of optimized, fixed, intra")->capture_default_str();
  swp->add_option("--qps", swp_qps, "comma list of QP_SI values")->capture_default_str();
  swp->add_option("--lambdas", swp_lambdas, "comma list of lambdas, one per QP");
  swp->add_option("--csv", swp_csv, "CSV output (stdout when omitted)");
  swp->add_option("--svg", swp_svg, "SVG plot output");
  swp_settings.add_codec(swp);
  swp_settings.add_harness(swp);
  swp_settings.add(swp, "--corpus", "corpus", "number of corpus pictures");

  // bdrate
  auto* bdr = app.add_subcommand("bdrate", "Bjontegaard delta rate between two sweep curves");
  std::string bdr_csv, bdr_test = "mframe-optimized", bdr_anchor = "intra-refresh";
  bdr->add_option("--csv", bdr_csv, "sweep CSV")->required()->check(CLI::ExistingFile);
  bdr->add_option("--test", bdr_test, "method under test")->capture_default_str();
  bdr->add_option("--anchor", bdr_anchor, "anchor method")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "replay stream switches and check for drift");
  Settings sim_settings;
  std::string sim_topology = "two-to-one", sim_csv, sim_json;
  sim->add_option("--topology", sim_topology, "two-to-one | three-view | ladder")->capture_default_str();
  sim->add_option("--csv", sim_csv, "CSV report (stdout when omitted)");
  sim->add_option("--json", sim_json, "JSON report");
  sim_settings.add_codec(sim);
  sim_settings.add_harness(sim);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    mf_config* raw_cfg = nullptr;
    check(mf_config_create(&raw_cfg), "config");
    ConfigPtr cfg(raw_cfg);
    if (!config_path.empty()) check(mf_config_load(cfg.get(), config_path.c_str()), config_path);

    if (*enc) {
      enc_settings.apply(cfg.get());
      Geometry g = enc_geo;
      if (auto* o = enc->get_option("--width"); o->count()) g.width = std::stoi(o->as<std::string>());
      if (auto* o = enc->get_option("--height"); o->count()) g.height = std::stoi(o->as<std::string>());
      mf_bitstream* bits = nullptr;
      std::vector<FramePtr> si;
      std::vector<const mf_frame*> si_raw;
      const FramePtr target = load_frame(enc_target, g);
      for (const auto& p : enc_si) {
        si.push_back(load_frame(p, g));
        si_raw.push_back(si.back().get());
      }
      mf_frame* recon = nullptr;
      mf_encode_stats stats{};
      check(mf_encode(cfg.get(), si_raw.data(), si_raw.size(), target.get(), &bits,
                      enc_recon.empty() ? nullptr : &recon, &stats),
            "encode");
      const BitsPtr owned(bits);
      const FramePtr owned_recon(recon);
      check(mf_bitstream_write(owned.get(), enc_out.c_str()), enc_out);
      if (owned_recon) check(mf_frame_write_raw(owned_recon.get(), enc_recon.c_str()), enc_recon);
      std::printf("rate_bits=%llu distortion=%.3f lambda=%.6g lagrangian=%.3f skip=%d intra=%d merge=%d "
                  "mode=%s fallback=%d\n",
                  static_cast<unsigned long long>(stats.rate_bits), stats.distortion, stats.lambda,
                  stats.lagrangian, stats.skip_blocks, stats.intra_blocks, stats.merge_blocks,
                  stats.emitted_mode == MF_MODE_OPTIMIZED ? "optimized" : "fixed", stats.frame_fallback);
      return kOk;
    }

    if (*dec) {
      mf_bitstream* bits = nullptr;
      check(mf_bitstream_read(dec_in.c_str(), &bits), dec_in);
      const BitsPtr owned(bits);
      Geometry g;
      check(mf_bitstream_dimensions(owned.get(), &g.width, &g.height), dec_in);
      const FramePtr si = load_frame(dec_si, g);
      mf_frame* out = nullptr;
      check(mf_decode(owned.get(), si.get(), &out), "decode");
      const FramePtr decoded(out);
      check(mf_frame_write_raw(decoded.get(), dec_out.c_str()), dec_out);
      return kOk;
    }

    if (*ver) {
      mf_bitstream* bits = nullptr;
      check(mf_bitstream_read(ver_in.c_str(), &bits), ver_in);
      const BitsPtr owned(bits);
      Geometry g;
      check(mf_bitstream_dimensions(owned.get(), &g.width, &g.height), ver_in);
      std::vector<FramePtr> decoded;
      for (const auto& p : ver_si) {
        const FramePtr si = load_frame(p, g);
        mf_frame* out = nullptr;
        check(mf_decode(owned.get(), si.get(), &out), "decode with " + p);
        decoded.emplace_back(out);
      }
      bool drift = false;
      for (std::size_t i = 1; i < decoded.size(); ++i)
        drift = drift || !mf_frame_equal(decoded[0].get(), decoded[i].get());
      std::printf("si_frames=%zu drift=%d\n", decoded.size(), drift ? 1 : 0);
      if (!ver_target.empty()) {
        const FramePtr target = load_frame(ver_target, g);
        double db = 0.0;
        check(mf_psnr(decoded[0].get(), target.get(), &db), "psnr");
        std::printf("psnr_db=%.4f\n", db);
      }
      return drift ? kDrift : kOk;
    }

    if (*gen) {
      gen_settings.apply(cfg.get());
      if (gen_target.empty() == (gen_synthetic < 0)) {
        std::cerr << "mframe: gensi needs exactly one of --target and --synthetic\n";
        return kUsage;
      }
      Geometry g;
      if (auto* o = gen->get_option("--width"); o->count()) g.width = std::stoi(o->as<std::string>());
      if (auto* o = gen->get_option("--height"); o->count()) g.height = std::stoi(o->as<std::string>());
      FramePtr target;
      if (gen_synthetic >= 0) {
        mf_frame* f = nullptr;
        check(mf_frame_synthetic(g.width, g.height, static_cast<uint64_t>(gen_synthetic), &f), "synthetic");
        target.reset(f);
        const std::string path = gen_prefix + "_target.raw";
        check(mf_frame_write_raw(target.get(), path.c_str()), path);
      } else {
        target = load_frame(gen_target, g);
      }
      std::vector<mf_frame*> out(256, nullptr);
      std::size_t produced = 0;
      check(mf_generate_si(cfg.get(), target.get(), out.data(), out.size(), &produced), "gensi");
      std::vector<FramePtr> owned;
      for (std::size_t i = 0; i < produced; ++i) owned.emplace_back(out[i]);
      for (std::size_t i = 0; i < produced; ++i) {
        const std::string path = gen_prefix + "_si" + std::to_string(i) + ".raw";
        check(mf_frame_write_raw(owned[i].get(), path.c_str()), path);
        std::printf("%s\n", path.c_str());
      }
      return kOk;
    }

    if (*swp) {
      swp_settings.apply(cfg.get());
      const auto qps = parse_ints(swp_qps);
      std::vector<double> lambdas;
      if (!swp_lambdas.empty()) {
        lambdas = parse_doubles(swp_lambdas);
        if (lambdas.size() != qps.size()) {
          std::cerr << "mframe: --lambdas needs one value per QP\n";
          return kUsage;
        }
      }
      char* csv = nullptr;
      char* svg = nullptr;
      check(mf_sweep(cfg.get(), swp_methods.c_str(), qps.data(), lambdas.empty() ? nullptr : lambdas.data(),
                     qps.size(), &csv, swp_svg.empty() ? nullptr : &svg),
            "sweep");
      const StringPtr csv_owned(csv), svg_owned(svg);
      if (swp_csv.empty()) std::fputs(csv, stdout);
      else write_text(swp_csv, csv);
      if (svg) write_text(swp_svg, svg);
      return kOk;
    }

    if (*bdr) {
      const auto curves = read_curves(bdr_csv);
      const auto t = curves.find(bdr_test), a = curves.find(bdr_anchor);
      if (t == curves.end() || a == curves.end()) {
        std::cerr << "mframe: curve '" << (t == curves.end() ? bdr_test : bdr_anchor) << "' not in " << bdr_csv
                  << '\n';
        return kUsage;
      }
      double pct = 0.0;
      check(mf_bd_rate(t->second.first.data(), t->second.second.data(), t->second.first.size(),
                       a->second.first.data(), a->second.second.data(), a->second.first.size(), &pct),
            "bdrate");
      std::printf("bd_rate_percent=%.4f\n", pct);
      return kOk;
    }

    if (*sim) {
      sim_settings.apply(cfg.get());
      char* csv = nullptr;
      char* json = nullptr;
      int drift = 0;
      check(mf_simulate(cfg.get(), sim_topology.c_str(), &csv, sim_json.empty() ? nullptr : &json, &drift),
            "simulate");
      const StringPtr csv_owned(csv), json_owned(json);
      if (sim_csv.empty()) std::fputs(csv, stdout);
      else write_text(sim_csv, csv);
      if (json) write_text(sim_json, json);
      return drift ? kDrift : kOk;
    }
  } catch (const Failure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "mframe: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}

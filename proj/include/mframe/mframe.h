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

/*
 * mframe C interface.
 *
 * Every object is an opaque handle owned by the caller and released with the
 * matching *_destroy function. Functions return MF_OK or an error status;
 * mf_last_error() holds the message of the most recent failure on the
 * calling thread.
 */

#ifndef MFRAME_H
#define MFRAME_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MFRAME_BUILDING)
#    define MF_API __declspec(dllexport)
#  else
#    define MF_API __declspec(dllimport)
#  endif
#else
#  define MF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mf_frame mf_frame;
typedef struct mf_bitstream mf_bitstream;
typedef struct mf_config mf_config;

typedef enum mf_status {
  MF_OK = 0,
  MF_E_CONFIG = 1,
  MF_E_STRUCTURE = 2,
  MF_E_INFEASIBLE = 3,
  MF_E_CONTRACT = 4,
  MF_E_CHECKSUM = 5,
  MF_E_MALFORMED = 6,
  MF_E_DIMENSION = 7,
  MF_E_IO = 8,
  MF_E_INVALID_ARGUMENT = 9,
  MF_E_INTERNAL = 10
} mf_status;

typedef enum mf_mode { MF_MODE_FIXED = 0, MF_MODE_OPTIMIZED = 1 } mf_mode;

typedef struct mf_encode_stats {
  double distortion;
  uint64_t rate_bits;
  double lambda;
  double lagrangian;
  int skip_blocks;
  int intra_blocks;
  int merge_blocks;
  int frequency_groups;
  int frame_fallback;
  int emitted_mode; /* mf_mode */
} mf_encode_stats;

MF_API const char* mf_version(void);
MF_API const char* mf_status_string(mf_status status);
MF_API const char* mf_last_error(void);

/* Strings returned through char** are allocated by the library. */
MF_API void mf_string_free(char* s);

/* --- frames ------------------------------------------------------------ */

MF_API mf_status mf_frame_create(int width, int height, const uint8_t* samples, mf_frame** out);
MF_API mf_status mf_frame_read_raw(const char* path, int width, int height, int frame_index,
                                   int yuv420, mf_frame** out);
MF_API mf_status mf_frame_write_raw(const mf_frame* frame, const char* path);
MF_API mf_status mf_frame_synthetic(int width, int height, uint64_t seed, mf_frame** out);
MF_API int mf_frame_width(const mf_frame* frame);
MF_API int mf_frame_height(const mf_frame* frame);
MF_API const uint8_t* mf_frame_data(const mf_frame* frame);
MF_API int mf_frame_equal(const mf_frame* a, const mf_frame* b);
MF_API void mf_frame_destroy(mf_frame* frame);

/* --- configuration ------------------------------------------------------ */

/*
 * Keys: mode (fixed|optimized), qp_si, lambda, block_edge, scan
 * (zigzag|raster), rd_eob, frequency_fallback, frame_fallback, max_spikes,
 * patience, full_sweep, n_si, seed, divergence (noise|shift|mixed),
 * noise_scale, width, height, corpus.
 */
MF_API mf_status mf_config_create(mf_config** out);
MF_API mf_status mf_config_set(mf_config* config, const char* key, const char* value);
/* key=value lines, '#' starts a comment. */
MF_API mf_status mf_config_load(mf_config* config, const char* path);
MF_API void mf_config_destroy(mf_config* config);

/* --- codec -------------------------------------------------------------- */

/* recon and stats may be NULL. */
MF_API mf_status mf_encode(const mf_config* config, const mf_frame* const* si_frames, size_t si_count,
                           const mf_frame* target, mf_bitstream** out, mf_frame** recon,
                           mf_encode_stats* stats);
MF_API mf_status mf_decode(const mf_bitstream* bits, const mf_frame* si, mf_frame** out);

MF_API mf_status mf_bitstream_from_bytes(const uint8_t* data, size_t size, mf_bitstream** out);
MF_API mf_status mf_bitstream_read(const char* path, mf_bitstream** out);
MF_API mf_status mf_bitstream_write(const mf_bitstream* bits, const char* path);
MF_API const uint8_t* mf_bitstream_data(const mf_bitstream* bits);
MF_API size_t mf_bitstream_size(const mf_bitstream* bits);
/* Frame size recorded in the stream header. */
MF_API mf_status mf_bitstream_dimensions(const mf_bitstream* bits, int* width, int* height);
MF_API void mf_bitstream_destroy(mf_bitstream* bits);

/* --- harness and evaluation -------------------------------------------- */

/* Writes n_si frames into out[0 .. capacity). */
MF_API mf_status mf_generate_si(const mf_config* config, const mf_frame* target, mf_frame** out,
                                size_t capacity, size_t* produced);

MF_API mf_status mf_psnr(const mf_frame* a, const mf_frame* b, double* out_db);
MF_API double mf_lambda_from_qp(double qp);

/* Bjontegaard delta rate of curve a against anchor b, in percent. */
MF_API mf_status mf_bd_rate(const double* rate_a, const double* psnr_a, size_t count_a,
                            const double* rate_b, const double* psnr_b, size_t count_b,
                            double* out_percent);

/*
 * RD sweep over a seeded synthetic corpus. method is a comma-separated list
 * of "optimized", "fixed" and "intra", one curve each. lambdas may be NULL to derive lambda from each QP. csv and svg may
 * be NULL.
 */
MF_API mf_status mf_sweep(const mf_config* config, const char* method, const int* qps,
                          const double* lambdas, size_t count, char** csv, char** svg);

/*
 * Switching simulation. topology is "two-to-one", "three-view" or "ladder".
 * drift receives 1 when any reconstruction differed between origins.
 */
MF_API mf_status mf_simulate(const mf_config* config, const char* topology, char** csv, char** json,
                             int* drift);

#ifdef __cplusplus
}
#endif

#endif /* MFRAME_H */

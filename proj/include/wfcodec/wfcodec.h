/* C interface to the wfcodec library.
 *
 * Every fallible call returns a wfc_status. On failure the message is
 * available from wfc_last_error() until the next call on the same thread.
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function; freeing NULL is a no-op.
 *
 * Chunk plans are passed as strings: "direct", "canonical:T" or
 * "explicit:a,b,c".
 */
#ifndef WFCODEC_H
#define WFCODEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(WFC_BUILDING_LIBRARY)
#define WFC_API __attribute__((visibility("default")))
#else
#define WFC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wfc_status {
    WFC_OK = 0,
    WFC_ERR_SHAPE = 1,
    WFC_ERR_PARAM = 2,
    WFC_ERR_FORMAT = 3,
    WFC_ERR_IO = 4,
    WFC_ERR_STATE = 5,
    WFC_ERR_WEIGHT = 6,
    WFC_ERR_VALUE = 7,
    WFC_ERR_INTERNAL = 8
} wfc_status;

WFC_API const char* wfc_last_error(void);
WFC_API const char* wfc_status_name(wfc_status status);
WFC_API const char* wfc_version(void);

#define WFC_DIGEST_SIZE 65 /* 64 hex characters and a terminator */

/* ---- tensors ---------------------------------------------------------- */

typedef struct wfc_tensor wfc_tensor;

typedef struct wfc_shape {
    size_t c, t, h, w;
} wfc_shape;

WFC_API wfc_status wfc_tensor_new(wfc_shape shape, float fill, wfc_tensor** out);
WFC_API wfc_status wfc_tensor_from_data(wfc_shape shape, const float* data, size_t count, wfc_tensor** out);
WFC_API wfc_status wfc_tensor_random_normal(wfc_shape shape, uint64_t seed, float mean, float stddev,
                                            wfc_tensor** out);
WFC_API wfc_status wfc_tensor_random_uniform(wfc_shape shape, uint64_t seed, float lo, float hi,
                                             wfc_tensor** out);
WFC_API wfc_status wfc_tensor_load(const char* path, wfc_tensor** out);
WFC_API wfc_status wfc_tensor_save(const wfc_tensor* t, const char* path);
/* Streaming outputs may carry zero frames. */
WFC_API wfc_shape wfc_tensor_shape(const wfc_tensor* t);
WFC_API const float* wfc_tensor_data(const wfc_tensor* t);
WFC_API wfc_status wfc_tensor_digest(const wfc_tensor* t, char out[WFC_DIGEST_SIZE]);
WFC_API wfc_status wfc_tensor_max_abs_diff(const wfc_tensor* a, const wfc_tensor* b, double* out);
WFC_API wfc_status wfc_tensor_concat_frames(const wfc_tensor* const* parts, size_t count, wfc_tensor** out);
WFC_API void wfc_tensor_free(wfc_tensor* t);

/* ---- wavelet pyramid --------------------------------------------------- */

typedef struct wfc_pyramid wfc_pyramid;

WFC_API wfc_status wfc_pyramid_build(const wfc_tensor* video, wfc_pyramid** out);
WFC_API wfc_status wfc_pyramid_reconstruct(const wfc_pyramid* p, wfc_tensor** out);
WFC_API wfc_status wfc_pyramid_save(const wfc_pyramid* p, const char* dir);
WFC_API wfc_status wfc_pyramid_load(const char* dir, wfc_pyramid** out);
WFC_API void wfc_pyramid_free(wfc_pyramid* p);

/* Max-abs error of a forward/inverse transform through 1..3 levels. */
WFC_API wfc_status wfc_roundtrip_error(const wfc_tensor* video, int levels, double* out);

/* ---- subband analysis ------------------------------------------------- */

typedef struct wfc_subband_stat {
    int level;
    char key[4];
    double energy;
    double energy_fraction;
    double entropy_bits;
    int degenerate; /* the whole level is zero; fractions are reported as 0 */
} wfc_subband_stat;

#define WFC_PYRAMID_BANDS 20 /* 8 + 8 + 4 */

WFC_API wfc_status wfc_analyze(const wfc_pyramid* p, size_t bins, wfc_subband_stat* out, size_t capacity,
                               size_t* count);

/* ---- causal cache ----------------------------------------------------- */

WFC_API wfc_status wfc_cache_len(size_t k_t, size_t s_t, size_t t_chunk, size_t m, int64_t* out);
WFC_API wfc_status wfc_cache_len_window_walk(size_t k_t, size_t s_t, size_t t_chunk, size_t m, int64_t* out);

/* Frames needed by each chunk of a plan over `total` frames. */
WFC_API wfc_status wfc_plan_chunks(const char* plan, size_t total, size_t* out, size_t capacity, size_t* count);

/* ---- model ------------------------------------------------------------ */

typedef enum wfc_norm { WFC_NORM_FRAME_LAYERNORM = 0, WFC_NORM_GROUPNORM = 1 } wfc_norm;

typedef struct wfc_config {
    char name[32];
    size_t base_channels;
    size_t c_flow;
    size_t latent_channels;
    size_t blocks_per_stage;
    wfc_norm norm;
} wfc_config;

WFC_API wfc_status wfc_config_preset(const char* name, size_t latent_channels, wfc_config* out);

typedef struct wfc_model wfc_model;

WFC_API wfc_status wfc_model_init(const wfc_config* config, uint64_t seed, wfc_model** out);
WFC_API wfc_status wfc_model_load(const wfc_config* config, const char* weights_path, wfc_model** out);
/* Same weights evaluated with a different normalization kind. */
WFC_API wfc_status wfc_model_with_norm(const wfc_model* m, wfc_norm norm, wfc_model** out);
WFC_API wfc_status wfc_model_save_weights(const wfc_model* m, const char* path);
WFC_API wfc_status wfc_model_digest(const wfc_model* m, char out[WFC_DIGEST_SIZE]);
WFC_API wfc_status wfc_model_parameter_count(const wfc_model* m, size_t* out);
WFC_API wfc_status wfc_model_config(const wfc_model* m, wfc_config* out);
WFC_API void wfc_model_free(wfc_model* m);

/* Level-2 (3D) and level-3 (2D) subbands, as predicted by the decoder or as
 * computed by the wavelet transform. */
typedef struct wfc_subbands wfc_subbands;

WFC_API wfc_status wfc_subbands_from_pyramid(const wfc_pyramid* p, wfc_subbands** out);
WFC_API wfc_status wfc_subbands_load(const char* dir, wfc_subbands** out);
WFC_API wfc_status wfc_subbands_save(const wfc_subbands* s, const char* dir);
WFC_API void wfc_subbands_free(wfc_subbands* s);

typedef struct wfc_encoded wfc_encoded;

WFC_API wfc_status wfc_encode(const wfc_model* m, const wfc_tensor* video, const char* plan, wfc_encoded** out);
WFC_API wfc_status wfc_encoded_mean(const wfc_encoded* e, wfc_tensor** out);
WFC_API wfc_status wfc_encoded_logvar(const wfc_encoded* e, wfc_tensor** out);
WFC_API wfc_status wfc_encoded_subbands(const wfc_encoded* e, wfc_subbands** out);
/* Latent frames produced per input chunk, as an "explicit:..." plan string
 * for the decoder. Writes at most `capacity` bytes including the terminator. */
WFC_API wfc_status wfc_encoded_decode_plan(const wfc_encoded* e, char* out, size_t capacity);
WFC_API void wfc_encoded_free(wfc_encoded* e);

typedef struct wfc_decoded wfc_decoded;

WFC_API wfc_status wfc_decode(const wfc_model* m, const wfc_tensor* latent, size_t original_frames,
                              const char* plan, wfc_decoded** out);
WFC_API wfc_status wfc_decoded_video(const wfc_decoded* d, wfc_tensor** out);
WFC_API wfc_status wfc_decoded_subbands(const wfc_decoded* d, wfc_subbands** out);
WFC_API void wfc_decoded_free(wfc_decoded* d);

/* z = mean + exp(logvar / 2) * eps, eps ~ N(0, 1) from the seeded stream. */
WFC_API wfc_status wfc_sample_latent(const wfc_tensor* mean, const wfc_tensor* logvar, uint64_t seed,
                                     wfc_tensor** out);

/* Chunk-by-chunk sessions. Outputs may have zero frames. */
typedef struct wfc_encoder_session wfc_encoder_session;
typedef struct wfc_decoder_session wfc_decoder_session;

WFC_API wfc_status wfc_encoder_session_new(const wfc_model* m, wfc_encoder_session** out);
WFC_API wfc_status wfc_encoder_session_push(wfc_encoder_session* s, const wfc_tensor* chunk, wfc_tensor** mean,
                                            wfc_tensor** logvar);
WFC_API wfc_status wfc_encoder_session_finalize(wfc_encoder_session* s);
WFC_API void wfc_encoder_session_free(wfc_encoder_session* s);

WFC_API wfc_status wfc_decoder_session_new(const wfc_model* m, wfc_decoder_session** out);
WFC_API wfc_status wfc_decoder_session_push(wfc_decoder_session* s, const wfc_tensor* latent_chunk,
                                            wfc_tensor** video);
WFC_API wfc_status wfc_decoder_session_finalize(wfc_decoder_session* s);
WFC_API void wfc_decoder_session_free(wfc_decoder_session* s);

/* ---- losses ----------------------------------------------------------- */

typedef struct wfc_loss_weights {
    double adv;
    double kl;
    double wl;
    double delta;
} wfc_loss_weights;

typedef struct wfc_loss_components {
    double recon;
    double perceptual;
    int has_perceptual;
    double adv;
    double kl;
    double wl;
} wfc_loss_components;

WFC_API wfc_loss_weights wfc_loss_weights_default(void);
WFC_API wfc_status wfc_l1_recon(const wfc_tensor* x, const wfc_tensor* x_hat, double* out);
WFC_API wfc_status wfc_wl_loss(const wfc_subbands* pred, const wfc_subbands* ref, double* out);
WFC_API wfc_status wfc_kl_divergence(const wfc_tensor* mean, const wfc_tensor* logvar, double* out);
WFC_API wfc_status wfc_adaptive_adv_weight(double grad_norm_recon, double grad_norm_adv, double delta,
                                           double* out);
WFC_API wfc_status wfc_total_loss(const wfc_loss_components* c, const wfc_loss_weights* w, double* out);

#ifdef __cplusplus
}
#endif

#endif

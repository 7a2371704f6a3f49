#include "wfcodec/wfcodec.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "wfcodec/causal_ops.hpp"
#include "wfcodec/chunk_plan.hpp"
#include "wfcodec/losses.hpp"
#include "wfcodec/subband_analysis.hpp"
#include "wfcodec/wavelet.hpp"
#include "wfcodec/wfvae_net.hpp"

struct wfc_tensor {
    wfc::Tensor value;
};
struct wfc_pyramid {
    wfc::WaveletPyramid value;
};
struct wfc_model {
    std::shared_ptr<const wfc::Model> value;
};
struct wfc_subbands {
    wfc::SubbandSet3D level2;
    wfc::SubbandSet2D level3;
    wfc::Shape original;
};
struct wfc_encoded {
    wfc::EncodeResult value;
    wfc::Shape original;
};
struct wfc_decoded {
    wfc::DecodeResult value;
};
struct wfc_encoder_session {
    wfc::EncoderSession value;
};
struct wfc_decoder_session {
    wfc::DecoderSession value;
};

namespace {

thread_local std::string last_error;

wfc_status status_of(wfc::ErrorKind k) {
    switch (k) {
    case wfc::ErrorKind::shape: return WFC_ERR_SHAPE;
    case wfc::ErrorKind::parameter: return WFC_ERR_PARAM;
    case wfc::ErrorKind::format: return WFC_ERR_FORMAT;
    case wfc::ErrorKind::io: return WFC_ERR_IO;
    case wfc::ErrorKind::state: return WFC_ERR_STATE;
    case wfc::ErrorKind::weight: return WFC_ERR_WEIGHT;
    case wfc::ErrorKind::value: return WFC_ERR_VALUE;
    }
    return WFC_ERR_INTERNAL;
}

template <class F> wfc_status guard(F&& f) {
    try {
        f();
        last_error.clear();
        return WFC_OK;
    } catch (const wfc::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return WFC_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return WFC_ERR_INTERNAL;
    }
}

template <class T> void require(const T* p, const char* what) {
    if (!p) throw wfc::ParameterError(std::string(what) + " is NULL");
}

wfc::Shape to_shape(wfc_shape s) { return wfc::Shape{s.c, s.t, s.h, s.w}; }

wfc_tensor* wrap(wfc::Tensor t) { return new wfc_tensor{std::move(t)}; }

void write_digest(const std::string& hex, char out[WFC_DIGEST_SIZE]) {
    std::memcpy(out, hex.c_str(), WFC_DIGEST_SIZE);
}

wfc::ModelConfig to_config(const wfc_config& c) {
    wfc::ModelConfig m;
    m.name = std::string(c.name, strnlen(c.name, sizeof c.name));
    m.base_channels = c.base_channels;
    m.c_flow = c.c_flow;
    m.latent_channels = c.latent_channels;
    m.blocks_per_stage = c.blocks_per_stage;
    if (c.norm != WFC_NORM_FRAME_LAYERNORM && c.norm != WFC_NORM_GROUPNORM)
        throw wfc::ParameterError("unknown normalization kind");
    m.norm = c.norm == WFC_NORM_GROUPNORM ? wfc::NormKind::groupnorm : wfc::NormKind::frame_layernorm;
    m.validate();
    return m;
}

wfc_config from_config(const wfc::ModelConfig& m) {
    wfc_config c{};
    std::strncpy(c.name, m.name.c_str(), sizeof c.name - 1);
    c.base_channels = m.base_channels;
    c.c_flow = m.c_flow;
    c.latent_channels = m.latent_channels;
    c.blocks_per_stage = m.blocks_per_stage;
    c.norm = m.norm == wfc::NormKind::groupnorm ? WFC_NORM_GROUPNORM : WFC_NORM_FRAME_LAYERNORM;
    return c;
}

} // namespace

extern "C" {

const char* wfc_last_error(void) { return last_error.c_str(); }

const char* wfc_status_name(wfc_status status) {
    switch (status) {
    case WFC_OK: return "ok";
    case WFC_ERR_SHAPE: return "shape error";
    case WFC_ERR_PARAM: return "parameter error";
    case WFC_ERR_FORMAT: return "format error";
    case WFC_ERR_IO: return "io error";
    case WFC_ERR_STATE: return "state error";
    case WFC_ERR_WEIGHT: return "weight error";
    case WFC_ERR_VALUE: return "value error";
    case WFC_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* wfc_version(void) { return "0.1.0"; }

// ---- tensors

wfc_status wfc_tensor_new(wfc_shape shape, float fill, wfc_tensor** out) {
    return guard([&] {
        require(out, "out");
        *out = wrap(wfc::new_tensor(shape.c, shape.t, shape.h, shape.w, fill));
    });
}

wfc_status wfc_tensor_from_data(wfc_shape shape, const float* data, size_t count, wfc_tensor** out) {
    return guard([&] {
        require(out, "out");
        require(data, "data");
        wfc::Tensor t = wfc::new_tensor(shape.c, shape.t, shape.h, shape.w, 0.0f);
        if (count != t.numel())
            throw wfc::ShapeError(std::to_string(count) + " values do not fill shape " + wfc::to_string(t.shape()));
        std::memcpy(t.data().data(), data, count * sizeof(float));
        if (!wfc::all_finite(t)) throw wfc::ValueError("tensor data contains non-finite values");
        *out = wrap(std::move(t));
    });
}

wfc_status wfc_tensor_random_normal(wfc_shape shape, uint64_t seed, float mean, float stddev, wfc_tensor** out) {
    return guard([&] {
        require(out, "out");
        wfc::Rng rng(seed);
        *out = wrap(wfc::random_normal(rng, to_shape(shape), mean, stddev));
    });
}

wfc_status wfc_tensor_random_uniform(wfc_shape shape, uint64_t seed, float lo, float hi, wfc_tensor** out) {
    return guard([&] {
        require(out, "out");
        wfc::Rng rng(seed);
        *out = wrap(wfc::random_uniform(rng, to_shape(shape), lo, hi));
    });
}

wfc_status wfc_tensor_load(const char* path, wfc_tensor** out) {
    return guard([&] {
        require(path, "path");
        require(out, "out");
        *out = wrap(wfc::load_tensor(path));
    });
}

wfc_status wfc_tensor_save(const wfc_tensor* t, const char* path) {
    return guard([&] {
        require(t, "tensor");
        require(path, "path");
        wfc::save_tensor(t->value, path);
    });
}

wfc_shape wfc_tensor_shape(const wfc_tensor* t) {
    if (!t) return wfc_shape{0, 0, 0, 0};
    const auto& s = t->value.shape();
    return wfc_shape{s.c, s.t, s.h, s.w};
}

const float* wfc_tensor_data(const wfc_tensor* t) { return t ? t->value.data().data() : nullptr; }

wfc_status wfc_tensor_digest(const wfc_tensor* t, char out[WFC_DIGEST_SIZE]) {
    return guard([&] {
        require(t, "tensor");
        require(out, "out");
        write_digest(wfc::digest(t->value), out);
    });
}

wfc_status wfc_tensor_max_abs_diff(const wfc_tensor* a, const wfc_tensor* b, double* out) {
    return guard([&] {
        require(a, "a");
        require(b, "b");
        require(out, "out");
        *out = wfc::max_abs_diff(a->value, b->value);
    });
}

wfc_status wfc_tensor_concat_frames(const wfc_tensor* const* parts, size_t count, wfc_tensor** out) {
    return guard([&] {
        require(parts, "parts");
        require(out, "out");
        if (count == 0) throw wfc::ParameterError("nothing to concatenate");
        std::vector<wfc::Tensor> v;
        v.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            require(parts[i], "part");
            v.push_back(parts[i]->value);
        }
        *out = wrap(wfc::concat_frames(v));
    });
}

void wfc_tensor_free(wfc_tensor* t) { delete t; }

// ---- wavelet pyramid

wfc_status wfc_pyramid_build(const wfc_tensor* video, wfc_pyramid** out) {
    return guard([&] {
        require(video, "video");
        require(out, "out");
        *out = new wfc_pyramid{wfc::build_pyramid(video->value)};
    });
}

wfc_status wfc_pyramid_reconstruct(const wfc_pyramid* p, wfc_tensor** out) {
    return guard([&] {
        require(p, "pyramid");
        require(out, "out");
        *out = wrap(wfc::reconstruct_pyramid(p->value));
    });
}

wfc_status wfc_pyramid_save(const wfc_pyramid* p, const char* dir) {
    return guard([&] {
        require(p, "pyramid");
        require(dir, "dir");
        wfc::save_pyramid(p->value, dir);
    });
}

wfc_status wfc_pyramid_load(const char* dir, wfc_pyramid** out) {
    return guard([&] {
        require(dir, "dir");
        require(out, "out");
        *out = new wfc_pyramid{wfc::load_pyramid(dir)};
    });
}

void wfc_pyramid_free(wfc_pyramid* p) { delete p; }

wfc_status wfc_roundtrip_error(const wfc_tensor* video, int levels, double* out) {
    return guard([&] {
        require(video, "video");
        require(out, "out");
        *out = wfc::roundtrip_error(video->value, levels);
    });
}

// ---- analysis

wfc_status wfc_analyze(const wfc_pyramid* p, size_t bins, wfc_subband_stat* out, size_t capacity, size_t* count) {
    return guard([&] {
        require(p, "pyramid");
        require(out, "out");
        require(count, "count");
        const auto levels = wfc::analyze_pyramid(p->value, bins);
        size_t n = 0;
        for (const auto& l : levels) n += l.bands.size();
        if (capacity < n) throw wfc::ParameterError("stat buffer holds " + std::to_string(capacity) + ", need " +
                                                    std::to_string(n));
        size_t i = 0;
        for (const auto& l : levels)
            for (const auto& b : l.bands) {
                wfc_subband_stat& s = out[i++];
                s = wfc_subband_stat{};
                s.level = b.level;
                std::strncpy(s.key, b.key.c_str(), sizeof s.key - 1);
                s.energy = b.energy;
                s.energy_fraction = b.energy_fraction;
                s.entropy_bits = b.entropy_bits;
                s.degenerate = l.degenerate ? 1 : 0;
            }
        *count = n;
    });
}

// ---- causal cache

wfc_status wfc_cache_len(size_t k_t, size_t s_t, size_t t_chunk, size_t m, int64_t* out) {
    return guard([&] {
        require(out, "out");
        *out = wfc::cache_len(k_t, s_t, t_chunk, m);
    });
}

wfc_status wfc_cache_len_window_walk(size_t k_t, size_t s_t, size_t t_chunk, size_t m, int64_t* out) {
    return guard([&] {
        require(out, "out");
        *out = wfc::cache_len_window_walk(k_t, s_t, t_chunk, m);
    });
}

wfc_status wfc_plan_chunks(const char* plan, size_t total, size_t* out, size_t capacity, size_t* count) {
    return guard([&] {
        require(plan, "plan");
        require(count, "count");
        const auto sizes = wfc::ChunkPlan::parse(plan).chunk_sizes(total);
        if (sizes.size() > capacity || (!out && !sizes.empty())) {
            *count = sizes.size();
            throw wfc::ParameterError("chunk buffer holds " + std::to_string(capacity) + ", need " +
                                      std::to_string(sizes.size()));
        }
        std::copy(sizes.begin(), sizes.end(), out);
        *count = sizes.size();
    });
}

// ---- model

wfc_status wfc_config_preset(const char* name, size_t latent_channels, wfc_config* out) {
    return guard([&] {
        require(name, "name");
        require(out, "out");
        *out = from_config(wfc::ModelConfig::preset(name, latent_channels));
    });
}

wfc_status wfc_model_init(const wfc_config* config, uint64_t seed, wfc_model** out) {
    return guard([&] {
        require(config, "config");
        require(out, "out");
        const auto c = to_config(*config);
        wfc::Rng rng(seed);
        *out = new wfc_model{wfc::Model::create(c, wfc::init_weights(c, rng))};
    });
}

wfc_status wfc_model_load(const wfc_config* config, const char* weights_path, wfc_model** out) {
    return guard([&] {
        require(config, "config");
        require(weights_path, "weights_path");
        require(out, "out");
        *out = new wfc_model{wfc::Model::create(to_config(*config), wfc::load_weights(weights_path))};
    });
}

wfc_status wfc_model_with_norm(const wfc_model* m, wfc_norm norm, wfc_model** out) {
    return guard([&] {
        require(m, "model");
        require(out, "out");
        wfc_config c = from_config(m->value->config());
        c.norm = norm;
        *out = new wfc_model{wfc::Model::create(to_config(c), m->value->weights())};
    });
}

wfc_status wfc_model_save_weights(const wfc_model* m, const char* path) {
    return guard([&] {
        require(m, "model");
        require(path, "path");
        wfc::save_weights(m->value->weights(), path);
    });
}

wfc_status wfc_model_digest(const wfc_model* m, char out[WFC_DIGEST_SIZE]) {
    return guard([&] {
        require(m, "model");
        require(out, "out");
        write_digest(wfc::digest(m->value->weights()), out);
    });
}

wfc_status wfc_model_parameter_count(const wfc_model* m, size_t* out) {
    return guard([&] {
        require(m, "model");
        require(out, "out");
        *out = m->value->weights().parameter_count();
    });
}

wfc_status wfc_model_config(const wfc_model* m, wfc_config* out) {
    return guard([&] {
        require(m, "model");
        require(out, "out");
        *out = from_config(m->value->config());
    });
}

void wfc_model_free(wfc_model* m) { delete m; }

// ---- subbands

wfc_status wfc_subbands_from_pyramid(const wfc_pyramid* p, wfc_subbands** out) {
    return guard([&] {
        require(p, "pyramid");
        require(out, "out");
        *out = new wfc_subbands{p->value.level2, p->value.level3, p->value.original};
    });
}

wfc_status wfc_subbands_load(const char* dir, wfc_subbands** out) {
    return guard([&] {
        require(dir, "dir");
        require(out, "out");
        auto l2 = wfc::load_level3d(dir, 2);
        auto l3 = wfc::load_level2d(dir, 3);
        const wfc::Shape b = l2.band_shape();
        *out = new wfc_subbands{std::move(l2), std::move(l3), wfc::Shape{b.c, 0, b.h * 4, b.w * 4}};
    });
}

wfc_status wfc_subbands_save(const wfc_subbands* s, const char* dir) {
    return guard([&] {
        require(s, "subbands");
        require(dir, "dir");
        wfc::save_subband_levels(&s->level2, &s->level3, s->original, dir);
    });
}

void wfc_subbands_free(wfc_subbands* s) { delete s; }

// ---- encode / decode

wfc_status wfc_encode(const wfc_model* m, const wfc_tensor* video, const char* plan, wfc_encoded** out) {
    return guard([&] {
        require(m, "model");
        require(video, "video");
        require(plan, "plan");
        require(out, "out");
        const auto p = wfc::ChunkPlan::parse(plan);
        *out = new wfc_encoded{wfc::encode(video->value, *m->value, p), video->value.shape()};
    });
}

wfc_status wfc_encoded_mean(const wfc_encoded* e, wfc_tensor** out) {
    return guard([&] {
        require(e, "encoded");
        require(out, "out");
        *out = wrap(e->value.latent.mean);
    });
}

wfc_status wfc_encoded_logvar(const wfc_encoded* e, wfc_tensor** out) {
    return guard([&] {
        require(e, "encoded");
        require(out, "out");
        *out = wrap(e->value.latent.logvar);
    });
}

wfc_status wfc_encoded_subbands(const wfc_encoded* e, wfc_subbands** out) {
    return guard([&] {
        require(e, "encoded");
        require(out, "out");
        *out = new wfc_subbands{e->value.level2, e->value.level3, e->original};
    });
}

wfc_status wfc_encoded_decode_plan(const wfc_encoded* e, char* out, size_t capacity) {
    return guard([&] {
        require(e, "encoded");
        require(out, "out");
        const std::string s = wfc::ChunkPlan::make_explicit(e->value.latent_chunk_sizes).describe();
        if (s.size() + 1 > capacity) throw wfc::ParameterError("plan buffer too small");
        std::memcpy(out, s.c_str(), s.size() + 1);
    });
}

void wfc_encoded_free(wfc_encoded* e) { delete e; }

wfc_status wfc_decode(const wfc_model* m, const wfc_tensor* latent, size_t original_frames, const char* plan,
                      wfc_decoded** out) {
    return guard([&] {
        require(m, "model");
        require(latent, "latent");
        require(plan, "plan");
        require(out, "out");
        const auto p = wfc::ChunkPlan::parse(plan);
        *out = new wfc_decoded{wfc::decode(latent->value, *m->value, original_frames, p)};
    });
}

wfc_status wfc_decoded_video(const wfc_decoded* d, wfc_tensor** out) {
    return guard([&] {
        require(d, "decoded");
        require(out, "out");
        *out = wrap(d->value.video);
    });
}

wfc_status wfc_decoded_subbands(const wfc_decoded* d, wfc_subbands** out) {
    return guard([&] {
        require(d, "decoded");
        require(out, "out");
        *out = new wfc_subbands{d->value.level2, d->value.level3, d->value.video.shape()};
    });
}

void wfc_decoded_free(wfc_decoded* d) { delete d; }

wfc_status wfc_sample_latent(const wfc_tensor* mean, const wfc_tensor* logvar, uint64_t seed, wfc_tensor** out) {
    return guard([&] {
        require(mean, "mean");
        require(logvar, "logvar");
        require(out, "out");
        wfc::Rng rng(seed);
        *out = wrap(wfc::sample_latent(wfc::GaussianLatent{mean->value, logvar->value}, rng));
    });
}

// ---- sessions

wfc_status wfc_encoder_session_new(const wfc_model* m, wfc_encoder_session** out) {
    return guard([&] {
        require(m, "model");
        require(out, "out");
        *out = new wfc_encoder_session{wfc::EncoderSession(m->value)};
    });
}

wfc_status wfc_encoder_session_push(wfc_encoder_session* s, const wfc_tensor* chunk, wfc_tensor** mean,
                                    wfc_tensor** logvar) {
    return guard([&] {
        require(s, "session");
        require(chunk, "chunk");
        require(mean, "mean");
        require(logvar, "logvar");
        auto step = s->value.push(chunk->value);
        auto m = std::make_unique<wfc_tensor>(wfc_tensor{std::move(step.latent.mean)});
        *logvar = wrap(std::move(step.latent.logvar));
        *mean = m.release();
    });
}

wfc_status wfc_encoder_session_finalize(wfc_encoder_session* s) {
    return guard([&] {
        require(s, "session");
        s->value.finalize();
    });
}

void wfc_encoder_session_free(wfc_encoder_session* s) { delete s; }

wfc_status wfc_decoder_session_new(const wfc_model* m, wfc_decoder_session** out) {
    return guard([&] {
        require(m, "model");
        require(out, "out");
        *out = new wfc_decoder_session{wfc::DecoderSession(m->value)};
    });
}

wfc_status wfc_decoder_session_push(wfc_decoder_session* s, const wfc_tensor* latent_chunk, wfc_tensor** video) {
    return guard([&] {
        require(s, "session");
        require(latent_chunk, "latent_chunk");
        require(video, "video");
        *video = wrap(s->value.push(latent_chunk->value).video);
    });
}

wfc_status wfc_decoder_session_finalize(wfc_decoder_session* s) {
    return guard([&] {
        require(s, "session");
        s->value.finalize();
    });
}

void wfc_decoder_session_free(wfc_decoder_session* s) { delete s; }

// ---- losses

wfc_loss_weights wfc_loss_weights_default(void) {
    const wfc::LossWeights w;
    return wfc_loss_weights{w.adv, w.kl, w.wl, w.delta};
}

wfc_status wfc_l1_recon(const wfc_tensor* x, const wfc_tensor* x_hat, double* out) {
    return guard([&] {
        require(x, "x");
        require(x_hat, "x_hat");
        require(out, "out");
        *out = wfc::l1_recon(x->value, x_hat->value);
    });
}

wfc_status wfc_wl_loss(const wfc_subbands* pred, const wfc_subbands* ref, double* out) {
    return guard([&] {
        require(pred, "pred");
        require(ref, "ref");
        require(out, "out");
        *out = wfc::wl_loss(pred->level2, ref->level2, pred->level3, ref->level3);
    });
}

wfc_status wfc_kl_divergence(const wfc_tensor* mean, const wfc_tensor* logvar, double* out) {
    return guard([&] {
        require(mean, "mean");
        require(logvar, "logvar");
        require(out, "out");
        *out = wfc::kl_divergence(wfc::GaussianLatent{mean->value, logvar->value});
    });
}

wfc_status wfc_adaptive_adv_weight(double grad_norm_recon, double grad_norm_adv, double delta, double* out) {
    return guard([&] {
        require(out, "out");
        *out = wfc::adaptive_adv_weight(grad_norm_recon, grad_norm_adv, delta);
    });
}

wfc_status wfc_total_loss(const wfc_loss_components* c, const wfc_loss_weights* w, double* out) {
    return guard([&] {
        require(c, "components");
        require(w, "weights");
        require(out, "out");
        wfc::LossComponents lc;
        lc.recon = c->recon;
        if (c->has_perceptual) lc.perceptual = c->perceptual;
        lc.adv = c->adv;
        lc.kl = c->kl;
        lc.wl = c->wl;
        *out = wfc::total_loss(lc, wfc::LossWeights{w->adv, w->kl, w->wl, w->delta});
    });
}

} // extern "C"

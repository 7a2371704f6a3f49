#include "wfcodec/causal_ops.hpp"

#include <algorithm>
#include <cmath>

#include "wfcodec/parallel.hpp"
#include "wfcodec/wavelet.hpp"

namespace wfc {

Tensor pad_front(const Tensor& x, std::size_t frames, TemporalPad mode) {
    if (frames == 0) return x;
    if (!x.has_frames()) throw ShapeError("cannot pad a clip without frames");
    Tensor pad(Shape{x.channels(), frames, x.height(), x.width()});
    if (mode == TemporalPad::replicate_first) {
        const std::size_t n = x.shape().frame_size();
        for (std::size_t c = 0; c < x.channels(); ++c)
            for (std::size_t t = 0; t < frames; ++t) std::copy_n(x.plane(c, 0), n, pad.plane(c, t));
    }
    return concat_frames(pad, x);
}

Tensor causal_conv3d(const Tensor& x, const ConvKernel& kernel) {
    const ConvSpec& s = kernel.spec();
    if (x.channels() != s.in_channels)
        throw ShapeError("causal_conv3d: input has " + std::to_string(x.channels()) + " channels, spec expects " +
                         std::to_string(s.in_channels));
    if (!x.has_frames()) throw ShapeError("causal_conv3d needs at least one frame");
    const Tensor padded = pad_front(x, s.temporal_padding(), s.pad_mode);
    return kernel.run_windows(padded, s.out_frames(x.frames()));
}

Tensor causal_conv3d(const Tensor& x, const ConvSpec& spec, std::span<const float> weight,
                     std::span<const float> bias) {
    return causal_conv3d(x, ConvKernel(spec, weight, bias));
}

// ---------------------------------------------------------------------------
// Causal cache

CausalCache::CausalCache(std::size_t kernel, std::size_t stride, TemporalPad pad)
    : kernel_(kernel), stride_(stride), pad_(pad) {
    if (kernel == 0 || stride == 0) throw ParameterError("causal cache needs kernel >= 1 and stride >= 1");
}

CausalCache::Ready CausalCache::push(const Tensor& chunk) {
    if (finalized_) throw StateError("chunk fed after the stream was finalized");
    if (!started_ && !chunk.has_frames()) throw ShapeError("the first chunk of a stream must carry frames");
    if (started_ && (chunk.channels() != cache_.channels() || chunk.height() != cache_.height() ||
                     chunk.width() != cache_.width()))
        throw ShapeError("chunk geometry " + to_string(chunk.shape()) + " differs from the stream's " +
                         to_string(cache_.shape()));
    ++chunks_;

    Tensor incoming = started_ ? chunk : pad_front(chunk, kernel_ - 1, pad_);
    started_ = true;

    // Frames before the next window start were consumed by earlier windows
    // (only possible when stride > kernel).
    const std::size_t next_start = next_window_ * stride_;
    const std::size_t skip = next_start > seen_ ? std::min(next_start - seen_, incoming.frames()) : 0;
    seen_ += incoming.frames();
    if (skip > 0) incoming = incoming.slice_frames(skip, incoming.frames());
    Tensor buffer = cache_.has_frames() ? concat_frames(cache_, incoming) : std::move(incoming);

    Ready ready;
    if (seen_ >= next_start + kernel_) ready.windows = (seen_ - kernel_ - next_start) / stride_ + 1;
    next_window_ += ready.windows;

    const std::size_t keep_from = next_window_ * stride_ - next_start; // relative to buffer
    cache_ = keep_from < buffer.frames()
                 ? buffer.slice_frames(keep_from, buffer.frames())
                 : Tensor::empty_frames(buffer.channels(), buffer.height(), buffer.width());
    ready.frames = std::move(buffer);
    return ready;
}

CacheState make_cache_state(const ConvSpec& spec) {
    spec.validate();
    return CacheState(spec.kernel[0], spec.stride[0], spec.pad_mode);
}

Tensor stream_conv3d(CacheState& state, const Tensor& chunk, const ConvKernel& kernel) {
    if (state.finalized()) throw StateError("chunk fed after the stream was finalized");
    if (!chunk.has_frames()) throw ShapeError("stream_conv3d: chunk has no frames");
    auto ready = state.push(chunk);
    return kernel.run_windows(ready.frames, ready.windows);
}

Tensor stream_conv3d(CacheState& state, const Tensor& chunk, const ConvSpec& spec, std::span<const float> weight,
                     std::span<const float> bias) {
    return stream_conv3d(state, chunk, ConvKernel(spec, weight, bias));
}

namespace {
void check_cache_args(std::size_t k_t, std::size_t s_t, std::size_t t_chunk) {
    if (k_t == 0 || s_t == 0 || t_chunk == 0)
        throw ParameterError("cache_len needs k_t, s_t and T_chunk >= 1");
}
} // namespace

std::int64_t cache_len(std::size_t k_t, std::size_t s_t, std::size_t t_chunk, std::size_t m) {
    check_cache_args(k_t, s_t, t_chunk);
    const auto k = static_cast<std::int64_t>(k_t), s = static_cast<std::int64_t>(s_t);
    const auto mt = static_cast<std::int64_t>(m * t_chunk);
    return k + mt - s * (mt / s + 1);
}

std::int64_t cache_len_window_walk(std::size_t k_t, std::size_t s_t, std::size_t t_chunk, std::size_t m) {
    check_cache_args(k_t, s_t, t_chunk);
    const auto k = static_cast<std::int64_t>(k_t), s = static_cast<std::int64_t>(s_t);
    const std::int64_t chunk_end = k - 1 + static_cast<std::int64_t>(m * t_chunk);
    std::int64_t n = 0;
    while (n * s + k - 1 <= chunk_end) ++n; // windows fully inside the received frames
    return chunk_end - n * s + 1;
}

std::size_t cache_occupancy(std::size_t k_t, std::size_t s_t, std::size_t t_chunk, std::size_t m) {
    return static_cast<std::size_t>(std::max<std::int64_t>(0, cache_len(k_t, s_t, t_chunk, m)));
}

// ---------------------------------------------------------------------------
// Pointwise and normalization layers

namespace {
void check_affine(const Tensor& x, std::span<const float> gain, std::span<const float> bias, float eps) {
    if (gain.size() != x.channels() || bias.size() != x.channels())
        throw ShapeError("normalization needs one gain and bias per channel");
    if (!(eps > 0.0f)) throw ParameterError("normalization eps must be > 0");
}
} // namespace

Tensor frame_layernorm(const Tensor& x, std::span<const float> gain, std::span<const float> bias, float eps) {
    check_affine(x, gain, bias, eps);
    Tensor out(x.shape());
    const std::size_t n = x.shape().frame_size();
    const double count = static_cast<double>(n * x.channels());
    parallel_for(x.frames(), [&](std::size_t t) {
        double sum = 0.0;
        for (std::size_t c = 0; c < x.channels(); ++c) {
            const float* p = x.plane(c, t);
            for (std::size_t i = 0; i < n; ++i) sum += p[i];
        }
        const double mean = sum / count;
        double var = 0.0;
        for (std::size_t c = 0; c < x.channels(); ++c) {
            const float* p = x.plane(c, t);
            for (std::size_t i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
        }
        const double inv = 1.0 / std::sqrt(var / count + eps);
        for (std::size_t c = 0; c < x.channels(); ++c) {
            const float* p = x.plane(c, t);
            float* q = out.plane(c, t);
            for (std::size_t i = 0; i < n; ++i)
                q[i] = static_cast<float>((p[i] - mean) * inv) * gain[c] + bias[c];
        }
    });
    return out;
}

Tensor groupnorm_whole_clip(const Tensor& x, std::size_t groups, std::span<const float> gain,
                            std::span<const float> bias, float eps) {
    check_affine(x, gain, bias, eps);
    if (groups == 0 || x.channels() % groups != 0)
        throw ParameterError("groupnorm: " + std::to_string(x.channels()) + " channels not divisible into " +
                             std::to_string(groups) + " groups");
    Tensor out(x.shape());
    if (!x.has_frames()) return out;
    const std::size_t per_group = x.channels() / groups;
    const std::size_t per_channel = x.frames() * x.shape().frame_size();
    parallel_for(groups, [&](std::size_t g) {
        const float* base = x.data().data() + g * per_group * per_channel;
        const std::size_t n = per_group * per_channel;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += base[i];
        const double mean = sum / static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (base[i] - mean) * (base[i] - mean);
        const double inv = 1.0 / std::sqrt(var / static_cast<double>(n) + eps);
        for (std::size_t c = g * per_group; c < (g + 1) * per_group; ++c) {
            const float* p = x.data().data() + c * per_channel;
            float* q = out.data().data() + c * per_channel;
            for (std::size_t i = 0; i < per_channel; ++i)
                q[i] = static_cast<float>((p[i] - mean) * inv) * gain[c] + bias[c];
        }
    });
    return out;
}

Tensor silu(const Tensor& x) {
    Tensor out(x.shape());
    auto src = x.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / (1.0f + std::exp(-src[i]));
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out(a.shape());
    auto x = a.data(), y = b.data();
    auto z = out.data();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
    return out;
}

Tensor upsample_spatial(const Tensor& x, std::size_t factor) {
    if (factor == 0) throw ParameterError("upsample factor must be >= 1");
    if (factor == 1) return x;
    const Shape& s = x.shape();
    Tensor out(Shape{s.c, s.t, s.h * factor, s.w * factor});
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t t = 0; t < s.t; ++t) {
            const float* p = x.plane(c, t);
            float* q = out.plane(c, t);
            for (std::size_t y = 0; y < s.h * factor; ++y)
                for (std::size_t xx = 0; xx < s.w * factor; ++xx)
                    q[y * s.w * factor + xx] = p[(y / factor) * s.w + xx / factor];
        }
    return out;
}

Tensor upsample_time(const Tensor& x, bool drop_first) {
    const Shape& s = x.shape();
    if (s.t == 0) return x;
    const std::size_t skip = drop_first ? 1 : 0;
    Tensor out(Shape{s.c, 2 * s.t - skip, s.h, s.w});
    const std::size_t n = s.frame_size();
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t t = skip; t < 2 * s.t; ++t) std::copy_n(x.plane(c, t / 2), n, out.plane(c, t - skip));
    return out;
}

// ---------------------------------------------------------------------------
// Executors

Tensor DirectExecutor::conv(const std::string&, const ConvKernel& kernel, const Tensor& x) {
    return causal_conv3d(x, kernel);
}

Tensor DirectExecutor::haar_analysis(const std::string&, const Tensor& x) {
    if (x.frames() % 2 == 0) throw ShapeError("causal Haar analysis needs an odd frame count");
    return stack_subbands(dwt3d(x));
}

Tensor DirectExecutor::haar_synthesis(const std::string&, const Tensor& stacked) {
    const SubbandSet3D s = unstack_subbands3d(stacked);
    return idwt3d(s, 2 * s.band_shape().t - 1);
}

Tensor DirectExecutor::upsample_time(const std::string&, const Tensor& x) { return wfc::upsample_time(x, true); }

Tensor DirectExecutor::groupnorm(const std::string&, const Tensor& x, std::size_t groups,
                                 std::span<const float> gain, std::span<const float> bias, float eps) {
    return groupnorm_whole_clip(x, groups, gain, bias, eps);
}

CausalCache& StreamExecutor::cache_for(const std::string& node, std::size_t kernel, std::size_t stride,
                                       TemporalPad pad) {
    if (finalized_) throw StateError("chunk fed after the stream was finalized");
    auto it = caches_.find(node);
    if (it == caches_.end()) it = caches_.emplace(node, CausalCache(kernel, stride, pad)).first;
    return it->second;
}

bool StreamExecutor::first_call(const std::string& node) {
    if (finalized_) throw StateError("chunk fed after the stream was finalized");
    auto [it, inserted] = started_.emplace(node, true);
    return inserted;
}

Tensor StreamExecutor::conv(const std::string& node, const ConvKernel& kernel, const Tensor& x) {
    const ConvSpec& s = kernel.spec();
    auto ready = cache_for(node, s.kernel[0], s.stride[0], s.pad_mode).push(x);
    return kernel.run_windows(ready.frames, ready.windows);
}

Tensor StreamExecutor::haar_analysis(const std::string& node, const Tensor& x) {
    // Temporal Haar pairing is a causal window of 2 frames with stride 2 and
    // one replicated pad frame.
    auto ready = cache_for(node, 2, 2, TemporalPad::replicate_first).push(x);
    return stack_subbands(analyze_frame_pairs(ready.frames, 0, ready.windows));
}

Tensor StreamExecutor::haar_synthesis(const std::string& node, const Tensor& stacked) {
    if (finalized_) throw StateError("chunk fed after the stream was finalized");
    const SubbandSet3D s = unstack_subbands3d(stacked);
    if (!stacked.has_frames())
        return Tensor::empty_frames(s.band_shape().c, s.band_shape().h * 2, s.band_shape().w * 2);
    const bool first = first_call(node);
    Tensor full = synthesize_frame_pairs(s);
    return first ? full.slice_frames(1, full.frames()) : full;
}

Tensor StreamExecutor::upsample_time(const std::string& node, const Tensor& x) {
    if (!x.has_frames()) return x;
    return wfc::upsample_time(x, first_call(node));
}

Tensor StreamExecutor::groupnorm(const std::string&, const Tensor& x, std::size_t groups,
                                 std::span<const float> gain, std::span<const float> bias, float eps) {
    if (finalized_) throw StateError("chunk fed after the stream was finalized");
    return groupnorm_whole_clip(x, groups, gain, bias, eps);
}

const CausalCache* StreamExecutor::cache(const std::string& node) const {
    auto it = caches_.find(node);
    return it == caches_.end() ? nullptr : &it->second;
}

void StreamExecutor::finalize() {
    finalized_ = true;
    for (auto& [_, c] : caches_) c.finalize();
}

// ---------------------------------------------------------------------------
// Layer stacks

LayerDef LayerDef::make_conv(const ConvSpec& spec, std::span<const float> weight, std::span<const float> bias) {
    LayerDef l;
    l.kind = Kind::causal_conv3d;
    l.conv = std::make_shared<const ConvKernel>(spec, weight, bias);
    return l;
}

LayerDef LayerDef::make_layernorm(std::vector<float> gain, std::vector<float> bias, float eps) {
    LayerDef l;
    l.kind = Kind::frame_layernorm;
    l.gain = std::move(gain);
    l.bias = std::move(bias);
    l.eps = eps;
    return l;
}

LayerDef LayerDef::make_groupnorm(std::size_t groups, std::vector<float> gain, std::vector<float> bias, float eps) {
    LayerDef l = make_layernorm(std::move(gain), std::move(bias), eps);
    l.kind = Kind::groupnorm;
    l.groups = groups;
    return l;
}

LayerDef LayerDef::make_nonlinearity() { return LayerDef{}; }

LayerDef LayerDef::make_resample(std::size_t spatial_factor, std::size_t temporal_factor) {
    if (spatial_factor == 0 || (temporal_factor != 1 && temporal_factor != 2))
        throw ParameterError("resample supports spatial factor >= 1 and temporal factor 1 or 2");
    LayerDef l;
    l.kind = Kind::resample;
    l.spatial_factor = spatial_factor;
    l.temporal_factor = temporal_factor;
    return l;
}

Tensor apply_layer(TemporalExecutor& ex, const std::string& node, const LayerDef& layer, const Tensor& x) {
    switch (layer.kind) {
    case LayerDef::Kind::causal_conv3d: return ex.conv(node, *layer.conv, x);
    case LayerDef::Kind::frame_layernorm: return frame_layernorm(x, layer.gain, layer.bias, layer.eps);
    case LayerDef::Kind::groupnorm: return ex.groupnorm(node, x, layer.groups, layer.gain, layer.bias, layer.eps);
    case LayerDef::Kind::nonlinearity: return silu(x);
    case LayerDef::Kind::resample: {
        Tensor y = layer.temporal_factor == 2 ? ex.upsample_time(node, x) : x;
        return upsample_spatial(y, layer.spatial_factor);
    }
    }
    throw ParameterError("unknown layer kind");
}

Tensor run_layer_stack(std::span<const LayerDef> layers, const Tensor& x, const ChunkPlan& plan) {
    const auto run = [&](TemporalExecutor& ex, const Tensor& in) {
        Tensor h = in;
        for (std::size_t i = 0; i < layers.size(); ++i) h = apply_layer(ex, "layer" + std::to_string(i), layers[i], h);
        return h;
    };
    if (!plan.streamed()) {
        DirectExecutor ex;
        return run(ex, x);
    }
    StreamExecutor ex;
    std::vector<Tensor> outputs;
    std::size_t t = 0;
    for (std::size_t size : plan.chunk_sizes(x.frames())) {
        outputs.push_back(run(ex, x.slice_frames(t, t + size)));
        t += size;
    }
    ex.finalize();
    return concat_frames(outputs);
}

} // namespace wfc

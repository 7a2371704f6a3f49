#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wfcodec/chunk_plan.hpp"
#include "wfcodec/tensor.hpp"

namespace wfc {

// Content of the k_t - 1 frames prepended at stream start.
enum class TemporalPad { replicate_first, zeros };

/// Causal 3D convolution geometry. Time is padded only at the front by
/// kernel_t - 1 frames; height and width are zero-padded symmetrically.
struct ConvSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::array<std::size_t, 3> kernel{1, 1, 1}; // (t, h, w)
    std::array<std::size_t, 3> stride{1, 1, 1}; // (t, h, w)
    std::array<std::size_t, 2> padding{0, 0};   // (h, w)
    TemporalPad pad_mode = TemporalPad::replicate_first;

    std::size_t temporal_padding() const noexcept { return kernel[0] - 1; }
    std::size_t weight_count() const noexcept {
        return out_channels * in_channels * kernel[0] * kernel[1] * kernel[2];
    }
    std::size_t out_frames(std::size_t t) const noexcept { return t == 0 ? 0 : (t - 1) / stride[0] + 1; }
    std::size_t out_height(std::size_t h) const;
    std::size_t out_width(std::size_t w) const;
    void validate() const;
};

// Weights repacked for the convolution kernel. Build once per layer and reuse
// across calls; immutable afterwards.
class ConvKernel {
  public:
    // weight layout (out, in, k_t, k_h, k_w); bias has out_channels entries.
    ConvKernel(const ConvSpec& spec, std::span<const float> weight, std::span<const float> bias);

    const ConvSpec& spec() const noexcept { return spec_; }

    // Evaluates `windows` temporal windows over already-padded frames: window
    // j reads frames [j*s_t, j*s_t + k_t). Spatial padding is applied here.
    // Every output element is accumulated in a fixed order that depends only
    // on the layer, never on how the frames were chunked.
    Tensor run_windows(const Tensor& frames, std::size_t windows) const;

  private:
    ConvSpec spec_;
    std::size_t out_blocks_ = 0;
    std::vector<float> packed_; // [block][ic][kt][kh][kw][lane]
    std::vector<float> bias_;
};

// Prepends the causal pad to a clip.
Tensor pad_front(const Tensor& x, std::size_t frames, TemporalPad mode);

Tensor causal_conv3d(const Tensor& x, const ConvKernel& kernel);
Tensor causal_conv3d(const Tensor& x, const ConvSpec& spec, std::span<const float> weight,
                     std::span<const float> bias);

/// Tail-frame cache for one causal temporal window (kernel k, stride s).
///
/// Frames are indexed in padded stream coordinates: the k-1 pad frames are
/// 0..k-2 and input frame 0 is k-1. After each push the cache keeps exactly
/// the frames from the start of the next incomplete window to the newest
/// frame seen, so chunk boundaries are invisible to the windows. Chunk sizes
/// may vary freely.
class CausalCache {
  public:
    CausalCache(std::size_t kernel, std::size_t stride, TemporalPad pad);

    struct Ready {
        Tensor frames;           // window j starts at frame j*stride
        std::size_t windows = 0; // number of complete windows
    };

    // The first push must carry at least one frame; later pushes may be empty.
    Ready push(const Tensor& chunk);
    // Marks the stream complete; further pushes raise StateError.
    void finalize() noexcept { finalized_ = true; }

    bool finalized() const noexcept { return finalized_; }
    bool started() const noexcept { return started_; }
    std::size_t chunk_index() const noexcept { return chunks_; }
    std::size_t cached_frame_count() const noexcept { return cache_.frames(); }
    const Tensor& cached_frames() const noexcept { return cache_; }
    std::size_t next_window() const noexcept { return next_window_; }
    std::size_t frames_seen() const noexcept { return seen_; }

  private:
    std::size_t kernel_;
    std::size_t stride_;
    TemporalPad pad_;
    bool started_ = false;
    bool finalized_ = false;
    std::size_t chunks_ = 0;
    std::size_t seen_ = 0;        // padded frames received so far
    std::size_t next_window_ = 0; // first window not yet emitted
    Tensor cache_;                // frames [next_window_*stride_, seen_)
};

using CacheState = CausalCache;

CacheState make_cache_state(const ConvSpec& spec);

// Streams one chunk through a causal conv. The concatenation of all outputs
// equals causal_conv3d on the concatenated input. Returns a zero-frame tensor
// when the chunk completes no window.
Tensor stream_conv3d(CacheState& state, const Tensor& chunk, const ConvKernel& kernel);
Tensor stream_conv3d(CacheState& state, const Tensor& chunk, const ConvSpec& spec,
                     std::span<const float> weight, std::span<const float> bias);

// Frames held in the cache after chunk m under canonical chunking:
//   k_t + m*T_chunk - s_t * floor(m*T_chunk/s_t + 1)
// The value is negative when s_t > k_t and the next window starts past the
// newest frame; the cache is then empty and frames are skipped.
std::int64_t cache_len(std::size_t k_t, std::size_t s_t, std::size_t t_chunk, std::size_t m);
// Same quantity by walking the sliding windows one at a time.
std::int64_t cache_len_window_walk(std::size_t k_t, std::size_t s_t, std::size_t t_chunk, std::size_t m);
// Actual cache occupancy: max(0, cache_len).
std::size_t cache_occupancy(std::size_t k_t, std::size_t s_t, std::size_t t_chunk, std::size_t m);

// Per-frame normalization over (channels, height, width). No statistics cross
// frame boundaries, so chunked evaluation is exact.
Tensor frame_layernorm(const Tensor& x, std::span<const float> gain, std::span<const float> bias, float eps);
// Group normalization with statistics over (group channels, time, height,
// width). Kept as the negative control: it mixes frames, so it cannot be
// chunked without changing results.
Tensor groupnorm_whole_clip(const Tensor& x, std::size_t groups, std::span<const float> gain,
                            std::span<const float> bias, float eps);

// x * sigmoid(x)
Tensor silu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);

// Nearest-neighbour spatial upsampling by `factor`.
Tensor upsample_spatial(const Tensor& x, std::size_t factor);
// Nearest-neighbour temporal doubling; with drop_first the duplicate of the
// stream's first frame is removed (t -> 2t - 1).
Tensor upsample_time(const Tensor& x, bool drop_first);

/// Evaluates the temporal operators of a graph. The graph code is written
/// once against this interface; the direct executor evaluates whole clips and
/// the streaming executor keeps one causal state per node.
class TemporalExecutor {
  public:
    virtual ~TemporalExecutor() = default;
    virtual bool streaming() const noexcept = 0;

    virtual Tensor conv(const std::string& node, const ConvKernel& kernel, const Tensor& x) = 0;
    // 3D Haar analysis with causal odd-length padding; returns the eight
    // subbands stacked on channels in key order.
    virtual Tensor haar_analysis(const std::string& node, const Tensor& x) = 0;
    // Inverse of haar_analysis, dropping the causal pad frame (T -> 2T - 1).
    virtual Tensor haar_synthesis(const std::string& node, const Tensor& stacked) = 0;
    virtual Tensor upsample_time(const std::string& node, const Tensor& x) = 0;
    virtual Tensor groupnorm(const std::string& node, const Tensor& x, std::size_t groups,
                             std::span<const float> gain, std::span<const float> bias, float eps) = 0;
};

class DirectExecutor final : public TemporalExecutor {
  public:
    bool streaming() const noexcept override { return false; }
    Tensor conv(const std::string& node, const ConvKernel& kernel, const Tensor& x) override;
    Tensor haar_analysis(const std::string& node, const Tensor& x) override;
    Tensor haar_synthesis(const std::string& node, const Tensor& stacked) override;
    Tensor upsample_time(const std::string& node, const Tensor& x) override;
    Tensor groupnorm(const std::string& node, const Tensor& x, std::size_t groups, std::span<const float> gain,
                     std::span<const float> bias, float eps) override;
};

// Single-owner; one instance per stream.
class StreamExecutor final : public TemporalExecutor {
  public:
    bool streaming() const noexcept override { return true; }
    Tensor conv(const std::string& node, const ConvKernel& kernel, const Tensor& x) override;
    Tensor haar_analysis(const std::string& node, const Tensor& x) override;
    Tensor haar_synthesis(const std::string& node, const Tensor& stacked) override;
    Tensor upsample_time(const std::string& node, const Tensor& x) override;
    // Statistics over the current chunk only.
    Tensor groupnorm(const std::string& node, const Tensor& x, std::size_t groups, std::span<const float> gain,
                     std::span<const float> bias, float eps) override;

    const CausalCache* cache(const std::string& node) const;
    void finalize();

  private:
    CausalCache& cache_for(const std::string& node, std::size_t kernel, std::size_t stride, TemporalPad pad);
    bool first_call(const std::string& node);

    std::unordered_map<std::string, CausalCache> caches_;
    std::unordered_map<std::string, bool> started_;
    bool finalized_ = false;
};

/// One layer of a sequential stack.
struct LayerDef {
    enum class Kind { causal_conv3d, frame_layernorm, groupnorm, nonlinearity, resample };

    Kind kind = Kind::nonlinearity;
    std::shared_ptr<const ConvKernel> conv;
    std::vector<float> gain;
    std::vector<float> bias;
    float eps = 1e-6f;
    std::size_t groups = 1;
    std::size_t spatial_factor = 1;  // resample
    std::size_t temporal_factor = 1; // resample: 1 or 2 (2t - 1 frames)

    static LayerDef make_conv(const ConvSpec& spec, std::span<const float> weight, std::span<const float> bias);
    static LayerDef make_layernorm(std::vector<float> gain, std::vector<float> bias, float eps = 1e-6f);
    static LayerDef make_groupnorm(std::size_t groups, std::vector<float> gain, std::vector<float> bias,
                                   float eps = 1e-6f);
    static LayerDef make_nonlinearity();
    static LayerDef make_resample(std::size_t spatial_factor, std::size_t temporal_factor);

    bool stream_safe() const noexcept { return kind != Kind::groupnorm; }
};

Tensor apply_layer(TemporalExecutor& ex, const std::string& node, const LayerDef& layer, const Tensor& x);

// Runs the stack directly or chunk by chunk per the plan and returns the
// concatenated output.
Tensor run_layer_stack(std::span<const LayerDef> layers, const Tensor& x, const ChunkPlan& plan);

} // namespace wfc

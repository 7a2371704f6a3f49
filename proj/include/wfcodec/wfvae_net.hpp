#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "wfcodec/causal_ops.hpp"
#include "wfcodec/chunk_plan.hpp"
#include "wfcodec/tensor.hpp"
#include "wfcodec/wavelet.hpp"

namespace wfc {

enum class NormKind { frame_layernorm, groupnorm };
enum class Activation { silu };

/// Hyperparameters of the forward graph. Stage widths grow by one base width
/// per downsampling layer: [BC, 2*BC, 3*BC].
struct ModelConfig {
    std::string name = "custom";
    std::size_t base_channels = 128;
    std::size_t c_flow = 128;
    std::size_t latent_channels = 4;
    std::size_t input_channels = 3;
    std::size_t blocks_per_stage = 2;
    Activation activation = Activation::silu;
    NormKind norm = NormKind::frame_layernorm;
    float norm_eps = 1e-6f;

    std::array<std::size_t, 3> stage_widths() const noexcept {
        return {base_channels, 2 * base_channels, 3 * base_channels};
    }
    // Group count used when norm == groupnorm; divides every stage width.
    std::size_t norm_groups() const noexcept;
    void validate() const;

    // "wfvae-s" (BC 128), "wfvae-m" (160), "wfvae-l" (192); C_flow 128.
    static ModelConfig preset(std::string_view name, std::size_t latent_channels);
    static std::vector<std::string> preset_names();
};

struct NamedArray {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;
    bool operator==(const NamedArray&) const = default;
};

/// Name -> tensor container (rank 1..5). Iteration order is lexicographic,
/// which is also the on-disk order.
class WeightStore {
  public:
    void set(const std::string& name, std::vector<std::uint32_t> dims, std::vector<float> values);
    const NamedArray& get(const std::string& name) const;
    bool contains(const std::string& name) const { return entries_.contains(name); }
    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t parameter_count() const noexcept;
    const std::map<std::string, NamedArray>& entries() const noexcept { return entries_; }

    // Zeroes every value, keeping names and shapes.
    void zero();

    bool operator==(const WeightStore&) const = default;

  private:
    std::map<std::string, NamedArray> entries_;
};

// "WFWT" | u32 version=1 | u32 count | per entry: u16 name_len, name,
// u32 ndim, u32 dims[ndim], f32 payload.
std::vector<std::uint8_t> encode_weights(const WeightStore& w);
WeightStore decode_weights(std::span<const std::uint8_t> bytes);
void save_weights(const WeightStore& w, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);
std::string digest(const WeightStore& w);

struct ParamSpec {
    std::string name;
    std::vector<std::uint32_t> dims;
    enum class Init { conv_weight, zero, one } init;
};

// Every parameter the graph resolves, in initialization order.
std::vector<ParamSpec> parameter_layout(const ModelConfig& config);

// Convolution weights ~ N(0, 1/fan_in), biases 0, norm gains 1.
WeightStore init_weights(const ModelConfig& config, Rng& rng);

struct GaussianLatent {
    Tensor mean;
    Tensor logvar;
};

struct EncodeResult {
    GaussianLatent latent;
    SubbandSet3D level2; // encoder-side pyramid echo
    SubbandSet2D level3;
    // Latent frames produced by each input chunk (zero-frame chunks omitted);
    // a decode plan that mirrors the encode chunking.
    std::vector<std::size_t> latent_chunk_sizes;
};

struct DecodeResult {
    Tensor video;
    SubbandSet3D level2;         // predicted level-2 subbands after the level-3 inflow into hhh
    SubbandSet2D level3;         // predicted level-3 subbands
    SubbandSet3D level2_outflow; // level-2 outflow before recombination
    SubbandSet3D level1_outflow; // head output before recombination
};

class Model;

// Chunk-by-chunk encoder. Feed the clip's frames in order; the first chunk
// must hold frame 0. Single-owner.
class EncoderSession {
  public:
    explicit EncoderSession(std::shared_ptr<const Model> model);
    struct Step {
        GaussianLatent latent; // may hold zero frames
        Tensor level2;         // stacked 24-channel subbands
        Tensor level3;         // stacked 12-channel subbands
    };
    Step push(const Tensor& chunk);
    void finalize() { ex_.finalize(); }

  private:
    std::shared_ptr<const Model> model_;
    StreamExecutor ex_;
};

class DecoderSession {
  public:
    explicit DecoderSession(std::shared_ptr<const Model> model);
    struct Step {
        Tensor video;
        Tensor level2;
        Tensor level3;
        Tensor level2_outflow;
        Tensor level1_outflow;
    };
    Step push(const Tensor& latent_chunk);
    void finalize() { ex_.finalize(); }

  private:
    std::shared_ptr<const Model> model_;
    StreamExecutor ex_;
};

/// Configuration, validated weights, and prepacked convolution kernels.
/// Immutable after construction and shareable across threads.
class Model : public std::enable_shared_from_this<Model> {
  public:
    static std::shared_ptr<const Model> create(ModelConfig config, WeightStore weights);

    const ModelConfig& config() const noexcept { return config_; }
    const WeightStore& weights() const noexcept { return weights_; }

    // Shape law checks shared by encode and the sessions.
    void check_video(const Shape& s) const;
    void check_latent(const Shape& s) const;
    static std::size_t latent_frames(std::size_t frames) { return (frames - 1) / 4 + 1; }
    static std::size_t video_frames(std::size_t latent_frames) { return 4 * (latent_frames - 1) + 1; }

    EncoderSession::Step encoder_step(TemporalExecutor& ex, const Tensor& chunk) const;
    DecoderSession::Step decoder_step(TemporalExecutor& ex, const Tensor& z) const;

  private:
    struct Norm {
        std::vector<float> gain;
        std::vector<float> bias;
    };

    Model(ModelConfig config, WeightStore weights);
    const ConvKernel& conv(const std::string& name) const;
    Tensor run_conv(TemporalExecutor& ex, const std::string& name, const Tensor& x) const;
    Tensor norm(TemporalExecutor& ex, const std::string& name, const Tensor& x) const;
    Tensor residual_stage(TemporalExecutor& ex, const std::string& prefix, const Tensor& x) const;

    ModelConfig config_;
    WeightStore weights_;
    std::map<std::string, ConvKernel> convs_;
    std::map<std::string, Norm> norms_;
};

EncodeResult encode(const Tensor& video, const Model& model, const ChunkPlan& plan);
DecodeResult decode(const Tensor& z, const Model& model, std::size_t original_frames, const ChunkPlan& plan);

// z = mean + exp(logvar / 2) * eps with eps drawn from rng in element order.
Tensor sample_latent(const GaussianLatent& g, Rng& rng);

struct ForwardResult {
    Tensor reconstruction;
    GaussianLatent latent;
    Tensor z;
    DecodeResult decoded;
    EncodeResult encoded;
};

// encode -> sample -> decode. In streamed mode the decoder is fed the latent
// chunks the encoder produced.
ForwardResult forward(const Tensor& video, const Model& model, Rng& rng, const ChunkPlan& plan);

} // namespace wfc

#include "wfcodec/wfvae_net.hpp"

#include <cmath>
#include <numeric>

namespace wfc {
namespace {

constexpr std::size_t kSubbands3D = 8;
constexpr std::size_t kSubbands2D = 4;

struct ConvDef {
    std::string name;
    ConvSpec spec;
};

ConvSpec conv_spec(std::size_t in, std::size_t out, std::size_t k, std::array<std::size_t, 3> stride = {1, 1, 1}) {
    ConvSpec s;
    s.in_channels = in;
    s.out_channels = out;
    s.kernel = {k, k, k};
    s.stride = stride;
    s.padding = {k / 2, k / 2};
    return s;
}

struct Layout {
    std::vector<ConvDef> convs;
    std::vector<std::pair<std::string, std::size_t>> norms;
};

void add_stage(Layout& l, const std::string& prefix, std::size_t width, std::size_t blocks) {
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::string p = prefix + ".block" + std::to_string(b);
        l.norms.emplace_back(p + ".norm1", width);
        l.convs.push_back({p + ".conv1", conv_spec(width, width, 3)});
        l.norms.emplace_back(p + ".norm2", width);
        l.convs.push_back({p + ".conv2", conv_spec(width, width, 3)});
    }
}

// The graph topology as a parameter list. Model::encoder_step and
// Model::decoder_step resolve exactly these names.
Layout graph_layout(const ModelConfig& c) {
    const auto [w1, w2, w3] = c.stage_widths();
    const std::size_t in1 = c.input_channels * kSubbands3D; // level-1 subbands stacked
    const std::size_t in3 = c.input_channels * kSubbands2D; // level-3 subbands stacked
    const std::size_t f = c.c_flow, n = c.blocks_per_stage;
    Layout l;
    l.convs.push_back({"enc.stem", conv_spec(in1, w1, 3)});
    add_stage(l, "enc.stage1", w1, n);
    l.convs.push_back({"enc.down1", conv_spec(w1, w2, 3, {2, 2, 2})});
    l.convs.push_back({"enc.inflow2", conv_spec(in1, f, 1)});
    l.convs.push_back({"enc.stage2.entry", conv_spec(w2 + f, w2, 3)});
    add_stage(l, "enc.stage2", w2, n);
    l.convs.push_back({"enc.down2", conv_spec(w2, w3, 3, {1, 2, 2})});
    l.convs.push_back({"enc.inflow3", conv_spec(in3, f, 1)});
    l.convs.push_back({"enc.stage3.entry", conv_spec(w3 + f, w3, 3)});
    add_stage(l, "enc.stage3", w3, n);
    l.norms.emplace_back("enc.head.norm", w3);
    l.convs.push_back({"enc.head.conv", conv_spec(w3, 2 * c.latent_channels, 3)});

    l.convs.push_back({"dec.conv_in", conv_spec(c.latent_channels, w3, 3)});
    add_stage(l, "dec.stage3", w3, n);
    l.convs.push_back({"dec.split3", conv_spec(w3, w3 + f, 3)});
    l.convs.push_back({"dec.outflow3", conv_spec(f, in3, 1)});
    l.convs.push_back({"dec.up2.conv", conv_spec(w3, w2, 3)});
    add_stage(l, "dec.stage2", w2, n);
    l.convs.push_back({"dec.split2", conv_spec(w2, w2 + f, 3)});
    l.convs.push_back({"dec.outflow2", conv_spec(f, in1, 1)});
    l.convs.push_back({"dec.up1.conv", conv_spec(w2, w1, 3)});
    add_stage(l, "dec.stage1", w1, n);
    l.norms.emplace_back("dec.head.norm", w1);
    l.convs.push_back({"dec.head.conv", conv_spec(w1, in1, 3)});
    return l;
}

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }

// dst[c0 : c0 + src.channels] += src
Tensor add_into_channels(const Tensor& dst, std::size_t c0, const Tensor& src) {
    if (src.frames() != dst.frames() || src.height() != dst.height() || src.width() != dst.width() ||
        c0 + src.channels() > dst.channels())
        throw ShapeError("recombination shape mismatch: " + to_string(src.shape()) + " into " +
                         to_string(dst.shape()));
    Tensor out = dst;
    const std::size_t per = dst.frames() * dst.shape().frame_size();
    float* o = out.data().data() + c0 * per;
    const float* s = src.data().data();
    for (std::size_t i = 0; i < src.numel(); ++i) o[i] += s[i];
    return out;
}

Tensor empty_like_geometry(std::size_t c, const Tensor& ref, std::size_t spatial_div) {
    return Tensor::empty_frames(c, ref.height() / spatial_div, ref.width() / spatial_div);
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration and parameters

std::size_t ModelConfig::norm_groups() const noexcept { return std::gcd(base_channels, std::size_t{32}); }

void ModelConfig::validate() const {
    if (input_channels != 3) throw ParameterError("input_channels must be 3");
    if (base_channels == 0 || c_flow == 0) throw ParameterError("base_channels and c_flow must be >= 1");
    if (latent_channels != 4 && latent_channels != 8 && latent_channels != 16 && latent_channels != 32)
        throw ParameterError("latent_channels must be one of 4, 8, 16, 32; got " + std::to_string(latent_channels));
    if (!(norm_eps > 0.0f)) throw ParameterError("norm_eps must be > 0");
}

ModelConfig ModelConfig::preset(std::string_view name, std::size_t latent_channels) {
    ModelConfig c;
    if (name == "wfvae-s")
        c.base_channels = 128;
    else if (name == "wfvae-m")
        c.base_channels = 160;
    else if (name == "wfvae-l")
        c.base_channels = 192;
    else
        throw ParameterError("unknown preset '" + std::string(name) + "' (expected wfvae-s, wfvae-m, wfvae-l)");
    c.name = std::string(name);
    c.latent_channels = latent_channels;
    c.validate();
    return c;
}

std::vector<std::string> ModelConfig::preset_names() { return {"wfvae-s", "wfvae-m", "wfvae-l"}; }

std::vector<ParamSpec> parameter_layout(const ModelConfig& config) {
    config.validate();
    const Layout l = graph_layout(config);
    std::vector<ParamSpec> out;
    for (const auto& c : l.convs) {
        const ConvSpec& s = c.spec;
        out.push_back({c.name + ".weight",
                       {u32(s.out_channels), u32(s.in_channels), u32(s.kernel[0]), u32(s.kernel[1]), u32(s.kernel[2])},
                       ParamSpec::Init::conv_weight});
        out.push_back({c.name + ".bias", {u32(s.out_channels)}, ParamSpec::Init::zero});
    }
    for (const auto& [name, width] : l.norms) {
        out.push_back({name + ".gain", {u32(width)}, ParamSpec::Init::one});
        out.push_back({name + ".bias", {u32(width)}, ParamSpec::Init::zero});
    }
    return out;
}

WeightStore init_weights(const ModelConfig& config, Rng& rng) {
    WeightStore w;
    for (const auto& p : parameter_layout(config)) {
        std::size_t n = 1;
        for (auto d : p.dims) n *= d;
        std::vector<float> values(n, 0.0f);
        if (p.init == ParamSpec::Init::one) {
            std::fill(values.begin(), values.end(), 1.0f);
        } else if (p.init == ParamSpec::Init::conv_weight) {
            const double fan_in = static_cast<double>(n / p.dims[0]);
            const double stddev = 1.0 / std::sqrt(fan_in);
            for (auto& v : values) v = static_cast<float>(stddev * rng.normal());
        }
        w.set(p.name, p.dims, std::move(values));
    }
    return w;
}

// ---------------------------------------------------------------------------
// Model

std::shared_ptr<const Model> Model::create(ModelConfig config, WeightStore weights) {
    return std::shared_ptr<const Model>(new Model(std::move(config), std::move(weights)));
}

Model::Model(ModelConfig config, WeightStore weights) : config_(std::move(config)), weights_(std::move(weights)) {
    config_.validate();
    const auto layout = parameter_layout(config_);
    for (const auto& p : layout) {
        const NamedArray& a = weights_.get(p.name);
        if (a.dims != p.dims) {
            std::string want, got;
            for (auto d : p.dims) want += std::to_string(d) + " ";
            for (auto d : a.dims) got += std::to_string(d) + " ";
            throw WeightError("weight '" + p.name + "' has shape [" + got + "], config '" + config_.name +
                              "' expects [" + want + "]");
        }
    }
    if (weights_.size() != layout.size())
        throw WeightError("weight store has " + std::to_string(weights_.size()) + " entries, config '" +
                          config_.name + "' expects " + std::to_string(layout.size()));
    const Layout l = graph_layout(config_);
    for (const auto& c : l.convs)
        convs_.emplace(c.name, ConvKernel(c.spec, weights_.get(c.name + ".weight").values,
                                          weights_.get(c.name + ".bias").values));
    for (const auto& [name, _] : l.norms)
        norms_.emplace(name, Norm{weights_.get(name + ".gain").values, weights_.get(name + ".bias").values});
}

const ConvKernel& Model::conv(const std::string& name) const {
    auto it = convs_.find(name);
    if (it == convs_.end()) throw WeightError("graph references unknown conv '" + name + "'");
    return it->second;
}

Tensor Model::run_conv(TemporalExecutor& ex, const std::string& name, const Tensor& x) const {
    return ex.conv(name, conv(name), x);
}

Tensor Model::norm(TemporalExecutor& ex, const std::string& name, const Tensor& x) const {
    auto it = norms_.find(name);
    if (it == norms_.end()) throw WeightError("graph references unknown norm '" + name + "'");
    const Norm& n = it->second;
    if (config_.norm == NormKind::groupnorm)
        return ex.groupnorm(name, x, config_.norm_groups(), n.gain, n.bias, config_.norm_eps);
    return frame_layernorm(x, n.gain, n.bias, config_.norm_eps);
}

Tensor Model::residual_stage(TemporalExecutor& ex, const std::string& prefix, const Tensor& x) const {
    Tensor h = x;
    for (std::size_t b = 0; b < config_.blocks_per_stage; ++b) {
        const std::string p = prefix + ".block" + std::to_string(b);
        Tensor r = run_conv(ex, p + ".conv1", silu(norm(ex, p + ".norm1", h)));
        r = run_conv(ex, p + ".conv2", silu(norm(ex, p + ".norm2", r)));
        h = add(h, r);
    }
    return h;
}

void Model::check_video(const Shape& s) const {
    if (s.c != config_.input_channels)
        throw ShapeError("video must have " + std::to_string(config_.input_channels) + " channels, got " +
                         to_string(s));
    if (s.h % 8 != 0 || s.w % 8 != 0)
        throw ShapeError("video height and width must be divisible by 8, got " + to_string(s));
    if (s.t == 0 || s.t % 4 != 1) throw ShapeError("video frame count must be 1 mod 4, got " + to_string(s));
}

void Model::check_latent(const Shape& s) const {
    if (s.c != config_.latent_channels)
        throw ShapeError("latent must have " + std::to_string(config_.latent_channels) + " channels, got " +
                         to_string(s));
    if (s.t == 0) throw ShapeError("latent needs at least one frame");
}

EncoderSession::Step Model::encoder_step(TemporalExecutor& ex, const Tensor& chunk) const {
    const std::size_t cin = config_.input_channels;
    const Tensor w1 = ex.haar_analysis("enc.wt1", chunk);
    const Tensor w2 = ex.haar_analysis("enc.wt2", w1.slice_channels(0, cin));
    const Tensor w3 = stack_subbands(dwt2d(w2.slice_channels(0, cin)));

    Tensor h = residual_stage(ex, "enc.stage1", run_conv(ex, "enc.stem", w1));
    h = run_conv(ex, "enc.down1", h);
    const Tensor in2 = silu(run_conv(ex, "enc.inflow2", w2));
    const Tensor cat2[] = {h, in2};
    h = residual_stage(ex, "enc.stage2", run_conv(ex, "enc.stage2.entry", concat_channels(cat2)));
    h = run_conv(ex, "enc.down2", h);
    const Tensor in3 = silu(run_conv(ex, "enc.inflow3", w3));
    const Tensor cat3[] = {h, in3};
    h = residual_stage(ex, "enc.stage3", run_conv(ex, "enc.stage3.entry", concat_channels(cat3)));
    const Tensor moments = run_conv(ex, "enc.head.conv", silu(norm(ex, "enc.head.norm", h)));

    const std::size_t L = config_.latent_channels;
    EncoderSession::Step out;
    if (moments.has_frames()) {
        out.latent.mean = moments.slice_channels(0, L);
        out.latent.logvar = moments.slice_channels(L, 2 * L);
    } else {
        out.latent.mean = empty_like_geometry(L, moments, 1);
        out.latent.logvar = empty_like_geometry(L, moments, 1);
    }
    out.level2 = w2;
    out.level3 = w3;
    return out;
}

DecoderSession::Step Model::decoder_step(TemporalExecutor& ex, const Tensor& z) const {
    const auto [w1, w2, w3] = config_.stage_widths();
    const std::size_t f = config_.c_flow;

    Tensor h = residual_stage(ex, "dec.stage3", run_conv(ex, "dec.conv_in", z));
    Tensor split = run_conv(ex, "dec.split3", h);
    const Tensor level3 = run_conv(ex, "dec.outflow3", silu(split.slice_channels(w3, w3 + f)));
    h = upsample_spatial(split.slice_channels(0, w3), 2);

    h = residual_stage(ex, "dec.stage2", run_conv(ex, "dec.up2.conv", h));
    split = run_conv(ex, "dec.split2", h);
    const Tensor level2_outflow = run_conv(ex, "dec.outflow2", silu(split.slice_channels(w2, w2 + f)));
    // Level-3 prediction flows into the level-2 hhh band.
    const Tensor level2 = add_into_channels(level2_outflow, 0, idwt2d(unstack_subbands2d(level3)));

    h = upsample_spatial(ex.upsample_time("dec.up1.time", split.slice_channels(0, w2)), 2);
    h = residual_stage(ex, "dec.stage1", run_conv(ex, "dec.up1.conv", h));
    const Tensor level1_outflow = run_conv(ex, "dec.head.conv", silu(norm(ex, "dec.head.norm", h)));
    // Level-2 prediction flows into the level-1 hhh band.
    const Tensor level1 = add_into_channels(level1_outflow, 0, ex.haar_synthesis("dec.iwt2", level2));

    DecoderSession::Step out;
    out.video = ex.haar_synthesis("dec.iwt1", level1);
    out.level2 = level2;
    out.level3 = level3;
    out.level2_outflow = level2_outflow;
    out.level1_outflow = level1_outflow;
    (void)w1;
    return out;
}

// ---------------------------------------------------------------------------
// Sessions and whole-clip entry points

EncoderSession::EncoderSession(std::shared_ptr<const Model> model) : model_(std::move(model)) {}

EncoderSession::Step EncoderSession::push(const Tensor& chunk) {
    if (chunk.channels() != model_->config().input_channels || chunk.height() % 8 != 0 || chunk.width() % 8 != 0)
        throw ShapeError("encoder chunk has shape " + to_string(chunk.shape()));
    return model_->encoder_step(ex_, chunk);
}

DecoderSession::DecoderSession(std::shared_ptr<const Model> model) : model_(std::move(model)) {}

DecoderSession::Step DecoderSession::push(const Tensor& latent_chunk) {
    if (latent_chunk.channels() != model_->config().latent_channels)
        throw ShapeError("decoder chunk has shape " + to_string(latent_chunk.shape()));
    return model_->decoder_step(ex_, latent_chunk);
}

EncodeResult encode(const Tensor& video, const Model& model, const ChunkPlan& plan) {
    model.check_video(video.shape());
    EncodeResult out;
    if (!plan.streamed()) {
        DirectExecutor ex;
        auto step = model.encoder_step(ex, video);
        out.latent = std::move(step.latent);
        out.level2 = unstack_subbands3d(step.level2);
        out.level3 = unstack_subbands2d(step.level3);
        out.latent_chunk_sizes = {out.latent.mean.frames()};
        return out;
    }
    EncoderSession session(model.shared_from_this());
    std::vector<Tensor> means, logvars, l2, l3;
    std::size_t t = 0;
    for (std::size_t size : plan.chunk_sizes(video.frames())) {
        auto step = session.push(video.slice_frames(t, t + size));
        t += size;
        if (step.latent.mean.has_frames()) out.latent_chunk_sizes.push_back(step.latent.mean.frames());
        means.push_back(std::move(step.latent.mean));
        logvars.push_back(std::move(step.latent.logvar));
        l2.push_back(std::move(step.level2));
        l3.push_back(std::move(step.level3));
    }
    session.finalize();
    out.latent.mean = concat_frames(means);
    out.latent.logvar = concat_frames(logvars);
    out.level2 = unstack_subbands3d(concat_frames(l2));
    out.level3 = unstack_subbands2d(concat_frames(l3));
    return out;
}

DecodeResult decode(const Tensor& z, const Model& model, std::size_t original_frames, const ChunkPlan& plan) {
    model.check_latent(z.shape());
    if (original_frames != Model::video_frames(z.frames()))
        throw ShapeError(std::to_string(z.frames()) + " latent frames decode to " +
                         std::to_string(Model::video_frames(z.frames())) + " frames, not " +
                         std::to_string(original_frames));
    DecoderSession::Step all;
    if (!plan.streamed()) {
        DirectExecutor ex;
        all = model.decoder_step(ex, z);
    } else {
        DecoderSession session(model.shared_from_this());
        std::vector<Tensor> video, l2, l3, l2o, l1o;
        std::size_t t = 0;
        for (std::size_t size : plan.chunk_sizes(z.frames())) {
            auto step = session.push(z.slice_frames(t, t + size));
            t += size;
            video.push_back(std::move(step.video));
            l2.push_back(std::move(step.level2));
            l3.push_back(std::move(step.level3));
            l2o.push_back(std::move(step.level2_outflow));
            l1o.push_back(std::move(step.level1_outflow));
        }
        session.finalize();
        all.video = concat_frames(video);
        all.level2 = concat_frames(l2);
        all.level3 = concat_frames(l3);
        all.level2_outflow = concat_frames(l2o);
        all.level1_outflow = concat_frames(l1o);
    }
    DecodeResult out;
    out.video = std::move(all.video);
    out.level2 = unstack_subbands3d(all.level2);
    out.level3 = unstack_subbands2d(all.level3);
    out.level2_outflow = unstack_subbands3d(all.level2_outflow);
    out.level1_outflow = unstack_subbands3d(all.level1_outflow);
    return out;
}

Tensor sample_latent(const GaussianLatent& g, Rng& rng) {
    require_same_shape(g.mean, g.logvar, "sample_latent");
    if (!all_finite(g.logvar) || !all_finite(g.mean)) throw ValueError("latent has non-finite values");
    Tensor z(g.mean.shape());
    auto m = g.mean.data(), lv = g.logvar.data();
    auto out = z.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<float>(m[i] + std::exp(0.5 * lv[i]) * rng.normal());
    return z;
}

ForwardResult forward(const Tensor& video, const Model& model, Rng& rng, const ChunkPlan& plan) {
    ForwardResult r;
    r.encoded = encode(video, model, plan);
    r.latent = r.encoded.latent;
    r.z = sample_latent(r.latent, rng);
    const ChunkPlan decode_plan =
        plan.streamed() ? ChunkPlan::make_explicit(r.encoded.latent_chunk_sizes) : ChunkPlan::make_direct();
    r.decoded = decode(r.z, model, video.frames(), decode_plan);
    r.reconstruction = r.decoded.video;
    return r;
}

} // namespace wfc

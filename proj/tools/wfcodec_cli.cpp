// wfcodec command-line tool. Every command prints a JSON report on stdout
// and a short summary on stderr. Exit status: 0 pass, 1 fail, 2 usage,
// 2 + wfc_status for library errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wfcodec/wfcodec.h"

namespace {

using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct LibraryError {
    wfc_status status;
    std::string message;
};

void check(wfc_status s) {
    if (s != WFC_OK) throw LibraryError{s, wfc_last_error()};
}

template <class T, void (*Free)(T*)> struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using TensorPtr = std::unique_ptr<wfc_tensor, Deleter<wfc_tensor, wfc_tensor_free>>;
using PyramidPtr = std::unique_ptr<wfc_pyramid, Deleter<wfc_pyramid, wfc_pyramid_free>>;
using ModelPtr = std::unique_ptr<wfc_model, Deleter<wfc_model, wfc_model_free>>;
using SubbandsPtr = std::unique_ptr<wfc_subbands, Deleter<wfc_subbands, wfc_subbands_free>>;
using EncodedPtr = std::unique_ptr<wfc_encoded, Deleter<wfc_encoded, wfc_encoded_free>>;
using DecodedPtr = std::unique_ptr<wfc_decoded, Deleter<wfc_decoded, wfc_decoded_free>>;

TensorPtr load_tensor(const std::string& path) {
    wfc_tensor* t = nullptr;
    check(wfc_tensor_load(path.c_str(), &t));
    return TensorPtr(t);
}

std::string digest(const wfc_tensor* t) {
    char buf[WFC_DIGEST_SIZE];
    check(wfc_tensor_digest(t, buf));
    return buf;
}

json shape_json(const wfc_tensor* t) {
    const wfc_shape s = wfc_tensor_shape(t);
    return json::array({s.c, s.t, s.h, s.w});
}

std::string shape_text(const wfc_tensor* t) {
    const wfc_shape s = wfc_tensor_shape(t);
    std::ostringstream o;
    o << "(" << s.c << "," << s.t << "," << s.h << "," << s.w << ")";
    return o.str();
}

// Report assembled by each command.
struct Report {
    explicit Report(std::string cmd) : command(std::move(cmd)) {}
    std::string command;
    json inputs_digest = json::object();
    json metrics = json::object();
    json tolerances = json::object();
    bool pass = true;
    std::string summary;
};

int emit(const Report& r) {
    json out{{"command", r.command},
             {"inputs_digest", r.inputs_digest},
             {"metrics", r.metrics},
             {"verdict", r.pass ? "pass" : "fail"},
             {"tolerances", r.tolerances}};
    std::cout << out.dump(2) << std::endl;
    std::cerr << r.command << ": " << (r.pass ? "PASS" : "FAIL");
    if (!r.summary.empty()) std::cerr << " - " << r.summary;
    std::cerr << std::endl;
    return r.pass ? kExitPass : kExitFail;
}

int emit_error(const std::string& command, const LibraryError& e) {
    json out{{"command", command},
             {"verdict", "error"},
             {"error", {{"kind", wfc_status_name(e.status)}, {"message", e.message}}}};
    std::cout << out.dump(2) << std::endl;
    std::cerr << command << ": " << wfc_status_name(e.status) << ": " << e.message << std::endl;
    return kExitUsage + static_cast<int>(e.status);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// Model selection shared by encode, decode and verify-stream.
struct ModelOptions {
    std::string preset = "wfvae-s";
    std::size_t latent_channels = 4;
    std::optional<std::size_t> base_channels;
    std::optional<std::size_t> c_flow;
    std::string weights;
    std::uint64_t seed = 42;
    bool groupnorm = false;

    void add(CLI::App* app, bool allow_seed) {
        app->add_option("--preset", preset, "Model preset")
            ->check(CLI::IsMember({"wfvae-s", "wfvae-m", "wfvae-l"}));
        app->add_option("--latent-channels", latent_channels, "Latent channels")
            ->check(CLI::IsMember({4, 8, 16, 32}));
        app->add_option("--base-channels", base_channels, "Override the preset's base width");
        app->add_option("--c-flow", c_flow, "Override the preset's energy-flow width");
        auto* w = app->add_option("--weights", weights, "WFWT weight file");
        if (allow_seed) {
            app->add_option("--seed", seed, "Initialize weights from this seed when --weights is absent");
        } else {
            w->required();
        }
    }

    wfc_config config() const {
        wfc_config c{};
        check(wfc_config_preset(preset.c_str(), latent_channels, &c));
        if (base_channels) c.base_channels = *base_channels;
        if (c_flow) c.c_flow = *c_flow;
        if (groupnorm) c.norm = WFC_NORM_GROUPNORM;
        return c;
    }

    ModelPtr load() const {
        const wfc_config c = config();
        wfc_model* m = nullptr;
        if (!weights.empty())
            check(wfc_model_load(&c, weights.c_str(), &m));
        else
            check(wfc_model_init(&c, seed, &m));
        return ModelPtr(m);
    }

    void describe(Report& r, const wfc_model* m) const {
        char d[WFC_DIGEST_SIZE];
        check(wfc_model_digest(m, d));
        r.inputs_digest["weights"] = d;
        const wfc_config c = config();
        r.metrics["model"] = {{"preset", preset},
                              {"base_channels", c.base_channels},
                              {"c_flow", c.c_flow},
                              {"latent_channels", c.latent_channels},
                              {"norm", c.norm == WFC_NORM_GROUPNORM ? "groupnorm" : "frame_layernorm"},
                              {"weights", weights.empty() ? "seed:" + std::to_string(seed) : weights}};
    }
};

// ---- commands

int cmd_roundtrip(const std::string& input, int levels, double tol, const std::string& out_dir) {
    Report r("roundtrip");
    auto v = load_tensor(input);
    r.inputs_digest["input"] = digest(v.get());
    double err = 0;
    check(wfc_roundtrip_error(v.get(), levels, &err));
    if (!out_dir.empty()) {
        wfc_pyramid* p = nullptr;
        check(wfc_pyramid_build(v.get(), &p));
        PyramidPtr pp(p);
        check(wfc_pyramid_save(p, out_dir.c_str()));
        r.metrics["pyramid_dir"] = out_dir;
    }
    r.metrics["shape"] = shape_json(v.get());
    r.metrics["levels"] = levels;
    r.metrics["max_abs_error"] = err;
    r.tolerances["max_abs_error"] = tol;
    r.pass = err <= tol;
    r.summary = "max-abs error " + fmt(err) + " over " + std::to_string(levels) + " levels";
    return emit(r);
}

int cmd_analyze(const std::string& input, std::size_t bins, std::optional<double> min_hhh) {
    Report r("analyze");
    auto v = load_tensor(input);
    r.inputs_digest["input"] = digest(v.get());
    wfc_pyramid* p = nullptr;
    check(wfc_pyramid_build(v.get(), &p));
    PyramidPtr pp(p);
    wfc_subband_stat stats[WFC_PYRAMID_BANDS];
    std::size_t n = 0;
    check(wfc_analyze(p, bins, stats, WFC_PYRAMID_BANDS, &n));
    json levels = json::array();
    double hhh1 = 0;
    bool degenerate1 = false;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = stats[i];
        if (levels.empty() || levels.back()["level"] != s.level)
            levels.push_back({{"level", s.level}, {"degenerate", s.degenerate != 0}, {"bands", json::array()}});
        levels.back()["bands"].push_back({{"key", s.key},
                                          {"energy", s.energy},
                                          {"energy_fraction", s.energy_fraction},
                                          {"entropy_bits", s.entropy_bits}});
        if (s.level == 1 && std::string(s.key) == "hhh") {
            hhh1 = s.energy_fraction;
            degenerate1 = s.degenerate != 0;
        }
    }
    r.metrics["shape"] = shape_json(v.get());
    r.metrics["bins"] = bins;
    r.metrics["levels"] = levels;
    r.metrics["level1_hhh_fraction"] = hhh1;
    r.metrics["degenerate"] = degenerate1;
    if (min_hhh) {
        r.tolerances["min_level1_hhh_fraction"] = *min_hhh;
        r.pass = !degenerate1 && hhh1 > *min_hhh;
    }
    r.summary = degenerate1 ? "level 1 is all zero (degenerate)" : "level-1 hhh energy fraction " + fmt(hhh1);
    return emit(r);
}

TensorPtr video_input(const std::string& input, const std::vector<std::size_t>& random_shape,
                      std::uint64_t data_seed) {
    if (!input.empty()) return load_tensor(input);
    if (random_shape.size() != 4) throw CLI::ValidationError("--random", "expects c,t,h,w");
    wfc_tensor* t = nullptr;
    check(wfc_tensor_random_uniform(wfc_shape{random_shape[0], random_shape[1], random_shape[2], random_shape[3]},
                                    data_seed, -1.0f, 1.0f, &t));
    return TensorPtr(t);
}

int cmd_verify_stream(const TensorPtr& video, const ModelOptions& mo, const std::vector<std::string>& plans,
                      double tol) {
    Report r("verify-stream");
    r.inputs_digest["input"] = digest(video.get());
    const wfc_shape vs = wfc_tensor_shape(video.get());
    // Validate every plan before the expensive runs.
    for (const auto& p : plans) {
        std::size_t count = 0;
        std::vector<std::size_t> sizes(vs.t);
        check(wfc_plan_chunks(p.c_str(), vs.t, sizes.data(), sizes.size(), &count));
    }
    auto model = mo.load();
    mo.describe(r, model.get());

    auto t0 = std::chrono::steady_clock::now();
    wfc_encoded* e = nullptr;
    check(wfc_encode(model.get(), video.get(), "direct", &e));
    EncodedPtr direct_enc(e);
    wfc_tensor *mean = nullptr, *logvar = nullptr;
    check(wfc_encoded_mean(e, &mean));
    TensorPtr direct_mean(mean);
    check(wfc_encoded_logvar(e, &logvar));
    TensorPtr direct_logvar(logvar);
    wfc_decoded* d = nullptr;
    check(wfc_decode(model.get(), direct_mean.get(), vs.t, "direct", &d));
    DecodedPtr direct_dec(d);
    wfc_tensor* video_out = nullptr;
    check(wfc_decoded_video(d, &video_out));
    TensorPtr direct_video(video_out);

    json rows = json::array();
    double worst = 0;
    for (const auto& p : plans) {
        check(wfc_encode(model.get(), video.get(), p.c_str(), &e));
        EncodedPtr enc(e);
        char decode_plan[4096];
        check(wfc_encoded_decode_plan(e, decode_plan, sizeof decode_plan));
        check(wfc_encoded_mean(e, &mean));
        TensorPtr m(mean);
        check(wfc_encoded_logvar(e, &logvar));
        TensorPtr lv(logvar);
        // The decoder sees the same latent as the direct path so that only
        // the chunking differs.
        check(wfc_decode(model.get(), direct_mean.get(), vs.t, decode_plan, &d));
        DecodedPtr dec(d);
        check(wfc_decoded_video(d, &video_out));
        TensorPtr v(video_out);
        double dm = 0, dl = 0, dv = 0;
        check(wfc_tensor_max_abs_diff(m.get(), direct_mean.get(), &dm));
        check(wfc_tensor_max_abs_diff(lv.get(), direct_logvar.get(), &dl));
        check(wfc_tensor_max_abs_diff(v.get(), direct_video.get(), &dv));
        const double plan_worst = std::max({dm, dl, dv});
        worst = std::max(worst, plan_worst);
        rows.push_back({{"plan", p},
                        {"decode_plan", decode_plan},
                        {"encode_mean_max_abs_dev", dm},
                        {"encode_logvar_max_abs_dev", dl},
                        {"decode_max_abs_dev", dv},
                        {"pass", plan_worst <= tol}});
        std::cerr << "  " << p << ": encode " << fmt(std::max(dm, dl)) << ", decode " << fmt(dv) << std::endl;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.metrics["shape"] = shape_json(video.get());
    r.metrics["latent_shape"] = shape_json(direct_mean.get());
    r.metrics["plans"] = rows;
    r.metrics["max_abs_deviation"] = worst;
    r.metrics["seconds"] = secs;
    r.tolerances["max_abs_deviation"] = tol;
    r.pass = worst <= tol;
    r.summary = std::to_string(plans.size()) + " plans, worst deviation " + fmt(worst);
    return emit(r);
}

int cmd_cache_table(std::size_t k, std::size_t s, std::size_t chunk, std::size_t m_max) {
    Report r("cache-table");
    r.inputs_digest = {{"k_t", k}, {"s_t", s}, {"t_chunk", chunk}, {"m_max", m_max}};
    json rows = json::array();
    bool all = true;
    for (std::size_t m = 0; m <= m_max; ++m) {
        std::int64_t formula = 0, walk = 0;
        check(wfc_cache_len(k, s, chunk, m, &formula));
        check(wfc_cache_len_window_walk(k, s, chunk, m, &walk));
        all = all && formula == walk;
        rows.push_back({{"m", m},
                        {"cache_len", formula},
                        {"window_oracle", walk},
                        {"occupancy", std::max<std::int64_t>(0, formula)},
                        {"agree", formula == walk}});
    }
    r.metrics["rows"] = rows;
    r.metrics["all_agree"] = all;
    r.tolerances["cache_len"] = "exact";
    r.pass = all;
    r.summary = std::to_string(m_max + 1) + " rows, formula and window oracle " + (all ? "agree" : "DISAGREE");
    return emit(r);
}

int cmd_encode(const std::string& input, const ModelOptions& mo, const std::string& plan,
               const std::string& output, const std::string& subbands_dir) {
    Report r("encode");
    auto v = load_tensor(input);
    r.inputs_digest["input"] = digest(v.get());
    auto model = mo.load();
    mo.describe(r, model.get());
    wfc_encoded* e = nullptr;
    check(wfc_encode(model.get(), v.get(), plan.c_str(), &e));
    EncodedPtr enc(e);
    wfc_tensor *mean = nullptr, *logvar = nullptr;
    check(wfc_encoded_mean(e, &mean));
    TensorPtr m(mean);
    check(wfc_encoded_logvar(e, &logvar));
    TensorPtr lv(logvar);
    const std::string mean_path = output + ".mean.wfvt", logvar_path = output + ".logvar.wfvt";
    check(wfc_tensor_save(m.get(), mean_path.c_str()));
    check(wfc_tensor_save(lv.get(), logvar_path.c_str()));
    if (!subbands_dir.empty()) {
        wfc_subbands* s = nullptr;
        check(wfc_encoded_subbands(e, &s));
        SubbandsPtr sp(s);
        check(wfc_subbands_save(s, subbands_dir.c_str()));
        r.metrics["subbands_dir"] = subbands_dir;
    }
    char decode_plan[4096];
    check(wfc_encoded_decode_plan(e, decode_plan, sizeof decode_plan));
    r.metrics["mode"] = plan;
    r.metrics["input_shape"] = shape_json(v.get());
    r.metrics["latent_shape"] = shape_json(m.get());
    r.metrics["latent_chunks"] = decode_plan;
    r.metrics["outputs"] = {{"mean", mean_path}, {"logvar", logvar_path}};
    r.metrics["digests"] = {{"mean", digest(m.get())}, {"logvar", digest(lv.get())}};
    r.summary = shape_text(v.get()) + " -> latent " + shape_text(m.get());
    return emit(r);
}

int cmd_decode(const std::string& input, const ModelOptions& mo, const std::string& plan,
               std::optional<std::size_t> frames, const std::string& output, const std::string& subbands_dir) {
    Report r("decode");
    auto z = load_tensor(input);
    r.inputs_digest["input"] = digest(z.get());
    auto model = mo.load();
    mo.describe(r, model.get());
    const std::size_t t = frames.value_or(4 * (wfc_tensor_shape(z.get()).t - 1) + 1);
    wfc_decoded* d = nullptr;
    check(wfc_decode(model.get(), z.get(), t, plan.c_str(), &d));
    DecodedPtr dec(d);
    wfc_tensor* out = nullptr;
    check(wfc_decoded_video(d, &out));
    TensorPtr v(out);
    check(wfc_tensor_save(v.get(), output.c_str()));
    if (!subbands_dir.empty()) {
        wfc_subbands* s = nullptr;
        check(wfc_decoded_subbands(d, &s));
        SubbandsPtr sp(s);
        check(wfc_subbands_save(s, subbands_dir.c_str()));
        r.metrics["subbands_dir"] = subbands_dir;
    }
    r.metrics["mode"] = plan;
    r.metrics["latent_shape"] = shape_json(z.get());
    r.metrics["video_shape"] = shape_json(v.get());
    r.metrics["output"] = output;
    r.metrics["digest"] = digest(v.get());
    r.summary = "latent " + shape_text(z.get()) + " -> " + shape_text(v.get());
    return emit(r);
}

int cmd_init_weights(const ModelOptions& mo, const std::string& output) {
    Report r("init-weights");
    auto model = mo.load();
    check(wfc_model_save_weights(model.get(), output.c_str()));
    std::size_t count = 0;
    check(wfc_model_parameter_count(model.get(), &count));
    char d[WFC_DIGEST_SIZE];
    check(wfc_model_digest(model.get(), d));
    mo.describe(r, model.get());
    r.inputs_digest = {{"seed", mo.seed}};
    r.metrics["parameter_count"] = count;
    r.metrics["digest"] = d;
    r.metrics["output"] = output;
    r.summary = std::to_string(count) + " parameters, digest " + std::string(d).substr(0, 16);
    return emit(r);
}

struct LossOptions {
    std::string input, recon, latent, pred_subbands;
    std::optional<double> perceptual, adv, grad_recon, grad_adv;
    wfc_loss_weights weights = wfc_loss_weights_default();
};

int cmd_loss_report(const LossOptions& o) {
    Report r("loss-report");
    auto x = load_tensor(o.input);
    auto xh = load_tensor(o.recon);
    auto mean = load_tensor(o.latent + ".mean.wfvt");
    auto logvar = load_tensor(o.latent + ".logvar.wfvt");
    r.inputs_digest = {{"input", digest(x.get())},
                       {"recon", digest(xh.get())},
                       {"latent_mean", digest(mean.get())},
                       {"latent_logvar", digest(logvar.get())}};
    wfc_loss_components c{};
    check(wfc_l1_recon(x.get(), xh.get(), &c.recon));
    check(wfc_kl_divergence(mean.get(), logvar.get(), &c.kl));
    r.metrics["l1_recon"] = c.recon;
    r.metrics["kl"] = c.kl;
    if (!o.pred_subbands.empty()) {
        wfc_subbands* pred = nullptr;
        check(wfc_subbands_load(o.pred_subbands.c_str(), &pred));
        SubbandsPtr pp(pred);
        wfc_pyramid* p = nullptr;
        check(wfc_pyramid_build(x.get(), &p));
        PyramidPtr pyr(p);
        wfc_subbands* ref = nullptr;
        check(wfc_subbands_from_pyramid(p, &ref));
        SubbandsPtr rp(ref);
        check(wfc_wl_loss(pred, ref, &c.wl));
        r.metrics["wl"] = c.wl;
    } else {
        r.metrics["wl"] = nullptr;
    }
    if (o.perceptual) {
        c.perceptual = *o.perceptual;
        c.has_perceptual = 1;
    }
    r.metrics["perceptual"] = o.perceptual ? json(*o.perceptual) : json(nullptr);
    if (o.adv) c.adv = *o.adv;
    r.metrics["adv"] = o.adv ? json(*o.adv) : json(nullptr);
    wfc_loss_weights w = o.weights;
    if (o.grad_recon && o.grad_adv) {
        check(wfc_adaptive_adv_weight(*o.grad_recon, *o.grad_adv, w.delta, &w.adv));
        r.metrics["adaptive_adv_weight"] = w.adv;
    } else {
        r.metrics["adaptive_adv_weight"] = nullptr;
    }
    double total = 0;
    check(wfc_total_loss(&c, &w, &total));
    r.metrics["total"] = total;
    r.metrics["weights"] = {{"adv", w.adv}, {"kl", w.kl}, {"wl", w.wl}, {"delta", w.delta}};
    r.metrics["reduction"] = "mean";
    r.summary = "total " + fmt(total) + " (l1 " + fmt(c.recon) + ", kl " + fmt(c.kl) + ", wl " +
                (o.pred_subbands.empty() ? std::string("n/a") : fmt(c.wl)) + ")";
    return emit(r);
}

std::vector<std::size_t> parse_shape(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(std::stoul(part));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wfcodec: wavelet pyramids, causal streaming checks and the energy-flow video autoencoder"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(wfc_version()));

    std::string input, output, out_dir, plan = "direct", subbands_dir;
    int levels = 3;
    double tol = 1e-5;
    std::size_t bins = 256;
    std::optional<double> min_hhh;

    auto* roundtrip = app.add_subcommand("roundtrip", "Pyramid forward/inverse roundtrip error");
    roundtrip->add_option("--input", input, "VTensor file")->required();
    roundtrip->add_option("--levels", levels, "Levels (1-3)")->check(CLI::Range(1, 3));
    roundtrip->add_option("--tol", tol, "Max-abs error tolerance");
    roundtrip->add_option("--output-dir", out_dir, "Also write the pyramid here");

    auto* analyze = app.add_subcommand("analyze", "Subband energy and entropy report");
    analyze->add_option("--input", input, "VTensor file")->required();
    analyze->add_option("--bins", bins, "Histogram bins for entropy");
    analyze->add_option("--min-hhh-fraction", min_hhh, "Fail unless level-1 hhh fraction exceeds this");

    ModelOptions vs_model;
    std::vector<std::string> plans;
    std::string random_shape;
    std::uint64_t data_seed = 0;
    double stream_tol = 1e-6;
    auto* verify = app.add_subcommand("verify-stream", "Streamed vs direct encode/decode deviation");
    auto* vin = verify->add_option("--input", input, "VTensor file");
    verify->add_option("--random", random_shape, "Use a seeded uniform[-1,1) video of shape c,t,h,w")
        ->excludes(vin);
    verify->add_option("--data-seed", data_seed, "Seed for --random");
    vs_model.add(verify, true);
    verify->add_option("--plan", plans, "Chunk plan (repeatable)");
    verify->add_flag("--groupnorm", vs_model.groupnorm, "Swap in whole-clip group normalization (negative control)");
    verify->add_option("--tol", stream_tol, "Max-abs deviation tolerance");

    std::size_t k = 3, s = 1, chunk = 4, m_max = 10;
    auto* cache = app.add_subcommand("cache-table", "Causal cache length table with window-walk cross-check");
    cache->add_option("--k", k, "Temporal kernel size")->required()->check(CLI::PositiveNumber);
    cache->add_option("--s", s, "Temporal stride")->required()->check(CLI::PositiveNumber);
    cache->add_option("--chunk", chunk, "Frames per chunk")->required()->check(CLI::PositiveNumber);
    cache->add_option("--m-max", m_max, "Last chunk index");

    ModelOptions enc_model;
    auto* encode = app.add_subcommand("encode", "Encode a video to latent mean/logvar files");
    encode->add_option("--input", input, "VTensor video")->required();
    enc_model.add(encode, true);
    encode->add_option("--plan", plan, "Chunk plan");
    encode->add_option("--output", output, "Output prefix (writes PREFIX.mean.wfvt, PREFIX.logvar.wfvt)")
        ->required();
    encode->add_option("--subbands-dir", subbands_dir, "Write the encoder's level-2/3 subbands here");

    ModelOptions dec_model;
    std::optional<std::size_t> frames;
    auto* decode = app.add_subcommand("decode", "Decode a latent file to video");
    decode->add_option("--input", input, "VTensor latent")->required();
    dec_model.add(decode, true);
    decode->add_option("--plan", plan, "Chunk plan over latent frames");
    decode->add_option("--frames", frames, "Original frame count (default 4(t'-1)+1)");
    decode->add_option("--output", output, "Output VTensor")->required();
    decode->add_option("--subbands-dir", subbands_dir, "Write predicted level-2/3 subbands here");

    ModelOptions init_model;
    auto* init = app.add_subcommand("init-weights", "Write seed-initialized weights");
    init_model.add(init, true);
    init->add_option("--output", output, "WFWT output")->required();

    LossOptions lo;
    auto* loss = app.add_subcommand("loss-report", "Computable loss components for a reconstruction");
    loss->add_option("--input", lo.input, "Reference VTensor")->required();
    loss->add_option("--recon", lo.recon, "Reconstruction VTensor")->required();
    loss->add_option("--latent", lo.latent, "Latent prefix (PREFIX.mean.wfvt, PREFIX.logvar.wfvt)")->required();
    loss->add_option("--pred-subbands", lo.pred_subbands, "Decoder subband directory for the WL term");
    loss->add_option("--perceptual", lo.perceptual, "Externally computed perceptual loss");
    loss->add_option("--adv", lo.adv, "Externally computed adversarial loss");
    loss->add_option("--grad-norm-recon", lo.grad_recon, "Gradient norm of the reconstruction loss");
    loss->add_option("--grad-norm-adv", lo.grad_adv, "Gradient norm of the adversarial loss");
    loss->add_option("--lambda-adv", lo.weights.adv, "Adversarial weight when no gradient norms are given")
        ->check(CLI::NonNegativeNumber);
    loss->add_option("--lambda-kl", lo.weights.kl, "KL weight")->check(CLI::NonNegativeNumber);
    loss->add_option("--lambda-wl", lo.weights.wl, "WL weight")->check(CLI::NonNegativeNumber);
    loss->add_option("--delta", lo.weights.delta, "Adaptive weight stabilizer")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        if (*roundtrip) return cmd_roundtrip(input, levels, tol, out_dir);
        if (*analyze) return cmd_analyze(input, bins, min_hhh);
        if (*verify) {
            if (plans.empty()) plans = {"canonical:4", "canonical:8", "explicit:1,3,5,7,9,8"};
            auto video = video_input(input, random_shape.empty() ? std::vector<std::size_t>{} : parse_shape(random_shape),
                                     data_seed);
            return cmd_verify_stream(video, vs_model, plans, stream_tol);
        }
        if (*cache) return cmd_cache_table(k, s, chunk, m_max);
        if (*encode) return cmd_encode(input, enc_model, plan, output, subbands_dir);
        if (*decode) return cmd_decode(input, dec_model, plan, frames, output, subbands_dir);
        if (*init) return cmd_init_weights(init_model, output);
        if (*loss) return cmd_loss_report(lo);
    } catch (const LibraryError& e) {
        return emit_error(command, e);
    } catch (const CLI::ParseError& e) {
        std::cerr << command << ": " << e.what() << std::endl;
        return kExitUsage;
    } catch (const std::exception& e) {
        return emit_error(command, LibraryError{WFC_ERR_INTERNAL, e.what()});
    }
    return kExitUsage;
}

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "wfcodec/wfvae_net.hpp"

using namespace wfc;

namespace {

// Narrow widths keep these tests fast; shapes and topology do not depend on width.
ModelConfig small_config(std::size_t latent = 4) {
    ModelConfig c;
    c.name = "test-small";
    c.base_channels = 8;
    c.c_flow = 8;
    c.latent_channels = latent;
    c.blocks_per_stage = 1;
    return c;
}

std::shared_ptr<const Model> small_model(std::uint64_t seed, std::size_t latent = 4) {
    Rng rng(seed);
    auto cfg = small_config(latent);
    return Model::create(cfg, init_weights(cfg, rng));
}

} // namespace

TEST_CASE("presets and config validation") {
    auto s = ModelConfig::preset("wfvae-s", 4);
    CHECK(s.base_channels == 128);
    CHECK(ModelConfig::preset("wfvae-m", 16).base_channels == 160);
    CHECK(ModelConfig::preset("wfvae-l", 4).base_channels == 192);
    CHECK(s.c_flow == 128);
    CHECK(s.stage_widths() == std::array<std::size_t, 3>{128, 256, 384});
    CHECK_THROWS_AS(ModelConfig::preset("wfvae-x", 4), ParameterError);
    CHECK_THROWS_AS(ModelConfig::preset("wfvae-s", 5), ParameterError);
    for (std::size_t l : {4u, 8u, 16u, 32u}) CHECK_NOTHROW(ModelConfig::preset("wfvae-s", l));
}

TEST_CASE("init_weights is deterministic with the stated scheme") {
    auto cfg = ModelConfig::preset("wfvae-s", 4);
    Rng a(42), b(42), c(43);
    auto wa = init_weights(cfg, a);
    auto wb = init_weights(cfg, b);
    CHECK(wa == wb);
    CHECK(digest(wa) == digest(wb));
    CHECK(digest(wa) != digest(init_weights(cfg, c)));

    const auto& stem = wa.get("enc.stem.weight");
    CHECK(stem.dims == std::vector<std::uint32_t>{128, 24, 3, 3, 3});
    double s2 = 0;
    for (float v : stem.values) s2 += double(v) * v;
    CHECK(s2 / double(stem.values.size()) == doctest::Approx(1.0 / (24 * 27)).epsilon(0.05));

    for (const auto& [name, arr] : wa.entries()) {
        if (name.ends_with(".bias"))
            for (float v : arr.values) CHECK(v == 0.0f);
        if (name.ends_with(".gain"))
            for (float v : arr.values) CHECK(v == 1.0f);
    }
    const auto layout = parameter_layout(cfg);
    CHECK(layout.size() == wa.size());
}

TEST_CASE("weight file roundtrip and validation") {
    Rng rng(60);
    auto cfg = small_config();
    auto w = init_weights(cfg, rng);
    const auto dir = std::filesystem::temp_directory_path() / "wfcodec_tests";
    std::filesystem::create_directories(dir);
    save_weights(w, dir / "small.wfwt");
    auto back = load_weights(dir / "small.wfwt");
    CHECK(back == w);

    auto bytes = encode_weights(w);
    bytes[0] = 'X';
    CHECK_THROWS_AS(decode_weights(bytes), FormatError);
    bytes = encode_weights(w);
    bytes.pop_back();
    CHECK_THROWS_AS(decode_weights(bytes), FormatError);

    // Weights for a different width are rejected by the model.
    auto other = small_config();
    other.base_channels = 16;
    CHECK_THROWS_AS(Model::create(other, w), WeightError);
    auto missing = w;
    WeightStore partial;
    for (const auto& [name, arr] : missing.entries())
        if (name != "dec.head.conv.bias") partial.set(name, arr.dims, arr.values);
    CHECK_THROWS_AS(Model::create(cfg, partial), WeightError);
    auto extra = w;
    extra.set("unused.bias", {1}, {0.0f});
    CHECK_THROWS_AS(Model::create(cfg, extra), WeightError);

    // Reloaded weights give bit-identical forward results.
    auto v = random_uniform(rng, Shape{3, 5, 16, 16}, -1, 1);
    auto m1 = Model::create(cfg, w), m2 = Model::create(cfg, back);
    Rng s1(1), s2(1);
    auto f1 = forward(v, *m1, s1, ChunkPlan::make_direct());
    auto f2 = forward(v, *m2, s2, ChunkPlan::make_direct());
    CHECK(f1.reconstruction.bit_equal(f2.reconstruction));
}

TEST_CASE("shape laws") {
    auto m = small_model(61);
    Rng rng(62);
    for (std::size_t t : {1u, 5u, 9u, 17u}) {
        auto v = random_uniform(rng, Shape{3, t, 16, 24}, -1, 1);
        auto e = encode(v, *m, ChunkPlan::make_direct());
        CHECK(e.latent.mean.shape() == Shape{4, (t - 1) / 4 + 1, 2, 3});
        CHECK(e.latent.logvar.shape() == e.latent.mean.shape());
        auto d = decode(e.latent.mean, *m, t, ChunkPlan::make_direct());
        CHECK(d.video.shape() == v.shape());
        CHECK(d.level2.band_shape() == Shape{3, (t - 1) / 4 + 1, 4, 6});
        CHECK(d.level3.band_shape() == Shape{3, (t - 1) / 4 + 1, 2, 3});
    }
    CHECK_THROWS_AS(encode(new_tensor(3, 4, 16, 16, 0.0f), *m, ChunkPlan::make_direct()), ShapeError);
    CHECK_THROWS_AS(encode(new_tensor(3, 5, 12, 16, 0.0f), *m, ChunkPlan::make_direct()), ShapeError);
    CHECK_THROWS_AS(encode(new_tensor(1, 5, 16, 16, 0.0f), *m, ChunkPlan::make_direct()), ShapeError);
    CHECK_THROWS_AS(decode(new_tensor(4, 2, 2, 2, 0.0f), *m, 9, ChunkPlan::make_direct()), ShapeError);
    CHECK_THROWS_AS(decode(new_tensor(3, 2, 2, 2, 0.0f), *m, 5, ChunkPlan::make_direct()), ShapeError);
}

TEST_CASE("encoder echoes the wavelet pyramid") {
    auto m = small_model(63);
    Rng rng(64);
    auto v = random_uniform(rng, Shape{3, 9, 16, 16}, -1, 1);
    auto e = encode(v, *m, ChunkPlan::make_direct());
    auto p = build_pyramid(v);
    for (int k = 0; k < 8; ++k) CHECK(max_abs_diff(e.level2.bands[k], p.level2.bands[k]) <= 1e-6f);
    for (int k = 0; k < 4; ++k) CHECK(max_abs_diff(e.level3.bands[k], p.level3.bands[k]) <= 1e-6f);
}

TEST_CASE("streamed encode and decode equal direct evaluation") {
    auto m = small_model(65);
    Rng rng(66);
    auto v = random_uniform(rng, Shape{3, 17, 16, 16}, -1, 1);
    auto direct = encode(v, *m, ChunkPlan::make_direct());
    auto dd = decode(direct.latent.mean, *m, 17, ChunkPlan::make_direct());
    for (const char* plan : {"canonical:4", "canonical:1", "canonical:8", "explicit:1,3,5,7,1", "explicit:2,2,13",
                             "explicit:17"}) {
        auto s = encode(v, *m, ChunkPlan::parse(plan));
        CHECK(max_abs_diff(s.latent.mean, direct.latent.mean) <= 1e-6f);
        CHECK(max_abs_diff(s.latent.logvar, direct.latent.logvar) <= 1e-6f);
        for (int k = 0; k < 8; ++k) CHECK(s.level2.bands[k].bit_equal(direct.level2.bands[k]));
        auto ds = decode(direct.latent.mean, *m, 17, ChunkPlan::make_explicit(s.latent_chunk_sizes));
        CHECK(max_abs_diff(ds.video, dd.video) <= 1e-6f);
        for (int k = 0; k < 8; ++k) CHECK(max_abs_diff(ds.level2.bands[k], dd.level2.bands[k]) <= 1e-6f);
    }
    for (const char* plan : {"canonical:1", "explicit:2,3", "explicit:1,1,1,1,1"}) {
        auto ds = decode(direct.latent.mean, *m, 17, ChunkPlan::parse(plan));
        CHECK(max_abs_diff(ds.video, dd.video) <= 1e-6f);
    }
}

TEST_CASE("sessions reject use after finalize") {
    auto m = small_model(67);
    EncoderSession s(m);
    s.push(new_tensor(3, 1, 16, 16, 0.1f));
    s.finalize();
    CHECK_THROWS_AS(s.push(new_tensor(3, 4, 16, 16, 0.1f)), StateError);
}

TEST_CASE("group normalization makes streaming inexact") {
    Rng rng(68);
    auto cfg = small_config();
    cfg.norm = NormKind::groupnorm;
    auto m = Model::create(cfg, init_weights(cfg, rng));
    auto v = random_uniform(rng, Shape{3, 9, 16, 16}, -1, 1);
    auto direct = encode(v, *m, ChunkPlan::make_direct());
    auto s = encode(v, *m, ChunkPlan::parse("explicit:5,4"));
    CHECK(max_abs_diff(s.latent.mean, direct.latent.mean) > 1e-3f);
}

TEST_CASE("end-to-end causality of the first frame") {
    auto m = small_model(69);
    Rng rng(70);
    auto v = random_uniform(rng, Shape{3, 9, 16, 16}, -1, 1);
    auto p = v;
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t i = p.offset(c, 1, 0, 0); i < p.offset(c, 8, 15, 15) + 1; ++i) p.data()[i] *= -0.5f;
    auto ea = encode(v, *m, ChunkPlan::make_direct()), eb = encode(p, *m, ChunkPlan::make_direct());
    CHECK(ea.latent.mean.slice_frames(0, 1).bit_equal(eb.latent.mean.slice_frames(0, 1)));
    CHECK_FALSE(ea.latent.mean.slice_frames(1, 2).bit_equal(eb.latent.mean.slice_frames(1, 2)));

    Rng sa(5), sb(5);
    auto fa = forward(v, *m, sa, ChunkPlan::make_direct());
    auto fb = forward(p, *m, sb, ChunkPlan::make_direct());
    CHECK(fa.reconstruction.slice_frames(0, 1).bit_equal(fb.reconstruction.slice_frames(0, 1)));
}

TEST_CASE("zero weights give a zero video") {
    Rng rng(71);
    auto cfg = small_config();
    auto w = init_weights(cfg, rng);
    w.zero();
    auto m = Model::create(cfg, w);
    auto d = decode(random_normal(rng, Shape{4, 3, 2, 2}, 0, 1), *m, 9, ChunkPlan::make_direct());
    for (float x : d.video.data()) CHECK(x == 0.0f);
}

TEST_CASE("decoder recombination is additive") {
    auto m = small_model(72);
    Rng rng(73);
    auto z = random_normal(rng, Shape{4, 3, 2, 2}, 0, 1);
    auto d = decode(z, *m, 9, ChunkPlan::make_direct());
    // Level 2 = outflow + inverse 2D transform of the level-3 prediction in hhh.
    auto l2 = d.level2_outflow;
    auto up3 = idwt2d(d.level3);
    for (std::size_t i = 0; i < up3.numel(); ++i) l2.bands[0].data()[i] += up3.data()[i];
    for (int k = 0; k < 8; ++k) CHECK(max_abs_diff(l2.bands[k], d.level2.bands[k]) <= 1e-6f);
    // Level 1 = head outflow + inverse 3D transform of level 2 (pad frame dropped) in hhh.
    auto l1 = d.level1_outflow;
    auto up2 = idwt3d(d.level2, 2 * d.level2.band_shape().t - 1);
    for (std::size_t i = 0; i < up2.numel(); ++i) l1.bands[0].data()[i] += up2.data()[i];
    auto video = idwt3d(l1, 9);
    CHECK(max_abs_diff(video, d.video) <= 1e-5f);
}

TEST_CASE("sample_latent") {
    Rng rng(74);
    auto mean = random_normal(rng, Shape{4, 2, 2, 2}, 0, 1);
    auto tiny = new_tensor(4, 2, 2, 2, -60.0f);
    Rng a(1);
    CHECK(max_abs_diff(sample_latent({mean, tiny}, a), mean) <= 1e-7f);
    Rng b(2), c(2);
    auto lv = random_normal(rng, mean.shape(), 0, 0.3);
    CHECK(sample_latent({mean, lv}, b).bit_equal(sample_latent({mean, lv}, c)));

    auto m1 = new_tensor(1, 1, 1, 1, 0.3f), l1 = new_tensor(1, 1, 1, 1, 0.7f);
    Rng d(3);
    double s = 0, s2 = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const double z = sample_latent({m1, l1}, d).data()[0];
        s += z;
        s2 += z * z;
    }
    const double var = s2 / n - (s / n) * (s / n);
    CHECK(var == doctest::Approx(std::exp(0.7)).epsilon(0.05));
}

TEST_CASE("forward is deterministic and shape-preserving") {
    auto m = small_model(75, 8);
    Rng rng(76);
    auto v = random_uniform(rng, Shape{3, 5, 16, 16}, -1, 1);
    Rng a(9), b(9);
    auto fa = forward(v, *m, a, ChunkPlan::make_direct());
    auto fb = forward(v, *m, b, ChunkPlan::make_direct());
    CHECK(fa.reconstruction.shape() == v.shape());
    CHECK(fa.reconstruction.bit_equal(fb.reconstruction));
    CHECK(fa.latent.mean.channels() == 8);
    Rng c(9);
    auto fs = forward(v, *m, c, ChunkPlan::make_canonical(2));
    CHECK(max_abs_diff(fs.reconstruction, fa.reconstruction) <= 1e-6f);
}

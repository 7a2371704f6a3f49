#include <doctest.h>

#include <chrono>
#include <cmath>

#include "oracles.hpp"
#include "wfcodec/causal_ops.hpp"

using namespace wfc;

namespace {

ConvSpec spec(std::size_t in, std::size_t out, std::array<std::size_t, 3> k, std::array<std::size_t, 3> s,
              std::array<std::size_t, 2> pad = {0, 0}) {
    ConvSpec c;
    c.in_channels = in;
    c.out_channels = out;
    c.kernel = k;
    c.stride = s;
    c.padding = pad;
    return c;
}

std::vector<float> random_values(Rng& rng, std::size_t n, double scale) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.normal() * scale);
    return v;
}

Tensor stream_through(CausalCache& cache, const ConvKernel& k, const Tensor& x, const std::vector<std::size_t>& sizes) {
    std::vector<Tensor> parts;
    std::size_t t = 0;
    for (auto n : sizes) {
        parts.push_back(stream_conv3d(cache, x.slice_frames(t, t + n), k));
        t += n;
    }
    return concat_frames(parts);
}

std::vector<LayerDef> safe_stack(Rng& rng, std::size_t c) {
    auto c1 = spec(c, 4, {3, 3, 3}, {1, 1, 1}, {1, 1});
    auto c2 = spec(4, 3, {3, 3, 3}, {2, 1, 1}, {1, 1});
    return {LayerDef::make_conv(c1, random_values(rng, c1.weight_count(), 0.2), random_values(rng, 4, 0.1)),
            LayerDef::make_nonlinearity(),
            LayerDef::make_conv(c2, random_values(rng, c2.weight_count(), 0.2), random_values(rng, 3, 0.1))};
}

} // namespace

TEST_CASE("identity kernel reproduces the input") {
    Rng rng(30);
    auto x = random_normal(rng, Shape{1, 4, 5, 6}, 0, 1);
    auto y = causal_conv3d(x, spec(1, 1, {1, 1, 1}, {1, 1, 1}), std::vector<float>{1.0f}, std::vector<float>{0.0f});
    CHECK(y.bit_equal(x));
}

TEST_CASE("averaging kernel keeps constants with replicate padding") {
    const std::size_t in = 2;
    auto s = spec(in, 1, {3, 3, 3}, {1, 1, 1});
    std::vector<float> w(s.weight_count(), 1.0f / float(3 * 9 * in));
    auto x = new_tensor(in, 5, 6, 6, 0.75f);
    auto y = causal_conv3d(x, s, w, std::vector<float>{0.0f});
    CHECK(y.shape() == Shape{1, 5, 4, 4});
    for (float v : y.data()) CHECK(v == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("causal_conv3d matches the nested-loop reference") {
    Rng rng(31);
    auto s = spec(2, 3, {3, 3, 3}, {1, 1, 1}, {1, 1});
    auto x = random_normal(rng, Shape{2, 5, 6, 6}, 0, 1);
    auto w = random_values(rng, s.weight_count(), 0.3);
    auto b = random_values(rng, 3, 0.1);
    CHECK(max_abs_diff(causal_conv3d(x, s, w, b), oracle::causal_conv3d(x, s, w, b)) <= 1e-5f);

    for (int i = 0; i < 60; ++i) {
        auto c = oracle::random_conv_case(rng);
        auto got = causal_conv3d(c.input, c.spec, c.weight, c.bias);
        auto want = oracle::causal_conv3d(c.input, c.spec, c.weight, c.bias);
        REQUIRE(got.shape() == want.shape());
        CHECK(max_abs_diff(got, want) <= 1e-5f);
    }
}

TEST_CASE("output frame count law") {
    for (std::size_t st = 1; st <= 4; ++st)
        for (std::size_t T = 1; T <= 12; ++T) {
            auto s = spec(1, 1, {3, 1, 1}, {st, 1, 1});
            auto y = causal_conv3d(new_tensor(1, T, 2, 2, 1.0f), s, std::vector<float>(3, 1.0f),
                                   std::vector<float>{0.0f});
            CHECK(y.frames() == (T - 1) / st + 1);
        }
}

TEST_CASE("conv shape errors") {
    auto s = spec(2, 1, {1, 1, 1}, {1, 1, 1});
    CHECK_THROWS_AS(causal_conv3d(new_tensor(3, 1, 2, 2, 0.0f), s, std::vector<float>(2), std::vector<float>(1)),
                    ShapeError);
    CHECK_THROWS_AS(causal_conv3d(new_tensor(2, 1, 2, 2, 0.0f), s, std::vector<float>(3), std::vector<float>(1)),
                    ShapeError);
    auto big = spec(1, 1, {1, 5, 5}, {1, 1, 1});
    CHECK_THROWS_AS(causal_conv3d(new_tensor(1, 1, 3, 3, 0.0f), big, std::vector<float>(25), std::vector<float>(1)),
                    ShapeError);
    auto zero_stride = spec(1, 1, {1, 1, 1}, {0, 1, 1});
    CHECK_THROWS_AS(zero_stride.validate(), ParameterError);
}

TEST_CASE("cache_len reproduces the worked examples") {
    for (std::size_t m = 0; m <= 30; ++m) {
        CHECK(cache_len(3, 1, 4, m) == 2);
        CHECK(cache_len(3, 2, 4, m) == 1);
        CHECK(cache_len(4, 3, 4, m) == std::int64_t(m % 3) + 1);
    }
    CHECK(cache_len(4, 3, 4, 0) == 1);
    CHECK(cache_len(4, 3, 4, 1) == 2);
    CHECK(cache_len(4, 3, 4, 2) == 3);
    CHECK(cache_len(4, 3, 4, 3) == 1);
    CHECK_THROWS_AS(cache_len(0, 1, 1, 0), ParameterError);
    CHECK_THROWS_AS(cache_len(1, 0, 1, 0), ParameterError);
    CHECK_THROWS_AS(cache_len(1, 1, 0, 0), ParameterError);
}

TEST_CASE("cache_len agrees with the frame-set simulation on the full grid") {
    for (std::size_t k = 1; k <= 6; ++k)
        for (std::size_t s = 1; s <= 4; ++s)
            for (std::size_t T = 1; T <= 8; ++T)
                for (std::size_t m = 0; m <= 20; ++m) {
                    const auto want = oracle::cache_len_by_frames(k, s, T, m);
                    REQUIRE(want != -1000);
                    CHECK(cache_len(k, s, T, m) == want);
                    CHECK(cache_len_window_walk(k, s, T, m) == want);
                    CHECK(cache_occupancy(k, s, T, m) == std::size_t(std::max<std::int64_t>(0, want)));
                }
}

TEST_CASE("cache_len is periodic when stride equals kernel and chunks are multiples") {
    for (std::size_t k = 1; k <= 5; ++k)
        for (std::size_t j = 1; j <= 3; ++j)
            for (std::size_t m = 0; m <= 12; ++m)
                for (std::size_t period : {1u, 2u, 3u}) {
                    CHECK(cache_len(k, k, k * j, m + period) == cache_len(k, k, k * j, m));
                    CHECK(cache_len(k, k, k * j, m) == oracle::cache_len_by_frames(k, k, k * j, m));
                }
}

TEST_CASE("streaming cache occupancy follows the formula under canonical chunking") {
    Rng rng(32);
    for (std::size_t k = 1; k <= 4; ++k)
        for (std::size_t s = 1; s <= 3; ++s)
            for (std::size_t T : {1u, 3u, 4u}) {
                auto cs = spec(1, 1, {k, 1, 1}, {s, 1, 1});
                ConvKernel kern(cs, random_values(rng, k, 1.0), std::vector<float>{0.0f});
                CausalCache cache(k, s, TemporalPad::replicate_first);
                auto x = random_normal(rng, Shape{1, 1 + 6 * T, 2, 2}, 0, 1);
                stream_conv3d(cache, x.slice_frames(0, 1), kern);
                CHECK(cache.cached_frame_count() == cache_occupancy(k, s, T, 0));
                for (std::size_t m = 1; m <= 6; ++m) {
                    stream_conv3d(cache, x.slice_frames(1 + (m - 1) * T, 1 + m * T), kern);
                    CHECK(cache.cached_frame_count() == cache_occupancy(k, s, T, m));
                }
            }
}

TEST_CASE("occupancy trace for kernel 3 stride 2 chunk 4 holds one frame") {
    Rng rng(33);
    auto cs = spec(1, 1, {3, 1, 1}, {2, 1, 1});
    ConvKernel kern(cs, random_values(rng, 3, 1.0), std::vector<float>{0.0f});
    CausalCache cache(3, 2, TemporalPad::replicate_first);
    auto x = random_normal(rng, Shape{1, 21, 2, 2}, 0, 1);
    stream_conv3d(cache, x.slice_frames(0, 1), kern);
    std::vector<std::size_t> trace{cache.cached_frame_count()};
    for (std::size_t m = 1; m <= 5; ++m) {
        stream_conv3d(cache, x.slice_frames(1 + (m - 1) * 4, 1 + m * 4), kern);
        trace.push_back(cache.cached_frame_count());
    }
    CHECK(trace == std::vector<std::size_t>(6, 1));
}

TEST_CASE("streamed convolution equals direct evaluation") {
    Rng rng(34);
    auto cs = spec(2, 3, {3, 3, 3}, {1, 1, 1}, {1, 1});
    ConvKernel kern(cs, random_values(rng, cs.weight_count(), 0.3), random_values(rng, 3, 0.1));
    auto x = random_normal(rng, Shape{2, 33, 6, 6}, 0, 1);
    const auto direct = causal_conv3d(x, kern);

    CausalCache one(3, 1, TemporalPad::replicate_first);
    CHECK(stream_through(one, kern, x, {33}).bit_equal(direct));

    CausalCache canon(3, 1, TemporalPad::replicate_first);
    std::vector<std::size_t> sizes{1};
    for (int i = 0; i < 8; ++i) sizes.push_back(4);
    CHECK(max_abs_diff(stream_through(canon, kern, x, sizes), direct) <= 1e-6f);

    for (std::size_t st = 1; st <= 3; ++st)
        for (auto mode : {TemporalPad::replicate_first, TemporalPad::zeros}) {
            auto ss = spec(2, 2, {4, 1, 3}, {st, 1, 2}, {0, 1});
            ss.pad_mode = mode;
            const auto w = random_values(rng, ss.weight_count(), 0.3), b = random_values(rng, 2, 0.1);
            ConvKernel k2(ss, w, b);
            const auto ref = causal_conv3d(x, k2);
            CHECK(max_abs_diff(ref, oracle::causal_conv3d(x, ss, w, b)) <= 1e-5f);
            for (const auto& plan : {std::vector<std::size_t>{1, 3, 5, 7, 9, 8}, std::vector<std::size_t>(33, 1),
                                     std::vector<std::size_t>{2, 8, 8, 8, 7}}) {
                CausalCache c(4, st, mode);
                auto got = stream_through(c, k2, x, plan);
                CHECK(got.bit_equal(ref));
            }
        }
}

TEST_CASE("stream state errors") {
    Rng rng(35);
    auto cs = spec(1, 1, {2, 1, 1}, {1, 1, 1});
    ConvKernel kern(cs, random_values(rng, 2, 1.0), std::vector<float>{0.0f});
    auto state = make_cache_state(cs);
    CHECK_THROWS_AS(stream_conv3d(state, Tensor::empty_frames(1, 2, 2), kern), ShapeError);
    stream_conv3d(state, new_tensor(1, 2, 2, 2, 1.0f), kern);
    state.finalize();
    CHECK_THROWS_AS(stream_conv3d(state, new_tensor(1, 1, 2, 2, 1.0f), kern), StateError);
}

TEST_CASE("frame_layernorm") {
    std::vector<float> gain{2.0f, 0.5f}, bias{0.25f, -1.0f};
    auto c = frame_layernorm(new_tensor(2, 3, 4, 4, 5.0f), gain, bias, 1e-6f);
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t y = 0; y < 4; ++y) {
            CHECK(c.at(0, t, y, 1) == doctest::Approx(0.25));
            CHECK(c.at(1, t, y, 1) == doctest::Approx(-1.0));
        }

    Rng rng(36);
    auto x = random_normal(rng, Shape{3, 4, 5, 5}, 2, 3);
    auto y = frame_layernorm(x, std::vector<float>(3, 1.0f), std::vector<float>(3, 0.0f), 1e-6f);
    for (std::size_t t = 0; t < 4; ++t) {
        double s = 0, s2 = 0;
        for (std::size_t ch = 0; ch < 3; ++ch)
            for (std::size_t a = 0; a < 5; ++a)
                for (std::size_t b = 0; b < 5; ++b) {
                    s += y.at(ch, t, a, b);
                    s2 += double(y.at(ch, t, a, b)) * y.at(ch, t, a, b);
                }
        CHECK(std::fabs(s / 75) < 1e-5);
        CHECK(s2 / 75 == doctest::Approx(1.0).epsilon(1e-4));
    }
    CHECK_THROWS_AS(frame_layernorm(x, std::vector<float>(3, 1.0f), std::vector<float>(3, 0.0f), 0.0f),
                    ParameterError);
    CHECK_THROWS_AS(frame_layernorm(x, std::vector<float>(2, 1.0f), std::vector<float>(3, 0.0f), 1e-6f),
                    ShapeError);
}

TEST_CASE("groupnorm_whole_clip") {
    Rng rng(37);
    auto x = random_normal(rng, Shape{4, 1, 5, 5}, 1, 2);
    std::vector<float> g(4, 1.0f), b(4, 0.0f);
    CHECK(max_abs_diff(groupnorm_whole_clip(x, 1, g, b, 1e-6f), frame_layernorm(x, g, b, 1e-6f)) <= 1e-5f);
    auto c = groupnorm_whole_clip(new_tensor(4, 3, 2, 2, 7.0f), 2, g, std::vector<float>{1, 2, 3, 4}, 1e-6f);
    for (std::size_t ch = 0; ch < 4; ++ch) CHECK(c.at(ch, 2, 1, 1) == doctest::Approx(double(ch + 1)));
    CHECK_THROWS_AS(groupnorm_whole_clip(x, 3, g, b, 1e-6f), ParameterError);
}

TEST_CASE("layer stacks: direct and streamed agree for stream-safe kinds") {
    Rng rng(38);
    auto x = random_normal(rng, Shape{2, 17, 6, 6}, 0, 1);
    CHECK(run_layer_stack({}, x, ChunkPlan::make_canonical(4)).bit_equal(x));

    auto layers = safe_stack(rng, 2);
    layers.insert(layers.begin() + 1, LayerDef::make_layernorm(std::vector<float>(4, 1.1f), std::vector<float>(4, 0.1f)));
    layers.push_back(LayerDef::make_resample(2, 2));
    const auto direct = run_layer_stack(layers, x, ChunkPlan::make_direct());
    for (const auto& text : {"canonical:1", "canonical:4", "canonical:8", "explicit:1,3,5,7,1", "explicit:2,2,2,2,2,2,2,2,1",
                             "explicit:17"}) {
        const auto streamed = run_layer_stack(layers, x, ChunkPlan::parse(text));
        REQUIRE(streamed.shape() == direct.shape());
        CHECK(max_abs_diff(streamed, direct) <= 1e-6f);
    }
    CHECK_THROWS_AS(run_layer_stack(layers, x, ChunkPlan::parse("explicit:4,4")), ParameterError);

    auto bad = safe_stack(rng, 3);
    CHECK_THROWS_AS(run_layer_stack(bad, x, ChunkPlan::make_direct()), ShapeError);
}

TEST_CASE("group normalization breaks chunked evaluation") {
    Rng rng(39);
    auto x = random_normal(rng, Shape{2, 9, 6, 6}, 0, 1);
    auto layers = safe_stack(rng, 2);
    layers.insert(layers.begin() + 1, LayerDef::make_groupnorm(2, std::vector<float>(4, 1.0f), std::vector<float>(4, 0.0f)));
    CHECK_FALSE(layers[1].stream_safe());
    const auto direct = run_layer_stack(layers, x, ChunkPlan::make_direct());
    const auto streamed = run_layer_stack(layers, x, ChunkPlan::parse("explicit:4,5"));
    CHECK(max_abs_diff(streamed, direct) > 1e-3f);
}

TEST_CASE("first output frame ignores later input frames") {
    Rng rng(40);
    auto layers = safe_stack(rng, 2);
    layers.insert(layers.begin() + 1, LayerDef::make_layernorm(std::vector<float>(4, 1.0f), std::vector<float>(4, 0.0f)));
    auto x = random_normal(rng, Shape{2, 9, 6, 6}, 0, 1);
    auto y = x;
    for (std::size_t i = y.offset(0, 1, 0, 0); i < y.offset(1, 0, 0, 0); ++i) y.data()[i] += 5.0f;
    for (std::size_t i = y.offset(1, 1, 0, 0); i < y.numel(); ++i) y.data()[i] -= 2.0f;
    auto a = run_layer_stack(layers, x, ChunkPlan::make_direct());
    auto b = run_layer_stack(layers, y, ChunkPlan::make_direct());
    CHECK(a.slice_frames(0, 1).bit_equal(b.slice_frames(0, 1)));
    CHECK_FALSE(a.slice_frames(1, 2).bit_equal(b.slice_frames(1, 2)));
}

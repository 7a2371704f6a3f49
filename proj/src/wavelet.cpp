#include "wfcodec/wavelet.hpp"

#include <algorithm>
#include <cmath>

#include "wfcodec/parallel.hpp"

namespace wfc {
namespace {

constexpr float k = HaarFilters::inv_sqrt2;

template <std::size_t N>
std::size_t key_index(const std::array<std::string_view, N>& keys, std::string_view key) {
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) throw ParameterError("unknown subband key '" + std::string(key) + "'");
    return static_cast<std::size_t>(it - keys.begin());
}

void require_even_spatial(const Shape& s, const char* what) {
    if (s.h % 2 != 0 || s.w % 2 != 0)
        throw ShapeError(std::string(what) + ": height and width must be even, got " + to_string(s));
}

// One plane (H x W) into four (H/2 x W/2) planes: height pass, then width pass.
void split_plane(const float* src, std::size_t H, std::size_t W, float* hh, float* hg, float* gh,
                 float* gg) {
    const std::size_t w2 = W / 2;
    for (std::size_t y = 0; y < H / 2; ++y) {
        const float* r0 = src + 2 * y * W;
        const float* r1 = r0 + W;
        for (std::size_t x = 0; x < w2; ++x) {
            const float lo0 = (r0[2 * x] + r1[2 * x]) * k;
            const float lo1 = (r0[2 * x + 1] + r1[2 * x + 1]) * k;
            const float hi0 = (r0[2 * x] - r1[2 * x]) * k;
            const float hi1 = (r0[2 * x + 1] - r1[2 * x + 1]) * k;
            const std::size_t o = y * w2 + x;
            hh[o] = (lo0 + lo1) * k;
            hg[o] = (lo0 - lo1) * k;
            gh[o] = (hi0 + hi1) * k;
            gg[o] = (hi0 - hi1) * k;
        }
    }
}

void merge_plane(const float* hh, const float* hg, const float* gh, const float* gg, std::size_t H,
                 std::size_t W, float* dst) {
    const std::size_t w2 = W / 2;
    for (std::size_t y = 0; y < H / 2; ++y) {
        float* r0 = dst + 2 * y * W;
        float* r1 = r0 + W;
        for (std::size_t x = 0; x < w2; ++x) {
            const std::size_t o = y * w2 + x;
            const float lo0 = (hh[o] + hg[o]) * k;
            const float lo1 = (hh[o] - hg[o]) * k;
            const float hi0 = (gh[o] + gg[o]) * k;
            const float hi1 = (gh[o] - gg[o]) * k;
            r0[2 * x] = (lo0 + hi0) * k;
            r1[2 * x] = (lo0 - hi0) * k;
            r0[2 * x + 1] = (lo1 + hi1) * k;
            r1[2 * x + 1] = (lo1 - hi1) * k;
        }
    }
}

void require_consistent(const SubbandSet3D& s) {
    for (const auto& b : s.bands)
        if (b.shape() != s.bands[0].shape())
            throw ShapeError("inconsistent 3D subband shapes: " + to_string(b.shape()) + " vs " +
                             to_string(s.bands[0].shape()));
}

void require_consistent(const SubbandSet2D& s) {
    for (const auto& b : s.bands)
        if (b.shape() != s.bands[0].shape())
            throw ShapeError("inconsistent 2D subband shapes: " + to_string(b.shape()) + " vs " +
                             to_string(s.bands[0].shape()));
}

Tensor pad_front_replicate(const Tensor& v) {
    return concat_frames(v.slice_frames(0, 1), v);
}

} // namespace

const Tensor& SubbandSet3D::operator[](std::string_view key) const { return bands[key_index(keys, key)]; }
Tensor& SubbandSet3D::operator[](std::string_view key) { return bands[key_index(keys, key)]; }
const Tensor& SubbandSet2D::operator[](std::string_view key) const { return bands[key_index(keys, key)]; }
Tensor& SubbandSet2D::operator[](std::string_view key) { return bands[key_index(keys, key)]; }

HaarPair haar_1d_analysis(std::span<const float> x) {
    if (x.size() < 2 || x.size() % 2 != 0)
        throw ShapeError("haar_1d_analysis needs an even length >= 2, got " + std::to_string(x.size()));
    HaarPair out;
    out.approx.resize(x.size() / 2);
    out.detail.resize(x.size() / 2);
    for (std::size_t i = 0; i < x.size() / 2; ++i) {
        out.approx[i] = (x[2 * i] + x[2 * i + 1]) * k;
        out.detail[i] = (x[2 * i] - x[2 * i + 1]) * k;
    }
    return out;
}

std::vector<float> haar_1d_synthesis(std::span<const float> a, std::span<const float> d) {
    if (a.size() != d.size())
        throw ShapeError("haar_1d_synthesis: approx/detail length mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(d.size()));
    std::vector<float> x(2 * a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        x[2 * i] = (a[i] + d[i]) * k;
        x[2 * i + 1] = (a[i] - d[i]) * k;
    }
    return x;
}

std::size_t subband_frames(std::size_t frames) noexcept { return (frames + 1) / 2; }

SubbandSet3D analyze_frame_pairs(const Tensor& frames, std::size_t first, std::size_t pairs) {
    const Shape& s = frames.shape();
    require_even_spatial(s, "dwt3d");
    if (first + 2 * pairs > s.t) throw ShapeError("analyze_frame_pairs: pairs exceed available frames");
    SubbandSet3D out;
    for (auto& b : out.bands) b = Tensor(Shape{s.c, pairs, s.h / 2, s.w / 2});
    const std::size_t n = s.frame_size();
    parallel_for(s.c, [&](std::size_t c) {
        std::vector<float> lo(n), hi(n);
        for (std::size_t i = 0; i < pairs; ++i) {
            const float* a = frames.plane(c, first + 2 * i);
            const float* b = frames.plane(c, first + 2 * i + 1);
            for (std::size_t j = 0; j < n; ++j) {
                lo[j] = (a[j] + b[j]) * k;
                hi[j] = (a[j] - b[j]) * k;
            }
            auto& B = out.bands;
            // temporal h -> hhh, hhg, hgh, hgg ; temporal g -> ghh, ghg, ggh, ggg
            split_plane(lo.data(), s.h, s.w, B[0].plane(c, i), B[1].plane(c, i), B[2].plane(c, i),
                        B[4].plane(c, i));
            split_plane(hi.data(), s.h, s.w, B[3].plane(c, i), B[6].plane(c, i), B[5].plane(c, i),
                        B[7].plane(c, i));
        }
    });
    return out;
}

Tensor synthesize_frame_pairs(const SubbandSet3D& s) {
    require_consistent(s);
    const Shape bs = s.band_shape();
    const std::size_t H = bs.h * 2, W = bs.w * 2, n = H * W;
    if (bs.t == 0) return Tensor::empty_frames(bs.c, H, W);
    Tensor out(Shape{bs.c, 2 * bs.t, H, W});
    parallel_for(bs.c, [&](std::size_t c) {
        std::vector<float> lo(n), hi(n);
        const auto& B = s.bands;
        for (std::size_t i = 0; i < bs.t; ++i) {
            merge_plane(B[0].plane(c, i), B[1].plane(c, i), B[2].plane(c, i), B[4].plane(c, i), H, W,
                        lo.data());
            merge_plane(B[3].plane(c, i), B[6].plane(c, i), B[5].plane(c, i), B[7].plane(c, i), H, W,
                        hi.data());
            float* x0 = out.plane(c, 2 * i);
            float* x1 = out.plane(c, 2 * i + 1);
            for (std::size_t j = 0; j < n; ++j) {
                x0[j] = (lo[j] + hi[j]) * k;
                x1[j] = (lo[j] - hi[j]) * k;
            }
        }
    });
    return out;
}

SubbandSet3D dwt3d(const Tensor& v) {
    require_even_spatial(v.shape(), "dwt3d");
    if (!v.has_frames()) throw ShapeError("dwt3d needs at least one frame");
    if (v.frames() % 2 == 1) {
        const Tensor padded = pad_front_replicate(v);
        return analyze_frame_pairs(padded, 0, padded.frames() / 2);
    }
    return analyze_frame_pairs(v, 0, v.frames() / 2);
}

Tensor idwt3d(const SubbandSet3D& s, std::size_t original_frames) {
    require_consistent(s);
    const std::size_t T = s.band_shape().t;
    if (original_frames != 2 * T && original_frames + 1 != 2 * T)
        throw ShapeError("idwt3d: " + std::to_string(T) + " subband frames cannot restore " +
                         std::to_string(original_frames) + " frames");
    Tensor full = synthesize_frame_pairs(s);
    if (original_frames == 2 * T) return full;
    return full.slice_frames(1, full.frames());
}

SubbandSet2D dwt2d(const Tensor& v) {
    const Shape& s = v.shape();
    require_even_spatial(s, "dwt2d");
    SubbandSet2D out;
    for (auto& b : out.bands) b = Tensor(Shape{s.c, s.t, s.h / 2, s.w / 2});
    parallel_for(s.c, [&](std::size_t c) {
        for (std::size_t t = 0; t < s.t; ++t)
            split_plane(v.plane(c, t), s.h, s.w, out.bands[0].plane(c, t), out.bands[1].plane(c, t),
                        out.bands[2].plane(c, t), out.bands[3].plane(c, t));
    });
    return out;
}

Tensor idwt2d(const SubbandSet2D& s) {
    require_consistent(s);
    const Shape bs = s.band_shape();
    if (bs.t == 0) return Tensor::empty_frames(bs.c, bs.h * 2, bs.w * 2);
    Tensor out(Shape{bs.c, bs.t, bs.h * 2, bs.w * 2});
    parallel_for(bs.c, [&](std::size_t c) {
        for (std::size_t t = 0; t < bs.t; ++t)
            merge_plane(s.bands[0].plane(c, t), s.bands[1].plane(c, t), s.bands[2].plane(c, t),
                        s.bands[3].plane(c, t), bs.h * 2, bs.w * 2, out.plane(c, t));
    });
    return out;
}

WaveletPyramid build_pyramid(const Tensor& v) {
    const Shape& s = v.shape();
    if (s.h % 8 != 0 || s.w % 8 != 0)
        throw ShapeError("build_pyramid: height and width must be divisible by 8, got " + to_string(s));
    WaveletPyramid p;
    p.original = s;
    p.level1 = dwt3d(v);
    p.level2 = dwt3d(p.level1.hhh());
    p.level3 = dwt2d(p.level2.hhh());
    return p;
}

Tensor reconstruct_pyramid(const WaveletPyramid& p) { return reconstruct_pyramid(p, p.original.t); }

Tensor reconstruct_pyramid(const WaveletPyramid& p, std::size_t original_frames) {
    require_consistent(p.level1);
    require_consistent(p.level2);
    require_consistent(p.level3);
    const Shape s1 = p.level1.band_shape(), s2 = p.level2.band_shape(), s3 = p.level3.band_shape();
    if (s2.c != s1.c || s2.h * 2 != s1.h || s2.w * 2 != s1.w || s2.t != subband_frames(s1.t))
        throw ShapeError("pyramid level 2 " + to_string(s2) + " does not match level 1 " + to_string(s1));
    if (s3.c != s2.c || s3.t != s2.t || s3.h * 2 != s2.h || s3.w * 2 != s2.w)
        throw ShapeError("pyramid level 3 " + to_string(s3) + " does not match level 2 " + to_string(s2));
    SubbandSet3D l2 = p.level2;
    l2.bands[0] = idwt2d(p.level3);
    SubbandSet3D l1 = p.level1;
    l1.bands[0] = idwt3d(l2, s1.t);
    return idwt3d(l1, original_frames);
}

float roundtrip_error(const Tensor& v, int levels) {
    switch (levels) {
    case 1: return max_abs_diff(idwt3d(dwt3d(v), v.frames()), v);
    case 2: {
        if (v.height() % 4 != 0 || v.width() % 4 != 0)
            throw ShapeError("two-level roundtrip needs height and width divisible by 4");
        SubbandSet3D l1 = dwt3d(v);
        const SubbandSet3D l2 = dwt3d(l1.hhh());
        l1.bands[0] = idwt3d(l2, l1.band_shape().t);
        return max_abs_diff(idwt3d(l1, v.frames()), v);
    }
    case 3: return max_abs_diff(reconstruct_pyramid(build_pyramid(v)), v);
    default: throw ParameterError("levels must be 1, 2 or 3, got " + std::to_string(levels));
    }
}

Tensor stack_subbands(const SubbandSet3D& s) {
    require_consistent(s);
    return concat_channels(s.bands);
}

Tensor stack_subbands(const SubbandSet2D& s) {
    require_consistent(s);
    return concat_channels(s.bands);
}

SubbandSet3D unstack_subbands3d(const Tensor& stacked) {
    if (stacked.channels() % 8 != 0)
        throw ShapeError("stacked 3D subbands need a multiple of 8 channels, got " +
                         std::to_string(stacked.channels()));
    const std::size_t c = stacked.channels() / 8;
    SubbandSet3D out;
    for (std::size_t i = 0; i < 8; ++i) out.bands[i] = stacked.slice_channels(i * c, (i + 1) * c);
    return out;
}

SubbandSet2D unstack_subbands2d(const Tensor& stacked) {
    if (stacked.channels() % 4 != 0)
        throw ShapeError("stacked 2D subbands need a multiple of 4 channels, got " +
                         std::to_string(stacked.channels()));
    const std::size_t c = stacked.channels() / 4;
    SubbandSet2D out;
    for (std::size_t i = 0; i < 4; ++i) out.bands[i] = stacked.slice_channels(i * c, (i + 1) * c);
    return out;
}

} // namespace wfc

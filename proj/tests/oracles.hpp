#pragma once

// Reference implementations used by the tests. Each is written from the
// definitions directly (nested loops, explicit kernels, explicit sets) and
// shares no code path with the library beyond the Tensor container.

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "wfcodec/causal_ops.hpp"
#include "wfcodec/tensor.hpp"
#include "wfcodec/wavelet.hpp"

namespace oracle {

using wfc::Shape;
using wfc::Tensor;

inline const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

// Filter taps by letter: 'h' low-pass, 'g' high-pass.
inline double tap(char letter, int i) { return letter == 'h' ? kInvSqrt2 : (i == 0 ? kInvSqrt2 : -kInvSqrt2); }

// Causal convolution by six nested loops over an explicitly padded clip.
inline Tensor causal_conv3d(const Tensor& x, const wfc::ConvSpec& s, const std::vector<float>& weight,
                            const std::vector<float>& bias) {
    const std::size_t kt = s.kernel[0], kh = s.kernel[1], kw = s.kernel[2];
    const std::size_t T = x.frames(), H = x.height(), W = x.width();
    const std::size_t pad = kt - 1;
    auto in = [&](std::size_t c, long t, long y, long z) -> double {
        if (y < 0 || z < 0 || y >= long(H) || z >= long(W)) return 0.0;
        if (t < long(pad)) return s.pad_mode == wfc::TemporalPad::zeros ? 0.0 : x.at(c, 0, y, z);
        return x.at(c, t - pad, y, z);
    };
    const std::size_t To = (T - 1) / s.stride[0] + 1;
    const std::size_t Ho = (H + 2 * s.padding[0] - kh) / s.stride[1] + 1;
    const std::size_t Wo = (W + 2 * s.padding[1] - kw) / s.stride[2] + 1;
    Tensor out(Shape{s.out_channels, To, Ho, Wo});
    for (std::size_t o = 0; o < s.out_channels; ++o)
        for (std::size_t t = 0; t < To; ++t)
            for (std::size_t y = 0; y < Ho; ++y)
                for (std::size_t z = 0; z < Wo; ++z) {
                    double acc = bias[o];
                    for (std::size_t i = 0; i < s.in_channels; ++i)
                        for (std::size_t a = 0; a < kt; ++a)
                            for (std::size_t b = 0; b < kh; ++b)
                                for (std::size_t d = 0; d < kw; ++d) {
                                    const double wv = weight[(((o * s.in_channels + i) * kt + a) * kh + b) * kw + d];
                                    acc += wv * in(i, long(t * s.stride[0] + a),
                                                   long(y * s.stride[1] + b) - long(s.padding[0]),
                                                   long(z * s.stride[2] + d) - long(s.padding[1]));
                                }
                    out.at(o, t, y, z) = static_cast<float>(acc);
                }
    return out;
}

// Clip with frame 0 repeated once in front when the frame count is odd.
inline Tensor pad_odd(const Tensor& v) {
    if (v.frames() % 2 == 0) return v;
    Tensor p(Shape{v.channels(), v.frames() + 1, v.height(), v.width()});
    for (std::size_t c = 0; c < v.channels(); ++c)
        for (std::size_t t = 0; t < p.frames(); ++t)
            for (std::size_t y = 0; y < v.height(); ++y)
                for (std::size_t z = 0; z < v.width(); ++z) p.at(c, t, y, z) = v.at(c, t == 0 ? 0 : t - 1, y, z);
    return p;
}

// One 3D subband by its explicit 2x2x2 tensor-product kernel. Key letters
// are (time, height, width).
inline Tensor dwt3d_band(const Tensor& v, const char* key) {
    const Tensor p = pad_odd(v);
    Tensor out(Shape{p.channels(), p.frames() / 2, p.height() / 2, p.width() / 2});
    for (std::size_t c = 0; c < out.channels(); ++c)
        for (std::size_t t = 0; t < out.frames(); ++t)
            for (std::size_t y = 0; y < out.height(); ++y)
                for (std::size_t z = 0; z < out.width(); ++z) {
                    double acc = 0;
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            for (int d = 0; d < 2; ++d)
                                acc += tap(key[0], a) * tap(key[1], b) * tap(key[2], d) *
                                       p.at(c, 2 * t + a, 2 * y + b, 2 * z + d);
                    out.at(c, t, y, z) = static_cast<float>(acc);
                }
    return out;
}

inline Tensor dwt2d_band(const Tensor& v, const char* key) {
    Tensor out(Shape{v.channels(), v.frames(), v.height() / 2, v.width() / 2});
    for (std::size_t c = 0; c < out.channels(); ++c)
        for (std::size_t t = 0; t < out.frames(); ++t)
            for (std::size_t y = 0; y < out.height(); ++y)
                for (std::size_t z = 0; z < out.width(); ++z) {
                    double acc = 0;
                    for (int b = 0; b < 2; ++b)
                        for (int d = 0; d < 2; ++d)
                            acc += tap(key[0], b) * tap(key[1], d) * v.at(c, t, 2 * y + b, 2 * z + d);
                    out.at(c, t, y, z) = static_cast<float>(acc);
                }
    return out;
}

inline const char* const kKeys3D[8] = {"hhh", "hhg", "hgh", "ghh", "hgg", "ggh", "ghg", "ggg"};
inline const char* const kKeys2D[4] = {"hh", "hg", "gh", "gg"};

// Cache length after canonical chunk m, by simulating which padded frames a
// streaming convolution must still hold. Chunk 0 delivers the k-1 pad frames
// plus input frame 0; chunk m >= 1 delivers T more. A window n covers frames
// [n*s, n*s + k) and is emitted once all its frames have arrived. The held
// set is every delivered frame not before the first unemitted window. The
// signed result is newest - next_window_start + 1, which goes negative when
// the next window starts beyond the newest frame.
inline std::int64_t cache_len_by_frames(std::size_t k, std::size_t s, std::size_t T, std::size_t m) {
    std::set<std::int64_t> held;
    std::int64_t newest = -1;
    std::int64_t next_window = 0;
    for (std::size_t chunk = 0; chunk <= m; ++chunk) {
        const std::size_t count = chunk == 0 ? k : T;
        for (std::size_t i = 0; i < count; ++i) held.insert(++newest);
        while (next_window * std::int64_t(s) + std::int64_t(k) - 1 <= newest) ++next_window;
        const std::int64_t start = next_window * std::int64_t(s);
        while (!held.empty() && *held.begin() < start) held.erase(held.begin());
        if (start > newest) {
            if (!held.empty()) return -1000; // inconsistent simulation
        } else if (std::int64_t(held.size()) != newest - start + 1) {
            return -1000;
        }
    }
    return newest - next_window * std::int64_t(s) + 1;
}

// Fixture with energy concentrated at the lowest frequencies: one half-period
// sine bump along each axis.
inline Tensor smooth_fixture(Shape s) {
    const double pi = std::acos(-1.0);
    Tensor v(s);
    for (std::size_t c = 0; c < s.c; ++c)
        for (std::size_t t = 0; t < s.t; ++t)
            for (std::size_t y = 0; y < s.h; ++y)
                for (std::size_t z = 0; z < s.w; ++z)
                    v.at(c, t, y, z) = static_cast<float>(std::sin(pi * (t + 0.5) / s.t) *
                                                          std::sin(pi * (y + 0.5) / s.h) *
                                                          std::sin(pi * (z + 0.5) / s.w));
    return v;
}

inline double sum_squares(const Tensor& x) {
    double s = 0;
    for (std::size_t c = 0; c < x.channels(); ++c)
        for (std::size_t t = 0; t < x.frames(); ++t)
            for (std::size_t y = 0; y < x.height(); ++y)
                for (std::size_t z = 0; z < x.width(); ++z) s += double(x.at(c, t, y, z)) * x.at(c, t, y, z);
    return s;
}

inline double mean_abs_diff(const std::vector<const Tensor*>& a, const std::vector<const Tensor*>& b) {
    double s = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t c = 0; c < a[k]->channels(); ++c)
            for (std::size_t t = 0; t < a[k]->frames(); ++t)
                for (std::size_t y = 0; y < a[k]->height(); ++y)
                    for (std::size_t z = 0; z < a[k]->width(); ++z) {
                        s += std::fabs(double(a[k]->at(c, t, y, z)) - double(b[k]->at(c, t, y, z)));
                        ++n;
                    }
    return s / double(n);
}

inline double kl_by_elements(const Tensor& mean, const Tensor& logvar) {
    double s = 0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < mean.channels(); ++c)
        for (std::size_t t = 0; t < mean.frames(); ++t)
            for (std::size_t y = 0; y < mean.height(); ++y)
                for (std::size_t z = 0; z < mean.width(); ++z) {
                    const double mu = mean.at(c, t, y, z), lv = logvar.at(c, t, y, z);
                    s += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
                    ++n;
                }
    return s / double(n);
}

// Random conv spec within small bounds, and matching parameters.
struct ConvCase {
    wfc::ConvSpec spec;
    std::vector<float> weight;
    std::vector<float> bias;
    Tensor input;
};

inline ConvCase random_conv_case(wfc::Rng& rng) {
    auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng.next_u64() % (hi - lo + 1); };
    ConvCase c;
    auto& s = c.spec;
    s.in_channels = pick(1, 4);
    s.out_channels = pick(1, 11);
    s.kernel = {pick(1, 4), pick(1, 3), pick(1, 3)};
    s.stride = {pick(1, 3), pick(1, 2), pick(1, 2)};
    s.padding = {pick(0, s.kernel[1] / 2 + 1) % (s.kernel[1]), pick(0, s.kernel[2] / 2 + 1) % (s.kernel[2])};
    s.pad_mode = rng.next_u64() % 2 ? wfc::TemporalPad::zeros : wfc::TemporalPad::replicate_first;
    const std::size_t H = pick(s.kernel[1], 9), W = pick(s.kernel[2], 37);
    c.input = wfc::random_normal(rng, Shape{s.in_channels, pick(1, 9), H, W}, 0.0f, 1.0f);
    c.weight.resize(s.weight_count());
    for (auto& w : c.weight) w = static_cast<float>(rng.normal() * 0.3);
    c.bias.resize(s.out_channels);
    for (auto& b : c.bias) b = static_cast<float>(rng.normal() * 0.1);
    return c;
}

} // namespace oracle

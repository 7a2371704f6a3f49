#include <algorithm>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "wfcodec/causal_ops.hpp"
#include "wfcodec/parallel.hpp"

namespace wfc {
namespace {

constexpr std::size_t kLanes = 8; // output channels per register block

struct Geometry {
    std::size_t cin, kt, kh, kw, st, sh, sw;
    std::size_t tp, hp, wp; // padded input extents
    std::size_t ho, wo;
};

// Accumulates one (kLanes x NW) output tile. SW is the width stride when known
// at compile time, 0 for the generic path. The reduction always runs in
// (ic, kt, kh, kw) order starting from zero.
template <std::size_t NW, std::size_t SW>
inline void conv_tile(const Geometry& g, const float* in, const float* wp, std::size_t t0, std::size_t ho,
                      std::size_t w0, float (&acc)[kLanes][NW]) {
    const std::size_t sw = SW ? SW : g.sw;
    for (auto& row : acc)
        for (auto& v : row) v = 0.0f;
    for (std::size_t ic = 0; ic < g.cin; ++ic) {
        for (std::size_t a = 0; a < g.kt; ++a) {
            const float* plane = in + (ic * g.tp + t0 + a) * g.hp * g.wp;
            for (std::size_t b = 0; b < g.kh; ++b) {
                const float* row = plane + (ho * g.sh + b) * g.wp + w0 * sw;
                for (std::size_t d = 0; d < g.kw; ++d) {
                    float xv[NW];
                    for (std::size_t j = 0; j < NW; ++j) xv[j] = row[d + j * sw];
                    for (std::size_t o = 0; o < kLanes; ++o) {
                        const float wv = wp[o];
                        for (std::size_t j = 0; j < NW; ++j) acc[o][j] += wv * xv[j];
                    }
                    wp += kLanes;
                }
            }
        }
    }
}

template <std::size_t NW, std::size_t SW>
inline void emit_tile(const Geometry& g, const float* in, const float* wp, const float* bias, std::size_t t0,
                      std::size_t ho, std::size_t w0, std::size_t oc0, std::size_t oc_count, Tensor& out,
                      std::size_t to) {
    float acc[kLanes][NW];
    conv_tile<NW, SW>(g, in, wp, t0, ho, w0, acc);
    for (std::size_t o = 0; o < oc_count; ++o) {
        float* dst = out.plane(oc0 + o, to) + ho * g.wo + w0;
        for (std::size_t j = 0; j < NW; ++j) dst[j] = acc[o][j] + bias[oc0 + o];
    }
}

template <std::size_t SW>
void conv_row(const Geometry& g, const float* in, const float* wp, const float* bias, std::size_t t0,
              std::size_t ho, std::size_t oc0, std::size_t oc_count, Tensor& out, std::size_t to) {
    std::size_t w0 = 0;
    for (; w0 + 32 <= g.wo; w0 += 32) emit_tile<32, SW>(g, in, wp, bias, t0, ho, w0, oc0, oc_count, out, to);
    for (; w0 + 16 <= g.wo; w0 += 16) emit_tile<16, SW>(g, in, wp, bias, t0, ho, w0, oc0, oc_count, out, to);
    for (; w0 + 8 <= g.wo; w0 += 8) emit_tile<8, SW>(g, in, wp, bias, t0, ho, w0, oc0, oc_count, out, to);
    for (; w0 + 4 <= g.wo; w0 += 4) emit_tile<4, SW>(g, in, wp, bias, t0, ho, w0, oc0, oc_count, out, to);
    for (; w0 < g.wo; ++w0) emit_tile<1, SW>(g, in, wp, bias, t0, ho, w0, oc0, oc_count, out, to);
}

#if defined(__AVX512F__)
// Stride-1 spatial path. Output positions are indexed over the padded plane,
// q = ho * wp + wo, so that input tap (kh, kw) sits at q + kh * wp + kw and
// every row of the plane feeds full vectors. Columns with wo >= g.wo are
// computed and discarded. Same (ic, kt, kh, kw) reduction order as conv_tile.
template <std::size_t NV>
inline void flat_tile(const Geometry& g, const float* in, const float* wp, const float* bias, std::size_t t0,
                      std::size_t q0, std::size_t q_end, std::size_t oc0, std::size_t oc_count, Tensor& out,
                      std::size_t to) {
    constexpr std::size_t W = 16;
    const std::size_t plane_size = g.hp * g.wp;
    __mmask16 mask[NV];
    for (std::size_t v = 0; v < NV; ++v) {
        const std::size_t first = q0 + v * W;
        const std::size_t n = first >= q_end ? 0 : std::min(W, q_end - first);
        mask[v] = static_cast<__mmask16>((1u << n) - 1u);
    }
    __m512 acc[kLanes][NV];
    for (auto& row : acc)
        for (auto& v : row) v = _mm512_setzero_ps();
    for (std::size_t ic = 0; ic < g.cin; ++ic) {
        for (std::size_t a = 0; a < g.kt; ++a) {
            const float* plane = in + (ic * g.tp + t0 + a) * plane_size + q0;
            for (std::size_t b = 0; b < g.kh; ++b) {
                for (std::size_t d = 0; d < g.kw; ++d) {
                    const float* src = plane + b * g.wp + d;
                    __m512 xv[NV];
                    for (std::size_t v = 0; v < NV; ++v) xv[v] = _mm512_maskz_loadu_ps(mask[v], src + v * W);
                    for (std::size_t o = 0; o < kLanes; ++o) {
                        const __m512 wv = _mm512_set1_ps(wp[o]);
                        for (std::size_t v = 0; v < NV; ++v) acc[o][v] = _mm512_fmadd_ps(wv, xv[v], acc[o][v]);
                    }
                    wp += kLanes;
                }
            }
        }
    }
    alignas(64) float tmp[NV * W];
    for (std::size_t o = 0; o < oc_count; ++o) {
        const __m512 bv = _mm512_set1_ps(bias[oc0 + o]);
        for (std::size_t v = 0; v < NV; ++v) _mm512_store_ps(tmp + v * W, _mm512_add_ps(acc[o][v], bv));
        float* dst = out.plane(oc0 + o, to);
        for (std::size_t q = q0; q < std::min(q_end, q0 + NV * W); ++q) {
            const std::size_t ho = q / g.wp, wo = q % g.wp;
            if (wo < g.wo) dst[ho * g.wo + wo] = tmp[q - q0];
        }
    }
}

void conv_frame_flat(const Geometry& g, const float* in, const float* wp, const float* bias, std::size_t t0,
                     std::size_t oc0, std::size_t oc_count, Tensor& out, std::size_t to) {
    const std::size_t q_end = (g.ho - 1) * g.wp + g.wo;
    std::size_t q = 0;
    for (; q + 48 <= q_end; q += 48) flat_tile<3>(g, in, wp, bias, t0, q, q_end, oc0, oc_count, out, to);
    const std::size_t rest = q_end - q;
    if (rest > 32)
        flat_tile<3>(g, in, wp, bias, t0, q, q_end, oc0, oc_count, out, to);
    else if (rest > 16)
        flat_tile<2>(g, in, wp, bias, t0, q, q_end, oc0, oc_count, out, to);
    else if (rest > 0)
        flat_tile<1>(g, in, wp, bias, t0, q, q_end, oc0, oc_count, out, to);
}
constexpr bool kHaveFlat = true;
#else
void conv_frame_flat(const Geometry&, const float*, const float*, const float*, std::size_t, std::size_t,
                     std::size_t, Tensor&, std::size_t) {}
constexpr bool kHaveFlat = false;
#endif

} // namespace

std::size_t ConvSpec::out_height(std::size_t h) const {
    const std::size_t span = h + 2 * padding[0];
    if (span < kernel[1]) throw ShapeError("conv kernel height exceeds padded input height");
    return (span - kernel[1]) / stride[1] + 1;
}

std::size_t ConvSpec::out_width(std::size_t w) const {
    const std::size_t span = w + 2 * padding[1];
    if (span < kernel[2]) throw ShapeError("conv kernel width exceeds padded input width");
    return (span - kernel[2]) / stride[2] + 1;
}

void ConvSpec::validate() const {
    if (in_channels == 0 || out_channels == 0) throw ParameterError("conv channels must be >= 1");
    for (auto k : kernel)
        if (k == 0) throw ParameterError("conv kernel sizes must be >= 1");
    for (auto s : stride)
        if (s == 0) throw ParameterError("conv strides must be >= 1");
}

ConvKernel::ConvKernel(const ConvSpec& spec, std::span<const float> weight, std::span<const float> bias)
    : spec_(spec) {
    spec_.validate();
    if (weight.size() != spec_.weight_count())
        throw ShapeError("conv weight has " + std::to_string(weight.size()) + " values, expected " +
                         std::to_string(spec_.weight_count()));
    if (bias.size() != spec_.out_channels)
        throw ShapeError("conv bias has " + std::to_string(bias.size()) + " values, expected " +
                         std::to_string(spec_.out_channels));
    const std::size_t K = spec_.in_channels * spec_.kernel[0] * spec_.kernel[1] * spec_.kernel[2];
    out_blocks_ = (spec_.out_channels + kLanes - 1) / kLanes;
    packed_.assign(out_blocks_ * K * kLanes, 0.0f);
    for (std::size_t oc = 0; oc < spec_.out_channels; ++oc) {
        const std::size_t blk = oc / kLanes, lane = oc % kLanes;
        for (std::size_t k = 0; k < K; ++k) packed_[(blk * K + k) * kLanes + lane] = weight[oc * K + k];
    }
    bias_.assign(bias.begin(), bias.end());
}

Tensor ConvKernel::run_windows(const Tensor& frames, std::size_t windows) const {
    const ConvSpec& s = spec_;
    if (frames.channels() != s.in_channels)
        throw ShapeError("conv expects " + std::to_string(s.in_channels) + " input channels, got " +
                         std::to_string(frames.channels()));
    Geometry g{s.in_channels, s.kernel[0], s.kernel[1], s.kernel[2], s.stride[0], s.stride[1], s.stride[2],
               0, 0, 0, 0, 0};
    g.ho = s.out_height(frames.height());
    g.wo = s.out_width(frames.width());
    if (windows == 0) return Tensor::empty_frames(s.out_channels, g.ho, g.wo);
    const std::size_t needed = (windows - 1) * s.stride[0] + s.kernel[0];
    if (frames.frames() < needed)
        throw ShapeError("conv needs " + std::to_string(needed) + " frames for " + std::to_string(windows) +
                         " windows, got " + std::to_string(frames.frames()));

    // Spatially zero-padded copy of the frames that the windows read.
    const std::size_t ph = s.padding[0], pw = s.padding[1];
    g.tp = needed;
    g.hp = frames.height() + 2 * ph;
    g.wp = frames.width() + 2 * pw;
    Tensor padded;
    const float* in = nullptr;
    if (ph == 0 && pw == 0 && frames.frames() == needed) {
        in = frames.data().data();
    } else {
        padded = Tensor(Shape{s.in_channels, g.tp, g.hp, g.wp});
        for (std::size_t c = 0; c < s.in_channels; ++c)
            for (std::size_t t = 0; t < g.tp; ++t)
                for (std::size_t y = 0; y < frames.height(); ++y)
                    std::copy_n(frames.plane(c, t) + y * frames.width(), frames.width(),
                                padded.plane(c, t) + (y + ph) * g.wp + pw);
        in = padded.data().data();
    }

    Tensor out(Shape{s.out_channels, windows, g.ho, g.wo});
    const std::size_t K = g.cin * g.kt * g.kh * g.kw;
    parallel_for(out_blocks_ * windows, [&](std::size_t task) {
        const std::size_t blk = task / windows, to = task % windows;
        const std::size_t oc0 = blk * kLanes;
        const std::size_t oc_count = std::min(kLanes, s.out_channels - oc0);
        const float* wp = packed_.data() + blk * K * kLanes;
        const std::size_t t0 = to * g.st;
        if (kHaveFlat && g.sh == 1 && g.sw == 1) {
            conv_frame_flat(g, in, wp, bias_.data(), t0, oc0, oc_count, out, to);
            return;
        }
        for (std::size_t ho = 0; ho < g.ho; ++ho) {
            if (g.sw == 1)
                conv_row<1>(g, in, wp, bias_.data(), t0, ho, oc0, oc_count, out, to);
            else if (g.sw == 2)
                conv_row<2>(g, in, wp, bias_.data(), t0, ho, oc0, oc_count, out, to);
            else
                conv_row<0>(g, in, wp, bias_.data(), t0, ho, oc0, oc_count, out, to);
        }
    });
    return out;
}

} // namespace wfc

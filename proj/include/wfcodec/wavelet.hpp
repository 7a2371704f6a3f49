#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "wfcodec/tensor.hpp"

namespace wfc {

/// Orthonormal Haar pair: `h` is the low-pass (scaling) filter and `g` the
/// high-pass (wavelet) filter, both scaled by 1/sqrt(2).
struct HaarFilters {
    static constexpr float inv_sqrt2 = 0.70710678118654752440f;
    static constexpr std::array<float, 2> h{inv_sqrt2, inv_sqrt2};
    static constexpr std::array<float, 2> g{inv_sqrt2, -inv_sqrt2};
};

/// Eight 3D subbands. A key names the filter applied along (time, height,
/// width) in that order, so "hhg" is low-pass in time and height and
/// high-pass in width. Storage order is fixed and is also the channel-stacking
/// and serialization order.
struct SubbandSet3D {
    static constexpr std::array<std::string_view, 8> keys{"hhh", "hhg", "hgh", "ghh",
                                                          "hgg", "ggh", "ghg", "ggg"};
    std::array<Tensor, 8> bands;

    const Tensor& operator[](std::string_view key) const;
    Tensor& operator[](std::string_view key);
    const Tensor& hhh() const { return bands[0]; }
    Shape band_shape() const { return bands[0].shape(); }
};

/// Four spatial subbands keyed (height, width); time is untouched.
struct SubbandSet2D {
    static constexpr std::array<std::string_view, 4> keys{"hh", "hg", "gh", "gg"};
    std::array<Tensor, 4> bands;

    const Tensor& operator[](std::string_view key) const;
    Tensor& operator[](std::string_view key);
    const Tensor& hh() const { return bands[0]; }
    Shape band_shape() const { return bands[0].shape(); }
};

/// Two 3D levels followed by one 2D level: 4x temporal and 8x8 spatial
/// compression of the low-frequency chain.
struct WaveletPyramid {
    SubbandSet3D level1;
    SubbandSet3D level2; // from level1.hhh
    SubbandSet2D level3; // from level2.hhh
    Shape original;
};

struct HaarPair {
    std::vector<float> approx;
    std::vector<float> detail;
};

HaarPair haar_1d_analysis(std::span<const float> signal);
std::vector<float> haar_1d_synthesis(std::span<const float> approx, std::span<const float> detail);

// Odd frame counts are extended by replicating frame 0 once at the front
// before temporal pairing, so the first coefficient of every subband depends
// on frame 0 only. Even counts are paired as-is.
std::size_t subband_frames(std::size_t frames) noexcept;

SubbandSet3D dwt3d(const Tensor& v);
// Inverse of dwt3d. original_frames must be 2T (no pad) or 2T-1 (pad dropped)
// for subbands with T frames.
Tensor idwt3d(const SubbandSet3D& s, std::size_t original_frames);

SubbandSet2D dwt2d(const Tensor& v);
Tensor idwt2d(const SubbandSet2D& s);

WaveletPyramid build_pyramid(const Tensor& v);
Tensor reconstruct_pyramid(const WaveletPyramid& p);
Tensor reconstruct_pyramid(const WaveletPyramid& p, std::size_t original_frames);

// Max-abs error of a forward/inverse roundtrip through `levels` levels
// (1: one 3D level, 2: two 3D levels, 3: the full pyramid).
float roundtrip_error(const Tensor& v, int levels);

// Channel stacking in key order: band k occupies channels [k*c, (k+1)*c).
Tensor stack_subbands(const SubbandSet3D& s);
Tensor stack_subbands(const SubbandSet2D& s);
SubbandSet3D unstack_subbands3d(const Tensor& stacked);
SubbandSet2D unstack_subbands2d(const Tensor& stacked);

// Temporal analysis of the frame pairs (first + 2i, first + 2i + 1) for
// i < pairs, followed by the spatial split. Used by dwt3d and by the
// streaming analysis stage so both produce bit-identical coefficients.
SubbandSet3D analyze_frame_pairs(const Tensor& frames, std::size_t first, std::size_t pairs);
// Inverse temporal pairing without trimming: returns 2T frames.
Tensor synthesize_frame_pairs(const SubbandSet3D& s);

/// Directory layout: `L{level}_{key}.wfvt` per subband plus `manifest.json`
/// (levels present, original shape, padding rule id).
void save_pyramid(const WaveletPyramid& p, const std::filesystem::path& dir);
WaveletPyramid load_pyramid(const std::filesystem::path& dir);
// Partial layouts, e.g. decoder-predicted levels 2 and 3 only.
void save_subband_levels(const SubbandSet3D* level2, const SubbandSet2D* level3, Shape original,
                         const std::filesystem::path& dir);
SubbandSet3D load_level3d(const std::filesystem::path& dir, int level);
SubbandSet2D load_level2d(const std::filesystem::path& dir, int level);

inline constexpr std::string_view kPaddingRuleId = "replicate-first-frame";

} // namespace wfc

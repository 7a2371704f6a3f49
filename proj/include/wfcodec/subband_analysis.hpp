#pragma once

#include <span>
#include <string>
#include <vector>

#include "wfcodec/wavelet.hpp"

namespace wfc {

struct SubbandStats {
    int level = 0;
    std::string key;
    double energy = 0.0;          // sum of squared coefficients
    double energy_fraction = 0.0; // energy / level total, 0 when the level is degenerate
    double entropy_bits = 0.0;
};

struct LevelStats {
    int level = 0;
    std::vector<SubbandStats> bands; // key order of the subband set
    // Every coefficient of the level is zero, so fractions are undefined.
    bool degenerate = false;
};

inline constexpr std::size_t kDefaultEntropyBins = 256;

LevelStats subband_energy(const SubbandSet3D& s, int level);
LevelStats subband_energy(const SubbandSet2D& s, int level);

// Fills entropy_bits for every band of an existing LevelStats, or builds a
// fresh one with only the entropy populated.
LevelStats subband_entropy(const SubbandSet3D& s, int level, std::size_t bins = kDefaultEntropyBins);
LevelStats subband_entropy(const SubbandSet2D& s, int level, std::size_t bins = kDefaultEntropyBins);

// Shannon entropy (bits) of an equal-width histogram over [min, max] of the
// values. A single-valued input has entropy 0.
double histogram_entropy_bits(std::span<const float> values, std::size_t bins);

// Energy and entropy for all three pyramid levels.
std::vector<LevelStats> analyze_pyramid(const WaveletPyramid& p, std::size_t bins = kDefaultEntropyBins);

} // namespace wfc

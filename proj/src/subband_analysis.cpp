#include "wfcodec/subband_analysis.hpp"

#include <algorithm>
#include <cmath>

namespace wfc {
namespace {

template <class Set> LevelStats energy_of(const Set& s, int level) {
    LevelStats out;
    out.level = level;
    double total = 0.0;
    for (std::size_t i = 0; i < Set::keys.size(); ++i) {
        if (s.bands[i].numel() == 0) throw ShapeError("subband_energy: empty subband");
        SubbandStats st;
        st.level = level;
        st.key = std::string(Set::keys[i]);
        st.energy = squared_norm(s.bands[i]);
        total += st.energy;
        out.bands.push_back(std::move(st));
    }
    out.degenerate = total == 0.0;
    for (auto& b : out.bands) b.energy_fraction = out.degenerate ? 0.0 : b.energy / total;
    return out;
}

template <class Set> LevelStats entropy_of(const Set& s, int level, std::size_t bins) {
    if (bins < 2) throw ParameterError("entropy needs at least 2 bins, got " + std::to_string(bins));
    LevelStats out = energy_of(s, level);
    for (std::size_t i = 0; i < Set::keys.size(); ++i)
        out.bands[i].entropy_bits = histogram_entropy_bits(s.bands[i].data(), bins);
    return out;
}

} // namespace

double histogram_entropy_bits(std::span<const float> values, std::size_t bins) {
    if (bins < 2) throw ParameterError("entropy needs at least 2 bins, got " + std::to_string(bins));
    if (values.empty()) throw ShapeError("entropy of an empty subband");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return 0.0;
    std::vector<std::size_t> counts(bins, 0);
    const double scale = static_cast<double>(bins) / (hi - lo);
    for (float v : values) {
        auto b = static_cast<std::size_t>((static_cast<double>(v) - lo) * scale);
        ++counts[std::min(b, bins - 1)];
    }
    const double n = static_cast<double>(values.size());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return std::max(0.0, h);
}

LevelStats subband_energy(const SubbandSet3D& s, int level) { return energy_of(s, level); }
LevelStats subband_energy(const SubbandSet2D& s, int level) { return energy_of(s, level); }

LevelStats subband_entropy(const SubbandSet3D& s, int level, std::size_t bins) {
    return entropy_of(s, level, bins);
}
LevelStats subband_entropy(const SubbandSet2D& s, int level, std::size_t bins) {
    return entropy_of(s, level, bins);
}

std::vector<LevelStats> analyze_pyramid(const WaveletPyramid& p, std::size_t bins) {
    return {entropy_of(p.level1, 1, bins), entropy_of(p.level2, 2, bins), entropy_of(p.level3, 3, bins)};
}

} // namespace wfc

#include <fstream>

#include <json.hpp>

#include "wfcodec/wavelet.hpp"

namespace wfc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json shape_json(const Shape& s) { return json::array({s.c, s.t, s.h, s.w}); }

Shape shape_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw FormatError("manifest shape must be an array of 4");
    return Shape{j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>(),
                 j[3].get<std::size_t>()};
}

fs::path band_path(const fs::path& dir, int level, std::string_view key) {
    return dir / ("L" + std::to_string(level) + "_" + std::string(key) + ".wfvt");
}

template <class Set> json write_level(const fs::path& dir, int level, const Set& set, const char* kind) {
    json keys = json::array();
    for (std::size_t i = 0; i < Set::keys.size(); ++i) {
        save_tensor(set.bands[i], band_path(dir, level, Set::keys[i]));
        keys.push_back(Set::keys[i]);
    }
    return json{{"level", level}, {"kind", kind}, {"keys", keys}, {"shape", shape_json(set.band_shape())}};
}

void write_manifest(const fs::path& dir, const json& levels, Shape original) {
    json manifest{{"format", "wfvt-pyramid"},
                  {"version", 1},
                  {"levels", levels},
                  {"original_shape", shape_json(original)},
                  {"padding_rule", kPaddingRuleId}};
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

json read_manifest(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot read " + (dir / "manifest.json").string());
    try {
        json m = json::parse(in);
        if (m.value("format", "") != "wfvt-pyramid") throw FormatError("not a wfvt-pyramid manifest");
        if (m.value("padding_rule", "") != kPaddingRuleId)
            throw FormatError("unsupported padding rule " + m.value("padding_rule", std::string("?")));
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

template <class Set> Set read_level(const fs::path& dir, int level) {
    const json m = read_manifest(dir);
    bool listed = false;
    for (const auto& l : m.at("levels"))
        if (l.at("level").get<int>() == level) listed = true;
    if (!listed) throw FormatError("level " + std::to_string(level) + " missing from manifest");
    Set s;
    for (std::size_t i = 0; i < Set::keys.size(); ++i) s.bands[i] = load_tensor(band_path(dir, level, Set::keys[i]));
    for (const auto& b : s.bands)
        if (b.shape() != s.bands[0].shape()) throw ShapeError("inconsistent subband shapes on disk");
    return s;
}

} // namespace

void save_pyramid(const WaveletPyramid& p, const fs::path& dir) {
    fs::create_directories(dir);
    json levels = json::array();
    levels.push_back(write_level(dir, 1, p.level1, "3d"));
    levels.push_back(write_level(dir, 2, p.level2, "3d"));
    levels.push_back(write_level(dir, 3, p.level3, "2d"));
    write_manifest(dir, levels, p.original);
}

void save_subband_levels(const SubbandSet3D* level2, const SubbandSet2D* level3, Shape original,
                         const fs::path& dir) {
    fs::create_directories(dir);
    json levels = json::array();
    if (level2) levels.push_back(write_level(dir, 2, *level2, "3d"));
    if (level3) levels.push_back(write_level(dir, 3, *level3, "2d"));
    write_manifest(dir, levels, original);
}

WaveletPyramid load_pyramid(const fs::path& dir) {
    const json m = read_manifest(dir);
    WaveletPyramid p;
    p.original = shape_from_json(m.at("original_shape"));
    p.level1 = read_level<SubbandSet3D>(dir, 1);
    p.level2 = read_level<SubbandSet3D>(dir, 2);
    p.level3 = read_level<SubbandSet2D>(dir, 3);
    return p;
}

SubbandSet3D load_level3d(const fs::path& dir, int level) { return read_level<SubbandSet3D>(dir, level); }
SubbandSet2D load_level2d(const fs::path& dir, int level) { return read_level<SubbandSet2D>(dir, level); }

} // namespace wfc

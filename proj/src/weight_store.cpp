#include <algorithm>
#include <limits>
#include <numeric>

#include "byte_io.hpp"
#include "wfcodec/wfvae_net.hpp"

namespace wfc {
namespace {
constexpr char kMagic[4] = {'W', 'F', 'W', 'T'};
constexpr std::uint32_t kVersion = 1;

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                           [](std::size_t a, std::uint32_t d) { return a * d; });
}
} // namespace

void WeightStore::set(const std::string& name, std::vector<std::uint32_t> dims, std::vector<float> values) {
    if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max())
        throw WeightError("weight name length must be 1..65535");
    if (dims.empty() || dims.size() > 5) throw WeightError("weight '" + name + "' must have rank 1..5");
    if (std::find(dims.begin(), dims.end(), 0u) != dims.end())
        throw WeightError("weight '" + name + "' has a zero dimension");
    if (element_count(dims) != values.size())
        throw WeightError("weight '" + name + "' has " + std::to_string(values.size()) +
                          " values for its shape");
    entries_[name] = NamedArray{std::move(dims), std::move(values)};
}

const NamedArray& WeightStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw WeightError("missing weight '" + name + "'");
    return it->second;
}

std::size_t WeightStore::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [_, a] : entries_) n += a.values.size();
    return n;
}

void WeightStore::zero() {
    for (auto& [_, a] : entries_) std::fill(a.values.begin(), a.values.end(), 0.0f);
}

std::vector<std::uint8_t> encode_weights(const WeightStore& w) {
    detail::ByteWriter out;
    out.bytes(kMagic, 4);
    out.u32(kVersion);
    out.u32(static_cast<std::uint32_t>(w.size()));
    for (const auto& [name, a] : w.entries()) {
        out.u16(static_cast<std::uint16_t>(name.size()));
        out.bytes(name.data(), name.size());
        out.u32(static_cast<std::uint32_t>(a.dims.size()));
        for (auto d : a.dims) out.u32(d);
        out.f32s(a.values);
    }
    return std::move(out.buffer());
}

WeightStore decode_weights(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    auto magic = in.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad magic, expected WFWT");
    if (auto v = in.u32("version"); v != kVersion)
        throw FormatError("unsupported WFWT version " + std::to_string(v));
    const std::uint32_t count = in.u32("entry count");
    WeightStore w;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t len = in.u16("name length");
        auto raw = in.take(len, "name");
        std::string name(raw.begin(), raw.end());
        const std::uint32_t ndim = in.u32("ndim");
        if (ndim == 0 || ndim > 5) throw FormatError("weight '" + name + "' has rank " + std::to_string(ndim));
        std::vector<std::uint32_t> dims(ndim);
        for (auto& d : dims) d = in.u32("dims");
        unsigned __int128 n = 1;
        for (auto d : dims) n *= d;
        if (n * 4 > in.remaining()) throw FormatError("truncated payload for weight '" + name + "'");
        std::vector<float> values(static_cast<std::size_t>(n));
        in.f32s(values, "payload");
        if (w.contains(name)) throw FormatError("duplicate weight '" + name + "'");
        try {
            w.set(name, std::move(dims), std::move(values));
        } catch (const WeightError& e) {
            throw FormatError(e.what());
        }
    }
    if (in.remaining() != 0) throw FormatError("trailing bytes after weight entries");
    return w;
}

void save_weights(const WeightStore& w, const std::filesystem::path& path) {
    detail::write_file(path, encode_weights(w));
}

WeightStore load_weights(const std::filesystem::path& path) { return decode_weights(detail::read_file(path)); }

std::string digest(const WeightStore& w) { return sha256_hex(encode_weights(w)); }

} // namespace wfc

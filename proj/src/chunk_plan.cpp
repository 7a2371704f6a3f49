#include "wfcodec/chunk_plan.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "wfcodec/error.hpp"

namespace wfc {
namespace {

std::size_t parse_count(std::string_view s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v == 0)
        throw ParameterError("invalid chunk size '" + std::string(s) + "'");
    return v;
}

} // namespace

ChunkPlan ChunkPlan::make_canonical(std::size_t chunk) {
    if (chunk == 0) throw ParameterError("canonical chunk size must be >= 1");
    ChunkPlan p;
    p.mode = Mode::canonical;
    p.chunk = chunk;
    return p;
}

ChunkPlan ChunkPlan::make_explicit(std::vector<std::size_t> sizes) {
    if (sizes.empty()) throw ParameterError("explicit chunk plan needs at least one size");
    for (auto s : sizes)
        if (s == 0) throw ParameterError("explicit chunk sizes must be >= 1");
    ChunkPlan p;
    p.mode = Mode::explicit_sizes;
    p.sizes = std::move(sizes);
    return p;
}

ChunkPlan ChunkPlan::parse(std::string_view text) {
    if (text == "direct") return make_direct();
    if (text.starts_with("canonical:")) return make_canonical(parse_count(text.substr(10)));
    if (text.starts_with("explicit:")) {
        std::vector<std::size_t> sizes;
        std::string_view rest = text.substr(9);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            sizes.push_back(parse_count(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        return make_explicit(std::move(sizes));
    }
    throw ParameterError("unknown chunk plan '" + std::string(text) +
                         "' (expected direct, canonical:T or explicit:a,b,...)");
}

std::string ChunkPlan::describe() const {
    switch (mode) {
    case Mode::direct: return "direct";
    case Mode::canonical: return "canonical:" + std::to_string(chunk);
    case Mode::explicit_sizes: {
        std::string s = "explicit:";
        for (std::size_t i = 0; i < sizes.size(); ++i) s += (i ? "," : "") + std::to_string(sizes[i]);
        return s;
    }
    }
    return "?";
}

std::vector<std::size_t> ChunkPlan::chunk_sizes(std::size_t total) const {
    if (total == 0) throw ParameterError("cannot plan chunks for an empty clip");
    switch (mode) {
    case Mode::direct: return {total};
    case Mode::canonical: {
        std::vector<std::size_t> out{1};
        for (std::size_t done = 1; done < total; done += chunk) out.push_back(std::min(chunk, total - done));
        return out;
    }
    case Mode::explicit_sizes: {
        const std::size_t sum = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
        if (sum != total)
            throw ParameterError("chunk plan " + describe() + " covers " + std::to_string(sum) +
                                 " frames but the clip has " + std::to_string(total));
        return sizes;
    }
    }
    return {};
}

} // namespace wfc

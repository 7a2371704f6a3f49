#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace wfc {

// How a clip is fed to a streaming graph.
//   direct           whole clip in one evaluation, no caches involved
//   canonical(T)     first frame alone, then chunks of T (last one may be short)
//   explicit(sizes)  the given chunk sizes; they must sum to the clip length
struct ChunkPlan {
    enum class Mode { direct, canonical, explicit_sizes };

    Mode mode = Mode::direct;
    std::size_t chunk = 0;
    std::vector<std::size_t> sizes;

    static ChunkPlan make_direct() { return {}; }
    static ChunkPlan make_canonical(std::size_t chunk);
    static ChunkPlan make_explicit(std::vector<std::size_t> sizes);

    // Accepts "direct", "canonical:T" and "explicit:a,b,c".
    static ChunkPlan parse(std::string_view text);
    std::string describe() const;

    bool streamed() const noexcept { return mode != Mode::direct; }
    // Chunk sizes for a clip of `total` frames; throws ParameterError when the
    // plan cannot cover the clip exactly.
    std::vector<std::size_t> chunk_sizes(std::size_t total) const;
};

} // namespace wfc

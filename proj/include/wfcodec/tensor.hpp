#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wfcodec/error.hpp"

namespace wfc {

struct Shape {
    std::size_t c = 0;
    std::size_t t = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t numel() const noexcept { return c * t * h * w; }
    std::size_t frame_size() const noexcept { return h * w; }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

// Dense (c, t, h, w) array of f32, w fastest.
//
// A tensor with zero frames is a legal value: streaming stages hand one back
// when a chunk completes no output window. Every other dimension is >= 1.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);

    // Zero-frame tensor carrying the channel and spatial geometry.
    static Tensor empty_frames(std::size_t c, std::size_t h, std::size_t w);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t channels() const noexcept { return shape_.c; }
    std::size_t frames() const noexcept { return shape_.t; }
    std::size_t height() const noexcept { return shape_.h; }
    std::size_t width() const noexcept { return shape_.w; }
    std::size_t numel() const noexcept { return data_.size(); }
    bool has_frames() const noexcept { return shape_.t > 0; }

    std::size_t offset(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const noexcept {
        return ((c * shape_.t + t) * shape_.h + h) * shape_.w + w;
    }
    float& at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) noexcept {
        return data_[offset(c, t, h, w)];
    }
    float at(std::size_t c, std::size_t t, std::size_t h, std::size_t w) const noexcept {
        return data_[offset(c, t, h, w)];
    }

    // Pointer to the h*w plane of channel c at frame t.
    float* plane(std::size_t c, std::size_t t) noexcept { return data_.data() + offset(c, t, 0, 0); }
    const float* plane(std::size_t c, std::size_t t) const noexcept {
        return data_.data() + offset(c, t, 0, 0);
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    // Frames [t0, t1) as a new tensor.
    Tensor slice_frames(std::size_t t0, std::size_t t1) const;
    // Channels [c0, c1) as a new tensor.
    Tensor slice_channels(std::size_t c0, std::size_t c1) const;

    bool bit_equal(const Tensor& other) const noexcept;

  private:
    Shape shape_{};
    std::vector<float> data_;
};

// Concatenation along time; all inputs must agree on (c, h, w).
Tensor concat_frames(std::span<const Tensor> parts);
Tensor concat_frames(const Tensor& a, const Tensor& b);
// Concatenation along channels; all inputs must agree on (t, h, w).
Tensor concat_channels(std::span<const Tensor> parts);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);
float max_abs_diff(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& x);
bool all_finite(const Tensor& x) noexcept;

// Seeded generator. The engine is std::mt19937_64, whose output sequence is
// fixed by the C++ standard; the real-valued conversions below are done by
// hand because the standard distributions are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t next_u64() { return engine_(); }
    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    // Standard normal via Box-Muller; the second variate is kept for the next call.
    double normal();

  private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

Tensor new_tensor(std::size_t c, std::size_t t, std::size_t h, std::size_t w, float fill);
Tensor random_normal(Rng& rng, Shape shape, float mean, float stddev);
Tensor random_uniform(Rng& rng, Shape shape, float lo, float hi);

// WFVT file format, little-endian:
//   "WFVT" | u32 version=1 | u32 dtype=0 | u32 ndim=4 | u32 dims[4] | f32 payload
void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

// Hex SHA-256 of the serialized tensor.
std::string digest(const Tensor& t);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

} // namespace wfc

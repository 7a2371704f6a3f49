#include "wfcodec/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace wfc {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::parameter: return "parameter error";
    case ErrorKind::format: return "format error";
    case ErrorKind::io: return "io error";
    case ErrorKind::state: return "state error";
    case ErrorKind::weight: return "weight error";
    case ErrorKind::value: return "value error";
    }
    return "error";
}

std::string to_string(const Shape& s) {
    return "(" + std::to_string(s.c) + "," + std::to_string(s.t) + "," + std::to_string(s.h) + "," +
           std::to_string(s.w) + ")";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
    if (shape.c == 0 || shape.h == 0 || shape.w == 0)
        throw ShapeError("tensor dimensions must be >= 1, got " + to_string(shape));
    data_.assign(shape.numel(), fill);
}

Tensor Tensor::empty_frames(std::size_t c, std::size_t h, std::size_t w) {
    return Tensor(Shape{c, 0, h, w});
}

Tensor Tensor::slice_frames(std::size_t t0, std::size_t t1) const {
    if (t0 > t1 || t1 > shape_.t)
        throw ShapeError("frame slice [" + std::to_string(t0) + "," + std::to_string(t1) +
                         ") out of range for " + to_string(shape_));
    Tensor out(Shape{shape_.c, t1 - t0, shape_.h, shape_.w});
    const std::size_t run = (t1 - t0) * shape_.frame_size();
    for (std::size_t c = 0; c < shape_.c; ++c) {
        if (run == 0) break;
        std::copy_n(plane(c, t0), run, out.plane(c, 0));
    }
    return out;
}

Tensor Tensor::slice_channels(std::size_t c0, std::size_t c1) const {
    if (c0 >= c1 || c1 > shape_.c)
        throw ShapeError("channel slice [" + std::to_string(c0) + "," + std::to_string(c1) +
                         ") out of range for " + to_string(shape_));
    Tensor out(Shape{c1 - c0, shape_.t, shape_.h, shape_.w});
    const std::size_t per = shape_.t * shape_.frame_size();
    std::copy_n(data_.data() + c0 * per, (c1 - c0) * per, out.data_.data());
    return out;
}

bool Tensor::bit_equal(const Tensor& other) const noexcept {
    if (shape_ != other.shape_) return false;
    return std::equal(data_.begin(), data_.end(), other.data_.begin(), [](float a, float b) {
        return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
    });
}

Tensor concat_frames(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat_frames of nothing");
    const Shape& s0 = parts.front().shape();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.channels() != s0.c || p.height() != s0.h || p.width() != s0.w)
            throw ShapeError("concat_frames: " + to_string(p.shape()) + " vs " + to_string(s0));
        total += p.frames();
    }
    Tensor out(Shape{s0.c, total, s0.h, s0.w});
    for (std::size_t c = 0; c < s0.c; ++c) {
        std::size_t t = 0;
        for (const auto& p : parts) {
            if (p.frames() == 0) continue;
            std::copy_n(p.plane(c, 0), p.frames() * s0.frame_size(), out.plane(c, t));
            t += p.frames();
        }
    }
    return out;
}

Tensor concat_frames(const Tensor& a, const Tensor& b) {
    const Tensor parts[] = {a, b};
    return concat_frames(parts);
}

Tensor concat_channels(std::span<const Tensor> parts) {
    if (parts.empty()) throw ShapeError("concat_channels of nothing");
    const Shape& s0 = parts.front().shape();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.frames() != s0.t || p.height() != s0.h || p.width() != s0.w)
            throw ShapeError("concat_channels: " + to_string(p.shape()) + " vs " + to_string(s0));
        total += p.channels();
    }
    Tensor out(Shape{total, s0.t, s0.h, s0.w});
    auto dst = out.data().begin();
    for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
    return out;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    float m = 0.0f;
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

double squared_norm(const Tensor& x) {
    double s = 0.0;
    for (float v : x.data()) s += static_cast<double>(v) * v;
    return s;
}

bool all_finite(const Tensor& x) noexcept {
    return std::all_of(x.data().begin(), x.data().end(), [](float v) { return std::isfinite(v); });
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Tensor new_tensor(std::size_t c, std::size_t t, std::size_t h, std::size_t w, float fill) {
    if (t == 0) throw ShapeError("tensor dimensions must be >= 1");
    if (!std::isfinite(fill)) throw ValueError("fill value must be finite");
    return Tensor(Shape{c, t, h, w}, fill);
}

Tensor random_normal(Rng& rng, Shape shape, float mean, float stddev) {
    if (!(stddev >= 0.0f) || !std::isfinite(stddev) || !std::isfinite(mean))
        throw ParameterError("random_normal: std must be finite and >= 0");
    Tensor out = new_tensor(shape.c, shape.t, shape.h, shape.w, 0.0f);
    for (float& v : out.data()) v = static_cast<float>(mean + stddev * rng.normal());
    return out;
}

Tensor random_uniform(Rng& rng, Shape shape, float lo, float hi) {
    if (!(hi >= lo)) throw ParameterError("random_uniform: hi < lo");
    Tensor out = new_tensor(shape.c, shape.t, shape.h, shape.w, 0.0f);
    for (float& v : out.data()) v = static_cast<float>(lo + (hi - lo) * rng.uniform());
    return out;
}

} // namespace wfc

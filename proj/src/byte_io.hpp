#pragma once

// Little-endian byte encoding shared by the tensor and weight file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wfcodec/error.hpp"

namespace wfc::detail {

class ByteWriter {
  public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void u16(std::uint16_t v) { little(v); }
    void u32(std::uint32_t v) { little(v); }
    void f32s(std::span<const float> values) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(values.data(), values.size_bytes());
        } else {
            for (float v : values) u32(std::bit_cast<std::uint32_t>(v));
        }
    }
    std::vector<std::uint8_t>& buffer() { return buf_; }

  private:
    template <class T> void little(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (n > remaining())
            throw FormatError(std::string("truncated input while reading ") + what + ": need " +
                              std::to_string(n) + " bytes, have " + std::to_string(remaining()));
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::uint16_t u16(const char* what) { return little<std::uint16_t>(what); }
    std::uint32_t u32(const char* what) { return little<std::uint32_t>(what); }
    void f32s(std::span<float> out, const char* what) {
        auto raw = take(out.size_bytes(), what);
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(out.data(), raw.data(), raw.size());
        } else {
            for (std::size_t i = 0; i < out.size(); ++i) {
                std::uint32_t v = 0;
                for (std::size_t b = 0; b < 4; ++b) v |= std::uint32_t(raw[4 * i + b]) << (8 * b);
                out[i] = std::bit_cast<float>(v);
            }
        }
    }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

  private:
    template <class T> T little(const char* what) {
        auto raw = take(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(T(raw[i]) << (8 * i));
        return v;
    }
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace wfc::detail

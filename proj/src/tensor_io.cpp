#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "byte_io.hpp"
#include "wfcodec/tensor.hpp"

namespace wfc {
namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for " + path.string());
    return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace detail

namespace {
constexpr char kMagic[4] = {'W', 'F', 'V', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeF32 = 0;
} // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    const Shape& s = t.shape();
    constexpr auto max_dim = std::numeric_limits<std::uint32_t>::max();
    if (s.c > max_dim || s.t > max_dim || s.h > max_dim || s.w > max_dim)
        throw FormatError("tensor dimension exceeds u32 range");
    detail::ByteWriter out;
    out.bytes(kMagic, 4);
    out.u32(kVersion);
    out.u32(kDtypeF32);
    out.u32(4);
    for (std::size_t d : {s.c, s.t, s.h, s.w}) out.u32(static_cast<std::uint32_t>(d));
    out.f32s(t.data());
    return std::move(out.buffer());
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    auto magic = in.take(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad magic, expected WFVT");
    if (auto v = in.u32("version"); v != kVersion)
        throw FormatError("unsupported WFVT version " + std::to_string(v));
    if (auto d = in.u32("dtype"); d != kDtypeF32)
        throw FormatError("unsupported dtype code " + std::to_string(d));
    if (auto n = in.u32("ndim"); n != 4) throw FormatError("expected ndim 4, got " + std::to_string(n));
    Shape s;
    s.c = in.u32("dims");
    s.t = in.u32("dims");
    s.h = in.u32("dims");
    s.w = in.u32("dims");
    if (s.c == 0 || s.t == 0 || s.h == 0 || s.w == 0) throw FormatError("zero dimension in header");
    // Guard the element count before allocating: a forged header must not
    // trigger a huge allocation or wrap around.
    const unsigned __int128 count = static_cast<unsigned __int128>(s.c) * s.t * s.h * s.w;
    if (count * 4 != in.remaining()) {
        if (count * 4 > in.remaining())
            throw FormatError("truncated payload: header " + to_string(s) + " needs " +
                              std::to_string(static_cast<unsigned long long>(count)) + " values");
        throw FormatError("trailing bytes after payload");
    }
    Tensor t(s);
    in.f32s(t.data(), "payload");
    return t;
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
    if (!t.has_frames()) throw ShapeError("cannot save a zero-frame tensor");
    detail::write_file(path, encode_tensor(t));
}

Tensor load_tensor(const std::filesystem::path& path) {
    return decode_tensor(detail::read_file(path));
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("sha256 failed");
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return hex.str();
}

std::string digest(const Tensor& t) {
    return sha256_hex(encode_tensor(t));
}

} // namespace wfc

#include "mcduct/hashio.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mcduct/errors.hpp"

namespace mcduct {

double round_1e10(double x) {
    if (!std::isfinite(x)) return x;
    // For |x| large enough that 1e-10 quantization is below the ulp this is
    // an identity; nearbyint keeps it deterministic either way.
    return std::nearbyint(x * 1e10) / 1e10;
}

Hasher& Hasher::bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h_ ^= p[i];
        h_ *= 1099511628211ULL;
    }
    return *this;
}

Hasher& Hasher::f64(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof(bits));
    return u64(bits);
}

Hasher& Hasher::f64_rounded(double x) { return f64(round_1e10(x)); }

Hasher& Hasher::u64(std::uint64_t x) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(x >> (8 * i));
    return bytes(b, 8);
}

Hasher& Hasher::u32(std::uint32_t x) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(x >> (8 * i));
    return bytes(b, 4);
}

Hasher& Hasher::str(const std::string& s) { return bytes(s.data(), s.size()); }

std::string Hasher::hex() const { return hash_hex(h_); }

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

namespace {

template <typename T>
void append_le(std::vector<std::uint8_t>& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

void BinaryWriter::u32(std::uint32_t v) { append_le(buf_, v); }
void BinaryWriter::u64(std::uint64_t v) { append_le(buf_, v); }

void BinaryWriter::f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    append_le(buf_, bits);
}

void BinaryWriter::f64_block(const double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n * sizeof(double));
    } else {
        for (std::size_t i = 0; i < n; ++i) f64(data[i]);
    }
}

void BinaryWriter::raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buf_.insert(buf_.end(), p, p + n);
}

void BinaryWriter::write_file(const std::filesystem::path& path) const {
    write_binary_file(path, buf_);
}

BinaryReader BinaryReader::from_file(const std::filesystem::path& path) {
    return BinaryReader(read_binary_file(path));
}

void BinaryReader::need(std::size_t n) const {
    if (pos_ + n > buf_.size()) raise_io("unexpected end of binary stream");
}

std::uint32_t BinaryReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

std::uint64_t BinaryReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

double BinaryReader::f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

void BinaryReader::f64_block(double* out, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        need(n * sizeof(double));
        std::memcpy(out, buf_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = f64();
    }
}

std::vector<std::uint8_t> BinaryReader::raw(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise_io("cannot open file: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise_io("cannot write file: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) raise_io("write failed: " + path.string());
}

std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise_io("cannot open file: " + path.string());
    std::string s{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise_io("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) raise_io("write failed: " + path.string());
}

}  // namespace mcduct

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace mcduct {

/// Round to the nearest multiple of 1e-10. Content hashes quantize floats this
/// way so that sub-tolerance run-to-run jitter cannot change a hash.
double round_1e10(double x);

/// Incremental FNV-1a (64-bit) over raw bytes. Used for manifest, bundle, and
/// run-log content hashes. Not cryptographic; integrity/audit only.
class Hasher {
public:
    Hasher& bytes(const void* data, std::size_t n);
    Hasher& f64(double x);          // hashes the raw bits of x
    Hasher& f64_rounded(double x);  // hashes round_1e10(x)
    Hasher& u64(std::uint64_t x);
    Hasher& u32(std::uint32_t x);
    Hasher& str(const std::string& s);
    std::uint64_t digest() const { return h_; }
    std::string hex() const;

private:
    std::uint64_t h_ = 14695981039346656037ULL;
};

std::string hash_hex(std::uint64_t h);

/// Little-endian binary buffer writer. The on-disk formats are all explicit
/// little-endian float64/uint blocks; on big-endian hosts bytes are swapped.
class BinaryWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_block(const double* data, std::size_t n);
    void raw(const void* data, std::size_t n);
    const std::vector<std::uint8_t>& buffer() const { return buf_; }
    void write_file(const std::filesystem::path& path) const;

private:
    std::vector<std::uint8_t> buf_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::vector<std::uint8_t> buf) : buf_(std::move(buf)) {}
    static BinaryReader from_file(const std::filesystem::path& path);

    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void f64_block(double* out, std::size_t n);
    std::vector<std::uint8_t> raw(std::size_t n);
    std::size_t remaining() const { return buf_.size() - pos_; }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    void need(std::size_t n) const;
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& path);
void write_binary_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& data);

}  // namespace mcduct

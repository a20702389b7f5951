#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "salforge/errors.hpp"

namespace salforge::io {

static_assert(std::endian::native == std::endian::little,
              "serialization code assumes a little-endian host");

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320).
std::uint32_t crc32(const void* data, std::size_t n, std::uint32_t crc = 0);

// Accumulates little-endian binary output in memory so a trailing CRC can be
// computed over any byte range before the file is written.
class ByteWriter {
public:
    void put_bytes(const void* p, std::size_t n) {
        const char* c = static_cast<const char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void put_u8(std::uint8_t v) { put_bytes(&v, 1); }
    void put_u32(std::uint32_t v) { put_bytes(&v, 4); }
    void put_u64(std::uint64_t v) { put_bytes(&v, 8); }
    void put_f32(float v) { put_bytes(&v, 4); }
    void put_f64(double v) { put_bytes(&v, 8); }
    void put_f32s(const float* p, std::size_t n) { put_bytes(p, n * 4); }
    // Length-prefixed UTF-8 string (u32 length, no terminator).
    void put_str(std::string_view s) {
        put_u32(static_cast<std::uint32_t>(s.size()));
        put_bytes(s.data(), s.size());
    }

    std::size_t size() const { return buf_.size(); }
    const std::vector<char>& bytes() const { return buf_; }
    std::uint32_t crc_from(std::size_t start, std::uint32_t seed = 0) const {
        return crc32(buf_.data() + start, buf_.size() - start, seed);
    }
    std::uint32_t crc_range(std::size_t start, std::size_t end, std::uint32_t seed = 0) const {
        return crc32(buf_.data() + start, end - start, seed);
    }

private:
    std::vector<char> buf_;
};

// Reads little-endian fields from an in-memory buffer. Every getter takes the
// field name so truncation errors say exactly which field was cut off.
class ByteReader {
public:
    ByteReader(const char* data, std::size_t n) : data_(data), size_(n) {}
    explicit ByteReader(const std::vector<char>& buf) : ByteReader(buf.data(), buf.size()) {}

    std::size_t offset() const { return off_; }
    std::size_t remaining() const { return size_ - off_; }
    const char* cursor() const { return data_ + off_; }

    void get_bytes(void* out, std::size_t n, std::string_view field) {
        need(n, field);
        std::memcpy(out, data_ + off_, n);
        off_ += n;
    }
    std::uint8_t get_u8(std::string_view field) { return get<std::uint8_t>(field); }
    std::uint32_t get_u32(std::string_view field) { return get<std::uint32_t>(field); }
    std::uint64_t get_u64(std::string_view field) { return get<std::uint64_t>(field); }
    float get_f32(std::string_view field) { return get<float>(field); }
    double get_f64(std::string_view field) { return get<double>(field); }
    std::string get_str(std::string_view field) {
        std::uint32_t n = get_u32(field);
        need(n, field);
        std::string s(data_ + off_, n);
        off_ += n;
        return s;
    }
    void get_f32s(float* out, std::size_t n, std::string_view field) {
        get_bytes(out, n * 4, field);
    }

    std::uint32_t crc_range(std::size_t start, std::size_t end, std::uint32_t seed = 0) const {
        return crc32(data_ + start, end - start, seed);
    }

private:
    template <typename T>
    T get(std::string_view field) {
        T v;
        get_bytes(&v, sizeof(T), field);
        return v;
    }
    void need(std::size_t n, std::string_view field) const {
        if (off_ + n > size_)
            throw IntegrityError("truncated input while reading field '" + std::string(field) +
                                 "' (need " + std::to_string(n) + " bytes, have " +
                                 std::to_string(size_ - off_) + ")");
    }
    const char* data_;
    std::size_t size_;
    std::size_t off_ = 0;
};

std::vector<char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<char>& bytes);

}  // namespace salforge::io

#pragma once

// Little-endian primitives shared by the dump, SAE and toy-LM file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subguard/errors.hpp"

namespace subguard::detail {

class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u32(std::uint32_t v) { put_le(v); }
    void put_u64(std::uint64_t v) { put_le(v); }
    void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
    void put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void put_f32s(std::span<const float> values) {
        for (float v : values) put_f32(v);
    }

    const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }

private:
    template <typename T>
    void put_le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t get_u8(const char* what) { return static_cast<std::uint8_t>(get_le<std::uint8_t>(what)); }
    std::uint32_t get_u32(const char* what) { return get_le<std::uint32_t>(what); }
    std::uint64_t get_u64(const char* what) { return get_le<std::uint64_t>(what); }
    float get_f32(const char* what) { return std::bit_cast<float>(get_le<std::uint32_t>(what)); }
    std::string get_bytes(std::size_t n, const char* what) {
        require(n, what);
        std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return out;
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n) throw CorruptionError(std::string("truncated ") + what, pos_);
    }

private:
    template <typename T>
    T get_le(const char* what) {
        require(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
/// Creates the parent directory of `path` if needed. Failures surface when the file is opened.
void ensure_parent(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::string hex64(std::uint64_t v);

}  // namespace subguard::detail

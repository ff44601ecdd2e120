#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "ada/errors.hpp"

// Internal little-endian readers/writers shared by the feature-file and
// checkpoint code. Explicit byte packing keeps the formats portable to
// big-endian hosts; offsets are tracked so format errors can name the byte.

namespace ada::binio {

static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559);

class Reader {
public:
    Reader(std::istream& in, std::string path)
        : in_(in), path_(std::move(path)) {}

    std::uint64_t offset() const { return offset_; }

    void read_exact(void* dst, std::size_t n, const char* what) {
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) {
            throw FormatError(path_ + ": truncated file while reading " + what +
                              " at byte offset " + std::to_string(offset_));
        }
        offset_ += n;
    }

    std::uint32_t read_u32(const char* what) {
        unsigned char b[4];
        read_exact(b, 4, what);
        return static_cast<std::uint32_t>(b[0]) |
               (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    }

    float read_f32(const char* what) {
        const std::uint32_t u = read_u32(what);
        return std::bit_cast<float>(u);
    }

    double read_f64(const char* what) {
        unsigned char b[8];
        read_exact(b, 8, what);
        std::uint64_t u = 0;
        for (int i = 7; i >= 0; --i) u = (u << 8) | b[i];
        return std::bit_cast<double>(u);
    }

    std::string read_string(std::size_t n, const char* what) {
        std::string s(n, '\0');
        read_exact(s.data(), n, what);
        return s;
    }

    void expect_magic(const char* magic, std::size_t n) {
        const std::uint64_t at = offset_;
        std::string got = read_string(n, "magic");
        if (got != std::string(magic, n)) {
            throw FormatError(path_ + ": bad magic at byte offset " +
                              std::to_string(at) + " (expected \"" +
                              std::string(magic, n) + "\")");
        }
    }

    // True when the stream is exactly exhausted.
    bool at_eof() {
        return in_.peek() == std::istream::traits_type::eof();
    }

    const std::string& path() const { return path_; }

private:
    std::istream& in_;
    std::string path_;
    std::uint64_t offset_ = 0;
};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    void write_bytes(const void* src, std::size_t n) {
        out_.write(static_cast<const char*>(src),
                   static_cast<std::streamsize>(n));
    }

    void write_u32(std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
        write_bytes(b, 4);
    }

    void write_f32(float f) { write_u32(std::bit_cast<std::uint32_t>(f)); }

    void write_f64(double d) {
        std::uint64_t u = std::bit_cast<std::uint64_t>(d);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
        write_bytes(b, 8);
    }

private:
    std::ostream& out_;
};

}  // namespace ada::binio

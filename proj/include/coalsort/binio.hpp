#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "coalsort/common.hpp"

namespace coalsort::binio {

// Little-endian scalar framing for the checkpoint / fitted-model files.

class Writer {
public:
    explicit Writer(const std::string& path) : path_(path), f_(path, std::ios::binary | std::ios::trunc) {
        require(f_.good(), ErrorKind::io, "cannot open for writing: " + path);
    }

    void bytes(const void* p, size_t n) {
        f_.write(static_cast<const char*>(p), std::streamsize(n));
    }
    void u32(uint32_t v) {
        uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
        bytes(b, 4);
    }
    void u64(uint64_t v) {
        u32(uint32_t(v));
        u32(uint32_t(v >> 32));
    }
    void f64(double v) {
        uint64_t u;
        std::memcpy(&u, &v, 8);
        u64(u);
    }
    void f64s(const double* p, size_t n) {
        for (size_t i = 0; i < n; ++i) f64(p[i]);
    }
    void str(const std::string& s) {
        u32(uint32_t(s.size()));
        bytes(s.data(), s.size());
    }
    void finish() {
        f_.flush();
        require(f_.good(), ErrorKind::io, "write failed: " + path_);
    }

private:
    std::string path_;
    std::ofstream f_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
        require(f_.good(), ErrorKind::io, "cannot open: " + path);
    }

    void bytes(void* p, size_t n) {
        f_.read(static_cast<char*>(p), std::streamsize(n));
        require(f_.gcount() == std::streamsize(n), ErrorKind::io,
                "corrupt or truncated file: " + path_);
    }
    uint32_t u32() {
        uint8_t b[4];
        bytes(b, 4);
        return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
               (uint32_t(b[3]) << 24);
    }
    uint64_t u64() {
        uint64_t lo = u32();
        uint64_t hi = u32();
        return lo | (hi << 32);
    }
    double f64() {
        uint64_t u = u64();
        double v;
        std::memcpy(&v, &u, 8);
        return v;
    }
    void f64s(double* p, size_t n) {
        for (size_t i = 0; i < n; ++i) p[i] = f64();
    }
    std::string str(size_t max_len = 1u << 20) {
        uint32_t n = u32();
        require(n <= max_len, ErrorKind::io, "corrupt or truncated file: " + path_);
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream f_;
};

}  // namespace coalsort::binio

#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "coalsort/imagekit/image.hpp"

namespace coalsort::img {

namespace detail {

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorKind::io, "cannot open file: " + path);
    f.seekg(0, std::ios::end);
    std::streamoff n = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes(static_cast<size_t>(n));
    if (n > 0) f.read(reinterpret_cast<char*>(bytes.data()), n);
    require(f.good(), ErrorKind::io, "cannot read file: " + path);
    return bytes;
}

inline void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorKind::io, "cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    require(f.good(), ErrorKind::io, "cannot write file: " + path);
}

inline uint32_t be32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline void push_be32(std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
}

inline std::vector<uint8_t> zlib_inflate(const uint8_t* src, size_t n, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf out_len = uLongf(expected);
    int rc = ::uncompress(out.data(), &out_len, src, uLong(n));
    require(rc == Z_OK && out_len == expected, ErrorKind::io, "corrupt PNG: inflate failed");
    return out;
}

inline std::vector<uint8_t> zlib_deflate(const std::vector<uint8_t>& src) {
    uLongf bound = ::compressBound(uLong(src.size()));
    std::vector<uint8_t> out(bound);
    int rc = ::compress2(out.data(), &bound, src.data(), uLong(src.size()), 6);
    require(rc == Z_OK, ErrorKind::io, "deflate failed");
    out.resize(bound);
    return out;
}

inline int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

inline bool is_png(const std::vector<uint8_t>& b) {
    static const uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

// 8-bit grayscale or RGB, no interlace, no palette/alpha. Filter types 0-4
// are all handled on decode; chunk CRCs are verified.
inline ImageTensor decode_png(const std::vector<uint8_t>& bytes, const std::string& name) {
    require(is_png(bytes), ErrorKind::io, name + ": not a PNG file");
    size_t pos = 8;
    int width = 0, height = 0, channels = 0;
    bool saw_ihdr = false, saw_iend = false;
    std::vector<uint8_t> idat;

    while (pos + 8 <= bytes.size() && !saw_iend) {
        uint32_t len = detail::be32(&bytes[pos]);
        require(pos + 12 + len <= bytes.size(), ErrorKind::io, name + ": truncated PNG chunk");
        const uint8_t* type = &bytes[pos + 4];
        const uint8_t* data = &bytes[pos + 8];
        uint32_t crc_stored = detail::be32(&bytes[pos + 8 + len]);
        uint32_t crc = uint32_t(::crc32(::crc32(0, type, 4), data, len));
        require(crc == crc_stored, ErrorKind::io, name + ": PNG chunk CRC mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            require(len == 13, ErrorKind::io, name + ": bad IHDR");
            width = int(detail::be32(data));
            height = int(detail::be32(data + 4));
            int bit_depth = data[8], color_type = data[9];
            int interlace = data[12];
            require(width > 0 && height > 0, ErrorKind::io, name + ": zero-dimension image");
            require(bit_depth == 8, ErrorKind::io,
                    name + ": unsupported PNG bit depth " + std::to_string(bit_depth) +
                        " (only 8-bit supported)");
            require(color_type == 0 || color_type == 2, ErrorKind::io,
                    name + ": unsupported PNG color type " + std::to_string(color_type) +
                        " (only grayscale and RGB supported)");
            require(interlace == 0, ErrorKind::io, name + ": interlaced PNG not supported");
            channels = color_type == 0 ? 1 : 3;
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    require(saw_ihdr && saw_iend && !idat.empty(), ErrorKind::io, name + ": incomplete PNG");

    const size_t stride = size_t(width) * channels;
    std::vector<uint8_t> raw = detail::zlib_inflate(idat.data(), idat.size(), (stride + 1) * height);

    // undo per-row filters
    std::vector<uint8_t> pix(stride * height);
    const int bpp = channels;
    for (int y = 0; y < height; ++y) {
        const uint8_t* row = &raw[size_t(y) * (stride + 1)];
        uint8_t filter = row[0];
        uint8_t* cur = &pix[size_t(y) * stride];
        const uint8_t* up = y > 0 ? &pix[size_t(y - 1) * stride] : nullptr;
        for (size_t x = 0; x < stride; ++x) {
            int a = x >= size_t(bpp) ? cur[x - bpp] : 0;
            int b = up ? up[x] : 0;
            int c = (up && x >= size_t(bpp)) ? up[x - bpp] : 0;
            int v = row[1 + x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += detail::paeth(a, b, c); break;
                default: throw Error(ErrorKind::io, name + ": bad PNG filter type");
            }
            cur[x] = uint8_t(v & 0xff);
        }
    }

    ImageTensor out(height, width, channels);
    for (size_t i = 0; i < pix.size(); ++i) out.data[i] = pix[i] / 255.0;
    return out;
}

inline std::vector<uint8_t> encode_png(const ImageTensor& im) {
    require(im.height > 0 && im.width > 0, ErrorKind::usage, "encode_png: empty image");
    const size_t stride = size_t(im.width) * im.channels;
    std::vector<uint8_t> raw((stride + 1) * im.height);
    for (int y = 0; y < im.height; ++y) {
        uint8_t* row = &raw[size_t(y) * (stride + 1)];
        row[0] = 0;  // filter: none
        for (size_t x = 0; x < stride; ++x) {
            double v = im.data[size_t(y) * stride + x];
            v = std::clamp(v, 0.0, 1.0);
            row[1 + x] = uint8_t(std::lround(v * 255.0));
        }
    }
    std::vector<uint8_t> idat = detail::zlib_deflate(raw);

    std::vector<uint8_t> out = {137, 80, 78, 71, 13, 10, 26, 10};
    auto chunk = [&out](const char* type, const std::vector<uint8_t>& data) {
        detail::push_be32(out, uint32_t(data.size()));
        size_t type_at = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        uint32_t crc = uint32_t(::crc32(0, &out[type_at], uInt(4 + data.size())));
        detail::push_be32(out, crc);
    };

    std::vector<uint8_t> ihdr;
    detail::push_be32(ihdr, uint32_t(im.width));
    detail::push_be32(ihdr, uint32_t(im.height));
    ihdr.push_back(8);                                // bit depth
    ihdr.push_back(im.channels == 1 ? 0 : 2);         // color type
    ihdr.push_back(0);                                // compression
    ihdr.push_back(0);                                // filter
    ihdr.push_back(0);                                // interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", idat);
    chunk("IEND", {});
    return out;
}

// Binary PPM, maxval 255.
inline ImageTensor decode_ppm(const std::vector<uint8_t>& bytes, const std::string& name) {
    size_t pos = 0;
    auto token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        size_t start = pos;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
        return std::string(bytes.begin() + std::ptrdiff_t(start), bytes.begin() + std::ptrdiff_t(pos));
    };
    require(token() == "P6", ErrorKind::io, name + ": not a binary PPM (P6)");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(token());
        height = std::stoi(token());
        maxval = std::stoi(token());
    } catch (const std::exception&) {
        throw Error(ErrorKind::io, name + ": malformed PPM header");
    }
    require(width > 0 && height > 0, ErrorKind::io, name + ": zero-dimension image");
    require(maxval == 255, ErrorKind::io, name + ": only 8-bit PPM supported (maxval 255)");
    ++pos;  // single whitespace after maxval
    size_t need = size_t(width) * height * 3;
    require(bytes.size() - pos >= need, ErrorKind::io, name + ": truncated PPM pixel data");
    ImageTensor out(height, width, 3);
    for (size_t i = 0; i < need; ++i) out.data[i] = bytes[pos + i] / 255.0;
    return out;
}

inline std::vector<uint8_t> encode_ppm(const ImageTensor& im) {
    require(im.channels == 3, ErrorKind::usage, "encode_ppm: 3-channel input required");
    std::string header = "P6\n" + std::to_string(im.width) + " " + std::to_string(im.height) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + im.data.size());
    for (double v : im.data) out.push_back(uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    return out;
}

// Dispatch on content magic; 8-bit values scaled by 1/255.
inline ImageTensor load_image(const std::string& path) {
    std::vector<uint8_t> bytes = detail::read_file_bytes(path);
    require(!bytes.empty(), ErrorKind::io, path + ": empty file");
    if (is_png(bytes)) return decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
    throw Error(ErrorKind::io, path + ": unsupported image format (PNG or binary PPM expected)");
}

inline void save_image(const std::string& path, const ImageTensor& im) {
    auto ext = std::filesystem::path(path).extension().string();
    if (ext == ".png") {
        detail::write_file_bytes(path, encode_png(im));
    } else if (ext == ".ppm") {
        detail::write_file_bytes(path, encode_ppm(im));
    } else {
        throw Error(ErrorKind::usage, path + ": unsupported output extension (.png or .ppm)");
    }
}

}  // namespace coalsort::img

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "coalsort/common.hpp"

namespace coalsort::img {

// H x W x C raster, row-major, channel-last, double precision.
// Raw (pre-normalization) images hold values in [0, 1].
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c), data(size_t(h) * w * c, fill) {
        require(h >= 1 && w >= 1 && (c == 1 || c == 3), ErrorKind::usage,
                "ImageTensor: dims must be positive with 1 or 3 channels");
    }

    double& at(int row, int col, int ch) {
        return data[(size_t(row) * width + col) * channels + ch];
    }
    double at(int row, int col, int ch) const {
        return data[(size_t(row) * width + col) * channels + ch];
    }

    size_t size() const { return data.size(); }
};

struct NormalizationStats {
    std::array<double, 3> mean;
    std::array<double, 3> std;
};

// ImageNet per-channel constants.
inline NormalizationStats imagenet_stats() {
    return {{0.485, 0.456, 0.406}, {0.229, 0.224, 0.225}};
}

// Bilinear resize with align-centers sampling: the source coordinate of
// output pixel i is (i + 0.5) * in/out - 0.5, clamped to the valid range.
// Same-size resize is then an exact identity and every output value is a
// convex combination of input values.
inline ImageTensor resize_bilinear(const ImageTensor& in, int out_h, int out_w) {
    require(out_h >= 1 && out_w >= 1, ErrorKind::usage, "resize_bilinear: zero target dimension");
    ImageTensor out(out_h, out_w, in.channels);
    const double sy = double(in.height) / out_h;
    const double sx = double(in.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, double(in.height - 1));
        int y0 = int(std::floor(fy));
        int y1 = std::min(y0 + 1, in.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, double(in.width - 1));
            int x0 = int(std::floor(fx));
            int x1 = std::min(x0 + 1, in.width - 1);
            double wx = fx - x0;
            for (int c = 0; c < in.channels; ++c) {
                double top = in.at(y0, x0, c) * (1.0 - wx) + in.at(y0, x1, c) * wx;
                double bot = in.at(y1, x0, c) * (1.0 - wx) + in.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1.0 - wy) + bot * wy;
            }
        }
    }
    return out;
}

// Contiguous centered window; start row/col = floor((dim - out)/2).
inline ImageTensor center_crop(const ImageTensor& in, int out_h, int out_w) {
    require(out_h >= 1 && out_w >= 1 && out_h <= in.height && out_w <= in.width,
            ErrorKind::usage, "center_crop: crop larger than image");
    const int r0 = (in.height - out_h) / 2;
    const int c0 = (in.width - out_w) / 2;
    ImageTensor out(out_h, out_w, in.channels);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(y, x, c) = in.at(r0 + y, c0 + x, c);
    return out;
}

inline ImageTensor flip_horizontal(const ImageTensor& in) {
    ImageTensor out(in.height, in.width, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(y, x, c) = in.at(y, in.width - 1 - x, c);
    return out;
}

inline ImageTensor flip_vertical(const ImageTensor& in) {
    ImageTensor out(in.height, in.width, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c)
                out.at(y, x, c) = in.at(in.height - 1 - y, x, c);
    return out;
}

// Each flip fires independently with its own probability; both decisions are
// drawn from the supplied stream every call (horizontal first), so stream
// consumption does not depend on the outcomes.
inline ImageTensor random_flip(const ImageTensor& in, double horizontal_p, double vertical_p,
                               Rng& rng) {
    require(horizontal_p >= 0.0 && horizontal_p <= 1.0 && vertical_p >= 0.0 && vertical_p <= 1.0,
            ErrorKind::usage, "random_flip: probabilities must lie in [0,1]");
    const bool do_h = rng.uniform() < horizontal_p;
    const bool do_v = rng.uniform() < vertical_p;
    ImageTensor out = do_h ? flip_horizontal(in) : in;
    if (do_v) out = flip_vertical(out);
    return out;
}

// (value - mean) / std per channel.
inline ImageTensor normalize(const ImageTensor& in, const NormalizationStats& stats) {
    require(in.channels == 3, ErrorKind::usage, "normalize: 3-channel input required");
    ImageTensor out = in;
    for (size_t i = 0; i < out.data.size(); ++i) {
        int c = int(i % 3);
        out.data[i] = (out.data[i] - stats.mean[c]) / stats.std[c];
    }
    return out;
}

inline ImageTensor denormalize(const ImageTensor& in, const NormalizationStats& stats) {
    require(in.channels == 3, ErrorKind::usage, "denormalize: 3-channel input required");
    ImageTensor out = in;
    for (size_t i = 0; i < out.data.size(); ++i) {
        int c = int(i % 3);
        out.data[i] = out.data[i] * stats.std[c] + stats.mean[c];
    }
    return out;
}

}  // namespace coalsort::img

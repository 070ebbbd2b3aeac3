#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "coalsort/features/feature.hpp"

namespace coalsort::feat {

struct Plane {
    int height = 0;
    int width = 0;
    std::vector<double> v;

    Plane() = default;
    Plane(int h, int w, double fill = 0.0) : height(h), width(w), v(size_t(h) * w, fill) {}

    double& at(int r, int c) { return v[size_t(r) * width + c]; }
    double at(int r, int c) const { return v[size_t(r) * width + c]; }
};

struct WaveletConfig {
    int levels = 3;

    void validate() const {
        require(levels >= 1, ErrorKind::usage, "WaveletConfig: levels must be >= 1");
    }
};

struct HaarBands {
    Plane ll, lh, hl, hh;
};

inline Plane channel_plane(const img::ImageTensor& im, int ch) {
    Plane p(im.height, im.width);
    for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x) p.at(y, x) = im.at(y, x, ch);
    return p;
}

// Edge-replicate to the next even size in each dimension.
inline Plane pad_to_even(const Plane& in) {
    int h = in.height + (in.height % 2);
    int w = in.width + (in.width % 2);
    if (h == in.height && w == in.width) return in;
    Plane out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(y, x) = in.at(std::min(y, in.height - 1), std::min(x, in.width - 1));
    return out;
}

// Orthonormal 2x2 Haar block transform; per block [[a,b],[c,d]]:
//   LL=(a+b+c+d)/2  LH=(a-b+c-d)/2  HL=(a+b-c-d)/2  HH=(a-b-c+d)/2
inline HaarBands haar_dwt2(const Plane& in) {
    require(in.height % 2 == 0 && in.width % 2 == 0, ErrorKind::usage,
            "haar_dwt2: even side lengths required (pad_to_even first)");
    int oh = in.height / 2, ow = in.width / 2;
    HaarBands b{Plane(oh, ow), Plane(oh, ow), Plane(oh, ow), Plane(oh, ow)};
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double a = in.at(2 * y, 2 * x);
            double b_ = in.at(2 * y, 2 * x + 1);
            double c = in.at(2 * y + 1, 2 * x);
            double d = in.at(2 * y + 1, 2 * x + 1);
            b.ll.at(y, x) = (a + b_ + c + d) / 2.0;
            b.lh.at(y, x) = (a - b_ + c - d) / 2.0;
            b.hl.at(y, x) = (a + b_ - c - d) / 2.0;
            b.hh.at(y, x) = (a - b_ - c + d) / 2.0;
        }
    return b;
}

inline Plane haar_idwt2(const HaarBands& b) {
    int h = b.ll.height * 2, w = b.ll.width * 2;
    Plane out(h, w);
    for (int y = 0; y < b.ll.height; ++y)
        for (int x = 0; x < b.ll.width; ++x) {
            double ll = b.ll.at(y, x), lh = b.lh.at(y, x), hl = b.hl.at(y, x), hh = b.hh.at(y, x);
            out.at(2 * y, 2 * x) = (ll + lh + hl + hh) / 2.0;
            out.at(2 * y, 2 * x + 1) = (ll - lh + hl - hh) / 2.0;
            out.at(2 * y + 1, 2 * x) = (ll + lh - hl - hh) / 2.0;
            out.at(2 * y + 1, 2 * x + 1) = (ll - lh - hl + hh) / 2.0;
        }
    return out;
}

namespace detail {

inline void mean_var(const Plane& p, double& mean, double& var) {
    double n = double(p.v.size());
    double s = 0.0;
    for (double x : p.v) s += x;
    mean = s / n;
    double sq = 0.0;
    for (double x : p.v) sq += (x - mean) * (x - mean);
    var = sq / n;  // population variance
}

}  // namespace detail

// Multi-scale wavelet statistics: recursive LL decomposition, (mean, variance)
// of each detail subband. Emission order: channel-major, then level, then
// subband (LH, HL, HH), then mean before variance. 3ch x 3 levels x 3 bands
// x 2 stats = 54 dims at defaults.
inline FeatureVector msws_features(const img::ImageTensor& im, const WaveletConfig& cfg = {}) {
    cfg.validate();
    require(im.channels == 3, ErrorKind::usage, "msws_features: 3-channel input required");
    require(im.height >= (1 << cfg.levels) && im.width >= (1 << cfg.levels), ErrorKind::usage,
            "msws_features: image too small for decomposition depth");
    FeatureVector fv;
    fv.descriptor_id = "msws_haar_l" + std::to_string(cfg.levels);
    fv.values.reserve(size_t(im.channels) * cfg.levels * 6);
    for (int ch = 0; ch < im.channels; ++ch) {
        Plane plane = channel_plane(im, ch);
        for (int level = 0; level < cfg.levels; ++level) {
            HaarBands bands = haar_dwt2(pad_to_even(plane));
            for (const Plane* band : {&bands.lh, &bands.hl, &bands.hh}) {
                double mean = 0.0, var = 0.0;
                detail::mean_var(*band, mean, var);
                fv.values.push_back(mean);
                fv.values.push_back(var);
            }
            plane = std::move(bands.ll);
        }
    }
    return fv;
}

}  // namespace coalsort::feat

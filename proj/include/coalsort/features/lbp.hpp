#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "coalsort/features/feature.hpp"

namespace coalsort::feat {

struct LBPConfig {
    // (p neighbors, radius) per scale
    std::vector<std::pair<int, int>> scales = {{8, 1}, {16, 2}, {24, 3}, {24, 4}};

    void validate() const {
        require(!scales.empty(), ErrorKind::usage, "LBPConfig: at least one scale required");
        for (auto [p, r] : scales)
            require(p >= 4 && p <= 24 && r >= 1, ErrorKind::usage,
                    "LBPConfig: need 4 <= p <= 24 and r >= 1");
    }
};

namespace detail {

// Neighbor k of pixel (row, col) sits at (row - r*sin(2*pi*k/p),
// col + r*cos(2*pi*k/p)). Offsets within 1e-8 of an integer snap to it, so
// on-grid neighbors are read exactly and equal values survive the >= rule.
inline std::vector<std::pair<double, double>> circle_offsets(int p, int r) {
    std::vector<std::pair<double, double>> off(static_cast<size_t>(p));
    for (int k = 0; k < p; ++k) {
        double theta = 2.0 * 3.14159265358979323846 * k / p;
        double dr = -r * std::sin(theta);
        double dc = r * std::cos(theta);
        if (std::abs(dr - std::round(dr)) < 1e-8) dr = std::round(dr);
        if (std::abs(dc - std::round(dc)) < 1e-8) dc = std::round(dc);
        off[size_t(k)] = {dr, dc};
    }
    return off;
}

inline double sample_bilinear(const img::ImageTensor& gray, double row, double col) {
    int r0 = int(std::floor(row));
    int c0 = int(std::floor(col));
    double fr = row - r0;
    double fc = col - c0;
    if (fr == 0.0 && fc == 0.0) return gray.at(r0, c0, 0);
    int r1 = fr == 0.0 ? r0 : r0 + 1;
    int c1 = fc == 0.0 ? c0 : c0 + 1;
    double top = gray.at(r0, c0, 0) * (1.0 - fc) + gray.at(r0, c1, 0) * fc;
    double bot = gray.at(r1, c0, 0) * (1.0 - fc) + gray.at(r1, c1, 0) * fc;
    return top * (1.0 - fr) + bot * fr;
}

// circular 0/1 transition count of a p-bit code
inline int transitions(uint32_t code, int p) {
    int n = 0;
    for (int k = 0; k < p; ++k) {
        int a = int((code >> k) & 1u);
        int b = int((code >> ((k + 1) % p)) & 1u);
        if (a != b) ++n;
    }
    return n;
}

}  // namespace detail

// Per-interior-pixel p-bit codes; bit k set iff the interpolated neighbor is
// >= the center value.
inline std::vector<uint32_t> lbp_codes(const img::ImageTensor& gray, int p, int r) {
    require(gray.channels == 1, ErrorKind::usage, "lbp: single-channel input required");
    require(p >= 4 && p <= 24 && r >= 1, ErrorKind::usage, "lbp: need 4 <= p <= 24 and r >= 1");
    require(gray.height > 2 * r && gray.width > 2 * r, ErrorKind::usage,
            "lbp: image too small for radius " + std::to_string(r));
    const auto off = detail::circle_offsets(p, r);
    std::vector<uint32_t> codes;
    codes.reserve(size_t(gray.height - 2 * r) * size_t(gray.width - 2 * r));
    for (int y = r; y < gray.height - r; ++y) {
        for (int x = r; x < gray.width - r; ++x) {
            const double center = gray.at(y, x, 0);
            uint32_t code = 0;
            for (int k = 0; k < p; ++k) {
                double v = detail::sample_bilinear(gray, y + off[size_t(k)].first,
                                                   x + off[size_t(k)].second);
                if (v >= center) code |= (1u << k);
            }
            codes.push_back(code);
        }
    }
    return codes;
}

// Raw 2^p-bin histogram, normalized to sum 1.
inline FeatureVector lbp_histogram(const img::ImageTensor& gray, int p, int r) {
    auto codes = lbp_codes(gray, p, r);
    FeatureVector fv;
    fv.values.assign(size_t(1) << p, 0.0);
    for (uint32_t c : codes) fv.values[c] += 1.0;
    for (auto& v : fv.values) v /= double(codes.size());
    fv.descriptor_id = "lbp_p" + std::to_string(p) + "r" + std::to_string(r);
    return fv;
}

// Rotation-invariant uniform mapping: codes with <= 2 circular transitions
// bin by popcount (bins 0..p), everything else shares bin p+1.
inline FeatureVector lbp_uniform_histogram(const img::ImageTensor& gray, int p, int r) {
    auto codes = lbp_codes(gray, p, r);
    FeatureVector fv;
    fv.values.assign(size_t(p) + 2, 0.0);
    for (uint32_t c : codes) {
        int bin = detail::transitions(c, p) <= 2 ? std::popcount(c) : p + 1;
        fv.values[size_t(bin)] += 1.0;
    }
    for (auto& v : fv.values) v /= double(codes.size());
    fv.descriptor_id = "lbp_riu2_p" + std::to_string(p) + "r" + std::to_string(r);
    return fv;
}

// Concatenated riu2 histograms in config order; 80 dims at defaults.
inline FeatureVector multiscale_lbp(const img::ImageTensor& gray, const LBPConfig& cfg = {}) {
    cfg.validate();
    FeatureVector fv;
    fv.descriptor_id = "lbp_riu2";
    for (auto [p, r] : cfg.scales) {
        FeatureVector part = lbp_uniform_histogram(gray, p, r);
        fv.values.insert(fv.values.end(), part.values.begin(), part.values.end());
        fv.descriptor_id += "_p" + std::to_string(p) + "r" + std::to_string(r);
    }
    return fv;
}

}  // namespace coalsort::feat

#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "coalsort/features/feature.hpp"

namespace coalsort::feat {

struct GLCMConfig {
    int levels = 8;
    // (row-delta, col-delta): distance 1 at 0, 90, 45, 135 degrees
    std::vector<std::pair<int, int>> offsets = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    bool symmetric = true;
    bool normalized = true;

    void validate() const {
        require(levels >= 2, ErrorKind::usage, "GLCMConfig: levels must be >= 2");
        require(!offsets.empty(), ErrorKind::usage, "GLCMConfig: at least one offset required");
        for (auto [dr, dc] : offsets)
            require(dr != 0 || dc != 0, ErrorKind::usage, "GLCMConfig: zero offset");
    }
};

struct GlcmMatrix {
    int levels = 0;
    std::vector<double> p;  // levels x levels, row-major

    double& at(int i, int j) { return p[size_t(i) * levels + j]; }
    double at(int i, int j) const { return p[size_t(i) * levels + j]; }
};

// Pair counts of (I[a], I[a + offset]) over in-bounds positions; symmetric
// adds the transpose, normalized divides by the total count.
inline std::vector<GlcmMatrix> glcm(const GrayLevels& q, const GLCMConfig& cfg = {}) {
    cfg.validate();
    for (int v : q.levels)
        require(v >= 0 && v < cfg.levels, ErrorKind::usage, "glcm: level value out of range");

    std::vector<GlcmMatrix> out;
    out.reserve(cfg.offsets.size());
    for (auto [dr, dc] : cfg.offsets) {
        GlcmMatrix m{cfg.levels, std::vector<double>(size_t(cfg.levels) * cfg.levels, 0.0)};
        double total = 0.0;
        for (int y = 0; y < q.height; ++y) {
            int y2 = y + dr;
            if (y2 < 0 || y2 >= q.height) continue;
            for (int x = 0; x < q.width; ++x) {
                int x2 = x + dc;
                if (x2 < 0 || x2 >= q.width) continue;
                m.at(q.at(y, x), q.at(y2, x2)) += 1.0;
                total += 1.0;
            }
        }
        if (cfg.symmetric) {
            for (int i = 0; i < cfg.levels; ++i)
                for (int j = i + 1; j < cfg.levels; ++j) {
                    double s = m.at(i, j) + m.at(j, i);
                    m.at(i, j) = s;
                    m.at(j, i) = s;
                }
            for (int i = 0; i < cfg.levels; ++i) m.at(i, i) *= 2.0;
            total *= 2.0;
        }
        if (cfg.normalized && total > 0.0)
            for (auto& v : m.p) v /= total;
        out.push_back(std::move(m));
    }
    return out;
}

// Haralick properties of one normalized matrix, in emission order:
// contrast, dissimilarity, homogeneity, energy, correlation, ASM.
// Correlation is defined as 1 when either marginal variance vanishes.
inline std::vector<double> glcm_properties(const GlcmMatrix& m) {
    double sum = 0.0;
    for (double v : m.p) sum += v;
    require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::usage,
            "glcm_properties: matrix must be normalized (entries sum to 1)");

    const int n = m.levels;
    double contrast = 0.0, dissim = 0.0, homog = 0.0, asm_v = 0.0;
    double mu_i = 0.0, mu_j = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double p = m.at(i, j);
            double d = double(i - j);
            contrast += p * d * d;
            dissim += p * std::abs(d);
            homog += p / (1.0 + d * d);
            asm_v += p * p;
            mu_i += i * p;
            mu_j += j * p;
        }
    double var_i = 0.0, var_j = 0.0, cov = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double p = m.at(i, j);
            var_i += (i - mu_i) * (i - mu_i) * p;
            var_j += (j - mu_j) * (j - mu_j) * p;
            cov += (i - mu_i) * (j - mu_j) * p;
        }
    double denom = std::sqrt(var_i) * std::sqrt(var_j);
    double corr = denom > 0.0 ? cov / denom : 1.0;
    return {contrast, dissim, homog, std::sqrt(asm_v), corr, asm_v};
}

// 6 properties per offset, offset-major; 24 dims at defaults.
inline FeatureVector glcm_features(const img::ImageTensor& gray, const GLCMConfig& cfg = {}) {
    GLCMConfig c = cfg;
    c.normalized = true;
    auto mats = glcm(quantize_gray(gray, c.levels), c);
    FeatureVector fv;
    fv.descriptor_id = "glcm_l" + std::to_string(c.levels) + "_o" + std::to_string(c.offsets.size()) +
                       (c.symmetric ? "_sym" : "");
    for (const auto& m : mats) {
        auto props = glcm_properties(m);
        fv.values.insert(fv.values.end(), props.begin(), props.end());
    }
    return fv;
}

}  // namespace coalsort::feat

#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "coalsort/features/glcm.hpp"
#include "coalsort/features/lbp.hpp"
#include "coalsort/features/wavelet.hpp"

namespace coalsort::feat {

enum class Method { lbp, glcm, msws };

inline Method method_from_name(const std::string& name) {
    if (name == "lbp") return Method::lbp;
    if (name == "glcm") return Method::glcm;
    if (name == "msws") return Method::msws;
    throw Error(ErrorKind::usage,
                "unknown extractor '" + name + "' (valid methods: lbp, glcm, msws)");
}

inline const char* method_name(Method m) {
    switch (m) {
        case Method::lbp: return "lbp";
        case Method::glcm: return "glcm";
        case Method::msws: return "msws";
    }
    return "?";
}

// Classical features are computed on the raw [0,1] crop (LBP/GLCM on luma,
// MSWS per RGB channel).
inline FeatureVector extract(const img::ImageTensor& im, Method m) {
    switch (m) {
        case Method::lbp: return multiscale_lbp(to_grayscale(im));
        case Method::glcm: return glcm_features(to_grayscale(im));
        case Method::msws: return msws_features(im);
    }
    throw Error(ErrorKind::logic, "extract: bad method");
}

struct FeatureRow {
    std::string image_id;
    std::string label;
    std::string split;
    std::vector<double> values;
};

// `image_id,label,split,f0..fK`, %.17g values.
inline void write_features_csv(const std::string& path, const std::vector<FeatureRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorKind::io, "cannot write " + path);
    size_t dim = rows.empty() ? 0 : rows.front().values.size();
    f << "image_id,label,split";
    for (size_t i = 0; i < dim; ++i) f << ",f" << i;
    f << "\n";
    char buf[64];
    for (const auto& r : rows) {
        require(r.values.size() == dim, ErrorKind::logic, "feature rows have mixed lengths");
        f << r.image_id << "," << r.label << "," << r.split;
        for (double v : r.values) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            f << "," << buf;
        }
        f << "\n";
    }
    require(f.good(), ErrorKind::io, "write failed: " + path);
}

}  // namespace coalsort::feat

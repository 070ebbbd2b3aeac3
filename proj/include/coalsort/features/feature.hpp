#pragma once

#include <string>
#include <vector>

#include "coalsort/imagekit/image.hpp"

namespace coalsort::feat {

// Fixed-length real descriptor; length is a pure function of the extractor
// configuration, never of the image.
struct FeatureVector {
    std::vector<double> values;
    std::string descriptor_id;
};

// ITU-R 601 luma.
inline img::ImageTensor to_grayscale(const img::ImageTensor& in) {
    require(in.channels == 3, ErrorKind::usage, "to_grayscale: 3-channel input required");
    img::ImageTensor out(in.height, in.width, 1);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            out.at(y, x, 0) =
                0.299 * in.at(y, x, 0) + 0.587 * in.at(y, x, 1) + 0.114 * in.at(y, x, 2);
    return out;
}

struct GrayLevels {
    int height = 0;
    int width = 0;
    std::vector<int> levels;

    int at(int row, int col) const { return levels[size_t(row) * width + col]; }
};

// level = min(floor(v * levels), levels - 1); input must be a raw [0,1] image.
inline GrayLevels quantize_gray(const img::ImageTensor& gray, int levels) {
    require(gray.channels == 1, ErrorKind::usage, "quantize_gray: single-channel input required");
    require(levels >= 2, ErrorKind::usage, "quantize_gray: levels must be >= 2");
    GrayLevels out{gray.height, gray.width, {}};
    out.levels.reserve(gray.data.size());
    for (double v : gray.data) {
        require(v >= 0.0 && v <= 1.0, ErrorKind::usage,
                "quantize_gray: values outside [0,1] (normalized image?)");
        out.levels.push_back(std::min(int(v * levels), levels - 1));
    }
    return out;
}

}  // namespace coalsort::feat

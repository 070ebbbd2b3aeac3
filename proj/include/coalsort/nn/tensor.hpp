#pragma once

#include <vector>

#include "coalsort/common.hpp"

namespace coalsort::nn {

// Batch activation tensor, NCHW, contiguous doubles.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(size_t(n_) * c_ * h_ * w_, 0.0) {}

    size_t size() const { return v.size(); }
    size_t index(int in, int ic, int iy, int ix) const {
        return ((size_t(in) * c + ic) * h + iy) * w + ix;
    }
    double& at(int in, int ic, int iy, int ix) { return v[index(in, ic, iy, ix)]; }
    double at(int in, int ic, int iy, int ix) const { return v[index(in, ic, iy, ix)]; }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
    void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

inline int conv_out_dim(int in, int ksize, int stride, int pad) {
    return (in + 2 * pad - ksize) / stride + 1;
}

}  // namespace coalsort::nn

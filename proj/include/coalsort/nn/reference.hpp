#pragma once

#include "coalsort/nn/ops.hpp"

namespace coalsort::nn {

// Reference compositions used by tests to contrast connectivity patterns.
// Both wrap a single convolution as the composite F; weight layout matches
// conv2d_forward (out_c x in_c x k x k flat, row-major).

inline Tensor plain_layer(const Tensor& x, const std::vector<double>& weight,
                          const std::vector<double>& bias, int out_c, int ksize, int stride,
                          int pad, bool relu_before = false) {
    Tensor in = x;
    if (relu_before) relu_forward(x, in);
    require(weight.size() == size_t(out_c) * x.c * ksize * ksize && bias.size() == size_t(out_c),
            ErrorKind::usage, "plain_layer: weight shape mismatch");
    Tensor y;
    conv2d_forward(in, weight.data(), bias.data(), out_c, ksize, stride, pad, y);
    return y;
}

inline Tensor residual_layer(const Tensor& x, const std::vector<double>& weight,
                             const std::vector<double>& bias, int out_c, int ksize, int stride,
                             int pad, bool relu_before = false) {
    Tensor f = plain_layer(x, weight, bias, out_c, ksize, stride, pad, relu_before);
    require(f.same_shape(x), ErrorKind::usage,
            "residual_layer: F(x) shape must match x for the skip connection");
    for (size_t i = 0; i < f.size(); ++i) f.v[i] += x.v[i];
    return f;
}

}  // namespace coalsort::nn

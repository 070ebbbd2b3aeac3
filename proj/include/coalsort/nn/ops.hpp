#pragma once

#include <Eigen/Dense>
#include <vector>

#include "coalsort/nn/tensor.hpp"

namespace coalsort::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

// ---------------------------------------------------------------------------
// convolution via im2col + gemm, one sample at a time
// ---------------------------------------------------------------------------

inline void im2col(const Tensor& x, int n, int ksize, int stride, int pad, int oh, int ow,
                   Eigen::MatrixXd& cols) {
    cols.resize(size_t(x.c) * ksize * ksize, size_t(oh) * ow);
    for (int ic = 0; ic < x.c; ++ic)
        for (int ky = 0; ky < ksize; ++ky)
            for (int kx = 0; kx < ksize; ++kx) {
                int row = (ic * ksize + ky) * ksize + kx;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky;
                    bool row_ok = iy >= 0 && iy < x.h;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx;
                        cols(row, size_t(oy) * ow + ox) =
                            (row_ok && ix >= 0 && ix < x.w) ? x.at(n, ic, iy, ix) : 0.0;
                    }
                }
            }
}

// weight layout: out_c x (in_c*k*k) row-major; bias: out_c
inline void conv2d_forward(const Tensor& x, const double* weight, const double* bias, int out_c,
                           int ksize, int stride, int pad, Tensor& y) {
    int oh = conv_out_dim(x.h, ksize, stride, pad);
    int ow = conv_out_dim(x.w, ksize, stride, pad);
    require(oh >= 1 && ow >= 1, ErrorKind::usage, "conv2d: output dimension collapsed");
    y = Tensor(x.n, out_c, oh, ow);
    Eigen::Map<const RowMat> wm(weight, out_c, size_t(x.c) * ksize * ksize);
    Eigen::Map<const Eigen::VectorXd> bv(bias, out_c);
    Eigen::MatrixXd cols;
    for (int n = 0; n < x.n; ++n) {
        im2col(x, n, ksize, stride, pad, oh, ow, cols);
        Eigen::Map<RowMat> ym(&y.v[y.index(n, 0, 0, 0)], out_c, size_t(oh) * ow);
        ym.noalias() = wm * cols;
        ym.colwise() += bv;
    }
}

inline void conv2d_backward(const Tensor& x, const double* weight, int out_c, int ksize,
                            int stride, int pad, const Tensor& dy, Tensor& dx, double* dweight,
                            double* dbias) {
    int oh = dy.h, ow = dy.w;
    Eigen::Map<const RowMat> wm(weight, out_c, size_t(x.c) * ksize * ksize);
    Eigen::Map<RowMat> dwm(dweight, out_c, size_t(x.c) * ksize * ksize);
    Eigen::Map<Eigen::VectorXd> dbv(dbias, out_c);
    Eigen::MatrixXd cols, dcols;
    for (int n = 0; n < x.n; ++n) {
        im2col(x, n, ksize, stride, pad, oh, ow, cols);
        Eigen::Map<const RowMat> dym(&dy.v[dy.index(n, 0, 0, 0)], out_c, size_t(oh) * ow);
        dwm.noalias() += dym * cols.transpose();
        dbv.noalias() += dym.rowwise().sum();
        dcols.noalias() = wm.transpose() * dym;
        // col2im scatter-add
        for (int ic = 0; ic < x.c; ++ic)
            for (int ky = 0; ky < ksize; ++ky)
                for (int kx = 0; kx < ksize; ++kx) {
                    int row = (ic * ksize + ky) * ksize + kx;
                    for (int oy = 0; oy < oh; ++oy) {
                        int iy = oy * stride - pad + ky;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int ox = 0; ox < ow; ++ox) {
                            int ix = ox * stride - pad + kx;
                            if (ix < 0 || ix >= x.w) continue;
                            dx.at(n, ic, iy, ix) += dcols(row, size_t(oy) * ow + ox);
                        }
                    }
                }
    }
}

// ---------------------------------------------------------------------------
// batch normalization
// ---------------------------------------------------------------------------

// Train mode: batch statistics (population variance). Saves per-channel mean
// and 1/sqrt(var+eps) for the backward pass; optionally folds the batch
// statistics into the running estimates.
inline void batchnorm_forward_train(const Tensor& x, const double* gamma, const double* beta,
                                    Tensor& y, std::vector<double>& save_mean,
                                    std::vector<double>& save_inv_std, double* running_mean,
                                    double* running_var, bool update_running) {
    y = Tensor(x.n, x.c, x.h, x.w);
    const size_t plane = size_t(x.h) * x.w;
    const double m = double(x.n) * double(plane);
    require(m >= 1, ErrorKind::usage, "batchnorm: empty batch");
    save_mean.assign(size_t(x.c), 0.0);
    save_inv_std.assign(size_t(x.c), 0.0);
    for (int c = 0; c < x.c; ++c) {
        double sum = 0.0, sq = 0.0;
        for (int n = 0; n < x.n; ++n) {
            const double* p = &x.v[x.index(n, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) {
                sum += p[i];
                sq += p[i] * p[i];
            }
        }
        double mean = sum / m;
        double var = std::max(sq / m - mean * mean, 0.0);
        double inv_std = 1.0 / std::sqrt(var + kBnEps);
        save_mean[size_t(c)] = mean;
        save_inv_std[size_t(c)] = inv_std;
        if (update_running) {
            running_mean[c] = (1.0 - kBnMomentum) * running_mean[c] + kBnMomentum * mean;
            running_var[c] = (1.0 - kBnMomentum) * running_var[c] + kBnMomentum * var;
        }
        double g = gamma[c], b = beta[c];
        for (int n = 0; n < x.n; ++n) {
            const double* p = &x.v[x.index(n, c, 0, 0)];
            double* q = &y.v[y.index(n, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mean) * inv_std + b;
        }
    }
}

inline void batchnorm_forward_eval(const Tensor& x, const double* gamma, const double* beta,
                                   const double* running_mean, const double* running_var,
                                   Tensor& y, std::vector<double>& save_mean,
                                   std::vector<double>& save_inv_std) {
    y = Tensor(x.n, x.c, x.h, x.w);
    const size_t plane = size_t(x.h) * x.w;
    save_mean.assign(size_t(x.c), 0.0);
    save_inv_std.assign(size_t(x.c), 0.0);
    for (int c = 0; c < x.c; ++c) {
        double mean = running_mean[c];
        double inv_std = 1.0 / std::sqrt(running_var[c] + kBnEps);
        save_mean[size_t(c)] = mean;
        save_inv_std[size_t(c)] = inv_std;
        double g = gamma[c], b = beta[c];
        for (int n = 0; n < x.n; ++n) {
            const double* p = &x.v[x.index(n, c, 0, 0)];
            double* q = &y.v[y.index(n, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mean) * inv_std + b;
        }
    }
}

// Backward. In train mode the saved statistics are functions of the batch, so
// the mean/variance terms enter the input gradient; in eval mode they are
// constants.
inline void batchnorm_backward(const Tensor& x, const Tensor& dy, const double* gamma,
                               const std::vector<double>& save_mean,
                               const std::vector<double>& save_inv_std, bool train_stats,
                               Tensor& dx, double* dgamma, double* dbeta) {
    const size_t plane = size_t(x.h) * x.w;
    const double m = double(x.n) * double(plane);
    for (int c = 0; c < x.c; ++c) {
        double mean = save_mean[size_t(c)], inv_std = save_inv_std[size_t(c)];
        double s1 = 0.0, s2 = 0.0;
        for (int n = 0; n < x.n; ++n) {
            const double* p = &x.v[x.index(n, c, 0, 0)];
            const double* d = &dy.v[dy.index(n, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) {
                s1 += d[i];
                s2 += d[i] * (p[i] - mean) * inv_std;
            }
        }
        dgamma[c] += s2;
        dbeta[c] += s1;
        double g = gamma[c];
        for (int n = 0; n < x.n; ++n) {
            const double* p = &x.v[x.index(n, c, 0, 0)];
            const double* d = &dy.v[dy.index(n, c, 0, 0)];
            double* q = &dx.v[dx.index(n, c, 0, 0)];
            if (train_stats) {
                for (size_t i = 0; i < plane; ++i) {
                    double xhat = (p[i] - mean) * inv_std;
                    q[i] += g * inv_std * (d[i] - s1 / m - xhat * s2 / m);
                }
            } else {
                for (size_t i = 0; i < plane; ++i) q[i] += g * inv_std * d[i];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// pointwise and pooling
// ---------------------------------------------------------------------------

inline void relu_forward(const Tensor& x, Tensor& y) {
    y = Tensor(x.n, x.c, x.h, x.w);
    for (size_t i = 0; i < x.size(); ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
}

inline void relu_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    for (size_t i = 0; i < x.size(); ++i)
        if (x.v[i] > 0.0) dx.v[i] += dy.v[i];
}

// 3x3 stride-2 pad-1 max pool; padding cells never win (window clamped to the
// valid range). First maximum in scan order wins; its plane-flat index is
// recorded for the backward pass.
inline void maxpool_forward(const Tensor& x, Tensor& y, std::vector<int>& argmax) {
    int oh = conv_out_dim(x.h, 3, 2, 1), ow = conv_out_dim(x.w, 3, 2, 1);
    require(oh >= 1 && ow >= 1, ErrorKind::usage, "maxpool: output dimension collapsed");
    y = Tensor(x.n, x.c, oh, ow);
    argmax.assign(y.size(), 0);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    int y0 = std::max(oy * 2 - 1, 0), y1 = std::min(oy * 2 + 1, x.h - 1);
                    int x0 = std::max(ox * 2 - 1, 0), x1 = std::min(ox * 2 + 1, x.w - 1);
                    double best = x.at(n, c, y0, x0);
                    int best_idx = y0 * x.w + x0;
                    for (int iy = y0; iy <= y1; ++iy)
                        for (int ix = x0; ix <= x1; ++ix) {
                            double v = x.at(n, c, iy, ix);
                            if (v > best) {
                                best = v;
                                best_idx = iy * x.w + ix;
                            }
                        }
                    size_t oi = y.index(n, c, oy, ox);
                    y.v[oi] = best;
                    argmax[oi] = best_idx;
                }
}

inline void maxpool_backward(const Tensor& x, const Tensor& dy, const std::vector<int>& argmax,
                             Tensor& dx) {
    size_t plane = size_t(x.h) * x.w;
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            double* base = &dx.v[(size_t(n) * x.c + c) * plane];
            for (int oy = 0; oy < dy.h; ++oy)
                for (int ox = 0; ox < dy.w; ++ox) {
                    size_t oi = dy.index(n, c, oy, ox);
                    base[argmax[oi]] += dy.v[oi];
                }
        }
}

// 2x2 stride-2 average pool. Odd inputs are edge-replicated to the next even
// size, which folds into clamping the second window coordinate.
inline void avgpool_forward(const Tensor& x, Tensor& y) {
    int oh = (x.h + 1) / 2, ow = (x.w + 1) / 2;
    y = Tensor(x.n, x.c, oh, ow);
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    int a = oy * 2, cc = std::min(oy * 2 + 1, x.h - 1);
                    int b = ox * 2, d = std::min(ox * 2 + 1, x.w - 1);
                    y.at(n, c, oy, ox) = 0.25 * (x.at(n, c, a, b) + x.at(n, c, a, d) +
                                                 x.at(n, c, cc, b) + x.at(n, c, cc, d));
                }
}

inline void avgpool_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c)
            for (int oy = 0; oy < dy.h; ++oy)
                for (int ox = 0; ox < dy.w; ++ox) {
                    double g = 0.25 * dy.at(n, c, oy, ox);
                    int a = oy * 2, cc = std::min(oy * 2 + 1, x.h - 1);
                    int b = ox * 2, d = std::min(ox * 2 + 1, x.w - 1);
                    dx.at(n, c, a, b) += g;
                    dx.at(n, c, a, d) += g;
                    dx.at(n, c, cc, b) += g;
                    dx.at(n, c, cc, d) += g;
                }
}

inline void global_avgpool_forward(const Tensor& x, Tensor& y) {
    y = Tensor(x.n, x.c, 1, 1);
    size_t plane = size_t(x.h) * x.w;
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const double* p = &x.v[x.index(n, c, 0, 0)];
            double s = 0.0;
            for (size_t i = 0; i < plane; ++i) s += p[i];
            y.at(n, c, 0, 0) = s / double(plane);
        }
}

inline void global_avgpool_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    size_t plane = size_t(x.h) * x.w;
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            double g = dy.at(n, c, 0, 0) / double(plane);
            double* q = &dx.v[dx.index(n, c, 0, 0)];
            for (size_t i = 0; i < plane; ++i) q[i] += g;
        }
}

inline void concat_forward(const std::vector<const Tensor*>& xs, Tensor& y) {
    require(!xs.empty(), ErrorKind::logic, "concat: no inputs");
    int n = xs[0]->n, h = xs[0]->h, w = xs[0]->w, c = 0;
    for (const Tensor* x : xs) {
        require(x->n == n && x->h == h && x->w == w, ErrorKind::usage,
                "concat: spatial/batch mismatch");
        c += x->c;
    }
    y = Tensor(n, c, h, w);
    size_t plane = size_t(h) * w;
    for (int in = 0; in < n; ++in) {
        int co = 0;
        for (const Tensor* x : xs) {
            std::copy_n(&x->v[x->index(in, 0, 0, 0)], size_t(x->c) * plane,
                        &y.v[y.index(in, co, 0, 0)]);
            co += x->c;
        }
    }
}

inline void concat_backward(const std::vector<Tensor*>& dxs, const Tensor& dy) {
    size_t plane = size_t(dy.h) * dy.w;
    for (int in = 0; in < dy.n; ++in) {
        int co = 0;
        for (Tensor* dx : dxs) {
            const double* src = &dy.v[dy.index(in, co, 0, 0)];
            double* dst = &dx->v[dx->index(in, 0, 0, 0)];
            for (size_t i = 0; i < size_t(dx->c) * plane; ++i) dst[i] += src[i];
            co += dx->c;
        }
    }
}

}  // namespace coalsort::nn

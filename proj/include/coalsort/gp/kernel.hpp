#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "coalsort/common.hpp"

namespace coalsort::gp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct KernelParams {
    double lengthscale = 1.0;
    double signal_variance = 1.0;
    double prior_mean = 0.0;
    double latent_noise = 0.1;       // sigma_a^2, added to K for classification
    double observation_noise = 0.0;  // sigma_Y^2, regression only

    void validate() const {
        require(lengthscale > 0.0, ErrorKind::usage, "KernelParams: lengthscale must be > 0");
        require(signal_variance > 0.0, ErrorKind::usage,
                "KernelParams: signal_variance must be > 0");
        require(latent_noise >= 0.0 && observation_noise >= 0.0, ErrorKind::usage,
                "KernelParams: noise terms must be >= 0");
    }
};

// signal_variance * exp(-|x1-x2|^2 / (2 lengthscale^2))
inline double rbf_kernel(const Vector& x1, const Vector& x2, const KernelParams& p) {
    require(x1.size() == x2.size(), ErrorKind::usage, "rbf_kernel: dimension mismatch");
    double d2 = (x1 - x2).squaredNorm();
    return p.signal_variance * std::exp(-d2 / (2.0 * p.lengthscale * p.lengthscale));
}

// Pairwise kernel matrix; rows of X are points.
inline Matrix gram(const Matrix& a, const Matrix& b, const KernelParams& p) {
    require(a.cols() == b.cols() || a.rows() == 0 || b.rows() == 0, ErrorKind::usage,
            "gram: dimension mismatch");
    Matrix k(a.rows(), b.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
            k(i, j) = p.signal_variance *
                      std::exp(-(a.row(i) - b.row(j)).squaredNorm() /
                               (2.0 * p.lengthscale * p.lengthscale));
    return k;
}

// Self-gram with exact symmetry: upper triangle computed once and mirrored.
inline Matrix gram(const Matrix& x, const KernelParams& p) {
    Matrix k(x.rows(), x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        k(i, i) = p.signal_variance;
        for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
            double v = p.signal_variance *
                       std::exp(-(x.row(i) - x.row(j)).squaredNorm() /
                                (2.0 * p.lengthscale * p.lengthscale));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

// LLT with escalating diagonal jitter: start at 1e-10 * signal_variance,
// escalate x10 until 1e-4 * signal_variance, then give up.
inline Eigen::LLT<Matrix> cholesky_with_jitter(const Matrix& m, double signal_variance,
                                               double* jitter_used = nullptr) {
    double jitter = 1e-10 * signal_variance;
    const double max_jitter = 1e-4 * signal_variance;
    while (true) {
        Matrix a = m;
        a.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = jitter;
            return llt;
        }
        if (jitter >= max_jitter)
            throw Error(ErrorKind::numeric,
                        "Cholesky factorization failed even at jitter " + std::to_string(jitter));
        jitter *= 10.0;
    }
}

// numerically stable logistic
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + e^x) without overflow
inline double log1p_exp(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace coalsort::gp

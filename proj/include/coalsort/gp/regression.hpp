#pragma once

#include "coalsort/gp/kernel.hpp"

namespace coalsort::gp {

struct RegressionPosterior {
    Vector mean;
    Matrix cov;
};

// Exact GP regression conditioning with observation noise folded into the
// train-train gram:
//   mean = k_*^T (K + s_Y^2 I)^{-1} (y - mu) + mu
//   cov  = k_** - k_*^T (K + s_Y^2 I)^{-1} k_*
// Solved through the jittered Cholesky factor, never an explicit inverse.
// With no training points the prior (mu, k_**) comes back.
inline RegressionPosterior gp_regression_posterior(const Matrix& x_train, const Vector& y_train,
                                                   const Matrix& x_test, const KernelParams& p) {
    p.validate();
    require(x_train.rows() == y_train.size(), ErrorKind::usage,
            "gp_regression_posterior: X/Y row mismatch");

    RegressionPosterior out;
    if (x_train.rows() == 0) {
        out.mean = Vector::Constant(x_test.rows(), p.prior_mean);
        out.cov = gram(x_test, p);
        return out;
    }

    Matrix k_y = gram(x_train, p);
    k_y.diagonal().array() += p.observation_noise;
    auto llt = cholesky_with_jitter(k_y, p.signal_variance);

    Matrix k_star = gram(x_train, x_test, p);       // M x n
    Vector alpha = llt.solve(y_train - Vector::Constant(y_train.size(), p.prior_mean));
    out.mean = k_star.transpose() * alpha + Vector::Constant(x_test.rows(), p.prior_mean);

    Matrix v = llt.solve(k_star);                   // K_Y^{-1} k_*
    out.cov = gram(x_test, p) - k_star.transpose() * v;
    return out;
}

}  // namespace coalsort::gp

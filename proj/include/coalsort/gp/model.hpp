#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "coalsort/binio.hpp"
#include "coalsort/gp/laplace.hpp"

namespace coalsort::gp {

// Per-dimension z-score fitted on training features. Dimensions with
// (near-)zero spread pass through centered only.
struct FeatureScaler {
    Vector mean;
    Vector std;

    static FeatureScaler fit(const Matrix& x) {
        FeatureScaler s;
        s.mean = x.colwise().mean();
        s.std.resize(x.cols());
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            double v = (x.col(j).array() - s.mean(j)).square().mean();
            s.std(j) = std::sqrt(v);
            if (!(s.std(j) > 1e-12)) s.std(j) = 1.0;
        }
        return s;
    }

    Matrix apply(const Matrix& x) const {
        Matrix out = x;
        out.rowwise() -= mean.transpose();
        out.array().rowwise() /= std.transpose().array();
        return out;
    }
};

// A trained binary GP classifier: standardized training features, the
// converged Laplace state, and the Cholesky factor of (W^{-1} + K_a) so that
// loading the file reproduces predictions bitwise.
struct FittedGP {
    KernelParams params;
    FeatureScaler scaler;
    Matrix x;            // standardized training features, M x d
    Vector t;
    LaplaceState state;
    Matrix chol_lower;   // L with L L^T = W^{-1} + K_a
    double evidence = 0.0;

    Eigen::Index dim() const { return x.cols(); }

    // Probability of class 1 for raw (unstandardized) feature rows.
    std::vector<GPPrediction> predict(const Matrix& raw_features) const {
        require(raw_features.cols() == x.cols(), ErrorKind::usage,
                "FittedGP::predict: feature dimension mismatch");
        Matrix z = scaler.apply(raw_features);
        Matrix k_star = gram(x, z, params);
        Vector resid = t - state.sigmoid_at_mode;
        std::vector<GPPrediction> out(size_t(z.rows()));
        for (Eigen::Index j = 0; j < z.rows(); ++j) {
            Vector k = k_star.col(j);
            double mean = k.dot(resid);
            // triangular solves against the stored factor
            Vector y = chol_lower.triangularView<Eigen::Lower>().solve(k);
            double var = params.signal_variance - y.squaredNorm();
            var = std::max(var, 0.0);
            out[size_t(j)] = {mean, var, probit_predictive(mean, var)};
        }
        return out;
    }
};

namespace detail {

inline FittedGP fit_gp_at(const Matrix& z, const Vector& t, const FeatureScaler& scaler,
                          const KernelParams& p) {
    Matrix k_a = gram(z, p);
    k_a.diagonal().array() += p.latent_noise;
    FittedGP m;
    m.params = p;
    m.scaler = scaler;
    m.x = z;
    m.t = t;
    m.state = laplace_mode(k_a, t);
    m.evidence = laplace_log_marginal(m.state, k_a, t);

    Matrix h = k_a;
    h.diagonal() += m.state.w_diag.cwiseInverse();
    Eigen::LLT<Matrix> llt(h);
    require(llt.info() == Eigen::Success, ErrorKind::numeric,
            "fit_gp: (W^-1 + K_a) factorization failed");
    m.chol_lower = llt.matrixL();
    return m;
}

// median pairwise distance of standardized rows (0 fallback -> 1)
inline double median_heuristic(const Matrix& z) {
    std::vector<double> d;
    const Eigen::Index m = z.rows();
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) d.push_back((z.row(i) - z.row(j)).norm());
    if (d.empty()) return 1.0;
    std::nth_element(d.begin(), d.begin() + std::ptrdiff_t(d.size() / 2), d.end());
    double med = d[d.size() / 2];
    return med > 1e-9 ? med : 1.0;
}

}  // namespace detail

// Fit on raw features. With fit_kernel, lengthscale and signal variance are
// chosen by evidence over a grid seeded at the median distance heuristic,
// then sharpened by two rounds of coordinate refinement.
inline FittedGP fit_gp(const Matrix& raw_features, const Vector& t, const KernelParams& base,
                       bool fit_kernel) {
    base.validate();
    require(raw_features.rows() == t.size() && raw_features.rows() >= 1, ErrorKind::usage,
            "fit_gp: features/targets mismatch");
    FeatureScaler scaler = FeatureScaler::fit(raw_features);
    Matrix z = scaler.apply(raw_features);

    if (!fit_kernel) return detail::fit_gp_at(z, t, scaler, base);

    const double med = detail::median_heuristic(z);
    KernelParams best = base;
    FittedGP best_model;
    bool have = false;
    auto consider = [&](double ls, double sv) {
        KernelParams p = base;
        p.lengthscale = ls;
        p.signal_variance = sv;
        try {
            FittedGP m = detail::fit_gp_at(z, t, scaler, p);
            if (!have || m.evidence > best_model.evidence) {
                best_model = std::move(m);
                best = p;
                have = true;
            }
        } catch (const Error&) {
            // grid point failed to converge; skip it
        }
    };

    for (double lf : {0.25, 0.5, 1.0, 2.0, 4.0})
        for (double sv : {0.5, 1.0, 2.0, 4.0, 8.0}) consider(med * lf, sv);
    require(have, ErrorKind::numeric, "fit_gp: no kernel grid point converged");
    for (int round = 0; round < 2; ++round) {
        double ls0 = best.lengthscale, sv0 = best.signal_variance;
        for (double lf : {0.7, 1.0, 1.4})
            for (double sf : {0.7, 1.0, 1.4})
                if (lf != 1.0 || sf != 1.0) consider(ls0 * lf, sv0 * sf);
    }
    return best_model;
}

// ---------------------------------------------------------------------------
// versioned binary fitted-model file
// ---------------------------------------------------------------------------

inline constexpr char kGpMagic[4] = {'C', 'S', 'G', 'P'};
inline constexpr uint32_t kGpVersion = 1;

inline void save_gp(const FittedGP& m, const std::string& path) {
    binio::Writer w(path);
    w.bytes(kGpMagic, 4);
    w.u32(kGpVersion);
    w.f64(m.params.lengthscale);
    w.f64(m.params.signal_variance);
    w.f64(m.params.prior_mean);
    w.f64(m.params.latent_noise);
    w.f64(m.params.observation_noise);
    w.f64(m.evidence);
    const auto rows = uint64_t(m.x.rows()), cols = uint64_t(m.x.cols());
    w.u64(rows);
    w.u64(cols);
    w.f64s(m.scaler.mean.data(), cols);
    w.f64s(m.scaler.std.data(), cols);
    w.f64s(m.x.data(), rows * cols);  // column-major
    w.f64s(m.t.data(), rows);
    w.f64s(m.state.mode.data(), rows);
    w.f64s(m.state.sigmoid_at_mode.data(), rows);
    w.f64s(m.state.w_diag.data(), rows);
    w.f64s(m.state.k_inv_mode.data(), rows);
    w.f64s(m.chol_lower.data(), rows * rows);
    w.finish();
}

inline FittedGP load_gp(const std::string& path) {
    binio::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    require(std::memcmp(magic, kGpMagic, 4) == 0, ErrorKind::io,
            path + ": not a fitted-GP file");
    uint32_t version = r.u32();
    require(version == kGpVersion, ErrorKind::io,
            path + ": unsupported fitted-GP version " + std::to_string(version) + " (expected " +
                std::to_string(kGpVersion) + ")");
    FittedGP m;
    m.params.lengthscale = r.f64();
    m.params.signal_variance = r.f64();
    m.params.prior_mean = r.f64();
    m.params.latent_noise = r.f64();
    m.params.observation_noise = r.f64();
    m.evidence = r.f64();
    uint64_t rows = r.u64(), cols = r.u64();
    require(rows > 0 && rows < (1u << 24) && cols > 0 && cols < (1u << 20), ErrorKind::io,
            path + ": corrupt fitted-GP header");
    m.scaler.mean.resize(Eigen::Index(cols));
    m.scaler.std.resize(Eigen::Index(cols));
    r.f64s(m.scaler.mean.data(), cols);
    r.f64s(m.scaler.std.data(), cols);
    m.x.resize(Eigen::Index(rows), Eigen::Index(cols));
    r.f64s(m.x.data(), rows * cols);
    m.t.resize(Eigen::Index(rows));
    r.f64s(m.t.data(), rows);
    m.state.mode.resize(Eigen::Index(rows));
    r.f64s(m.state.mode.data(), rows);
    m.state.sigmoid_at_mode.resize(Eigen::Index(rows));
    r.f64s(m.state.sigmoid_at_mode.data(), rows);
    m.state.w_diag.resize(Eigen::Index(rows));
    r.f64s(m.state.w_diag.data(), rows);
    m.state.k_inv_mode.resize(Eigen::Index(rows));
    r.f64s(m.state.k_inv_mode.data(), rows);
    m.chol_lower.resize(Eigen::Index(rows), Eigen::Index(rows));
    r.f64s(m.chol_lower.data(), rows * rows);
    m.state.converged = true;
    m.state.final_residual = 0.0;
    return m;
}

}  // namespace coalsort::gp

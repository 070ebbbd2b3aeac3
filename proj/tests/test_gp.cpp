#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "coalsort/gp/model.hpp"
#include "coalsort/gp/regression.hpp"

using namespace coalsort;
using gp::Matrix;
using gp::Vector;

namespace {

// two gaussian blobs at +/- center, class 1 first
gp::LabeledFeatures blobs(int per_class, int dim, double center, uint64_t seed) {
    Rng rng(seed);
    gp::LabeledFeatures d;
    d.x.resize(2 * per_class, dim);
    d.t.resize(2 * per_class);
    for (int i = 0; i < 2 * per_class; ++i) {
        double c = i < per_class ? center : -center;
        for (int j = 0; j < dim; ++j) d.x(i, j) = c + 0.3 * rng.normal();
        d.t(i) = i < per_class ? 1.0 : 0.0;
    }
    return d;
}

}  // namespace

TEST_CASE("kernel params validate their ranges") {
    gp::KernelParams p;
    CHECK_NOTHROW(p.validate());
    p.lengthscale = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.signal_variance = -1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.latent_noise = -0.1;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("rbf kernel matches its closed form") {
    gp::KernelParams p;
    p.lengthscale = 2.0;
    p.signal_variance = 3.0;
    Vector a(2), b(2);
    a << 1.0, 2.0;
    b << 4.0, 6.0;  // squared distance 25
    CHECK(gp::rbf_kernel(a, a, p) == 3.0);
    CHECK(gp::rbf_kernel(a, b, p) == Catch::Approx(3.0 * std::exp(-25.0 / 8.0)).epsilon(1e-15));
    Vector c(3);
    CHECK_THROWS_AS(gp::rbf_kernel(a, c, p), Error);
}

TEST_CASE("self gram is exactly symmetric with the signal variance on the diagonal") {
    Rng rng(11);
    Matrix x(7, 3);
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
    gp::KernelParams p;
    p.signal_variance = 2.5;
    Matrix k = gp::gram(x, p);
    for (int i = 0; i < 7; ++i) {
        CHECK(k(i, i) == 2.5);
        for (int j = 0; j < 7; ++j) {
            CHECK(k(i, j) == k(j, i));  // bitwise, mirrored construction
            CHECK(k(i, j) == Catch::Approx(gp::rbf_kernel(x.row(i), x.row(j), p)).epsilon(1e-14));
        }
    }
    Matrix cross = gp::gram(x.topRows(3), x.bottomRows(4), p);
    CHECK(cross.rows() == 3);
    CHECK(cross.cols() == 4);
    CHECK(cross(1, 2) ==
          Catch::Approx(gp::rbf_kernel(x.row(1), x.row(5), p)).epsilon(1e-14));
}

TEST_CASE("jittered cholesky escalates and eventually gives up") {
    Matrix id = Matrix::Identity(3, 3);
    double used = -1.0;
    CHECK_NOTHROW(gp::cholesky_with_jitter(id, 1.0, &used));
    CHECK(used == Catch::Approx(1e-10).epsilon(1e-12));

    // rank-deficient: needs some jitter but succeeds
    Matrix ones = Matrix::Ones(4, 4);
    CHECK_NOTHROW(gp::cholesky_with_jitter(ones, 1.0));

    Matrix indef = Matrix::Identity(2, 2);
    indef(1, 1) = -1.0;
    CHECK_THROWS_AS(gp::cholesky_with_jitter(indef, 1.0), Error);
}

TEST_CASE("sigmoid and log1p_exp are stable at extreme arguments") {
    CHECK(gp::sigmoid(0.0) == 0.5);
    CHECK(gp::sigmoid(800.0) == 1.0);
    CHECK(gp::sigmoid(-800.0) == 0.0);
    for (double x : {-30.0, -3.0, -0.2, 0.7, 5.0, 25.0})
        CHECK(gp::sigmoid(-x) == Catch::Approx(1.0 - gp::sigmoid(x)).margin(1e-15));
    CHECK(gp::log1p_exp(0.0) == Catch::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(gp::log1p_exp(800.0) == Catch::Approx(800.0).epsilon(1e-15));
    CHECK(gp::log1p_exp(-800.0) == 0.0);
    CHECK(std::isfinite(gp::log1p_exp(700.0)));
}

TEST_CASE("noiseless regression interpolates its training targets") {
    Rng rng(21);
    Matrix x(6, 1);
    Vector y(6);
    for (int i = 0; i < 6; ++i) {
        x(i, 0) = i * 0.7;
        y(i) = std::sin(x(i, 0)) + 0.1 * rng.normal();
    }
    gp::KernelParams p;
    p.observation_noise = 0.0;
    auto post = gp::gp_regression_posterior(x, y, x, p);
    for (int i = 0; i < 6; ++i) {
        CHECK(post.mean(i) == Catch::Approx(y(i)).margin(1e-6));
        CHECK(post.cov(i, i) >= -1e-9);
        CHECK(post.cov(i, i) <= 1e-6);
    }
}

TEST_CASE("regression with no training points returns the prior") {
    gp::KernelParams p;
    p.prior_mean = 1.5;
    Matrix none(0, 2);
    Vector ynone(0);
    Matrix xs(3, 2);
    xs << 0, 0, 1, 0, 0, 2;
    auto post = gp::gp_regression_posterior(none, ynone, xs, p);
    for (int i = 0; i < 3; ++i) CHECK(post.mean(i) == 1.5);
    Matrix prior = gp::gram(xs, p);
    CHECK((post.cov - prior).norm() == 0.0);

    Matrix bad(2, 2);
    Vector ybad(3);
    CHECK_THROWS_AS(gp::gp_regression_posterior(bad, ybad, xs, p), Error);
}

TEST_CASE("single-point regression matches the rank-one closed form") {
    gp::KernelParams p;
    Matrix x0(1, 1);
    x0 << 0.0;
    Vector y0(1);
    y0 << 2.0;
    Matrix xs(1, 1);
    xs << 1.0;
    auto post = gp::gp_regression_posterior(x0, y0, xs, p);
    double k = std::exp(-0.5);  // unit lengthscale and variance
    CHECK(post.mean(0) == Catch::Approx(k * 2.0).margin(1e-6));
    CHECK(post.cov(0, 0) == Catch::Approx(1.0 - k * k).margin(1e-6));
}

TEST_CASE("scalar laplace mode solves a = 1 - sigmoid(a)") {
    Matrix k(1, 1);
    k << 1.0;
    Vector t(1);
    t << 1.0;
    auto st = gp::laplace_mode(k, t);
    CHECK(st.converged);
    CHECK(st.mode(0) == Catch::Approx(0.4012).margin(1e-3));
    // the fixed point itself, to solver accuracy
    CHECK(st.mode(0) + gp::sigmoid(st.mode(0)) == Catch::Approx(1.0).margin(1e-7));
    CHECK(st.sigmoid_at_mode(0) == gp::sigmoid(st.mode(0)));
    CHECK(st.w_diag(0) ==
          Catch::Approx(st.sigmoid_at_mode(0) * (1.0 - st.sigmoid_at_mode(0))).margin(1e-15));
}

TEST_CASE("laplace mode validates inputs") {
    Matrix k = Matrix::Identity(2, 2);
    Vector t(2);
    t << 0.0, 0.5;
    CHECK_THROWS_AS(gp::laplace_mode(k, t), Error);
    Vector t3 = Vector::Zero(3);
    CHECK_THROWS_AS(gp::laplace_mode(k, t3), Error);
    Vector ok(2);
    ok << 0.0, 1.0;
    CHECK_THROWS_AS(gp::laplace_mode(k, ok, -1.0), Error);
    CHECK_THROWS_AS(gp::laplace_mode(k, ok, 1e-8, 0), Error);
}

TEST_CASE("laplace state is internally consistent on a random problem") {
    auto d = blobs(8, 2, 1.0, 31);
    gp::KernelParams p;
    Matrix k_a = gp::gram(d.x, p);
    k_a.diagonal().array() += p.latent_noise;
    auto st = gp::laplace_mode(k_a, d.t);
    REQUIRE(st.converged);

    // mode and co-iterate stay coupled through a = K_a u
    CHECK((st.mode - k_a * st.k_inv_mode).lpNorm<Eigen::Infinity>() <= 1e-10);
    // reported residual matches its definition
    Vector s(st.mode.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = gp::sigmoid(st.mode(i));
    double resid = (st.mode - k_a * (d.t - s)).lpNorm<Eigen::Infinity>();
    CHECK(st.final_residual == Catch::Approx(resid).margin(1e-12));
    CHECK(st.final_residual <= 1e-7);

    // accepted objective values never decrease
    for (size_t i = 1; i < st.objective_trace.size(); ++i)
        CHECK(st.objective_trace[i] >= st.objective_trace[i - 1]);
}

TEST_CASE("swapping all labels flips the sign of the mode") {
    auto d = blobs(6, 2, 1.2, 77);
    gp::KernelParams p;
    Matrix k_a = gp::gram(d.x, p);
    k_a.diagonal().array() += p.latent_noise;
    auto st_pos = gp::laplace_mode(k_a, d.t);
    Vector flipped = Vector::Ones(d.t.size()) - d.t;
    auto st_neg = gp::laplace_mode(k_a, flipped);
    CHECK((st_pos.mode + st_neg.mode).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("laplace prediction at zero cross-covariance returns the prior") {
    auto d = blobs(5, 2, 1.0, 5);
    gp::KernelParams p;
    p.signal_variance = 2.0;
    Matrix k_a = gp::gram(d.x, p);
    k_a.diagonal().array() += p.latent_noise;
    auto st = gp::laplace_mode(k_a, d.t);
    Matrix k_star = Matrix::Zero(d.x.rows(), 2);
    Vector k_diag = Vector::Constant(2, p.signal_variance);
    auto preds = gp::laplace_predict(st, k_a, k_star, k_diag, d.t);
    REQUIRE(preds.size() == 2);
    for (const auto& pr : preds) {
        CHECK(pr.latent_mean == 0.0);
        CHECK(pr.latent_variance == Catch::Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("laplace prediction refuses unconverged states and bad shapes") {
    gp::LaplaceState st;  // converged = false
    Matrix k = Matrix::Identity(2, 2);
    Vector t(2);
    t << 0, 1;
    CHECK_THROWS_AS(gp::laplace_predict(st, k, k, t, t), Error);
    CHECK_THROWS_AS(gp::laplace_log_marginal(st, k, t), Error);
}

TEST_CASE("probit predictive squashes toward one half as variance grows") {
    CHECK(gp::probit_predictive(0.7, 0.0) == Catch::Approx(gp::sigmoid(0.7)).epsilon(1e-15));
    CHECK_THROWS_AS(gp::probit_predictive(0.0, -1.0), Error);
    for (double mu : {-3.0, -0.5, 0.5, 3.0}) {
        double tight = gp::probit_predictive(mu, 0.0);
        double loose = gp::probit_predictive(mu, 25.0);
        CHECK(std::abs(loose - 0.5) < std::abs(tight - 0.5));
        CHECK((mu > 0) == (loose > 0.5));
    }
    CHECK(gp::probit_predictive(-5000.0, 0.0) >= 1e-300);
    CHECK(gp::probit_predictive(5000.0, 0.0) < 1.0);
    CHECK(gp::probit_predictive(0.0, 4.0) == 0.5);
}

TEST_CASE("scalar evidence matches the documented formula") {
    Matrix k(1, 1);
    k << 1.3;
    Vector t(1);
    t << 1.0;
    auto st = gp::laplace_mode(k, t);
    double a = st.mode(0), u = st.k_inv_mode(0), w = st.w_diag(0);
    double want = a - std::log1p(std::exp(a)) - 0.5 * a * u - 0.5 * std::log1p(w * 1.3);
    CHECK(gp::laplace_log_marginal(st, k, t) == Catch::Approx(want).margin(1e-12));
}

TEST_CASE("gp_classify separates two blobs and respects label symmetry") {
    auto d = blobs(10, 2, 2.0, 123);
    Rng rng(9);
    Matrix xs(6, 2);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) xs(i, j) = (i < 3 ? 2.0 : -2.0) + 0.3 * rng.normal();
    auto preds = gp::gp_classify(d, xs, gp::KernelParams{});
    REQUIRE(preds.size() == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(preds[size_t(i)].latent_variance >= 0.0);
        CHECK((i < 3) == (preds[size_t(i)].class_probability > 0.5));
    }
    gp::LabeledFeatures swapped = d;
    swapped.t = Vector::Ones(d.t.size()) - d.t;
    auto preds_sw = gp::gp_classify(swapped, xs, gp::KernelParams{});
    for (int i = 0; i < 6; ++i)
        CHECK(preds_sw[size_t(i)].class_probability ==
              Catch::Approx(1.0 - preds[size_t(i)].class_probability).margin(1e-6));
}

TEST_CASE("feature scaler z-scores live columns and centers constant ones") {
    Matrix x(4, 2);
    x << 1.0, 5.0,
         3.0, 5.0,
         5.0, 5.0,
         7.0, 5.0;
    auto sc = gp::FeatureScaler::fit(x);
    CHECK(sc.mean(0) == 4.0);
    CHECK(sc.mean(1) == 5.0);
    CHECK(sc.std(1) == 1.0);  // degenerate column falls back
    Matrix z = sc.apply(x);
    CHECK(z.col(0).mean() == Catch::Approx(0.0).margin(1e-15));
    CHECK(z.col(0).squaredNorm() / 4.0 == Catch::Approx(1.0).margin(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(z(i, 1) == 0.0);
}

TEST_CASE("fitted gp round-trips through its binary file bitwise") {
    auto d = blobs(8, 3, 1.5, 2024);
    auto m = gp::fit_gp(d.x, d.t, gp::KernelParams{}, false);

    Rng rng(3);
    Matrix probe(5, 3);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) probe(i, j) = 1.5 * rng.normal();
    auto before = m.predict(probe);

    std::string path = "/tmp/coalsort_gp_test.bin";
    gp::save_gp(m, path);
    auto back = gp::load_gp(path);

    CHECK(back.params.lengthscale == m.params.lengthscale);
    CHECK(back.params.latent_noise == m.params.latent_noise);
    CHECK(back.evidence == m.evidence);
    CHECK((back.x - m.x).norm() == 0.0);
    CHECK((back.chol_lower - m.chol_lower).norm() == 0.0);
    auto after = back.predict(probe);
    REQUIRE(after.size() == before.size());
    for (size_t i = 0; i < before.size(); ++i) {
        CHECK(after[i].latent_mean == before[i].latent_mean);
        CHECK(after[i].latent_variance == before[i].latent_variance);
        CHECK(after[i].class_probability == before[i].class_probability);
    }
    std::remove(path.c_str());
}

TEST_CASE("fitted gp files reject corruption") {
    auto d = blobs(4, 2, 1.5, 8);
    auto m = gp::fit_gp(d.x, d.t, gp::KernelParams{}, false);
    std::string path = "/tmp/coalsort_gp_corrupt.bin";
    gp::save_gp(m, path);

    auto patch = [&](size_t offset, uint8_t value) {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(std::streamoff(offset));
        char c = char(value);
        f.write(&c, 1);
    };

    patch(0, 'X');  // magic
    try {
        gp::load_gp(path);
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }

    gp::save_gp(m, path);
    patch(4, 99);  // version field
    try {
        gp::load_gp(path);
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }

    gp::save_gp(m, path);
    std::error_code ec;
    std::filesystem::resize_file(path, 64, ec);
    REQUIRE(!ec);
    CHECK_THROWS_AS(gp::load_gp(path), Error);
    std::remove(path.c_str());
}

TEST_CASE("evidence-fitted kernel classifies held-out blob points") {
    auto d = blobs(12, 2, 2.0, 555);
    auto m = gp::fit_gp(d.x, d.t, gp::KernelParams{}, true);
    CHECK(m.params.lengthscale > 0.0);
    CHECK(m.params.signal_variance > 0.0);
    CHECK(std::isfinite(m.evidence));

    auto held = blobs(6, 2, 2.0, 556);
    auto preds = m.predict(held.x);
    int correct = 0;
    for (int i = 0; i < held.x.rows(); ++i)
        if ((preds[size_t(i)].class_probability > 0.5) == (held.t(i) == 1.0)) ++correct;
    CHECK(correct >= 11);  // 12 held-out points

    Matrix wrong(1, 5);
    CHECK_THROWS_AS(m.predict(wrong), Error);
    Vector tbad(3);
    CHECK_THROWS_AS(gp::fit_gp(d.x, tbad, gp::KernelParams{}, false), Error);
}

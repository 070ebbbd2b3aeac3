#pragma once

#include <iostream>
#include <map>
#include <numbers>
#include <optional>

#include "coalsort/features/extract.hpp"
#include "coalsort/gp/model.hpp"
#include "coalsort/nn/adam.hpp"
#include "coalsort/nn/checkpoint.hpp"
#include "coalsort/nn/network.hpp"
#include "coalsort/pipeline/dataset.hpp"
#include "coalsort/pipeline/report.hpp"

namespace coalsort::pipe {

using gp::Matrix;
using gp::Vector;

struct TrainConfig {
    int epochs = 50;
    int batch_size = 128;
    double learning_rate = 0.001;
    double weight_decay = 0.001;
    uint64_t seed = 1;
    double train_ratio = 0.8;  // untagged-sample split; tagged samples keep their tag
    int refit_gp_every = 1;    // epochs between evaluation-GP refits
    int threads = 1;
    nn::NetworkConfig network;
    gp::KernelParams gp;

    void validate() const {
        require(epochs >= 0, ErrorKind::usage, "train: epochs must be >= 0");
        require(batch_size >= 1, ErrorKind::usage, "train: batch_size must be >= 1");
        require(learning_rate >= 0.0, ErrorKind::usage, "train: learning_rate must be >= 0");
        require(weight_decay >= 0.0, ErrorKind::usage, "train: weight_decay must be >= 0");
        require(train_ratio > 0.0 && train_ratio < 1.0, ErrorKind::usage,
                "train: train_ratio must lie in (0,1)");
        require(refit_gp_every >= 1, ErrorKind::usage, "train: refit_gp_every must be >= 1");
        require(threads >= 1, ErrorKind::usage, "train: threads must be >= 1");
        network.validate();
        gp.validate();
    }

    std::map<std::string, std::string> digest_fields() const {
        std::map<std::string, std::string> kv;
        kv["train.epochs"] = std::to_string(epochs);
        kv["train.batch_size"] = std::to_string(batch_size);
        kv["train.learning_rate"] = format_g17(learning_rate);
        kv["train.weight_decay"] = format_g17(weight_decay);
        kv["train.seed"] = std::to_string(seed);
        kv["train.train_ratio"] = format_g17(train_ratio);
        kv["train.refit_gp_every"] = std::to_string(refit_gp_every);
        kv["network.input_size"] = std::to_string(network.input_size);
        kv["network.stem_channels"] = std::to_string(network.stem_channels);
        kv["network.growth_rate"] = std::to_string(network.growth_rate);
        std::string blocks;
        for (size_t i = 0; i < network.block_sizes.size(); ++i)
            blocks += (i ? "," : "") + std::to_string(network.block_sizes[i]);
        kv["network.block_sizes"] = blocks;
        kv["network.compression"] = format_g17(network.compression);
        kv["network.use_batchnorm"] = network.use_batchnorm ? "1" : "0";
        kv["network.feature_dim"] = std::to_string(network.feature_dim);
        kv["gp.lengthscale"] = format_g17(gp.lengthscale);
        kv["gp.signal_variance"] = format_g17(gp.signal_variance);
        kv["gp.prior_mean"] = format_g17(gp.prior_mean);
        kv["gp.latent_noise"] = format_g17(gp.latent_noise);
        kv["gp.observation_noise"] = format_g17(gp.observation_noise);
        return kv;
    }
};

// p >= 0.5 counts as class 1 (documented tie rule).
inline int classify_probability(double p) { return p >= 0.5 ? 1 : 0; }

// Cosine decay from the base rate toward zero across the epoch budget. Late
// steps shrink so the run settles instead of oscillating between feature
// states; epoch 1 always runs at the base rate.
inline double cosine_lr(double base, int epoch, int total_epochs) {
    if (total_epochs <= 1) return base;
    double t = double(epoch - 1) / double(total_epochs);
    return base * 0.5 * (1.0 + std::cos(t * std::numbers::pi));
}

inline double accuracy(const std::vector<double>& probs, const std::vector<int>& labels) {
    require(!labels.empty() && probs.size() == labels.size(), ErrorKind::usage,
            "accuracy: empty or mismatched inputs");
    size_t hit = 0;
    for (size_t i = 0; i < probs.size(); ++i)
        if (classify_probability(probs[i]) == labels[i]) ++hit;
    return double(hit) / double(labels.size());
}

inline std::vector<double> gp_probabilities(const gp::FittedGP& model,
                                            const Eigen::MatrixXd& features) {
    auto preds = model.predict(features);
    std::vector<double> probs(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) probs[i] = preds[i].class_probability;
    return probs;
}

// Forward already-normalized inputs through the network in eval mode,
// chunked to bound tape memory. Chunking cannot change results: eval mode is
// per-sample.
inline Eigen::MatrixXd forward_features(const nn::Network& net, nn::NetworkParams& params,
                                        const std::vector<const img::ImageTensor*>& inputs,
                                        int chunk = 64) {
    Eigen::MatrixXd out(inputs.size(), net.feature_dim);
    nn::ActivationTape tape;
    for (size_t start = 0; start < inputs.size(); start += size_t(chunk)) {
        size_t stop = std::min(inputs.size(), start + size_t(chunk));
        std::vector<const img::ImageTensor*> part(inputs.begin() + std::ptrdiff_t(start),
                                                  inputs.begin() + std::ptrdiff_t(stop));
        nn::Tensor batch = to_batch(part);
        out.middleRows(Eigen::Index(start), Eigen::Index(stop - start)) =
            network_forward(net, params, batch, {false, false}, tape);
    }
    return out;
}

struct JointModel {
    nn::Network net;
    nn::NetworkParams params;
    gp::FittedGP gp;
};

struct TrainOutput {
    JointModel model;
    nn::AdamState adam;
    Metrics metrics;
};

namespace detail {

struct PreparedData {
    std::vector<int> train_idx, test_idx;
    std::vector<int> train_labels, test_labels;
    Vector t_train;
    std::vector<img::ImageTensor> train_crops;            // raw [0,1] crops
    std::vector<img::ImageTensor> train_eval, test_eval;  // normalized, deterministic
};

inline PreparedData prepare(const Dataset& ds, const SplitIndices& split, int input_size,
                            int threads) {
    PreparedData d;
    d.train_idx = split.train;
    d.test_idx = split.test;
    for (int i : d.train_idx) d.train_labels.push_back(ds.samples[size_t(i)].label);
    for (int i : d.test_idx) d.test_labels.push_back(ds.samples[size_t(i)].label);
    d.t_train.resize(Eigen::Index(d.train_idx.size()));
    for (size_t k = 0; k < d.train_idx.size(); ++k)
        d.t_train(Eigen::Index(k)) = d.train_labels[k];

    d.train_crops.resize(d.train_idx.size());
    d.train_eval.resize(d.train_idx.size());
    parallel_for(d.train_idx.size(), unsigned(threads), [&](size_t k) {
        const auto& im = ds.samples[size_t(d.train_idx[k])].image;
        d.train_crops[k] = raw_crop(im, input_size);
        d.train_eval[k] = img::normalize(d.train_crops[k], img::imagenet_stats());
    });
    d.test_eval.resize(d.test_idx.size());
    parallel_for(d.test_idx.size(), unsigned(threads), [&](size_t k) {
        d.test_eval[k] = eval_input(ds.samples[size_t(d.test_idx[k])].image, input_size);
    });
    return d;
}

inline std::vector<const img::ImageTensor*> pointers(const std::vector<img::ImageTensor>& v) {
    std::vector<const img::ImageTensor*> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = &v[i];
    return out;
}

// dL/dK for L = -evidence/m with the mode held constant:
//   dL/dK = (S - r r^T) / (2m),  S = sqrt(W) B^{-1} sqrt(W),  r = t - sigma(mode)
inline Eigen::MatrixXd evidence_kernel_gradient(const gp::LaplaceState& st, const Matrix& k_a,
                                                const Vector& t) {
    const Eigen::Index m = k_a.rows();
    Vector r = t - st.sigmoid_at_mode;
    Vector sqrt_w = st.w_diag.cwiseSqrt();
    Matrix b_mat = Matrix::Identity(m, m) + sqrt_w.asDiagonal() * k_a * sqrt_w.asDiagonal();
    Eigen::LLT<Matrix> llt(b_mat);
    require(llt.info() == Eigen::Success, ErrorKind::numeric,
            "evidence gradient: factorization failed");
    Matrix s = sqrt_w.asDiagonal() * llt.solve(Matrix(sqrt_w.asDiagonal()));
    return (s - r * r.transpose()) / (2.0 * double(m));
}

// Chain dL/dK through the RBF kernel to the feature rows:
//   dL/dx_i = sum_j 2 G_ij K_ij (x_j - x_i) / l^2
inline Eigen::MatrixXd kernel_feature_gradient(const Eigen::MatrixXd& g, const Matrix& k,
                                               const Eigen::MatrixXd& features,
                                               double lengthscale) {
    Eigen::MatrixXd w2 = (2.0 / (lengthscale * lengthscale)) * g.cwiseProduct(k);
    Eigen::VectorXd rowsum = w2.rowwise().sum();
    return w2 * features - rowsum.asDiagonal() * features;
}

}  // namespace detail

// Joint training per the stop-gradient scheme: each batch fits the Laplace
// mode on its own kernel, the loss is the per-sample negative evidence, and
// the backward pass treats the converged mode as a constant. Batches whose
// mode search fails are skipped and counted. The evaluation GP is refitted on
// full-training-set features every refit_gp_every epochs (kernel fixed), and
// once more after the last epoch with the kernel grid search; that final fit
// is the saved model.
//
// feature_override, when set, must have one row per dataset sample; it
// replaces the CNN both in batch fits and evaluation (the network is left at
// its initialization). It exists so tests can drive the GP/loop machinery
// with constructed features.
inline TrainOutput train_densenet_gp(const Dataset& ds, const SplitIndices& split,
                                     const TrainConfig& cfg,
                                     const Eigen::MatrixXd* feature_override = nullptr) {
    cfg.validate();
    if (feature_override)
        require(feature_override->rows() == Eigen::Index(ds.samples.size()), ErrorKind::usage,
                "train: feature override must cover every sample");

    TrainOutput out;
    out.model.net = nn::build_network(cfg.network);
    out.model.params = nn::init_params(out.model.net, cfg.seed);
    out.adam = nn::AdamState(out.model.net.param_count);
    nn::AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    adam_cfg.weight_decay = cfg.weight_decay;

    detail::PreparedData data = detail::prepare(ds, split, cfg.network.input_size, cfg.threads);
    const int train_n = int(data.train_idx.size());
    int batch = cfg.batch_size;
    if (batch > train_n) {
        std::cerr << "warning: batch size " << batch << " clamped to training-set size "
                  << train_n << "\n";
        batch = train_n;
    }

    auto override_rows = [&](const std::vector<int>& global_idx) {
        Eigen::MatrixXd f(global_idx.size(), feature_override->cols());
        for (size_t k = 0; k < global_idx.size(); ++k)
            f.row(Eigen::Index(k)) = feature_override->row(global_idx[k]);
        return f;
    };
    auto train_features_now = [&]() {
        return feature_override ? override_rows(data.train_idx)
                                : forward_features(out.model.net, out.model.params,
                                                   detail::pointers(data.train_eval));
    };
    auto test_features_now = [&]() {
        return feature_override ? override_rows(data.test_idx)
                                : forward_features(out.model.net, out.model.params,
                                                   detail::pointers(data.test_eval));
    };

    Metrics& metrics = out.metrics;
    metrics.model = "densenet-gp";
    metrics.seed = cfg.seed;
    metrics.config_digest = config_digest(cfg.digest_fields());

    std::optional<gp::FittedGP> eval_gp;
    double last_train_acc = 0.0, last_test_acc = 0.0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        adam_cfg.learning_rate = cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
        std::vector<int> order(static_cast<size_t>(train_n));
        for (int k = 0; k < train_n; ++k) order[size_t(k)] = k;
        Rng shuffle_rng(derive_seed(cfg.seed, stream_tag("shuffle"), uint64_t(epoch)));
        shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        int loss_count = 0;
        for (int start = 0; start < train_n; start += batch) {
            int stop = std::min(train_n, start + batch);
            int bs = stop - start;
            std::vector<int> local(order.begin() + start, order.begin() + stop);

            Eigen::MatrixXd features;
            nn::ActivationTape tape;
            if (feature_override) {
                std::vector<int> global;
                for (int k : local) global.push_back(data.train_idx[size_t(k)]);
                features = override_rows(global);
            } else {
                std::vector<img::ImageTensor> aug(static_cast<size_t>(bs));
                parallel_for(size_t(bs), unsigned(cfg.threads), [&](size_t j) {
                    int k = local[j];
                    Rng rng(derive_seed(cfg.seed, stream_tag("flip"), uint64_t(epoch),
                                        uint64_t(data.train_idx[size_t(k)])));
                    aug[j] = train_input_from_crop(data.train_crops[size_t(k)], rng);
                });
                nn::Tensor input = to_batch(detail::pointers(aug));
                features =
                    network_forward(out.model.net, out.model.params, input, {true, true}, tape);
            }

            Vector t_b(bs);
            for (int j = 0; j < bs; ++j) t_b(j) = data.t_train(local[size_t(j)]);

            // Standardize per batch so the kernel sees the same geometry the
            // evaluation fit does, and so inflating feature norms cannot buy
            // evidence for free. Like the Laplace mode, the scaler is treated
            // as a constant in the backward pass.
            gp::FeatureScaler scaler = gp::FeatureScaler::fit(features);
            Eigen::MatrixXd z = scaler.apply(features);
            Matrix k = gp::gram(z, cfg.gp);
            Matrix k_a = k;
            k_a.diagonal().array() += cfg.gp.latent_noise;
            gp::LaplaceState st;
            try {
                st = gp::laplace_mode(k_a, t_b);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::numeric) throw;
                ++metrics.skipped_batches;
                std::cerr << "warning: epoch " << epoch << ": batch skipped (" << e.what()
                          << ")\n";
                continue;
            }
            double evidence = gp::laplace_log_marginal(st, k_a, t_b);
            loss_sum += -evidence;
            loss_count += bs;

            Eigen::MatrixXd g = detail::evidence_kernel_gradient(st, k_a, t_b);
            Eigen::MatrixXd d_features =
                detail::kernel_feature_gradient(g, k, z, cfg.gp.lengthscale);
            d_features.array().rowwise() /= scaler.std.transpose().array();
            if (!feature_override) {
                std::vector<double> grads =
                    network_backward(out.model.net, out.model.params, tape, d_features);
                nn::adam_step(out.model.params.values, grads, out.adam, adam_cfg);
            }
        }
        double epoch_loss = loss_count > 0 ? loss_sum / double(loss_count) : 0.0;

        if (!eval_gp || epoch % cfg.refit_gp_every == 0 || epoch == cfg.epochs) {
            eval_gp = gp::fit_gp(train_features_now(), data.t_train, cfg.gp, true);
            last_train_acc =
                accuracy(gp_probabilities(*eval_gp, train_features_now()), data.train_labels);
            last_test_acc =
                accuracy(gp_probabilities(*eval_gp, test_features_now()), data.test_labels);
        }
        metrics.epochs.push_back({epoch, epoch_loss, last_train_acc, last_test_acc});
    }

    // Final refit on the full training set with the kernel grid: this fit is
    // the model that gets saved and evaluated.
    Eigen::MatrixXd train_f = train_features_now();
    out.model.gp = gp::fit_gp(train_f, data.t_train, cfg.gp, true);
    metrics.train_accuracy = accuracy(gp_probabilities(out.model.gp, train_f), data.train_labels);
    metrics.test_accuracy =
        accuracy(gp_probabilities(out.model.gp, test_features_now()), data.test_labels);
    return out;
}

// ---------------------------------------------------------------------------
// classical-feature baseline: extract once, fit the GP, report
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd classical_features(const Dataset& ds, const std::vector<int>& idx,
                                          feat::Method method, int input_size, int threads) {
    require(!idx.empty(), ErrorKind::usage, "classical_features: empty index set");
    std::vector<std::vector<double>> rows(idx.size());
    parallel_for(idx.size(), unsigned(threads), [&](size_t k) {
        img::ImageTensor crop = raw_crop(ds.samples[size_t(idx[k])].image, input_size);
        rows[k] = feat::extract(crop, method).values;
    });
    Eigen::MatrixXd f(idx.size(), rows[0].size());
    for (size_t k = 0; k < rows.size(); ++k)
        for (size_t j = 0; j < rows[k].size(); ++j)
            f(Eigen::Index(k), Eigen::Index(j)) = rows[k][j];
    return f;
}

struct FeatureGpOutput {
    gp::FittedGP gp;
    Metrics metrics;
};

inline FeatureGpOutput train_feature_gp(const Dataset& ds, const SplitIndices& split,
                                        feat::Method method, const TrainConfig& cfg) {
    cfg.validate();
    FeatureGpOutput out;
    std::vector<int> train_labels, test_labels;
    for (int i : split.train) train_labels.push_back(ds.samples[size_t(i)].label);
    for (int i : split.test) test_labels.push_back(ds.samples[size_t(i)].label);
    Vector t(split.train.size());
    for (size_t k = 0; k < split.train.size(); ++k) t(Eigen::Index(k)) = train_labels[k];

    Eigen::MatrixXd train_f =
        classical_features(ds, split.train, method, cfg.network.input_size, cfg.threads);
    Eigen::MatrixXd test_f =
        classical_features(ds, split.test, method, cfg.network.input_size, cfg.threads);

    out.gp = gp::fit_gp(train_f, t, cfg.gp, true);
    out.metrics.model = std::string(feat::method_name(method)) + "-gp";
    out.metrics.seed = cfg.seed;
    auto kv = cfg.digest_fields();
    kv["feature.method"] = feat::method_name(method);
    out.metrics.config_digest = config_digest(kv);
    out.metrics.train_accuracy = accuracy(gp_probabilities(out.gp, train_f), train_labels);
    out.metrics.test_accuracy = accuracy(gp_probabilities(out.gp, test_f), test_labels);
    return out;
}

// ---------------------------------------------------------------------------
// softmax-head control: same backbone, a linear 2-way head with cross-entropy
// instead of the GP. Reported alongside the joint model, never gated.
// ---------------------------------------------------------------------------

struct SoftmaxModel {
    nn::Network net;
    nn::NetworkParams params;
    std::vector<double> head;  // 2 x feature_dim weights (row-major), then 2 biases
};

struct SoftmaxOutput {
    SoftmaxModel model;
    Metrics metrics;
};

namespace detail {

inline Eigen::MatrixXd head_logits(const SoftmaxModel& m, const Eigen::MatrixXd& f) {
    const Eigen::Index fd = f.cols();
    Eigen::Map<const nn::RowMat> w(m.head.data(), 2, fd);
    Eigen::MatrixXd logits = f * w.transpose();
    logits.col(0).array() += m.head[size_t(2 * fd)];
    logits.col(1).array() += m.head[size_t(2 * fd) + 1];
    return logits;
}

inline double softmax_probability_class1(double l0, double l1) {
    double mx = std::max(l0, l1);
    double e0 = std::exp(l0 - mx), e1 = std::exp(l1 - mx);
    return e1 / (e0 + e1);
}

}  // namespace detail

inline SoftmaxOutput train_densenet_softmax(const Dataset& ds, const SplitIndices& split,
                                            const TrainConfig& cfg) {
    cfg.validate();
    SoftmaxOutput out;
    out.model.net = nn::build_network(cfg.network);
    out.model.params = nn::init_params(out.model.net, cfg.seed);
    const int fdim = out.model.net.feature_dim;
    out.model.head.assign(size_t(2 * fdim) + 2, 0.0);

    nn::AdamState adam(out.model.net.param_count);
    nn::AdamState head_adam(out.model.head.size());
    nn::AdamConfig adam_cfg;
    adam_cfg.learning_rate = cfg.learning_rate;
    adam_cfg.weight_decay = cfg.weight_decay;

    detail::PreparedData data = detail::prepare(ds, split, cfg.network.input_size, cfg.threads);
    const int train_n = int(data.train_idx.size());
    int batch = std::min(cfg.batch_size, train_n);

    Metrics& metrics = out.metrics;
    metrics.model = "densenet-softmax";
    metrics.seed = cfg.seed;
    auto kv = cfg.digest_fields();
    kv["head"] = "softmax";
    metrics.config_digest = config_digest(kv);

    auto eval_accuracy = [&](const std::vector<img::ImageTensor>& inputs,
                             const std::vector<int>& labels) {
        Eigen::MatrixXd f =
            forward_features(out.model.net, out.model.params, detail::pointers(inputs));
        Eigen::MatrixXd logits = detail::head_logits(out.model, f);
        std::vector<double> probs(static_cast<size_t>(f.rows()));
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            probs[size_t(i)] = detail::softmax_probability_class1(logits(i, 0), logits(i, 1));
        return accuracy(probs, labels);
    };

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        adam_cfg.learning_rate = cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
        std::vector<int> order(static_cast<size_t>(train_n));
        for (int k = 0; k < train_n; ++k) order[size_t(k)] = k;
        Rng shuffle_rng(derive_seed(cfg.seed, stream_tag("shuffle"), uint64_t(epoch)));
        shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        int loss_count = 0;
        for (int start = 0; start < train_n; start += batch) {
            int stop = std::min(train_n, start + batch);
            int bs = stop - start;
            std::vector<int> local(order.begin() + start, order.begin() + stop);
            std::vector<img::ImageTensor> aug(static_cast<size_t>(bs));
            parallel_for(size_t(bs), unsigned(cfg.threads), [&](size_t j) {
                int k = local[j];
                Rng rng(derive_seed(cfg.seed, stream_tag("flip"), uint64_t(epoch),
                                    uint64_t(data.train_idx[size_t(k)])));
                aug[j] = train_input_from_crop(data.train_crops[size_t(k)], rng);
            });
            nn::Tensor input = to_batch(detail::pointers(aug));
            nn::ActivationTape tape;
            Eigen::MatrixXd f =
                network_forward(out.model.net, out.model.params, input, {true, true}, tape);
            Eigen::MatrixXd logits = detail::head_logits(out.model, f);

            // mean cross-entropy and its gradient
            Eigen::MatrixXd dlogits(bs, 2);
            double loss = 0.0;
            for (int j = 0; j < bs; ++j) {
                int y = data.train_labels[size_t(local[size_t(j)])];
                double mx = std::max(logits(j, 0), logits(j, 1));
                double e0 = std::exp(logits(j, 0) - mx), e1 = std::exp(logits(j, 1) - mx);
                double z = e0 + e1;
                loss += -(logits(j, y) - mx - std::log(z));
                dlogits(j, 0) = (e0 / z - (y == 0 ? 1.0 : 0.0)) / double(bs);
                dlogits(j, 1) = (e1 / z - (y == 1 ? 1.0 : 0.0)) / double(bs);
            }
            loss_sum += loss;
            loss_count += bs;

            Eigen::Map<const nn::RowMat> w(out.model.head.data(), 2, fdim);
            Eigen::MatrixXd d_features = dlogits * w;
            Eigen::MatrixXd dw = dlogits.transpose() * f;  // 2 x fdim
            std::vector<double> head_grads(out.model.head.size(), 0.0);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < fdim; ++c) head_grads[size_t(r * fdim + c)] = dw(r, c);
            head_grads[size_t(2 * fdim)] = dlogits.col(0).sum();
            head_grads[size_t(2 * fdim) + 1] = dlogits.col(1).sum();

            std::vector<double> grads =
                network_backward(out.model.net, out.model.params, tape, d_features);
            nn::adam_step(out.model.params.values, grads, adam, adam_cfg);
            nn::adam_step(out.model.head, head_grads, head_adam, adam_cfg);
        }
        double epoch_loss = loss_count > 0 ? loss_sum / double(loss_count) : 0.0;
        metrics.epochs.push_back({epoch, epoch_loss,
                                  eval_accuracy(data.train_eval, data.train_labels),
                                  eval_accuracy(data.test_eval, data.test_labels)});
    }

    metrics.train_accuracy = eval_accuracy(data.train_eval, data.train_labels);
    metrics.test_accuracy = eval_accuracy(data.test_eval, data.test_labels);
    return out;
}

}  // namespace coalsort::pipe

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "coalsort/pipeline/train.hpp"

namespace coalsort::pipe {

// A trained model lives in a directory: model.json names the kind and points
// at the binary artifacts next to it (checkpoint.bin, gp.bin, head.bin as
// applicable).

enum class ModelKind { densenet_gp, densenet_softmax, lbp_gp, glcm_gp, msws_gp };

inline const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::densenet_gp: return "densenet-gp";
        case ModelKind::densenet_softmax: return "densenet-softmax";
        case ModelKind::lbp_gp: return "lbp-gp";
        case ModelKind::glcm_gp: return "glcm-gp";
        case ModelKind::msws_gp: return "msws-gp";
    }
    throw Error(ErrorKind::logic, "model_kind_name: bad enum");
}

inline ModelKind model_kind_from_name(const std::string& name) {
    for (ModelKind k : {ModelKind::densenet_gp, ModelKind::densenet_softmax, ModelKind::lbp_gp,
                        ModelKind::glcm_gp, ModelKind::msws_gp})
        if (name == model_kind_name(k)) return k;
    throw Error(ErrorKind::usage, "unknown model '" + name +
                                      "' (valid: densenet-gp, densenet-softmax, lbp-gp, "
                                      "glcm-gp, msws-gp)");
}

inline bool is_classical(ModelKind k) {
    return k == ModelKind::lbp_gp || k == ModelKind::glcm_gp || k == ModelKind::msws_gp;
}

inline feat::Method classical_method(ModelKind k) {
    switch (k) {
        case ModelKind::lbp_gp: return feat::Method::lbp;
        case ModelKind::glcm_gp: return feat::Method::glcm;
        case ModelKind::msws_gp: return feat::Method::msws;
        default: throw Error(ErrorKind::logic, "classical_method: not a classical model");
    }
}

namespace detail {

inline void write_descriptor(const std::string& dir, ModelKind kind, int input_size,
                             const nlohmann::json& files) {
    nlohmann::json j;
    j["kind"] = model_kind_name(kind);
    j["input_size"] = input_size;
    j["files"] = files;
    std::ofstream f(std::filesystem::path(dir) / "model.json");
    require(f.good(), ErrorKind::io, "cannot write model.json under " + dir);
    f << j.dump(2) << "\n";
}

inline void save_head(const std::string& path, const std::vector<double>& head, int fdim) {
    binio::Writer w(path);
    w.bytes("CSHD", 4);
    w.u32(1);
    w.u32(uint32_t(fdim));
    for (double v : head) w.f64(v);
}

inline std::vector<double> load_head(const std::string& path, int* fdim_out) {
    binio::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    require(std::memcmp(magic, "CSHD", 4) == 0, ErrorKind::io, "not a head file: " + path);
    require(r.u32() == 1, ErrorKind::io, "unsupported head file version: " + path);
    int fdim = int(r.u32());
    std::vector<double> head(size_t(2 * fdim) + 2);
    for (double& v : head) v = r.f64();
    *fdim_out = fdim;
    return head;
}

}  // namespace detail

inline void save_joint_model(const std::string& dir, const TrainOutput& out) {
    std::filesystem::create_directories(dir);
    auto p = std::filesystem::path(dir);
    nn::save_checkpoint(out.model.net, out.model.params, out.adam,
                        (p / "checkpoint.bin").string());
    gp::save_gp(out.model.gp, (p / "gp.bin").string());
    detail::write_descriptor(dir, ModelKind::densenet_gp, out.model.net.config.input_size,
                             {{"checkpoint", "checkpoint.bin"}, {"gp", "gp.bin"}});
}

inline void save_softmax_model(const std::string& dir, const SoftmaxOutput& out,
                               const nn::AdamState& adam) {
    std::filesystem::create_directories(dir);
    auto p = std::filesystem::path(dir);
    nn::save_checkpoint(out.model.net, out.model.params, adam, (p / "checkpoint.bin").string());
    detail::save_head((p / "head.bin").string(), out.model.head, out.model.net.feature_dim);
    detail::write_descriptor(dir, ModelKind::densenet_softmax, out.model.net.config.input_size,
                             {{"checkpoint", "checkpoint.bin"}, {"head", "head.bin"}});
}

inline void save_feature_model(const std::string& dir, const FeatureGpOutput& out,
                               feat::Method method, int input_size) {
    std::filesystem::create_directories(dir);
    auto p = std::filesystem::path(dir);
    gp::save_gp(out.gp, (p / "gp.bin").string());
    ModelKind kind = method == feat::Method::lbp    ? ModelKind::lbp_gp
                     : method == feat::Method::glcm ? ModelKind::glcm_gp
                                                    : ModelKind::msws_gp;
    detail::write_descriptor(dir, kind, input_size, {{"gp", "gp.bin"}});
}

struct LoadedModel {
    ModelKind kind = ModelKind::densenet_gp;
    int input_size = 0;
    nn::Network net;          // backbone kinds only
    nn::NetworkParams params;
    nn::AdamState adam;
    gp::FittedGP gp;          // gp-headed kinds only
    std::vector<double> head; // softmax only
};

inline LoadedModel load_model(const std::string& dir) {
    auto p = std::filesystem::path(dir);
    std::ifstream f(p / "model.json");
    require(f.good(), ErrorKind::io, "cannot open " + (p / "model.json").string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::io, "malformed model.json: " + std::string(e.what()));
    }
    require(j.contains("kind") && j.contains("input_size") && j.contains("files"),
            ErrorKind::io, "model.json missing kind/input_size/files");

    LoadedModel m;
    m.kind = model_kind_from_name(j["kind"].get<std::string>());
    m.input_size = j["input_size"].get<int>();
    const auto& files = j["files"];

    if (m.kind == ModelKind::densenet_gp || m.kind == ModelKind::densenet_softmax) {
        require(files.contains("checkpoint"), ErrorKind::io, "model.json: checkpoint missing");
        nn::Checkpoint cp =
            nn::load_checkpoint((p / files["checkpoint"].get<std::string>()).string());
        require(cp.config.input_size == m.input_size, ErrorKind::io,
                "model.json input_size disagrees with checkpoint");
        m.net = nn::build_network(cp.config);
        m.params = std::move(cp.params);
        m.adam = std::move(cp.adam);
    }
    if (m.kind == ModelKind::densenet_softmax) {
        require(files.contains("head"), ErrorKind::io, "model.json: head missing");
        int fdim = 0;
        m.head = detail::load_head((p / files["head"].get<std::string>()).string(), &fdim);
        require(fdim == m.net.feature_dim, ErrorKind::io,
                "head width disagrees with checkpoint feature dim");
    } else {
        require(files.contains("gp"), ErrorKind::io, "model.json: gp missing");
        m.gp = gp::load_gp((p / files["gp"].get<std::string>()).string());
        if (m.kind == ModelKind::densenet_gp)
            require(m.gp.dim() == m.net.feature_dim, ErrorKind::io,
                    "gp feature dim disagrees with checkpoint");
    }
    return m;
}

// Class-1 probabilities for the given dataset rows under any model kind.
// Deterministic: evaluation preprocessing only.
inline std::vector<double> model_probabilities(LoadedModel& m, const Dataset& ds,
                                               const std::vector<int>& idx, int threads = 1) {
    if (idx.empty()) return {};
    if (is_classical(m.kind)) {
        Eigen::MatrixXd f =
            classical_features(ds, idx, classical_method(m.kind), m.input_size, threads);
        return gp_probabilities(m.gp, f);
    }

    std::vector<img::ImageTensor> inputs(idx.size());
    parallel_for(idx.size(), unsigned(threads), [&](size_t k) {
        inputs[k] = eval_input(ds.samples[size_t(idx[k])].image, m.input_size);
    });
    Eigen::MatrixXd f = forward_features(m.net, m.params, detail::pointers(inputs));
    if (m.kind == ModelKind::densenet_gp) return gp_probabilities(m.gp, f);

    SoftmaxModel sm{m.net, m.params, m.head};
    Eigen::MatrixXd logits = detail::head_logits(sm, f);
    std::vector<double> probs(static_cast<size_t>(f.rows()));
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        probs[size_t(i)] = detail::softmax_probability_class1(logits(i, 0), logits(i, 1));
    return probs;
}

}  // namespace coalsort::pipe

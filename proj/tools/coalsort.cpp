// coalsort: synthesize texture datasets, extract features, train the
// DenseNet-GP classifier and its baselines, predict, evaluate, and run the
// verification oracle suite.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "coalsort/imagekit/synth.hpp"
#include "coalsort/pipeline/model_io.hpp"
#include "coalsort/pipeline/train.hpp"
#include "coalsort/verify/oracles.hpp"

namespace {

using namespace coalsort;

// --- flat key=value config files --------------------------------------------

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorKind::io, "cannot open config file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string s = trim(line);
        if (s.empty()) continue;
        size_t eq = s.find('=');
        require(eq != std::string::npos, ErrorKind::usage,
                path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        require(!key.empty(), ErrorKind::usage,
                path + ":" + std::to_string(lineno) + ": empty key");
        kv[key] = trim(s.substr(eq + 1));
    }
    return kv;
}

int parse_int(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        int r = std::stoi(v, &used);
        require(used == v.size(), ErrorKind::usage, "");
        return r;
    } catch (...) {
        throw Error(ErrorKind::usage, "config key '" + key + "': not an integer: " + v);
    }
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        size_t used = 0;
        double r = std::stod(v, &used);
        require(used == v.size(), ErrorKind::usage, "");
        return r;
    } catch (...) {
        throw Error(ErrorKind::usage, "config key '" + key + "': not a number: " + v);
    }
}

// Apply dotted keys to the train configuration; unknown keys are rejected by
// name. Flags are applied after this, so they win.
void apply_train_config(const std::map<std::string, std::string>& kv, pipe::TrainConfig& cfg) {
    using Setter = std::function<void(const std::string&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"train.epochs", [&](auto& v, auto& k) { cfg.epochs = parse_int(v, k); }},
        {"train.batch_size", [&](auto& v, auto& k) { cfg.batch_size = parse_int(v, k); }},
        {"train.learning_rate", [&](auto& v, auto& k) { cfg.learning_rate = parse_double(v, k); }},
        {"train.weight_decay", [&](auto& v, auto& k) { cfg.weight_decay = parse_double(v, k); }},
        {"train.seed", [&](auto& v, auto& k) { cfg.seed = uint64_t(parse_int(v, k)); }},
        {"train.train_ratio", [&](auto& v, auto& k) { cfg.train_ratio = parse_double(v, k); }},
        {"train.refit_gp_every",
         [&](auto& v, auto& k) { cfg.refit_gp_every = parse_int(v, k); }},
        {"network.input_size",
         [&](auto& v, auto& k) { cfg.network.input_size = parse_int(v, k); }},
        {"network.stem_channels",
         [&](auto& v, auto& k) { cfg.network.stem_channels = parse_int(v, k); }},
        {"network.growth_rate",
         [&](auto& v, auto& k) { cfg.network.growth_rate = parse_int(v, k); }},
        {"network.block_sizes",
         [&](auto& v, auto& k) {
             std::vector<int> sizes;
             std::stringstream ss(v);
             std::string part;
             while (std::getline(ss, part, ',')) sizes.push_back(parse_int(trim(part), k));
             require(!sizes.empty(), ErrorKind::usage, "config key '" + k + "': empty list");
             cfg.network.block_sizes = sizes;
         }},
        {"network.compression",
         [&](auto& v, auto& k) { cfg.network.compression = parse_double(v, k); }},
        {"network.use_batchnorm",
         [&](auto& v, auto& k) {
             require(v == "0" || v == "1", ErrorKind::usage,
                     "config key '" + k + "': expected 0 or 1");
             cfg.network.use_batchnorm = v == "1";
         }},
        {"network.feature_dim",
         [&](auto& v, auto& k) { cfg.network.feature_dim = parse_int(v, k); }},
        {"gp.lengthscale", [&](auto& v, auto& k) { cfg.gp.lengthscale = parse_double(v, k); }},
        {"gp.signal_variance",
         [&](auto& v, auto& k) { cfg.gp.signal_variance = parse_double(v, k); }},
        {"gp.prior_mean", [&](auto& v, auto& k) { cfg.gp.prior_mean = parse_double(v, k); }},
        {"gp.latent_noise", [&](auto& v, auto& k) { cfg.gp.latent_noise = parse_double(v, k); }},
        {"gp.observation_noise",
         [&](auto& v, auto& k) { cfg.gp.observation_noise = parse_double(v, k); }},
    };
    for (const auto& [key, value] : kv) {
        auto it = setters.find(key);
        require(it != setters.end(), ErrorKind::usage, "unknown config key '" + key + "'");
        it->second(value, key);
    }
}

// --- subcommand bodies -------------------------------------------------------

struct SynthArgs {
    std::string out;
    uint64_t seed = 1;
    int per_class = 150;
    int image_size = 32;
    double label_flip = 0.0;
    double test_fraction = 1.0 / 3.0;
    double brightness = img::SynthConfig{}.brightness_shift;
    bool force = false;
};

void cmd_synth(const SynthArgs& a) {
    namespace fs = std::filesystem;
    if (fs::exists(a.out) && fs::is_directory(a.out) && !fs::is_empty(a.out))
        require(a.force, ErrorKind::io,
                a.out + " exists and is not empty (pass --force to overwrite)");

    img::SynthConfig cfg;
    cfg.samples_per_class = a.per_class;
    cfg.image_size = a.image_size;
    cfg.label_flip_rate = a.label_flip;
    cfg.test_fraction = a.test_fraction;
    cfg.brightness_shift = a.brightness;
    cfg.seed = a.seed;
    cfg.validate();

    auto samples = img::generate_synthetic_dataset(cfg);
    img::write_synthetic_dataset(samples, cfg, a.out);

    int train_n = 0, test_n = 0, flipped = 0;
    for (const auto& s : samples) {
        (s.split == "train" ? train_n : test_n)++;
        if (s.train_label != s.true_label) ++flipped;
    }
    std::cout << "wrote " << samples.size() << " images (" << train_n << " train, " << test_n
              << " test, " << flipped << " flipped labels) under " << a.out << "\n";
}

struct ExtractArgs {
    std::string data, out, method = "lbp";
    int input_size = 32;
    int threads = 1;
};

void cmd_extract(const ExtractArgs& a) {
    feat::Method method = feat::method_from_name(a.method);
    pipe::Dataset ds = pipe::load_dataset(a.data);
    require(!ds.samples.empty(), ErrorKind::io, a.data + ": empty dataset");

    std::vector<int> idx(ds.samples.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
    Eigen::MatrixXd f = pipe::classical_features(ds, idx, method, a.input_size, a.threads);

    std::ostringstream csv;
    csv << "image_id,label,split";
    for (Eigen::Index j = 0; j < f.cols(); ++j) csv << ",f" << j;
    csv << "\n";
    for (size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        csv << s.id << "," << s.label << "," << (s.split.empty() ? "-" : s.split);
        for (Eigen::Index j = 0; j < f.cols(); ++j)
            csv << "," << pipe::format_g17(f(Eigen::Index(i), j));
        csv << "\n";
    }
    if (a.out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream of(a.out, std::ios::binary);
        require(of.good(), ErrorKind::io, "cannot write " + a.out);
        of << csv.str();
    }
}

struct TrainArgs {
    std::string data, out, model = "densenet-gp", config_path;
    bool timing = false;
    pipe::TrainConfig cfg;
};

void cmd_train(const TrainArgs& a) {
    pipe::ModelKind kind = pipe::model_kind_from_name(a.model);
    a.cfg.validate();

    pipe::Dataset ds = pipe::load_dataset(a.data);
    pipe::SplitIndices split = pipe::split_dataset(ds, a.cfg.train_ratio, a.cfg.seed);

    auto t0 = std::chrono::steady_clock::now();
    pipe::Metrics metrics;
    std::filesystem::create_directories(a.out);

    if (kind == pipe::ModelKind::densenet_gp) {
        pipe::TrainOutput out = pipe::train_densenet_gp(ds, split, a.cfg);
        pipe::save_joint_model(a.out, out);
        metrics = std::move(out.metrics);
    } else if (kind == pipe::ModelKind::densenet_softmax) {
        pipe::SoftmaxOutput out = pipe::train_densenet_softmax(ds, split, a.cfg);
        pipe::save_softmax_model(a.out, out, nn::AdamState(out.model.net.param_count));
        metrics = std::move(out.metrics);
    } else {
        feat::Method method = pipe::classical_method(kind);
        pipe::FeatureGpOutput out = pipe::train_feature_gp(ds, split, method, a.cfg);
        pipe::save_feature_model(a.out, out, method, a.cfg.network.input_size);
        metrics = std::move(out.metrics);
    }

    if (a.timing)
        metrics.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    auto dir = std::filesystem::path(a.out);
    pipe::export_report(metrics, (dir / "metrics.json").string(), (dir / "curve.csv").string());
    std::cout << "model=" << metrics.model << " train_accuracy=" << metrics.train_accuracy
              << " test_accuracy=" << metrics.test_accuracy
              << " skipped_batches=" << metrics.skipped_batches << " out=" << a.out << "\n";
}

struct PredictArgs {
    std::string model, data, ids;
    bool ids_given = false;
    int threads = 1;
};

void cmd_predict(const PredictArgs& a) {
    pipe::LoadedModel model = pipe::load_model(a.model);
    pipe::Dataset ds = pipe::load_dataset(a.data);

    std::vector<int> idx;
    if (a.ids_given) {
        std::map<std::string, int> by_id;
        for (size_t i = 0; i < ds.samples.size(); ++i) by_id[ds.samples[i].id] = int(i);
        std::stringstream ss(a.ids);
        std::string part;
        while (std::getline(ss, part, ',')) {
            std::string id = trim(part);
            if (id.empty()) continue;
            auto it = by_id.find(id);
            require(it != by_id.end(), ErrorKind::io, "unknown image id '" + id + "'");
            idx.push_back(it->second);
        }
    } else {
        for (size_t i = 0; i < ds.samples.size(); ++i) idx.push_back(int(i));
    }

    std::vector<double> probs = pipe::model_probabilities(model, ds, idx, a.threads);
    std::cout << "image_id,probability,label_if_known\n";
    for (size_t k = 0; k < idx.size(); ++k)
        std::cout << ds.samples[size_t(idx[k])].id << "," << pipe::format_g17(probs[k]) << ","
                  << ds.samples[size_t(idx[k])].label << "\n";
}

struct EvaluateArgs {
    std::string model, data, split = "test", out;
    int threads = 1;
};

void cmd_evaluate(const EvaluateArgs& a) {
    require(a.split == "train" || a.split == "test" || a.split == "all", ErrorKind::usage,
            "--split must be train, test, or all");
    pipe::LoadedModel model = pipe::load_model(a.model);
    pipe::Dataset ds = pipe::load_dataset(a.data);

    std::vector<int> idx;
    std::vector<int> labels;
    for (size_t i = 0; i < ds.samples.size(); ++i)
        if (a.split == "all" || ds.samples[i].split == a.split) {
            idx.push_back(int(i));
            labels.push_back(ds.samples[i].label);
        }
    require(!idx.empty(), ErrorKind::usage, "no samples in split '" + a.split + "'");

    std::vector<double> probs = pipe::model_probabilities(model, ds, idx, a.threads);
    double acc = pipe::accuracy(probs, labels);
    std::cout << "split=" << a.split << " n=" << idx.size() << " accuracy="
              << pipe::format_g17(acc) << "\n";

    if (!a.out.empty()) {
        nlohmann::json j{{"split", a.split}, {"n", idx.size()}, {"accuracy", acc}};
        std::ofstream f(a.out);
        require(f.good(), ErrorKind::io, "cannot write " + a.out);
        f << j.dump(2) << "\n";
    }
}

struct VerifyArgs {
    std::string only, inject_fault;
};

int cmd_verify(const VerifyArgs& a) {
    verify::OracleOptions opts;
    opts.family = a.only;
    opts.inject_fault = a.inject_fault;
    auto results = verify::run_oracles(opts);

    std::printf("%-20s %-10s %-6s %8s  %s\n", "oracle", "family", "result", "time", "detail");
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("%-20s %-10s %-6s %7.2fs  %s\n", r.name.c_str(), r.family.c_str(),
                    r.pass ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
        all_pass = all_pass && r.pass;
    }
    if (!all_pass) {
        std::cerr << "verification failed\n";
        return 4;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coal/rock texture classification: DenseNet features with a GP classifier"};
    app.require_subcommand(1);
    int exit_code = 0;

    SynthArgs synth;
    auto* cs = app.add_subcommand("synth", "generate a synthetic labeled texture dataset");
    cs->add_option("--out", synth.out, "output dataset directory")->required();
    cs->add_option("--seed", synth.seed, "master seed");
    cs->add_option("--per-class", synth.per_class, "images per class");
    cs->add_option("--image-size", synth.image_size, "square image size in pixels");
    cs->add_option("--label-flip", synth.label_flip, "training label flip rate")
        ->check(CLI::Range(0.0, 1.0));
    cs->add_option("--test-fraction", synth.test_fraction, "fraction tagged as test split");
    cs->add_option("--brightness", synth.brightness,
                   "multiplicative brightness factor applied to the test split");
    cs->add_flag("--force", synth.force, "overwrite a non-empty output directory");
    cs->callback([&] { cmd_synth(synth); });

    ExtractArgs extract;
    auto* ce = app.add_subcommand("extract", "dump classical texture features as CSV");
    ce->add_option("--data", extract.data, "dataset directory")->required();
    ce->add_option("--method", extract.method, "feature extractor: lbp, glcm, msws");
    ce->add_option("--out", extract.out, "output CSV path (default: stdout)");
    ce->add_option("--input-size", extract.input_size, "center-crop size before extraction");
    ce->add_option("--threads", extract.threads, "worker thread cap");
    ce->callback([&] { cmd_extract(extract); });

    TrainArgs train;
    auto* ct = app.add_subcommand("train", "train a model and write its files");
    ct->add_option("--data", train.data, "dataset directory")->required();
    ct->add_option("--out", train.out, "output model directory")->required();
    ct->add_option("--model", train.model,
                   "densenet-gp, densenet-softmax, lbp-gp, glcm-gp, msws-gp");
    ct->add_option("--config", train.config_path, "key=value config file (flags win)");
    int ep = 0, bs = 0, refit = 0, threads = 0, input_size = 0;
    double lr = 0, wd = 0, ratio = 0;
    uint64_t seed = 0;
    ct->add_option("--epochs", ep, "training epochs");
    ct->add_option("--batch-size", bs, "batch size");
    ct->add_option("--lr", lr, "learning rate");
    ct->add_option("--wd", wd, "weight decay");
    ct->add_option("--seed", seed, "master seed");
    ct->add_option("--train-ratio", ratio, "train fraction for untagged samples");
    ct->add_option("--refit-every", refit, "epochs between evaluation GP refits");
    ct->add_option("--input-size", input_size, "network input size");
    ct->add_option("--threads", threads, "worker thread cap");
    ct->add_flag("--timing", train.timing, "record wall time in the metrics");
    ct->callback([&] {
        if (!train.config_path.empty())
            apply_train_config(parse_config_file(train.config_path), train.cfg);
        if (ct->count("--epochs")) train.cfg.epochs = ep;
        if (ct->count("--batch-size")) train.cfg.batch_size = bs;
        if (ct->count("--lr")) train.cfg.learning_rate = lr;
        if (ct->count("--wd")) train.cfg.weight_decay = wd;
        if (ct->count("--seed")) train.cfg.seed = seed;
        if (ct->count("--train-ratio")) train.cfg.train_ratio = ratio;
        if (ct->count("--refit-every")) train.cfg.refit_gp_every = refit;
        if (ct->count("--input-size")) train.cfg.network.input_size = input_size;
        if (ct->count("--threads")) train.cfg.threads = threads;
        cmd_train(train);
    });

    PredictArgs predict;
    auto* cp = app.add_subcommand("predict", "per-image class-1 probabilities as CSV");
    cp->add_option("--model", predict.model, "model directory")->required();
    cp->add_option("--data", predict.data, "dataset directory")->required();
    cp->add_option("--ids", predict.ids, "comma-separated image ids (default: all)");
    cp->add_option("--threads", predict.threads, "worker thread cap");
    cp->callback([&] {
        predict.ids_given = cp->count("--ids") > 0;
        cmd_predict(predict);
    });

    EvaluateArgs evaluate;
    auto* cv = app.add_subcommand("evaluate", "accuracy of a saved model on a dataset split");
    cv->add_option("--model", evaluate.model, "model directory")->required();
    cv->add_option("--data", evaluate.data, "dataset directory")->required();
    cv->add_option("--split", evaluate.split, "train, test, or all");
    cv->add_option("--out", evaluate.out, "also write a JSON fragment here");
    cv->add_option("--threads", evaluate.threads, "worker thread cap");
    cv->callback([&] { cmd_evaluate(evaluate); });

    VerifyArgs verify_args;
    auto* cr = app.add_subcommand("verify", "run the self-check oracle suite");
    cr->add_option("--only", verify_args.only, "restrict to a family: gp, nn, features, optim");
    cr->add_option("--inject-fault", verify_args.inject_fault, "perturb the named oracle")
        ->group("");
    cr->callback([&] { exit_code = cmd_verify(verify_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const coalsort::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}

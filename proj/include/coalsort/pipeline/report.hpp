#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coalsort/common.hpp"

#include "json.hpp"

namespace coalsort::pipe {

struct EpochStat {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct Metrics {
    std::string model;
    uint64_t seed = 0;
    std::string config_digest;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::vector<EpochStat> epochs;
    int skipped_batches = 0;
    double wall_time_s = 0.0;  // stays 0 unless timing is requested, so
                               // same-seed reruns are byte-identical
};

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Canonical flat key=value echo of an effective configuration, sorted by key
// and joined with ';'. This doubles as the run's config digest: equal digests
// mean equal configurations, and the defaults are human-readable in reports.
inline std::string config_digest(const std::map<std::string, std::string>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        if (!out.empty()) out += ';';
        out += k + "=" + v;
    }
    return out;
}

inline nlohmann::json metrics_to_json(const Metrics& m) {
    nlohmann::json j;
    j["model"] = m.model;
    j["seed"] = m.seed;
    j["config_digest"] = m.config_digest;
    j["train_accuracy"] = m.train_accuracy;
    j["test_accuracy"] = m.test_accuracy;
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : m.epochs)
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"loss", e.loss},
                               {"train_acc", e.train_acc},
                               {"test_acc", e.test_acc}});
    j["skipped_batches"] = m.skipped_batches;
    j["wall_time_s"] = m.wall_time_s;
    return j;
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
    Metrics m;
    m.model = j.at("model").get<std::string>();
    m.seed = j.at("seed").get<uint64_t>();
    m.config_digest = j.at("config_digest").get<std::string>();
    m.train_accuracy = j.at("train_accuracy").get<double>();
    m.test_accuracy = j.at("test_accuracy").get<double>();
    for (const auto& e : j.at("epochs"))
        m.epochs.push_back({e.at("epoch").get<int>(), e.at("loss").get<double>(),
                            e.at("train_acc").get<double>(), e.at("test_acc").get<double>()});
    m.skipped_batches = j.at("skipped_batches").get<int>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    return m;
}

// Metrics JSON plus the per-epoch curve CSV (epoch,loss,train_acc,test_acc).
inline void export_report(const Metrics& m, const std::string& json_path,
                          const std::string& csv_path) {
    {
        std::ofstream f(json_path, std::ios::trunc);
        require(f.good(), ErrorKind::io, "cannot write " + json_path);
        f << metrics_to_json(m).dump(2) << "\n";
        require(f.good(), ErrorKind::io, "write failed: " + json_path);
    }
    {
        std::ofstream f(csv_path, std::ios::trunc);
        require(f.good(), ErrorKind::io, "cannot write " + csv_path);
        f << "epoch,loss,train_acc,test_acc\n";
        for (const auto& e : m.epochs)
            f << e.epoch << "," << format_g17(e.loss) << "," << format_g17(e.train_acc) << ","
              << format_g17(e.test_acc) << "\n";
        require(f.good(), ErrorKind::io, "write failed: " + csv_path);
    }
}

}  // namespace coalsort::pipe

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "coalsort/imagekit/codec.hpp"
#include "coalsort/imagekit/image.hpp"
#include "coalsort/nn/tensor.hpp"

#include "json.hpp"

namespace coalsort::pipe {

struct Sample {
    std::string id;        // e.g. "train/coal/coal_0003"
    std::string path;
    int label = 0;         // assigned (training) label, coal = 1 / waste = 0
    int true_label = 0;    // generating class when the manifest records it
    std::string split;     // "train" | "test" | "" (untagged)
    img::ImageTensor image;
};

struct Dataset {
    std::vector<Sample> samples;
};

inline int label_from_class(const std::string& name) {
    if (name == "coal") return 1;
    if (name == "waste") return 0;
    throw Error(ErrorKind::io, "unknown class directory or label '" + name +
                                   "' (expected coal or waste)");
}

namespace detail {

inline bool is_raster(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    return ext == ".png" || ext == ".ppm";
}

inline const char* class_dir_name(int label) { return label == 1 ? "coal" : "waste"; }

inline void scan_class_dir(const std::filesystem::path& dir, const std::string& split,
                           int label, std::vector<Sample>& out) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_raster(entry.path())) continue;
        Sample s;
        s.path = entry.path().string();
        std::string stem = entry.path().stem().string();
        s.id = (split.empty() ? "" : split + "/") + std::string(class_dir_name(label)) + "/" + stem;
        s.label = s.true_label = label;
        s.split = split;
        out.push_back(std::move(s));
    }
}

}  // namespace detail

// Reads a dataset directory. A manifest.json (written by the synthesizer) is
// authoritative when present; otherwise the layout is scanned, either
// <root>/<split>/<class>/ or <root>/<class>/ (untagged). Samples come back
// sorted by id and with pixels loaded.
inline Dataset load_dataset(const std::string& root) {
    namespace fs = std::filesystem;
    require(fs::is_directory(root), ErrorKind::io, root + ": not a dataset directory");
    Dataset ds;

    fs::path manifest_path = fs::path(root) / "manifest.json";
    if (fs::exists(manifest_path)) {
        std::ifstream mf(manifest_path);
        nlohmann::json manifest;
        try {
            mf >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::io, manifest_path.string() + ": " + e.what());
        }
        require(manifest.contains("samples") && manifest["samples"].is_array(), ErrorKind::io,
                manifest_path.string() + ": missing samples array");
        for (const auto& entry : manifest["samples"]) {
            Sample s;
            std::string file = entry.at("file").get<std::string>();
            s.path = (fs::path(root) / file).string();
            s.id = fs::path(file).replace_extension().generic_string();
            s.label = label_from_class(entry.at("train_label").get<std::string>());
            s.true_label = label_from_class(entry.at("true_label").get<std::string>());
            s.split = entry.value("split", std::string());
            require(s.split.empty() || s.split == "train" || s.split == "test", ErrorKind::io,
                    manifest_path.string() + ": bad split tag '" + s.split + "'");
            ds.samples.push_back(std::move(s));
        }
    } else {
        bool tagged = fs::is_directory(fs::path(root) / "train") ||
                      fs::is_directory(fs::path(root) / "test");
        if (tagged) {
            for (const char* split : {"train", "test"})
                for (int label : {1, 0})
                    detail::scan_class_dir(fs::path(root) / split / detail::class_dir_name(label),
                                           split, label, ds.samples);
        } else {
            for (int label : {1, 0})
                detail::scan_class_dir(fs::path(root) / detail::class_dir_name(label), "", label,
                                       ds.samples);
        }
    }

    require(!ds.samples.empty(), ErrorKind::io, root + ": no samples found");
    std::sort(ds.samples.begin(), ds.samples.end(),
              [](const Sample& a, const Sample& b) { return a.id < b.id; });
    for (auto& s : ds.samples) s.image = img::load_image(s.path);
    return ds;
}

struct SplitIndices {
    std::vector<int> train, test;
};

// Explicit split tags are honored (test-tagged samples never train);
// untagged samples are split per class by a seeded stratified ratio.
inline SplitIndices split_dataset(const Dataset& ds, double train_ratio, uint64_t seed) {
    require(train_ratio > 0.0 && train_ratio <= 1.0, ErrorKind::usage,
            "split: train ratio must lie in (0,1]");
    SplitIndices out;
    std::vector<int> untagged_by_class[2];
    for (int i = 0; i < int(ds.samples.size()); ++i) {
        const Sample& s = ds.samples[size_t(i)];
        if (s.split == "train")
            out.train.push_back(i);
        else if (s.split == "test")
            out.test.push_back(i);
        else
            untagged_by_class[s.label].push_back(i);
    }
    for (int label : {0, 1}) {
        auto& idx = untagged_by_class[label];
        if (idx.empty()) continue;
        Rng rng(derive_seed(seed, stream_tag("split"), uint64_t(label)));
        shuffle(idx, rng);
        auto n_train = size_t(std::llround(train_ratio * double(idx.size())));
        for (size_t k = 0; k < idx.size(); ++k)
            (k < n_train ? out.train : out.test).push_back(idx[k]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());

    require(!out.train.empty(), ErrorKind::usage, "split: empty training set");
    require(!out.test.empty(), ErrorKind::usage, "split: empty test set");
    bool has[2] = {false, false};
    for (int i : out.train) has[ds.samples[size_t(i)].label] = true;
    require(has[0] && has[1], ErrorKind::usage, "split: a class is empty after the split");
    return out;
}

// ---------------------------------------------------------------------------
// preprocessing: resize -> center crop -> (train only: random flips)
// -> per-channel normalization. Classical features read the raw [0,1] crop.
// ---------------------------------------------------------------------------

inline int resize_dim_for(int input_size) {
    return int(std::lround(double(input_size) * 300.0 / 224.0));
}

inline img::ImageTensor raw_crop(const img::ImageTensor& im, int input_size) {
    int rs = resize_dim_for(input_size);
    return img::center_crop(img::resize_bilinear(im, rs, rs), input_size, input_size);
}

inline img::ImageTensor eval_input(const img::ImageTensor& im, int input_size) {
    return img::normalize(raw_crop(im, input_size), img::imagenet_stats());
}

inline img::ImageTensor train_input_from_crop(const img::ImageTensor& crop, Rng& rng) {
    return img::normalize(img::random_flip(crop, 0.5, 0.5, rng), img::imagenet_stats());
}

// HWC images to one NCHW batch tensor.
inline nn::Tensor to_batch(const std::vector<const img::ImageTensor*>& images) {
    require(!images.empty(), ErrorKind::usage, "to_batch: empty batch");
    int h = images[0]->height, w = images[0]->width, c = images[0]->channels;
    nn::Tensor t(int(images.size()), c, h, w);
    for (int n = 0; n < t.n; ++n) {
        const img::ImageTensor& im = *images[size_t(n)];
        require(im.height == h && im.width == w && im.channels == c, ErrorKind::usage,
                "to_batch: mixed image shapes");
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int ch = 0; ch < c; ++ch) t.at(n, ch, y, x) = im.at(y, x, ch);
    }
    return t;
}

}  // namespace coalsort::pipe

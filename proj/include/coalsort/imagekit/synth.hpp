#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "coalsort/imagekit/codec.hpp"
#include "coalsort/imagekit/image.hpp"

#include "json.hpp"

namespace coalsort::img {

// Seeded filtered-noise texture: a coarse Gaussian grid upsampled to image
// size (grain_px controls blob size) plus fine per-pixel speckle, on a flat
// base albedo with a slight RGB tint.
struct TextureParams {
    double base_albedo = 0.4;
    double contrast = 0.2;
    int grain_px = 4;
    double speckle = 0.02;
    std::array<double, 3> tint = {1.0, 1.0, 1.0};
};

struct SynthConfig {
    int samples_per_class = 150;
    int image_size = 32;
    TextureParams class_coal{0.24, 0.16, 2, 0.035, {1.00, 0.97, 0.94}};
    TextureParams class_waste{0.52, 0.22, 6, 0.015, {0.98, 1.00, 1.03}};
    double brightness_shift = 0.65;  // multiplicative darkening of the test split
    double label_flip_rate = 0.0;    // training labels only
    double test_fraction = 1.0 / 3.0;
    uint64_t seed = 1;

    void validate() const {
        require(samples_per_class >= 1, ErrorKind::usage, "synth: samples_per_class must be >= 1");
        require(image_size >= 8, ErrorKind::usage, "synth: image_size must be >= 8");
        require(label_flip_rate >= 0.0 && label_flip_rate <= 1.0, ErrorKind::usage,
                "synth: label_flip_rate must lie in [0,1]");
        require(test_fraction >= 0.0 && test_fraction < 1.0, ErrorKind::usage,
                "synth: test_fraction must lie in [0,1)");
        require(brightness_shift > 0.0 && brightness_shift <= 1.0, ErrorKind::usage,
                "synth: brightness_shift must lie in (0,1]");
    }
};

// Label convention: coal = 1, waste = 0.
inline const char* class_name(int label) { return label == 1 ? "coal" : "waste"; }

struct SynthSample {
    ImageTensor image;
    int true_label = 0;
    int train_label = 0;     // equals true_label unless flipped (train split only)
    std::string split;       // "train" | "test"
    std::string name;
};

namespace detail {

inline ImageTensor render_texture(const TextureParams& tex, int size, double brightness, Rng& rng) {
    int grid = std::max(2, size / std::max(1, tex.grain_px) + 1);
    ImageTensor noise(grid, grid, 1);
    for (auto& v : noise.data) v = rng.normal();
    ImageTensor field = resize_bilinear(noise, size, size);

    double jitter = rng.uniform(-0.04, 0.04);
    ImageTensor im(size, size, 3);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double g = tex.base_albedo + jitter + tex.contrast * field.at(y, x, 0) +
                       tex.speckle * rng.normal();
            for (int c = 0; c < 3; ++c)
                im.at(y, x, c) = std::clamp(g * tex.tint[c] * brightness, 0.0, 1.0);
        }
    }
    return im;
}

}  // namespace detail

// Pure function of the config: per-image streams are derived from
// (seed, class, index) and the label-flip stream is separate, so the output
// is byte-reproducible and independent of generation order.
inline std::vector<SynthSample> generate_synthetic_dataset(const SynthConfig& cfg) {
    cfg.validate();
    const int n_test = int(std::lround(cfg.samples_per_class * cfg.test_fraction));
    std::vector<SynthSample> out;
    out.reserve(size_t(cfg.samples_per_class) * 2);

    for (int label = 1; label >= 0; --label) {  // coal first, then waste
        const TextureParams& tex = label == 1 ? cfg.class_coal : cfg.class_waste;
        for (int i = 0; i < cfg.samples_per_class; ++i) {
            const bool is_test = i < n_test;
            Rng rng(derive_seed(cfg.seed, stream_tag("image"), uint64_t(label), uint64_t(i)));
            SynthSample s;
            s.image = detail::render_texture(tex, cfg.image_size,
                                             is_test ? cfg.brightness_shift : 1.0, rng);
            s.true_label = label;
            s.train_label = label;
            s.split = is_test ? "test" : "train";
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%s_%04d", class_name(label), i);
            s.name = buf;
            out.push_back(std::move(s));
        }
    }

    // Flip a seeded fraction of training labels, in canonical sample order.
    Rng flip_rng(derive_seed(cfg.seed, stream_tag("labelflip")));
    for (auto& s : out) {
        if (s.split == "train" && flip_rng.uniform() < cfg.label_flip_rate)
            s.train_label = 1 - s.train_label;
    }
    return out;
}

// Writes <root>/<split>/<class>/<name>.png (class dir = assigned training
// label) plus manifest.json recording both labels and the split.
inline void write_synthetic_dataset(const std::vector<SynthSample>& samples,
                                    const SynthConfig& cfg, const std::string& root) {
    namespace fs = std::filesystem;
    nlohmann::json manifest;
    manifest["seed"] = cfg.seed;
    manifest["image_size"] = cfg.image_size;
    manifest["label_flip_rate"] = cfg.label_flip_rate;
    manifest["samples"] = nlohmann::json::array();

    for (const auto& s : samples) {
        fs::path rel = fs::path(s.split) / class_name(s.train_label) / (s.name + ".png");
        fs::path full = fs::path(root) / rel;
        fs::create_directories(full.parent_path());
        save_image(full.string(), s.image);
        manifest["samples"].push_back({{"file", rel.generic_string()},
                                       {"true_label", class_name(s.true_label)},
                                       {"train_label", class_name(s.train_label)},
                                       {"split", s.split}});
    }
    std::ofstream mf(fs::path(root) / "manifest.json");
    require(mf.good(), ErrorKind::io, "cannot write manifest under " + root);
    mf << manifest.dump(2) << "\n";
}

}  // namespace coalsort::img

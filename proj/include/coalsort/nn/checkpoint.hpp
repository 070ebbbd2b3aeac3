#pragma once

#include <string>

#include "coalsort/binio.hpp"
#include "coalsort/nn/adam.hpp"
#include "coalsort/nn/network.hpp"

namespace coalsort::nn {

inline constexpr char kCheckpointMagic[4] = {'C', 'S', 'C', 'K'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_config(binio::Writer& w, const NetworkConfig& c) {
    w.u32(uint32_t(c.input_size));
    w.u32(uint32_t(c.stem_channels));
    w.u32(uint32_t(c.growth_rate));
    w.u32(uint32_t(c.block_sizes.size()));
    for (int n : c.block_sizes) w.u32(uint32_t(n));
    w.f64(c.compression);
    w.u32(c.use_batchnorm ? 1 : 0);
    w.u32(uint32_t(c.feature_dim));
}

inline NetworkConfig read_config(binio::Reader& r, const std::string& path) {
    NetworkConfig c;
    c.input_size = int(r.u32());
    c.stem_channels = int(r.u32());
    c.growth_rate = int(r.u32());
    uint32_t nblocks = r.u32();
    require(nblocks >= 1 && nblocks <= 64, ErrorKind::io, path + ": corrupt checkpoint header");
    c.block_sizes.resize(nblocks);
    for (uint32_t i = 0; i < nblocks; ++i) c.block_sizes[i] = int(r.u32());
    c.compression = r.f64();
    c.use_batchnorm = r.u32() != 0;
    c.feature_dim = int(r.u32());
    return c;
}

}  // namespace detail

// Layout: magic, version, NetworkConfig, named parameter tensors in
// declaration order (name, rank, dims, f64 data), running stats, Adam state.
inline void save_checkpoint(const Network& net, const NetworkParams& params,
                            const AdamState& adam, const std::string& path) {
    require(params.values.size() == net.param_count, ErrorKind::usage,
            "save_checkpoint: parameter layout mismatch");
    binio::Writer w(path);
    w.bytes(kCheckpointMagic, 4);
    w.u32(kCheckpointVersion);
    detail::write_config(w, net.config);
    w.u64(uint64_t(net.param_infos.size()));
    for (const ParamInfo& info : net.param_infos) {
        w.str(info.name);
        w.u32(uint32_t(info.shape.size()));
        for (int d : info.shape) w.u32(uint32_t(d));
        w.f64s(&params.values[info.offset], info.size);
    }
    w.u64(uint64_t(params.stats.size()));
    w.f64s(params.stats.data(), params.stats.size());
    w.u64(adam.step);
    w.u64(uint64_t(adam.m.size()));
    w.f64s(adam.m.data(), adam.m.size());
    w.f64s(adam.v.data(), adam.v.size());
    w.finish();
}

struct Checkpoint {
    NetworkConfig config;
    NetworkParams params;
    AdamState adam;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    binio::Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    require(std::memcmp(magic, kCheckpointMagic, 4) == 0, ErrorKind::io,
            path + ": not a checkpoint file");
    uint32_t version = r.u32();
    require(version == kCheckpointVersion, ErrorKind::io,
            path + ": unsupported checkpoint version " + std::to_string(version) +
                " (expected " + std::to_string(kCheckpointVersion) + ")");
    Checkpoint ck;
    ck.config = detail::read_config(r, path);
    ck.config.validate();
    Network net = build_network(ck.config);
    uint64_t ntensors = r.u64();
    require(ntensors == net.param_infos.size(), ErrorKind::io,
            path + ": checkpoint tensor count mismatch");
    ck.params.values.assign(net.param_count, 0.0);
    for (const ParamInfo& info : net.param_infos) {
        std::string name = r.str();
        require(name == info.name, ErrorKind::io,
                path + ": unexpected tensor '" + name + "' (wanted '" + info.name + "')");
        uint32_t rank = r.u32();
        require(rank == info.shape.size(), ErrorKind::io,
                path + ": tensor '" + name + "' rank mismatch");
        for (uint32_t d = 0; d < rank; ++d)
            require(int(r.u32()) == info.shape[d], ErrorKind::io,
                    path + ": tensor '" + name + "' shape mismatch");
        r.f64s(&ck.params.values[info.offset], info.size);
    }
    uint64_t nstats = r.u64();
    require(nstats == net.stat_count, ErrorKind::io, path + ": checkpoint stat count mismatch");
    ck.params.stats.resize(nstats);
    r.f64s(ck.params.stats.data(), nstats);
    ck.adam.step = r.u64();
    uint64_t nm = r.u64();
    require(nm == net.param_count, ErrorKind::io, path + ": optimizer state size mismatch");
    ck.adam.m.resize(nm);
    ck.adam.v.resize(nm);
    r.f64s(ck.adam.m.data(), nm);
    r.f64s(ck.adam.v.data(), nm);
    return ck;
}

inline Checkpoint load_checkpoint_expecting(const std::string& path,
                                            const NetworkConfig& expected) {
    Checkpoint ck = load_checkpoint(path);
    require(ck.config == expected, ErrorKind::io,
            path + ": checkpoint config mismatch: file has {" + ck.config.describe() +
                "}, run expects {" + expected.describe() + "}");
    return ck;
}

}  // namespace coalsort::nn

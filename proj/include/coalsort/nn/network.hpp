#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "coalsort/nn/ops.hpp"

namespace coalsort::nn {

struct NetworkConfig {
    int input_size = 32;
    int stem_channels = 8;
    int growth_rate = 4;
    std::vector<int> block_sizes = {2, 2};
    double compression = 0.5;
    bool use_batchnorm = true;
    int feature_dim = 0;  // 0 = derived from the connectivity arithmetic

    bool operator==(const NetworkConfig&) const = default;

    void validate() const {
        require(input_size >= 4, ErrorKind::usage, "network: input_size must be >= 4");
        require(stem_channels >= 1, ErrorKind::usage, "network: stem_channels must be >= 1");
        require(growth_rate >= 1, ErrorKind::usage, "network: growth_rate must be >= 1");
        require(!block_sizes.empty(), ErrorKind::usage, "network: block_sizes must be nonempty");
        for (int n : block_sizes)
            require(n >= 1, ErrorKind::usage, "network: every block size must be >= 1");
        require(compression > 0.0 && compression <= 1.0, ErrorKind::usage,
                "network: compression must be in (0,1]");
        require(feature_dim >= 0, ErrorKind::usage, "network: feature_dim must be >= 0");
    }

    std::string describe() const {
        std::ostringstream os;
        os << "input=" << input_size << " stem=" << stem_channels << " growth=" << growth_rate
           << " blocks=[";
        for (size_t i = 0; i < block_sizes.size(); ++i)
            os << (i ? "," : "") << block_sizes[i];
        os << "] compression=" << compression << " batchnorm=" << (use_batchnorm ? 1 : 0)
           << " feature_dim=" << feature_dim;
        return os.str();
    }
};

// Closed-form channel bookkeeping: layer i of a block sees
// block_input + i*growth_rate channels.
struct ChannelTrace {
    int stem_out = 0;
    std::vector<std::vector<int>> layer_input_channels;
    std::vector<int> block_output_channels;
    std::vector<int> transition_output_channels;
    int final_channels = 0;
};

inline ChannelTrace channel_trace(const NetworkConfig& cfg) {
    ChannelTrace tr;
    tr.stem_out = cfg.stem_channels;
    int c = cfg.stem_channels;
    for (size_t b = 0; b < cfg.block_sizes.size(); ++b) {
        std::vector<int> ins;
        for (int i = 0; i < cfg.block_sizes[b]; ++i) ins.push_back(c + i * cfg.growth_rate);
        tr.layer_input_channels.push_back(ins);
        c += cfg.block_sizes[b] * cfg.growth_rate;
        tr.block_output_channels.push_back(c);
        if (b + 1 < cfg.block_sizes.size()) {
            c = std::max(1, int(std::floor(double(c) * cfg.compression)));
            tr.transition_output_channels.push_back(c);
        }
    }
    tr.final_channels = c;
    return tr;
}

inline int derived_feature_dim(const NetworkConfig& cfg) { return channel_trace(cfg).final_channels; }

enum class OpKind { conv, batchnorm, relu, maxpool, avgpool, global_avgpool, concat };

struct Op {
    OpKind kind;
    std::string name;
    std::vector<int> inputs;  // slot ids
    int output = -1;
    // conv
    int in_c = 0, out_c = 0, ksize = 0, stride = 1, pad = 0;
    // parameter/stat offsets into the flat buffers
    size_t weight_off = 0, bias_off = 0;        // conv
    size_t gamma_off = 0, beta_off = 0;         // batchnorm
    size_t mean_off = 0, var_off = 0;           // batchnorm running stats
};

struct ParamInfo {
    std::string name;
    std::vector<int> shape;
    size_t offset = 0;
    size_t size = 0;
};

struct Network {
    NetworkConfig config;
    std::vector<Op> ops;
    int num_slots = 0;
    int input_slot = 0;
    int feature_slot = 0;
    int feature_dim = 0;
    size_t param_count = 0;
    size_t stat_count = 0;
    std::vector<ParamInfo> param_infos;
};

struct NetworkParams {
    std::vector<double> values;  // trainable, laid out per Network::param_infos
    std::vector<double> stats;   // batchnorm running mean/var
};

namespace detail {

struct Builder {
    Network net;
    size_t poff = 0, soff = 0;
    int slots = 1;  // slot 0 = input

    size_t add_param(const std::string& name, std::vector<int> shape) {
        size_t sz = 1;
        for (int d : shape) sz *= size_t(d);
        net.param_infos.push_back({name, std::move(shape), poff, sz});
        size_t at = poff;
        poff += sz;
        return at;
    }

    int conv(const std::string& name, int in_slot, int in_c, int out_c, int k, int stride,
             int pad) {
        Op op;
        op.kind = OpKind::conv;
        op.name = name;
        op.inputs = {in_slot};
        op.output = slots++;
        op.in_c = in_c;
        op.out_c = out_c;
        op.ksize = k;
        op.stride = stride;
        op.pad = pad;
        op.weight_off = add_param(name + ".weight", {out_c, in_c, k, k});
        op.bias_off = add_param(name + ".bias", {out_c});
        net.ops.push_back(op);
        return op.output;
    }

    int norm_relu(const std::string& name, int in_slot, int channels) {
        if (net.config.use_batchnorm) {
            Op bn;
            bn.kind = OpKind::batchnorm;
            bn.name = name + ".norm";
            bn.inputs = {in_slot};
            bn.output = slots++;
            bn.in_c = bn.out_c = channels;
            bn.gamma_off = add_param(bn.name + ".scale", {channels});
            bn.beta_off = add_param(bn.name + ".shift", {channels});
            bn.mean_off = soff;
            bn.var_off = soff + size_t(channels);
            soff += 2 * size_t(channels);
            net.ops.push_back(bn);
            in_slot = bn.output;
        }
        Op r;
        r.kind = OpKind::relu;
        r.name = name + ".relu";
        r.inputs = {in_slot};
        r.output = slots++;
        net.ops.push_back(r);
        return r.output;
    }

    int simple(OpKind kind, const std::string& name, std::vector<int> in_slots) {
        Op op;
        op.kind = kind;
        op.name = name;
        op.inputs = std::move(in_slots);
        op.output = slots++;
        net.ops.push_back(op);
        return op.output;
    }
};

}  // namespace detail

// Stem (7x7/2 conv, 3x3/2 max pool), alternating dense blocks and transition
// layers, then global average pooling. No classification head: the pooled
// vector is the model output.
inline Network build_network(const NetworkConfig& cfg) {
    cfg.validate();
    detail::Builder b;
    b.net.config = cfg;

    int cur = b.conv("stem.conv", 0, 3, cfg.stem_channels, 7, 2, 3);
    if (cfg.use_batchnorm) cur = b.norm_relu("stem", cur, cfg.stem_channels);
    cur = b.simple(OpKind::maxpool, "stem.pool", {cur});

    int channels = cfg.stem_channels;
    for (size_t blk = 0; blk < cfg.block_sizes.size(); ++blk) {
        std::string bname = "block" + std::to_string(blk);
        std::vector<int> feeds = {cur};
        int entry_channels = channels;
        for (int layer = 0; layer < cfg.block_sizes[blk]; ++layer) {
            std::string lname = bname + ".layer" + std::to_string(layer);
            int concat_c = entry_channels + layer * cfg.growth_rate;
            int x = b.simple(OpKind::concat, lname + ".concat", feeds);
            x = b.norm_relu(lname + ".pre1", x, concat_c);
            int bottleneck = 4 * cfg.growth_rate;
            x = b.conv(lname + ".conv1", x, concat_c, bottleneck, 1, 1, 0);
            x = b.norm_relu(lname + ".pre2", x, bottleneck);
            x = b.conv(lname + ".conv2", x, bottleneck, cfg.growth_rate, 3, 1, 1);
            feeds.push_back(x);
        }
        channels = entry_channels + cfg.block_sizes[blk] * cfg.growth_rate;
        cur = b.simple(OpKind::concat, bname + ".output", feeds);
        if (blk + 1 < cfg.block_sizes.size()) {
            std::string tname = bname + ".transition";
            int x = cur;
            if (cfg.use_batchnorm) x = b.norm_relu(tname, x, channels);
            int out_c = std::max(1, int(std::floor(double(channels) * cfg.compression)));
            x = b.conv(tname + ".conv", x, channels, out_c, 1, 1, 0);
            cur = b.simple(OpKind::avgpool, tname + ".pool", {x});
            channels = out_c;
        }
    }

    if (cfg.use_batchnorm) cur = b.norm_relu("final", cur, channels);
    cur = b.simple(OpKind::global_avgpool, "final.pool", {cur});

    b.net.num_slots = b.slots;
    b.net.feature_slot = cur;
    b.net.feature_dim = channels;
    b.net.param_count = b.poff;
    b.net.stat_count = b.soff;
    require(cfg.feature_dim == 0 || cfg.feature_dim == channels, ErrorKind::usage,
            "network: configured feature_dim " + std::to_string(cfg.feature_dim) +
                " contradicts the connectivity arithmetic (" + std::to_string(channels) + ")");
    return b.net;
}

// Fan-in-scaled uniform init for conv weights, zero biases, unit scale / zero
// shift for normalization; running stats start at mean 0, variance 1.
inline NetworkParams init_params(const Network& net, uint64_t seed) {
    NetworkParams p;
    p.values.assign(net.param_count, 0.0);
    p.stats.assign(net.stat_count, 0.0);
    Rng rng(derive_seed(seed, stream_tag("init")));
    for (const Op& op : net.ops) {
        if (op.kind == OpKind::conv) {
            double bound = 1.0 / std::sqrt(double(op.in_c) * op.ksize * op.ksize);
            size_t wsz = size_t(op.out_c) * op.in_c * op.ksize * op.ksize;
            for (size_t i = 0; i < wsz; ++i)
                p.values[op.weight_off + i] = (2.0 * rng.uniform() - 1.0) * bound;
        } else if (op.kind == OpKind::batchnorm) {
            for (int c = 0; c < op.out_c; ++c) {
                p.values[op.gamma_off + size_t(c)] = 1.0;
                p.stats[op.var_off + size_t(c)] = 1.0;
            }
        }
    }
    return p;
}

struct ForwardOptions {
    bool training = false;
    bool update_running_stats = false;
};

struct ActivationTape {
    ForwardOptions opts;
    std::vector<Tensor> slots;
    std::vector<std::vector<int>> pool_argmax;          // per op
    std::vector<std::vector<double>> bn_mean, bn_inv_std;  // per op
};

// Returns N x feature_dim. The tape holds every slot value plus per-op aux
// data; backward requires a tape from a matching forward.
inline Eigen::MatrixXd network_forward(const Network& net, NetworkParams& params,
                                       const Tensor& input, ForwardOptions opts,
                                       ActivationTape& tape) {
    require(input.c == 3, ErrorKind::usage, "network_forward: expected 3-channel input");
    require(input.h == net.config.input_size && input.w == net.config.input_size,
            ErrorKind::usage, "network_forward: input size mismatch");
    require(params.values.size() == net.param_count && params.stats.size() == net.stat_count,
            ErrorKind::usage, "network_forward: parameter layout mismatch");
    tape.opts = opts;
    tape.slots.assign(size_t(net.num_slots), Tensor());
    tape.pool_argmax.assign(net.ops.size(), {});
    tape.bn_mean.assign(net.ops.size(), {});
    tape.bn_inv_std.assign(net.ops.size(), {});
    tape.slots[size_t(net.input_slot)] = input;

    for (size_t oi = 0; oi < net.ops.size(); ++oi) {
        const Op& op = net.ops[oi];
        Tensor& out = tape.slots[size_t(op.output)];
        const Tensor& in0 = tape.slots[size_t(op.inputs[0])];
        switch (op.kind) {
            case OpKind::conv:
                conv2d_forward(in0, &params.values[op.weight_off], &params.values[op.bias_off],
                               op.out_c, op.ksize, op.stride, op.pad, out);
                break;
            case OpKind::batchnorm:
                if (opts.training)
                    batchnorm_forward_train(in0, &params.values[op.gamma_off],
                                            &params.values[op.beta_off], out, tape.bn_mean[oi],
                                            tape.bn_inv_std[oi], &params.stats[op.mean_off],
                                            &params.stats[op.var_off],
                                            opts.update_running_stats);
                else
                    batchnorm_forward_eval(in0, &params.values[op.gamma_off],
                                           &params.values[op.beta_off],
                                           &params.stats[op.mean_off], &params.stats[op.var_off],
                                           out, tape.bn_mean[oi], tape.bn_inv_std[oi]);
                break;
            case OpKind::relu:
                relu_forward(in0, out);
                break;
            case OpKind::maxpool:
                maxpool_forward(in0, out, tape.pool_argmax[oi]);
                break;
            case OpKind::avgpool:
                avgpool_forward(in0, out);
                break;
            case OpKind::global_avgpool:
                global_avgpool_forward(in0, out);
                break;
            case OpKind::concat: {
                std::vector<const Tensor*> xs;
                for (int s : op.inputs) xs.push_back(&tape.slots[size_t(s)]);
                concat_forward(xs, out);
                break;
            }
        }
    }

    const Tensor& feat = tape.slots[size_t(net.feature_slot)];
    Eigen::MatrixXd out(feat.n, feat.c);
    for (int n = 0; n < feat.n; ++n)
        for (int c = 0; c < feat.c; ++c) out(n, c) = feat.at(n, c, 0, 0);
    return out;
}

// Exact reverse-mode sweep; d_features is N x feature_dim. Returns the flat
// parameter gradient.
inline std::vector<double> network_backward(const Network& net, const NetworkParams& params,
                                            const ActivationTape& tape,
                                            const Eigen::MatrixXd& d_features) {
    std::vector<double> grads(net.param_count, 0.0);
    std::vector<Tensor> dslots(size_t(net.num_slots));
    for (int s = 0; s < net.num_slots; ++s) {
        const Tensor& t = tape.slots[size_t(s)];
        dslots[size_t(s)] = Tensor(t.n, t.c, t.h, t.w);
    }
    Tensor& dfeat = dslots[size_t(net.feature_slot)];
    require(d_features.rows() == dfeat.n && d_features.cols() == dfeat.c, ErrorKind::usage,
            "network_backward: feature gradient shape mismatch");
    for (int n = 0; n < dfeat.n; ++n)
        for (int c = 0; c < dfeat.c; ++c) dfeat.at(n, c, 0, 0) = d_features(n, c);

    for (size_t ri = net.ops.size(); ri-- > 0;) {
        const Op& op = net.ops[ri];
        const Tensor& dy = dslots[size_t(op.output)];
        const Tensor& in0 = tape.slots[size_t(op.inputs[0])];
        Tensor& dx0 = dslots[size_t(op.inputs[0])];
        switch (op.kind) {
            case OpKind::conv:
                conv2d_backward(in0, &params.values[op.weight_off], op.out_c, op.ksize,
                                op.stride, op.pad, dy, dx0, &grads[op.weight_off],
                                &grads[op.bias_off]);
                break;
            case OpKind::batchnorm:
                batchnorm_backward(in0, dy, &params.values[op.gamma_off], tape.bn_mean[ri],
                                   tape.bn_inv_std[ri], tape.opts.training, dx0,
                                   &grads[op.gamma_off], &grads[op.beta_off]);
                break;
            case OpKind::relu:
                relu_backward(in0, dy, dx0);
                break;
            case OpKind::maxpool:
                maxpool_backward(in0, dy, tape.pool_argmax[ri], dx0);
                break;
            case OpKind::avgpool:
                avgpool_backward(in0, dy, dx0);
                break;
            case OpKind::global_avgpool:
                global_avgpool_backward(in0, dy, dx0);
                break;
            case OpKind::concat: {
                std::vector<Tensor*> dxs;
                for (int s : op.inputs) dxs.push_back(&dslots[size_t(s)]);
                concat_backward(dxs, dy);
                break;
            }
        }
    }
    return grads;
}

// Realized channel widths read back from a forward tape; the acceptance
// oracle compares these against the closed-form trace.
inline ChannelTrace realized_trace(const Network& net, const ActivationTape& tape) {
    ChannelTrace tr;
    tr.layer_input_channels.resize(net.config.block_sizes.size());
    auto channels_of = [&](int slot) { return tape.slots[size_t(slot)].c; };
    for (const Op& op : net.ops) {
        if (op.name == "stem.conv") tr.stem_out = channels_of(op.output);
        if (op.kind == OpKind::concat) {
            size_t bpos = op.name.find("block");
            size_t b = size_t(std::stoi(op.name.substr(bpos + 5)));
            if (op.name.find(".layer") != std::string::npos)
                tr.layer_input_channels[b].push_back(channels_of(op.output));
            else if (op.name.find(".output") != std::string::npos) {
                if (tr.block_output_channels.size() <= b)
                    tr.block_output_channels.resize(b + 1);
                tr.block_output_channels[b] = channels_of(op.output);
            }
        }
        if (op.kind == OpKind::avgpool && op.name.find("transition") != std::string::npos)
            tr.transition_output_channels.push_back(channels_of(op.output));
    }
    tr.final_channels = channels_of(net.feature_slot);
    return tr;
}

}  // namespace coalsort::nn

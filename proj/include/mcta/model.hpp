// Copyright (c) 2026 the mcta authors.
// Licensed under the Apache License, Version 2.0.
//
// The multi-channel temporal attention network: an embedding stack that
// collapses the mel axis and downsamples time, a 1x1-conv attention block
// with per-channel temporal weights (plus single-channel and no-attention
// ablation variants), and a linear classifier head.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcta/adam.hpp"
#include "mcta/errors.hpp"
#include "mcta/feature_cache.hpp"
#include "mcta/ops.hpp"
#include "mcta/rng.hpp"
#include "mcta/tensor.hpp"

namespace mcta {

enum class AttentionMode { Mcta, SingleChannel, NoAttention };

inline std::string to_string(AttentionMode m) {
    switch (m) {
        case AttentionMode::Mcta: return "mcta";
        case AttentionMode::SingleChannel: return "single";
        case AttentionMode::NoAttention: return "none";
    }
    return "?";
}

inline AttentionMode attention_mode_from(const std::string& s) {
    if (s == "mcta") return AttentionMode::Mcta;
    if (s == "single") return AttentionMode::SingleChannel;
    if (s == "none") return AttentionMode::NoAttention;
    throw InvalidInputError("unknown attention mode '" + s + "' (expected mcta|single|none)");
}

// Embedding stack: two conv blocks (conv-BN-ELU x2 then max-pool) and a final
// valid conv-BN-ELU that collapses the remaining frequency bins.
struct EmbeddingConfig {
    int block1_filters = 48;
    int block2_filters = 96;
    std::pair<std::int64_t, std::int64_t> conv_kernel{3, 3};  // same padding
    std::pair<std::int64_t, std::int64_t> pool1{2, 8};        // kernel == stride
    std::pair<std::int64_t, std::int64_t> pool2{2, 4};
    std::pair<std::int64_t, std::int64_t> final_kernel{5, 4};
    std::pair<std::int64_t, std::int64_t> final_stride{2, 1};
};

struct ModelConfig {
    int hidden_channels = 512;
    AttentionMode attention_mode = AttentionMode::Mcta;
    bool shared_attention_conv = true;
    double dropout_rate = 0.3;
    int num_classes = 50;
    int in_channels = 3;
    int mel_bins = 128;
    EmbeddingConfig embedding;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;

    void validate() const {
        if (hidden_channels < 1) throw InvalidInputError("model: hidden_channels must be positive");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
            throw InvalidInputError("model: dropout_rate must lie in [0, 1)");
        }
        if (num_classes < 2) throw InvalidInputError("model: num_classes must be >= 2");
    }
};

inline constexpr double kAttentionNormEps = 1e-8;

namespace detail {

inline std::int64_t pool_out(std::int64_t n, std::int64_t k, std::int64_t s) { return (n - k) / s + 1; }

}  // namespace detail

// Output time/frequency extent of the embedding for a given input extent,
// or -1 when the stack does not fit.
inline std::int64_t embed_out_extent(std::int64_t n, std::int64_t pool1, std::int64_t pool2,
                                     std::int64_t final_kernel, std::int64_t final_stride) {
    if (n < pool1) return -1;
    n = detail::pool_out(n, pool1, pool1);
    if (n < pool2) return -1;
    n = detail::pool_out(n, pool2, pool2);
    if (n < final_kernel) return -1;
    return detail::pool_out(n, final_kernel, final_stride);
}

inline std::int64_t embed_out_frames(const EmbeddingConfig& e, std::int64_t frames) {
    return embed_out_extent(frames, e.pool1.first, e.pool2.first, e.final_kernel.first, e.final_stride.first);
}

inline std::int64_t embed_out_mels(const EmbeddingConfig& e, std::int64_t mels) {
    return embed_out_extent(mels, e.pool1.second, e.pool2.second, e.final_kernel.second,
                            e.final_stride.second);
}

// Attention block outputs, kept around for introspection and tests.
template <class T>
struct AttentionOutputs {
    TensorPtr<T> weights;      // A: B x C' x T' x 1 (B x 1 x T' x 1 in single mode)
    TensorPtr<T> linear;       // X'_L
    TensorPtr<T> attended;     // X'_A
    TensorPtr<T> hidden_pre;   // H before the closing BN+ReLU, B x C'
    TensorPtr<T> hidden;       // H after BN+ReLU, B x C'
};

template <class T>
class MctaModel {
public:
    MctaModel(ModelConfig config, std::uint64_t init_seed) : cfg_(std::move(config)) {
        cfg_.validate();
        Rng rng(derive_seed(init_seed, "model-init"));
        const auto& e = cfg_.embedding;
        const int c1 = e.block1_filters, c2 = e.block2_filters, ch = cfg_.hidden_channels;

        conv1_w_ = he_init({c1, cfg_.in_channels, e.conv_kernel.first, e.conv_kernel.second}, rng);
        conv1_b_ = Tensor<T>::zeros({c1}, true);
        conv2_w_ = he_init({c1, c1, e.conv_kernel.first, e.conv_kernel.second}, rng);
        conv2_b_ = Tensor<T>::zeros({c1}, true);
        conv3_w_ = he_init({c2, c1, e.conv_kernel.first, e.conv_kernel.second}, rng);
        conv3_b_ = Tensor<T>::zeros({c2}, true);
        conv4_w_ = he_init({c2, c2, e.conv_kernel.first, e.conv_kernel.second}, rng);
        conv4_b_ = Tensor<T>::zeros({c2}, true);
        conv5_w_ = he_init({ch, c2, e.final_kernel.first, e.final_kernel.second}, rng);
        conv5_b_ = Tensor<T>::zeros({ch}, true);
        att_w_ = he_init({ch, ch, 1, 1}, rng);
        att_b_ = Tensor<T>::zeros({ch}, true);
        if (!cfg_.shared_attention_conv) {
            att2_w_ = he_init({ch, ch, 1, 1}, rng);
            att2_b_ = Tensor<T>::zeros({ch}, true);
        }
        fc_w_ = he_init({cfg_.num_classes, ch}, rng);
        fc_b_ = Tensor<T>::zeros({cfg_.num_classes}, true);

        const T mom = static_cast<T>(cfg_.bn_momentum);
        const T eps = static_cast<T>(cfg_.bn_epsilon);
        bn1_ = BatchNormState<T>::make(c1, mom, eps);
        bn2_ = BatchNormState<T>::make(c1, mom, eps);
        bn3_ = BatchNormState<T>::make(c2, mom, eps);
        bn4_ = BatchNormState<T>::make(c2, mom, eps);
        bn5_ = BatchNormState<T>::make(ch, mom, eps);
        bn_h_ = BatchNormState<T>::make(ch, mom, eps);
    }

    const ModelConfig& config() const { return cfg_; }

    // Embedding: B x Cin x T x F -> B x C' x T' x 1.
    TensorPtr<T> embed(const TensorPtr<T>& x, Phase phase) {
        detail::check_rank(x->shape(), 4, "embed", "input");
        const auto& e = cfg_.embedding;
        if (x->dim(1) != cfg_.in_channels) {
            throw ShapeError("embed: channel axis has " + std::to_string(x->dim(1)) + " channels, expected " +
                             std::to_string(cfg_.in_channels));
        }
        if (embed_out_frames(e, x->dim(2)) < 1) {
            throw InvalidInputError("embed: input has too few time frames (" + std::to_string(x->dim(2)) +
                                    ") for the pooling stack");
        }
        if (embed_out_mels(e, x->dim(3)) < 1) {
            throw InvalidInputError("embed: input has too few frequency bins (" + std::to_string(x->dim(3)) +
                                    ") for the pooling stack");
        }
        const std::pair<std::int64_t, std::int64_t> same{e.conv_kernel.first / 2, e.conv_kernel.second / 2};
        auto h = elu(batchnorm(conv2d(x, conv1_w_, conv1_b_, {1, 1}, same), bn1_, phase));
        h = elu(batchnorm(conv2d(h, conv2_w_, conv2_b_, {1, 1}, same), bn2_, phase));
        h = maxpool2d(h, e.pool1, e.pool1);
        h = elu(batchnorm(conv2d(h, conv3_w_, conv3_b_, {1, 1}, same), bn3_, phase));
        h = elu(batchnorm(conv2d(h, conv4_w_, conv4_b_, {1, 1}, same), bn4_, phase));
        h = maxpool2d(h, e.pool2, e.pool2);
        h = elu(batchnorm(conv2d(h, conv5_w_, conv5_b_, e.final_stride, {0, 0}), bn5_, phase));
        if (h->dim(3) != 1) {
            throw InvalidInputError("embed: frequency axis must collapse to 1, got " +
                                    std::to_string(h->dim(3)));
        }
        return h;
    }

    // Attention weights for embedded features. MCTA: per-channel sigmoid map
    // normalized over time. SingleChannel: channel-mean of the sigmoid map,
    // then the same normalization. NoAttention: constant ones.
    TensorPtr<T> attention_weights(const TensorPtr<T>& embedded, AttentionMode mode) {
        if (mode == AttentionMode::NoAttention) {
            // "Divide by itself" semantics without the 0/0 hazard.
            return Tensor<T>::full(embedded->shape(), T{1});
        }
        auto smap = sigmoid(attention_conv(embedded));
        if (mode == AttentionMode::SingleChannel) {
            const T inv_c = T{1} / static_cast<T>(embedded->dim(1));
            smap = scale(reduce_sum(smap, 1, true), inv_c);  // B x 1 x T' x 1
        }
        auto denom = reduce_sum(smap, 2, true);
        denom = shift(denom, static_cast<T>(kAttentionNormEps));
        return divide(smap, denom);
    }

    AttentionOutputs<T> attend(const TensorPtr<T>& embedded, Phase phase) {
        AttentionOutputs<T> out;
        out.weights = attention_weights(embedded, cfg_.attention_mode);
        out.linear = linear_branch(embedded);
        out.attended = hadamard(out.linear, out.weights);
        auto pooled = reduce_sum(out.attended, 2, false);  // B x C' x 1
        out.hidden_pre = reshape(pooled, {pooled->dim(0), pooled->dim(1)});
        out.hidden = relu(batchnorm(out.hidden_pre, bn_h_, phase));
        return out;
    }

    TensorPtr<T> forward(const TensorPtr<T>& x, Phase phase, Rng& dropout_rng) {
        auto embedded = embed(x, phase);
        auto att = attend(embedded, phase);
        auto head = dropout(att.hidden, cfg_.dropout_rate, phase, dropout_rng);
        return linear(head, fc_w_, fc_b_);
    }

    // Eval-phase logits without a dropout stream.
    TensorPtr<T> infer(const TensorPtr<T>& x) {
        Rng unused(0);
        return forward(x, Phase::Eval, unused);
    }

    // Eval-phase attention weights for raw inputs: B x C' x T' x 1
    // (B x 1 x T' x 1 in single-channel mode, constant 1 in no-attention).
    TensorPtr<T> attention_map(const TensorPtr<T>& x) {
        return attention_weights(embed(x, Phase::Eval), cfg_.attention_mode);
    }

    // Named learnable parameters, in a stable order.
    std::vector<std::pair<std::string, TensorPtr<T>>> named_parameters() {
        std::vector<std::pair<std::string, TensorPtr<T>>> out = {
            {"conv1.w", conv1_w_}, {"conv1.b", conv1_b_}, {"bn1.gamma", bn1_.gamma}, {"bn1.beta", bn1_.beta},
            {"conv2.w", conv2_w_}, {"conv2.b", conv2_b_}, {"bn2.gamma", bn2_.gamma}, {"bn2.beta", bn2_.beta},
            {"conv3.w", conv3_w_}, {"conv3.b", conv3_b_}, {"bn3.gamma", bn3_.gamma}, {"bn3.beta", bn3_.beta},
            {"conv4.w", conv4_w_}, {"conv4.b", conv4_b_}, {"bn4.gamma", bn4_.gamma}, {"bn4.beta", bn4_.beta},
            {"conv5.w", conv5_w_}, {"conv5.b", conv5_b_}, {"bn5.gamma", bn5_.gamma}, {"bn5.beta", bn5_.beta},
            {"att.w", att_w_},     {"att.b", att_b_},
        };
        if (!cfg_.shared_attention_conv) {
            out.emplace_back("att2.w", att2_w_);
            out.emplace_back("att2.b", att2_b_);
        }
        out.emplace_back("bnh.gamma", bn_h_.gamma);
        out.emplace_back("bnh.beta", bn_h_.beta);
        out.emplace_back("fc.w", fc_w_);
        out.emplace_back("fc.b", fc_b_);
        return out;
    }

    std::vector<TensorPtr<T>> parameters() {
        std::vector<TensorPtr<T>> out;
        for (auto& [name, p] : named_parameters()) out.push_back(p);
        return out;
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (auto& p : parameters()) n += p->size();
        return n;
    }

    // Running statistics, saved with checkpoints but not trained.
    std::vector<std::pair<std::string, std::vector<T>*>> named_buffers() {
        return {
            {"bn1.running_mean", &bn1_.running_mean}, {"bn1.running_var", &bn1_.running_var},
            {"bn2.running_mean", &bn2_.running_mean}, {"bn2.running_var", &bn2_.running_var},
            {"bn3.running_mean", &bn3_.running_mean}, {"bn3.running_var", &bn3_.running_var},
            {"bn4.running_mean", &bn4_.running_mean}, {"bn4.running_var", &bn4_.running_var},
            {"bn5.running_mean", &bn5_.running_mean}, {"bn5.running_var", &bn5_.running_var},
            {"bnh.running_mean", &bn_h_.running_mean}, {"bnh.running_var", &bn_h_.running_var},
        };
    }

    BatchNormState<T>& hidden_bn() { return bn_h_; }

private:
    TensorPtr<T> attention_conv(const TensorPtr<T>& x) {
        return conv2d(x, att_w_, att_b_);
    }

    TensorPtr<T> linear_branch(const TensorPtr<T>& x) {
        // Shared weights by default: the linear branch reuses the attention
        // branch's convolution without the sigmoid.
        if (cfg_.shared_attention_conv) return conv2d(x, att_w_, att_b_);
        return conv2d(x, att2_w_, att2_b_);
    }

    // out = x + c (used for the normalization epsilon)
    static TensorPtr<T> shift(const TensorPtr<T>& x, T c) {
        auto out = Tensor<T>::zeros(x->shape(), x->requires_grad());
        for (std::size_t i = 0; i < x->data().size(); ++i) out->data()[i] = x->data()[i] + c;
        if (out->requires_grad()) {
            out->attach({x}, [x](Tensor<T>& node) {
                const std::vector<T>& go = node.grad();
                std::vector<T>& gx = x->grad();
                for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
            });
        }
        return out;
    }

    static TensorPtr<T> he_init(Shape shape, Rng& rng) {
        std::int64_t fan_in = 1;
        for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
        const T stddev = static_cast<T>(std::sqrt(2.0 / static_cast<double>(fan_in)));
        return Tensor<T>::randn(std::move(shape), rng, stddev, true);
    }

    ModelConfig cfg_;
    TensorPtr<T> conv1_w_, conv1_b_, conv2_w_, conv2_b_, conv3_w_, conv3_b_, conv4_w_, conv4_b_;
    TensorPtr<T> conv5_w_, conv5_b_;
    TensorPtr<T> att_w_, att_b_, att2_w_, att2_b_;
    TensorPtr<T> fc_w_, fc_b_;
    BatchNormState<T> bn1_, bn2_, bn3_, bn4_, bn5_, bn_h_;
};

// ---------------------------------------------------------------------------
// Checkpoints: a key-value header describing the config, then named tensor
// blobs (parameters and running statistics) in the cache format.

inline constexpr char kCheckpointMagic[8] = {'M', 'C', 'T', 'A', 'C', 'K', 'P', '\x01'};

namespace detail {

inline void write_string(std::ostream& out, const std::string& s) {
    write_u32_le(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in) {
    const std::uint32_t n = read_u32_le(in, "string length");
    if (n > (1u << 20)) throw ParseError("checkpoint: implausible string length");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw ParseError("checkpoint: truncated string");
    return s;
}

}  // namespace detail

inline std::map<std::string, std::string> model_config_kv(const ModelConfig& c) {
    std::map<std::string, std::string> kv;
    auto put = [&](const std::string& k, auto v) {
        std::ostringstream os;
        os << v;
        kv[k] = os.str();
    };
    put("model.hidden_channels", c.hidden_channels);
    kv["model.attention_mode"] = to_string(c.attention_mode);
    put("model.shared_attention_conv", c.shared_attention_conv ? 1 : 0);
    put("model.dropout", c.dropout_rate);
    put("model.num_classes", c.num_classes);
    put("model.in_channels", c.in_channels);
    put("model.mel_bins", c.mel_bins);
    put("embed.block1_filters", c.embedding.block1_filters);
    put("embed.block2_filters", c.embedding.block2_filters);
    put("embed.conv_kernel_t", c.embedding.conv_kernel.first);
    put("embed.conv_kernel_f", c.embedding.conv_kernel.second);
    put("embed.pool1_t", c.embedding.pool1.first);
    put("embed.pool1_f", c.embedding.pool1.second);
    put("embed.pool2_t", c.embedding.pool2.first);
    put("embed.pool2_f", c.embedding.pool2.second);
    put("embed.final_kernel_t", c.embedding.final_kernel.first);
    put("embed.final_kernel_f", c.embedding.final_kernel.second);
    put("embed.final_stride_t", c.embedding.final_stride.first);
    put("embed.final_stride_f", c.embedding.final_stride.second);
    put("bn.momentum", c.bn_momentum);
    put("bn.epsilon", c.bn_epsilon);
    return kv;
}

inline ModelConfig model_config_from_kv(const std::map<std::string, std::string>& kv) {
    ModelConfig c;
    auto get = [&](const std::string& k) -> const std::string& {
        auto it = kv.find(k);
        if (it == kv.end()) throw ParseError("checkpoint: missing config key '" + k + "'");
        return it->second;
    };
    c.hidden_channels = std::stoi(get("model.hidden_channels"));
    c.attention_mode = attention_mode_from(get("model.attention_mode"));
    c.shared_attention_conv = get("model.shared_attention_conv") == "1";
    c.dropout_rate = std::stod(get("model.dropout"));
    c.num_classes = std::stoi(get("model.num_classes"));
    c.in_channels = std::stoi(get("model.in_channels"));
    c.mel_bins = std::stoi(get("model.mel_bins"));
    c.embedding.block1_filters = std::stoi(get("embed.block1_filters"));
    c.embedding.block2_filters = std::stoi(get("embed.block2_filters"));
    c.embedding.conv_kernel = {std::stoll(get("embed.conv_kernel_t")), std::stoll(get("embed.conv_kernel_f"))};
    c.embedding.pool1 = {std::stoll(get("embed.pool1_t")), std::stoll(get("embed.pool1_f"))};
    c.embedding.pool2 = {std::stoll(get("embed.pool2_t")), std::stoll(get("embed.pool2_f"))};
    c.embedding.final_kernel = {std::stoll(get("embed.final_kernel_t")), std::stoll(get("embed.final_kernel_f"))};
    c.embedding.final_stride = {std::stoll(get("embed.final_stride_t")), std::stoll(get("embed.final_stride_f"))};
    c.bn_momentum = std::stod(get("bn.momentum"));
    c.bn_epsilon = std::stod(get("bn.epsilon"));
    return c;
}

template <class T>
void save_checkpoint(const std::string& path, MctaModel<T>& model) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("save_checkpoint: cannot open '" + tmp + "'");
        out.write(kCheckpointMagic, 8);
        const auto kv = model_config_kv(model.config());
        detail::write_u32_le(out, static_cast<std::uint32_t>(kv.size()));
        for (const auto& [k, v] : kv) {
            detail::write_string(out, k);
            detail::write_string(out, v);
        }
        auto params = model.named_parameters();
        auto buffers = model.named_buffers();
        detail::write_u32_le(out, static_cast<std::uint32_t>(params.size() + buffers.size()));
        for (auto& [name, p] : params) {
            detail::write_string(out, name);
            TensorBlob blob;
            for (auto d : p->shape()) blob.dims.push_back(static_cast<std::uint32_t>(d));
            blob.values.assign(p->data().begin(), p->data().end());
            write_blob(out, blob);
        }
        for (auto& [name, buf] : buffers) {
            detail::write_string(out, name);
            TensorBlob blob;
            blob.dims = {static_cast<std::uint32_t>(buf->size())};
            blob.values.assign(buf->begin(), buf->end());
            write_blob(out, blob);
        }
        if (!out) throw IoError("save_checkpoint: short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("save_checkpoint: rename to '" + path + "' failed: " + ec.message());
}

template <class T>
MctaModel<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        throw ParseError("load_checkpoint: '" + path + "' is not a checkpoint (bad magic/version)");
    }
    const std::uint32_t nkv = detail::read_u32_le(in, "config count");
    std::map<std::string, std::string> kv;
    for (std::uint32_t i = 0; i < nkv; ++i) {
        auto k = detail::read_string(in);
        kv[k] = detail::read_string(in);
    }
    MctaModel<T> model(model_config_from_kv(kv), 0);

    std::map<std::string, TensorBlob> blobs;
    const std::uint32_t ntensors = detail::read_u32_le(in, "tensor count");
    for (std::uint32_t i = 0; i < ntensors; ++i) {
        auto name = detail::read_string(in);
        blobs[name] = read_blob(in);
    }
    for (auto& [name, p] : model.named_parameters()) {
        auto it = blobs.find(name);
        if (it == blobs.end()) throw ParseError("load_checkpoint: missing parameter '" + name + "'");
        if (static_cast<std::int64_t>(it->second.values.size()) != p->size()) {
            throw ParseError("load_checkpoint: parameter '" + name + "' has wrong size");
        }
        for (std::size_t j = 0; j < it->second.values.size(); ++j) {
            p->data()[j] = static_cast<T>(it->second.values[j]);
        }
    }
    for (auto& [name, buf] : model.named_buffers()) {
        auto it = blobs.find(name);
        if (it == blobs.end()) throw ParseError("load_checkpoint: missing buffer '" + name + "'");
        if (it->second.values.size() != buf->size()) {
            throw ParseError("load_checkpoint: buffer '" + name + "' has wrong size");
        }
        for (std::size_t j = 0; j < it->second.values.size(); ++j) {
            (*buf)[j] = static_cast<T>(it->second.values[j]);
        }
    }
    return model;
}

}  // namespace mcta

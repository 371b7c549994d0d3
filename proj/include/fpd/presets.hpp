#pragma once

#include <string>
#include <vector>

#include "fpd/model.hpp"

namespace fpd {

// ---------------------------------------------------------------------------
// Feed-forward networks over the structured modalities.

enum class FnnVariant { Coords, Blendshapes };

struct FnnConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> layer_sizes;  // four widths, last is 2
    double dropout_p = 0.5;
    FnnVariant variant = FnnVariant::Coords;

    static FnnConfig coords_preset() { return {250, {128, 64, 32, 2}, 0.5, FnnVariant::Coords}; }
    static FnnConfig blendshapes_preset() {
        return {52, {64, 32, 10, 2}, 0.5, FnnVariant::Blendshapes};
    }
};

// FC1 -> dropout -> ReLU -> FC2 -> batchnorm1d -> ReLU -> FC3 -> ReLU ->
// FC4 -> sigmoid, with taps hidden1/hidden2/hidden3 on the hidden
// activations. He init on the ReLU-facing layers, Xavier on the output.
template <typename S>
Model<S> build_fnn(const FnnConfig& cfg, Rng& rng) {
    if (cfg.layer_sizes.size() != 4)
        raise(ErrorCategory::Config, "fnn needs exactly 4 layer sizes, got " +
                                         std::to_string(cfg.layer_sizes.size()));
    if (cfg.layer_sizes.back() != 2)
        raise(ErrorCategory::Config, "fnn output layer must have 2 units");
    if (cfg.input_dim == 0) raise(ErrorCategory::Config, "fnn input_dim must be positive");

    const auto& h = cfg.layer_sizes;
    Model<S> m;
    m.template emplace<Dense<S>>(cfg.input_dim, h[0], "fc1", rng, Init::HeNormal);
    m.template emplace<Dropout<S>>(cfg.dropout_p);
    m.template emplace<Relu<S>>();
    m.register_tap("hidden1", m.layers.size() - 1, h[0]);
    m.template emplace<Dense<S>>(h[0], h[1], "fc2", rng, Init::HeNormal);
    m.template emplace<BatchNorm<S>>(h[1], "bn2");
    m.template emplace<Relu<S>>();
    m.register_tap("hidden2", m.layers.size() - 1, h[1]);
    m.template emplace<Dense<S>>(h[1], h[2], "fc3", rng, Init::HeNormal);
    m.template emplace<Relu<S>>();
    m.register_tap("hidden3", m.layers.size() - 1, h[2]);
    m.template emplace<Dense<S>>(h[2], h[3], "fc4", rng, Init::XavierUniform);
    m.template emplace<Sigmoid<S>>();
    m.default_tap = "hidden3";
    m.check_unique_names();
    return m;
}

// ---------------------------------------------------------------------------
// Residual CNN over the image modalities.

struct BackboneConfig {
    std::vector<std::size_t> blocks_per_stage{2, 2, 2, 2};
    std::size_t base_channels = 16;
    bool bottleneck = false;
    std::size_t in_channels = 3;
    std::size_t head_hidden = 512;
    double dropout_p = 0.5;

    // shallow desk-scale default: basic blocks, 16 base channels
    static BackboneConfig desk() { return {}; }
    // mirrors the 50-layer bottleneck stage pattern
    static BackboneConfig reference() { return {{3, 4, 6, 3}, 64, true, 3, 512, 0.5}; }
    // small enough to train inside tests
    static BackboneConfig tiny(std::size_t in_channels = 3) {
        return {{1, 1}, 8, false, in_channels, 512, 0.5};
    }
};

// Stem -> residual stages -> global average pool -> FC(head_hidden) -> ReLU
// -> dropout -> batchnorm1d -> FC(2) -> sigmoid. The post-ReLU head vector
// is the default "embedding" tap. Input sides must be even (strided convs
// use even kernels so extents divide exactly).
template <typename S>
Model<S> build_cnn(const BackboneConfig& cfg, Rng& rng) {
    if (cfg.blocks_per_stage.empty())
        raise(ErrorCategory::Config, "backbone needs at least one stage");
    for (std::size_t n : cfg.blocks_per_stage)
        if (n == 0) raise(ErrorCategory::Config, "backbone stage with zero blocks");
    if (cfg.base_channels == 0 || cfg.head_hidden == 0 || cfg.in_channels == 0)
        raise(ErrorCategory::Config, "backbone channel/head sizes must be positive");

    Model<S> m;
    std::size_t ch = cfg.base_channels;
    if (cfg.bottleneck) {
        m.template emplace<Conv2d<S>>(cfg.in_channels, ch, 6, 2, 2, "stem", rng);
        m.template emplace<BatchNorm<S>>(ch, "stem_bn");
        m.template emplace<Relu<S>>();
        m.template emplace<MaxPool2d<S>>(2, 2, 0);
    } else {
        m.template emplace<Conv2d<S>>(cfg.in_channels, ch, 4, 2, 1, "stem", rng);
        m.template emplace<BatchNorm<S>>(ch, "stem_bn");
        m.template emplace<Relu<S>>();
    }

    for (std::size_t stage = 0; stage < cfg.blocks_per_stage.size(); ++stage) {
        const std::size_t mid = cfg.base_channels << stage;
        for (std::size_t b = 0; b < cfg.blocks_per_stage[stage]; ++b) {
            const std::size_t stride = (stage > 0 && b == 0) ? 2 : 1;
            const std::string name =
                "stage" + std::to_string(stage + 1) + ".block" + std::to_string(b + 1);
            auto* block =
                m.template emplace<ResidualBlock<S>>(ch, mid, stride, cfg.bottleneck, name, rng);
            ch = block->out_channels();
        }
    }

    m.template emplace<GlobalAvgPool<S>>();
    m.template emplace<Dense<S>>(ch, cfg.head_hidden, "head_fc1", rng, Init::HeNormal);
    m.template emplace<Relu<S>>();
    m.register_tap("embedding", m.layers.size() - 1, cfg.head_hidden);
    m.template emplace<Dropout<S>>(cfg.dropout_p);
    m.template emplace<BatchNorm<S>>(cfg.head_hidden, "head_bn");
    m.template emplace<Dense<S>>(cfg.head_hidden, 2, "head_fc2", rng, Init::XavierUniform);
    m.template emplace<Sigmoid<S>>();
    m.default_tap = "embedding";
    m.check_unique_names();
    return m;
}

// Single backbone over the 6-channel [RGB | replicated BnW] stack.
template <typename S>
Model<S> build_dual_image_cnn(BackboneConfig cfg, Rng& rng) {
    cfg.in_channels = 6;
    return build_cnn<S>(cfg, rng);
}

// ---------------------------------------------------------------------------
// Early-fusion head over two concatenated unimodal embeddings.

struct EarlyFusionConfig {
    std::size_t tap_a_dim = 512;  // CNN "embedding" default
    std::size_t tap_b_dim = 10;   // blendshape FNN "hidden3" default
    std::vector<std::size_t> head_sizes{256, 128, 64, 2};
    double dropout_p = 0.5;

    std::size_t input_dim() const { return tap_a_dim + tap_b_dim; }
};

// FC1 -> ReLU -> dropout -> FC2 -> ReLU -> dropout -> FC3 -> ReLU ->
// batchnorm1d -> FC4 -> sigmoid, consuming [emb_a | emb_b].
template <typename S>
Model<S> build_early_fusion(const EarlyFusionConfig& cfg, Rng& rng) {
    if (cfg.head_sizes.size() != 4)
        raise(ErrorCategory::Config, "early fusion head needs exactly 4 layer sizes");
    if (cfg.head_sizes.back() != 2)
        raise(ErrorCategory::Config, "early fusion output layer must have 2 units");
    if (cfg.tap_a_dim == 0 || cfg.tap_b_dim == 0)
        raise(ErrorCategory::Config, "early fusion tap dimensions must be positive");

    const auto& h = cfg.head_sizes;
    Model<S> m;
    m.template emplace<Dense<S>>(cfg.input_dim(), h[0], "ef_fc1", rng, Init::HeNormal);
    m.template emplace<Relu<S>>();
    m.template emplace<Dropout<S>>(cfg.dropout_p);
    m.template emplace<Dense<S>>(h[0], h[1], "ef_fc2", rng, Init::HeNormal);
    m.template emplace<Relu<S>>();
    m.template emplace<Dropout<S>>(cfg.dropout_p);
    m.template emplace<Dense<S>>(h[1], h[2], "ef_fc3", rng, Init::HeNormal);
    m.template emplace<Relu<S>>();
    m.template emplace<BatchNorm<S>>(h[2], "ef_bn3");
    m.template emplace<Dense<S>>(h[2], h[3], "ef_fc4", rng, Init::XavierUniform);
    m.template emplace<Sigmoid<S>>();
    m.check_unique_names();
    return m;
}

// Row-wise [a | b] concatenation feeding the early-fusion head.
template <typename S>
Tensor<S> concat_embeddings(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
        raise(ErrorCategory::Shape, "concat: incompatible embeddings " + shape_string(a.shape()) +
                                        " and " + shape_string(b.shape()));
    const std::size_t B = a.dim(0), da = a.dim(1), db = b.dim(1);
    Tensor<S> out({B, da + db});
    for (std::size_t r = 0; r < B; ++r) {
        for (std::size_t i = 0; i < da; ++i) out.at(r, i) = a.at(r, i);
        for (std::size_t i = 0; i < db; ++i) out.at(r, da + i) = b.at(r, i);
    }
    return out;
}

}  // namespace fpd

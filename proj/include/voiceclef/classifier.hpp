#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "voiceclef/features.hpp"
#include "voiceclef/nn.hpp"

namespace voiceclef::clf {

struct InvalidArch : Error {
    using Error::Error;
};
struct EmptyDataset : Error {
    using Error::Error;
};
struct DivergedLoss : Error {
    using Error::Error;
};
struct BadMagic : Error {
    using Error::Error;
};
struct VersionMismatch : Error {
    using Error::Error;
};
struct TruncatedFile : Error {
    using Error::Error;
};

enum class ConvActivation { tanh, relu };

/// Architecture of the single-conv-layer classifier. Every parameter shape is
/// derivable from this alone.
struct ArchConfig {
    int in_rows = 128;    // coefficient rows of the input tensor
    int in_frames = 48;   // time frames
    int conv_channels = 8;
    ConvActivation conv_activation = ConvActivation::tanh;
    double dropout_p = 0.1;
    int hidden1 = 256;
    int hidden2 = 64;
    int n_classes = 4;

    std::size_t flatten_size() const {
        return static_cast<std::size_t>(conv_channels) * (in_rows - 2) * (in_frames - 2);
    }
    void validate() const;
};

/// conv_channels = 8 over a 1x34x34 input flattens to 8*32*32 = 8192, the
/// layer width the dense stack was originally sized against.
ArchConfig arch_preset_flat8192();

/// Learnable parameters in declaration (serialization) order.
template <typename S>
struct NetParams {
    nn::TensorT<S> conv_k, conv_b, w1, b1, w2, b2, w3, b3;

    std::vector<nn::TensorT<S>*> all() { return {&conv_k, &conv_b, &w1, &b1, &w2, &b2, &w3, &b3}; }
    std::vector<const nn::TensorT<S>*> all() const {
        return {&conv_k, &conv_b, &w1, &b1, &w2, &b2, &w3, &b3};
    }

    void allocate(const ArchConfig& a) {
        const std::size_t flat = a.flatten_size();
        conv_k = nn::TensorT<S>({static_cast<std::size_t>(a.conv_channels), 1, 3, 3});
        conv_b = nn::TensorT<S>({static_cast<std::size_t>(a.conv_channels)});
        w1 = nn::TensorT<S>({flat, static_cast<std::size_t>(a.hidden1)});
        b1 = nn::TensorT<S>({static_cast<std::size_t>(a.hidden1)});
        w2 = nn::TensorT<S>({static_cast<std::size_t>(a.hidden1), static_cast<std::size_t>(a.hidden2)});
        b2 = nn::TensorT<S>({static_cast<std::size_t>(a.hidden2)});
        w3 = nn::TensorT<S>({static_cast<std::size_t>(a.hidden2), static_cast<std::size_t>(a.n_classes)});
        b3 = nn::TensorT<S>({static_cast<std::size_t>(a.n_classes)});
    }

    void accumulate(const NetParams<S>& other) {
        auto dst = all();
        auto src = other.all();
        for (std::size_t t = 0; t < dst.size(); ++t)
            for (std::size_t i = 0; i < dst[t]->numel(); ++i) dst[t]->at(i) += src[t]->at(i);
    }

    void scale(S factor) {
        for (auto* t : all())
            for (std::size_t i = 0; i < t->numel(); ++i) t->at(i) *= factor;
    }

    void zero() {
        for (auto* t : all()) t->fill(S(0));
    }
};

/// Layer sequence: conv3x3 -> tanh (or relu) -> dropout -> flatten ->
/// dense+ReLU -> dense+ReLU -> dense+softmax. Exactly one conv layer.
template <typename S>
class NetCore {
  public:
    ArchConfig arch;
    NetParams<S> params;

    void init(nn::Rng& rng) {
        arch.validate();
        params.allocate(arch);
        nn::glorot_uniform(params.conv_k, 9, 9ul * arch.conv_channels, rng);
        nn::glorot_uniform(params.w1, arch.flatten_size(), arch.hidden1, rng);
        nn::glorot_uniform(params.w2, arch.hidden1, arch.hidden2, rng);
        nn::glorot_uniform(params.w3, arch.hidden2, arch.n_classes, rng);
        // biases stay zero
    }

    /// Forward pass; records activations for backward(). Dropout fires only
    /// in training mode (rng required then).
    std::vector<S> forward(const nn::TensorT<S>& input, bool training, nn::Rng* rng = nullptr) {
        if (input.shape.size() != 3 || input.shape[0] != 1 ||
            input.shape[1] != static_cast<std::size_t>(arch.in_rows) ||
            input.shape[2] != static_cast<std::size_t>(arch.in_frames))
            throw nn::ShapeMismatch("forward: input shape does not match architecture");
        if (training && rng == nullptr) throw Error("forward: training mode needs an rng");

        Cache c;
        c.input = input;
        c.conv_out = nn::conv2d_forward(input, params.conv_k, params.conv_b);
        c.act_out = arch.conv_activation == ConvActivation::tanh ? nn::tanh_forward(c.conv_out)
                                                                 : nn::relu_forward(c.conv_out);
        const double p = training ? arch.dropout_p : 0.0;
        if (training) {
            auto drop = nn::dropout_forward(c.act_out, p, *rng, true);
            c.dropped = std::move(drop.output);
            c.mask = std::move(drop.mask);
        } else {
            c.dropped = c.act_out;
            c.mask.assign(c.act_out.numel(), S(1));
        }
        nn::TensorT<S> flat({c.dropped.numel()});
        flat.data = c.dropped.data;
        c.flat = std::move(flat);
        c.z1 = nn::dense_forward(c.flat, params.w1, params.b1);
        c.h1 = nn::relu_forward(c.z1);
        c.z2 = nn::dense_forward(c.h1, params.w2, params.b2);
        c.h2 = nn::relu_forward(c.z2);
        c.logits = nn::dense_forward(c.h2, params.w3, params.b3);
        c.probs = nn::softmax(std::span<const S>(c.logits.data));
        cache_ = std::move(c);
        has_cache_ = true;
        return cache_.probs;
    }

    /// Gradients of cross-entropy at the recorded forward pass.
    NetParams<S> backward(std::size_t label) {
        if (!has_cache_) throw nn::NoForwardPass("backward: no recorded forward pass");
        const Cache& c = cache_;
        NetParams<S> g;
        g.allocate(arch);

        nn::TensorT<S> d_logits = nn::softmax_ce_backward(std::span<const S>(c.probs), label);
        auto g3 = nn::dense_backward(c.h2, params.w3, d_logits);
        g.w3 = std::move(g3.w);
        g.b3 = std::move(g3.b);
        auto d_z2 = nn::relu_backward(c.z2, g3.x);
        auto g2 = nn::dense_backward(c.h1, params.w2, d_z2);
        g.w2 = std::move(g2.w);
        g.b2 = std::move(g2.b);
        auto d_z1 = nn::relu_backward(c.z1, g2.x);
        auto g1 = nn::dense_backward(c.flat, params.w1, d_z1);
        g.w1 = std::move(g1.w);
        g.b1 = std::move(g1.b);

        nn::TensorT<S> d_dropped(c.act_out.shape);
        d_dropped.data = g1.x.data;
        auto d_act = nn::dropout_backward(c.mask, d_dropped);
        auto d_conv = arch.conv_activation == ConvActivation::tanh
                          ? nn::tanh_backward(c.act_out, d_act)
                          : nn::relu_backward(c.conv_out, d_act);
        auto gc = nn::conv2d_backward(c.input, params.conv_k, d_conv);
        g.conv_k = std::move(gc.kernels);
        g.conv_b = std::move(gc.bias);
        return g;
    }

    const std::vector<S>& last_probs() const {
        if (!has_cache_) throw nn::NoForwardPass("no recorded forward pass");
        return cache_.probs;
    }

  private:
    struct Cache {
        nn::TensorT<S> input, conv_out, act_out, dropped, flat, z1, h1, z2, h2, logits;
        std::vector<S> mask;
        std::vector<S> probs;
    };
    Cache cache_;
    bool has_cache_ = false;
};

/// Mean loss and mean per-parameter gradients over a batch (gradients of the
/// mean cross-entropy, i.e. the mean of per-sample gradients).
template <typename S>
double batch_gradients(NetCore<S>& net, std::span<const nn::TensorT<S>> inputs,
                       std::span<const std::size_t> labels, nn::Rng& rng, NetParams<S>& grads) {
    if (inputs.empty() || inputs.size() != labels.size())
        throw Error("batch_gradients: empty or misaligned batch");
    grads.allocate(net.arch);
    grads.zero();
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto probs = net.forward(inputs[i], true, &rng);
        loss += nn::cross_entropy(std::span<const S>(probs), labels[i]);
        grads.accumulate(net.backward(labels[i]));
    }
    grads.scale(static_cast<S>(1.0 / static_cast<double>(inputs.size())));
    return loss / static_cast<double>(inputs.size());
}

// ---------------------------------------------------------------------------
// model + training

/// Trained classifier plus everything one-shot inference needs: label names,
/// per-row normalization statistics and the feature configuration the model
/// was trained against.
struct Model {
    ArchConfig arch;
    NetParams<float> params;
    std::vector<std::string> label_names;
    std::vector<float> norm_mean;  // per coefficient row
    std::vector<float> norm_std;
    dsp::FeatureConfig features;

    std::uint64_t feature_digest() const { return features.digest(); }
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    nn::OptimizerConfig optimizer;
    std::uint64_t seed = 1;
    int early_stop_patience = 15;  // epochs without val-accuracy improvement; 0 disables
    bool standardize = true;       // per-row z-scoring fit on the training split

    void validate() const;
};

struct EpochStats {
    double train_acc = 0.0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    double val_loss = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int best_epoch = -1;           // 1-based epoch whose parameters the model keeps
    double test_accuracy = -1.0;   // filled by the caller once a test split exists
};

/// One labeled feature tensor. `x` must outlive the call that uses it.
struct Sample {
    const dsp::MfccTensor* x = nullptr;
    int label = -1;
};

Model build_model(const ArchConfig& arch, const dsp::FeatureConfig& features,
                  std::vector<std::string> label_names, nn::Rng& rng);

/// Inference-mode class probabilities (normalization applied, dropout off).
std::vector<float> forward(const Model& model, const dsp::MfccTensor& x);

/// Argmax label with ties broken toward the lowest index.
std::pair<int, std::vector<float>> predict(const Model& model, const dsp::MfccTensor& x);

/// Holds one working copy of the network for scoring many clips against an
/// immutable model without re-copying parameters per call.
class Scorer {
  public:
    explicit Scorer(const Model& model);
    std::pair<int, std::vector<float>> predict(const dsp::MfccTensor& x);

  private:
    const Model* model_;
    NetCore<float> core_;
};

/// Minibatch training with per-epoch validation; the returned model carries
/// the parameters of the best validation epoch. Normalization statistics are
/// computed from the training split only.
TrainReport train(Model& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& cfg);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace voiceclef::clf

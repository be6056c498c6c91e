#include "voiceclef/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace voiceclef::clf {

void ArchConfig::validate() const {
    if (in_rows < 3 || in_frames < 3) throw InvalidArch("arch: input must be at least 3x3");
    if (conv_channels < 1) throw InvalidArch("arch: conv_channels must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw InvalidArch("arch: dropout_p must be in [0, 1)");
    if (hidden1 < 1 || hidden2 < 1) throw InvalidArch("arch: hidden sizes must be >= 1");
    if (n_classes < 2) throw InvalidArch("arch: need at least 2 classes");
    if (flatten_size() == 0) throw InvalidArch("arch: flatten size is zero");
}

ArchConfig arch_preset_flat8192() {
    ArchConfig a;
    a.in_rows = 34;
    a.in_frames = 34;
    a.conv_channels = 8;
    return a;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw Error("train: epochs must be >= 1");
    if (batch_size < 1) throw Error("train: batch_size must be >= 1");
    if (early_stop_patience < 0) throw Error("train: early_stop_patience must be >= 0");
}

Model build_model(const ArchConfig& arch, const dsp::FeatureConfig& features,
                  std::vector<std::string> label_names, nn::Rng& rng) {
    arch.validate();
    if (label_names.size() != static_cast<std::size_t>(arch.n_classes))
        throw InvalidArch("build_model: label count does not match n_classes");
    Model m;
    m.arch = arch;
    m.features = features;
    m.label_names = std::move(label_names);
    NetCore<float> core;
    core.arch = arch;
    core.init(rng);
    m.params = std::move(core.params);
    m.norm_mean.assign(static_cast<std::size_t>(arch.in_rows), 0.0f);
    m.norm_std.assign(static_cast<std::size_t>(arch.in_rows), 1.0f);
    return m;
}

namespace {

nn::Tensor normalized_input(const Model& model, const dsp::MfccTensor& x) {
    const auto rows = static_cast<std::size_t>(model.arch.in_rows);
    const auto cols = static_cast<std::size_t>(model.arch.in_frames);
    if (x.rows != rows || x.cols != cols)
        throw nn::ShapeMismatch("input tensor is " + std::to_string(x.rows) + "x" +
                                std::to_string(x.cols) + ", model expects " + std::to_string(rows) +
                                "x" + std::to_string(cols));
    nn::Tensor t({1, rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        const float mean = model.norm_mean[r];
        const float inv = 1.0f / model.norm_std[r];
        for (std::size_t c = 0; c < cols; ++c)
            t.data[r * cols + c] = (x.at(r, c) - mean) * inv;
    }
    return t;
}

double accuracy_and_loss(NetCore<float>& core, std::span<const nn::Tensor> inputs,
                         std::span<const std::size_t> labels, double* loss_out) {
    std::size_t correct = 0;
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto probs = core.forward(inputs[i], false);
        loss += nn::cross_entropy(std::span<const float>(probs), labels[i]);
        const auto arg = static_cast<std::size_t>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        if (arg == labels[i]) ++correct;
    }
    if (loss_out) *loss_out = loss / static_cast<double>(inputs.size());
    return static_cast<double>(correct) / static_cast<double>(inputs.size());
}

}  // namespace

Scorer::Scorer(const Model& model) : model_(&model) {
    core_.arch = model.arch;
    core_.params = model.params;
}

std::pair<int, std::vector<float>> Scorer::predict(const dsp::MfccTensor& x) {
    const auto probs = core_.forward(normalized_input(*model_, x), false);
    int best = 0;
    for (int i = 1; i < static_cast<int>(probs.size()); ++i)
        if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
    return {best, probs};
}

std::vector<float> forward(const Model& model, const dsp::MfccTensor& x) {
    Scorer scorer(model);
    return scorer.predict(x).second;
}

std::pair<int, std::vector<float>> predict(const Model& model, const dsp::MfccTensor& x) {
    Scorer scorer(model);
    return scorer.predict(x);
}

TrainReport train(Model& model, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_set.empty() || val_set.empty()) throw EmptyDataset("train: empty train or validation set");

    const auto rows = static_cast<std::size_t>(model.arch.in_rows);
    const auto cols = static_cast<std::size_t>(model.arch.in_frames);
    for (const Sample& s : train_set) {
        if (s.x->rows != rows || s.x->cols != cols)
            throw nn::ShapeMismatch("train: feature tensor shape does not match architecture");
        if (s.label < 0 || s.label >= model.arch.n_classes)
            throw nn::IndexOutOfRange("train: label outside [0, n_classes)");
    }

    // per-row standardization from the training split only
    if (cfg.standardize) {
        std::vector<double> mean(rows, 0.0), var(rows, 0.0);
        const double count = static_cast<double>(train_set.size() * cols);
        for (const Sample& s : train_set)
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) mean[r] += s.x->at(r, c);
        for (auto& v : mean) v /= count;
        for (const Sample& s : train_set)
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) {
                    const double d = s.x->at(r, c) - mean[r];
                    var[r] += d * d;
                }
        for (std::size_t r = 0; r < rows; ++r) {
            model.norm_mean[r] = static_cast<float>(mean[r]);
            model.norm_std[r] = static_cast<float>(std::max(std::sqrt(var[r] / count), 1e-6));
        }
    } else {
        std::fill(model.norm_mean.begin(), model.norm_mean.end(), 0.0f);
        std::fill(model.norm_std.begin(), model.norm_std.end(), 1.0f);
    }

    // normalized inputs are reused across every epoch
    std::vector<nn::Tensor> train_inputs, val_inputs;
    std::vector<std::size_t> train_labels, val_labels;
    train_inputs.reserve(train_set.size());
    for (const Sample& s : train_set) {
        train_inputs.push_back(normalized_input(model, *s.x));
        train_labels.push_back(static_cast<std::size_t>(s.label));
    }
    val_inputs.reserve(val_set.size());
    for (const Sample& s : val_set) {
        val_inputs.push_back(normalized_input(model, *s.x));
        val_labels.push_back(static_cast<std::size_t>(s.label));
    }

    NetCore<float> core;
    core.arch = model.arch;
    core.params = model.params;

    nn::Rng rng(cfg.seed);
    nn::Optimizer<float> optimizer(cfg.optimizer);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    NetParams<float> best_params = core.params;
    double best_val = -1.0;
    int since_best = 0;

    NetParams<float> grads;
    grads.allocate(model.arch);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        std::size_t train_correct = 0;
        double train_loss = 0.0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));

            grads.zero();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t idx = order[i];
                const auto probs = core.forward(train_inputs[idx], true, &rng);
                batch_loss += nn::cross_entropy(std::span<const float>(probs), train_labels[idx]);
                const auto arg = static_cast<std::size_t>(
                    std::max_element(probs.begin(), probs.end()) - probs.begin());
                if (arg == train_labels[idx]) ++train_correct;
                grads.accumulate(core.backward(train_labels[idx]));
            }
            const double n = static_cast<double>(end - start);
            if (!std::isfinite(batch_loss)) throw DivergedLoss("train: loss is not finite");
            grads.scale(static_cast<float>(1.0 / n));
            train_loss += batch_loss;

            auto params = core.params.all();
            auto grad_list = grads.all();
            std::vector<const nn::Tensor*> grad_ptrs(grad_list.begin(), grad_list.end());
            optimizer.step(std::span<nn::Tensor* const>(params),
                           std::span<const nn::Tensor* const>(grad_ptrs));
        }

        EpochStats stats;
        stats.train_acc = static_cast<double>(train_correct) / static_cast<double>(order.size());
        stats.train_loss = train_loss / static_cast<double>(order.size());
        stats.val_acc = accuracy_and_loss(core, val_inputs, val_labels, &stats.val_loss);
        report.epochs.push_back(stats);

        // ties keep the most-trained parameters; patience counts strict improvements
        if (stats.val_acc > best_val) {
            best_val = stats.val_acc;
            best_params = core.params;
            report.best_epoch = epoch;
            since_best = 0;
        } else {
            if (stats.val_acc == best_val) {
                best_params = core.params;
                report.best_epoch = epoch;
            }
            if (cfg.early_stop_patience > 0 && ++since_best >= cfg.early_stop_patience) break;
        }
    }

    model.params = std::move(best_params);
    return report;
}

// ---------------------------------------------------------------------------
// serialization: magic "VCLF", u32 version, arch + feature config, label
// names, normalization stats, then parameters as f32 in declaration order.

namespace {

template <typename T>
void put(std::string& out, T v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw TruncatedFile("model file ended early");
    return v;
}

void put_string(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

std::string take_string(std::istream& in) {
    const auto len = take<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw TruncatedFile("model file ended early");
    return s;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
    std::string out;
    out.append("VCLF");
    put<std::uint32_t>(out, 1);

    const ArchConfig& a = model.arch;
    put<std::int32_t>(out, a.in_rows);
    put<std::int32_t>(out, a.in_frames);
    put<std::int32_t>(out, a.conv_channels);
    put<std::uint8_t>(out, a.conv_activation == ConvActivation::tanh ? 0 : 1);
    put<double>(out, a.dropout_p);
    put<std::int32_t>(out, a.hidden1);
    put<std::int32_t>(out, a.hidden2);
    put<std::int32_t>(out, a.n_classes);

    const dsp::FeatureConfig& f = model.features;
    put<std::uint8_t>(out, f.pre_emphasis_enabled ? 1 : 0);
    put<double>(out, f.pre_emphasis);
    put<std::int32_t>(out, f.win);
    put<std::int32_t>(out, f.inc);
    put<std::int32_t>(out, f.n_fft);
    put<std::int32_t>(out, f.n_mels);
    put<double>(out, f.fmin);
    put<double>(out, f.fmax);
    put<std::int32_t>(out, f.n_mfcc);
    put<std::int32_t>(out, f.deltas);
    put<double>(out, f.log_floor);
    put<std::int32_t>(out, f.sample_rate);

    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.label_names.size()));
    for (const auto& name : model.label_names) put_string(out, name);

    put<std::uint32_t>(out, static_cast<std::uint32_t>(model.norm_mean.size()));
    out.append(reinterpret_cast<const char*>(model.norm_mean.data()),
               model.norm_mean.size() * sizeof(float));
    out.append(reinterpret_cast<const char*>(model.norm_std.data()),
               model.norm_std.size() * sizeof(float));

    for (const auto* t : model.params.all())
        out.append(reinterpret_cast<const char*>(t->ptr()), t->numel() * sizeof(float));

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open for writing: " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error("write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "VCLF", 4) != 0)
        throw BadMagic("not a model file: " + path.string());
    const auto version = take<std::uint32_t>(in);
    if (version != 1) throw VersionMismatch("unsupported model version " + std::to_string(version));

    Model m;
    m.arch.in_rows = take<std::int32_t>(in);
    m.arch.in_frames = take<std::int32_t>(in);
    m.arch.conv_channels = take<std::int32_t>(in);
    m.arch.conv_activation = take<std::uint8_t>(in) == 0 ? ConvActivation::tanh : ConvActivation::relu;
    m.arch.dropout_p = take<double>(in);
    m.arch.hidden1 = take<std::int32_t>(in);
    m.arch.hidden2 = take<std::int32_t>(in);
    m.arch.n_classes = take<std::int32_t>(in);
    m.arch.validate();

    m.features.pre_emphasis_enabled = take<std::uint8_t>(in) != 0;
    m.features.pre_emphasis = take<double>(in);
    m.features.win = take<std::int32_t>(in);
    m.features.inc = take<std::int32_t>(in);
    m.features.n_fft = take<std::int32_t>(in);
    m.features.n_mels = take<std::int32_t>(in);
    m.features.fmin = take<double>(in);
    m.features.fmax = take<double>(in);
    m.features.n_mfcc = take<std::int32_t>(in);
    m.features.deltas = take<std::int32_t>(in);
    m.features.log_floor = take<double>(in);
    m.features.sample_rate = take<std::int32_t>(in);

    const auto n_labels = take<std::uint32_t>(in);
    if (n_labels != static_cast<std::uint32_t>(m.arch.n_classes))
        throw TruncatedFile("label count does not match architecture");
    m.label_names.reserve(n_labels);
    for (std::uint32_t i = 0; i < n_labels; ++i) m.label_names.push_back(take_string(in));

    const auto n_rows = take<std::uint32_t>(in);
    if (n_rows != static_cast<std::uint32_t>(m.arch.in_rows))
        throw TruncatedFile("normalization row count does not match architecture");
    m.norm_mean.resize(n_rows);
    m.norm_std.resize(n_rows);
    in.read(reinterpret_cast<char*>(m.norm_mean.data()), n_rows * sizeof(float));
    in.read(reinterpret_cast<char*>(m.norm_std.data()), n_rows * sizeof(float));
    if (!in) throw TruncatedFile("model file ended early");

    m.params.allocate(m.arch);
    for (auto* t : m.params.all()) {
        in.read(reinterpret_cast<char*>(t->ptr()),
                static_cast<std::streamsize>(t->numel() * sizeof(float)));
        if (!in) throw TruncatedFile("model file ended early in parameter block");
    }
    return m;
}

}  // namespace voiceclef::clf

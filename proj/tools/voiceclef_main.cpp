// voiceclef: preprocess clinical voice recordings, extract MFCC features,
// train/evaluate the single-conv classifier and run MFCC-count sweeps.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "voiceclef/audio.hpp"
#include "voiceclef/classifier.hpp"
#include "voiceclef/common.hpp"
#include "voiceclef/dataset.hpp"
#include "voiceclef/features.hpp"
#include "voiceclef/kernels.hpp"
#include "voiceclef/metrics.hpp"
#include "voiceclef/runconfig.hpp"
#include "voiceclef/vad.hpp"

namespace vc = voiceclef;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitNoVoice = 5;

struct NoVoicedAudio : vc::Error {
    using Error::Error;
};
struct InputError : vc::Error {
    using Error::Error;
};

vc::cfg::RunConfig load_config(const std::string& config_path) {
    if (config_path.empty()) return vc::cfg::RunConfig::from_tree(vc::cfg::KeyValueTree{});
    return vc::cfg::RunConfig::from_tree(vc::cfg::KeyValueTree::parse_file(config_path));
}

std::vector<std::string> split_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == sep) {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else if (c != ' ') {
            current.push_back(c);
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

std::set<std::string> parse_phoneme_set(const std::string& text) {
    std::set<std::string> out;
    for (const auto& item : split_list(text, ',')) out.insert(vc::data::fold_phoneme(item));
    return out;
}

std::vector<fs::path> collect_wavs(const fs::path& input) {
    std::vector<fs::path> files;
    if (fs::is_directory(input)) {
        for (const auto& entry : fs::directory_iterator(input)) {
            if (!entry.is_regular_file()) continue;
            auto ext = entry.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (ext == ".wav") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(input)) {
        files.push_back(input);
    } else {
        throw InputError("input not found: " + input.string());
    }
    return files;
}

// ---------------------------------------------------------------------------

int cmd_vad(const std::string& input, const std::string& out_dir, const std::string& config_path) {
    const vc::cfg::RunConfig cfg = load_config(config_path);
    const auto files = collect_wavs(input);
    fs::create_directories(out_dir);

    std::ofstream segments_csv(fs::path(out_dir) / "segments.csv", std::ios::trunc);
    segments_csv << "source,start_sample,end_sample\n";

    std::size_t clip_total = 0;
    for (const auto& file : files) {
        vc::audio::AudioClip clip =
            vc::audio::resample(vc::audio::read_wav(file), cfg.features.sample_rate);
        std::vector<vc::vad::Segment> segments;
        if (clip.samples.size() >= static_cast<std::size_t>(cfg.vad.frame_len))
            segments = vc::vad::detect_voice_activity(clip, cfg.vad);
        for (const auto& seg : segments)
            segments_csv << clip.source_id << ',' << seg.start << ',' << seg.end << '\n';
        for (const auto& piece : vc::vad::segment_clip(clip, segments)) {
            vc::audio::write_wav(piece, fs::path(out_dir) / (piece.source_id + ".wav"));
            ++clip_total;
        }
    }
    vc::cfg::write_provenance(fs::path(out_dir) / "segments.csv", "vad", cfg,
                              {{"input", input}});
    std::cout << "wrote " << clip_total << " clips from " << files.size() << " recordings to "
              << out_dir << "\n";
    return 0;
}

int cmd_extract(const std::string& manifest_path, const std::string& out_path, int mfcc_override,
                const std::string& phonemes, const std::string& config_path, bool strict,
                const std::string& mel_csv_dir) {
    vc::cfg::RunConfig cfg = load_config(config_path);
    if (mfcc_override > 0) cfg.features.n_mfcc = mfcc_override;
    cfg.features.validate();

    vc::data::Dataset ds = vc::data::load_manifest(manifest_path, {{}, strict});
    if (!phonemes.empty()) ds = vc::data::filter_phonemes(ds, parse_phoneme_set(phonemes), strict);

    if (!mel_csv_dir.empty()) fs::create_directories(mel_csv_dir);
    std::vector<std::optional<vc::dsp::MfccTensor>> results(ds.entries.size());
    std::vector<std::string> failures(ds.entries.size());
    vc::parallel_for(ds.entries.size(), [&](std::size_t i) {
        const auto& entry = ds.entries[i];
        try {
            const auto clip = vc::audio::read_wav(ds.root / entry.path);
            if (!mel_csv_dir.empty()) {
                const auto mel = vc::dsp::log_mel_spectrogram(clip, cfg.features);
                vc::dsp::write_matrix_csv(mel, cfg.features.digest(),
                                          fs::path(mel_csv_dir) / (clip.source_id + ".melspec.csv"));
            }
            results[i] = vc::dsp::extract_mfcc(clip, cfg.features);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    std::vector<vc::dsp::MfccTensor> tensors;
    tensors.reserve(ds.entries.size());
    std::size_t failed = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i]) {
            tensors.push_back(std::move(*results[i]));
        } else {
            ++failed;
            std::cerr << "extract failed for " << ds.entries[i].path << ": " << failures[i] << "\n";
        }
    }
    vc::dsp::write_archive(tensors, out_path);

    char digest[32];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(cfg.features.digest()));
    vc::cfg::write_provenance(out_path, "extract", cfg,
                              {{"manifest", manifest_path},
                               {"feature_digest", digest},
                               {"tensor_count", std::to_string(tensors.size())},
                               {"failed", std::to_string(failed)}});
    std::cout << "wrote " << tensors.size() << " tensors to " << out_path;
    if (failed) std::cout << " (" << failed << " failures)";
    std::cout << "\n";
    if (failed && strict) return kExitInput;
    return 0;
}

struct LoadedSet {
    vc::data::Dataset dataset;
    std::vector<vc::dsp::MfccTensor> tensors;
    std::vector<int> labels;
    std::vector<std::string> patients;
};

LoadedSet load_aligned(const std::string& features_path, const std::string& manifest_path) {
    LoadedSet set;
    set.dataset = vc::data::load_manifest(manifest_path);
    set.tensors = vc::dsp::read_archive(features_path);
    if (set.tensors.size() != set.dataset.entries.size())
        throw InputError("features and manifest are misaligned: " +
                         std::to_string(set.tensors.size()) + " tensors vs " +
                         std::to_string(set.dataset.entries.size()) + " rows");
    for (const auto& entry : set.dataset.entries) {
        set.labels.push_back(set.dataset.label_index(entry.label));
        set.patients.push_back(entry.patient_id);
    }
    return set;
}

/// Feature config recorded by cmd_extract in the archive sidecar, when present.
std::optional<vc::dsp::FeatureConfig> sidecar_feature_config(const std::string& features_path) {
    const fs::path sidecar = features_path + ".provenance.json";
    if (!fs::exists(sidecar)) return std::nullopt;
    std::ifstream in(sidecar);
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!j.contains("config")) return std::nullopt;
    vc::cfg::KeyValueTree tree;
    for (const auto& [key, value] : j.at("config").items())
        tree.set(key, value.get<std::string>());
    return vc::cfg::RunConfig::from_tree(tree).features;
}

struct TrainedArtifacts {
    vc::clf::Model model;
    vc::clf::TrainReport report;
    vc::metrics::EvalReport test_eval;
};

TrainedArtifacts run_training(const LoadedSet& set, vc::cfg::RunConfig cfg, bool clip_split) {
    if (set.tensors.empty()) throw InputError("no feature tensors to train on");
    const std::size_t rows = set.tensors.front().rows;
    const std::size_t cols = set.tensors.front().cols;
    for (const auto& t : set.tensors)
        if (t.rows != rows || t.cols != cols)
            throw InputError("feature tensors disagree in shape; re-extract with one config");

    const int deltas_factor = 1 + cfg.features.deltas;
    if (rows % static_cast<std::size_t>(deltas_factor) == 0)
        cfg.features.n_mfcc = static_cast<int>(rows) / deltas_factor;
    cfg.arch.in_rows = static_cast<int>(rows);
    cfg.arch.in_frames = static_cast<int>(cols);
    cfg.arch.n_classes = static_cast<int>(set.dataset.label_names.size());
    cfg.arch.validate();

    const auto split = vc::metrics::split_dataset(set.patients, {0.8, 0.1, 0.1}, cfg.seed, !clip_split);
    auto to_samples = [&](const std::vector<std::size_t>& idx) {
        std::vector<vc::clf::Sample> samples;
        samples.reserve(idx.size());
        for (std::size_t i : idx) samples.push_back({&set.tensors[i], set.labels[i]});
        return samples;
    };
    const auto train_samples = to_samples(split.train);
    const auto val_samples = to_samples(split.val);

    TrainedArtifacts out;
    vc::nn::Rng rng(cfg.seed);
    out.model = vc::clf::build_model(cfg.arch, cfg.features, set.dataset.label_names, rng);
    out.report = vc::clf::train(out.model, train_samples, val_samples, cfg.train);

    std::vector<vc::metrics::EvalItem> test_items;
    for (std::size_t i : split.test)
        test_items.push_back({&set.tensors[i], set.labels[i], set.patients[i]});
    if (!test_items.empty()) {
        out.test_eval = vc::metrics::evaluate(out.model, test_items);
        out.report.test_accuracy = out.test_eval.clip_accuracy;
    }
    return out;
}

json report_to_json(const vc::clf::TrainReport& report) {
    json epochs = json::array();
    int number = 1;
    for (const auto& e : report.epochs)
        epochs.push_back({{"epoch", number++},
                          {"train_acc", e.train_acc},
                          {"val_acc", e.val_acc},
                          {"train_loss", e.train_loss},
                          {"val_loss", e.val_loss}});
    return json{{"best_epoch", report.best_epoch},
                {"test_accuracy", report.test_accuracy},
                {"epochs", std::move(epochs)}};
}

void write_curves_csv(const vc::clf::TrainReport& report, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    out << "epoch,train_acc,val_acc,train_loss,val_loss\n";
    char buf[160];
    int number = 1;
    for (const auto& e : report.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", number++, e.train_acc,
                      e.val_acc, e.train_loss, e.val_loss);
        out << buf;
    }
}

int cmd_train(const std::string& features_path, const std::string& manifest_path,
              const std::string& out_path, long seed, const std::string& config_path,
              bool clip_split) {
    vc::cfg::RunConfig cfg = load_config(config_path);
    if (seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.train.seed = cfg.seed;
    }
    if (const auto recorded = sidecar_feature_config(features_path)) cfg.features = *recorded;

    const LoadedSet set = load_aligned(features_path, manifest_path);
    TrainedArtifacts artifacts = run_training(set, cfg, clip_split);

    vc::clf::save_model(artifacts.model, out_path);
    fs::path stem = fs::path(out_path);
    stem.replace_extension();
    const fs::path report_path = stem.string() + ".report.json";
    const fs::path curves_path = stem.string() + ".curves.csv";
    std::ofstream report_file(report_path, std::ios::trunc);
    report_file << report_to_json(artifacts.report).dump(2) << "\n";
    write_curves_csv(artifacts.report, curves_path);
    vc::cfg::write_provenance(out_path, "train", cfg,
                              {{"features", features_path}, {"manifest", manifest_path}});

    std::cout << "best epoch " << artifacts.report.best_epoch << ", test clip accuracy "
              << artifacts.report.test_accuracy << "\n";
    std::cout << "model: " << out_path << "\nreport: " << report_path.string()
              << "\ncurves: " << curves_path.string() << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& features_path,
             const std::string& manifest_path, const std::string& report_path,
             const std::string& config_path) {
    const vc::cfg::RunConfig cfg = load_config(config_path);
    const vc::clf::Model model = vc::clf::load_model(model_path);
    const LoadedSet set = load_aligned(features_path, manifest_path);

    if (const auto recorded = sidecar_feature_config(features_path)) {
        if (recorded->digest() != model.feature_digest())
            throw InputError("feature config digest does not match the model's");
    }

    std::vector<vc::metrics::EvalItem> items;
    items.reserve(set.tensors.size());
    for (std::size_t i = 0; i < set.tensors.size(); ++i) {
        const int label = set.labels[i];
        if (label < 0 || label >= model.arch.n_classes)
            throw InputError("manifest label '" + set.dataset.entries[i].label +
                             "' is not one of the model's classes");
        items.push_back({&set.tensors[i], label, set.patients[i]});
    }
    const vc::metrics::EvalReport report = vc::metrics::evaluate(model, items);

    std::ofstream out(report_path, std::ios::trunc);
    if (!out) throw InputError("cannot open report for writing: " + report_path);
    out << vc::metrics::eval_report_to_json(report);

    fs::path stem = fs::path(report_path);
    stem.replace_extension();
    for (const auto& entry : report.roc)
        vc::metrics::write_roc_csv(entry, stem.string() + ".roc_" + entry.label + ".csv");
    vc::cfg::write_provenance(report_path, "eval", cfg,
                              {{"model", model_path},
                               {"features", features_path},
                               {"manifest", manifest_path}});

    std::cout << "clip accuracy " << report.clip_accuracy << ", patient accuracy "
              << report.patient_accuracy << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& config_path, bool as_json) {
    const vc::cfg::RunConfig cfg = load_config(config_path);
    const vc::clf::Model model = vc::clf::load_model(model_path);

    vc::audio::AudioClip clip =
        vc::audio::resample(vc::audio::read_wav(input), model.features.sample_rate);
    std::vector<vc::vad::Segment> segments;
    if (clip.samples.size() >= static_cast<std::size_t>(cfg.vad.frame_len))
        segments = vc::vad::detect_voice_activity(clip, cfg.vad);
    const auto pieces = vc::vad::segment_clip(clip, segments);
    if (pieces.empty()) throw NoVoicedAudio("no voiced audio found in " + input);

    vc::clf::Scorer scorer(model);
    std::vector<std::pair<int, std::vector<float>>> predictions;
    predictions.reserve(pieces.size());
    for (const auto& piece : pieces)
        predictions.push_back(scorer.predict(vc::dsp::extract_mfcc(piece, model.features)));
    const int voted = vc::metrics::patient_vote(predictions, model.arch.n_classes);

    if (as_json) {
        json clips = json::array();
        for (const auto& [label, probs] : predictions)
            clips.push_back({{"label", model.label_names[static_cast<std::size_t>(label)]},
                             {"probs", probs}});
        const json j{{"clips", std::move(clips)},
                     {"voted", model.label_names[static_cast<std::size_t>(voted)]}};
        std::cout << j.dump(2) << "\n";
    } else {
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const auto& [label, probs] = predictions[i];
            std::cout << "clip " << i << ": " << model.label_names[static_cast<std::size_t>(label)]
                      << " [";
            for (std::size_t c = 0; c < probs.size(); ++c)
                std::cout << (c ? ", " : "") << probs[c];
            std::cout << "]\n";
        }
        std::cout << "voted: " << model.label_names[static_cast<std::size_t>(voted)] << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& manifest_path, const std::string& mfcc_list,
              const std::string& phoneme_sets, int repeats, const std::string& out_path,
              long seed, const std::string& config_path, bool clip_split) {
    vc::cfg::RunConfig base_cfg = load_config(config_path);
    if (seed >= 0) base_cfg.seed = static_cast<std::uint64_t>(seed);
    if (repeats < 1) throw vc::cfg::ConfigError("--repeats must be >= 1");

    std::vector<int> mfcc_values;
    for (const auto& item : split_list(mfcc_list, ',')) mfcc_values.push_back(std::stoi(item));
    if (mfcc_values.empty()) throw vc::cfg::ConfigError("--mfcc-list is empty");
    const std::vector<std::string> sets = split_list(phoneme_sets, '|');
    if (sets.empty()) throw vc::cfg::ConfigError("--phoneme-sets is empty");

    const vc::data::Dataset full = vc::data::load_manifest(manifest_path);

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw InputError("cannot open results file: " + out_path);
    out << "mfcc,phonemes,repeat,clip_acc,patient_acc\n";
    out.flush();

    for (int mfcc : mfcc_values) {
        for (const auto& set_text : sets) {
            const auto phonemes = parse_phoneme_set(set_text);
            vc::data::Dataset subset = vc::data::filter_phonemes(full, phonemes, true);

            vc::cfg::RunConfig cfg = base_cfg;
            cfg.features.n_mfcc = mfcc;
            cfg.features.validate();

            // one extraction per (mfcc, phoneme set); repeats re-split and retrain
            LoadedSet loaded;
            loaded.dataset = subset;
            loaded.tensors.resize(subset.entries.size());
            std::vector<std::string> errors(subset.entries.size());
            vc::parallel_for(subset.entries.size(), [&](std::size_t i) {
                try {
                    const auto clip = vc::audio::read_wav(subset.root / subset.entries[i].path);
                    loaded.tensors[i] = vc::dsp::extract_mfcc(clip, cfg.features);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            });
            for (std::size_t i = 0; i < errors.size(); ++i)
                if (!errors[i].empty())
                    throw InputError("extract failed for " + subset.entries[i].path + ": " + errors[i]);
            for (const auto& entry : subset.entries) {
                loaded.labels.push_back(subset.label_index(entry.label));
                loaded.patients.push_back(entry.patient_id);
            }

            for (int rep = 1; rep <= repeats; ++rep) {
                vc::cfg::RunConfig cell_cfg = cfg;
                const std::string cell = std::to_string(mfcc) + "|" + set_text + "|" +
                                         std::to_string(rep) + "|" + std::to_string(base_cfg.seed);
                cell_cfg.seed = vc::fnv1a64(cell);
                cell_cfg.train.seed = cell_cfg.seed;
                const TrainedArtifacts artifacts = run_training(loaded, cell_cfg, clip_split);
                char line[160];
                std::snprintf(line, sizeof(line), "%d,%s,%d,%.6f,%.6f\n", mfcc, set_text.c_str(),
                              rep, artifacts.test_eval.clip_accuracy,
                              artifacts.test_eval.patient_accuracy);
                out << line;
                out.flush();  // partial results survive an interrupted sweep
                std::cout << "cell mfcc=" << mfcc << " phonemes=" << set_text << " repeat=" << rep
                          << " clip_acc=" << artifacts.test_eval.clip_accuracy
                          << " patient_acc=" << artifacts.test_eval.patient_accuracy << "\n";
            }
        }
    }
    vc::cfg::write_provenance(out_path, "sweep", base_cfg,
                              {{"manifest", manifest_path},
                               {"mfcc_list", mfcc_list},
                               {"phoneme_sets", phoneme_sets},
                               {"repeats", std::to_string(repeats)}});
    return 0;
}

int cmd_import_avfad(const std::string& root, const std::string& vowels,
                     const std::string& label_map_path, const std::string& out_dir,
                     const std::string& config_path) {
    const vc::cfg::RunConfig cfg = load_config(config_path);

    std::map<std::string, std::string> label_map;
    std::ifstream map_file(label_map_path);
    if (!map_file) throw InputError("cannot open label map: " + label_map_path);
    std::string line;
    while (std::getline(map_file, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw vc::cfg::ConfigError("label map line needs 'diagnosis,label': " + line);
        std::string key = line.substr(0, comma);
        std::string value = line.substr(comma + 1);
        if (!value.empty() && value.back() == '\r') value.pop_back();
        label_map[key] = value;
    }

    vc::data::AvfadImportConfig import_cfg;
    import_cfg.vowels = parse_phoneme_set(vowels);
    import_cfg.label_map = std::move(label_map);
    import_cfg.out_dir = out_dir;
    import_cfg.vad = cfg.vad;
    import_cfg.sample_rate = cfg.features.sample_rate;
    const vc::data::Dataset ds = vc::data::import_avfad(root, import_cfg);
    std::cout << "imported " << ds.entries.size() << " clips across " << ds.label_names.size()
              << " classes; manifest at " << (fs::path(out_dir) / "manifest.generated.csv").string()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voice disorder classification toolkit"};
    app.set_version_flag("--version", std::string("voiceclef ") + VOICECLEF_VERSION + " (simd: " +
                                          vc::kernels::level_name(vc::kernels::active_level()) + ")");
    app.require_subcommand(1);

    std::string input, out, config_path, manifest, features_path, model_path, report_path;
    std::string phonemes, mfcc_list = "13,40,50,128", phoneme_sets = "a";
    int mfcc_override = 0, repeats = 3;
    long seed = -1;
    bool strict = false, clip_split = false, as_json = false;

    auto* vad_cmd = app.add_subcommand("vad", "detect voiced regions and cut 0.5 s clips");
    vad_cmd->add_option("--input", input, "wav file or directory")->required();
    vad_cmd->add_option("--out", out, "output directory")->required();
    vad_cmd->add_option("--config", config_path, "config file");

    std::string mel_csv_dir;
    auto* extract_cmd = app.add_subcommand("extract", "extract MFCC tensors for a manifest");
    extract_cmd->add_option("--manifest", manifest, "manifest csv")->required();
    extract_cmd->add_option("--out", out, "output feature archive (.vmfc)")->required();
    extract_cmd->add_option("--mfcc", mfcc_override, "MFCC order override (e.g. 13, 40, 50, 128)");
    extract_cmd->add_option("--phonemes", phonemes, "comma-separated phoneme filter");
    extract_cmd->add_option("--config", config_path, "config file");
    extract_cmd->add_flag("--strict", strict, "fail on any unreadable or unparsable file");
    extract_cmd->add_option("--mel-csv", mel_csv_dir, "also write per-clip log-Mel-spectrogram CSVs here");

    auto* train_cmd = app.add_subcommand("train", "train the classifier on extracted features");
    train_cmd->add_option("--features", features_path, "feature archive (.vmfc)")->required();
    train_cmd->add_option("--manifest", manifest, "manifest csv")->required();
    train_cmd->add_option("--out", out, "output model file (.vclf)")->required();
    train_cmd->add_option("--seed", seed, "seed override");
    train_cmd->add_option("--config", config_path, "config file");
    train_cmd->add_flag("--clip-split", clip_split,
                        "split at clip level instead of grouping by patient");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model against labeled features");
    eval_cmd->add_option("--model", model_path, "model file")->required();
    eval_cmd->add_option("--features", features_path, "feature archive")->required();
    eval_cmd->add_option("--manifest", manifest, "manifest csv")->required();
    eval_cmd->add_option("--report", report_path, "output report json")->required();
    eval_cmd->add_option("--config", config_path, "config file");

    auto* predict_cmd = app.add_subcommand("predict", "classify one recording end to end");
    predict_cmd->add_option("--model", model_path, "model file")->required();
    predict_cmd->add_option("--input", input, "wav file")->required();
    predict_cmd->add_option("--config", config_path, "config file (VAD settings)");
    predict_cmd->add_flag("--json", as_json, "machine-readable output");

    auto* sweep_cmd = app.add_subcommand("sweep", "MFCC-count / phoneme-set experiment grid");
    sweep_cmd->add_option("--manifest", manifest, "manifest csv")->required();
    sweep_cmd->add_option("--mfcc-list", mfcc_list, "comma-separated MFCC orders");
    sweep_cmd->add_option("--phoneme-sets", phoneme_sets,
                          "phoneme sets separated by '|', members by ','");
    sweep_cmd->add_option("--repeats", repeats, "training repeats per cell");
    sweep_cmd->add_option("--out", out, "results csv")->required();
    sweep_cmd->add_option("--seed", seed, "base seed");
    sweep_cmd->add_option("--config", config_path, "config file");
    sweep_cmd->add_flag("--clip-split", clip_split, "split at clip level");

    std::string avfad_root, avfad_vowels = "a,i,u", avfad_label_map;
    auto* import_cmd = app.add_subcommand("import-avfad", "build a manifest from an AVFAD-style tree");
    import_cmd->add_option("--root", avfad_root, "corpus root directory")->required();
    import_cmd->add_option("--vowels", avfad_vowels, "comma-separated vowel filter");
    import_cmd->add_option("--label-map", avfad_label_map, "csv mapping diagnosis,label")->required();
    import_cmd->add_option("--out", out, "output directory")->required();
    import_cmd->add_option("--config", config_path, "config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (vad_cmd->parsed()) return cmd_vad(input, out, config_path);
        if (extract_cmd->parsed())
            return cmd_extract(manifest, out, mfcc_override, phonemes, config_path, strict,
                               mel_csv_dir);
        if (train_cmd->parsed())
            return cmd_train(features_path, manifest, out, seed, config_path, clip_split);
        if (eval_cmd->parsed())
            return cmd_eval(model_path, features_path, manifest, report_path, config_path);
        if (predict_cmd->parsed()) return cmd_predict(model_path, input, config_path, as_json);
        if (sweep_cmd->parsed())
            return cmd_sweep(manifest, mfcc_list, phoneme_sets, repeats, out, seed, config_path,
                             clip_split);
        if (import_cmd->parsed())
            return cmd_import_avfad(avfad_root, avfad_vowels, avfad_label_map, out, config_path);
    } catch (const NoVoicedAudio& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoVoice;
    } catch (const vc::clf::DivergedLoss& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const vc::cfg::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}

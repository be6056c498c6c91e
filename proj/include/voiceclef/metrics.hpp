#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "voiceclef/classifier.hpp"
#include "voiceclef/common.hpp"

namespace voiceclef::metrics {

struct EmptyDataset : Error {
    using Error::Error;
};
struct LabelOutOfRange : Error {
    using Error::Error;
};
struct DegenerateLabels : Error {
    using Error::Error;
};
struct EmptyVoteSet : Error {
    using Error::Error;
};

/// Index lists into the original item sequence.
struct SplitResult {
    std::vector<std::size_t> train, val, test;
};

/// Deterministic shuffled split. When grouped (the default) whole patients are
/// assigned to one split so no identifier straddles splits; quotas are
/// floor(ratio * N) items for val and test, remainder to train.
SplitResult split_dataset(std::span<const std::string> patient_ids,
                          std::array<double, 3> ratios, std::uint64_t seed, bool grouped = true);

/// rows = true class, columns = predicted class.
struct ConfusionMatrix {
    std::size_t k = 0;
    std::vector<long long> counts;  // k*k row-major
    std::vector<std::string> labels;

    long long& at(std::size_t t, std::size_t p) { return counts[t * k + p]; }
    long long at(std::size_t t, std::size_t p) const { return counts[t * k + p]; }
    long long total() const;
    long long trace() const;
};

ConfusionMatrix confusion_matrix(std::span<const int> truths, std::span<const int> predictions,
                                 int k);

struct PerClass {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
};

struct ClassMetrics {
    std::vector<PerClass> per_class;
    double accuracy = 0.0;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocEntry {
    std::string label;
    double auc = 0.0;
    std::vector<RocPoint> points;   // from (0,0) to (1,1), tied scores merged
    RocPoint at_threshold_half;     // operating point at score >= 0.5
};

/// One-vs-rest ROC by full threshold sweep over sorted unique scores; AUC by
/// trapezoidal integration. Requires at least one positive and one negative.
RocEntry roc_curve(std::span<const double> scores, std::span<const std::uint8_t> truths);

/// Plurality over clip argmax votes; ties broken by the larger summed softmax
/// probability over the tied labels, then by the lowest label index.
int patient_vote(const std::vector<std::pair<int, std::vector<float>>>& clip_predictions, int k);

struct EvalItem {
    const dsp::MfccTensor* x = nullptr;
    int label = -1;
    std::string patient_id;
};

struct PatientOutcome {
    std::string patient_id;
    int truth = -1;
    int voted = -1;
};

struct EvalReport {
    double clip_accuracy = 0.0;
    double patient_accuracy = 0.0;
    ConfusionMatrix confusion;
    std::vector<PerClass> per_class;
    std::vector<RocEntry> roc;  // classes with both positives and negatives present
    std::vector<std::string> labels;
    std::vector<PatientOutcome> patients;
};

/// predict over all clips, then confusion/per-class metrics, per-class ROC
/// and patient-level voting.
EvalReport evaluate(const clf::Model& model, std::span<const EvalItem> items);

std::string eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& json_text);

/// CSV with header "fpr,tpr", one point per line.
void write_roc_csv(const RocEntry& entry, const std::filesystem::path& path);

}  // namespace voiceclef::metrics

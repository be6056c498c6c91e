#include "voiceclef/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "voiceclef/nn.hpp"

namespace voiceclef::metrics {

using nlohmann::json;

SplitResult split_dataset(std::span<const std::string> patient_ids,
                          std::array<double, 3> ratios, std::uint64_t seed, bool grouped) {
    if (patient_ids.empty()) throw EmptyDataset("split: no items");
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw Error("split: ratios must sum to 1");

    const std::size_t n = patient_ids.size();
    const std::size_t val_quota = static_cast<std::size_t>(ratios[1] * static_cast<double>(n));
    const std::size_t test_quota = static_cast<std::size_t>(ratios[2] * static_cast<double>(n));

    // groups in first-appearance order; ungrouped mode = one group per item
    std::vector<std::vector<std::size_t>> groups;
    if (grouped) {
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < n; ++i) {
            auto [it, inserted] = index.try_emplace(patient_ids[i], groups.size());
            if (inserted) groups.emplace_back();
            groups[it->second].push_back(i);
        }
    } else {
        groups.resize(n);
        for (std::size_t i = 0; i < n; ++i) groups[i] = {i};
    }

    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    nn::Rng rng(seed);
    rng.shuffle(order);

    SplitResult out;
    std::size_t val_count = 0, test_count = 0;
    for (std::size_t gi : order) {
        const auto& members = groups[gi];
        if (test_count < test_quota) {
            out.test.insert(out.test.end(), members.begin(), members.end());
            test_count += members.size();
        } else if (val_count < val_quota) {
            out.val.insert(out.val.end(), members.begin(), members.end());
            val_count += members.size();
        } else {
            out.train.insert(out.train.end(), members.begin(), members.end());
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

long long ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), 0ll);
}

long long ConfusionMatrix::trace() const {
    long long t = 0;
    for (std::size_t i = 0; i < k; ++i) t += at(i, i);
    return t;
}

ConfusionMatrix confusion_matrix(std::span<const int> truths, std::span<const int> predictions,
                                 int k) {
    if (truths.size() != predictions.size())
        throw Error("confusion_matrix: label sequences differ in length");
    ConfusionMatrix cm;
    cm.k = static_cast<std::size_t>(k);
    cm.counts.assign(cm.k * cm.k, 0);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const int t = truths[i], p = predictions[i];
        if (t < 0 || t >= k || p < 0 || p >= k)
            throw LabelOutOfRange("confusion_matrix: label outside [0, k) at index " +
                                  std::to_string(i));
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
    ClassMetrics out;
    out.per_class.resize(cm.k);
    const long long total = cm.total();
    for (std::size_t c = 0; c < cm.k; ++c) {
        long long col = 0, row = 0;
        for (std::size_t i = 0; i < cm.k; ++i) {
            col += cm.at(i, c);
            row += cm.at(c, i);
        }
        PerClass& pc = out.per_class[c];
        const long long tp = cm.at(c, c);
        pc.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        pc.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        pc.f1 = (pc.precision + pc.recall) > 0.0
                    ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall)
                    : 0.0;
        pc.support = row;
    }
    out.accuracy = total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(total) : 0.0;
    return out;
}

RocEntry roc_curve(std::span<const double> scores, std::span<const std::uint8_t> truths) {
    if (scores.size() != truths.size()) throw Error("roc_curve: scores/truths length mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (auto t : truths) (t ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw DegenerateLabels("roc_curve: need at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocEntry entry;
    entry.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double auc = 0.0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        // handle every sample with the same score as a single threshold step
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            if (truths[order[i]])
                ++tp;
            else
                ++fp;
            ++i;
        }
        const double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
        const double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
        entry.points.push_back({fpr, tpr});
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    entry.auc = auc;

    std::size_t tp_half = 0, fp_half = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        if (scores[j] >= 0.5) {
            if (truths[j])
                ++tp_half;
            else
                ++fp_half;
        }
    }
    entry.at_threshold_half = {static_cast<double>(fp_half) / static_cast<double>(n_neg),
                               static_cast<double>(tp_half) / static_cast<double>(n_pos)};
    return entry;
}

int patient_vote(const std::vector<std::pair<int, std::vector<float>>>& clip_predictions, int k) {
    if (clip_predictions.empty()) throw EmptyVoteSet("patient_vote: no clip predictions");
    std::vector<long long> votes(static_cast<std::size_t>(k), 0);
    std::vector<double> prob_sums(static_cast<std::size_t>(k), 0.0);
    for (const auto& [label, probs] : clip_predictions) {
        if (label < 0 || label >= k) throw LabelOutOfRange("patient_vote: label outside [0, k)");
        ++votes[static_cast<std::size_t>(label)];
        for (std::size_t c = 0; c < probs.size() && c < static_cast<std::size_t>(k); ++c)
            prob_sums[c] += probs[c];
    }
    const long long top = *std::max_element(votes.begin(), votes.end());
    int best = -1;
    for (int c = 0; c < k; ++c) {
        if (votes[static_cast<std::size_t>(c)] != top) continue;
        if (best < 0 || prob_sums[static_cast<std::size_t>(c)] > prob_sums[static_cast<std::size_t>(best)])
            best = c;
    }
    return best;
}

EvalReport evaluate(const clf::Model& model, std::span<const EvalItem> items) {
    if (items.empty()) throw EmptyDataset("evaluate: no items");
    const int k = model.arch.n_classes;

    // scoring parallelizes over contiguous ranges, one scorer per worker;
    // everything after this is a single-threaded reduction
    std::vector<int> truths(items.size());
    std::vector<int> preds(items.size());
    std::vector<std::vector<float>> probs(items.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(worker_threads(), items.size()));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = items.size() * w / workers;
        const std::size_t end = items.size() * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            clf::Scorer scorer(model);
            for (std::size_t i = begin; i < end; ++i) {
                auto [label, p] = scorer.predict(*items[i].x);
                truths[i] = items[i].label;
                preds[i] = label;
                probs[i] = std::move(p);
            }
        });
    }
    for (auto& t : pool) t.join();

    EvalReport report;
    report.labels = model.label_names;
    report.confusion = confusion_matrix(truths, preds, k);
    report.confusion.labels = model.label_names;
    const ClassMetrics cm = class_metrics(report.confusion);
    report.per_class = cm.per_class;
    report.clip_accuracy = cm.accuracy;

    for (int c = 0; c < k; ++c) {
        std::vector<double> scores(items.size());
        std::vector<std::uint8_t> binary(items.size());
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            scores[i] = probs[i][static_cast<std::size_t>(c)];
            binary[i] = truths[i] == c ? 1 : 0;
            n_pos += binary[i];
        }
        if (n_pos == 0 || n_pos == items.size()) continue;  // ROC undefined for this class
        RocEntry entry = roc_curve(scores, binary);
        entry.label = model.label_names[static_cast<std::size_t>(c)];
        report.roc.push_back(std::move(entry));
    }

    // patient-level voting, patients in first-appearance order
    std::vector<std::string> patient_order;
    std::map<std::string, std::vector<std::size_t>> by_patient;
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto [it, inserted] = by_patient.try_emplace(items[i].patient_id);
        if (inserted) patient_order.push_back(items[i].patient_id);
        it->second.push_back(i);
    }
    std::size_t patients_correct = 0;
    for (const auto& pid : patient_order) {
        const auto& clip_idx = by_patient[pid];
        std::vector<std::pair<int, std::vector<float>>> clip_preds;
        clip_preds.reserve(clip_idx.size());
        for (std::size_t i : clip_idx) clip_preds.emplace_back(preds[i], probs[i]);
        PatientOutcome outcome;
        outcome.patient_id = pid;
        outcome.truth = truths[clip_idx.front()];
        outcome.voted = patient_vote(clip_preds, k);
        if (outcome.voted == outcome.truth) ++patients_correct;
        report.patients.push_back(std::move(outcome));
    }
    report.patient_accuracy =
        static_cast<double>(patients_correct) / static_cast<double>(patient_order.size());
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    json j;
    j["clip_accuracy"] = report.clip_accuracy;
    j["patient_accuracy"] = report.patient_accuracy;
    json confusion = json::array();
    for (std::size_t t = 0; t < report.confusion.k; ++t) {
        json row = json::array();
        for (std::size_t p = 0; p < report.confusion.k; ++p) row.push_back(report.confusion.at(t, p));
        confusion.push_back(std::move(row));
    }
    j["confusion"] = std::move(confusion);
    j["labels"] = report.labels;
    json per_class = json::array();
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const PerClass& pc = report.per_class[c];
        per_class.push_back({{"label", report.labels[c]},
                             {"precision", pc.precision},
                             {"recall", pc.recall},
                             {"f1", pc.f1},
                             {"support", pc.support}});
    }
    j["per_class"] = std::move(per_class);
    json roc = json::array();
    for (const RocEntry& entry : report.roc) {
        json points = json::array();
        for (const RocPoint& p : entry.points) points.push_back({p.fpr, p.tpr});
        roc.push_back({{"label", entry.label},
                       {"auc", entry.auc},
                       {"points", std::move(points)},
                       {"threshold_05", {entry.at_threshold_half.fpr, entry.at_threshold_half.tpr}}});
    }
    j["roc"] = std::move(roc);
    json patients = json::array();
    for (const PatientOutcome& p : report.patients)
        patients.push_back({{"patient_id", p.patient_id},
                            {"truth", report.labels[static_cast<std::size_t>(p.truth)]},
                            {"voted", report.labels[static_cast<std::size_t>(p.voted)]}});
    j["patients"] = std::move(patients);
    return j.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    EvalReport report;
    report.clip_accuracy = j.at("clip_accuracy").get<double>();
    report.patient_accuracy = j.at("patient_accuracy").get<double>();
    report.labels = j.at("labels").get<std::vector<std::string>>();
    const auto& confusion = j.at("confusion");
    report.confusion.k = confusion.size();
    report.confusion.labels = report.labels;
    report.confusion.counts.reserve(report.confusion.k * report.confusion.k);
    for (const auto& row : confusion)
        for (const auto& v : row) report.confusion.counts.push_back(v.get<long long>());
    for (const auto& pc : j.at("per_class")) {
        PerClass out;
        out.precision = pc.at("precision").get<double>();
        out.recall = pc.at("recall").get<double>();
        out.f1 = pc.at("f1").get<double>();
        out.support = pc.at("support").get<long long>();
        report.per_class.push_back(out);
    }
    for (const auto& entry : j.at("roc")) {
        RocEntry out;
        out.label = entry.at("label").get<std::string>();
        out.auc = entry.at("auc").get<double>();
        for (const auto& p : entry.at("points"))
            out.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        const auto& half = entry.at("threshold_05");
        out.at_threshold_half = {half.at(0).get<double>(), half.at(1).get<double>()};
        report.roc.push_back(std::move(out));
    }
    if (j.contains("patients")) {
        auto label_index = [&](const std::string& name) {
            const auto it = std::find(report.labels.begin(), report.labels.end(), name);
            return static_cast<int>(it - report.labels.begin());
        };
        for (const auto& p : j.at("patients")) {
            PatientOutcome out;
            out.patient_id = p.at("patient_id").get<std::string>();
            out.truth = label_index(p.at("truth").get<std::string>());
            out.voted = label_index(p.at("voted").get<std::string>());
            report.patients.push_back(std::move(out));
        }
    }
    return report;
}

void write_roc_csv(const RocEntry& entry, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << "fpr,tpr\n";
    char buf[64];
    for (const RocPoint& p : entry.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.fpr, p.tpr);
        out << buf;
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace voiceclef::metrics

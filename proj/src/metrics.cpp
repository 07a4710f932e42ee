// SPDX-License-Identifier: Apache-2.0
#include "hmtl/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "hmtl/error.hpp"
#include "hmtl/losses.hpp"
#include "hmtl/numeric.hpp"

namespace hmtl {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes) : k_(num_classes), counts_(num_classes * num_classes, 0) {
    if (k_ == 0) throw DataError("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes, std::vector<std::size_t> row_major_counts)
    : k_(num_classes), counts_(std::move(row_major_counts)) {
    if (k_ == 0 || counts_.size() != k_ * k_) throw DataError("confusion matrix counts do not form a K x K matrix");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t prediction, std::size_t count) {
    if (truth >= k_ || prediction >= k_) throw DataError("confusion matrix index out of range");
    counts_[truth * k_ + prediction] += count;
}

std::size_t ConfusionMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::string ConfusionMatrix::to_csv(const std::vector<std::string>& class_names) const {
    auto name = [&](std::size_t i) { return i < class_names.size() ? class_names[i] : std::to_string(i); };
    std::ostringstream os;
    os << "truth\\pred";
    for (std::size_t c = 0; c < k_; ++c) os << ',' << name(c);
    os << '\n';
    for (std::size_t r = 0; r < k_; ++r) {
        os << name(r);
        for (std::size_t c = 0; c < k_; ++c) os << ',' << at(r, c);
        os << '\n';
    }
    return os.str();
}

namespace {

double f1(double tp, double fp, double fn) {
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

}  // namespace

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
    const std::size_t k = cm.num_classes();
    const std::size_t total = cm.total();
    if (total == 0) throw DataError("classification_metrics: empty confusion matrix");

    ClassificationMetrics m;
    std::size_t trace = 0;
    std::vector<double> recalls;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t row = 0, col = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += cm.at(c, j);
            col += cm.at(j, c);
        }
        const double tp = static_cast<double>(cm.at(c, c));
        trace += cm.at(c, c);
        m.per_class_f1.push_back(f1(tp, static_cast<double>(col) - tp, static_cast<double>(row) - tp));
        const double recall = row > 0 ? tp / static_cast<double>(row) : std::numeric_limits<double>::quiet_NaN();
        m.per_class_recall.push_back(recall);
        if (row > 0) recalls.push_back(recall);
    }
    m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    m.macro_f1 = mean(m.per_class_f1);
    m.uar = mean(recalls);
    // Row-normalized diagonal: identical to the mean per-class recall.
    m.mean_diag = m.uar;
    return m;
}

std::vector<Annotation> threshold_probabilities(std::span<const double> probs, double threshold) {
    std::vector<Annotation> out(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
        out[i] = probs[i] >= threshold ? Annotation::Positive : Annotation::Negative;
    return out;
}

AuMetrics au_metrics(const std::vector<std::vector<Annotation>>& predictions,
                     const std::vector<std::vector<Annotation>>& truth) {
    if (predictions.size() != truth.size()) throw DataError("au_metrics: prediction/truth count mismatch");
    if (truth.empty()) throw DataError("au_metrics: no samples");
    const std::size_t width = truth.front().size();
    AuMetrics m;
    std::vector<double> f1s, accs;
    for (std::size_t a = 0; a < width; ++a) {
        double tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i].size() != width || predictions[i].size() != width)
                throw DataError("au_metrics: ragged label vectors");
            if (!annotated(truth[i][a])) continue;
            const bool t = truth[i][a] == Annotation::Positive;
            const bool p = predictions[i][a] == Annotation::Positive;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
            tn += !t && !p;
        }
        const double n = tp + fp + fn + tn;
        if (n == 0) {
            m.per_au_f1.push_back(std::numeric_limits<double>::quiet_NaN());
            m.per_au_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
            m.warnings.push_back("label " + std::to_string(a) + " has no annotated entries; excluded from means");
            continue;
        }
        m.per_au_f1.push_back(f1(tp, fp, fn));
        m.per_au_accuracy.push_back((tp + tn) / n);
        f1s.push_back(m.per_au_f1.back());
        accs.push_back(m.per_au_accuracy.back());
    }
    if (f1s.empty()) throw DataError("au_metrics: no annotated entries at all");
    m.mean_f1 = mean(f1s);
    m.mean_accuracy = mean(accs);
    m.afa = 0.5 * (m.mean_f1 + m.mean_accuracy);
    return m;
}

VaMetrics va_metrics(std::span<const VaPair> truth, std::span<const VaPair> predictions) {
    if (truth.size() != predictions.size()) throw DataError("va_metrics: length mismatch");
    if (truth.size() < 2) throw DataError("va_metrics: need at least two samples");
    std::vector<double> tv, ta, pv, pa;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        tv.push_back(truth[i].valence);
        ta.push_back(truth[i].arousal);
        pv.push_back(predictions[i].valence);
        pa.push_back(predictions[i].arousal);
    }
    VaMetrics m;
    m.ccc_v = ccc(tv, pv);
    m.ccc_a = ccc(ta, pa);
    m.mean_ccc = 0.5 * (m.ccc_v + m.ccc_a);
    return m;
}

namespace {

nlohmann::json nan_to_null(const std::vector<double>& xs) {
    nlohmann::json arr = nlohmann::json::array();
    for (double x : xs) arr.push_back(std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x));
    return arr;
}

}  // namespace

nlohmann::json to_json(const ClassificationMetrics& m) {
    return {{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1},       {"uar", m.uar},
            {"mean_diag", m.mean_diag}, {"per_class_f1", m.per_class_f1}, {"per_class_recall", nan_to_null(m.per_class_recall)}};
}

nlohmann::json to_json(const AuMetrics& m) {
    return {{"mean_f1", m.mean_f1},
            {"mean_accuracy", m.mean_accuracy},
            {"afa", m.afa},
            {"per_au_f1", nan_to_null(m.per_au_f1)},
            {"per_au_accuracy", nan_to_null(m.per_au_accuracy)},
            {"warnings", m.warnings}};
}

nlohmann::json to_json(const VaMetrics& m) {
    return {{"ccc_v", m.ccc_v}, {"ccc_a", m.ccc_a}, {"mean_ccc", m.mean_ccc}};
}

}  // namespace hmtl

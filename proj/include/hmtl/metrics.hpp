// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmtl/affect.hpp"
#include "hmtl/labels.hpp"

namespace hmtl {

/// Rows are ground truth, columns predictions.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes);
    ConfusionMatrix(std::size_t num_classes, std::vector<std::size_t> row_major_counts);

    void add(std::size_t truth, std::size_t prediction, std::size_t count = 1);
    std::size_t at(std::size_t truth, std::size_t prediction) const { return counts_[truth * k_ + prediction]; }
    std::size_t num_classes() const noexcept { return k_; }
    std::size_t total() const noexcept;
    std::string to_csv(const std::vector<std::string>& class_names = {}) const;

private:
    std::size_t k_;
    std::vector<std::size_t> counts_;
};

struct ClassificationMetrics {
    double accuracy = 0.0;
    std::vector<double> per_class_f1;
    std::vector<double> per_class_recall;
    double macro_f1 = 0.0;
    double uar = 0.0;
    double mean_diag = 0.0;
};

/// F1 is 0 when precision + recall is 0. Classes without ground-truth
/// samples have no recall and are left out of UAR and mean_diag.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

struct AuMetrics {
    std::vector<double> per_au_f1;        // NaN for AUs without annotations
    std::vector<double> per_au_accuracy;  // NaN for AUs without annotations
    double mean_f1 = 0.0;
    double mean_accuracy = 0.0;
    double afa = 0.0;  // (mean F1 + mean accuracy) / 2
    std::vector<std::string> warnings;
};

inline constexpr double kDefaultAuThreshold = 0.5;

/// Scores only annotated entries of each label column.
AuMetrics au_metrics(const std::vector<std::vector<Annotation>>& predictions,
                     const std::vector<std::vector<Annotation>>& truth);
std::vector<Annotation> threshold_probabilities(std::span<const double> probs, double threshold = kDefaultAuThreshold);

struct VaMetrics {
    double ccc_v = 0.0;
    double ccc_a = 0.0;
    double mean_ccc = 0.0;
};

VaMetrics va_metrics(std::span<const VaPair> truth, std::span<const VaPair> predictions);

nlohmann::json to_json(const ClassificationMetrics& m);
nlohmann::json to_json(const AuMetrics& m);
nlohmann::json to_json(const VaMetrics& m);

}  // namespace hmtl

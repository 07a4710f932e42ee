// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hmtl/affect.hpp"
#include "hmtl/relatedness.hpp"

namespace hmtl {

struct VaPair {
    double valence = 0.0;
    double arousal = 0.0;
    friend bool operator==(const VaPair&, const VaPair&) = default;
};

struct SequenceKey {
    std::string video;
    long frame = 0;
    friend bool operator==(const SequenceKey&, const SequenceKey&) = default;
};

/// One training/evaluation image with whichever labels its source provides.
///
/// In the recognition configuration (identities and attributes) the same
/// record is reused: `expr` carries the identity index and `au` the
/// attribute vector.
struct HeterogeneousSample {
    std::string id;
    std::vector<double> features;
    std::optional<VaPair> va;
    std::optional<std::size_t> expr;
    std::optional<std::vector<Annotation>> au;
    /// Per-label loss weights; zero where `au` is unannotated, in (0,1] elsewhere.
    std::optional<std::vector<double>> au_weights;
    std::optional<SequenceKey> sequence;
    /// Compound-expression ground truth, only used by zero-shot evaluation.
    std::optional<std::size_t> compound;

    bool has_any_label() const { return va || expr || au; }
    friend bool operator==(const HeterogeneousSample&, const HeterogeneousSample&) = default;
};

/// Throws DataError when the sample violates its invariants.
void validate(const HeterogeneousSample& sample);

struct EmotionSoftLabel {
    std::vector<double> indicator_scores;
    std::vector<double> q;  // softmax(indicator_scores)
};

/// Fills the expression's prototypical and observational AUs as active
/// targets, weighting observational ones by their table weight. AUs that
/// already carry a real annotation are left as they are.
HeterogeneousSample co_annotate_emotion_to_aus(const HeterogeneousSample& sample, const RelatednessTable& table);

/// Assigns the emotion whose full AU requirement is active; the largest
/// requirement wins, ties go to the lowest class index.
HeterogeneousSample co_annotate_aus_to_emotion(const HeterogeneousSample& sample, const RelatednessTable& table);

EmotionSoftLabel soft_co_annotate(const HeterogeneousSample& sample, const RelatednessTable& table,
                                  bool reweight_observational);

struct CleaningResult {
    std::vector<HeterogeneousSample> kept;
    std::vector<HeterogeneousSample> removed;
};

/// Drops samples whose valence/arousal contradict their expression label.
CleaningResult clean_va_expr(const std::vector<HeterogeneousSample>& samples);

/// True when (expr, va) satisfies the consistency rules used by clean_va_expr.
bool va_consistent_with_expression(std::size_t expr, const VaPair& va);

inline constexpr double kNeutralVaRadius = 0.15;
inline constexpr std::size_t kFrameStride = 5;

/// Keeps every fifth frame per video (positions 0, 5, 10, ... after sorting
/// by frame index). Samples without a sequence key pass through. Input order
/// is preserved among the kept samples.
std::vector<HeterogeneousSample> subsample_frames(const std::vector<HeterogeneousSample>& samples,
                                                  std::size_t stride = kFrameStride);

}  // namespace hmtl

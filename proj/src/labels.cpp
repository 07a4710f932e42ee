// SPDX-License-Identifier: Apache-2.0
#include "hmtl/labels.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "hmtl/error.hpp"
#include "hmtl/numeric.hpp"

namespace hmtl {

void validate(const HeterogeneousSample& s) {
    if (!s.has_any_label()) throw DataError("sample '" + s.id + "' carries no label");
    if (s.expr && *s.expr >= kNumEmotions)
        throw DataError("sample '" + s.id + "': expression index " + std::to_string(*s.expr) + " out of range");
    if (s.va) {
        const auto [v, a] = *s.va;
        if (!(v >= -1.0 && v <= 1.0 && a >= -1.0 && a <= 1.0))
            throw DataError("sample '" + s.id + "': valence/arousal outside [-1,1]");
    }
    if (s.au_weights) {
        if (!s.au) throw DataError("sample '" + s.id + "': AU weights without AU labels");
        if (s.au_weights->size() != s.au->size())
            throw DataError("sample '" + s.id + "': AU weight vector length mismatch");
        for (std::size_t i = 0; i < s.au->size(); ++i) {
            const double w = (*s.au_weights)[i];
            const bool ok = annotated((*s.au)[i]) ? (w > 0.0 && w <= 1.0) : (w == 0.0);
            if (!ok) throw DataError("sample '" + s.id + "': AU weight defined where no annotation exists");
        }
    }
}

namespace {

void require_domain_table(const RelatednessTable& table, const char* op) {
    if (table.kind() != TableKind::PrototypicalObservational)
        throw ConfigError(std::string(op) + " requires a prototypical/observational relatedness table");
}

}  // namespace

HeterogeneousSample co_annotate_emotion_to_aus(const HeterogeneousSample& sample, const RelatednessTable& table) {
    require_domain_table(table, "co_annotate_emotion_to_aus");
    if (!sample.expr) throw DataError("co_annotate_emotion_to_aus: sample '" + sample.id + "' has no expression");
    const auto entries = table.lookup(*sample.expr);
    if (entries.empty()) return sample;

    HeterogeneousSample out = sample;
    const std::size_t n = table.num_labels();
    if (!out.au) out.au = std::vector<Annotation>(n, Annotation::Missing);
    if (out.au->size() != n) throw DataError("co_annotate_emotion_to_aus: AU vector length mismatch");
    if (!out.au_weights) {
        out.au_weights = std::vector<double>(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (annotated((*out.au)[i])) (*out.au_weights)[i] = 1.0;
    }
    for (const auto& e : entries) {
        if (annotated((*out.au)[e.label])) continue;
        (*out.au)[e.label] = Annotation::Positive;
        (*out.au_weights)[e.label] = e.weight;
    }
    return out;
}

HeterogeneousSample co_annotate_aus_to_emotion(const HeterogeneousSample& sample, const RelatednessTable& table) {
    require_domain_table(table, "co_annotate_aus_to_emotion");
    if (!sample.au) throw DataError("co_annotate_aus_to_emotion: sample '" + sample.id + "' has no AU labels");
    if (sample.expr) return sample;
    const auto& au = *sample.au;
    if (au.size() != table.num_labels()) throw DataError("co_annotate_aus_to_emotion: AU vector length mismatch");

    std::optional<std::size_t> best;
    std::size_t best_count = 0;
    for (std::size_t c = 0; c < table.num_classes(); ++c) {
        const auto entries = table.lookup(c);
        if (entries.empty()) continue;
        const bool covered = std::all_of(entries.begin(), entries.end(),
                                         [&](const auto& e) { return au[e.label] == Annotation::Positive; });
        if (covered && entries.size() > best_count) {
            best = c;
            best_count = entries.size();
        }
    }
    if (!best) return sample;
    HeterogeneousSample out = sample;
    out.expr = best;
    return out;
}

EmotionSoftLabel soft_co_annotate(const HeterogeneousSample& sample, const RelatednessTable& table,
                                  bool reweight_observational) {
    if (!sample.au) throw DataError("soft_co_annotate: sample '" + sample.id + "' has no AU labels");
    const auto& au = *sample.au;
    if (au.size() != table.num_labels()) throw DataError("soft_co_annotate: AU vector length mismatch");

    EmotionSoftLabel out;
    out.indicator_scores.assign(table.num_classes(), 0.0);
    for (std::size_t c = 0; c < table.num_classes(); ++c) {
        double num = 0.0, den = 0.0;
        for (const auto& e : table.lookup(c)) {
            const double w = reweight_observational ? e.weight : 1.0;
            num += w * (au[e.label] == Annotation::Positive ? 1.0 : 0.0);
            den += w;
        }
        out.indicator_scores[c] = den > 0.0 ? num / den : 0.0;
    }
    out.q = softmax(out.indicator_scores);
    return out;
}

bool va_consistent_with_expression(std::size_t expr, const VaPair& va) {
    switch (static_cast<Emotion>(expr)) {
        case Emotion::Neutral:
            return std::hypot(va.valence, va.arousal) < kNeutralVaRadius;
        case Emotion::Sadness:
        case Emotion::Disgust:
        case Emotion::Fear:
            return va.valence < 0.0;
        case Emotion::Anger:
            return va.valence < 0.0 && va.arousal > 0.0;
        case Emotion::Happiness:
            return va.valence > 0.0;
        default:
            return true;
    }
}

CleaningResult clean_va_expr(const std::vector<HeterogeneousSample>& samples) {
    CleaningResult out;
    for (const auto& s : samples) {
        const bool check = s.va && s.expr;
        if (check && !va_consistent_with_expression(*s.expr, *s.va))
            out.removed.push_back(s);
        else
            out.kept.push_back(s);
    }
    return out;
}

std::vector<HeterogeneousSample> subsample_frames(const std::vector<HeterogeneousSample>& samples,
                                                  std::size_t stride) {
    if (stride == 0) throw ConfigError("subsample_frames: stride must be positive");
    std::map<std::string, std::vector<std::size_t>> by_video;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].sequence) by_video[samples[i].sequence->video].push_back(i);

    std::vector<bool> keep(samples.size(), true);
    for (auto& [video, idx] : by_video) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return samples[a].sequence->frame < samples[b].sequence->frame;
        });
        for (std::size_t pos = 0; pos < idx.size(); ++pos) keep[idx[pos]] = pos % stride == 0;
    }
    std::vector<HeterogeneousSample> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (keep[i]) out.push_back(samples[i]);
    return out;
}

}  // namespace hmtl

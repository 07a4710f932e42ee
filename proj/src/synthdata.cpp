// SPDX-License-Identifier: Apache-2.0
#include "hmtl/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hmtl/error.hpp"

namespace hmtl {

std::array<VaPair, kNumEmotions> default_va_means() {
    std::array<VaPair, kNumEmotions> m{};
    m[index_of(Emotion::Neutral)] = {0.0, 0.0};
    m[index_of(Emotion::Anger)] = {-0.5, 0.5};
    m[index_of(Emotion::Disgust)] = {-0.5, 0.2};
    m[index_of(Emotion::Fear)] = {-0.4, 0.6};
    m[index_of(Emotion::Happiness)] = {0.6, 0.3};
    m[index_of(Emotion::Sadness)] = {-0.5, -0.3};
    m[index_of(Emotion::Surprise)] = {0.2, 0.6};
    return m;
}

GeneratorSpec default_generator_spec(RelatednessTable relatedness, std::uint64_t seed) {
    GeneratorSpec spec{std::move(relatedness), default_va_means()};
    spec.seed = seed;
    return spec;
}

void validate(const GeneratorSpec& spec) {
    if (spec.relatedness.num_classes() != kNumEmotions || spec.relatedness.num_labels() != kNumAus)
        throw ConfigError("generator: relatedness must map the 7 emotions onto the 17 canonical AUs");
    if (spec.class_prior.size() != kNumEmotions) throw ConfigError("generator: class prior must have 7 entries");
    double total = 0.0;
    for (double p : spec.class_prior) {
        if (!(p >= 0.0)) throw ConfigError("generator: negative class prior");
        total += p;
    }
    if (!(total > 0.0)) throw ConfigError("generator: degenerate class prior");
    if (!(spec.noise_scale >= 0.0)) throw ConfigError("generator: noise scale must be >= 0");
    if (spec.feature_dim == 0) throw ConfigError("generator: feature_dim must be positive");
    if (spec.feature_map == FeatureMap::Identity && spec.feature_dim < kLatentDim)
        throw ConfigError("generator: identity feature map needs feature_dim >= " + std::to_string(kLatentDim));
    for (std::size_t e = 0; e < kNumEmotions; ++e)
        if (!va_consistent_with_expression(e, spec.va_means[e]))
            throw ConfigError("generator: VA mean of " + std::string(emotion_name(e)) +
                              " violates its consistency rule");
}

namespace {

// Half-width of the uniform VA noise box that keeps every draw consistent
// with the emotion's rule.
double admissible_half_width(std::size_t emo, const VaPair& m, double noise) {
    constexpr double kShrink = 0.95;
    double margin = noise;
    switch (static_cast<Emotion>(emo)) {
        case Emotion::Neutral:
            margin = (kNeutralVaRadius - std::hypot(m.valence, m.arousal)) / std::sqrt(2.0);
            break;
        case Emotion::Sadness:
        case Emotion::Disgust:
        case Emotion::Fear:
            margin = -m.valence;
            break;
        case Emotion::Anger:
            margin = std::min(-m.valence, m.arousal);
            break;
        case Emotion::Happiness:
            margin = m.valence;
            break;
        default:
            return noise;
    }
    return std::min(noise, kShrink * margin);
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), tag};
    return std::mt19937_64(seq);
}

std::vector<double> feature_matrix_for(const GeneratorSpec& spec) {
    std::vector<double> m(spec.feature_dim * kLatentDim, 0.0);
    if (spec.feature_map == FeatureMap::Identity) {
        for (std::size_t i = 0; i < kLatentDim; ++i) m[i * kLatentDim + i] = 1.0;
        return m;
    }
    auto rng = stream_rng(spec.seed, 0, 0xFEA7u);
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(kLatentDim)));
    for (double& v : m) v = dist(rng);
    return m;
}

struct Latent {
    std::vector<double> mix;  // emotion weights, one-hot for basic samples
    std::vector<Annotation> au;
    VaPair va;
};

std::vector<double> embed(const GeneratorSpec& spec, const std::vector<double>& map, const Latent& z,
                          std::mt19937_64& rng) {
    std::array<double, kLatentDim> x{};
    std::copy(z.mix.begin(), z.mix.end(), x.begin());
    for (std::size_t a = 0; a < kNumAus; ++a) x[kNumEmotions + a] = z.au[a] == Annotation::Positive ? 1.0 : 0.0;
    x[kNumEmotions + kNumAus] = z.va.valence;
    x[kNumEmotions + kNumAus + 1] = z.va.arousal;
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> f(spec.feature_dim);
    for (std::size_t r = 0; r < spec.feature_dim; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < kLatentDim; ++c) s += map[r * kLatentDim + c] * x[c];
        f[r] = s + (spec.noise_scale > 0.0 ? spec.noise_scale * noise(rng) : 0.0);
    }
    return f;
}

VaPair draw_va(const VaPair& mean, double half_width, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double v = std::clamp(mean.valence + half_width * u(rng), -1.0, 1.0);
    const double a = std::clamp(mean.arousal + half_width * u(rng), -1.0, 1.0);
    return {v, a};
}

}  // namespace

std::vector<HeterogeneousSample> generate_full(const GeneratorSpec& spec, std::size_t n, std::uint64_t stream,
                                               const std::string& id_prefix) {
    validate(spec);
    const auto map = feature_matrix_for(spec);
    auto rng = stream_rng(spec.seed, stream, 0xDA7Au);
    std::discrete_distribution<std::size_t> prior(spec.class_prior.begin(), spec.class_prior.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<HeterogeneousSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t emo = prior(rng);
        Latent z{std::vector<double>(kNumEmotions, 0.0), std::vector<Annotation>(kNumAus, Annotation::Negative), {}};
        z.mix[emo] = 1.0;
        for (std::size_t a = 0; a < kNumAus; ++a)
            if (unit(rng) < spec.relatedness.weight(emo, a)) z.au[a] = Annotation::Positive;
        z.va = draw_va(spec.va_means[emo], admissible_half_width(emo, spec.va_means[emo], spec.noise_scale), rng);

        HeterogeneousSample s;
        s.id = id_prefix + std::to_string(i);
        s.features = embed(spec, map, z, rng);
        s.va = z.va;
        s.expr = emo;
        s.au = z.au;
        out.push_back(std::move(s));
    }
    return out;
}

GeneratedSets generate(const GeneratorSpec& spec, std::size_t n, const Partition& partition, std::uint64_t stream) {
    const double total = partition.va + partition.au + partition.expr;
    if (partition.va < 0 || partition.au < 0 || partition.expr < 0 || std::abs(total - 1.0) > 1e-9)
        throw ConfigError("generate: partition fractions must be non-negative and sum to 1");
    auto full = generate_full(spec, n, stream);

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = stream_rng(spec.seed, stream, 0x5917u);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_va = static_cast<std::size_t>(std::llround(partition.va * static_cast<double>(n)));
    const auto n_au = std::min(n - n_va, static_cast<std::size_t>(std::llround(partition.au * static_cast<double>(n))));

    // role[i]: 0 = VA set, 1 = AU set, 2 = EXPR set; sets keep draw order.
    std::vector<int> role(n, 2);
    for (std::size_t k = 0; k < n; ++k) role[idx[k]] = k < n_va ? 0 : (k < n_va + n_au ? 1 : 2);

    GeneratedSets sets;
    for (std::size_t i = 0; i < n; ++i) {
        HeterogeneousSample s = std::move(full[i]);
        if (role[i] == 0) {
            s.expr.reset();
            s.au.reset();
            sets.va_set.push_back(std::move(s));
        } else if (role[i] == 1) {
            s.expr.reset();
            s.va.reset();
            sets.au_set.push_back(std::move(s));
        } else {
            s.va.reset();
            s.au.reset();
            sets.expr_set.push_back(std::move(s));
        }
    }
    return sets;
}

std::vector<HeterogeneousSample> generate_compound(const GeneratorSpec& spec, std::size_t n,
                                                   const std::vector<CompoundClass>& classes, std::uint64_t stream) {
    validate(spec);
    if (classes.empty()) throw ConfigError("generate_compound: no compound classes");
    const auto map = feature_matrix_for(spec);
    auto rng = stream_rng(spec.seed, stream, 0xC0DEu);
    std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<HeterogeneousSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = pick(rng);
        const auto& cls = classes[c];
        Latent z{std::vector<double>(kNumEmotions, 0.0), std::vector<Annotation>(kNumAus, Annotation::Negative), {}};
        z.mix[cls.emo1] = 0.5;
        z.mix[cls.emo2] = 0.5;
        for (std::size_t a = 0; a < kNumAus; ++a) {
            const double w = std::max(spec.relatedness.weight(cls.emo1, a), spec.relatedness.weight(cls.emo2, a));
            if (unit(rng) < w) z.au[a] = Annotation::Positive;
        }
        const VaPair& m1 = spec.va_means[cls.emo1];
        const VaPair& m2 = spec.va_means[cls.emo2];
        const VaPair mid{0.5 * (m1.valence + m2.valence), 0.5 * (m1.arousal + m2.arousal)};
        z.va = draw_va(mid, std::min(spec.noise_scale, 0.5 * std::abs(mid.valence)), rng);

        HeterogeneousSample s;
        s.id = "c" + std::to_string(i);
        s.features = embed(spec, map, z, rng);
        s.compound = c;
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace hmtl

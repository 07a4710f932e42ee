// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hmtl/labels.hpp"
#include "hmtl/relatedness.hpp"
#include "hmtl/zeroshot.hpp"

namespace hmtl {

enum class FeatureMap { Random, Identity };

/// Generative model for synthetic affect data. Emotion drives AU
/// activations (Bernoulli per related AU), valence/arousal (per-emotion mean
/// plus bounded uniform noise) and, through a fixed linear map, the
/// features.
struct GeneratorSpec {
    RelatednessTable relatedness;
    std::array<VaPair, kNumEmotions> va_means;
    std::size_t feature_dim = 32;
    double noise_scale = 0.3;
    std::vector<double> class_prior = std::vector<double>(kNumEmotions, 1.0 / kNumEmotions);
    FeatureMap feature_map = FeatureMap::Random;
    std::uint64_t seed = 0;
};

/// Valence/arousal means that satisfy the expression consistency rules.
std::array<VaPair, kNumEmotions> default_va_means();
GeneratorSpec default_generator_spec(RelatednessTable relatedness, std::uint64_t seed);

/// Throws when the prior is degenerate or a VA mean breaks its emotion's rule.
void validate(const GeneratorSpec& spec);

/// Width of the latent vector [emotion one-hot, AU vector, (v, a)].
inline constexpr std::size_t kLatentDim = kNumEmotions + kNumAus + 2;

/// Fully labelled draw. `stream` selects an independent sample stream while
/// keeping the feature map fixed; ids are "<prefix><index>".
std::vector<HeterogeneousSample> generate_full(const GeneratorSpec& spec, std::size_t n, std::uint64_t stream = 0,
                                               const std::string& id_prefix = "s");

struct Partition {
    double va = 1.0 / 3.0;
    double au = 1.0 / 3.0;
    double expr = 1.0 / 3.0;
};

struct GeneratedSets {
    std::vector<HeterogeneousSample> va_set;
    std::vector<HeterogeneousSample> au_set;
    std::vector<HeterogeneousSample> expr_set;
};

/// Draws n samples and splits them into three disjoint sets that each keep
/// exactly one label type.
GeneratedSets generate(const GeneratorSpec& spec, std::size_t n, const Partition& partition, std::uint64_t stream = 0);

/// Compound-expression samples: a uniformly chosen class blends its two
/// constituents (half weight each in the emotion slot, AUs active if either
/// constituent activates them, VA at the constituents' midpoint). Only the
/// compound label is kept.
std::vector<HeterogeneousSample> generate_compound(const GeneratorSpec& spec, std::size_t n,
                                                   const std::vector<CompoundClass>& classes,
                                                   std::uint64_t stream = 0);

}  // namespace hmtl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmtl/model.hpp"
#include "hmtl/relatedness.hpp"

namespace hmtl {

/// A blend of two basic emotions scored from basic-task predictions.
struct CompoundClass {
    std::string name;
    std::size_t emo1 = 0;
    std::size_t emo2 = 0;
    std::map<std::size_t, double> au_profile;  // canonical AU index -> p(au | compound)
    bool requires_positive_valence = false;
    bool operator==(const CompoundClass&) const = default;
};

struct CompoundScore {
    double i_au = 0.0;
    double f_emo = 0.0;
    double d_va = 0.0;
    double total = 0.0;
};

/// Throws DataError when a class breaks its invariants (equal constituents,
/// empty profile, AU outside the canonical set, weight outside (0,1]).
void validate(const CompoundClass& cls);

/// The eleven two-emotion compound classes, each profiled by the union of its
/// constituents' related AUs. With `reweight_observational` observational AUs
/// keep their table weight, otherwise every related AU has weight 1. An AU
/// related to both constituents takes the larger weight.
std::vector<CompoundClass> default_compound_classes(const RelatednessTable& table, bool reweight_observational);

nlohmann::json to_json(const std::vector<CompoundClass>& classes);
std::vector<CompoundClass> compound_classes_from_json(const nlohmann::json& j);
std::vector<CompoundClass> load_compound_profiles(const std::filesystem::path& path);

/// Candidate score per class: AU indicator + constituent probabilities +
/// positive-valence bonus for flagged classes.
std::vector<CompoundScore> compound_scores(const PredictionBundle& bundle, const std::vector<CompoundClass>& classes);

/// Index of the highest total; ties resolve to the lowest index.
std::size_t predict_compound(const std::vector<CompoundScore>& scores);

}  // namespace hmtl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmtl/config.hpp"
#include "hmtl/labels.hpp"
#include "hmtl/model.hpp"
#include "hmtl/objective.hpp"
#include "hmtl/zeroshot.hpp"

namespace hmtl {

inline constexpr const char* kVersion = "0.1.0";

/// Library and toolchain versions recorded in every manifest.
nlohmann::json version_info();

struct TrainResult {
    std::filesystem::path out_dir;
    nlohmann::json manifest;
    MultiHeadModel model;
};

/// Trains per the config and writes into config.out:
///   losses.csv     one row per optimizer step
///   model.ckpt     final checkpoint (plus model_epochN.ckpt if requested)
///   relatedness.json, manifest.json
TrainResult run_train(const ExperimentConfig& config);

/// Same, on datasets already in memory (paths in the config are ignored).
struct TrainingData {
    std::vector<HeterogeneousSample> va, au, expr;
    std::optional<std::vector<HeterogeneousSample>> test;
};
TrainResult run_train(const ExperimentConfig& config, TrainingData data, const RelatednessTable& table);

/// Metrics for every requested task the dataset has labels for. VA
/// predictions of video-keyed samples are also median filtered per video
/// and scored separately.
nlohmann::json evaluate_model(const MultiHeadModel& model, const std::vector<HeterogeneousSample>& samples,
                              const std::set<std::string>& tasks, std::size_t median_window = kDefaultMedianWindow);

/// Loads a checkpoint and a dataset, evaluates, and writes metrics.json and
/// manifest.json into `out` when it is non-empty.
nlohmann::json run_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset,
                        const std::set<std::string>& tasks, const std::filesystem::path& out,
                        std::size_t median_window = kDefaultMedianWindow);

struct ZeroShotResult {
    std::vector<std::vector<CompoundScore>> scores;  // per sample, per class
    std::vector<std::size_t> predictions;
    nlohmann::json metrics;  // empty without compound ground truth
};

ZeroShotResult zero_shot(const MultiHeadModel& model, const std::vector<HeterogeneousSample>& samples,
                         const std::vector<CompoundClass>& classes);

/// Writes scores.csv (one row per sample and class), predictions.csv and
/// manifest.json into `out`. Without a profile file the default compound
/// classes are built from `relatedness`.
ZeroShotResult run_zero_shot(const std::filesystem::path& checkpoint,
                             const std::optional<std::filesystem::path>& profiles,
                             const std::filesystem::path& dataset, const RelatednessConfig& relatedness,
                             bool reweight_observational, const std::filesystem::path& out);

struct GradcheckConfig {
    std::vector<CouplingMode> modes{CouplingMode::None, CouplingMode::CoAnnotation, CouplingMode::SoftCoAnnotation,
                                    CouplingMode::DistrMatching, CouplingMode::SoftPlusDm};
    RelatednessConfig relatedness;
    bool reweight_observational = false;
    std::vector<std::size_t> trunk_widths{32, 32};
    std::size_t feature_dim = 32;
    std::size_t batch_size = 16;
    double tolerance = 1e-5;
    GradCheckOptions options;
    std::uint64_t seed = 0;
};

GradcheckConfig gradcheck_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct GradcheckOutcome {
    nlohmann::json report;
    bool passed = true;
};

/// Finite-difference check of the total loss and of each loss component
/// (other weights zeroed) for every configured coupling mode.
GradcheckOutcome run_gradcheck(const GradcheckConfig& config);

}  // namespace hmtl

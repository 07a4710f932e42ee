// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmtl/losses.hpp"
#include "hmtl/objective.hpp"
#include "hmtl/relatedness.hpp"
#include "hmtl/synthdata.hpp"

namespace hmtl {

enum class RelatednessSource { Domain, File, Empirical };

struct RelatednessConfig {
    RelatednessSource source = RelatednessSource::Domain;
    std::filesystem::path path;    // File: table JSON
    std::filesystem::path corpus;  // Empirical: co-annotated dataset CSV
    double threshold = kDefaultEmpiricalThreshold;
};

struct OptimizerConfig {
    double lr = SgdMomentum::kDefaultLearningRate;
    double momentum = SgdMomentum::kDefaultMomentum;
    std::size_t epochs = 10;
};

/// Training run description. Relative paths are resolved against the
/// directory of the config file.
struct ExperimentConfig {
    std::optional<std::filesystem::path> va_set, au_set, expr_set, test_set;
    RelatednessConfig relatedness;
    CouplingMode coupling = CouplingMode::None;
    bool reweight_observational = false;
    LossWeights loss_weights;
    std::set<std::string> tasks{"va", "expr", "au"};
    std::vector<std::size_t> trunk_widths{64, 64};
    std::optional<std::uint64_t> model_seed;  // defaults to the run seed
    std::size_t max_batch = 64;
    OptimizerConfig optimizer;
    double holdout_fraction = 0.1;  // used only without a test set
    std::size_t median_window = kDefaultMedianWindow;
    std::size_t checkpoint_every = 0;  // epochs; 0 keeps only the final checkpoint
    std::uint64_t seed = 0;
    std::filesystem::path out = "runs/default";

    void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Synthetic dataset generation settings for the `generate` command.
struct GenerateConfig {
    RelatednessConfig relatedness;
    std::size_t n = 6000;
    std::size_t test_n = 2000;
    std::size_t compound_n = 0;
    std::size_t feature_dim = 32;
    double noise_scale = 0.3;
    FeatureMap feature_map = FeatureMap::Random;
    Partition partition;
    std::optional<std::vector<double>> class_prior;
    std::uint64_t seed = 0;
    std::filesystem::path out = "data/synthetic";
};

GenerateConfig generate_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const GenerateConfig& config);

/// Builds the relatedness table a config refers to. The bundled domain
/// table lives in the data directory.
RelatednessTable resolve_relatedness(const RelatednessConfig& config);
std::filesystem::path data_dir();

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// 64-bit FNV-1a over the given bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace hmtl

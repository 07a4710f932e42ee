// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmtl/tensor.hpp"

namespace hmtl {

enum class HeadActivation { Tanh, Softmax, Sigmoid };

struct HeadSpec {
    std::string name;
    std::size_t width = 0;
    HeadActivation activation = HeadActivation::Softmax;
    friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

struct ModelSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> trunk_widths{64, 64};
    std::vector<HeadSpec> heads;
    std::uint64_t seed = 0;
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// VA (2, tanh), EXPR (7, softmax) and AU (17, sigmoid) heads.
ModelSpec affect_model_spec(std::size_t input_dim, std::vector<std::size_t> trunk_widths, std::uint64_t seed);
/// ID (num_ids, softmax) and ATTR (num_attrs, sigmoid) heads.
ModelSpec recognition_model_spec(std::size_t input_dim, std::vector<std::size_t> trunk_widths, std::size_t num_ids,
                                 std::size_t num_attrs, std::uint64_t seed);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

/// Fully connected layer, weight is out x in.
struct DenseLayer {
    Tensor weight;
    Tensor bias;
};

/// Post-activation outputs per head, each n x width.
using HeadOutputs = std::map<std::string, Tensor>;

struct ForwardPass {
    HeadOutputs outputs;
    std::vector<Tensor> activations;  // trunk input followed by every trunk layer output
    std::uint64_t version = 0;
    std::size_t batch_size() const { return activations.empty() ? 0 : activations.front().rows(); }
};

struct PredictionBundle {
    std::array<double, 2> va{0.0, 0.0};
    std::vector<double> expr_probs;
    std::vector<double> au_probs;
};

/// One gradient tensor per parameter tensor, in declaration order.
using Gradients = std::vector<Tensor>;

/// Shared tanh trunk feeding several task heads. Every head reads the same
/// final trunk feature.
class MultiHeadModel {
public:
    explicit MultiHeadModel(ModelSpec spec);

    const ModelSpec& spec() const noexcept { return spec_; }
    std::size_t feature_dim() const;
    std::size_t head_index(const std::string& name) const;
    bool has_head(const std::string& name) const;

    ForwardPass forward(const Tensor& batch) const;
    std::vector<PredictionBundle> bundles(const ForwardPass& pass) const;

    /// Backpropagates d loss / d head outputs (post-activation) to every
    /// parameter. Trunk gradients are zero while the trunk is frozen.
    Gradients backward(const ForwardPass& pass, const HeadOutputs& output_grads) const;

    /// Parameters in declaration order: trunk layers (weight, bias), then heads.
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;
    std::size_t parameter_count() const;
    std::size_t trunk_parameter_tensors() const { return 2 * trunk_.size(); }

    /// Attaches a freshly initialized softmax head (replacing one of the same
    /// name), leaving the other heads untouched.
    void replace_head(const std::string& name, std::size_t num_classes, bool freeze_trunk, std::uint64_t seed);
    void set_trunk_frozen(bool frozen) { trunk_frozen_ = frozen; }
    bool trunk_frozen() const noexcept { return trunk_frozen_; }

    /// Bumped whenever parameters change; forward passes remember it.
    std::uint64_t version() const noexcept { return version_; }
    void mark_updated() { ++version_; }

    void save(const std::filesystem::path& path) const;
    static MultiHeadModel load(const std::filesystem::path& path);
    std::vector<std::uint8_t> to_bytes() const;
    static MultiHeadModel from_bytes(std::span<const std::uint8_t> bytes);

private:
    ModelSpec spec_;
    std::vector<DenseLayer> trunk_;
    std::vector<DenseLayer> heads_;
    bool trunk_frozen_ = false;
    std::uint64_t version_ = 0;
};

/// Heavy-ball momentum: v <- momentum * v + g; theta <- theta - lr * v.
class SgdMomentum {
public:
    static constexpr double kDefaultLearningRate = 1e-4;
    static constexpr double kDefaultMomentum = 0.9;

    explicit SgdMomentum(double lr = kDefaultLearningRate, double momentum = kDefaultMomentum);

    void step(MultiHeadModel& model, const Gradients& grads);
    double learning_rate() const noexcept { return lr_; }
    double momentum() const noexcept { return momentum_; }

private:
    double lr_;
    double momentum_;
    std::vector<Tensor> velocity_;
};

/// Loss and d loss / d head outputs for one forward pass.
using OutputObjective = std::function<std::pair<double, HeadOutputs>(const HeadOutputs&)>;

struct GradCheckOptions {
    double step = 1e-5;
    std::size_t samples_per_tensor = 20;
    std::uint64_t seed = 1234;
    /// Test hook: mutates analytic gradients before comparison.
    std::function<void(Gradients&)> tamper;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::vector<double> per_tensor_error;
    std::size_t checked = 0;
    bool frozen_trunk_gradients_zero = true;
};

inline constexpr std::size_t kGradCheckMaxParameters = 10000;

/// Central differences on sampled parameters. Relative error is
/// |a - n| / max(|a|, |n|, 1e-6); frozen trunk parameters are only checked
/// for an exactly zero analytic gradient.
GradCheckReport gradient_check(MultiHeadModel model, const Tensor& batch, const OutputObjective& objective,
                               const GradCheckOptions& options = {});

/// Sliding median per column with edge replication; `window` must be odd.
std::vector<std::vector<double>> median_filter(const std::vector<std::vector<double>>& sequence, std::size_t window);
std::vector<double> median_filter(std::span<const double> sequence, std::size_t window);

inline constexpr std::size_t kDefaultMedianWindow = 5;

}  // namespace hmtl

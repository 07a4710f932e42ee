// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <set>
#include <span>
#include <string>

#include "hmtl/labels.hpp"
#include "hmtl/losses.hpp"
#include "hmtl/model.hpp"
#include "hmtl/relatedness.hpp"

namespace hmtl {

enum class CouplingMode { None, CoAnnotation, SoftCoAnnotation, DistrMatching, SoftPlusDm };

std::string to_string(CouplingMode mode);
CouplingMode parse_coupling_mode(const std::string& name);
bool uses_dm(CouplingMode mode);
bool uses_sca(CouplingMode mode);

/// Which heads play which role, which tasks contribute, and how the tasks
/// are coupled. The default describes the affect configuration.
struct ObjectiveConfig {
    CouplingMode coupling = CouplingMode::None;
    std::shared_ptr<const RelatednessTable> table;
    bool reweight_observational = false;
    LossWeights weights;
    std::set<std::string> tasks{"va", "expr", "au"};
    std::string regression_head = "va";
    std::string categorical_head = "expr";
    std::string binary_head = "au";

    void validate() const;
};

struct ObjectiveResult {
    LossReport report;
    HeadOutputs grads;  // d total / d head outputs
};

/// Applies co-annotation in both directions (emotion -> AUs, AUs -> emotion).
HeterogeneousSample co_annotate(const HeterogeneousSample& sample, const RelatednessTable& table);

/// Total multi-task loss of a joint batch and its gradient with respect to
/// the model's head outputs. Each task term averages over the samples that
/// carry that task's label; the distribution-matching term averages over
/// the whole batch and the soft co-annotation term over AU-labelled samples.
ObjectiveResult evaluate_objective(const HeadOutputs& outputs, std::span<const HeterogeneousSample> batch,
                                   const ObjectiveConfig& config);

/// Stacks sample features into an n x d batch tensor.
Tensor feature_matrix(std::span<const HeterogeneousSample> batch);

}  // namespace hmtl

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hmtl/affect.hpp"
#include "hmtl/labels.hpp"
#include "hmtl/relatedness.hpp"

namespace hmtl {

inline constexpr double kProbabilityEpsilon = 1e-7;
inline constexpr double kCccEpsilon = 1e-8;

/// Task and coupling-loss multipliers. Keys are head names ("va", "expr",
/// "au", or "id", "attr") and coupling names ("dm", "sca"); a missing key
/// means weight 1.
struct LossWeights {
    std::map<std::string, double> task;
    std::map<std::string, double> coupling;
    double epsilon = kProbabilityEpsilon;
    double ccc_epsilon = kCccEpsilon;

    double task_weight(const std::string& name) const;
    double coupling_weight(const std::string& name) const;
    void validate() const;
};

/// Value of a loss together with its gradient with respect to the
/// prediction vector it was evaluated on.
struct ValueGrad {
    double value = 0.0;
    std::vector<double> grad;
};

struct SoftTargets {
    std::vector<double> q;
};

/// Concordance correlation coefficient with population moments:
/// 2 cov(y, yhat) / (var y + var yhat + (mean y - mean yhat)^2 + eps).
double ccc(std::span<const double> y, std::span<const double> y_hat, double eps = kCccEpsilon);
/// Same, plus d ccc / d y_hat.
ValueGrad ccc_with_gradient(std::span<const double> y, std::span<const double> y_hat, double eps = kCccEpsilon);

struct VaLoss {
    double value = 0.0;
    std::vector<VaPair> grad;
};

/// 1 - (ccc_valence + ccc_arousal) / 2 over a batch of at least two pairs.
double ccc_loss(std::span<const VaPair> y, std::span<const VaPair> y_hat, double eps = kCccEpsilon);
VaLoss ccc_loss_with_gradient(std::span<const VaPair> y, std::span<const VaPair> y_hat, double eps = kCccEpsilon);

/// Masked (and optionally weighted) binary cross entropy averaged over the
/// annotated labels. `weights` empty means unit weights.
ValueGrad masked_bce(std::span<const double> p, std::span<const Annotation> y, std::span<const double> weights = {},
                     double eps = kProbabilityEpsilon);

ValueGrad softmax_ce(std::span<const double> p, std::size_t label, double eps = kProbabilityEpsilon);
ValueGrad softmax_ce(std::span<const double> p, std::span<const double> soft_label, double eps = kProbabilityEpsilon);

/// q_b = sum_k p_k r_kb, the relatedness-weighted mixture of class
/// probabilities. r_kb is 1 for related pairs unless `reweight` is set or
/// the table is empirical, in which case it is the table weight.
SoftTargets dm_targets(std::span<const double> p_cat, const RelatednessTable& table, bool reweight);

struct DmLoss {
    double value = 0.0;
    std::vector<double> grad_p;  // d/d p_bin
    std::vector<double> grad_q;  // d/d q
};

/// sum_i -p_i log q_i with q clamped to [eps, 1]; terms with p_i == 0 are skipped.
DmLoss dm_loss(std::span<const double> p_bin, std::span<const double> q, double eps = kProbabilityEpsilon);

/// sum_e -p_e log q_e: the prediction weights the log of the soft label.
ValueGrad sca_loss(std::span<const double> p_emo, std::span<const double> q_emo, double eps = kProbabilityEpsilon);

struct LossReport {
    std::map<std::string, double> task_losses;
    std::map<std::string, double> coupling_losses;
    double total = 0.0;
};

LossReport total_mt_loss(const std::map<std::string, double>& task_losses,
                         const std::map<std::string, double>& coupling_losses, const LossWeights& weights);

}  // namespace hmtl

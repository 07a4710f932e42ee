// SPDX-License-Identifier: Apache-2.0
#include "hmtl/losses.hpp"

#include <cmath>

#include "hmtl/error.hpp"
#include "hmtl/numeric.hpp"

namespace hmtl {

double LossWeights::task_weight(const std::string& name) const {
    const auto it = task.find(name);
    return it == task.end() ? 1.0 : it->second;
}

double LossWeights::coupling_weight(const std::string& name) const {
    const auto it = coupling.find(name);
    return it == coupling.end() ? 1.0 : it->second;
}

void LossWeights::validate() const {
    for (const auto* m : {&task, &coupling})
        for (const auto& [name, w] : *m)
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weight '" + name + "' must be >= 0");
    if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw ConfigError("epsilon must lie in (0, 1e-3]");
    if (!(ccc_epsilon > 0.0 && ccc_epsilon <= 1e-3)) throw ConfigError("ccc epsilon must lie in (0, 1e-3]");
}

namespace {

struct Moments {
    double mean_y, mean_p, var_y, var_p, cov;
};

Moments population_moments(std::span<const double> y, std::span<const double> p) {
    const std::size_t n = y.size();
    Moments m{};
    m.mean_y = mean(y);
    m.mean_p = mean(p);
    std::vector<double> dy2(n), dp2(n), dyp(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = y[i] - m.mean_y, b = p[i] - m.mean_p;
        dy2[i] = a * a;
        dp2[i] = b * b;
        dyp[i] = a * b;
    }
    m.var_y = mean(dy2);
    m.var_p = mean(dp2);
    m.cov = mean(dyp);
    return m;
}

void check_ccc_inputs(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw DataError("ccc: sequences differ in length");
    if (y.size() < 2) throw DataError("ccc: need at least two values");
}

// max(denominator, eps).
double ccc_denominator(const Moments& m, double eps) {
    const double d = m.mean_y - m.mean_p;
    return std::max(m.var_y + m.var_p + d * d, eps);
}

}  // namespace

double ccc(std::span<const double> y, std::span<const double> y_hat, double eps) {
    check_ccc_inputs(y, y_hat);
    const Moments m = population_moments(y, y_hat);
    return 2.0 * m.cov / ccc_denominator(m, eps);
}

ValueGrad ccc_with_gradient(std::span<const double> y, std::span<const double> y_hat, double eps) {
    check_ccc_inputs(y, y_hat);
    const Moments m = population_moments(y, y_hat);
    const std::size_t n = y.size();
    const double diff = m.mean_y - m.mean_p;
    const double raw_den = m.var_y + m.var_p + diff * diff;
    const bool floored = raw_den < eps;
    const double den = floored ? eps : raw_den;
    const double num = 2.0 * m.cov;

    ValueGrad out{num / den, std::vector<double>(n)};
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d_num = 2.0 * (y[i] - m.mean_y) * inv_n;
        const double d_den = floored ? 0.0 : 2.0 * ((y_hat[i] - m.mean_p) - diff) * inv_n;
        out.grad[i] = (d_num * den - num * d_den) / (den * den);
    }
    return out;
}

namespace {

void split_va(std::span<const VaPair> xs, std::vector<double>& v, std::vector<double>& a) {
    v.resize(xs.size());
    a.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        v[i] = xs[i].valence;
        a[i] = xs[i].arousal;
    }
}

}  // namespace

double ccc_loss(std::span<const VaPair> y, std::span<const VaPair> y_hat, double eps) {
    return ccc_loss_with_gradient(y, y_hat, eps).value;
}

VaLoss ccc_loss_with_gradient(std::span<const VaPair> y, std::span<const VaPair> y_hat, double eps) {
    if (y.size() != y_hat.size()) throw DataError("ccc_loss: batch sizes differ");
    if (y.size() < 2) throw DataError("ccc_loss: batch of " + std::to_string(y.size()) + " VA samples is too small");
    std::vector<double> yv, ya, pv, pa;
    split_va(y, yv, ya);
    split_va(y_hat, pv, pa);
    const ValueGrad rv = ccc_with_gradient(yv, pv, eps);
    const ValueGrad ra = ccc_with_gradient(ya, pa, eps);
    VaLoss out{1.0 - 0.5 * (rv.value + ra.value), std::vector<VaPair>(y.size())};
    for (std::size_t i = 0; i < y.size(); ++i) out.grad[i] = {-0.5 * rv.grad[i], -0.5 * ra.grad[i]};
    return out;
}

ValueGrad masked_bce(std::span<const double> p, std::span<const Annotation> y, std::span<const double> weights,
                     double eps) {
    if (p.size() != y.size()) throw DataError("masked_bce: prediction/label length mismatch");
    if (!weights.empty() && weights.size() != y.size()) throw DataError("masked_bce: weight length mismatch");

    const std::size_t n = p.size();
    std::vector<double> terms, norm;
    ValueGrad out{0.0, std::vector<double>(n, 0.0)};
    std::vector<double> raw_grad(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!annotated(y[i])) continue;
        const double w = weights.empty() ? 1.0 : weights[i];
        const double pc = clamp_probability(p[i], eps);
        const bool positive = y[i] == Annotation::Positive;
        terms.push_back(-w * (positive ? std::log(pc) : std::log(1.0 - pc)));
        norm.push_back(w);
        if (pc == p[i]) raw_grad[i] = positive ? -w / pc : w / (1.0 - pc);
    }
    if (norm.empty()) throw DataError("masked_bce: no annotated labels");
    const double total_w = pairwise_sum(norm);
    if (!(total_w > 0.0)) throw DataError("masked_bce: annotated labels carry zero total weight");
    out.value = pairwise_sum(terms) / total_w;
    for (std::size_t i = 0; i < n; ++i) out.grad[i] = raw_grad[i] / total_w;
    return out;
}

namespace {

void check_distribution(std::span<const double> p, const char* what) {
    const double s = pairwise_sum(p);
    if (std::abs(s - 1.0) > 1e-6) throw DataError(std::string(what) + ": values do not sum to 1");
}

}  // namespace

ValueGrad softmax_ce(std::span<const double> p, std::size_t label, double eps) {
    check_distribution(p, "softmax_ce");
    if (label >= p.size()) throw DataError("softmax_ce: label index out of range");
    ValueGrad out{0.0, std::vector<double>(p.size(), 0.0)};
    const double pc = std::max(p[label], eps);
    out.value = -std::log(pc);
    if (p[label] >= eps) out.grad[label] = -1.0 / p[label];
    return out;
}

ValueGrad softmax_ce(std::span<const double> p, std::span<const double> soft_label, double eps) {
    check_distribution(p, "softmax_ce");
    check_distribution(soft_label, "softmax_ce soft label");
    if (p.size() != soft_label.size()) throw DataError("softmax_ce: soft label length mismatch");
    ValueGrad out{0.0, std::vector<double>(p.size(), 0.0)};
    std::vector<double> terms(p.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
        const double pc = std::max(p[c], eps);
        terms[c] = -soft_label[c] * std::log(pc);
        if (p[c] >= eps) out.grad[c] = -soft_label[c] / p[c];
    }
    out.value = pairwise_sum(terms);
    return out;
}

SoftTargets dm_targets(std::span<const double> p_cat, const RelatednessTable& table, bool reweight) {
    if (p_cat.size() != table.num_classes())
        throw DataError("dm_targets: " + std::to_string(p_cat.size()) + " class probabilities for a table of " +
                        std::to_string(table.num_classes()) + " classes");
    check_distribution(p_cat, "dm_targets");
    const bool use_weights = reweight || table.kind() == TableKind::Empirical;
    SoftTargets out{std::vector<double>(table.num_labels(), 0.0)};
    for (std::size_t k = 0; k < p_cat.size(); ++k)
        for (const auto& e : table.lookup(k)) out.q[e.label] += p_cat[k] * (use_weights ? e.weight : 1.0);
    return out;
}

DmLoss dm_loss(std::span<const double> p_bin, std::span<const double> q, double eps) {
    if (p_bin.size() != q.size()) throw DataError("dm_loss: prediction/target length mismatch");
    const std::size_t n = q.size();
    DmLoss out{0.0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    std::vector<double> terms;
    terms.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double qc = std::min(std::max(q[i], eps), 1.0);
        const double lq = std::log(qc);
        out.grad_p[i] = -lq;
        if (p_bin[i] == 0.0) continue;
        terms.push_back(-p_bin[i] * lq);
        if (qc == q[i]) out.grad_q[i] = -p_bin[i] / q[i];
    }
    out.value = pairwise_sum(terms);
    return out;
}

ValueGrad sca_loss(std::span<const double> p_emo, std::span<const double> q_emo, double eps) {
    if (p_emo.size() != q_emo.size()) throw DataError("sca_loss: dimensionality mismatch");
    ValueGrad out{0.0, std::vector<double>(p_emo.size(), 0.0)};
    std::vector<double> terms(p_emo.size());
    for (std::size_t e = 0; e < p_emo.size(); ++e) {
        const double lq = std::log(std::max(q_emo[e], eps));
        terms[e] = -p_emo[e] * lq;
        out.grad[e] = -lq;
    }
    out.value = pairwise_sum(terms);
    return out;
}

LossReport total_mt_loss(const std::map<std::string, double>& task_losses,
                         const std::map<std::string, double>& coupling_losses, const LossWeights& weights) {
    weights.validate();
    LossReport report{task_losses, coupling_losses, 0.0};
    std::vector<double> parts;
    for (const auto& [name, value] : task_losses) parts.push_back(weights.task_weight(name) * value);
    for (const auto& [name, value] : coupling_losses) parts.push_back(weights.coupling_weight(name) * value);
    report.total = pairwise_sum(parts);
    return report;
}

}  // namespace hmtl

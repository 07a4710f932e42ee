// SPDX-License-Identifier: Apache-2.0
#include "hmtl/objective.hpp"

#include <array>

#include "hmtl/error.hpp"
#include "hmtl/numeric.hpp"

namespace hmtl {

namespace {
constexpr std::array<std::pair<CouplingMode, const char*>, 5> kModeNames{{
    {CouplingMode::None, "none"},
    {CouplingMode::CoAnnotation, "co_annotation"},
    {CouplingMode::SoftCoAnnotation, "soft_co_annotation"},
    {CouplingMode::DistrMatching, "distr_matching"},
    {CouplingMode::SoftPlusDm, "soft_plus_dm"},
}};
}  // namespace

std::string to_string(CouplingMode mode) {
    for (const auto& [m, name] : kModeNames)
        if (m == mode) return name;
    return "none";
}

CouplingMode parse_coupling_mode(const std::string& name) {
    for (const auto& [m, n] : kModeNames)
        if (name == n) return m;
    throw ConfigError("invalid coupling mode '" + name + "'");
}

bool uses_dm(CouplingMode mode) { return mode == CouplingMode::DistrMatching || mode == CouplingMode::SoftPlusDm; }
bool uses_sca(CouplingMode mode) {
    return mode == CouplingMode::SoftCoAnnotation || mode == CouplingMode::SoftPlusDm;
}

void ObjectiveConfig::validate() const {
    weights.validate();
    if (coupling != CouplingMode::None && !table)
        throw ConfigError("coupling mode " + to_string(coupling) + " needs a relatedness table");
    if (coupling == CouplingMode::CoAnnotation && table->kind() != TableKind::PrototypicalObservational)
        throw ConfigError("co_annotation needs a prototypical/observational relatedness table");
}

HeterogeneousSample co_annotate(const HeterogeneousSample& sample, const RelatednessTable& table) {
    HeterogeneousSample out = sample;
    if (out.au && !out.expr) out = co_annotate_aus_to_emotion(out, table);
    if (sample.expr) out = co_annotate_emotion_to_aus(out, table);
    return out;
}

Tensor feature_matrix(std::span<const HeterogeneousSample> batch) {
    if (batch.empty()) throw DataError("empty batch");
    const std::size_t d = batch.front().features.size();
    Tensor x = Tensor::matrix(batch.size(), d);
    for (std::size_t r = 0; r < batch.size(); ++r) {
        if (batch[r].features.size() != d) throw DataError("sample '" + batch[r].id + "' has a different feature width");
        std::copy(batch[r].features.begin(), batch[r].features.end(), x.row(r).begin());
    }
    return x;
}

namespace {

void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace

ObjectiveResult evaluate_objective(const HeadOutputs& outputs, std::span<const HeterogeneousSample> input_batch,
                                   const ObjectiveConfig& config) {
    config.validate();
    const std::size_t n = input_batch.size();
    const double eps = config.weights.epsilon;

    std::vector<HeterogeneousSample> coannotated;
    std::span<const HeterogeneousSample> batch = input_batch;
    if (config.coupling == CouplingMode::CoAnnotation) {
        coannotated.reserve(n);
        for (const auto& s : input_batch) coannotated.push_back(co_annotate(s, *config.table));
        batch = coannotated;
    }

    ObjectiveResult result;
    for (const auto& [name, t] : outputs) result.grads.emplace(name, Tensor(t.shape()));
    auto output_of = [&](const std::string& head) -> const Tensor& {
        const auto it = outputs.find(head);
        if (it == outputs.end()) throw ConfigError("objective: model has no '" + head + "' head");
        if (it->second.rows() != n) throw DataError("objective: head output rows do not match batch size");
        return it->second;
    };

    std::map<std::string, double> task_losses, coupling_losses;
    const auto& cat = config.categorical_head;
    const auto& bin = config.binary_head;
    const auto& reg = config.regression_head;

    if (config.tasks.count(cat)) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < n; ++i)
            if (batch[i].expr) rows.push_back(i);
        if (!rows.empty()) {
            const Tensor& p = output_of(cat);
            const double lambda = config.weights.task_weight(cat) / static_cast<double>(rows.size());
            std::vector<double> values;
            for (std::size_t i : rows) {
                const ValueGrad vg = softmax_ce(p.row(i), *batch[i].expr, eps);
                values.push_back(vg.value);
                add_scaled(result.grads[cat].row(i), vg.grad, lambda);
            }
            task_losses[cat] = mean(values);
        }
    }

    std::vector<std::size_t> bin_rows;
    for (std::size_t i = 0; i < n; ++i) {
        if (!batch[i].au) continue;
        for (Annotation a : *batch[i].au)
            if (annotated(a)) {
                bin_rows.push_back(i);
                break;
            }
    }

    if (config.tasks.count(bin) && !bin_rows.empty()) {
        const Tensor& p = output_of(bin);
        const double lambda = config.weights.task_weight(bin) / static_cast<double>(bin_rows.size());
        std::vector<double> values;
        for (std::size_t i : bin_rows) {
            std::span<const double> w;
            if (batch[i].au_weights) w = *batch[i].au_weights;
            const ValueGrad vg = masked_bce(p.row(i), *batch[i].au, w, eps);
            values.push_back(vg.value);
            add_scaled(result.grads[bin].row(i), vg.grad, lambda);
        }
        task_losses[bin] = mean(values);
    }

    if (config.tasks.count(reg)) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < n; ++i)
            if (batch[i].va) rows.push_back(i);
        if (!rows.empty()) {
            const Tensor& p = output_of(reg);
            std::vector<VaPair> truth, pred;
            for (std::size_t i : rows) {
                truth.push_back(*batch[i].va);
                pred.push_back({p(i, 0), p(i, 1)});
            }
            const VaLoss vl = ccc_loss_with_gradient(truth, pred, config.weights.ccc_epsilon);
            const double lambda = config.weights.task_weight(reg);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                result.grads[reg](rows[k], 0) += lambda * vl.grad[k].valence;
                result.grads[reg](rows[k], 1) += lambda * vl.grad[k].arousal;
            }
            task_losses[reg] = vl.value;
        }
    }

    if (uses_dm(config.coupling) && n > 0) {
        const Tensor& p_cat = output_of(cat);
        const Tensor& p_bin = output_of(bin);
        const RelatednessTable& table = *config.table;
        const bool use_weights = config.reweight_observational || table.kind() == TableKind::Empirical;
        const double lambda = config.weights.coupling_weight("dm") / static_cast<double>(n);
        std::vector<double> values;
        for (std::size_t i = 0; i < n; ++i) {
            const SoftTargets q = dm_targets(p_cat.row(i), table, config.reweight_observational);
            const DmLoss dl = dm_loss(p_bin.row(i), q.q, eps);
            values.push_back(dl.value);
            add_scaled(result.grads[bin].row(i), dl.grad_p, lambda);
            // q_b = sum_k p_k r_kb, so d/dp_k = sum_b grad_q_b r_kb.
            auto g_cat = result.grads[cat].row(i);
            for (std::size_t k = 0; k < table.num_classes(); ++k) {
                double acc = 0.0;
                for (const auto& e : table.lookup(k)) acc += dl.grad_q[e.label] * (use_weights ? e.weight : 1.0);
                g_cat[k] += lambda * acc;
            }
        }
        coupling_losses["dm"] = mean(values);
    }

    if (uses_sca(config.coupling) && !bin_rows.empty()) {
        const Tensor& p_cat = output_of(cat);
        const double lambda = config.weights.coupling_weight("sca") / static_cast<double>(bin_rows.size());
        std::vector<double> values;
        for (std::size_t i : bin_rows) {
            const EmotionSoftLabel soft = soft_co_annotate(batch[i], *config.table, config.reweight_observational);
            const ValueGrad vg = sca_loss(p_cat.row(i), soft.q, eps);
            values.push_back(vg.value);
            add_scaled(result.grads[cat].row(i), vg.grad, lambda);
        }
        coupling_losses["sca"] = mean(values);
    }

    result.report = total_mt_loss(task_losses, coupling_losses, config.weights);
    return result;
}

}  // namespace hmtl

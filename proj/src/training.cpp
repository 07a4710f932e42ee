// SPDX-License-Identifier: Apache-2.0
#include "hmtl/training.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "hmtl/dataset_io.hpp"
#include "hmtl/error.hpp"
#include "hmtl/metrics.hpp"
#include "hmtl/scheduler.hpp"
#include "hmtl/synthdata.hpp"

namespace hmtl {

namespace fs = std::filesystem;
using nlohmann::json;

json version_info() {
    json j{{"hmtl", kVersion}, {"cxx_standard", static_cast<long>(__cplusplus)}, {"json", NLOHMANN_JSON_VERSION_MAJOR}};
#if defined(__clang__)
    j["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    j["compiler"] = std::string("gcc ") + __VERSION__;
#endif
    return j;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::vector<HeterogeneousSample> load_set(const std::optional<fs::path>& path) {
    if (!path) return {};
    if (!fs::exists(*path)) throw DataError("dataset not found: " + path->string());
    return read_dataset(*path);
}

// Moves a seeded fraction of `set` into `holdout`.
void split_holdout(std::vector<HeterogeneousSample>& set, double fraction, std::mt19937_64& rng,
                   std::vector<HeterogeneousSample>& holdout) {
    if (set.empty() || fraction <= 0.0) return;
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(set.size())));
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<bool> held(set.size(), false);
    for (std::size_t i = 0; i < k; ++i) held[idx[i]] = true;
    std::vector<HeterogeneousSample> keep;
    for (std::size_t i = 0; i < set.size(); ++i) (held[i] ? holdout : keep).push_back(std::move(set[i]));
    set = std::move(keep);
}

const std::vector<std::string> kLossColumns{"va", "expr", "au", "dm", "sca"};

std::string loss_row(std::size_t epoch, std::size_t iteration, std::size_t step, const LossReport& r) {
    std::string row = std::to_string(epoch) + "," + std::to_string(iteration) + "," + std::to_string(step) + "," +
                      fmt(r.total);
    for (const auto& c : kLossColumns) {
        row += ',';
        if (auto it = r.task_losses.find(c); it != r.task_losses.end()) row += fmt(it->second);
        else if (auto jt = r.coupling_losses.find(c); jt != r.coupling_losses.end()) row += fmt(jt->second);
    }
    return row;
}

ObjectiveConfig objective_config(const ExperimentConfig& config, const RelatednessTable& table) {
    ObjectiveConfig oc;
    oc.coupling = config.coupling;
    oc.table = std::make_shared<const RelatednessTable>(table);
    oc.reweight_observational = config.reweight_observational;
    oc.weights = config.loss_weights;
    oc.tasks = config.tasks;
    return oc;
}

}  // namespace

TrainResult run_train(const ExperimentConfig& config) {
    config.validate();
    TrainingData data;
    if (config.tasks.count("va")) data.va = load_set(config.va_set);
    if (config.tasks.count("au")) data.au = load_set(config.au_set);
    if (config.tasks.count("expr")) data.expr = load_set(config.expr_set);
    if (config.test_set) data.test = load_set(config.test_set);
    return run_train(config, std::move(data), resolve_relatedness(config.relatedness));
}

TrainResult run_train(const ExperimentConfig& config, TrainingData data, const RelatednessTable& table) {
    config.validate();
    const ObjectiveConfig oc = objective_config(config, table);
    oc.validate();

    std::vector<HeterogeneousSample> test;
    if (data.test) {
        test = std::move(*data.test);
    } else {
        std::mt19937_64 rng(epoch_seed(config.seed, static_cast<std::size_t>(-1)));
        split_holdout(data.va, config.holdout_fraction, rng, test);
        split_holdout(data.expr, config.holdout_fraction, rng, test);
        split_holdout(data.au, config.holdout_fraction, rng, test);
    }

    std::vector<const std::vector<HeterogeneousSample>*> sets;
    std::vector<std::string> names;
    std::vector<std::size_t> sizes, min_slice;
    auto add_set = [&](const std::string& task, const std::vector<HeterogeneousSample>& s) {
        if (!config.tasks.count(task)) return;
        if (s.empty()) throw DataError("training set '" + task + "' is empty");
        sets.push_back(&s);
        names.push_back(task);
        sizes.push_back(s.size());
        min_slice.push_back(task == "va" ? 2 : 0);
    };
    add_set("va", data.va);
    add_set("expr", data.expr);
    add_set("au", data.au);

    std::size_t input_dim = sets.front()->front().features.size();
    for (const auto* s : sets)
        for (const auto& sample : *s)
            if (sample.features.size() != input_dim)
                throw DataError("sample '" + sample.id + "' has " + std::to_string(sample.features.size()) +
                                " features, expected " + std::to_string(input_dim));

    MultiHeadModel model(affect_model_spec(input_dim, config.trunk_widths, config.model_seed.value_or(config.seed)));
    SgdMomentum opt(config.optimizer.lr, config.optimizer.momentum);

    ensure_dir(config.out);
    std::ofstream log(config.out / "losses.csv", std::ios::binary);
    if (!log) throw DataError("cannot write " + (config.out / "losses.csv").string());
    log << "epoch,iteration,step,total";
    for (const auto& c : kLossColumns) log << ',' << c;
    log << '\n';

    json plans = json::array();
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < config.optimizer.epochs; ++epoch) {
        const EpochPlan plan = plan_epoch(sizes, config.max_batch, epoch_seed(config.seed, epoch), min_slice);
        plans.push_back(plan_summary(plan, names));
        for (std::size_t it = 0; it < plan.iteration_count; ++it) {
            const auto batch = gather(next_joint_batch(plan, it), sets);
            const ForwardPass pass = model.forward(feature_matrix(batch));
            const ObjectiveResult res = evaluate_objective(pass.outputs, batch, oc);
            if (!std::isfinite(res.report.total))
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", iteration " +
                                     std::to_string(it));
            opt.step(model, model.backward(pass, res.grads));
            log << loss_row(epoch, it, step++, res.report) << '\n';
        }
        if (config.checkpoint_every && (epoch + 1) % config.checkpoint_every == 0 && epoch + 1 < config.optimizer.epochs)
            model.save(config.out / ("model_epoch" + std::to_string(epoch + 1) + ".ckpt"));
    }
    log.close();
    model.save(config.out / "model.ckpt");
    save_table_file(table, config.out / "relatedness.json");

    json metrics = test.empty() ? json::object() : evaluate_model(model, test, config.tasks, config.median_window);
    const json cfg = to_json(config);
    json manifest{{"command", "train"},
                  {"versions", version_info()},
                  {"config", cfg},
                  {"config_hash", fnv1a_hex(cfg.dump())},
                  {"seed", config.seed},
                  {"model", to_json(model.spec())},
                  {"parameter_count", model.parameter_count()},
                  {"relatedness", {{"kind", to_json(table)["kind"]}, {"hash", fnv1a_hex(serialize(table))}}},
                  {"set_sizes", {{"va", data.va.size()}, {"expr", data.expr.size()}, {"au", data.au.size()}}},
                  {"heldout_size", test.size()},
                  {"heldout_source", data.test ? "test set" : "holdout split"},
                  {"steps", step},
                  {"epoch_plans", plans},
                  {"final_metrics", metrics},
                  {"outputs", {{"losses", "losses.csv"}, {"checkpoint", "model.ckpt"}, {"relatedness", "relatedness.json"}}}};
    write_json_file(config.out / "manifest.json", manifest);
    return {config.out, std::move(manifest), std::move(model)};
}

json evaluate_model(const MultiHeadModel& model, const std::vector<HeterogeneousSample>& samples,
                    const std::set<std::string>& tasks, std::size_t median_window) {
    for (const auto& t : tasks)
        if (!model.has_head(t)) throw ConfigError("evaluation task '" + t + "' has no matching model head");
    if (samples.empty()) throw DataError("evaluation set is empty");
    const ForwardPass pass = model.forward(feature_matrix(samples));
    const auto bundles = model.bundles(pass);
    json out{{"n", samples.size()}};

    if (tasks.count("va")) {
        std::vector<VaPair> truth, pred;
        std::vector<std::size_t> rows;
        bool keyed = false;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (samples[i].va) {
                truth.push_back(*samples[i].va);
                pred.push_back({bundles[i].va[0], bundles[i].va[1]});
                rows.push_back(i);
                keyed = keyed || samples[i].sequence.has_value();
            }
        if (truth.size() >= 2) {
            json va = to_json(va_metrics(truth, pred));
            va["n"] = truth.size();
            if (keyed) {
                // Per video, in frame order; unkeyed samples keep their raw prediction.
                std::map<std::string, std::vector<std::size_t>> videos;
                for (std::size_t k = 0; k < rows.size(); ++k)
                    if (samples[rows[k]].sequence) videos[samples[rows[k]].sequence->video].push_back(k);
                std::vector<VaPair> filtered = pred;
                for (auto& [_, ks] : videos) {
                    std::stable_sort(ks.begin(), ks.end(), [&](std::size_t a, std::size_t b) {
                        return samples[rows[a]].sequence->frame < samples[rows[b]].sequence->frame;
                    });
                    std::vector<std::vector<double>> seq;
                    for (auto k : ks) seq.push_back({pred[k].valence, pred[k].arousal});
                    const auto smooth = median_filter(seq, median_window);
                    for (std::size_t m = 0; m < ks.size(); ++m) filtered[ks[m]] = {smooth[m][0], smooth[m][1]};
                }
                va["filtered"] = to_json(va_metrics(truth, filtered));
                va["median_window"] = median_window;
            }
            out["va"] = va;
        }
    }
    if (tasks.count("expr")) {
        const std::size_t k = model.spec().heads[model.head_index("expr")].width;
        ConfusionMatrix cm(k);
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!samples[i].expr) continue;
            if (*samples[i].expr >= k) throw DataError("sample '" + samples[i].id + "' has an out-of-range class");
            const auto& p = bundles[i].expr_probs;
            cm.add(*samples[i].expr, static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
        }
        if (cm.total() > 0) {
            json e = to_json(classification_metrics(cm));
            e["n"] = cm.total();
            json rows = json::array();
            for (std::size_t r = 0; r < k; ++r) {
                json row = json::array();
                for (std::size_t c = 0; c < k; ++c) row.push_back(cm.at(r, c));
                rows.push_back(row);
            }
            e["confusion"] = rows;
            out["expr"] = e;
        }
    }
    if (tasks.count("au")) {
        std::vector<std::vector<Annotation>> truth, pred;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (samples[i].au) {
                truth.push_back(*samples[i].au);
                pred.push_back(threshold_probabilities(bundles[i].au_probs));
            }
        if (!truth.empty()) {
            json a = to_json(au_metrics(pred, truth));
            a["n"] = truth.size();
            out["au"] = a;
        }
    }
    return out;
}

json run_eval(const fs::path& checkpoint, const fs::path& dataset, const std::set<std::string>& tasks,
              const fs::path& out, std::size_t median_window) {
    if (!fs::exists(checkpoint)) throw DataError("checkpoint not found: " + checkpoint.string());
    if (!fs::exists(dataset)) throw DataError("dataset not found: " + dataset.string());
    const MultiHeadModel model = MultiHeadModel::load(checkpoint);
    const auto samples = read_dataset(dataset);
    json metrics = evaluate_model(model, samples, tasks, median_window);
    if (!out.empty()) {
        ensure_dir(out);
        write_json_file(out / "metrics.json", metrics);
        if (metrics.contains("expr")) {
            const auto& rows = metrics["expr"]["confusion"];
            ConfusionMatrix cm(rows.size());
            for (std::size_t r = 0; r < rows.size(); ++r)
                for (std::size_t c = 0; c < rows.size(); ++c) cm.add(r, c, rows[r][c].get<std::size_t>());
            std::ofstream(out / "confusion.csv", std::ios::binary) << cm.to_csv(emotion_names());
        }
        write_json_file(out / "manifest.json", {{"command", "eval"},
                                                {"versions", version_info()},
                                                {"checkpoint", checkpoint.string()},
                                                {"dataset", dataset.string()},
                                                {"tasks", tasks},
                                                {"median_window", median_window},
                                                {"metrics", "metrics.json"}});
    }
    return metrics;
}

ZeroShotResult zero_shot(const MultiHeadModel& model, const std::vector<HeterogeneousSample>& samples,
                         const std::vector<CompoundClass>& classes) {
    for (const char* head : {"va", "expr", "au"})
        if (!model.has_head(head)) throw ConfigError(std::string("zero-shot needs a '") + head + "' head");
    if (samples.empty()) throw DataError("zero-shot dataset is empty");
    const auto bundles = model.bundles(model.forward(feature_matrix(samples)));
    ZeroShotResult r;
    ConfusionMatrix cm(classes.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        r.scores.push_back(compound_scores(bundles[i], classes));
        r.predictions.push_back(predict_compound(r.scores.back()));
        if (samples[i].compound) {
            if (*samples[i].compound >= classes.size())
                throw DataError("sample '" + samples[i].id + "' has an out-of-range compound class");
            cm.add(*samples[i].compound, r.predictions.back());
        }
    }
    if (cm.total() > 0) {
        r.metrics = to_json(classification_metrics(cm));
        r.metrics["n"] = cm.total();
    }
    return r;
}

ZeroShotResult run_zero_shot(const fs::path& checkpoint, const std::optional<fs::path>& profiles,
                             const fs::path& dataset, const RelatednessConfig& relatedness,
                             bool reweight_observational, const fs::path& out) {
    if (!fs::exists(checkpoint)) throw DataError("checkpoint not found: " + checkpoint.string());
    if (!fs::exists(dataset)) throw DataError("dataset not found: " + dataset.string());
    const auto classes = profiles ? load_compound_profiles(*profiles)
                                  : default_compound_classes(resolve_relatedness(relatedness), reweight_observational);
    const MultiHeadModel model = MultiHeadModel::load(checkpoint);
    const auto samples = read_dataset(dataset);
    ZeroShotResult r = zero_shot(model, samples, classes);

    ensure_dir(out);
    std::ofstream scores(out / "scores.csv", std::ios::binary);
    std::ofstream preds(out / "predictions.csv", std::ios::binary);
    if (!scores || !preds) throw DataError("cannot write zero-shot outputs in " + out.string());
    scores << "id,class,i_au,f_emo,d_va,total\n";
    preds << "id,predicted,predicted_name,truth\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const auto& s = r.scores[i][c];
            scores << samples[i].id << ',' << classes[c].name << ',' << fmt(s.i_au) << ',' << fmt(s.f_emo) << ','
                   << fmt(s.d_va) << ',' << fmt(s.total) << '\n';
        }
        preds << samples[i].id << ',' << r.predictions[i] << ',' << classes[r.predictions[i]].name << ',';
        if (samples[i].compound) preds << *samples[i].compound;
        preds << '\n';
    }
    json manifest{{"command", "zero-shot"},
                  {"versions", version_info()},
                  {"checkpoint", checkpoint.string()},
                  {"dataset", dataset.string()},
                  {"profiles", profiles ? json(profiles->string()) : json(nullptr)},
                  {"classes", to_json(classes)},
                  {"metrics", r.metrics.is_null() ? json::object() : r.metrics}};
    write_json_file(out / "manifest.json", manifest);
    return r;
}

GradcheckConfig gradcheck_config_from_json(const json& j, const fs::path& base) {
    GradcheckConfig g;
    if (!j.is_object()) throw ConfigError("gradcheck config: expected an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "modes") {
            g.modes.clear();
            for (const auto& m : v) g.modes.push_back(parse_coupling_mode(m.get<std::string>()));
        } else if (key == "relatedness") {
            // Reuse the experiment-config parser for the relatedness block.
            g.relatedness = experiment_config_from_json({{"relatedness", v}}, base).relatedness;
        } else if (key == "reweight_observational") {
            g.reweight_observational = v.get<bool>();
        } else if (key == "trunk") {
            g.trunk_widths = v.get<std::vector<std::size_t>>();
        } else if (key == "feature_dim") {
            g.feature_dim = v.get<std::size_t>();
        } else if (key == "batch_size") {
            g.batch_size = v.get<std::size_t>();
        } else if (key == "tolerance") {
            g.tolerance = v.get<double>();
        } else if (key == "step") {
            g.options.step = v.get<double>();
        } else if (key == "samples_per_tensor") {
            g.options.samples_per_tensor = v.get<std::size_t>();
        } else if (key == "seed") {
            g.seed = v.get<std::uint64_t>();
        } else {
            throw ConfigError("gradcheck config: unknown key '" + key + "'");
        }
    }
    if (g.modes.empty()) throw ConfigError("gradcheck config: no coupling modes");
    if (g.batch_size < 6) throw ConfigError("gradcheck config: batch_size must be at least 6");
    return g;
}

GradcheckOutcome run_gradcheck(const GradcheckConfig& config) {
    const RelatednessTable table = resolve_relatedness(config.relatedness);
    GeneratorSpec gen = default_generator_spec(table, config.seed);
    gen.feature_dim = config.feature_dim;
    const GeneratedSets sets = generate(gen, config.batch_size, Partition{});
    std::vector<HeterogeneousSample> batch;
    for (const auto* s : {&sets.va_set, &sets.expr_set, &sets.au_set}) batch.insert(batch.end(), s->begin(), s->end());
    const Tensor x = feature_matrix(batch);
    const MultiHeadModel model(affect_model_spec(config.feature_dim, config.trunk_widths, config.seed));

    GradcheckOutcome outcome;
    outcome.report = {{"command", "gradcheck"},
                      {"versions", version_info()},
                      {"seed", config.seed},
                      {"tolerance", config.tolerance},
                      {"model", to_json(model.spec())},
                      {"parameter_count", model.parameter_count()},
                      {"batch_size", batch.size()},
                      {"modes", json::object()}};
    for (CouplingMode mode : config.modes) {
        ObjectiveConfig oc;
        oc.coupling = mode;
        oc.table = std::make_shared<const RelatednessTable>(table);
        oc.reweight_observational = config.reweight_observational;

        std::vector<std::string> components{"total", "va", "expr", "au"};
        if (uses_dm(mode)) components.push_back("dm");
        if (uses_sca(mode)) components.push_back("sca");
        json mode_report = json::object();
        for (const auto& component : components) {
            ObjectiveConfig c = oc;
            if (component != "total") {
                for (const char* t : {"va", "expr", "au"}) c.weights.task[t] = component == t ? 1.0 : 0.0;
                for (const char* t : {"dm", "sca"}) c.weights.coupling[t] = component == t ? 1.0 : 0.0;
            }
            const OutputObjective objective = [&](const HeadOutputs& outputs) {
                ObjectiveResult res = evaluate_objective(outputs, batch, c);
                return std::pair<double, HeadOutputs>{res.report.total, std::move(res.grads)};
            };
            const GradCheckReport rep = gradient_check(model, x, objective, config.options);
            const bool ok = rep.max_relative_error < config.tolerance && rep.frozen_trunk_gradients_zero;
            outcome.passed = outcome.passed && ok;
            mode_report[component] = {{"max_relative_error", rep.max_relative_error},
                                      {"checked", rep.checked},
                                      {"pass", ok}};
        }
        outcome.report["modes"][to_string(mode)] = mode_report;
    }
    outcome.report["pass"] = outcome.passed;
    return outcome;
}

}  // namespace hmtl

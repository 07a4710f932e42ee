// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hmtl/config.hpp"
#include "hmtl/dataset_io.hpp"
#include "hmtl/error.hpp"
#include "hmtl/synthdata.hpp"
#include "hmtl/training.hpp"
#include "hmtl/zeroshot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hmtl;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = false) {
    auto* opt = cmd->add_option("--config", f.config, "JSON config file");
    if (config_required) opt->required();
    cmd->add_option("--seed", f.seed, "Seed (overrides the config)");
    cmd->add_option("--out", f.out, "Output directory (overrides the config)");
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::set<std::string> parse_tasks(const std::string& list) {
    std::set<std::string> tasks;
    std::stringstream ss(list);
    std::string t;
    while (std::getline(ss, t, ','))
        if (!t.empty()) tasks.insert(t);
    if (tasks.empty()) throw ConfigError("--tasks is empty");
    return tasks;
}

int cmd_generate(const CommonFlags& f) {
    GenerateConfig g;
    if (!f.config.empty()) g = generate_config_from_json(read_json_file(f.config), fs::path(f.config).parent_path());
    if (f.seed) g.seed = *f.seed;
    if (!f.out.empty()) g.out = f.out;
    const RelatednessTable table = resolve_relatedness(g.relatedness);
    GeneratorSpec spec = default_generator_spec(table, g.seed);
    spec.feature_dim = g.feature_dim;
    spec.noise_scale = g.noise_scale;
    spec.feature_map = g.feature_map;
    if (g.class_prior) spec.class_prior = *g.class_prior;

    ensure_dir(g.out);
    const GeneratedSets sets = generate(spec, g.n, g.partition, 0);
    write_dataset(g.out / "va.csv", sets.va_set);
    write_dataset(g.out / "au.csv", sets.au_set);
    write_dataset(g.out / "expr.csv", sets.expr_set);
    json files{{"va", "va.csv"}, {"au", "au.csv"}, {"expr", "expr.csv"}};
    if (g.test_n > 0) {
        write_dataset(g.out / "test.csv", generate_full(spec, g.test_n, 1, "t"));
        files["test"] = "test.csv";
    }
    if (g.compound_n > 0) {
        const auto classes = default_compound_classes(table, false);
        write_dataset(g.out / "compound.csv", generate_compound(spec, g.compound_n, classes, 2));
        write_json_file(g.out / "compound_profiles.json", to_json(classes));
        files["compound"] = "compound.csv";
        files["compound_profiles"] = "compound_profiles.json";
    }
    save_table_file(table, g.out / "relatedness.json");
    files["relatedness"] = "relatedness.json";
    write_json_file(g.out / "manifest.json", {{"command", "generate"},
                                              {"versions", version_info()},
                                              {"config", to_json(g)},
                                              {"seed", g.seed},
                                              {"sizes",
                                               {{"va", sets.va_set.size()},
                                                {"au", sets.au_set.size()},
                                                {"expr", sets.expr_set.size()}}},
                                              {"files", files}});
    std::cout << "wrote " << sets.va_set.size() << " VA, " << sets.au_set.size() << " AU, " << sets.expr_set.size()
              << " EXPR samples to " << g.out.string() << '\n';
    return 0;
}

int cmd_infer(const CommonFlags& f, const std::string& corpus_flag, std::optional<double> threshold_flag) {
    RelatednessConfig rc;
    rc.source = RelatednessSource::Empirical;
    if (!f.config.empty()) {
        const json j = read_json_file(f.config);
        if (j.contains("relatedness"))
            rc = experiment_config_from_json({{"relatedness", j["relatedness"]}}, fs::path(f.config).parent_path())
                     .relatedness;
    }
    if (!corpus_flag.empty()) rc.corpus = corpus_flag;
    if (threshold_flag) rc.threshold = *threshold_flag;
    if (rc.source != RelatednessSource::Empirical || rc.corpus.empty())
        throw ConfigError("infer-relatedness needs a co-annotated corpus (--corpus or relatedness.corpus)");
    if (!fs::exists(rc.corpus)) throw DataError("corpus not found: " + rc.corpus.string());
    const fs::path out = f.out.empty() ? fs::path("relatedness") : fs::path(f.out);

    const auto inference = infer_empirical(co_annotated_corpus(read_dataset(rc.corpus)), rc.threshold);
    for (const auto& w : inference.warnings) std::cerr << "warning: " << w << '\n';
    ensure_dir(out);
    save_table_file(inference.table, out / "relatedness.json");
    write_json_file(out / "manifest.json", {{"command", "infer-relatedness"},
                                            {"versions", version_info()},
                                            {"corpus", rc.corpus.string()},
                                            {"threshold", rc.threshold},
                                            {"warnings", inference.warnings},
                                            {"table", "relatedness.json"}});
    std::cout << "wrote " << (out / "relatedness.json").string() << '\n';
    return 0;
}

int cmd_train(const CommonFlags& f) {
    ExperimentConfig c = load_experiment_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (!f.out.empty()) c.out = f.out;
    const TrainResult r = run_train(c);
    std::cout << r.manifest["final_metrics"].dump(2) << '\n';
    return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& checkpoint, const std::string& data, const std::string& tasks,
             std::size_t window) {
    const json m = run_eval(checkpoint, data, parse_tasks(tasks), f.out, window);
    std::cout << m.dump(2) << '\n';
    return 0;
}

int cmd_zero_shot(const CommonFlags& f, const std::string& checkpoint, const std::string& data,
                  const std::string& profiles) {
    RelatednessConfig rc;
    bool reweight = false;
    if (!f.config.empty()) {
        const auto c = experiment_config_from_json(read_json_file(f.config), fs::path(f.config).parent_path());
        rc = c.relatedness;
        reweight = c.reweight_observational;
    }
    const fs::path out = f.out.empty() ? fs::path("zero_shot") : fs::path(f.out);
    const auto r = run_zero_shot(checkpoint, profiles.empty() ? std::nullopt : std::optional<fs::path>(profiles), data,
                                 rc, reweight, out);
    std::cout << (r.metrics.is_null() ? json::object() : r.metrics).dump(2) << '\n';
    return 0;
}

int cmd_gradcheck(const CommonFlags& f, bool inject_fault) {
    GradcheckConfig g;
    if (!f.config.empty()) g = gradcheck_config_from_json(read_json_file(f.config), fs::path(f.config).parent_path());
    if (f.seed) g.seed = *f.seed;
    if (inject_fault)
        g.options.tamper = [](Gradients& grads) {
            for (auto& t : grads)
                if (t.size() > 0) t[0] += 1e-2 + 0.5 * std::abs(t[0]);
        };
    const GradcheckOutcome outcome = run_gradcheck(g);
    if (!f.out.empty()) {
        ensure_dir(f.out);
        write_json_file(fs::path(f.out) / "gradcheck.json", outcome.report);
    }
    std::cout << outcome.report["modes"].dump(2) << '\n';
    if (!outcome.passed) {
        std::cerr << "gradient check failed: relative error above " << g.tolerance << '\n';
        return static_cast<int>(ErrorKind::Numerical);
    }
    std::cout << "gradient check passed\n";
    return 0;
}

int cmd_dump_compound(const CommonFlags& f, bool reweight) {
    RelatednessConfig rc;
    if (!f.config.empty())
        rc = experiment_config_from_json(read_json_file(f.config), fs::path(f.config).parent_path()).relatedness;
    const json j = to_json(default_compound_classes(resolve_relatedness(rc), reweight));
    if (f.out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        ensure_dir(f.out);
        write_json_file(fs::path(f.out) / "compound_profiles.json", j);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heterogeneous multi-task affect learning toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonFlags gen_f, inf_f, train_f, eval_f, zs_f, gc_f, dc_f;

    auto* gen = app.add_subcommand("generate", "Write synthetic VA/AU/EXPR datasets");
    add_common(gen, gen_f);

    auto* inf = app.add_subcommand("infer-relatedness", "Estimate an empirical emotion-AU table from a corpus");
    add_common(inf, inf_f);
    std::string corpus;
    std::optional<double> threshold;
    inf->add_option("--corpus", corpus, "Dataset CSV with samples labelled for both expression and AUs");
    inf->add_option("--threshold", threshold, "Minimum conditional frequency to keep an entry");

    auto* train = app.add_subcommand("train", "Train a multi-head model");
    add_common(train, train_f, true);

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    add_common(eval, eval_f);
    std::string eval_ckpt, eval_data, eval_tasks = "va,expr,au";
    std::size_t window = kDefaultMedianWindow;
    eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")->required();
    eval->add_option("--data", eval_data, "Dataset CSV")->required();
    eval->add_option("--tasks", eval_tasks, "Comma-separated tasks");
    eval->add_option("--median-window", window, "Odd median-filter window for video-keyed VA");

    auto* zs = app.add_subcommand("zero-shot", "Score compound expressions from basic-task predictions");
    add_common(zs, zs_f);
    std::string zs_ckpt, zs_data, zs_profiles;
    zs->add_option("--checkpoint", zs_ckpt, "Model checkpoint")->required();
    zs->add_option("--data", zs_data, "Dataset CSV")->required();
    zs->add_option("--profiles", zs_profiles, "Compound profile JSON (default: built from the relatedness table)");

    auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    add_common(gc, gc_f);
    bool inject_fault = false;
    gc->add_flag("--inject-gradient-fault", inject_fault)->group("");

    auto* dc = app.add_subcommand("dump-compound", "Write the default compound class profiles");
    add_common(dc, dc_f);
    bool reweight = false;
    dc->add_flag("--reweight-observational", reweight, "Keep observational AU weights");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
    }

    try {
        if (*gen) return cmd_generate(gen_f);
        if (*inf) return cmd_infer(inf_f, corpus, threshold);
        if (*train) return cmd_train(train_f);
        if (*eval) return cmd_eval(eval_f, eval_ckpt, eval_data, eval_tasks, window);
        if (*zs) return cmd_zero_shot(zs_f, zs_ckpt, zs_data, zs_profiles);
        if (*gc) return cmd_gradcheck(gc_f, inject_fault);
        if (*dc) return cmd_dump_compound(dc_f, reweight);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Usage);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    }
    return static_cast<int>(ErrorKind::Usage);
}

// SPDX-License-Identifier: Apache-2.0
#include "hmtl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hmtl/dataset_io.hpp"
#include "hmtl/error.hpp"

namespace hmtl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

RelatednessConfig relatedness_from_json(const json& j, const fs::path& base) {
    RelatednessConfig rc;
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "domain") return rc;
        rc.source = RelatednessSource::File;
        rc.path = resolve(base, s);
        return rc;
    }
    reject_unknown_keys(j, {"source", "path", "corpus", "threshold"}, "relatedness");
    const auto source = j.value("source", std::string("domain"));
    if (source == "domain") {
        rc.source = RelatednessSource::Domain;
    } else if (source == "file") {
        rc.source = RelatednessSource::File;
        rc.path = resolve(base, get<std::string>(j, "path", "relatedness"));
    } else if (source == "empirical") {
        rc.source = RelatednessSource::Empirical;
        rc.corpus = resolve(base, get<std::string>(j, "corpus", "relatedness"));
        if (j.contains("threshold")) rc.threshold = get<double>(j, "threshold", "relatedness");
    } else {
        throw ConfigError("relatedness.source must be domain, file or empirical, got '" + source + "'");
    }
    return rc;
}

json to_json(const RelatednessConfig& rc) {
    switch (rc.source) {
        case RelatednessSource::Domain:
            return {{"source", "domain"}};
        case RelatednessSource::File:
            return {{"source", "file"}, {"path", rc.path.string()}};
        case RelatednessSource::Empirical:
            return {{"source", "empirical"}, {"corpus", rc.corpus.string()}, {"threshold", rc.threshold}};
    }
    return {};
}

std::uint64_t get_seed(const json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(where + "." + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

}  // namespace

void ExperimentConfig::validate() const {
    loss_weights.validate();
    if (tasks.empty()) throw ConfigError("config: no tasks selected");
    for (const auto& t : tasks)
        if (t != "va" && t != "expr" && t != "au") throw ConfigError("config: unknown task '" + t + "'");
    const std::map<std::string, const std::optional<fs::path>*> sets{{"va", &va_set}, {"expr", &expr_set}, {"au", &au_set}};
    bool any = false;
    for (const auto& [task, path] : sets) {
        if (tasks.count(task) && !path->has_value())
            throw ConfigError("config: task '" + task + "' is selected but datasets." + task + " is missing");
        any = any || (tasks.count(task) && path->has_value());
    }
    if (!any) throw ConfigError("config: no training data");
    if (trunk_widths.empty()) throw ConfigError("config: trunk needs at least one layer");
    for (auto w : trunk_widths)
        if (w == 0) throw ConfigError("config: trunk widths must be positive");
    if (max_batch == 0) throw ConfigError("config: scheduler.max_batch must be positive");
    if (!(optimizer.lr > 0.0)) throw ConfigError("config: optimizer.lr must be positive");
    if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0))
        throw ConfigError("config: optimizer.momentum must lie in [0, 1)");
    if (optimizer.epochs == 0) throw ConfigError("config: optimizer.epochs must be positive");
    if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
        throw ConfigError("config: holdout_fraction must lie in [0, 1)");
    if (median_window == 0 || median_window % 2 == 0) throw ConfigError("config: median_window must be odd");
    if (uses_dm(coupling) || uses_sca(coupling))
        if (!tasks.count("expr") || !tasks.count("au"))
            throw ConfigError("config: coupling " + to_string(coupling) + " needs both the expr and au tasks");
}

ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base) {
    reject_unknown_keys(j,
                        {"datasets", "relatedness", "coupling", "reweight_observational", "loss_weights", "tasks",
                         "model", "scheduler", "optimizer", "holdout_fraction", "median_window", "checkpoint_every",
                         "seed", "out"},
                        "config");
    ExperimentConfig c;
    if (j.contains("datasets")) {
        const auto& d = j["datasets"];
        reject_unknown_keys(d, {"va", "au", "expr", "test"}, "datasets");
        if (d.contains("va")) c.va_set = resolve(base, get<std::string>(d, "va", "datasets"));
        if (d.contains("au")) c.au_set = resolve(base, get<std::string>(d, "au", "datasets"));
        if (d.contains("expr")) c.expr_set = resolve(base, get<std::string>(d, "expr", "datasets"));
        if (d.contains("test")) c.test_set = resolve(base, get<std::string>(d, "test", "datasets"));
    }
    if (j.contains("relatedness")) c.relatedness = relatedness_from_json(j["relatedness"], base);
    if (j.contains("coupling")) c.coupling = parse_coupling_mode(get<std::string>(j, "coupling", "config"));
    if (j.contains("reweight_observational"))
        c.reweight_observational = get<bool>(j, "reweight_observational", "config");
    if (j.contains("loss_weights")) {
        const auto& w = j["loss_weights"];
        reject_unknown_keys(w, {"task", "coupling", "epsilon", "ccc_epsilon"}, "loss_weights");
        if (w.contains("task")) c.loss_weights.task = get<std::map<std::string, double>>(w, "task", "loss_weights");
        if (w.contains("coupling"))
            c.loss_weights.coupling = get<std::map<std::string, double>>(w, "coupling", "loss_weights");
        if (w.contains("epsilon")) c.loss_weights.epsilon = get<double>(w, "epsilon", "loss_weights");
        if (w.contains("ccc_epsilon")) c.loss_weights.ccc_epsilon = get<double>(w, "ccc_epsilon", "loss_weights");
    }
    if (j.contains("tasks")) c.tasks = get<std::set<std::string>>(j, "tasks", "config");
    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown_keys(m, {"trunk", "seed"}, "model");
        if (m.contains("trunk")) c.trunk_widths = get<std::vector<std::size_t>>(m, "trunk", "model");
        if (m.contains("seed")) c.model_seed = get_seed(m, "seed", "model");
    }
    if (j.contains("scheduler")) {
        const auto& s = j["scheduler"];
        reject_unknown_keys(s, {"max_batch"}, "scheduler");
        if (s.contains("max_batch")) c.max_batch = get<std::size_t>(s, "max_batch", "scheduler");
    }
    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        reject_unknown_keys(o, {"lr", "momentum", "epochs"}, "optimizer");
        if (o.contains("lr")) c.optimizer.lr = get<double>(o, "lr", "optimizer");
        if (o.contains("momentum")) c.optimizer.momentum = get<double>(o, "momentum", "optimizer");
        if (o.contains("epochs")) c.optimizer.epochs = get<std::size_t>(o, "epochs", "optimizer");
    }
    if (j.contains("holdout_fraction")) c.holdout_fraction = get<double>(j, "holdout_fraction", "config");
    if (j.contains("median_window")) c.median_window = get<std::size_t>(j, "median_window", "config");
    if (j.contains("checkpoint_every")) c.checkpoint_every = get<std::size_t>(j, "checkpoint_every", "config");
    if (j.contains("seed")) c.seed = get_seed(j, "seed", "config");
    if (j.contains("out")) c.out = resolve(base, get<std::string>(j, "out", "config"));
    return c;
}

json to_json(const ExperimentConfig& c) {
    json datasets = json::object();
    if (c.va_set) datasets["va"] = c.va_set->string();
    if (c.au_set) datasets["au"] = c.au_set->string();
    if (c.expr_set) datasets["expr"] = c.expr_set->string();
    if (c.test_set) datasets["test"] = c.test_set->string();
    json model{{"trunk", c.trunk_widths}};
    if (c.model_seed) model["seed"] = *c.model_seed;
    return {{"datasets", datasets},
            {"relatedness", to_json(c.relatedness)},
            {"coupling", to_string(c.coupling)},
            {"reweight_observational", c.reweight_observational},
            {"loss_weights",
             {{"task", c.loss_weights.task},
              {"coupling", c.loss_weights.coupling},
              {"epsilon", c.loss_weights.epsilon},
              {"ccc_epsilon", c.loss_weights.ccc_epsilon}}},
            {"tasks", c.tasks},
            {"model", model},
            {"scheduler", {{"max_batch", c.max_batch}}},
            {"optimizer", {{"lr", c.optimizer.lr}, {"momentum", c.optimizer.momentum}, {"epochs", c.optimizer.epochs}}},
            {"holdout_fraction", c.holdout_fraction},
            {"median_window", c.median_window},
            {"checkpoint_every", c.checkpoint_every},
            {"seed", c.seed},
            {"out", c.out.string()}};
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    auto c = experiment_config_from_json(read_json_file(path), path.parent_path());
    return c;
}

GenerateConfig generate_config_from_json(const json& j, const fs::path& base) {
    reject_unknown_keys(j,
                        {"relatedness", "n", "test_n", "compound_n", "feature_dim", "noise_scale", "feature_map",
                         "partition", "class_prior", "seed", "out"},
                        "generate config");
    GenerateConfig g;
    const std::string where = "generate config";
    if (j.contains("relatedness")) g.relatedness = relatedness_from_json(j["relatedness"], base);
    if (j.contains("n")) g.n = get<std::size_t>(j, "n", where);
    if (j.contains("test_n")) g.test_n = get<std::size_t>(j, "test_n", where);
    if (j.contains("compound_n")) g.compound_n = get<std::size_t>(j, "compound_n", where);
    if (j.contains("feature_dim")) g.feature_dim = get<std::size_t>(j, "feature_dim", where);
    if (j.contains("noise_scale")) g.noise_scale = get<double>(j, "noise_scale", where);
    if (j.contains("feature_map")) {
        const auto m = get<std::string>(j, "feature_map", where);
        if (m == "random") g.feature_map = FeatureMap::Random;
        else if (m == "identity") g.feature_map = FeatureMap::Identity;
        else throw ConfigError("feature_map must be random or identity, got '" + m + "'");
    }
    if (j.contains("partition")) {
        const auto& p = j["partition"];
        reject_unknown_keys(p, {"va", "au", "expr"}, "partition");
        g.partition = {get<double>(p, "va", "partition"), get<double>(p, "au", "partition"),
                       get<double>(p, "expr", "partition")};
    }
    if (j.contains("class_prior")) g.class_prior = get<std::vector<double>>(j, "class_prior", where);
    if (j.contains("seed")) g.seed = get_seed(j, "seed", where);
    if (j.contains("out")) g.out = resolve(base, get<std::string>(j, "out", where));
    return g;
}

json to_json(const GenerateConfig& g) {
    json j{{"relatedness", to_json(g.relatedness)},
           {"n", g.n},
           {"test_n", g.test_n},
           {"compound_n", g.compound_n},
           {"feature_dim", g.feature_dim},
           {"noise_scale", g.noise_scale},
           {"feature_map", g.feature_map == FeatureMap::Identity ? "identity" : "random"},
           {"partition", {{"va", g.partition.va}, {"au", g.partition.au}, {"expr", g.partition.expr}}},
           {"seed", g.seed},
           {"out", g.out.string()}};
    if (g.class_prior) j["class_prior"] = *g.class_prior;
    return j;
}

fs::path data_dir() {
    if (const char* env = std::getenv("HMTL_DATA_DIR")) return env;
    return HMTL_DATA_DIR;
}

RelatednessTable resolve_relatedness(const RelatednessConfig& rc) {
    switch (rc.source) {
        case RelatednessSource::Domain:
            return load_table_file(data_dir() / "emotion_au_domain.json");
        case RelatednessSource::File:
            return load_table_file(rc.path);
        case RelatednessSource::Empirical:
            return infer_empirical(co_annotated_corpus(read_dataset(rc.corpus)), rc.threshold).table;
    }
    throw ConfigError("unknown relatedness source");
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream ss;
    ss << std::hex;
    ss.width(16);
    ss.fill('0');
    ss << h;
    return ss.str();
}

}  // namespace hmtl

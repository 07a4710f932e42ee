// SPDX-License-Identifier: Apache-2.0
#include "hmtl/relatedness.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "hmtl/error.hpp"

namespace hmtl {

using nlohmann::json;

RelatednessTable::RelatednessTable(std::vector<std::string> classes, std::vector<std::string> labels,
                                   TableKind kind, std::vector<std::vector<RelatednessEntry>> entries)
    : classes_(std::move(classes)), labels_(std::move(labels)), kind_(kind), entries_(std::move(entries)) {
    if (entries_.size() != classes_.size())
        throw DataError("relatedness table: entry rows do not match the class list");
    if (std::set<std::string>(classes_.begin(), classes_.end()).size() != classes_.size())
        throw DataError("relatedness table: duplicate class name");
    if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size())
        throw DataError("relatedness table: duplicate label name");
    for (std::size_t c = 0; c < entries_.size(); ++c) {
        auto& row = entries_[c];
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto& e = row[i];
            if (e.label >= labels_.size())
                throw DataError("relatedness table: label index out of range for class " + classes_[c]);
            if (i > 0 && row[i - 1].label == e.label)
                throw DataError("relatedness table: label " + labels_[e.label] + " listed twice for class " +
                                classes_[c]);
            if (!(e.weight > 0.0 && e.weight <= 1.0))
                throw DataError("relatedness table: weight outside (0,1] for " + classes_[c] + "/" +
                                labels_[e.label]);
            if (e.prototypical && e.weight != 1.0)
                throw DataError("relatedness table: prototypical entry with weight != 1 for " + classes_[c]);
            if (e.prototypical && kind_ == TableKind::Empirical)
                throw DataError("relatedness table: empirical tables carry no prototypical flags");
        }
    }
}

std::span<const RelatednessEntry> RelatednessTable::lookup(std::size_t class_index) const {
    if (class_index >= entries_.size())
        throw DataError("relatedness lookup: class index " + std::to_string(class_index) + " out of range");
    return entries_[class_index];
}

double RelatednessTable::weight(std::size_t class_index, std::size_t label_index) const {
    for (const auto& e : lookup(class_index))
        if (e.label == label_index) return e.weight;
    return 0.0;
}

std::optional<std::size_t> RelatednessTable::class_index(std::string_view name) const {
    const auto it = std::find(classes_.begin(), classes_.end(), name);
    if (it == classes_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - classes_.begin());
}

std::optional<std::size_t> RelatednessTable::label_index(std::string_view name) const {
    const auto it = std::find(labels_.begin(), labels_.end(), name);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

namespace {

std::string kind_name(TableKind k) {
    return k == TableKind::Empirical ? "empirical" : "prototypical_observational";
}

TableKind parse_kind(const std::string& s) {
    if (s == "empirical") return TableKind::Empirical;
    if (s == "prototypical_observational") return TableKind::PrototypicalObservational;
    throw DataError("relatedness table: unknown kind '" + s + "'");
}

std::vector<std::string> string_list(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array())
        throw DataError(std::string("relatedness table: missing list '") + key + "'");
    return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

json to_json(const RelatednessTable& table) {
    json entries = json::object();
    for (std::size_t c = 0; c < table.num_classes(); ++c) {
        json row = json::object();
        for (const auto& e : table.lookup(c))
            row[table.labels()[e.label]] = {{"w", e.weight}, {"proto", e.prototypical}};
        entries[table.classes()[c]] = std::move(row);
    }
    return {{"classes", table.classes()},
            {"labels", table.labels()},
            {"entries", std::move(entries)},
            {"kind", kind_name(table.kind())}};
}

RelatednessTable table_from_json(const json& j) {
    auto classes = string_list(j, "classes");
    auto labels = string_list(j, "labels");
    const TableKind kind = parse_kind(j.value("kind", std::string("prototypical_observational")));
    std::vector<std::vector<RelatednessEntry>> rows(classes.size());
    const json& entries = j.at("entries");
    for (auto it = entries.begin(); it != entries.end(); ++it) {
        const auto cls = std::find(classes.begin(), classes.end(), it.key());
        if (cls == classes.end()) throw DataError("relatedness table: unknown class '" + it.key() + "'");
        auto& row = rows[static_cast<std::size_t>(cls - classes.begin())];
        for (auto lt = it.value().begin(); lt != it.value().end(); ++lt) {
            const auto lbl = std::find(labels.begin(), labels.end(), lt.key());
            if (lbl == labels.end()) throw DataError("relatedness table: unknown label '" + lt.key() + "'");
            row.push_back({static_cast<std::size_t>(lbl - labels.begin()), lt.value().at("w").get<double>(),
                           lt.value().value("proto", false)});
        }
    }
    return RelatednessTable(std::move(classes), std::move(labels), kind, std::move(rows));
}

std::string serialize(const RelatednessTable& table) { return to_json(table).dump(2) + "\n"; }

RelatednessTable deserialize_table(const std::string& text) {
    try {
        return table_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("relatedness table: malformed JSON: ") + e.what());
    }
}

RelatednessTable load_domain_table(const json& source) {
    auto classes = string_list(source, "classes");
    if (std::set<std::string>(classes.begin(), classes.end()).size() != classes.size())
        throw DataError("domain table: duplicate class in declared class list");
    std::vector<std::string> labels = source.contains("labels") ? string_list(source, "labels") : au_labels();

    auto class_of = [&](const std::string& name) {
        const auto it = std::find(classes.begin(), classes.end(), name);
        if (it == classes.end()) throw DataError("domain table: class '" + name + "' is not declared");
        return static_cast<std::size_t>(it - classes.begin());
    };
    auto label_of = [&](const std::string& name) {
        const auto it = std::find(labels.begin(), labels.end(), name);
        if (it == labels.end()) throw DataError("domain table: unknown label '" + name + "'");
        return static_cast<std::size_t>(it - labels.begin());
    };

    std::vector<std::vector<RelatednessEntry>> rows(classes.size());
    std::set<std::size_t> seen_proto;
    if (source.contains("prototypical")) {
        for (auto it = source.at("prototypical").begin(); it != source.at("prototypical").end(); ++it) {
            const std::size_t c = class_of(it.key());
            if (!seen_proto.insert(c).second) throw DataError("domain table: duplicate class '" + it.key() + "'");
            for (const auto& name : it.value().get<std::vector<std::string>>())
                rows[c].push_back({label_of(name), 1.0, true});
        }
    }
    std::set<std::size_t> seen_obs;
    if (source.contains("observational")) {
        for (auto it = source.at("observational").begin(); it != source.at("observational").end(); ++it) {
            const std::size_t c = class_of(it.key());
            if (!seen_obs.insert(c).second) throw DataError("domain table: duplicate class '" + it.key() + "'");
            for (auto lt = it.value().begin(); lt != it.value().end(); ++lt) {
                const double w = lt.value().get<double>();
                if (!(w > 0.0 && w <= 1.0))
                    throw DataError("domain table: weight " + std::to_string(w) + " outside (0,1] for " +
                                    it.key() + "/" + lt.key());
                rows[c].push_back({label_of(lt.key()), w, false});
            }
        }
    }
    return RelatednessTable(std::move(classes), std::move(labels), TableKind::PrototypicalObservational,
                            std::move(rows));
}

RelatednessTable load_table_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read relatedness table: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("relatedness table " + path.string() + ": " + e.what());
    }
    try {
        return j.contains("entries") ? table_from_json(j) : load_domain_table(j);
    } catch (const json::exception& e) {
        throw DataError("relatedness table " + path.string() + ": " + e.what());
    }
}

void save_table_file(const RelatednessTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write relatedness table: " + path.string());
    out << serialize(table);
}

EmpiricalInference infer_empirical(const CoAnnotatedCorpus& corpus, double threshold) {
    if (corpus.samples.empty()) throw DataError("infer_empirical: empty corpus");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("infer_empirical: threshold outside [0,1]");

    const std::size_t nc = corpus.classes.size();
    const std::size_t nl = corpus.labels.size();
    std::vector<std::size_t> active(nc * nl, 0), annotated_count(nc * nl, 0);
    for (const auto& s : corpus.samples) {
        if (s.class_label >= nc) throw DataError("infer_empirical: sample class index out of range");
        if (s.labels.size() != nl) throw DataError("infer_empirical: sample label vector has wrong length");
        for (std::size_t b = 0; b < nl; ++b) {
            if (!annotated(s.labels[b])) continue;
            ++annotated_count[s.class_label * nl + b];
            if (s.labels[b] == Annotation::Positive) ++active[s.class_label * nl + b];
        }
    }

    EmpiricalInference result{RelatednessTable(corpus.classes, corpus.labels, TableKind::Empirical,
                                               std::vector<std::vector<RelatednessEntry>>(nc)),
                              {}};
    std::vector<std::vector<RelatednessEntry>> rows(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        bool any = false;
        for (std::size_t b = 0; b < nl; ++b) {
            const std::size_t n = annotated_count[c * nl + b];
            if (n == 0) continue;
            any = true;
            const double w = static_cast<double>(active[c * nl + b]) / static_cast<double>(n);
            if (w > 0.0 && w >= threshold) rows[c].push_back({b, w, false});
        }
        if (!any) result.warnings.push_back("class '" + corpus.classes[c] + "' has no annotated samples; omitted");
    }
    result.table = RelatednessTable(corpus.classes, corpus.labels, TableKind::Empirical, std::move(rows));
    return result;
}

}  // namespace hmtl

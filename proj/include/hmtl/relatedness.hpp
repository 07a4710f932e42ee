// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmtl/affect.hpp"

namespace hmtl {

enum class TableKind { PrototypicalObservational, Empirical };

struct RelatednessEntry {
    std::size_t label = 0;  // index into RelatednessTable::labels()
    double weight = 1.0;    // p(label | class), in (0, 1]
    bool prototypical = false;

    friend bool operator==(const RelatednessEntry&, const RelatednessEntry&) = default;
};

/// Maps each categorical class to a weighted set of binary labels
/// (emotions to AUs, identities to attributes). Immutable once built.
class RelatednessTable {
public:
    RelatednessTable(std::vector<std::string> classes, std::vector<std::string> labels, TableKind kind,
                     std::vector<std::vector<RelatednessEntry>> entries);

    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    TableKind kind() const noexcept { return kind_; }
    std::size_t num_classes() const noexcept { return classes_.size(); }
    std::size_t num_labels() const noexcept { return labels_.size(); }

    /// Entries for one class, sorted by label index. Empty for classes
    /// without related labels (e.g. neutral).
    std::span<const RelatednessEntry> lookup(std::size_t class_index) const;

    /// Weight of (class, label), 0 when the pair is unrelated.
    double weight(std::size_t class_index, std::size_t label_index) const;

    std::optional<std::size_t> class_index(std::string_view name) const;
    std::optional<std::size_t> label_index(std::string_view name) const;

    friend bool operator==(const RelatednessTable&, const RelatednessTable&) = default;

private:
    std::vector<std::string> classes_;
    std::vector<std::string> labels_;
    TableKind kind_;
    std::vector<std::vector<RelatednessEntry>> entries_;
};

nlohmann::json to_json(const RelatednessTable& table);
RelatednessTable table_from_json(const nlohmann::json& j);

std::string serialize(const RelatednessTable& table);
RelatednessTable deserialize_table(const std::string& text);

/// Reads a domain-knowledge table: declared classes (and optionally labels,
/// default the canonical AU list), per-class prototypical label names and
/// observational {label: weight} maps.
RelatednessTable load_domain_table(const nlohmann::json& source);

/// Loads either the serialized form (has "entries") or the domain form.
RelatednessTable load_table_file(const std::filesystem::path& path);
void save_table_file(const RelatednessTable& table, const std::filesystem::path& path);

struct CoAnnotatedSample {
    std::size_t class_label = 0;
    std::vector<Annotation> labels;
};

struct CoAnnotatedCorpus {
    std::vector<std::string> classes;
    std::vector<std::string> labels;
    std::vector<CoAnnotatedSample> samples;
};

struct EmpiricalInference {
    RelatednessTable table;
    std::vector<std::string> warnings;
};

inline constexpr double kDefaultEmpiricalThreshold = 0.1;

/// Weight of (c, b) = #(class c, b active) / #(class c, b annotated);
/// entries below `threshold` are dropped.
EmpiricalInference infer_empirical(const CoAnnotatedCorpus& corpus, double threshold = kDefaultEmpiricalThreshold);

}  // namespace hmtl

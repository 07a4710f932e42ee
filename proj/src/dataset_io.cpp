// SPDX-License-Identifier: Apache-2.0
#include "hmtl/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hmtl/error.hpp"

namespace hmtl {

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    for (auto& f : out)
        if (!f.empty() && f.back() == '\r') f.pop_back();
    return out;
}

struct Layout {
    std::size_t feature_dim = 0;
    bool has_compound = false;
};

}  // namespace

void write_dataset(std::ostream& out, const std::vector<HeterogeneousSample>& samples) {
    const std::size_t d = samples.empty() ? 0 : samples.front().features.size();
    bool has_compound = false;
    for (const auto& s : samples) has_compound = has_compound || s.compound.has_value();

    out << "id,video_id,frame_idx";
    for (std::size_t i = 0; i < d; ++i) out << ",f" << i;
    out << ",v,a,expr";
    for (int au : kCanonicalAus) out << ",au_" << au;
    if (has_compound) out << ",compound";
    out << '\n';

    for (const auto& s : samples) {
        if (s.features.size() != d) throw DataError("write_dataset: sample '" + s.id + "' has a different feature width");
        out << s.id << ',';
        if (s.sequence) out << s.sequence->video << ',' << s.sequence->frame;
        else out << ',';
        for (double f : s.features) out << ',' << format_double(f);
        if (s.va) out << ',' << format_double(s.va->valence) << ',' << format_double(s.va->arousal);
        else out << ",,";
        out << ',';
        if (s.expr) out << *s.expr;
        for (std::size_t a = 0; a < kNumAus; ++a) {
            out << ',';
            if (s.au && annotated((*s.au)[a])) out << ((*s.au)[a] == Annotation::Positive ? '1' : '0');
        }
        if (has_compound) {
            out << ',';
            if (s.compound) out << *s.compound;
        }
        out << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const std::vector<HeterogeneousSample>& samples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset: " + path.string());
    write_dataset(out, samples);
}

std::vector<HeterogeneousSample> read_dataset(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source_name + ": empty dataset file");
    const auto header = split_csv_line(line);
    auto fail = [&](std::size_t line_no, const std::string& what) -> DataError {
        return DataError(source_name + ":" + std::to_string(line_no) + ": " + what);
    };
    if (header.size() < 3 || header[0] != "id" || header[1] != "video_id" || header[2] != "frame_idx")
        throw fail(1, "header must start with id,video_id,frame_idx");

    Layout layout;
    std::size_t col = 3;
    while (col < header.size() && header[col] == "f" + std::to_string(layout.feature_dim)) {
        ++layout.feature_dim;
        ++col;
    }
    std::vector<std::string> expected{"v", "a", "expr"};
    for (int au : kCanonicalAus) expected.push_back("au_" + std::to_string(au));
    for (const auto& name : expected) {
        if (col >= header.size() || header[col] != name) throw fail(1, "expected column '" + name + "'");
        ++col;
    }
    if (col < header.size() && header[col] == "compound") {
        layout.has_compound = true;
        ++col;
    }
    if (col != header.size()) throw fail(1, "unexpected trailing column '" + header[col] + "'");
    const std::size_t width = col;

    auto parse_double = [&](const std::string& s, std::size_t line_no) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw fail(line_no, "bad number '" + s + "'");
        return v;
    };
    auto parse_index = [&](const std::string& s, std::size_t line_no) {
        long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0)
            throw fail(line_no, "bad index '" + s + "'");
        return v;
    };

    std::vector<HeterogeneousSample> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != width)
            throw fail(line_no, "expected " + std::to_string(width) + " fields, got " + std::to_string(f.size()));
        HeterogeneousSample s;
        s.id = f[0];
        if (!f[1].empty()) {
            if (f[2].empty()) throw fail(line_no, "video_id without frame_idx");
            s.sequence = SequenceKey{f[1], parse_index(f[2], line_no)};
        }
        std::size_t c = 3;
        s.features.reserve(layout.feature_dim);
        for (std::size_t i = 0; i < layout.feature_dim; ++i) s.features.push_back(parse_double(f[c++], line_no));
        const std::string& v = f[c++];
        const std::string& a = f[c++];
        if (v.empty() != a.empty()) throw fail(line_no, "valence and arousal must both be present or both blank");
        if (!v.empty()) s.va = VaPair{parse_double(v, line_no), parse_double(a, line_no)};
        const std::string& e = f[c++];
        if (!e.empty()) {
            if (const auto named = emotion_index(e)) s.expr = *named;
            else {
                const auto idx = static_cast<std::size_t>(parse_index(e, line_no));
                if (idx >= kNumEmotions) throw fail(line_no, "expression index out of range");
                s.expr = idx;
            }
        }
        std::vector<Annotation> au(kNumAus, Annotation::Missing);
        bool any_au = false;
        for (std::size_t k = 0; k < kNumAus; ++k) {
            const std::string& cell = f[c++];
            if (cell.empty()) continue;
            if (cell == "1") au[k] = Annotation::Positive;
            else if (cell == "0") au[k] = Annotation::Negative;
            else throw fail(line_no, "AU value must be 0, 1 or blank");
            any_au = true;
        }
        if (any_au) s.au = std::move(au);
        if (layout.has_compound && !f[c].empty()) s.compound = static_cast<std::size_t>(parse_index(f[c], line_no));
        if (!s.has_any_label() && !s.compound) throw fail(line_no, "sample carries no label");
        try {
            if (s.has_any_label()) validate(s);
        } catch (const DataError& err) {
            throw fail(line_no, err.what());
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<HeterogeneousSample> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset: " + path.string());
    return read_dataset(in, path.string());
}

CoAnnotatedCorpus co_annotated_corpus(const std::vector<HeterogeneousSample>& samples) {
    CoAnnotatedCorpus corpus{emotion_names(), au_labels(), {}};
    for (const auto& s : samples)
        if (s.expr && s.au) corpus.samples.push_back({*s.expr, *s.au});
    return corpus;
}

}  // namespace hmtl

// SPDX-License-Identifier: Apache-2.0
#include "hmtl/zeroshot.hpp"

#include <algorithm>
#include <fstream>

#include "hmtl/affect.hpp"
#include "hmtl/error.hpp"
#include "hmtl/numeric.hpp"

namespace hmtl {

using nlohmann::json;

void validate(const CompoundClass& cls) {
    if (cls.emo1 >= kNumEmotions || cls.emo2 >= kNumEmotions)
        throw DataError("compound class '" + cls.name + "': constituent emotion out of range");
    if (cls.emo1 == cls.emo2) throw DataError("compound class '" + cls.name + "': constituents must differ");
    if (cls.au_profile.empty()) throw DataError("compound class '" + cls.name + "': empty AU profile");
    for (const auto& [au, w] : cls.au_profile) {
        if (au >= kNumAus) throw DataError("compound class '" + cls.name + "' references an AU outside the canonical set");
        if (!(w > 0.0 && w <= 1.0)) throw DataError("compound class '" + cls.name + "': AU weight outside (0,1]");
    }
}

std::vector<CompoundClass> default_compound_classes(const RelatednessTable& table, bool reweight_observational) {
    using E = Emotion;
    struct Blend {
        const char* name;
        E a, b;
        bool positive;
    };
    static constexpr Blend kBlends[] = {
        {"happily_surprised", E::Happiness, E::Surprise, true},
        {"happily_disgusted", E::Happiness, E::Disgust, true},
        {"sadly_fearful", E::Sadness, E::Fear, false},
        {"sadly_angry", E::Sadness, E::Anger, false},
        {"sadly_surprised", E::Sadness, E::Surprise, false},
        {"sadly_disgusted", E::Sadness, E::Disgust, false},
        {"fearfully_angry", E::Fear, E::Anger, false},
        {"fearfully_surprised", E::Fear, E::Surprise, false},
        {"angrily_surprised", E::Anger, E::Surprise, false},
        {"angrily_disgusted", E::Anger, E::Disgust, false},
        {"disgustedly_surprised", E::Disgust, E::Surprise, false},
    };
    if (table.num_classes() != kNumEmotions || table.num_labels() != kNumAus)
        throw DataError("default compound classes need an emotion x AU relatedness table");

    std::vector<CompoundClass> out;
    for (const auto& blend : kBlends) {
        CompoundClass cls{blend.name, index_of(blend.a), index_of(blend.b), {}, blend.positive};
        for (const std::size_t emo : {cls.emo1, cls.emo2})
            for (const auto& e : table.lookup(emo)) {
                const double w = reweight_observational || table.kind() == TableKind::Empirical ? e.weight : 1.0;
                double& slot = cls.au_profile[e.label];
                slot = std::max(slot, w);
            }
        validate(cls);
        out.push_back(std::move(cls));
    }
    return out;
}

json to_json(const std::vector<CompoundClass>& classes) {
    json arr = json::array();
    for (const auto& c : classes) {
        json aus = json::object();
        for (const auto& [au, w] : c.au_profile) aus[std::to_string(kCanonicalAus.at(au))] = w;
        arr.push_back({{"name", c.name},
                       {"emo1", std::string(emotion_name(c.emo1))},
                       {"emo2", std::string(emotion_name(c.emo2))},
                       {"aus", aus},
                       {"positive_valence", c.requires_positive_valence}});
    }
    return arr;
}

namespace {

std::size_t parse_emotion(const json& j, const std::string& cls) {
    if (j.is_number_integer()) {
        const auto v = j.get<long long>();
        if (v < 0 || v >= static_cast<long long>(kNumEmotions))
            throw DataError("compound class '" + cls + "': emotion index out of range");
        return static_cast<std::size_t>(v);
    }
    const auto idx = emotion_index(j.get<std::string>());
    if (!idx) throw DataError("compound class '" + cls + "': unknown emotion '" + j.get<std::string>() + "'");
    return *idx;
}

// Profile keys name AUs by number, with or without the "AU" prefix.
std::size_t parse_au_key(const std::string& key, const std::string& cls) {
    std::string digits = key.rfind("AU", 0) == 0 ? key.substr(2) : key;
    int number = -1;
    try {
        std::size_t used = 0;
        number = std::stoi(digits, &used);
        if (used != digits.size()) number = -1;
    } catch (const std::exception&) {
        number = -1;
    }
    const auto idx = au_index(number);
    if (!idx) throw DataError("compound class '" + cls + "' references unknown AU '" + key + "'");
    return *idx;
}

}  // namespace

std::vector<CompoundClass> compound_classes_from_json(const json& j) {
    if (!j.is_array()) throw DataError("compound profile file must hold a JSON array");
    if (j.empty()) throw DataError("compound profile file lists no classes");
    std::vector<CompoundClass> out;
    try {
        for (const auto& item : j) {
            CompoundClass c;
            c.name = item.at("name").get<std::string>();
            c.emo1 = parse_emotion(item.at("emo1"), c.name);
            c.emo2 = parse_emotion(item.at("emo2"), c.name);
            for (auto it = item.at("aus").begin(); it != item.at("aus").end(); ++it)
                c.au_profile[parse_au_key(it.key(), c.name)] = it.value().get<double>();
            c.requires_positive_valence = item.value("positive_valence", false);
            validate(c);
            out.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("compound profile: ") + e.what());
    }
    return out;
}

std::vector<CompoundClass> load_compound_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read compound profile file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("compound profile " + path.string() + ": " + e.what());
    }
    return compound_classes_from_json(j);
}

std::vector<CompoundScore> compound_scores(const PredictionBundle& bundle, const std::vector<CompoundClass>& classes) {
    if (bundle.au_probs.size() != kNumAus || bundle.expr_probs.size() != kNumEmotions)
        throw DataError("compound_scores: bundle lacks AU or expression predictions");
    std::vector<CompoundScore> out;
    out.reserve(classes.size());
    for (const auto& cls : classes) {
        validate(cls);
        double num = 0.0, den = 0.0;
        for (const auto& [au, w] : cls.au_profile) {
            num += bundle.au_probs[au] * w;
            den += w;
        }
        CompoundScore s;
        s.i_au = std::min(1.0, num / den);
        s.f_emo = std::min(1.0, bundle.expr_probs[cls.emo1] + bundle.expr_probs[cls.emo2]);
        s.d_va = cls.requires_positive_valence && bundle.va[0] > 0.0 ? 1.0 : 0.0;
        s.total = s.i_au + s.f_emo + s.d_va;
        out.push_back(s);
    }
    return out;
}

std::size_t predict_compound(const std::vector<CompoundScore>& scores) {
    if (scores.empty()) throw DataError("predict_compound: no scores");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i].total > scores[best].total) best = i;
    return best;
}

}  // namespace hmtl

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "hmtl/config.hpp"
#include "hmtl/error.hpp"
#include "hmtl/zeroshot.hpp"
#include "oracles.hpp"

using namespace hmtl;
using doctest::Approx;
using nlohmann::json;

namespace {

RelatednessTable domain() { return load_table_file(data_dir() / "emotion_au_domain.json"); }
std::size_t emo(const char* name) { return *emotion_index(name); }
std::size_t au(int number) { return *au_index(number); }

PredictionBundle flat_bundle(double au_p = 0.0, double valence = 0.0) {
    PredictionBundle b;
    b.va = {valence, 0.0};
    b.expr_probs.assign(kNumEmotions, 1.0 / kNumEmotions);
    b.au_probs.assign(kNumAus, au_p);
    return b;
}

CompoundClass happily_surprised() {
    return {"happily_surprised", emo("happiness"), emo("surprise"), {{au(12), 1.0}, {au(25), 1.0}}, true};
}

}  // namespace

TEST_CASE("compound score components") {
    SUBCASE("perfect AU match") {
        auto b = flat_bundle();
        b.au_probs[au(12)] = b.au_probs[au(25)] = 1.0;
        CHECK(compound_scores(b, {happily_surprised()})[0].i_au == 1.0);
    }
    SUBCASE("F_emo sums the constituents") {
        auto b = flat_bundle();
        b.expr_probs.assign(kNumEmotions, 0.2 / 5);
        b.expr_probs[emo("happiness")] = 0.5;
        b.expr_probs[emo("surprise")] = 0.3;
        CHECK(compound_scores(b, {happily_surprised()})[0].f_emo == Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("valence sign rule") {
        CHECK(compound_scores(flat_bundle(0.0, -0.2), {happily_surprised()})[0].d_va == 0.0);
        CHECK(compound_scores(flat_bundle(0.0, 0.2), {happily_surprised()})[0].d_va == 1.0);
        CHECK(compound_scores(flat_bundle(0.0, 0.0), {happily_surprised()})[0].d_va == 0.0);
        CHECK(compound_scores(flat_bundle(0.0, 1e-300), {happily_surprised()})[0].d_va == 1.0);
        auto unflagged = happily_surprised();
        unflagged.requires_positive_valence = false;
        CHECK(compound_scores(flat_bundle(0.0, 0.9), {unflagged})[0].d_va == 0.0);
    }
    SUBCASE("weighted I_au and total") {
        auto b = flat_bundle(0.0, 0.4);
        b.au_probs[au(12)] = 0.9;
        b.au_probs[au(6)] = 0.2;
        CompoundClass c{"c", emo("happiness"), emo("sadness"), {{au(12), 1.0}, {au(6), 0.51}}, true};
        const auto s = compound_scores(b, {c})[0];
        CHECK(s.i_au == Approx((0.9 + 0.2 * 0.51) / 1.51).epsilon(1e-14));
        CHECK(s.total == s.i_au + s.f_emo + s.d_va);
    }
    SUBCASE("out of range AU is rejected") {
        CompoundClass bad{"bad", 0, 1, {{kNumAus, 0.5}}, false};
        CHECK_THROWS_AS(compound_scores(flat_bundle(), {bad}), DataError);
    }
    SUBCASE("bundle without heads") {
        PredictionBundle b;
        CHECK_THROWS_AS(compound_scores(b, {happily_surprised()}), DataError);
    }
}

TEST_CASE("one-hot happy bundle favours happiness compounds on F_emo") {
    const auto classes = default_compound_classes(domain(), false);
    PredictionBundle b;
    b.va = {0.6, 0.3};
    b.expr_probs.assign(kNumEmotions, 0.0);
    b.expr_probs[emo("happiness")] = 1.0;
    b.au_probs.assign(kNumAus, 0.0);
    b.au_probs[au(12)] = b.au_probs[au(25)] = b.au_probs[au(6)] = 1.0;
    const auto scores = compound_scores(b, classes);
    double best_happy = 0.0, best_other = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const bool happy = classes[c].emo1 == emo("happiness") || classes[c].emo2 == emo("happiness");
        (happy ? best_happy : best_other) = std::max(happy ? best_happy : best_other, scores[c].f_emo);
    }
    CHECK(best_happy >= best_other);
    CHECK(classes[predict_compound(scores)].emo1 == emo("happiness"));
}

TEST_CASE("predict_compound") {
    auto with_totals = [](std::vector<double> t) {
        std::vector<CompoundScore> s;
        for (double x : t) s.push_back({0, 0, 0, x});
        return s;
    };
    CHECK(predict_compound(with_totals({1.2, 2.4, 0.3})) == 1);
    CHECK(predict_compound(with_totals({4.2, 5.4, 3.3})) == 1);
    CHECK(predict_compound(with_totals({1.0, 2.0, 2.0})) == 1);
    CHECK_THROWS_AS(predict_compound({}), DataError);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> t(1 + trial % 16);
        for (double& x : t) x = u(rng);
        const auto expected = static_cast<std::size_t>(std::max_element(t.begin(), t.end()) - t.begin());
        CHECK(predict_compound(with_totals(t)) == expected);
    }
}

TEST_CASE("score ranges and monotonicity on random bundles") {
    const auto classes = default_compound_classes(domain(), true);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0), v(-1.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        PredictionBundle b;
        b.va = {v(rng), v(rng)};
        b.expr_probs = oracle::random_simplex(kNumEmotions, rng);
        for (std::size_t a = 0; a < kNumAus; ++a) b.au_probs.push_back(u(rng));
        const auto s = compound_scores(b, classes);
        for (std::size_t c = 0; c < classes.size(); ++c) {
            CHECK((s[c].i_au >= 0.0 && s[c].i_au <= 1.0));
            CHECK((s[c].f_emo >= 0.0 && s[c].f_emo <= 1.0));
            CHECK((s[c].d_va == 0.0 || s[c].d_va == 1.0));
            CHECK(s[c].total == s[c].i_au + s[c].f_emo + s[c].d_va);
        }
        auto raised = b;
        const std::size_t k = trial % kNumAus;
        raised.au_probs[k] = std::min(1.0, raised.au_probs[k] + 0.3);
        const auto s2 = compound_scores(raised, classes);
        for (std::size_t c = 0; c < classes.size(); ++c) CHECK(s2[c].i_au >= s[c].i_au);
    }
}

TEST_CASE("default compound classes") {
    const auto t = domain();
    const auto classes = default_compound_classes(t, false);
    CHECK(classes.size() == 11);
    std::size_t flagged = 0;
    for (const auto& c : classes) {
        CHECK(c.emo1 != c.emo2);
        CHECK_FALSE(c.au_profile.empty());
        if (c.requires_positive_valence) {
            ++flagged;
            CHECK(c.emo1 == emo("happiness"));
        }
    }
    CHECK(flagged == 2);
    // Union of happiness and surprise AUs, observational weights dropped to 1 without reweighting.
    const auto& hs = classes[0];
    CHECK(hs.name == "happily_surprised");
    CHECK(hs.au_profile.size() == 7);
    CHECK(hs.au_profile.at(au(6)) == 1.0);
    const auto rw = default_compound_classes(t, true);
    CHECK(rw[0].au_profile.at(au(6)) == 0.51);
    CHECK(rw[0].au_profile.at(au(5)) == 0.66);
    CHECK(rw[0].au_profile.at(au(25)) == 1.0);
}

TEST_CASE("compound profile JSON") {
    const auto classes = default_compound_classes(domain(), true);
    CHECK(compound_classes_from_json(to_json(classes)) == classes);

    json j = json::parse(R"([{"name": "x", "emo1": "happiness", "emo2": 6, "aus": {"AU12": 1.0, "25": 0.5}}])");
    const auto parsed = compound_classes_from_json(j);
    CHECK(parsed[0].emo2 == emo("surprise"));
    CHECK(parsed[0].au_profile.at(au(25)) == 0.5);
    CHECK_FALSE(parsed[0].requires_positive_valence);

    CHECK_THROWS_AS(compound_classes_from_json(json::array()), DataError);
    CHECK_THROWS_AS(compound_classes_from_json(json::object()), DataError);
    j[0]["aus"]["AU99"] = 0.5;
    CHECK_THROWS_AS(compound_classes_from_json(j), DataError);

    const auto path = std::filesystem::temp_directory_path() / "hmtl_test_empty_profiles.json";
    std::ofstream(path) << "[]";
    CHECK_THROWS_AS(load_compound_profiles(path), DataError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_compound_profiles("/nonexistent/profiles.json"), DataError);
}

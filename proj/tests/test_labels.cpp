// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <map>

#include "hmtl/config.hpp"
#include "hmtl/error.hpp"
#include "hmtl/labels.hpp"
#include "hmtl/numeric.hpp"

using namespace hmtl;

namespace {

RelatednessTable domain() { return load_table_file(data_dir() / "emotion_au_domain.json"); }
std::size_t emo(const char* name) { return *emotion_index(name); }
std::size_t au(int number) { return *au_index(number); }

HeterogeneousSample with_expr(const char* e) {
    HeterogeneousSample s;
    s.id = "x";
    s.features = {0.0};
    s.expr = emo(e);
    return s;
}

HeterogeneousSample with_aus(std::initializer_list<int> on) {
    HeterogeneousSample s;
    s.id = "x";
    s.features = {0.0};
    s.au = std::vector<Annotation>(kNumAus, Annotation::Negative);
    for (int a : on) (*s.au)[au(a)] = Annotation::Positive;
    return s;
}

// {AU number: weight} of the active co-annotated targets.
std::map<int, double> active_targets(const HeterogeneousSample& s) {
    std::map<int, double> out;
    for (std::size_t i = 0; i < kNumAus; ++i)
        if ((*s.au)[i] == Annotation::Positive) out[kCanonicalAus[i]] = (*s.au_weights)[i];
    return out;
}

HeterogeneousSample va_expr(const char* e, double v, double a) {
    auto s = with_expr(e);
    s.va = VaPair{v, a};
    return s;
}

HeterogeneousSample framed(const std::string& video, long frame) {
    HeterogeneousSample s;
    s.id = video + "_" + std::to_string(frame);
    s.features = {0.0};
    s.va = VaPair{0.0, 0.0};
    s.sequence = SequenceKey{video, frame};
    return s;
}

}  // namespace

TEST_CASE("co-annotate emotion to AUs") {
    const auto t = domain();
    SUBCASE("happiness") {
        const auto s = co_annotate_emotion_to_aus(with_expr("happiness"), t);
        CHECK(active_targets(s) == std::map<int, double>{{12, 1.0}, {25, 1.0}, {6, 0.51}});
        std::size_t annotated_count = 0;
        for (auto a : *s.au) annotated_count += annotated(a);
        CHECK(annotated_count == 3);
        CHECK(s.expr == emo("happiness"));
    }
    SUBCASE("disgust") {
        const auto s = co_annotate_emotion_to_aus(with_expr("disgust"), t);
        CHECK(active_targets(s) == std::map<int, double>{{9, 1.0}, {10, 1.0}, {17, 1.0}, {4, 0.31}, {24, 0.26}});
    }
    SUBCASE("neutral unchanged") {
        const auto in = with_expr("neutral");
        CHECK(co_annotate_emotion_to_aus(in, t) == in);
    }
    SUBCASE("idempotent, existing annotations win") {
        auto in = with_expr("happiness");
        in.au = std::vector<Annotation>(kNumAus, Annotation::Missing);
        (*in.au)[au(6)] = Annotation::Negative;
        const auto once = co_annotate_emotion_to_aus(in, t);
        CHECK((*once.au)[au(6)] == Annotation::Negative);
        CHECK((*once.au)[au(12)] == Annotation::Positive);
        CHECK(co_annotate_emotion_to_aus(once, t) == once);
        validate(once);
    }
}

TEST_CASE("co-annotate AUs to emotion") {
    const auto t = domain();
    CHECK(co_annotate_aus_to_emotion(with_aus({1, 2, 5, 25, 26}), t).expr == emo("surprise"));
    CHECK(co_annotate_aus_to_emotion(with_aus({12, 25, 6}), t).expr == emo("happiness"));
    CHECK_FALSE(co_annotate_aus_to_emotion(with_aus({4}), t).expr.has_value());
    // Fear (7 AUs) and surprise (5 AUs) both covered: the larger requirement wins.
    CHECK(co_annotate_aus_to_emotion(with_aus({1, 2, 4, 5, 20, 25, 26}), t).expr == emo("fear"));
}

TEST_CASE("co-annotation tie goes to the lowest class index") {
    // Two classes with equal requirement size, both fully covered.
    const RelatednessTable t({"a", "b"}, {"x", "y"}, TableKind::PrototypicalObservational,
                             {{RelatednessEntry{0, 1.0, true}}, {RelatednessEntry{1, 1.0, true}}});
    HeterogeneousSample s;
    s.id = "x";
    s.features = {0.0};
    s.au = std::vector<Annotation>{Annotation::Positive, Annotation::Positive};
    CHECK(co_annotate_aus_to_emotion(s, t).expr == 0u);
}

TEST_CASE("soft co-annotation") {
    const auto t = domain();
    SUBCASE("reweighted happiness indicator") {
        const auto l = soft_co_annotate(with_aus({12, 25}), t, true);
        CHECK(l.indicator_scores[emo("happiness")] == doctest::Approx(2.0 / 2.51).epsilon(1e-12));
    }
    SUBCASE("unweighted happiness indicator") {
        const auto l = soft_co_annotate(with_aus({12, 25}), t, false);
        CHECK(l.indicator_scores[emo("happiness")] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("all zero -> uniform") {
        const auto l = soft_co_annotate(with_aus({}), t, true);
        for (double q : l.q) CHECK(q == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    }
    SUBCASE("full happiness -> largest") {
        const auto l = soft_co_annotate(with_aus({12, 25, 6}), t, true);
        CHECK(l.indicator_scores[emo("happiness")] == doctest::Approx(1.0));
        for (std::size_t e = 0; e < kNumEmotions; ++e)
            if (e != emo("happiness")) CHECK(l.q[e] < l.q[emo("happiness")]);
        // q is the softmax of the indicators, computed here by hand.
        long double z = 0;
        for (double s : l.indicator_scores) z += std::exp(static_cast<long double>(s));
        for (std::size_t e = 0; e < kNumEmotions; ++e)
            CHECK(l.q[e] == doctest::Approx(static_cast<double>(std::exp((long double)l.indicator_scores[e]) / z))
                                 .epsilon(1e-12));
    }
    SUBCASE("unannotated AUs count as zero, q positive and normalized") {
        auto s = with_aus({12, 25, 6});
        (*s.au)[au(6)] = Annotation::Missing;
        const auto l = soft_co_annotate(s, t, true);
        CHECK(l.indicator_scores[emo("happiness")] == doctest::Approx(2.0 / 2.51));
        CHECK(l.indicator_scores[emo("neutral")] == 0.0);
        CHECK(pairwise_sum(l.q) == doctest::Approx(1.0).epsilon(1e-12));
        for (double q : l.q) CHECK(q > 0.0);
    }
}

TEST_CASE("clean_va_expr rules") {
    const std::vector<HeterogeneousSample> in{
        va_expr("neutral", 0.5, 0.5),      // removed, radius 0.707
        va_expr("happiness", 0.8, 0.1),    // kept
        va_expr("anger", -0.3, -0.2),      // removed, arousal not positive
        va_expr("anger", -0.3, 0.2),       // kept
        va_expr("sadness", 0.1, 0.0),      // removed
        va_expr("disgust", -0.1, 0.9),     // kept
        va_expr("fear", 0.0, 0.5),         // removed, valence not negative
        va_expr("happiness", 0.0, 0.5),    // removed
        va_expr("surprise", 0.9, -0.9),    // kept, no rule
        va_expr("neutral", 0.149, 0.0),    // kept
        va_expr("neutral", 0.151, 0.0),    // removed
        va_expr("neutral", 0.0, -0.149),   // kept
        va_expr("neutral", 0.15, 0.0),     // removed, strict bound
    };
    const auto r = clean_va_expr(in);
    std::vector<bool> kept;
    for (const auto& s : in)
        kept.push_back(std::find(r.kept.begin(), r.kept.end(), s) != r.kept.end());
    CHECK(kept == std::vector<bool>{false, true, false, true, false, true, false, false, true, true, false, true,
                                    false});
    CHECK(r.kept.size() + r.removed.size() == in.size());
    CHECK(clean_va_expr(r.kept).kept == r.kept);

    SUBCASE("samples without both labels pass") {
        auto only_va = va_expr("neutral", 0.9, 0.9);
        only_va.expr.reset();
        CHECK(clean_va_expr({only_va}).kept.size() == 1);
    }
}

TEST_CASE("subsample_frames") {
    SUBCASE("12 frames") {
        std::vector<HeterogeneousSample> v;
        for (long f = 0; f < 12; ++f) v.push_back(framed("a", f));
        const auto out = subsample_frames(v);
        REQUIRE(out.size() == 3);
        CHECK(out[0].sequence->frame == 0);
        CHECK(out[1].sequence->frame == 5);
        CHECK(out[2].sequence->frame == 10);
    }
    SUBCASE("single frame") { CHECK(subsample_frames({framed("a", 42)}).size() == 1); }
    SUBCASE("two videos, shuffled input, order preserved") {
        std::vector<HeterogeneousSample> v;
        for (long f = 5; f >= 0; --f) {
            v.push_back(framed("b", f * 10));
            v.push_back(framed("a", f));
        }
        const auto out = subsample_frames(v);
        REQUIRE(out.size() == 4);
        // Positions 0 and 5 of each sorted video, in input order.
        CHECK(out[0].id == "b_50");
        CHECK(out[1].id == "a_5");
        CHECK(out[2].id == "b_0");
        CHECK(out[3].id == "a_0");
    }
    SUBCASE("size is the sum of ceil(n_v / 5)") {
        std::vector<HeterogeneousSample> v;
        for (long f = 0; f < 11; ++f) v.push_back(framed("a", f));
        for (long f = 0; f < 5; ++f) v.push_back(framed("b", f));
        for (long f = 0; f < 7; ++f) v.push_back(framed("c", f));
        CHECK(subsample_frames(v).size() == 3 + 1 + 2);
    }
}

TEST_CASE("sample validation") {
    HeterogeneousSample s;
    s.id = "x";
    s.features = {0.0};
    CHECK_THROWS_AS(validate(s), DataError);
    s.va = VaPair{1.5, 0.0};
    CHECK_THROWS_AS(validate(s), DataError);
    s.va = VaPair{0.5, 0.0};
    CHECK_NOTHROW(validate(s));
    s.expr = 7;
    CHECK_THROWS_AS(validate(s), DataError);
    s.expr = 3;
    s.au_weights = std::vector<double>(kNumAus, 1.0);
    CHECK_THROWS_AS(validate(s), DataError);
}

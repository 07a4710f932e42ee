// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "hmtl/config.hpp"
#include "hmtl/dataset_io.hpp"
#include "hmtl/error.hpp"
#include "hmtl/labels.hpp"
#include "hmtl/synthdata.hpp"
#include "hmtl/zeroshot.hpp"

using namespace hmtl;

namespace {

RelatednessTable domain() { return load_table_file(data_dir() / "emotion_au_domain.json"); }
std::size_t emo(const char* name) { return *emotion_index(name); }
std::size_t au(int number) { return *au_index(number); }

}  // namespace

TEST_CASE("generator is deterministic and streams differ") {
    const auto spec = default_generator_spec(domain(), 3);
    const auto a = generate_full(spec, 50);
    CHECK(a == generate_full(spec, 50));
    CHECK(a != generate_full(spec, 50, 1));
    CHECK(a != generate_full(default_generator_spec(domain(), 4), 50));
    for (const auto& s : a) {
        CHECK(s.features.size() == 32);
        validate(s);
    }
}

TEST_CASE("generated labels respect the cleaning rules") {
    const auto full = generate_full(default_generator_spec(domain(), 1), 3000);
    CHECK(clean_va_expr(full).removed.empty());
}

TEST_CASE("prototypical AUs with weight 1 are always active") {
    for (const auto& s : generate_full(default_generator_spec(domain(), 2), 2000)) {
        if (*s.expr == emo("happiness")) {
            CHECK((*s.au)[au(12)] == Annotation::Positive);
            CHECK((*s.au)[au(25)] == Annotation::Positive);
        }
        if (*s.expr == emo("neutral"))
            for (auto a : *s.au) CHECK(a == Annotation::Negative);
    }
}

TEST_CASE("identity map without noise embeds the labels") {
    auto spec = default_generator_spec(domain(), 5);
    spec.feature_map = FeatureMap::Identity;
    spec.noise_scale = 0.0;
    spec.feature_dim = kLatentDim;
    for (const auto& s : generate_full(spec, 500)) {
        std::size_t arg = 0;
        for (std::size_t e = 1; e < kNumEmotions; ++e)
            if (s.features[e] > s.features[arg]) arg = e;
        CHECK(arg == *s.expr);
        for (std::size_t a = 0; a < kNumAus; ++a)
            CHECK(s.features[kNumEmotions + a] == ((*s.au)[a] == Annotation::Positive ? 1.0 : 0.0));
        CHECK(s.features[kNumEmotions + kNumAus] == s.va->valence);
    }
    spec.feature_dim = kLatentDim - 1;
    CHECK_THROWS_AS(generate_full(spec, 1), ConfigError);
}

TEST_CASE("partitions are disjoint and stripped") {
    const auto spec = default_generator_spec(domain(), 9);
    const auto sets = generate(spec, 1000, Partition{0.33, 0.532, 0.138});
    CHECK(sets.va_set.size() == 330);
    CHECK(sets.au_set.size() == 532);
    CHECK(sets.expr_set.size() == 138);
    for (const auto& s : sets.va_set) CHECK((s.va && !s.expr && !s.au));
    for (const auto& s : sets.au_set) CHECK((!s.va && !s.expr && s.au));
    for (const auto& s : sets.expr_set) CHECK((!s.va && s.expr && !s.au));
    CHECK_THROWS_AS(generate(spec, 10, Partition{0.5, 0.5, 0.5}), ConfigError);
}

TEST_CASE("empirical inference recovers generator weights") {
    const auto t = domain();
    const auto full = generate_full(default_generator_spec(t, 13), 10000);
    const auto inf = infer_empirical(co_annotated_corpus(full), 0.0);
    for (std::size_t c = 0; c < kNumEmotions; ++c)
        for (std::size_t a = 0; a < kNumAus; ++a)
            if (t.weight(c, a) >= 0.1) CHECK(std::abs(inf.table.weight(c, a) - t.weight(c, a)) <= 0.03);
}

TEST_CASE("compound generation") {
    const auto t = domain();
    const auto spec = default_generator_spec(t, 1);
    const auto classes = default_compound_classes(t, true);
    const auto c = generate_compound(spec, 200, classes);
    CHECK(c.size() == 200);
    for (const auto& s : c) {
        REQUIRE(s.compound.has_value());
        CHECK(*s.compound < classes.size());
    }
    CHECK_THROWS_AS(generate_compound(spec, 5, {}), ConfigError);
}

TEST_CASE("generator spec validation") {
    auto spec = default_generator_spec(domain(), 0);
    spec.class_prior = {1, 1, 1};
    CHECK_THROWS_AS(validate(spec), ConfigError);
    spec = default_generator_spec(domain(), 0);
    spec.noise_scale = -1;
    CHECK_THROWS_AS(validate(spec), ConfigError);
    spec = default_generator_spec(domain(), 0);
    spec.class_prior.assign(kNumEmotions, 0.0);
    CHECK_THROWS_AS(validate(spec), ConfigError);
}

TEST_CASE("dataset CSV round trip") {
    const auto spec = default_generator_spec(domain(), 21);
    auto sets = generate(spec, 60, Partition{});
    auto samples = sets.va_set;
    samples.insert(samples.end(), sets.au_set.begin(), sets.au_set.end());
    samples.insert(samples.end(), sets.expr_set.begin(), sets.expr_set.end());
    samples[0].sequence = SequenceKey{"vid", 4};
    (*sets.au_set[0].au)[3] = Annotation::Missing;
    samples.push_back(sets.au_set[0]);
    samples.back().id = "masked";
    std::stringstream ss;
    write_dataset(ss, samples);
    const auto back = read_dataset(ss);
    CHECK(back == samples);

    std::stringstream bad("id,features\nx,1;2\n");
    CHECK_THROWS_AS(read_dataset(bad), DataError);
    CHECK_THROWS_AS(read_dataset(std::filesystem::path("/nonexistent/set.csv")), DataError);
}

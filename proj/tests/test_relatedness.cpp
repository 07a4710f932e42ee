// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "hmtl/config.hpp"
#include "hmtl/error.hpp"
#include "hmtl/relatedness.hpp"

using namespace hmtl;
using nlohmann::json;

namespace {

RelatednessTable domain() { return load_table_file(data_dir() / "emotion_au_domain.json"); }

std::size_t emo(const char* name) { return *emotion_index(name); }
std::size_t au(int number) { return *au_index(number); }

// Reference cells from the cognitive-study table, transcribed independently of the data file.
struct Row {
    const char* emotion;
    std::vector<int> proto;
    std::map<int, double> obs;
};
const std::vector<Row> kReferenceCells{
    {"happiness", {12, 25}, {{6, 0.51}}},
    {"sadness", {4, 15}, {{1, 0.6}, {6, 0.5}, {11, 0.26}, {17, 0.67}}},
    {"fear", {1, 4, 20, 25}, {{2, 0.57}, {5, 0.63}, {26, 0.33}}},
    {"anger", {4, 7, 24}, {{10, 0.26}, {17, 0.52}, {23, 0.29}}},
    {"surprise", {1, 2, 25, 26}, {{5, 0.66}}},
    {"disgust", {9, 10, 17}, {{4, 0.31}, {24, 0.26}}},
};

}  // namespace

TEST_CASE("bundled domain table reproduces every cell") {
    const auto t = domain();
    CHECK(t.kind() == TableKind::PrototypicalObservational);
    CHECK(t.num_classes() == 7);
    CHECK(t.num_labels() == 17);
    for (const auto& row : kReferenceCells) {
        const auto c = emo(row.emotion);
        CHECK(t.lookup(c).size() == row.proto.size() + row.obs.size());
        for (int a : row.proto) {
            CHECK(t.weight(c, au(a)) == 1.0);
            const auto entries = t.lookup(c);
            const auto it = std::find_if(entries.begin(), entries.end(), [&](auto& e) { return e.label == au(a); });
            REQUIRE(it != entries.end());
            CHECK(it->prototypical);
        }
        for (auto [a, w] : row.obs) CHECK(t.weight(c, au(a)) == w);
    }
    CHECK(t.lookup(emo("neutral")).empty());
}

TEST_CASE("lookup examples") {
    const auto t = domain();
    SUBCASE("surprise") {
        const auto e = t.lookup(emo("surprise"));
        REQUIRE(e.size() == 5);
        std::map<int, std::pair<double, bool>> got;
        for (const auto& x : e) got[kCanonicalAus[x.label]] = {x.weight, x.prototypical};
        CHECK(got[1] == std::pair{1.0, true});
        CHECK(got[2] == std::pair{1.0, true});
        CHECK(got[25] == std::pair{1.0, true});
        CHECK(got[26] == std::pair{1.0, true});
        CHECK(got[5] == std::pair{0.66, false});
    }
    SUBCASE("fear includes AU2 observational") { CHECK(t.weight(emo("fear"), au(2)) == 0.57); }
    SUBCASE("invalid index") { CHECK_THROWS_AS(t.lookup(7), DataError); }
}

TEST_CASE("load_domain_table errors") {
    json base = json::parse(R"({"classes": ["neutral", "happiness"],
        "prototypical": {"happiness": ["AU12"]}, "observational": {"happiness": {"AU6": 0.51}}})");
    CHECK_NOTHROW(load_domain_table(base));

    json joy = base;
    joy["prototypical"]["joy"] = json::array({"AU12"});
    CHECK_THROWS_AS(load_domain_table(joy), Error);

    json bad_label = base;
    bad_label["observational"]["happiness"]["AU99"] = 0.3;
    CHECK_THROWS_AS(load_domain_table(bad_label), Error);

    json bad_weight = base;
    bad_weight["observational"]["happiness"]["AU6"] = 1.5;
    CHECK_THROWS_AS(load_domain_table(bad_weight), Error);
    bad_weight["observational"]["happiness"]["AU6"] = 0.0;
    CHECK_THROWS_AS(load_domain_table(bad_weight), Error);

    json dup = base;
    dup["classes"] = json::array({"neutral", "happiness", "happiness"});
    CHECK_THROWS_AS(load_domain_table(dup), Error);
}

TEST_CASE("serialize round trip and byte determinism") {
    const auto t = domain();
    const std::string s = serialize(t);
    CHECK(deserialize_table(s) == t);
    CHECK(serialize(deserialize_table(s)) == s);
    CHECK(serialize(domain()) == s);

    const auto aff = load_table_file(data_dir() / "emotion_au_affwild2.json");
    CHECK(aff.kind() == TableKind::Empirical);
    CHECK(deserialize_table(serialize(aff)) == aff);
    CHECK(aff.weight(emo("happiness"), au(7)) == 0.83);
    CHECK(aff.weight(emo("disgust"), au(10)) == 0.85);
    CHECK(aff.weight(emo("sadness"), au(17)) == 0.1);
}

namespace {

CoAnnotatedCorpus corpus_of(std::vector<std::pair<std::size_t, std::vector<Annotation>>> rows) {
    CoAnnotatedCorpus c{emotion_names(), au_labels(), {}};
    for (auto& [k, l] : rows) c.samples.push_back({k, l});
    return c;
}

std::vector<Annotation> aus_on(std::initializer_list<int> on) {
    std::vector<Annotation> v(kNumAus, Annotation::Negative);
    for (int a : on) v[au(a)] = Annotation::Positive;
    return v;
}

}  // namespace

TEST_CASE("infer_empirical counting") {
    std::vector<std::pair<std::size_t, std::vector<Annotation>>> rows;
    for (int i = 0; i < 10; ++i) rows.push_back({emo("happiness"), i < 8 ? aus_on({12}) : aus_on({})});
    const auto inf = infer_empirical(corpus_of(rows));
    CHECK(inf.table.kind() == TableKind::Empirical);
    CHECK(inf.table.weight(emo("happiness"), au(12)) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(inf.table.weight(emo("happiness"), au(25)) == 0.0);
    CHECK(inf.table.lookup(emo("happiness")).size() == 1);
}

TEST_CASE("infer_empirical threshold, masks and warnings") {
    std::vector<std::pair<std::size_t, std::vector<Annotation>>> rows;
    for (int i = 0; i < 20; ++i) {
        auto l = aus_on(i < 1 ? std::initializer_list<int>{4, 15} : std::initializer_list<int>{15});
        if (i >= 10) l[au(1)] = Annotation::Missing;
        l[au(1)] = i < 10 ? (i < 3 ? Annotation::Positive : Annotation::Negative) : Annotation::Missing;
        rows.push_back({emo("sadness"), l});
    }
    std::vector<Annotation> none(kNumAus, Annotation::Missing);
    rows.push_back({emo("anger"), none});
    const auto inf = infer_empirical(corpus_of(rows), 0.1);
    // AU15 always active -> exactly 1; AU4 at 1/20 < 0.1 dropped; AU1 counts only annotated rows.
    CHECK(inf.table.weight(emo("sadness"), au(15)) == 1.0);
    CHECK(inf.table.weight(emo("sadness"), au(4)) == 0.0);
    CHECK(inf.table.weight(emo("sadness"), au(1)) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(inf.table.lookup(emo("anger")).empty());
    CHECK_FALSE(inf.warnings.empty());
}

TEST_CASE("infer_empirical is permutation invariant and bounded") {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution coin(0.4);
    std::uniform_int_distribution<std::size_t> cls(0, kNumEmotions - 1);
    std::vector<std::pair<std::size_t, std::vector<Annotation>>> rows;
    for (int i = 0; i < 500; ++i) {
        std::vector<Annotation> l(kNumAus);
        for (auto& a : l) a = coin(rng) ? Annotation::Positive : Annotation::Negative;
        rows.push_back({cls(rng), l});
    }
    const auto a = infer_empirical(corpus_of(rows), 0.2);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto b = infer_empirical(corpus_of(rows), 0.2);
    CHECK(serialize(a.table) == serialize(b.table));
    for (std::size_t c = 0; c < kNumEmotions; ++c)
        for (const auto& e : a.table.lookup(c)) {
            CHECK(e.weight >= 0.2);
            CHECK(e.weight <= 1.0);
        }
}

TEST_CASE("table invariants are enforced") {
    using E = RelatednessEntry;
    CHECK_THROWS_AS(RelatednessTable({"a"}, {"x"}, TableKind::PrototypicalObservational, {{E{0, 0.5, true}}}), Error);
    CHECK_THROWS_AS(RelatednessTable({"a"}, {"x"}, TableKind::Empirical, {{E{0, 1.2, false}}}), Error);
    CHECK_THROWS_AS(RelatednessTable({"a"}, {"x"}, TableKind::Empirical, {{E{3, 0.5, false}}}), Error);
    CHECK_THROWS_AS(RelatednessTable({"a"}, {"x"}, TableKind::Empirical, {{E{0, 0.5, false}, E{0, 0.6, false}}}),
                    Error);
}

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "hmtl/error.hpp"
#include "hmtl/metrics.hpp"

using namespace hmtl;
using doctest::Approx;

namespace {

constexpr auto P = Annotation::Positive;
constexpr auto N = Annotation::Negative;
constexpr auto M = Annotation::Missing;

}  // namespace

TEST_CASE("classification metrics") {
    SUBCASE("diagonal") {
        ConfusionMatrix cm(3);
        for (std::size_t c = 0; c < 3; ++c) cm.add(c, c, 4);
        const auto m = classification_metrics(cm);
        CHECK(m.accuracy == 1.0);
        CHECK(m.uar == 1.0);
        CHECK(m.mean_diag == 1.0);
        for (double f : m.per_class_f1) CHECK(f == 1.0);
    }
    SUBCASE("two classes") {
        const auto m = classification_metrics(ConfusionMatrix(2, {8, 2, 4, 6}));
        CHECK(m.accuracy == Approx(0.7));
        CHECK(m.per_class_recall[0] == Approx(0.8));
        CHECK(m.per_class_recall[1] == Approx(0.6));
        CHECK(m.uar == Approx(0.7));
        const double p0 = 8.0 / 12.0, r0 = 0.8;
        CHECK(m.per_class_f1[0] == Approx(2 * p0 * r0 / (p0 + r0)).epsilon(1e-12));
        CHECK(m.per_class_f1[0] == Approx(0.7273).epsilon(1e-4));
        const double p1 = 6.0 / 8.0, r1 = 0.6;
        CHECK(m.macro_f1 == Approx((m.per_class_f1[0] + 2 * p1 * r1 / (p1 + r1)) / 2).epsilon(1e-12));
    }
    SUBCASE("class absent from truth and predictions") {
        const auto m = classification_metrics(ConfusionMatrix(3, {5, 0, 0, 1, 4, 0, 0, 0, 0}));
        CHECK(m.per_class_f1[2] == 0.0);
        CHECK(std::isnan(m.per_class_recall[2]));
        CHECK(m.uar == Approx((1.0 + 0.8) / 2));
    }
    SUBCASE("errors and csv") {
        CHECK_THROWS_AS(classification_metrics(ConfusionMatrix(2)), DataError);
        CHECK_THROWS_AS(ConfusionMatrix(2, {1, 2, 3}), DataError);
        ConfusionMatrix cm(2);
        CHECK_THROWS_AS(cm.add(2, 0), DataError);
        cm.add(0, 1, 3);
        cm.add(1, 1);
        CHECK(cm.to_csv({"a", "b"}) == "truth\\pred,a,b\na,0,3\nb,0,1\n");
    }
}

TEST_CASE("au metrics") {
    SUBCASE("perfect") {
        const std::vector<std::vector<Annotation>> t{{P, N}, {N, P}, {P, P}};
        CHECK(au_metrics(t, t).afa == 1.0);
    }
    SUBCASE("all negative") {
        const std::vector<std::vector<Annotation>> t{{N}, {N}, {N}};
        const auto m = au_metrics(t, t);
        CHECK(m.mean_accuracy == 1.0);
        CHECK(m.mean_f1 == 0.0);
        CHECK(m.afa == 0.5);
    }
    SUBCASE("hand-built: F1 0.6 and 0.4") {
        // AU0: tp 3, fp 2, fn 2, tn 3 -> F1 0.6, accuracy 0.6.
        // AU1: tp 2, fp 3, fn 3, tn 2 -> F1 0.4, accuracy 0.4.
        std::vector<std::vector<Annotation>> pred, truth;
        auto push = [&](Annotation t0, Annotation p0, Annotation t1, Annotation p1, int times) {
            for (int i = 0; i < times; ++i) {
                truth.push_back({t0, t1});
                pred.push_back({p0, p1});
            }
        };
        push(P, P, P, P, 2);
        push(P, P, N, P, 1);
        push(N, P, N, P, 2);
        push(P, N, P, N, 2);
        push(N, N, P, N, 1);
        push(N, N, N, N, 2);
        const auto m = au_metrics(pred, truth);
        CHECK(m.per_au_f1[0] == Approx(0.6));
        CHECK(m.per_au_accuracy[0] == Approx(0.6));
        CHECK(m.per_au_f1[1] == Approx(0.4));
        CHECK(m.per_au_accuracy[1] == Approx(0.4));
        CHECK(m.afa == Approx((0.5 + 0.5) / 2));
    }
    SUBCASE("missing entries are skipped, empty columns excluded") {
        const std::vector<std::vector<Annotation>> truth{{P, M}, {N, M}};
        const std::vector<std::vector<Annotation>> pred{{P, P}, {N, N}};
        const auto m = au_metrics(pred, truth);
        CHECK(std::isnan(m.per_au_f1[1]));
        CHECK(m.afa == 1.0);
        CHECK(m.warnings.size() == 1);
    }
    CHECK_THROWS_AS(au_metrics({{P}}, {}), DataError);
    CHECK(threshold_probabilities(std::vector<double>{0.2, 0.5, 0.9}) == std::vector<Annotation>{N, P, P});
}

TEST_CASE("va metrics") {
    const std::vector<VaPair> t{{0.1, 0.2}, {-0.3, 0.5}, {0.7, -0.1}};
    const auto m = va_metrics(t, t);
    CHECK(m.ccc_v == Approx(1.0).epsilon(1e-12));
    CHECK(m.ccc_a == Approx(1.0).epsilon(1e-12));
    CHECK(m.mean_ccc == Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(va_metrics(std::vector<VaPair>{{0, 0}}, std::vector<VaPair>{{0, 0}}), DataError);
}

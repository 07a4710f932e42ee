// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>

#include "hmtl/error.hpp"
#include "hmtl/scheduler.hpp"

using namespace hmtl;

namespace {

// Every (set, index) pair produced across an epoch, sorted.
std::vector<std::pair<std::size_t, std::size_t>> epoch_union(const EpochPlan& plan) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t it = 0; it < plan.iteration_count; ++it)
        for (const auto& js : next_joint_batch(plan, it)) all.emplace_back(js.set, js.index);
    std::sort(all.begin(), all.end());
    return all;
}

std::vector<std::pair<std::size_t, std::size_t>> expected_union(const std::vector<std::size_t>& sizes) {
    std::vector<std::pair<std::size_t, std::size_t>> all;
    for (std::size_t s = 0; s < sizes.size(); ++s)
        for (std::size_t i = 0; i < sizes[s]; ++i) all.emplace_back(s, i);
    return all;
}

std::size_t count_set(const std::vector<JointSample>& batch, std::size_t set) {
    return static_cast<std::size_t>(std::count_if(batch.begin(), batch.end(), [&](auto& j) { return j.set == set; }));
}

}  // namespace

TEST_CASE("plan_epoch examples") {
    SUBCASE("ratio 1000:620:260") {
        const auto p = plan_epoch({1000, 620, 260}, 200, 1);
        CHECK(p.iteration_count == 5);
        CHECK(p.batch_sizes == std::vector<std::size_t>{200, 124, 52});
        const auto b = next_joint_batch(p, 0);
        CHECK(b.size() == 376);
        CHECK(count_set(b, 0) == 200);
        CHECK(count_set(b, 1) == 124);
        CHECK(count_set(b, 2) == 52);
    }
    SUBCASE("equal sets") {
        const auto p = plan_epoch({10, 10, 10}, 10, 1);
        CHECK(p.iteration_count == 1);
        CHECK(p.batch_sizes == std::vector<std::size_t>{10, 10, 10});
    }
    SUBCASE("7, 3, 2 with max_batch 3") {
        const auto p = plan_epoch({7, 3, 2}, 3, 1);
        CHECK(p.iteration_count == 3);
        CHECK(p.batch_sizes == std::vector<std::size_t>{3, 1, 1});
        std::size_t au_total = 0;
        for (std::size_t it = 0; it < 3; ++it) {
            const auto b = next_joint_batch(p, it);
            CHECK(count_set(b, 0) <= 3);
            CHECK(count_set(b, 1) == 1);
            au_total += count_set(b, 2);
        }
        CHECK(au_total == 2);
        CHECK(epoch_union(p) == expected_union({7, 3, 2}));
    }
    SUBCASE("single set") {
        const auto p = plan_epoch({5}, 2, 3);
        CHECK(p.iteration_count == 3);
        const auto b = next_joint_batch(p, 1);
        const auto [lo, hi] = p.slice(0, 1);
        REQUIRE(b.size() == hi - lo);
        for (std::size_t k = 0; k < b.size(); ++k) CHECK(b[k].index == p.order[0][lo + k]);
    }
}

TEST_CASE("plan_epoch errors") {
    CHECK_THROWS_AS(plan_epoch({}, 10, 0), ConfigError);
    CHECK_THROWS_AS(plan_epoch({10}, 0, 0), ConfigError);
    CHECK_THROWS_AS(plan_epoch({10, 0}, 5, 0), DataError);
    // A VA set of 3 over 2 iterations would leave a batch of 1.
    CHECK_THROWS_AS(plan_epoch({3, 100}, 50, 0, {2, 0}), ConfigError);
    CHECK_NOTHROW(plan_epoch({4, 100}, 50, 0, {2, 0}));
    const auto p = plan_epoch({4}, 2, 0);
    CHECK_THROWS_AS(next_joint_batch(p, 2), ConfigError);
}

TEST_CASE("randomized coverage") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> nsets(1, 4), size(1, 300), batch(1, 80);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> sizes(nsets(rng));
        for (auto& n : sizes) n = size(rng);
        const std::size_t mb = batch(rng);
        const auto p = plan_epoch(sizes, mb, rng());
        CHECK(p.iteration_count == (*std::max_element(sizes.begin(), sizes.end()) + mb - 1) / mb);
        CHECK(epoch_union(p) == expected_union(sizes));
        for (std::size_t it = 0; it < p.iteration_count; ++it)
            for (std::size_t s = 0; s < sizes.size(); ++s) {
                const auto [lo, hi] = p.slice(s, it);
                CHECK(hi - lo <= p.batch_sizes[s]);
                CHECK(hi - lo <= mb);
            }
    }
}

TEST_CASE("plans are reproducible per epoch seed") {
    const auto a = plan_epoch({50, 30}, 16, epoch_seed(7, 3));
    const auto b = plan_epoch({50, 30}, 16, epoch_seed(7, 3));
    CHECK(a.order == b.order);
    CHECK(plan_epoch({50, 30}, 16, epoch_seed(7, 4)).order != a.order);
    CHECK(epoch_seed(7, 3) != epoch_seed(8, 3));
    const auto s = plan_summary(a, {"va", "expr"});
    CHECK(s["iterations"] == 4);
    CHECK(s["sets"][1]["name"] == "expr");
    CHECK(s["sets"][1]["batch_size"] == 8);
}

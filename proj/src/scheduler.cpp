// SPDX-License-Identifier: Apache-2.0
#include "hmtl/scheduler.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <random>

#include "hmtl/error.hpp"

namespace hmtl {

namespace {
std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }
}  // namespace

std::pair<std::size_t, std::size_t> EpochPlan::slice(std::size_t set, std::size_t iteration) const {
    const std::size_t n = set_sizes.at(set);
    return {iteration * n / iteration_count, (iteration + 1) * n / iteration_count};
}

std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

EpochPlan plan_epoch(const std::vector<std::size_t>& set_sizes, std::size_t max_batch, std::uint64_t seed,
                     const std::vector<std::size_t>& min_slice) {
    if (set_sizes.empty()) throw ConfigError("plan_epoch: no sets");
    if (max_batch == 0) throw ConfigError("plan_epoch: max_batch must be at least 1");
    for (std::size_t n : set_sizes)
        if (n == 0) throw DataError("plan_epoch: empty set");

    EpochPlan plan;
    plan.set_sizes = set_sizes;
    plan.seed = seed;
    plan.iteration_count = ceil_div(*std::max_element(set_sizes.begin(), set_sizes.end()), max_batch);
    std::mt19937_64 rng(seed);
    for (std::size_t s = 0; s < set_sizes.size(); ++s) {
        plan.batch_sizes.push_back(ceil_div(set_sizes[s], plan.iteration_count));
        std::vector<std::size_t> idx(set_sizes[s]);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        plan.order.push_back(std::move(idx));
    }
    for (std::size_t s = 0; s < min_slice.size() && s < set_sizes.size(); ++s) {
        // Balanced slices: the smallest is floor(n / iterations).
        const std::size_t smallest = set_sizes[s] / plan.iteration_count;
        if (smallest < min_slice[s])
            throw ConfigError("plan_epoch: set " + std::to_string(s) + " of " + std::to_string(set_sizes[s]) +
                              " samples over " + std::to_string(plan.iteration_count) +
                              " iterations yields batches smaller than " + std::to_string(min_slice[s]));
    }
    return plan;
}

std::vector<JointSample> next_joint_batch(const EpochPlan& plan, std::size_t iteration) {
    if (iteration >= plan.iteration_count)
        throw ConfigError("next_joint_batch: iteration " + std::to_string(iteration) + " out of range");
    std::vector<JointSample> out;
    for (std::size_t s = 0; s < plan.set_sizes.size(); ++s) {
        const auto [begin, end] = plan.slice(s, iteration);
        for (std::size_t k = begin; k < end; ++k) out.push_back({s, plan.order[s][k]});
    }
    return out;
}

std::vector<HeterogeneousSample> gather(const std::vector<JointSample>& batch,
                                        const std::vector<const std::vector<HeterogeneousSample>*>& sets) {
    std::vector<HeterogeneousSample> out;
    out.reserve(batch.size());
    for (const auto& js : batch) out.push_back(sets.at(js.set)->at(js.index));
    return out;
}

nlohmann::json plan_summary(const EpochPlan& plan, const std::vector<std::string>& set_names) {
    nlohmann::json sets = nlohmann::json::array();
    for (std::size_t s = 0; s < plan.set_sizes.size(); ++s)
        sets.push_back({{"name", s < set_names.size() ? set_names[s] : std::to_string(s)},
                        {"size", plan.set_sizes[s]},
                        {"batch_size", plan.batch_sizes[s]}});
    return {{"iterations", plan.iteration_count}, {"seed", plan.seed}, {"sets", sets}};
}

}  // namespace hmtl

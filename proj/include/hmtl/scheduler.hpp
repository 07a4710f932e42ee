// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hmtl/labels.hpp"

namespace hmtl {

/// Joint-batch schedule over several differently-sized sets: every
/// iteration draws one slice from each set, and one epoch visits every
/// sample of every set exactly once.
struct EpochPlan {
    std::vector<std::size_t> set_sizes;
    std::vector<std::size_t> batch_sizes;  // ceil(n_s / iteration_count)
    std::size_t iteration_count = 0;
    std::vector<std::vector<std::size_t>> order;  // per-set shuffled sample indices
    std::uint64_t seed = 0;

    /// [begin, end) of set s's slice for one iteration. Slices are balanced:
    /// sizes differ by at most one and never exceed batch_sizes[s].
    std::pair<std::size_t, std::size_t> slice(std::size_t set, std::size_t iteration) const;
};

/// iteration_count = ceil(max n_s / max_batch); batch_s = ceil(n_s / iteration_count).
/// `min_slice` (per set, optional) rejects plans where some iteration would
/// hand that set fewer samples, e.g. 2 for the VA set feeding the CCC loss.
EpochPlan plan_epoch(const std::vector<std::size_t>& set_sizes, std::size_t max_batch, std::uint64_t seed,
                     const std::vector<std::size_t>& min_slice = {});

/// Seed for epoch `epoch` of a run seeded with `run_seed`.
std::uint64_t epoch_seed(std::uint64_t run_seed, std::size_t epoch);

struct JointSample {
    std::size_t set = 0;
    std::size_t index = 0;  // index within its set
};

/// The iteration's slice from every set, concatenated in set order.
std::vector<JointSample> next_joint_batch(const EpochPlan& plan, std::size_t iteration);

/// Materializes a joint batch from the backing sets.
std::vector<HeterogeneousSample> gather(const std::vector<JointSample>& batch,
                                        const std::vector<const std::vector<HeterogeneousSample>*>& sets);

nlohmann::json plan_summary(const EpochPlan& plan, const std::vector<std::string>& set_names);

}  // namespace hmtl

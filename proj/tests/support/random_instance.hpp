#pragma once

#include "hetplan/instance.hpp"

#include <cstdint>

namespace hetplan::testing {

struct RandomInstanceLimits {
   int max_nodes = 6;
   int max_workers = 8;
   int max_variants = 3;
};

/// Small seeded instance: 1-2 sources, one sink, 2-4 ml/relational nodes,
/// 2-3 tiers, monotone accuracy profiles over a coarse input grid.
Instance random_instance(std::uint64_t seed, const RandomInstanceLimits& limits = {});

}  // namespace hetplan::testing

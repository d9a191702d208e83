#pragma once

#include "hetplan/worker_assignment.hpp"

#include <optional>

namespace hetplan {

/// Most accurate variant for every ml node.
Selection most_accurate_selection(const LogicalPlan& plan, const ProfileSet& profiles);

/// Best Fit: each node, in canonical order, takes the cheapest free workers on
/// the highest tier its parents use (sources count as tier 1), moving one tier
/// up only when that tier has nothing left. nullopt when the workers run out
/// or the uplink cap in `opts` is exceeded.
std::optional<PhysicalPlan> best_fit(const LogicalPlan& plan, const InfrastructureSpec& infra,
                                     const ProfileSet& profiles, double input_throughput,
                                     const CostOptions& opts = {});

/// First Fit: each node takes the globally cheapest free workers by compute
/// cost, wherever they are. Downward edges are priced at the mirrored upward
/// price and listed in a2_violations.
std::optional<PhysicalPlan> first_fit(const LogicalPlan& plan, const InfrastructureSpec& infra,
                                      const ProfileSet& profiles, double input_throughput,
                                      const CostOptions& opts = {});

}  // namespace hetplan

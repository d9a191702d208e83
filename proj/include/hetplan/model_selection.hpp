#pragma once

#include "hetplan/core_model.hpp"
#include "hetplan/profiler.hpp"

#include <map>
#include <optional>
#include <vector>

namespace hetplan {

/// What a selection candidate is ranked by before workers are known.
enum class ProxyMetric { LatencyMs, ParamsMillions };

struct SelectionOptions {
   int beam_width = 8;
   int top_k = 3;
   ProxyMetric proxy = ProxyMetric::LatencyMs;
};

/// A partial model selection plus the accuracy the not-yet-selected upstream
/// nodes must still deliver.
///
/// A node can meet its requirement through several incomparable rows of its
/// profile, so the requirements are kept as a Pareto-minimal set of
/// alternatives. The candidate stays viable while any alternative holds.
struct SelectionCandidate {
   Selection partial_selection;
   std::vector<std::map<std::string, double>> pending_requirements;
   double proxy_cost = 0.0;
};

struct RankedSelection {
   Selection selection;
   double proxy_cost = 0.0;
};

/// Sum of the proxy metric over ml nodes in `selection`, accumulated in node-id order.
double selection_proxy_cost(const LogicalPlan& plan, const ProfileSet& profiles, const Selection& selection,
                            ProxyMetric metric = ProxyMetric::LatencyMs);

/// Beam search in reverse topological order. Returns at most `top_k` complete
/// selections reaching `target_accuracy`, cheapest proxy first (ties by
/// selection key). Empty when the target is unreachable.
std::vector<RankedSelection> select_models(const LogicalPlan& plan, const ProfileSet& profiles,
                                           double target_accuracy, const SelectionOptions& opts = {});

/// Forward pass: sources deliver 1.0, identity nodes pass on the minimum of
/// their inputs, ml nodes look up their profile. nullopt if any lookup fails.
std::optional<double> end_to_end_accuracy(const LogicalPlan& plan, const Selection& selection,
                                          const ProfileSet& profiles);

/// Variant with the highest stand-alone accuracy (all inputs at 1.0), ties
/// broken by lower cost proxy then id.
std::string most_accurate_variant(const LogicalPlan& plan, const ProfileSet& profiles, const std::string& node);

}  // namespace hetplan

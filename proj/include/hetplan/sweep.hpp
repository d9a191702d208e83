#pragma once

#include "hetplan/instance.hpp"
#include "hetplan/oracle.hpp"
#include "hetplan/worker_assignment.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hetplan {

enum class Strategy { Jb, Bf, Ff, Lb };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct SweepSpec {
   /// input_throughput, target_accuracy, traffic_price_scale, bandwidth_cap or tier_split.
   std::string axis;
   std::vector<std::string> values;
   std::vector<Strategy> strategies;
};

/// One cell's instance after applying an axis value.
struct SweepCell {
   Instance instance;
   /// Bytes/s, set by the bandwidth_cap axis (given in Mbps).
   std::optional<double> edge_uplink_cap;
};

SweepCell apply_axis(const Instance& base, const std::string& axis, const std::string& value);

/// Re-ranks workers by hourly price and refills tiers from the lowest one:
/// "5:4" puts the 5 cheapest on tier 1 and the rest on tier 2.
InfrastructureSpec split_tiers(const InfrastructureSpec& infra, const std::string& ratio);

struct SweepRow {
   std::string axis;
   std::string value;
   Strategy strategy = Strategy::Jb;
   bool feasible = false;
   CostBreakdown cost;
   double qo_time_ms = 0;
};

struct SweepOptions {
   OptimizeOptions optimize;
   OracleConfig oracle;
   int jobs = 1;
};

/// One row per value x strategy, in that order regardless of `jobs`.
std::vector<SweepRow> run_sweep(const Instance& base, const SweepSpec& grid, const SweepOptions& opts = {});

/// axis,value,strategy,feasible,cost_compute,cost_network,cost_total,qo_time_ms
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Runs one strategy on an instance. nullopt when infeasible.
std::optional<PhysicalPlan> run_strategy(const Instance& instance, Strategy s, const SweepOptions& opts,
                                         std::optional<double> edge_uplink_cap = std::nullopt);

}  // namespace hetplan

#pragma once

#include "hetplan/core_model.hpp"
#include "hetplan/instance.hpp"
#include "hetplan/model_selection.hpp"
#include "hetplan/profiler.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace hetplan {

/// How an assigned worker's hourly price is charged.
enum class ChargeMode { FullHour, Utilization };

std::string to_string(ChargeMode m);
ChargeMode charge_mode_from_string(const std::string& s);

/// Pricing and placement rules shared by the optimizer, the baselines and the simulator.
struct CostOptions {
   ChargeMode charge = ChargeMode::FullHour;
   bool enforce_a2 = true;
   Percentile percentile = Percentile::P75;
   /// Per-location outbound cross-tier bandwidth of edge devices, bytes/s.
   std::optional<double> edge_uplink_cap;
};

/// Everything needed to price placements for one model selection.
///
/// Capacities are TCoeff-scaled profile throughputs; a node's input is split
/// across its workers in proportion to capacity, and so is every parent
/// worker's output.
class CostModel {
public:
   CostModel(const LogicalPlan& plan, const InfrastructureSpec& infra, const ProfileSet& profiles,
             Selection selection, std::map<std::string, double> rates, CostOptions opts);

   const LogicalPlan& plan() const { return plan_; }
   const InfrastructureSpec& infra() const { return infra_; }
   const Selection& selection() const { return selection_; }
   const std::map<std::string, double>& rates() const { return rates_; }
   const CostOptions& options() const { return opts_; }
   double rate(const std::string& node) const { return rates_.at(node); }
   const std::string& variant(const std::string& node) const { return selection_.at(node); }

   /// Profiled items/s of the node's variant on `worker` (no TCoeff).
   double throughput(const std::string& node, const std::string& worker) const;
   /// throughput x TCoeff.
   double capacity(const std::string& node, const std::string& worker) const;
   double total_capacity(const std::string& node, const std::set<std::string>& workers) const;
   /// Fraction of the node's input served by `worker` within `workers`.
   double share(const std::string& node, const std::string& worker, const std::set<std::string>& workers) const;
   /// Items/s leaving node `u` along each outgoing edge.
   double output_flow(const std::string& u) const;

   /// Traffic price between two tiers under the configured A2 policy.
   TrafficPrice price(int from_tier, int to_tier) const;

   /// Per-item cost of running `node` on `worker` given its parents' placement.
   std::optional<double> unit_cost(const std::string& node, const std::string& worker, const Assignment& a) const;

   /// Hourly compute charge of `node` on its workers.
   double node_compute(const std::string& node, const std::set<std::string>& workers) const;
   /// Hourly traffic charge on edge (u, v). Throws when a worker pair is forbidden.
   double edge_network(const std::string& u, const std::string& v, const Assignment& a) const;
   /// Compute of `node` plus network on its incoming edges.
   double node_cost(const std::string& node, const Assignment& a) const;
   CostBreakdown total(const Assignment& a) const;

   /// Edge devices whose outbound cross-tier traffic exceeds the uplink cap.
   std::vector<std::string> uplink_violations(const Assignment& a) const;
   /// Edges "u->v" carrying traffic from a higher tier to a lower one.
   std::vector<std::string> downward_edges(const Assignment& a) const;

private:
   /// Tier-tagged sender shares for node `u`: sources act as one tier-1 sender.
   std::vector<std::pair<int, double>> senders(const std::string& u, const Assignment& a) const;

   const LogicalPlan& plan_;
   const InfrastructureSpec& infra_;
   const ProfileSet& profiles_;
   Selection selection_;
   std::map<std::string, double> rates_;
   CostOptions opts_;
};

/// Per-item cost: compute plus parent traffic weighted by each
/// parent worker's served share. nullopt when `w` cannot run the variant or a
/// parent sits on a higher tier while A2 is enforced.
std::optional<double> assignment_unit_cost(const CostModel& model, const std::string& node, const std::string& worker,
                                           const Assignment& parent_assignments);

/// Hourly compute plus network of a complete assignment.
CostBreakdown plan_total_cost(const CostModel& model, const Assignment& assignment);

/// Capacity, disjointness, A2 and selection checks on a physical plan.
std::vector<std::string> check_plan(const CostModel& model, const Assignment& assignment);

/// What the greedy step ranks workers by. Profiled uses the per-item cost at
/// the worker's full profiled throughput. Residual charges the hourly price
/// against the part of the remaining demand the worker would actually serve.
enum class UnitCostBasis { Profiled, Residual };

/// Worker pools the greedy step draws from. From: tiers >= i for each tier i.
/// UpTo: tiers <= i. Both: the union of the two families.
enum class PoolScheme { From, UpTo, Both };

struct AssignOptions {
   int beam_width = 6;
   int orderings = 4;
   std::uint64_t seed = 1;
   UnitCostBasis basis = UnitCostBasis::Residual;
   /// Also offer each greedy pick with redundant workers removed.
   bool trim = true;
   PoolScheme pools = PoolScheme::Both;
   CostOptions cost;
};

/// Greedy, beam-searched assignment over expanding tier pools, repeated over
/// several topological orders. nullopt when no order yields a complete plan.
std::optional<PhysicalPlan> assign_workers(const LogicalPlan& plan, const Selection& selection,
                                           const InfrastructureSpec& infra, const ProfileSet& profiles,
                                           double input_throughput, const AssignOptions& opts = {});

struct OptimizeOptions {
   SelectionOptions selection;
   AssignOptions assign;
   /// Worker threads for searching the candidate selections.
   int jobs = 1;
};

enum class PlanStatus { Ok, AccuracyUnreachable, ThroughputUnreachable };

struct OptimizeResult {
   PlanStatus status = PlanStatus::Ok;
   std::optional<PhysicalPlan> plan;
   std::vector<RankedSelection> candidates;
   std::chrono::duration<double, std::milli> elapsed{0};
};

/// Model selection followed by worker assignment for each candidate; the
/// cheapest complete plan wins, ties broken by selection key.
OptimizeResult optimize(const Instance& instance, const OptimizeOptions& opts = {});

/// Builds a CostModel for `selection` under the instance's objectives.
CostModel make_cost_model(const Instance& instance, const Selection& selection, CostOptions opts);

}  // namespace hetplan

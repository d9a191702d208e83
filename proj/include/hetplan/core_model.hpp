#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hetplan {

/// Raised for malformed input files and broken API preconditions.
class InputError : public std::runtime_error {
public:
   using std::runtime_error::runtime_error;
};

enum class NodeKind { Ml, Relational, Source, Sink };

std::string to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& s);

/// Variant id carried by relational, source and sink nodes.
inline const std::string kIdentityVariant = "identity";

/// Relative slack applied when comparing provisioned capacity against demand.
inline constexpr double kCapacitySlack = 1e-9;

struct OperatorNode {
   std::string id;
   NodeKind kind = NodeKind::Ml;
   /// Outputs emitted per processed input, keyed by variant id.
   std::map<std::string, double> output_ratio;

   bool bears_workers() const { return kind == NodeKind::Ml || kind == NodeKind::Relational; }
};

struct Edge {
   std::string from;
   std::string to;
};

/// Workflow DAG with per-node model choices and edge payload sizes.
struct LogicalPlan {
   std::vector<OperatorNode> nodes;
   std::vector<Edge> edges;
   std::map<std::string, std::vector<std::string>> choices;
   /// Bytes per item on edge (u, v).
   std::map<std::pair<std::string, std::string>, double> edge_unit_size;
   /// Items per second emitted by each source node.
   std::map<std::string, double> source_throughput;

   const OperatorNode* find(const std::string& id) const;
   const OperatorNode& node(const std::string& id) const;
   /// Parents of `id`, in the order their edges are listed.
   std::vector<std::string> parents(const std::string& id) const;
   std::vector<std::string> children(const std::string& id) const;
   double unit_size(const std::string& from, const std::string& to) const;
   double output_ratio(const std::string& id, const std::string& variant) const;
   std::optional<std::string> sink() const;
   std::vector<std::string> sources() const;
};

struct Tier {
   std::string name;
   /// Number of locations of this tier under each location of the tier above.
   int locations_per_parent = 1;
};

struct WorkerType {
   std::string id;
   double hourly_price = 0.0;
};

struct Worker {
   std::string id;
   std::string type;
   int tier = 1;
   int location = 0;
};

/// Price of moving one byte between two tiers. Downward pairs are forbidden
/// while one-way flow is enforced.
struct TrafficPrice {
   bool forbidden = false;
   double usd_per_gb = 0.0;

   double per_byte() const { return usd_per_gb / 1e9; }
   static TrafficPrice forbidden_pair() { return TrafficPrice{true, 0.0}; }
   static TrafficPrice finite_per_gb(double p) { return TrafficPrice{false, p}; }
};

struct InfrastructureSpec {
   /// tiers[0] is tier index 1 (edge); tiers.back() is the root.
   std::vector<Tier> tiers;
   std::vector<WorkerType> worker_types;
   std::vector<Worker> workers;
   std::map<std::pair<int, int>, TrafficPrice> traffic_price;

   int tier_count() const { return static_cast<int>(tiers.size()); }
   const Worker* find_worker(const std::string& id) const;
   const Worker& worker(const std::string& id) const;
   const WorkerType* find_type(const std::string& id) const;
   double hourly_price(const std::string& worker_id) const;
   /// Total number of locations of a tier across the whole partition.
   int location_count(int tier) const;
   /// Price for (from, to). Missing intra-tier entries are zero and missing
   /// downward entries are forbidden.
   TrafficPrice price(int from_tier, int to_tier) const;
   /// Price with one-way flow relaxed: downward pairs reuse the upward price.
   TrafficPrice relaxed_price(int from_tier, int to_tier) const;
};

struct CostBreakdown {
   double compute = 0.0;
   double network = 0.0;
   double total = 0.0;

   static CostBreakdown of(double compute, double network) { return {compute, network, compute + network}; }
};

using Selection = std::map<std::string, std::string>;
using Assignment = std::map<std::string, std::set<std::string>>;

struct PhysicalPlan {
   Selection selection;
   Assignment assignment;
   CostBreakdown cost;
   /// Edges whose worker pairs flow downward. Only baselines that ignore
   /// placement constraints can produce these.
   std::vector<std::string> a2_violations;
};

/// Stable textual key for tie-breaking, e.g. "det=yolo_s;reid=r50".
std::string selection_key(const Selection& s);
std::string assignment_key(const Assignment& a);

/// Checks the structural invariants of the workflow and the infrastructure.
/// Violations are returned as data; an empty list means the inputs are sound.
std::vector<std::string> validate(const LogicalPlan& plan, const InfrastructureSpec& infra);

/// Per-node input rate (items/s). Sources emit their configured rate and every
/// other node receives the sum of its parents' rates scaled by the parents'
/// output ratios under `selection`.
std::map<std::string, double> propagate_throughput(const LogicalPlan& plan, const Selection& selection);

/// Same as propagate_throughput with source rates rescaled so that together
/// they emit `input_throughput` items/s. A non-positive value keeps the
/// configured source rates.
std::map<std::string, double> required_rates(const LogicalPlan& plan, const Selection& selection,
                                             double input_throughput);

/// Canonical topological order: Kahn's algorithm with lexicographic tie-break.
std::vector<std::string> canonical_order(const LogicalPlan& plan);

/// Up to `count` distinct topological orders. The first is canonical, the
/// rest are drawn by randomized Kahn traversal seeded with `seed`.
std::vector<std::vector<std::string>> topological_orderings(const LogicalPlan& plan, int count, std::uint64_t seed);

/// Selection mapping every non-ml node to the identity variant.
Selection complete_with_identity(const LogicalPlan& plan, Selection s);

}  // namespace hetplan

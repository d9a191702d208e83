#include "hetplan/oracle.hpp"

#include "hetplan/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hetplan {
namespace {
//---------------------------------------------------------------------------
std::string guard_message(double estimate, double limit) {
   std::ostringstream os;
   os << "enumeration guard: estimated " << estimate << " combinations exceeds limit " << limit;
   return os.str();
}
//---------------------------------------------------------------------------
std::vector<Selection> all_selections(const LogicalPlan& plan) {
   std::vector<Selection> out(1);
   for (const auto& [node, choices] : plan.choices) {
      if (plan.node(node).kind != NodeKind::Ml) continue;
      std::vector<Selection> next;
      for (const auto& s : out)
         for (const auto& c : choices) {
            auto t = s;
            t[node] = c;
            next.push_back(std::move(t));
         }
      out = std::move(next);
   }
   return out;
}
//---------------------------------------------------------------------------
std::vector<Selection> candidate_selections(const LogicalPlan& plan, const ProfileSet& profiles,
                                            double target_accuracy, const OracleConfig& cfg) {
   if (cfg.selection_mode == SelectionMode::Fixed) return {cfg.fixed_selection};
   std::vector<Selection> out;
   for (auto& s : all_selections(plan)) {
      auto acc = end_to_end_accuracy(plan, s, profiles);
      if (acc && *acc >= target_accuracy) out.push_back(std::move(s));
   }
   return out;
}
//---------------------------------------------------------------------------
using Mask = std::uint32_t;
//---------------------------------------------------------------------------
struct InEdge {
   int parent = -1;  // index into bearing nodes, -1 for a source
   double bytes_per_hour = 0;
   double bytes_per_second = 0;
   std::string source_id;
};
//---------------------------------------------------------------------------
/// Flat, index-based view of one selection's search problem.
struct Problem {
   std::vector<std::string> node_ids;
   std::vector<double> demand;
   std::vector<std::vector<double>> cap;  // [node][worker]
   std::vector<Mask> capable;
   std::vector<std::vector<InEdge>> in_edges;
   std::vector<double> suffix_bound;  // lower bound on compute of nodes k..end
};
//---------------------------------------------------------------------------
struct Search {
   const InfrastructureSpec& infra;
   const OracleConfig& cfg;
   std::vector<std::string> worker_ids;
   std::vector<int> tier;
   std::vector<double> price;
   std::vector<std::vector<double>> traffic;  // per-byte price [from tier][to tier]
   std::vector<std::vector<bool>> forbidden;

   // incumbent, shared across selections
   bool found = false;
   double best = std::numeric_limits<double>::infinity();
   std::string best_key;
   PhysicalPlan best_plan;
   std::uint64_t leaves = 0;

   // per-selection state
   const Problem* pb = nullptr;
   const Selection* selection = nullptr;
   std::vector<Mask> chosen;

   Search(const InfrastructureSpec& in, const OracleConfig& c) : infra(in), cfg(c) {
      for (const auto& w : infra.workers) {
         worker_ids.push_back(w.id);
         tier.push_back(w.tier);
         price.push_back(infra.hourly_price(w.id));
      }
      const int tiers = infra.tier_count();
      traffic.assign(tiers + 1, std::vector<double>(tiers + 1, 0.0));
      forbidden.assign(tiers + 1, std::vector<bool>(tiers + 1, false));
      for (int i = 1; i <= tiers; ++i)
         for (int j = 1; j <= tiers; ++j) {
            auto p = cfg.enforce_a2 ? infra.price(i, j) : infra.relaxed_price(i, j);
            forbidden[i][j] = p.forbidden;
            traffic[i][j] = p.usd_per_gb / 1e9;
         }
   }

   double tolerance() const { return 1e-9 * std::max(1.0, std::abs(best)); }

   double capacity_of(int node, Mask m) const {
      double c = 0;
      for (std::size_t w = 0; w < worker_ids.size(); ++w)
         if (m >> w & 1u) c += pb->cap[node][w];
      return c;
   }

   double compute_of(int node, Mask m) const {
      double p = 0;
      for (std::size_t w = 0; w < worker_ids.size(); ++w)
         if (m >> w & 1u) p += price[w];
      if (cfg.charge == ChargeMode::FullHour) return p;
      return p * std::min(1.0, pb->demand[node] / capacity_of(node, m));
   }

   /// Network $/h on the incoming edges of `node` placed on `m`; nullopt on a forbidden pair.
   std::optional<double> network_of(int node, Mask m) const {
      const double vcap = capacity_of(node, m);
      double cost = 0;
      for (const auto& e : pb->in_edges[node]) {
         std::vector<std::pair<int, double>> from;
         if (e.parent < 0) {
            from.push_back({1, 1.0});
         } else {
            const Mask pm = chosen[e.parent];
            const double pcap = capacity_of(e.parent, pm);
            for (std::size_t x = 0; x < worker_ids.size(); ++x)
               if (pm >> x & 1u) from.push_back({tier[x], pb->cap[e.parent][x] / pcap});
         }
         for (const auto& [tx, sx] : from)
            for (std::size_t y = 0; y < worker_ids.size(); ++y) {
               if (!(m >> y & 1u)) continue;
               if (forbidden[tx][tier[y]]) return std::nullopt;
               cost += traffic[tx][tier[y]] * e.bytes_per_hour * sx * pb->cap[node][y] / vcap;
            }
      }
      return cost;
   }

   bool uplink_ok() const {
      if (!cfg.edge_uplink_cap) return true;
      const double locations = infra.location_count(1);
      std::map<std::string, double> load;
      for (std::size_t v = 0; v < pb->node_ids.size(); ++v) {
         const double vcap = capacity_of(static_cast<int>(v), chosen[v]);
         for (const auto& e : pb->in_edges[v]) {
            std::vector<std::pair<std::string, double>> devices;
            if (e.parent < 0) {
               devices.push_back({"src:" + e.source_id, 1.0});
            } else {
               const double pcap = capacity_of(e.parent, chosen[e.parent]);
               for (std::size_t x = 0; x < worker_ids.size(); ++x)
                  if ((chosen[e.parent] >> x & 1u) && tier[x] == 1)
                     devices.push_back({worker_ids[x], pb->cap[e.parent][x] / pcap});
            }
            for (const auto& [d, sx] : devices)
               for (std::size_t y = 0; y < worker_ids.size(); ++y)
                  if ((chosen[v] >> y & 1u) && tier[y] != 1)
                     load[d] += e.bytes_per_second * sx * pb->cap[v][y] / vcap / locations;
         }
      }
      for (const auto& [d, bytes] : load)
         if (bytes > *cfg.edge_uplink_cap * (1 + kCapacitySlack)) return false;
      return true;
   }

   void leaf(double compute, double network) {
      ++leaves;
      if (!uplink_ok()) return;
      const double total = compute + network;
      if (found && total > best + tolerance()) return;
      Assignment a;
      for (std::size_t v = 0; v < pb->node_ids.size(); ++v) {
         auto& set = a[pb->node_ids[v]];
         for (std::size_t w = 0; w < worker_ids.size(); ++w)
            if (chosen[v] >> w & 1u) set.insert(worker_ids[w]);
      }
      auto key = selection_key(*selection) + "|" + assignment_key(a);
      if (found && total >= best - tolerance() && key >= best_key) return;
      found = true;
      best = total;
      best_key = std::move(key);
      best_plan.selection = *selection;
      best_plan.assignment = std::move(a);
      best_plan.cost = CostBreakdown::of(compute, network);
   }

   void dfs(int k, Mask used, double compute, double network) {
      const int n = static_cast<int>(pb->node_ids.size());
      if (k == n) {
         leaf(compute, network);
         return;
      }
      const Mask avail = pb->capable[k] & ~used;
      const double need = pb->demand[k] * (1 - kCapacitySlack);
      struct Option {
         double total;
         double compute;
         double network;
         Mask mask;
      };
      std::vector<Option> options;
      for (Mask s = avail; s; s = (s - 1) & avail) {
         if (capacity_of(k, s) < need) continue;
         if (cfg.enforce_a2) {
            int lowest = std::numeric_limits<int>::max();
            for (std::size_t y = 0; y < worker_ids.size(); ++y)
               if (s >> y & 1u) lowest = std::min(lowest, tier[y]);
            bool ok = true;
            for (const auto& e : pb->in_edges[k]) {
               if (e.parent < 0) continue;
               for (std::size_t x = 0; x < worker_ids.size() && ok; ++x)
                  if ((chosen[e.parent] >> x & 1u) && tier[x] > lowest) ok = false;
            }
            if (!ok) continue;
         }
         chosen[k] = s;
         auto net = network_of(k, s);
         if (!net) continue;
         const double c = compute_of(k, s);
         options.push_back({c + *net, c, *net, s});
      }
      std::sort(options.begin(), options.end(),
                [](const Option& a, const Option& b) { return a.total != b.total ? a.total < b.total : a.mask < b.mask; });
      for (const auto& o : options) {
         const double bound = compute + network + o.total + pb->suffix_bound[k + 1];
         if (found && bound > best + tolerance()) break;
         chosen[k] = o.mask;
         dfs(k + 1, used | o.mask, compute + o.compute, network + o.network);
      }
      chosen[k] = 0;
   }
};
//---------------------------------------------------------------------------
Problem build_problem(const LogicalPlan& plan, const InfrastructureSpec& infra, const ProfileSet& profiles,
                      const Selection& selection, double input_throughput, const OracleConfig& cfg) {
   auto variant_of = [&](const std::string& id) -> std::string {
      if (plan.node(id).kind != NodeKind::Ml) return kIdentityVariant;
      auto it = selection.find(id);
      if (it == selection.end()) throw InputError("selection misses ml node " + id);
      return it->second;
   };

   const auto order = canonical_order(plan);
   double configured = 0;
   for (const auto& s : plan.sources()) configured += plan.source_throughput.count(s) ? plan.source_throughput.at(s) : 0.0;
   const double scale = input_throughput > 0 && configured > 0 ? input_throughput / configured : 1.0;

   std::map<std::string, double> rate;
   for (const auto& id : order) {
      const auto& node = plan.node(id);
      if (node.kind == NodeKind::Source) {
         rate[id] = (plan.source_throughput.count(id) ? plan.source_throughput.at(id) : 0.0) * scale;
         continue;
      }
      double in = 0;
      for (const auto& u : plan.parents(id)) in += rate[u] * plan.output_ratio(u, variant_of(u));
      rate[id] = in;
   }

   Problem pb;
   std::map<std::string, int> index;
   for (const auto& id : order)
      if (plan.node(id).bears_workers()) {
         index[id] = static_cast<int>(pb.node_ids.size());
         pb.node_ids.push_back(id);
      }
   const std::size_t m = infra.workers.size();
   for (const auto& id : pb.node_ids) {
      pb.demand.push_back(rate[id]);
      std::vector<double> caps(m, 0.0);
      Mask capable = 0;
      const auto key = throughput_key(id, variant_of(id));
      for (std::size_t w = 0; w < m; ++w) {
         const auto& worker = infra.workers[w];
         caps[w] = profiles.throughput.get(key, worker.type, cfg.percentile) * infra.location_count(worker.tier);
         if (caps[w] > 0) capable |= Mask{1} << w;
      }
      pb.cap.push_back(std::move(caps));
      pb.capable.push_back(capable);
      std::vector<InEdge> edges;
      for (const auto& u : plan.parents(id)) {
         InEdge e;
         e.parent = index.count(u) ? index.at(u) : -1;
         e.source_id = u;
         e.bytes_per_second = rate[u] * plan.output_ratio(u, variant_of(u)) * plan.unit_size(u, id);
         e.bytes_per_hour = e.bytes_per_second * 3600.0;
         edges.push_back(e);
      }
      pb.in_edges.push_back(std::move(edges));
   }

   // any placement of node k costs at least demand x the best price per capacity
   const std::size_t n = pb.node_ids.size();
   pb.suffix_bound.assign(n + 1, 0.0);
   for (std::size_t k = n; k-- > 0;) {
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t w = 0; w < m; ++w)
         if (pb.cap[k][w] > 0) ratio = std::min(ratio, infra.hourly_price(infra.workers[w].id) / pb.cap[k][w]);
      const double b = std::isfinite(ratio) ? pb.demand[k] * ratio : std::numeric_limits<double>::infinity();
      pb.suffix_bound[k] = pb.suffix_bound[k + 1] + b;
   }
   return pb;
}
//---------------------------------------------------------------------------
double problem_estimate(const Problem& pb, std::size_t workers) {
   double product = 1;
   for (std::size_t w = 0; w < workers; ++w) {
      int nodes = 0;
      for (auto c : pb.capable)
         if (c >> w & 1u) ++nodes;
      product *= 1.0 + nodes;
   }
   return product;
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
EnumerationGuardError::EnumerationGuardError(double estimate, double limit)
   : std::runtime_error(guard_message(estimate, limit)), estimate_(estimate) {}
//---------------------------------------------------------------------------
double enumeration_estimate(const LogicalPlan& plan, const InfrastructureSpec& infra, const ProfileSet& profiles,
                            double target_accuracy, const OracleConfig& cfg) {
   if (infra.workers.size() > 31) return std::numeric_limits<double>::infinity();
   double total = 0;
   for (const auto& s : candidate_selections(plan, profiles, target_accuracy, cfg))
      total += problem_estimate(build_problem(plan, infra, profiles, s, 0.0, cfg), infra.workers.size());
   return total;
}
//---------------------------------------------------------------------------
OracleResult brute_force(const LogicalPlan& plan, const InfrastructureSpec& infra, const ProfileSet& profiles,
                         double target_accuracy, double input_throughput, const OracleConfig& cfg) {
   if (!(cfg.max_enumeration > 0)) throw InputError("max_enumeration must be positive");
   OracleResult result;
   if (infra.workers.size() > 31) throw EnumerationGuardError(std::numeric_limits<double>::infinity(), cfg.max_enumeration);

   const auto selections = candidate_selections(plan, profiles, target_accuracy, cfg);
   result.feasible_selections = selections.size();
   std::vector<Problem> problems;
   for (const auto& s : selections) {
      problems.push_back(build_problem(plan, infra, profiles, s, input_throughput, cfg));
      result.estimate += problem_estimate(problems.back(), infra.workers.size());
   }
   if (result.estimate > cfg.max_enumeration) throw EnumerationGuardError(result.estimate, cfg.max_enumeration);

   // most promising selections first so the incumbent tightens early
   std::vector<std::size_t> order(selections.size());
   for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
   std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (problems[a].suffix_bound[0] != problems[b].suffix_bound[0])
         return problems[a].suffix_bound[0] < problems[b].suffix_bound[0];
      return selection_key(selections[a]) < selection_key(selections[b]);
   });

   Search search(infra, cfg);
   for (auto i : order) {
      const auto& pb = problems[i];
      if (!std::isfinite(pb.suffix_bound[0])) continue;
      if (search.found && pb.suffix_bound[0] > search.best + search.tolerance()) continue;
      search.pb = &pb;
      search.selection = &selections[i];
      search.chosen.assign(pb.node_ids.size(), 0);
      search.dfs(0, 0, 0.0, 0.0);
   }
   result.leaves = search.leaves;
   if (!search.found) return result;
   result.plan = std::move(search.best_plan);
   // label downward edges the relaxed search chose
   auto& best = *result.plan;
   for (const auto& e : plan.edges) {
      auto child = best.assignment.find(e.to);
      if (child == best.assignment.end() || child->second.empty()) continue;
      int from_tier = 1;
      if (auto parent = best.assignment.find(e.from); parent != best.assignment.end())
         for (const auto& x : parent->second) from_tier = std::max(from_tier, infra.worker(x).tier);
      for (const auto& y : child->second)
         if (infra.worker(y).tier < from_tier) {
            best.a2_violations.push_back(e.from + "->" + e.to);
            break;
         }
   }
   return result;
}
//---------------------------------------------------------------------------
}  // namespace hetplan

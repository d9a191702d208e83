#include "hetplan/worker_assignment.hpp"

#include <algorithm>
#include <future>
#include <limits>

namespace hetplan {
//---------------------------------------------------------------------------
std::string to_string(ChargeMode m) {
   return m == ChargeMode::FullHour ? "full-hour" : "utilization";
}
//---------------------------------------------------------------------------
ChargeMode charge_mode_from_string(const std::string& s) {
   if (s == "full-hour") return ChargeMode::FullHour;
   if (s == "utilization") return ChargeMode::Utilization;
   throw InputError("unknown charge mode '" + s + "' (expected full-hour or utilization)");
}
//---------------------------------------------------------------------------
CostModel::CostModel(const LogicalPlan& plan, const InfrastructureSpec& infra, const ProfileSet& profiles,
                     Selection selection, std::map<std::string, double> rates, CostOptions opts)
   : plan_(plan), infra_(infra), profiles_(profiles), selection_(complete_with_identity(plan, std::move(selection))),
     rates_(std::move(rates)), opts_(opts) {}
//---------------------------------------------------------------------------
double CostModel::throughput(const std::string& node, const std::string& worker) const {
   const auto& w = infra_.worker(worker);
   return profiles_.throughput.get(throughput_key(node, variant(node)), w.type, opts_.percentile);
}
//---------------------------------------------------------------------------
double CostModel::capacity(const std::string& node, const std::string& worker) const {
   return throughput(node, worker) * throughput_coefficient(worker, infra_);
}
//---------------------------------------------------------------------------
double CostModel::total_capacity(const std::string& node, const std::set<std::string>& workers) const {
   double total = 0;
   for (const auto& w : workers) total += capacity(node, w);
   return total;
}
//---------------------------------------------------------------------------
double CostModel::share(const std::string& node, const std::string& worker, const std::set<std::string>& workers) const {
   double total = total_capacity(node, workers);
   return total > 0 ? capacity(node, worker) / total : 0.0;
}
//---------------------------------------------------------------------------
double CostModel::output_flow(const std::string& u) const {
   return rate(u) * plan_.output_ratio(u, variant(u));
}
//---------------------------------------------------------------------------
TrafficPrice CostModel::price(int from_tier, int to_tier) const {
   return opts_.enforce_a2 ? infra_.price(from_tier, to_tier) : infra_.relaxed_price(from_tier, to_tier);
}
//---------------------------------------------------------------------------
std::vector<std::pair<int, double>> CostModel::senders(const std::string& u, const Assignment& a) const {
   if (plan_.node(u).kind == NodeKind::Source) return {{1, 1.0}};
   std::vector<std::pair<int, double>> out;
   auto it = a.find(u);
   if (it == a.end()) throw InputError("parent '" + u + "' is not assigned");
   for (const auto& x : it->second) out.push_back({infra_.worker(x).tier, share(u, x, it->second)});
   return out;
}
//---------------------------------------------------------------------------
std::optional<double> CostModel::unit_cost(const std::string& node, const std::string& worker, const Assignment& a) const {
   auto compute = unit_compute_cost(throughput_key(node, variant(node)), worker, infra_, profiles_.throughput,
                                    opts_.percentile);
   if (!compute) return std::nullopt;
   const int tier = infra_.worker(worker).tier;
   double cost = *compute;
   for (const auto& u : plan_.parents(node)) {
      const double bytes = plan_.unit_size(u, node);
      for (const auto& [from_tier, frac] : senders(u, a)) {
         auto p = price(from_tier, tier);
         if (p.forbidden) return std::nullopt;
         cost += p.per_byte() * frac * bytes;
      }
   }
   return cost;
}
//---------------------------------------------------------------------------
double CostModel::node_compute(const std::string& node, const std::set<std::string>& workers) const {
   double prices = 0;
   for (const auto& w : workers) prices += infra_.hourly_price(w);
   if (opts_.charge == ChargeMode::FullHour) return prices;
   double cap = total_capacity(node, workers);
   double utilization = cap > 0 ? std::min(1.0, rate(node) / cap) : 1.0;
   return prices * utilization;
}
//---------------------------------------------------------------------------
double CostModel::edge_network(const std::string& u, const std::string& v, const Assignment& a) const {
   auto child = a.find(v);
   if (child == a.end() || child->second.empty()) return 0.0;
   const double bytes_per_hour = output_flow(u) * plan_.unit_size(u, v) * 3600.0;
   double cost = 0;
   for (const auto& [from_tier, sx] : senders(u, a)) {
      for (const auto& y : child->second) {
         auto p = price(from_tier, infra_.worker(y).tier);
         if (p.forbidden) throw InputError("edge " + u + "->" + v + " sends traffic to a lower tier");
         cost += p.per_byte() * bytes_per_hour * sx * share(v, y, child->second);
      }
   }
   return cost;
}
//---------------------------------------------------------------------------
double CostModel::node_cost(const std::string& node, const Assignment& a) const {
   auto it = a.find(node);
   if (it == a.end()) return 0.0;
   double cost = node_compute(node, it->second);
   for (const auto& u : plan_.parents(node)) cost += edge_network(u, node, a);
   return cost;
}
//---------------------------------------------------------------------------
CostBreakdown CostModel::total(const Assignment& a) const {
   double compute = 0, network = 0;
   for (const auto& id : canonical_order(plan_)) {
      auto it = a.find(id);
      if (it == a.end()) continue;
      compute += node_compute(id, it->second);
      for (const auto& u : plan_.parents(id)) network += edge_network(u, id, a);
   }
   return CostBreakdown::of(compute, network);
}
//---------------------------------------------------------------------------
std::vector<std::string> CostModel::uplink_violations(const Assignment& a) const {
   std::vector<std::string> out;
   if (!opts_.edge_uplink_cap) return out;
   const double locations = infra_.location_count(1);
   // bytes/s leaving each edge device towards other tiers
   std::map<std::string, double> uplink;
   for (const auto& e : plan_.edges) {
      auto child = a.find(e.to);
      if (child == a.end()) continue;
      const double flow = output_flow(e.from) * plan_.unit_size(e.from, e.to);
      const bool source = plan_.node(e.from).kind == NodeKind::Source;
      std::vector<std::pair<std::string, double>> devices;
      if (source) {
         devices.push_back({e.from, 1.0});
      } else {
         auto parent = a.find(e.from);
         if (parent == a.end()) continue;
         for (const auto& x : parent->second)
            if (infra_.worker(x).tier == 1) devices.push_back({x, share(e.from, x, parent->second)});
      }
      for (const auto& [device, sx] : devices)
         for (const auto& y : child->second)
            if (infra_.worker(y).tier != 1) uplink[device] += flow * sx * share(e.to, y, child->second) / locations;
   }
   for (const auto& [device, bytes] : uplink)
      if (bytes > *opts_.edge_uplink_cap * (1 + kCapacitySlack)) out.push_back(device);
   return out;
}
//---------------------------------------------------------------------------
std::vector<std::string> CostModel::downward_edges(const Assignment& a) const {
   std::vector<std::string> out;
   for (const auto& e : plan_.edges) {
      auto child = a.find(e.to);
      if (child == a.end() || child->second.empty()) continue;
      int max_parent = 1;
      if (plan_.node(e.from).kind != NodeKind::Source) {
         auto parent = a.find(e.from);
         if (parent == a.end()) continue;
         for (const auto& x : parent->second) max_parent = std::max(max_parent, infra_.worker(x).tier);
      }
      int min_child = std::numeric_limits<int>::max();
      for (const auto& y : child->second) min_child = std::min(min_child, infra_.worker(y).tier);
      if (min_child < max_parent) out.push_back(e.from + "->" + e.to);
   }
   return out;
}
//---------------------------------------------------------------------------
std::optional<double> assignment_unit_cost(const CostModel& model, const std::string& node, const std::string& worker,
                                           const Assignment& parent_assignments) {
   return model.unit_cost(node, worker, parent_assignments);
}
//---------------------------------------------------------------------------
CostBreakdown plan_total_cost(const CostModel& model, const Assignment& assignment) {
   return model.total(assignment);
}
//---------------------------------------------------------------------------
std::vector<std::string> check_plan(const CostModel& model, const Assignment& assignment) {
   std::vector<std::string> out;
   const auto& plan = model.plan();
   std::map<std::string, std::string> owner;
   for (const auto& [node, workers] : assignment) {
      const auto* n = plan.find(node);
      if (!n) {
         out.push_back("assignment names unknown node " + node);
         continue;
      }
      if (!n->bears_workers()) out.push_back("node " + node + " cannot host workers");
      for (const auto& w : workers) {
         if (!model.infra().find_worker(w)) {
            out.push_back("node " + node + " uses unknown worker " + w);
            continue;
         }
         auto [it, fresh] = owner.emplace(w, node);
         if (!fresh) out.push_back("worker " + w + " assigned to both " + it->second + " and " + node);
         if (!(model.throughput(node, w) > 0)) out.push_back("worker " + w + " cannot run " + model.variant(node));
      }
   }
   if (!out.empty()) return out;
   for (const auto& n : plan.nodes) {
      if (n.kind == NodeKind::Ml) {
         auto sel = model.selection().find(n.id);
         const auto& choices = plan.choices.at(n.id);
         if (sel == model.selection().end() || std::find(choices.begin(), choices.end(), sel->second) == choices.end())
            out.push_back("node " + n.id + " has no valid model selection");
      }
      if (!n.bears_workers()) continue;
      auto it = assignment.find(n.id);
      double cap = it == assignment.end() ? 0.0 : model.total_capacity(n.id, it->second);
      if (cap < model.rate(n.id) * (1 - kCapacitySlack))
         out.push_back("node " + n.id + " capacity " + std::to_string(cap) + " below demand " +
                       std::to_string(model.rate(n.id)));
   }
   if (model.options().enforce_a2)
      for (const auto& e : model.downward_edges(assignment)) out.push_back("A2 violated on edge " + e);
   for (const auto& d : model.uplink_violations(assignment)) out.push_back("uplink cap exceeded at " + d);
   return out;
}
//---------------------------------------------------------------------------
namespace {
//---------------------------------------------------------------------------
struct AssignmentCandidate {
   Assignment assignment;
   std::set<std::string> used_workers;
   double accumulated_cost = 0.0;
};
//---------------------------------------------------------------------------
/// Drops workers, most expensive first, while the rest still cover the demand.
std::set<std::string> trim_workers(const CostModel& model, const std::string& v, std::set<std::string> picked) {
   const auto& infra = model.infra();
   std::vector<std::string> order(picked.begin(), picked.end());
   std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
      return infra.hourly_price(a) > infra.hourly_price(b);
   });
   const double need = model.rate(v) * (1 - kCapacitySlack);
   double cap = model.total_capacity(v, picked);
   for (const auto& w : order) {
      const double c = model.capacity(v, w);
      if (picked.size() > 1 && cap - c >= need) {
         picked.erase(w);
         cap -= c;
      }
   }
   return picked;
}
//---------------------------------------------------------------------------
std::optional<AssignmentCandidate> search_order(const CostModel& model, const std::vector<std::string>& order,
                                                const AssignOptions& opts) {
   const auto& plan = model.plan();
   const auto& infra = model.infra();
   std::vector<AssignmentCandidate> beam(1);

   // tier ranges [lo, hi] searched greedily for every node
   const int tiers = infra.tier_count();
   std::vector<std::pair<int, int>> pools;
   if (opts.pools != PoolScheme::UpTo)
      for (int i = 1; i <= tiers; ++i) pools.push_back({i, tiers});
   if (opts.pools != PoolScheme::From)
      for (int i = opts.pools == PoolScheme::UpTo ? tiers : tiers - 1; i >= 1; --i) pools.push_back({1, i});

   for (const auto& v : order) {
      if (!plan.node(v).bears_workers()) continue;
      const double demand = model.rate(v);
      std::map<std::string, AssignmentCandidate> next;
      for (const auto& cand : beam) {
         // per-item cost of each free worker; the compute part is re-based on the
         // throughput the worker would actually serve when ranking by residual
         struct Option {
            std::string id;
            int tier;
            double capacity;
            double fixed;  // network part, or everything for the profiled basis
            double price;
         };
         std::vector<Option> options;
         for (const auto& w : infra.workers) {
            const double cap = model.capacity(v, w.id);
            if (cand.used_workers.contains(w.id) || !(cap > 0)) continue;
            auto c = model.unit_cost(v, w.id, cand.assignment);
            if (!c) continue;
            const double price = infra.hourly_price(w.id);
            if (opts.basis == UnitCostBasis::Residual) *c -= price / (3600.0 * model.throughput(v, w.id));
            options.push_back({w.id, w.tier, cap, *c, price});
         }
         auto score = [&](const Option& o, double remaining) {
            if (opts.basis == UnitCostBasis::Profiled) return o.fixed;
            return o.fixed + o.price / (3600.0 * std::min(o.capacity, remaining));
         };
         for (const auto& [lo, hi] : pools) {
            double remaining = demand;
            std::set<std::string> picked;
            std::vector<const Option*> free;
            for (const auto& o : options)
               if (o.tier >= lo && o.tier <= hi) free.push_back(&o);
            while (remaining > demand * kCapacitySlack && !free.empty()) {
               std::size_t best = 0;
               for (std::size_t i = 1; i < free.size(); ++i) {
                  double a = score(*free[i], remaining), b = score(*free[best], remaining);
                  if (a < b || (a == b && free[i]->id < free[best]->id)) best = i;
               }
               picked.insert(free[best]->id);
               remaining -= free[best]->capacity;
               free.erase(free.begin() + static_cast<std::ptrdiff_t>(best));
            }
            if (remaining > demand * kCapacitySlack) continue;
            auto add = [&](const std::set<std::string>& workers) {
               AssignmentCandidate cur = cand;
               cur.assignment[v] = workers;
               cur.used_workers.insert(workers.begin(), workers.end());
               if (!model.uplink_violations(cur.assignment).empty()) return;
               cur.accumulated_cost += model.node_cost(v, cur.assignment);
               auto key = assignment_key(cur.assignment);
               next.emplace(std::move(key), std::move(cur));
            };
            add(picked);
            if (opts.trim) {
               auto trimmed = trim_workers(model, v, picked);
               if (trimmed != picked) add(trimmed);
            }
         }
      }
      std::vector<std::pair<std::pair<double, std::string>, AssignmentCandidate*>> ranked;
      for (auto& [key, c] : next) ranked.push_back({{c.accumulated_cost, key}, &c});
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (ranked.size() > static_cast<std::size_t>(opts.beam_width)) ranked.resize(static_cast<std::size_t>(opts.beam_width));
      beam.clear();
      for (auto& [rank, c] : ranked) beam.push_back(std::move(*c));
      if (beam.empty()) return std::nullopt;
   }
   return beam.front();
}
//---------------------------------------------------------------------------
bool cheaper(const PhysicalPlan& a, const PhysicalPlan& b) {
   if (a.cost.total != b.cost.total) return a.cost.total < b.cost.total;
   auto ka = selection_key(a.selection), kb = selection_key(b.selection);
   if (ka != kb) return ka < kb;
   return assignment_key(a.assignment) < assignment_key(b.assignment);
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
std::optional<PhysicalPlan> assign_workers(const LogicalPlan& plan, const Selection& selection,
                                           const InfrastructureSpec& infra, const ProfileSet& profiles,
                                           double input_throughput, const AssignOptions& opts) {
   if (opts.beam_width < 1) throw InputError("assignment beam width must be >= 1");
   auto full = complete_with_identity(plan, selection);
   CostModel model(plan, infra, profiles, full, required_rates(plan, full, input_throughput), opts.cost);

   std::optional<PhysicalPlan> best;
   for (const auto& order : topological_orderings(plan, opts.orderings, opts.seed)) {
      auto found = search_order(model, order, opts);
      if (!found) continue;
      PhysicalPlan p;
      p.selection = selection;
      p.assignment = std::move(found->assignment);
      p.cost = model.total(p.assignment);
      if (!best || cheaper(p, *best)) best = std::move(p);
   }
   return best;
}
//---------------------------------------------------------------------------
CostModel make_cost_model(const Instance& instance, const Selection& selection, CostOptions opts) {
   return CostModel(instance.workflow, instance.infrastructure, instance.profiles, selection, instance.rates(selection),
                    opts);
}
//---------------------------------------------------------------------------
OptimizeResult optimize(const Instance& instance, const OptimizeOptions& opts) {
   auto start = std::chrono::steady_clock::now();
   OptimizeResult result;
   auto assign = opts.assign;
   assign.cost.percentile = instance.objectives.percentile;

   result.candidates = select_models(instance.workflow, instance.profiles, instance.objectives.target_accuracy,
                                     opts.selection);
   if (result.candidates.empty()) {
      result.status = PlanStatus::AccuracyUnreachable;
   } else {
      std::vector<std::optional<PhysicalPlan>> found(result.candidates.size());
      auto run = [&](std::size_t i) {
         found[i] = assign_workers(instance.workflow, result.candidates[i].selection, instance.infrastructure,
                                   instance.profiles, instance.objectives.target_throughput, assign);
      };
      if (opts.jobs > 1 && result.candidates.size() > 1) {
         std::vector<std::future<void>> tasks;
         for (std::size_t i = 0; i < found.size(); ++i) tasks.push_back(std::async(std::launch::async, run, i));
         for (auto& t : tasks) t.get();
      } else {
         for (std::size_t i = 0; i < found.size(); ++i) run(i);
      }
      for (auto& p : found)
         if (p && (!result.plan || cheaper(*p, *result.plan))) result.plan = std::move(p);
      result.status = result.plan ? PlanStatus::Ok : PlanStatus::ThroughputUnreachable;
   }
   result.elapsed = std::chrono::steady_clock::now() - start;
   return result;
}
//---------------------------------------------------------------------------
}  // namespace hetplan

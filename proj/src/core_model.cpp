#include "hetplan/core_model.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>
#include <random>
#include <sstream>

namespace hetplan {
//---------------------------------------------------------------------------
std::string to_string(NodeKind kind) {
   switch (kind) {
      case NodeKind::Ml: return "ml";
      case NodeKind::Relational: return "relational";
      case NodeKind::Source: return "source";
      case NodeKind::Sink: return "sink";
   }
   return "?";
}
//---------------------------------------------------------------------------
NodeKind node_kind_from_string(const std::string& s) {
   if (s == "ml") return NodeKind::Ml;
   if (s == "relational") return NodeKind::Relational;
   if (s == "source") return NodeKind::Source;
   if (s == "sink") return NodeKind::Sink;
   throw InputError("unknown node kind '" + s + "'");
}
//---------------------------------------------------------------------------
const OperatorNode* LogicalPlan::find(const std::string& id) const {
   for (const auto& n : nodes)
      if (n.id == id) return &n;
   return nullptr;
}
//---------------------------------------------------------------------------
const OperatorNode& LogicalPlan::node(const std::string& id) const {
   if (const auto* n = find(id)) return *n;
   throw InputError("unknown node '" + id + "'");
}
//---------------------------------------------------------------------------
std::vector<std::string> LogicalPlan::parents(const std::string& id) const {
   std::vector<std::string> out;
   for (const auto& e : edges)
      if (e.to == id) out.push_back(e.from);
   return out;
}
//---------------------------------------------------------------------------
std::vector<std::string> LogicalPlan::children(const std::string& id) const {
   std::vector<std::string> out;
   for (const auto& e : edges)
      if (e.from == id) out.push_back(e.to);
   return out;
}
//---------------------------------------------------------------------------
double LogicalPlan::unit_size(const std::string& from, const std::string& to) const {
   auto it = edge_unit_size.find({from, to});
   return it == edge_unit_size.end() ? 0.0 : it->second;
}
//---------------------------------------------------------------------------
double LogicalPlan::output_ratio(const std::string& id, const std::string& variant) const {
   const auto& n = node(id);
   auto it = n.output_ratio.find(variant);
   if (it != n.output_ratio.end()) return it->second;
   if (n.kind != NodeKind::Ml) return 1.0;
   throw InputError("node '" + id + "' has no output ratio for variant '" + variant + "'");
}
//---------------------------------------------------------------------------
std::optional<std::string> LogicalPlan::sink() const {
   for (const auto& n : nodes)
      if (n.kind == NodeKind::Sink) return n.id;
   return std::nullopt;
}
//---------------------------------------------------------------------------
std::vector<std::string> LogicalPlan::sources() const {
   std::vector<std::string> out;
   for (const auto& n : nodes)
      if (n.kind == NodeKind::Source) out.push_back(n.id);
   return out;
}
//---------------------------------------------------------------------------
const Worker* InfrastructureSpec::find_worker(const std::string& id) const {
   for (const auto& w : workers)
      if (w.id == id) return &w;
   return nullptr;
}
//---------------------------------------------------------------------------
const Worker& InfrastructureSpec::worker(const std::string& id) const {
   if (const auto* w = find_worker(id)) return *w;
   throw InputError("unknown worker '" + id + "'");
}
//---------------------------------------------------------------------------
const WorkerType* InfrastructureSpec::find_type(const std::string& id) const {
   for (const auto& t : worker_types)
      if (t.id == id) return &t;
   return nullptr;
}
//---------------------------------------------------------------------------
double InfrastructureSpec::hourly_price(const std::string& worker_id) const {
   const auto& w = worker(worker_id);
   const auto* t = find_type(w.type);
   if (!t) throw InputError("worker '" + worker_id + "' has unknown type '" + w.type + "'");
   return t->hourly_price;
}
//---------------------------------------------------------------------------
int InfrastructureSpec::location_count(int tier) const {
   int count = 1;
   for (int j = tier; j < tier_count(); ++j)
      count *= tiers[static_cast<std::size_t>(j - 1)].locations_per_parent;
   return count;
}
//---------------------------------------------------------------------------
TrafficPrice InfrastructureSpec::price(int from_tier, int to_tier) const {
   auto it = traffic_price.find({from_tier, to_tier});
   if (it != traffic_price.end()) return it->second;
   if (from_tier == to_tier) return TrafficPrice::finite_per_gb(0.0);
   return TrafficPrice::forbidden_pair();
}
//---------------------------------------------------------------------------
TrafficPrice InfrastructureSpec::relaxed_price(int from_tier, int to_tier) const {
   if (to_tier < from_tier) return price(to_tier, from_tier);
   return price(from_tier, to_tier);
}
//---------------------------------------------------------------------------
std::string selection_key(const Selection& s) {
   std::string key;
   for (const auto& [node, variant] : s) {
      key += node;
      key += '=';
      key += variant;
      key += ';';
   }
   return key;
}
//---------------------------------------------------------------------------
std::string assignment_key(const Assignment& a) {
   std::string key;
   for (const auto& [node, workers] : a) {
      key += node;
      key += '=';
      for (const auto& w : workers) {
         key += w;
         key += ',';
      }
      key += ';';
   }
   return key;
}
//---------------------------------------------------------------------------
namespace {
//---------------------------------------------------------------------------
bool has_cycle(const LogicalPlan& plan) {
   std::map<std::string, int> indeg;
   for (const auto& n : plan.nodes) indeg[n.id] = 0;
   for (const auto& e : plan.edges)
      if (indeg.contains(e.from) && indeg.contains(e.to)) ++indeg[e.to];
   std::vector<std::string> ready;
   for (const auto& [id, d] : indeg)
      if (d == 0) ready.push_back(id);
   std::size_t seen = 0;
   while (!ready.empty()) {
      auto id = ready.back();
      ready.pop_back();
      ++seen;
      for (const auto& e : plan.edges)
         if (e.from == id && indeg.contains(e.to) && --indeg[e.to] == 0) ready.push_back(e.to);
   }
   return seen != indeg.size();
}
//---------------------------------------------------------------------------
std::string fmt_pair(int a, int b) {
   return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
std::vector<std::string> validate(const LogicalPlan& plan, const InfrastructureSpec& infra) {
   std::vector<std::string> out;

   std::set<std::string> ids;
   for (const auto& n : plan.nodes)
      if (!ids.insert(n.id).second) out.push_back("node " + n.id + " defined twice");

   for (const auto& e : plan.edges) {
      if (!ids.contains(e.from)) out.push_back("edge source " + e.from + " undefined");
      if (!ids.contains(e.to)) out.push_back("edge target " + e.to + " undefined");
      if (e.from == e.to) out.push_back("self loop on " + e.from);
   }
   if (has_cycle(plan)) out.push_back("workflow graph contains a cycle");

   int sinks = 0;
   for (const auto& n : plan.nodes) {
      if (n.kind == NodeKind::Sink) {
         ++sinks;
         if (!plan.children(n.id).empty()) out.push_back("sink " + n.id + " has outgoing edges");
      }
      if (n.kind == NodeKind::Source) {
         if (!plan.parents(n.id).empty()) out.push_back("source " + n.id + " has incoming edges");
         auto it = plan.source_throughput.find(n.id);
         if (it == plan.source_throughput.end()) out.push_back("source " + n.id + " has no throughput");
         else if (!(it->second > 0)) out.push_back("source " + n.id + " throughput must be > 0");
      } else if (plan.parents(n.id).empty()) {
         out.push_back("node " + n.id + " has no inputs");
      }
      if (n.kind != NodeKind::Sink && n.kind != NodeKind::Source && plan.children(n.id).empty())
         out.push_back("node " + n.id + " has no consumers");

      auto ch = plan.choices.find(n.id);
      if (n.kind == NodeKind::Ml) {
         if (ch == plan.choices.end() || ch->second.empty()) {
            out.push_back("ml node " + n.id + " has no model choices");
         } else {
            for (const auto& v : ch->second) {
               auto r = n.output_ratio.find(v);
               if (r == n.output_ratio.end()) out.push_back("node " + n.id + " lacks output ratio for " + v);
            }
         }
      } else if (ch != plan.choices.end() &&
                 !(ch->second.size() == 1 && ch->second.front() == kIdentityVariant)) {
         out.push_back("non-ml node " + n.id + " must use the identity variant");
      }
      for (const auto& [v, r] : n.output_ratio)
         if (!(r > 0)) out.push_back("node " + n.id + " output ratio for " + v + " must be > 0");
   }
   if (sinks != 1) out.push_back("workflow must have exactly one sink (found " + std::to_string(sinks) + ")");

   for (const auto& [edge, bytes] : plan.edge_unit_size) {
      if (!(bytes >= 0)) out.push_back("edge " + edge.first + "->" + edge.second + " unit size must be >= 0");
   }
   for (const auto& [id, t] : plan.source_throughput) {
      const auto* n = plan.find(id);
      if (!n || n->kind != NodeKind::Source) out.push_back("throughput given for non-source " + id);
   }

   // infrastructure
   const int tiers = infra.tier_count();
   if (tiers == 0) out.push_back("infrastructure has no tiers");
   for (int i = 1; i <= tiers; ++i) {
      const auto& t = infra.tiers[static_cast<std::size_t>(i - 1)];
      if (t.locations_per_parent < 1) out.push_back("tier " + t.name + " needs >= 1 location per parent");
      if (i == tiers && t.locations_per_parent != 1) out.push_back("root tier " + t.name + " must have 1 location");
   }
   std::set<std::string> type_ids;
   for (const auto& t : infra.worker_types) {
      if (!type_ids.insert(t.id).second) out.push_back("worker type " + t.id + " defined twice");
      if (!(t.hourly_price >= 0)) out.push_back("worker type " + t.id + " has negative price");
   }
   std::set<std::string> worker_ids;
   for (const auto& w : infra.workers) {
      if (!worker_ids.insert(w.id).second) out.push_back("worker " + w.id + " defined twice");
      if (!type_ids.contains(w.type)) out.push_back("worker " + w.id + " type " + w.type + " undefined");
      if (w.tier < 1 || w.tier > tiers) {
         out.push_back("worker " + w.id + " tier " + std::to_string(w.tier) + " undefined");
      } else if (w.location < 0 || w.location >= infra.location_count(w.tier)) {
         out.push_back("worker " + w.id + " location " + std::to_string(w.location) + " out of range");
      }
   }
   for (const auto& [pair, p] : infra.traffic_price) {
      auto [a, b] = pair;
      if (a < 1 || a > tiers || b < 1 || b > tiers) {
         out.push_back("traffic price " + fmt_pair(a, b) + " references undefined tier");
         continue;
      }
      if (a == b && (p.forbidden || p.usd_per_gb != 0.0))
         out.push_back("A1 violated: intra-tier price nonzero on tier " + std::to_string(a));
      if (b < a && !p.forbidden) out.push_back("A2 violated: downward price " + fmt_pair(a, b) + " must be forbidden");
      if (b > a && (p.forbidden || !(p.usd_per_gb >= 0)))
         out.push_back("traffic price " + fmt_pair(a, b) + " must be finite and >= 0");
   }
   for (int a = 1; a <= tiers; ++a)
      for (int b = a + 1; b <= tiers; ++b)
         if (!infra.traffic_price.contains({a, b})) out.push_back("traffic price " + fmt_pair(a, b) + " undefined");
   return out;
}
//---------------------------------------------------------------------------
std::vector<std::string> canonical_order(const LogicalPlan& plan) {
   std::map<std::string, int> indeg;
   for (const auto& n : plan.nodes) indeg[n.id] = 0;
   for (const auto& e : plan.edges) ++indeg[e.to];
   std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
   for (const auto& [id, d] : indeg)
      if (d == 0) ready.push(id);
   std::vector<std::string> order;
   while (!ready.empty()) {
      auto id = ready.top();
      ready.pop();
      order.push_back(id);
      for (const auto& e : plan.edges)
         if (e.from == id && --indeg[e.to] == 0) ready.push(e.to);
   }
   if (order.size() != indeg.size()) throw InputError("workflow graph contains a cycle");
   return order;
}
//---------------------------------------------------------------------------
namespace {
//---------------------------------------------------------------------------
struct OrderGraph {
   std::vector<std::string> ids;
   std::vector<std::vector<int>> succ;
   std::vector<int> indeg;

   explicit OrderGraph(const LogicalPlan& plan) {
      for (const auto& n : plan.nodes) ids.push_back(n.id);
      std::sort(ids.begin(), ids.end());
      succ.resize(ids.size());
      indeg.assign(ids.size(), 0);
      auto index = [&](const std::string& id) {
         return static_cast<int>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
      };
      for (const auto& e : plan.edges) {
         succ[static_cast<std::size_t>(index(e.from))].push_back(index(e.to));
         ++indeg[static_cast<std::size_t>(index(e.to))];
      }
   }
};
//---------------------------------------------------------------------------
/// Enumerates linear extensions depth-first in lexicographic order, stopping at `limit`.
void enumerate_orders(const OrderGraph& g, std::vector<int>& indeg, std::vector<int>& prefix,
                      std::vector<std::vector<int>>& out, std::size_t limit) {
   if (out.size() >= limit) return;
   if (prefix.size() == g.ids.size()) {
      out.push_back(prefix);
      return;
   }
   for (std::size_t v = 0; v < g.ids.size(); ++v) {
      if (indeg[v] != 0) continue;
      indeg[v] = -1;
      for (int s : g.succ[v]) --indeg[static_cast<std::size_t>(s)];
      prefix.push_back(static_cast<int>(v));
      enumerate_orders(g, indeg, prefix, out, limit);
      prefix.pop_back();
      for (int s : g.succ[v]) ++indeg[static_cast<std::size_t>(s)];
      indeg[v] = 0;
      if (out.size() >= limit) return;
   }
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
std::vector<std::vector<std::string>> topological_orderings(const LogicalPlan& plan, int count, std::uint64_t seed) {
   if (count < 1) throw InputError("ordering count must be >= 1");
   auto canonical = canonical_order(plan);  // throws on cycles
   OrderGraph g(plan);
   auto to_names = [&](const std::vector<int>& order) {
      std::vector<std::string> names;
      for (int i : order) names.push_back(g.ids[static_cast<std::size_t>(i)]);
      return names;
   };

   // If the DAG admits at most `count` orders, return all of them.
   std::vector<std::vector<int>> all;
   {
      auto indeg = g.indeg;
      std::vector<int> prefix;
      enumerate_orders(g, indeg, prefix, all, static_cast<std::size_t>(count) + 1);
   }
   std::vector<std::vector<std::string>> out{canonical};
   std::set<std::vector<std::string>> seen{canonical};
   if (all.size() <= static_cast<std::size_t>(count)) {
      for (const auto& o : all) {
         auto names = to_names(o);
         if (seen.insert(names).second) out.push_back(std::move(names));
      }
      return out;
   }

   std::mt19937_64 rng(seed);
   const int attempts = 64 * count;
   for (int a = 0; a < attempts && out.size() < static_cast<std::size_t>(count); ++a) {
      auto indeg = g.indeg;
      std::vector<int> ready;
      for (std::size_t v = 0; v < indeg.size(); ++v)
         if (indeg[v] == 0) ready.push_back(static_cast<int>(v));
      std::vector<int> order;
      while (!ready.empty()) {
         std::uniform_int_distribution<std::size_t> pick(0, ready.size() - 1);
         auto k = pick(rng);
         int v = ready[k];
         ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(k));
         order.push_back(v);
         for (int s : g.succ[static_cast<std::size_t>(v)])
            if (--indeg[static_cast<std::size_t>(s)] == 0) ready.push_back(s);
      }
      auto names = to_names(order);
      if (seen.insert(names).second) out.push_back(std::move(names));
   }
   // Random draws can miss rare orders; fill from the enumeration.
   for (const auto& o : all) {
      if (out.size() >= static_cast<std::size_t>(count)) break;
      auto names = to_names(o);
      if (seen.insert(names).second) out.push_back(std::move(names));
   }
   return out;
}
//---------------------------------------------------------------------------
std::map<std::string, double> propagate_throughput(const LogicalPlan& plan, const Selection& selection) {
   return required_rates(plan, selection, 0.0);
}
//---------------------------------------------------------------------------
std::map<std::string, double> required_rates(const LogicalPlan& plan, const Selection& selection,
                                             double input_throughput) {
   double scale = 1.0;
   if (input_throughput > 0) {
      double total = 0;
      for (const auto& [id, t] : plan.source_throughput) total += t;
      if (total > 0) scale = input_throughput / total;
   }
   std::map<std::string, double> rate;
   for (const auto& id : canonical_order(plan)) {
      const auto& n = plan.node(id);
      if (n.kind == NodeKind::Source) {
         auto it = plan.source_throughput.find(id);
         rate[id] = it == plan.source_throughput.end() ? 0.0 : it->second * scale;
         continue;
      }
      double t = 0;
      for (const auto& p : plan.parents(id)) {
         auto sel = selection.find(p);
         std::string variant;
         if (sel != selection.end()) variant = sel->second;
         else if (plan.node(p).kind != NodeKind::Ml) variant = kIdentityVariant;
         else throw InputError("selection has no entry for node '" + p + "'");
         t += rate[p] * plan.output_ratio(p, variant);
      }
      rate[id] = t;
   }
   for (const auto& n : plan.nodes)
      if (n.kind == NodeKind::Ml && !selection.contains(n.id))
         throw InputError("selection has no entry for node '" + n.id + "'");
   return rate;
}
//---------------------------------------------------------------------------
Selection complete_with_identity(const LogicalPlan& plan, Selection s) {
   for (const auto& n : plan.nodes)
      if (n.kind != NodeKind::Ml) s[n.id] = kIdentityVariant;
   return s;
}
//---------------------------------------------------------------------------
}  // namespace hetplan

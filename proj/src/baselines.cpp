#include "hetplan/baselines.hpp"

#include <algorithm>

namespace hetplan {
namespace {
//---------------------------------------------------------------------------
struct Pick {
   double unit = 0;
   std::string worker;
   bool operator<(const Pick& o) const { return unit != o.unit ? unit < o.unit : worker < o.worker; }
};
//---------------------------------------------------------------------------
std::vector<Pick> ranked_workers(const CostModel& model, const std::string& node, const std::set<std::string>& used) {
   std::vector<Pick> out;
   const auto& infra = model.infra();
   for (const auto& w : infra.workers) {
      if (used.contains(w.id)) continue;
      double t = model.throughput(node, w.id);
      if (!(t > 0)) continue;
      out.push_back({infra.hourly_price(w.id) / (3600.0 * t), w.id});
   }
   std::sort(out.begin(), out.end());
   return out;
}
//---------------------------------------------------------------------------
std::optional<PhysicalPlan> finish(const CostModel& model, Selection selection, Assignment assignment) {
   if (!model.uplink_violations(assignment).empty()) return std::nullopt;
   PhysicalPlan p;
   p.selection = std::move(selection);
   p.cost = model.total(assignment);
   p.a2_violations = model.downward_edges(assignment);
   p.assignment = std::move(assignment);
   return p;
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
Selection most_accurate_selection(const LogicalPlan& plan, const ProfileSet& profiles) {
   Selection s;
   for (const auto& n : plan.nodes)
      if (n.kind == NodeKind::Ml) s[n.id] = most_accurate_variant(plan, profiles, n.id);
   return s;
}
//---------------------------------------------------------------------------
std::optional<PhysicalPlan> best_fit(const LogicalPlan& plan, const InfrastructureSpec& infra,
                                     const ProfileSet& profiles, double input_throughput, const CostOptions& opts) {
   auto selection = most_accurate_selection(plan, profiles);
   auto full = complete_with_identity(plan, selection);
   auto cost_opts = opts;
   cost_opts.enforce_a2 = true;
   CostModel model(plan, infra, profiles, full, required_rates(plan, full, input_throughput), cost_opts);

   Assignment assignment;
   std::set<std::string> used;
   std::map<std::string, int> top_tier;
   for (const auto& v : canonical_order(plan)) {
      const auto& node = plan.node(v);
      int anchor = 1;
      for (const auto& u : plan.parents(v))
         if (auto it = top_tier.find(u); it != top_tier.end()) anchor = std::max(anchor, it->second);
      if (!node.bears_workers()) {
         top_tier[v] = anchor;
         continue;
      }
      const auto ranked = ranked_workers(model, v, used);
      double remaining = model.rate(v);
      const double done = model.rate(v) * kCapacitySlack;
      std::set<std::string> picked;
      int tier = anchor;
      for (; tier <= infra.tier_count() && remaining > done; ++tier) {
         for (const auto& p : ranked) {
            if (remaining <= done) break;
            if (infra.worker(p.worker).tier != tier) continue;
            picked.insert(p.worker);
            remaining -= model.capacity(v, p.worker);
         }
      }
      if (remaining > done) return std::nullopt;
      int highest = anchor;
      for (const auto& w : picked) highest = std::max(highest, infra.worker(w).tier);
      top_tier[v] = highest;
      used.insert(picked.begin(), picked.end());
      assignment[v] = std::move(picked);
   }
   return finish(model, std::move(selection), std::move(assignment));
}
//---------------------------------------------------------------------------
std::optional<PhysicalPlan> first_fit(const LogicalPlan& plan, const InfrastructureSpec& infra,
                                      const ProfileSet& profiles, double input_throughput, const CostOptions& opts) {
   auto selection = most_accurate_selection(plan, profiles);
   auto full = complete_with_identity(plan, selection);
   auto cost_opts = opts;
   cost_opts.enforce_a2 = false;
   CostModel model(plan, infra, profiles, full, required_rates(plan, full, input_throughput), cost_opts);

   Assignment assignment;
   std::set<std::string> used;
   for (const auto& v : canonical_order(plan)) {
      if (!plan.node(v).bears_workers()) continue;
      double remaining = model.rate(v);
      const double done = model.rate(v) * kCapacitySlack;
      std::set<std::string> picked;
      for (const auto& p : ranked_workers(model, v, used)) {
         if (remaining <= done) break;
         picked.insert(p.worker);
         remaining -= model.capacity(v, p.worker);
      }
      if (remaining > done) return std::nullopt;
      used.insert(picked.begin(), picked.end());
      assignment[v] = std::move(picked);
   }
   return finish(model, std::move(selection), std::move(assignment));
}
//---------------------------------------------------------------------------
}  // namespace hetplan

#include "selection_oracle.hpp"

#include <algorithm>
#include <map>

namespace hetplan::testing {
namespace {
//---------------------------------------------------------------------------
std::vector<std::string> ml_nodes(const LogicalPlan& plan) {
   std::vector<std::string> out;
   for (const auto& n : plan.nodes)
      if (n.kind == NodeKind::Ml) out.push_back(n.id);
   std::sort(out.begin(), out.end());
   return out;
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
std::size_t combination_count(const LogicalPlan& plan) {
   std::size_t n = 1;
   for (const auto& id : ml_nodes(plan)) n *= plan.choices.at(id).size();
   return n;
}
//---------------------------------------------------------------------------
double forward_accuracy(const LogicalPlan& plan, const ProfileSet& profiles, const Selection& s, bool& ok) {
   // repeated relaxation instead of a topological sort: the graphs are tiny
   std::map<std::string, double> acc;
   ok = true;
   for (std::size_t round = 0; round <= plan.nodes.size(); ++round) {
      for (const auto& n : plan.nodes) {
         if (acc.count(n.id)) continue;
         std::vector<double> in;
         bool ready = true;
         for (const auto& e : plan.edges)
            if (e.to == n.id) {
               if (!acc.count(e.from)) ready = false;
               else in.push_back(acc[e.from]);
            }
         if (!ready) continue;
         if (n.kind == NodeKind::Source) {
            acc[n.id] = 1.0;
         } else if (n.kind != NodeKind::Ml) {
            acc[n.id] = in.empty() ? 1.0 : *std::min_element(in.begin(), in.end());
         } else {
            const auto& prof = profiles.variants.at(s.at(n.id)).accuracy;
            double best = -1;
            for (const auto& row : prof.rows) {
               bool fits = true;
               for (std::size_t i = 0; i < in.size(); ++i) fits = fits && row.input[i] <= in[i];
               if (fits) best = std::max(best, row.output);
            }
            if (best < 0) {
               ok = false;
               return 0;
            }
            acc[n.id] = best;
         }
      }
   }
   auto sink = plan.sink();
   if (!sink || !acc.count(*sink)) {
      ok = false;
      return 0;
   }
   return acc[*sink];
}
//---------------------------------------------------------------------------
std::vector<std::pair<Selection, double>> cheapest_selections(const LogicalPlan& plan, const ProfileSet& profiles,
                                                              double target_accuracy, std::size_t k) {
   auto ids = ml_nodes(plan);
   std::vector<std::size_t> idx(ids.size(), 0);
   std::vector<std::pair<Selection, double>> all;
   while (true) {
      Selection s;
      for (const auto& n : plan.nodes)
         if (n.kind != NodeKind::Ml) s[n.id] = kIdentityVariant;
      double proxy = 0;
      for (std::size_t i = 0; i < ids.size(); ++i) {
         const auto& v = plan.choices.at(ids[i])[idx[i]];
         s[ids[i]] = v;
         proxy += profiles.variants.at(v).cost_proxy_ms;
      }
      bool ok = false;
      double a = forward_accuracy(plan, profiles, s, ok);
      if (ok && a >= target_accuracy) all.emplace_back(s, proxy);
      std::size_t j = 0;
      while (j < ids.size() && ++idx[j] == plan.choices.at(ids[j]).size()) idx[j++] = 0;
      if (j == ids.size()) break;
   }
   std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second < b.second;
      return selection_key(a.first) < selection_key(b.first);
   });
   if (all.size() > k) all.resize(k);
   return all;
}

}  // namespace hetplan::testing

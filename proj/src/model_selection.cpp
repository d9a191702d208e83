#include "hetplan/model_selection.hpp"

#include <algorithm>

namespace hetplan {
namespace {
//---------------------------------------------------------------------------
using Requirements = std::map<std::string, double>;
//---------------------------------------------------------------------------
/// a makes b redundant: same pending nodes, a demands no more anywhere.
bool weaker_or_equal(const Requirements& a, const Requirements& b) {
   if (a.size() != b.size()) return false;
   for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
      if (ia->first != ib->first || ia->second > ib->second) return false;
   return true;
}
//---------------------------------------------------------------------------
void prune_alternatives(std::vector<Requirements>& alts) {
   std::sort(alts.begin(), alts.end());
   alts.erase(std::unique(alts.begin(), alts.end()), alts.end());
   std::vector<Requirements> kept;
   for (std::size_t i = 0; i < alts.size(); ++i) {
      bool redundant = false;
      for (std::size_t j = 0; j < alts.size() && !redundant; ++j)
         if (i != j && weaker_or_equal(alts[j], alts[i])) redundant = true;
      if (!redundant) kept.push_back(alts[i]);
   }
   alts = std::move(kept);
}
//---------------------------------------------------------------------------
void raise(Requirements& req, const std::string& node, double value) {
   auto [it, inserted] = req.emplace(node, value);
   if (!inserted) it->second = std::max(it->second, value);
}
//---------------------------------------------------------------------------
struct Ranked {
   double cost;
   std::string key;
   bool operator<(const Ranked& o) const { return cost != o.cost ? cost < o.cost : key < o.key; }
};
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
double selection_proxy_cost(const LogicalPlan& plan, const ProfileSet& profiles, const Selection& selection,
                            ProxyMetric metric) {
   double cost = 0;
   for (const auto& [node, variant] : selection) {
      const auto* n = plan.find(node);
      if (!n || n->kind != NodeKind::Ml) continue;
      const auto& v = profiles.variant(variant);
      cost += metric == ProxyMetric::LatencyMs ? v.cost_proxy_ms : v.params_millions;
   }
   return cost;
}
//---------------------------------------------------------------------------
std::vector<RankedSelection> select_models(const LogicalPlan& plan, const ProfileSet& profiles,
                                           double target_accuracy, const SelectionOptions& opts) {
   if (opts.top_k < 1 || opts.beam_width < opts.top_k) throw InputError("selection needs 1 <= top_k <= beam_width");
   auto sink = plan.sink();
   if (!sink) throw InputError("workflow has no sink");

   auto order = canonical_order(plan);
   std::reverse(order.begin(), order.end());

   std::vector<SelectionCandidate> beam(1);
   beam[0].pending_requirements.push_back({{*sink, target_accuracy}});

   for (const auto& id : order) {
      const auto& node = plan.node(id);
      const auto parents = plan.parents(id);
      std::vector<std::string> variants{kIdentityVariant};
      if (node.kind == NodeKind::Ml) variants = plan.choices.at(id);

      std::vector<SelectionCandidate> next;
      for (const auto& cand : beam) {
         for (const auto& variant : variants) {
            std::vector<Requirements> alts;
            for (const auto& alt : cand.pending_requirements) {
               auto rest = alt;
               double need = 0.0;
               if (auto it = rest.find(id); it != rest.end()) {
                  need = it->second;
                  rest.erase(it);
               }
               if (node.kind == NodeKind::Source) {
                  if (need <= 1.0) alts.push_back(std::move(rest));
               } else if (node.kind != NodeKind::Ml) {
                  if (need > 1.0) continue;
                  for (const auto& p : parents) raise(rest, p, need);
                  alts.push_back(std::move(rest));
               } else {
                  for (const auto& input : required_input_accuracy(profiles.variant(variant).accuracy, need)) {
                     auto req = rest;
                     for (std::size_t i = 0; i < parents.size() && i < input.size(); ++i) raise(req, parents[i], input[i]);
                     alts.push_back(std::move(req));
                  }
               }
            }
            if (alts.empty()) continue;
            prune_alternatives(alts);
            SelectionCandidate c;
            c.partial_selection = cand.partial_selection;
            if (node.kind == NodeKind::Ml) c.partial_selection[id] = variant;
            c.pending_requirements = std::move(alts);
            c.proxy_cost = selection_proxy_cost(plan, profiles, c.partial_selection, opts.proxy);
            next.push_back(std::move(c));
         }
      }
      std::vector<std::pair<Ranked, std::size_t>> ranked;
      for (std::size_t i = 0; i < next.size(); ++i)
         ranked.push_back({{next[i].proxy_cost, selection_key(next[i].partial_selection)}, i});
      std::sort(ranked.begin(), ranked.end());
      if (ranked.size() > static_cast<std::size_t>(opts.beam_width)) ranked.resize(static_cast<std::size_t>(opts.beam_width));
      beam.clear();
      for (const auto& [r, i] : ranked) beam.push_back(std::move(next[i]));
      if (beam.empty()) return {};
   }

   std::vector<RankedSelection> out;
   for (const auto& c : beam) {
      if (out.size() >= static_cast<std::size_t>(opts.top_k)) break;
      out.push_back({c.partial_selection, c.proxy_cost});
   }
   return out;
}
//---------------------------------------------------------------------------
std::optional<double> end_to_end_accuracy(const LogicalPlan& plan, const Selection& selection,
                                          const ProfileSet& profiles) {
   std::map<std::string, double> acc;
   std::optional<std::string> sink;
   for (const auto& id : canonical_order(plan)) {
      const auto& node = plan.node(id);
      std::vector<double> inputs;
      for (const auto& p : plan.parents(id)) inputs.push_back(acc.at(p));
      switch (node.kind) {
         case NodeKind::Source: acc[id] = 1.0; break;
         case NodeKind::Relational:
         case NodeKind::Sink: acc[id] = inputs.empty() ? 1.0 : *std::min_element(inputs.begin(), inputs.end()); break;
         case NodeKind::Ml: {
            auto it = selection.find(id);
            if (it == selection.end()) return std::nullopt;
            auto out = estimate_output_accuracy(profiles.variant(it->second).accuracy, inputs);
            if (!out) return std::nullopt;
            acc[id] = *out;
            break;
         }
      }
      if (node.kind == NodeKind::Sink) sink = id;
   }
   if (!sink) return std::nullopt;
   return acc.at(*sink);
}
//---------------------------------------------------------------------------
std::string most_accurate_variant(const LogicalPlan& plan, const ProfileSet& profiles, const std::string& node) {
   if (plan.node(node).kind != NodeKind::Ml) return kIdentityVariant;
   std::string best;
   double best_acc = -1, best_cost = 0;
   for (const auto& id : plan.choices.at(node)) {
      const auto& v = profiles.variant(id);
      std::vector<double> ones(v.accuracy.arity, 1.0);
      double acc = estimate_output_accuracy(v.accuracy, ones).value_or(-1.0);
      if (best.empty() || acc > best_acc || (acc == best_acc && (v.cost_proxy_ms < best_cost ||
                                                               (v.cost_proxy_ms == best_cost && id < best)))) {
         best = id;
         best_acc = acc;
         best_cost = v.cost_proxy_ms;
      }
   }
   return best;
}
//---------------------------------------------------------------------------
}  // namespace hetplan

#include "hetplan/profiler.hpp"

#include <algorithm>

namespace hetplan {
//---------------------------------------------------------------------------
std::string to_string(Percentile p) {
   switch (p) {
      case Percentile::P50: return "P50";
      case Percentile::P75: return "P75";
      case Percentile::P90: return "P90";
   }
   return "?";
}
//---------------------------------------------------------------------------
Percentile percentile_from_string(const std::string& s) {
   if (s == "P50") return Percentile::P50;
   if (s == "P75") return Percentile::P75;
   if (s == "P90") return Percentile::P90;
   throw InputError("unknown percentile '" + s + "' (expected P50, P75 or P90)");
}
//---------------------------------------------------------------------------
void ThroughputTable::set(const std::string& key, const std::string& worker_type, PercentileRates rates) {
   table_[{key, worker_type}] = rates;
}
//---------------------------------------------------------------------------
double ThroughputTable::get(const std::string& key, const std::string& worker_type, Percentile p) const {
   auto it = table_.find({key, worker_type});
   return it == table_.end() ? 0.0 : it->second.at(p);
}
//---------------------------------------------------------------------------
std::string throughput_key(const std::string& node, const std::string& variant) {
   if (variant == kIdentityVariant) return kIdentityVariant + ":" + node;
   return variant;
}
//---------------------------------------------------------------------------
const ModelVariant& ProfileSet::variant(const std::string& id) const {
   auto it = variants.find(id);
   if (it == variants.end()) throw InputError("unknown model variant '" + id + "'");
   return it->second;
}
//---------------------------------------------------------------------------
bool dominated_by(const std::vector<double>& a, const std::vector<double>& b) {
   for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] > b[i]) return false;
   return true;
}
//---------------------------------------------------------------------------
std::vector<std::string> validate_profiles(const LogicalPlan& plan, const ProfileSet& profiles,
                                           bool allow_non_monotone) {
   std::vector<std::string> out;
   for (const auto& [id, v] : profiles.variants) {
      if (!(v.cost_proxy_ms > 0)) out.push_back("variant " + id + " cost proxy must be > 0");
      const auto& prof = v.accuracy;
      if (prof.rows.empty()) out.push_back("variant " + id + " has no accuracy rows");
      for (const auto& row : prof.rows) {
         if (row.input.size() != prof.arity) {
            out.push_back("variant " + id + " row arity " + std::to_string(row.input.size()) + " != " +
                          std::to_string(prof.arity));
            continue;
         }
         bool in_range = row.output >= 0 && row.output <= 1;
         for (double a : row.input) in_range = in_range && a >= 0 && a <= 1;
         if (!in_range) out.push_back("variant " + id + " accuracy outside [0,1]");
      }
      if (allow_non_monotone) continue;
      for (const auto& a : prof.rows)
         for (const auto& b : prof.rows)
            if (a.input.size() == prof.arity && b.input.size() == prof.arity && dominated_by(b.input, a.input) &&
                a.output < b.output) {
               out.push_back("variant " + id + " accuracy profile is not monotone");
               goto next_variant;
            }
   next_variant:;
   }
   for (const auto& [key, rates] : profiles.throughput.entries())
      for (double r : rates.values)
         if (!(r >= 0)) out.push_back("throughput of " + key.first + " on " + key.second + " must be >= 0");

   for (const auto& n : plan.nodes) {
      if (n.kind != NodeKind::Ml) continue;
      auto ch = plan.choices.find(n.id);
      if (ch == plan.choices.end()) continue;
      const auto arity = plan.parents(n.id).size();
      for (const auto& v : ch->second) {
         auto it = profiles.variants.find(v);
         if (it == profiles.variants.end()) {
            out.push_back("node " + n.id + " references unknown variant " + v);
         } else if (it->second.accuracy.arity != arity) {
            out.push_back("variant " + v + " arity " + std::to_string(it->second.accuracy.arity) + " does not match " +
                          std::to_string(arity) + " inputs of node " + n.id);
         }
      }
   }
   return out;
}
//---------------------------------------------------------------------------
std::optional<double> estimate_output_accuracy(const AccuracyProfile& profile, const std::vector<double>& input) {
   if (input.size() != profile.arity)
      throw InputError("accuracy query has " + std::to_string(input.size()) + " inputs, profile arity is " +
                       std::to_string(profile.arity));
   std::optional<double> best;
   for (const auto& row : profile.rows)
      if (dominated_by(row.input, input) && (!best || row.output > *best)) best = row.output;
   return best;
}
//---------------------------------------------------------------------------
std::vector<std::vector<double>> required_input_accuracy(const AccuracyProfile& profile, double min_output) {
   std::vector<std::vector<double>> qualifying;
   for (const auto& row : profile.rows)
      if (row.output >= min_output) qualifying.push_back(row.input);
   std::sort(qualifying.begin(), qualifying.end());
   qualifying.erase(std::unique(qualifying.begin(), qualifying.end()), qualifying.end());

   std::vector<std::vector<double>> out;
   for (std::size_t i = 0; i < qualifying.size(); ++i) {
      bool minimal = true;
      for (std::size_t j = 0; j < qualifying.size() && minimal; ++j)
         if (i != j && dominated_by(qualifying[j], qualifying[i])) minimal = false;
      if (minimal) out.push_back(qualifying[i]);
   }
   return out;
}
//---------------------------------------------------------------------------
std::optional<double> unit_compute_cost(const std::string& key, const std::string& worker,
                                        const InfrastructureSpec& infra, const ThroughputTable& tput,
                                        Percentile p) {
   const auto& w = infra.worker(worker);
   double t = tput.get(key, w.type, p);
   if (!(t > 0)) return std::nullopt;
   return infra.hourly_price(worker) / (3600.0 * t);
}
//---------------------------------------------------------------------------
int throughput_coefficient(const std::string& worker, const InfrastructureSpec& infra) {
   return infra.location_count(infra.worker(worker).tier);
}
//---------------------------------------------------------------------------
}  // namespace hetplan

#include "hetplan/sweep.hpp"

#include "hetplan/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <sstream>

namespace hetplan {
namespace {
//---------------------------------------------------------------------------
double parse_number(const std::string& axis, const std::string& value) {
   try {
      std::size_t used = 0;
      double v = std::stod(value, &used);
      if (used == value.size()) return v;
   } catch (const std::exception&) {
   }
   throw InputError("axis " + axis + " expects a number, got '" + value + "'");
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
std::string to_string(Strategy s) {
   switch (s) {
      case Strategy::Jb: return "jb";
      case Strategy::Bf: return "bf";
      case Strategy::Ff: return "ff";
      case Strategy::Lb: return "lb";
   }
   return "?";
}
//---------------------------------------------------------------------------
Strategy strategy_from_string(const std::string& s) {
   if (s == "jb") return Strategy::Jb;
   if (s == "bf") return Strategy::Bf;
   if (s == "ff") return Strategy::Ff;
   if (s == "lb") return Strategy::Lb;
   throw InputError("unknown strategy '" + s + "' (expected jb, bf, ff or lb)");
}
//---------------------------------------------------------------------------
InfrastructureSpec split_tiers(const InfrastructureSpec& infra, const std::string& ratio) {
   std::vector<int> counts;
   std::stringstream in(ratio);
   std::string part;
   while (std::getline(in, part, ':')) {
      int c = static_cast<int>(parse_number("tier_split", part));
      if (c < 0) throw InputError("tier_split counts must be >= 0");
      counts.push_back(c);
   }
   if (static_cast<int>(counts.size()) != infra.tier_count())
      throw InputError("tier_split '" + ratio + "' needs one count per tier (" + std::to_string(infra.tier_count()) + ")");
   int sum = 0;
   for (int c : counts) sum += c;
   if (sum != static_cast<int>(infra.workers.size()))
      throw InputError("tier_split '" + ratio + "' covers " + std::to_string(sum) + " workers, instance has " +
                       std::to_string(infra.workers.size()));

   auto out = infra;
   std::vector<std::size_t> order(out.workers.size());
   for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
   std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double pa = infra.hourly_price(infra.workers[a].id), pb = infra.hourly_price(infra.workers[b].id);
      return pa != pb ? pa < pb : infra.workers[a].id < infra.workers[b].id;
   });
   std::size_t next = 0;
   for (int tier = 1; tier <= infra.tier_count(); ++tier)
      for (int k = 0; k < counts[tier - 1]; ++k) {
         auto& w = out.workers[order[next++]];
         w.tier = tier;
         w.location = 0;
      }
   return out;
}
//---------------------------------------------------------------------------
SweepCell apply_axis(const Instance& base, const std::string& axis, const std::string& value) {
   SweepCell cell{base, std::nullopt};
   if (axis == "input_throughput") {
      cell.instance.objectives.target_throughput = parse_number(axis, value);
   } else if (axis == "target_accuracy") {
      cell.instance.objectives.target_accuracy = parse_number(axis, value);
   } else if (axis == "traffic_price_scale") {
      double scale = parse_number(axis, value);
      if (scale < 0) throw InputError("traffic_price_scale must be >= 0");
      for (auto& [pair, price] : cell.instance.infrastructure.traffic_price)
         if (!price.forbidden) price.usd_per_gb *= scale;
   } else if (axis == "bandwidth_cap") {
      double mbps = parse_number(axis, value);
      if (mbps < 0) throw InputError("bandwidth_cap must be >= 0");
      cell.edge_uplink_cap = mbps * 1e6 / 8.0;
   } else if (axis == "tier_split") {
      cell.instance.infrastructure = split_tiers(base.infrastructure, value);
   } else {
      throw InputError("unknown sweep axis '" + axis + "'");
   }
   return cell;
}
//---------------------------------------------------------------------------
std::optional<PhysicalPlan> run_strategy(const Instance& instance, Strategy s, const SweepOptions& opts,
                                         std::optional<double> edge_uplink_cap) {
   const auto& wf = instance.workflow;
   const auto& infra = instance.infrastructure;
   const auto& obj = instance.objectives;
   CostOptions cost = opts.optimize.assign.cost;
   cost.percentile = obj.percentile;
   cost.edge_uplink_cap = edge_uplink_cap;
   switch (s) {
      case Strategy::Jb: {
         auto o = opts.optimize;
         o.assign.cost = cost;
         return optimize(instance, o).plan;
      }
      case Strategy::Bf: {
         auto p = best_fit(wf, infra, instance.profiles, obj.target_throughput, cost);
         if (p && !(end_to_end_accuracy(wf, p->selection, instance.profiles).value_or(-1) >= obj.target_accuracy))
            return std::nullopt;
         return p;
      }
      case Strategy::Ff: {
         auto p = first_fit(wf, infra, instance.profiles, obj.target_throughput, cost);
         if (p && !(end_to_end_accuracy(wf, p->selection, instance.profiles).value_or(-1) >= obj.target_accuracy))
            return std::nullopt;
         return p;
      }
      case Strategy::Lb: {
         auto cfg = opts.oracle;
         cfg.charge = cost.charge;
         cfg.percentile = obj.percentile;
         cfg.edge_uplink_cap = edge_uplink_cap;
         return brute_force(wf, infra, instance.profiles, obj.target_accuracy, obj.target_throughput, cfg).plan;
      }
   }
   return std::nullopt;
}
//---------------------------------------------------------------------------
std::vector<SweepRow> run_sweep(const Instance& base, const SweepSpec& grid, const SweepOptions& opts) {
   if (grid.values.empty()) throw InputError("sweep needs at least one value");
   if (grid.strategies.empty()) throw InputError("sweep needs at least one strategy");

   std::vector<SweepRow> rows;
   std::vector<SweepCell> cells;
   for (const auto& v : grid.values) {
      cells.push_back(apply_axis(base, grid.axis, v));
      for (auto s : grid.strategies) rows.push_back({grid.axis, v, s, false, {}, 0});
   }
   auto run = [&](std::size_t i) {
      auto& row = rows[i];
      const auto& cell = cells[i / grid.strategies.size()];
      auto start = std::chrono::steady_clock::now();
      auto plan = run_strategy(cell.instance, row.strategy, opts, cell.edge_uplink_cap);
      row.qo_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      row.feasible = plan.has_value();
      if (plan) row.cost = plan->cost;
   };
   if (opts.jobs <= 1) {
      for (std::size_t i = 0; i < rows.size(); ++i) run(i);
      return rows;
   }
   // static striping keeps at most `jobs` threads alive
   std::vector<std::future<void>> tasks;
   const auto jobs = static_cast<std::size_t>(opts.jobs);
   for (std::size_t j = 0; j < jobs; ++j)
      tasks.push_back(std::async(std::launch::async, [&, j] {
         for (std::size_t i = j; i < rows.size(); i += jobs) run(i);
      }));
   for (auto& t : tasks) t.get();
   return rows;
}
//---------------------------------------------------------------------------
std::string sweep_csv(const std::vector<SweepRow>& rows) {
   std::ostringstream os;
   os.precision(10);
   os << "axis,value,strategy,feasible,cost_compute,cost_network,cost_total,qo_time_ms\n";
   for (const auto& r : rows) {
      os << r.axis << ',' << r.value << ',' << to_string(r.strategy) << ',' << (r.feasible ? 1 : 0) << ',';
      if (r.feasible) os << r.cost.compute << ',' << r.cost.network << ',' << r.cost.total;
      else os << ",,";
      os << ',' << r.qo_time_ms << '\n';
   }
   return os.str();
}
//---------------------------------------------------------------------------
}  // namespace hetplan

// One PASS/FAIL line per acceptance criterion. Exit status is the failure count.
#include "hetplan/baselines.hpp"
#include "hetplan/model_selection.hpp"
#include "hetplan/oracle.hpp"
#include "hetplan/simulator.hpp"
#include "support/cases.hpp"
#include "support/random_instance.hpp"
#include "support/selection_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace hetplan;
using Clock = std::chrono::steady_clock;

namespace {
//---------------------------------------------------------------------------
// tolerances
constexpr double kLookupMs = 1.0;
constexpr int kRandomInstances = 200;
constexpr double kDominanceBudgetS = 120.0;
constexpr double kNearGap = 0.01;
constexpr double kNearShare = 0.85;
constexpr double kSimRateShare = 0.98;
constexpr double kSimUtilization = 0.95;
constexpr double kSimNetworkRel = 0.01;
constexpr double kSimBudgetS = 10.0;
constexpr double kOptimizeBudgetMs = 100.0;
constexpr double kBruteBudgetS = 10.0;
//---------------------------------------------------------------------------
int failures = 0;
//---------------------------------------------------------------------------
void report(const std::string& name, bool ok, const std::string& detail) {
   std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
   if (!ok) ++failures;
}
//---------------------------------------------------------------------------
double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }
//---------------------------------------------------------------------------
std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
   char buf[256];
   std::snprintf(buf, sizeof buf, f, a, b, c, d);
   return buf;
}
//---------------------------------------------------------------------------
Instance shipped(const char* name) { return load_instance(std::string(HETPLAN_DATA_DIR) + "/" + name); }
//---------------------------------------------------------------------------
std::optional<PhysicalPlan> lower_bound(const Instance& inst, bool enforce_a2 = true) {
   OracleConfig cfg;
   cfg.enforce_a2 = enforce_a2;
   return brute_force(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_accuracy,
                      inst.objectives.target_throughput, cfg)
       .plan;
}
//---------------------------------------------------------------------------
void accuracy_lookup() {
   AccuracyProfile p;
   p.arity = 2;
   p.rows = {{{0.60, 0.50}, 0.55}, {{0.50, 0.60}, 0.60}, {{0.70, 0.90}, 0.65}};
   auto t0 = Clock::now();
   auto v = estimate_output_accuracy(p, {0.55, 0.83});
   double ms = seconds_since(t0) * 1e3;
   bool ok = v && *v == 0.60 && ms < kLookupMs;
   report("accuracy_lookup", ok, fmt("query (0.55,0.83) -> %.4f, %.4f ms (exact 0.60, < 1 ms)", v.value_or(-1), ms));
}
//---------------------------------------------------------------------------
void tcoeff() {
   InfrastructureSpec infra;
   infra.tiers = {{"edge", 5}, {"hub", 2}, {"cloud", 1}};
   infra.worker_types = {{"cpu", 1}};
   infra.workers = {{"c", "cpu", 3, 0}, {"h", "cpu", 2, 0}, {"e", "cpu", 1, 0}};
   int c = throughput_coefficient("c", infra), h = throughput_coefficient("h", infra),
       e = throughput_coefficient("e", infra);
   report("tcoeff", c == 1 && h == 2 && e == 10, fmt("cloud/hub/edge = %.0f/%.0f/%.0f (exact 1/2/10)", c, h, e));
}
//---------------------------------------------------------------------------
void dominance_and_near_optimality() {
   int violations = 0, feasible = 0, within = 0, jb_missing = 0;
   double worst = 0;
   auto t0 = Clock::now();
   for (int seed = 1; seed <= kRandomInstances; ++seed) {
      auto inst = hetplan::testing::random_instance(static_cast<std::uint64_t>(seed));
      auto jb = optimize(inst);
      auto lb = lower_bound(inst);
      if (jb.plan && (!lb || jb.plan->cost.total < lb->cost.total * (1 - 1e-9))) ++violations;
      if (!lb) continue;
      ++feasible;
      if (!jb.plan) {
         ++jb_missing;
         continue;
      }
      double gap = lb->cost.total > 0 ? jb.plan->cost.total / lb->cost.total - 1 : 0;
      worst = std::max(worst, gap);
      if (gap <= kNearGap) ++within;
   }
   double elapsed = seconds_since(t0);
   report("lb_dominance", violations == 0 && elapsed < kDominanceBudgetS,
          fmt("%.0f instances, %.0f violations, %.2f s (0 violations, < 120 s)", kRandomInstances, violations,
              elapsed));
   double share = feasible ? static_cast<double>(within) / feasible : 0;
   report("near_optimality", share >= kNearShare,
          fmt("%.0f/%.0f feasible within 1%% of LB = %.1f%% (>= 85%%)", within, feasible, share * 100) +
              fmt(", worst gap %.3f, optimizer infeasible on %.0f", worst, jb_missing));
}
//---------------------------------------------------------------------------
void selection_exactness() {
   int mismatches = 0, compared = 0;
   for (int seed = 1; seed <= kRandomInstances; ++seed) {
      auto inst = hetplan::testing::random_instance(static_cast<std::uint64_t>(seed));
      SelectionOptions o;
      o.top_k = 3;
      o.beam_width = std::max(o.top_k, static_cast<int>(hetplan::testing::combination_count(inst.workflow)));
      auto got = select_models(inst.workflow, inst.profiles, inst.objectives.target_accuracy, o);
      auto want = hetplan::testing::cheapest_selections(inst.workflow, inst.profiles, inst.objectives.target_accuracy,
                                                        static_cast<std::size_t>(o.top_k));
      bool same = got.size() == want.size();
      for (std::size_t i = 0; same && i < got.size(); ++i)
         same = selection_key(complete_with_identity(inst.workflow, got[i].selection)) == selection_key(want[i].first);
      if (!same) ++mismatches;
      ++compared;
   }
   report("selection_exactness", mismatches == 0,
          fmt("%.0f instances, %.0f top-3 mismatches vs enumeration (exact)", compared, mismatches));
}
//---------------------------------------------------------------------------
void a2_relaxation() {
   auto inst = hetplan::testing::a2_relaxation_case();
   auto enforced = lower_bound(inst, true);
   auto relaxed = lower_bound(inst, false);
   auto jb = optimize(inst);
   if (!enforced || !relaxed || !jb.plan) {
      report("a2_relaxation", false, "a plan is missing");
      return;
   }
   double e = enforced->cost.total, r = relaxed->cost.total, j = jb.plan->cost.total;
   bool ok = r < e && (j - r) > (j - e);
   report("a2_relaxation", ok,
          fmt("LB relaxed %.4f < enforced %.4f; JB %.4f gap to relaxed %.4f", r, e, j, j - r) +
              fmt(" > gap to enforced %.4f", j - e));
}
//---------------------------------------------------------------------------
void overprovisioning() {
   auto inst = hetplan::testing::overprovision_case();
   auto lb = lower_bound(inst);
   auto jb = optimize(inst);
   bool ok = lb && jb.plan && jb.plan->cost.total > lb->cost.total;
   report("overprovisioning", ok,
          fmt("JB %.4f > LB %.4f (strict)", jb.plan ? jb.plan->cost.total : -1, lb ? lb->cost.total : -1));
}
//---------------------------------------------------------------------------
void baseline_shape() {
   auto inst = hetplan::testing::baseline_shape_case();
   const double t = inst.objectives.target_throughput;
   auto bf = best_fit(inst.workflow, inst.infrastructure, inst.profiles, t);
   auto ff = first_fit(inst.workflow, inst.infrastructure, inst.profiles, t);
   if (!bf || !ff) {
      report("baseline_shape", false, "a baseline is infeasible");
      return;
   }
   bool ok = bf->cost.network <= ff->cost.network && ff->cost.compute <= bf->cost.compute;
   report("baseline_shape", ok,
          fmt("network BF %.4f <= FF %.4f, compute FF %.4f <= BF %.4f", bf->cost.network, ff->cost.network,
              ff->cost.compute, bf->cost.compute));
}
//---------------------------------------------------------------------------
double bottleneck_utilization(const Instance& inst, const PhysicalPlan& plan) {
   auto model = make_cost_model(inst, plan.selection, {});
   double u = 0;
   for (const auto& [node, workers] : plan.assignment)
      if (!workers.empty()) u = std::max(u, model.rate(node) / model.total_capacity(node, workers));
   return u;
}
//---------------------------------------------------------------------------
void simulator_fidelity() {
   double worst_rate = 1e9, worst_net = 0, slowest = 0;
   int runs = 0;
   auto simulate = [&](const Instance& inst, const PhysicalPlan& plan) {
      // jittered run with load capped at 95% of the bottleneck
      SimConfig jit;
      jit.latency_jitter = 0.2;
      jit.load_factor = std::min(1.0, kSimUtilization / bottleneck_utilization(inst, plan));
      auto t0 = Clock::now();
      auto r = run_simulation(inst, plan, jit);
      slowest = std::max(slowest, seconds_since(t0));
      worst_rate = std::min(worst_rate, r.sink_achieved / r.sink_target);

      SimConfig exact;
      t0 = Clock::now();
      auto z = run_simulation(inst, plan, exact);
      slowest = std::max(slowest, seconds_since(t0));
      if (plan.cost.network > 0)
         worst_net = std::max(worst_net, std::abs(z.accrued_cost.network / plan.cost.network - 1));
      else
         worst_net = std::max(worst_net, z.accrued_cost.network);
      runs += 2;
   };
   for (const char* f : {"tiny.json", "small.json", "medium.json"}) {
      auto inst = shipped(f);
      if (auto jb = optimize(inst); jb.plan) simulate(inst, *jb.plan);
      auto bf = best_fit(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_throughput);
      if (bf) simulate(inst, *bf);
   }
   int sampled = 0;
   for (std::uint64_t seed = 1; seed <= 40 && sampled < 10; ++seed) {
      auto inst = hetplan::testing::random_instance(seed);
      if (auto jb = optimize(inst); jb.plan) {
         simulate(inst, *jb.plan);
         ++sampled;
      }
   }
   bool ok = worst_rate >= kSimRateShare && worst_net <= kSimNetworkRel && slowest < kSimBudgetS && runs > 0;
   report("simulator_fidelity", ok,
          fmt("%.0f runs, worst sink rate %.4f of target (>= 0.98 at <= 95%% util), worst network error %.5f (<= 1%%)",
              runs, worst_rate, worst_net) +
              fmt(", slowest run %.2f s (< 10 s)", slowest));
}
//---------------------------------------------------------------------------
void determinism() {
   auto inst = shipped("medium.json");
   auto plan_text = [&] {
      OptimizeOptions o;
      o.assign.seed = 7;
      auto r = optimize(inst, o);
      return dump(plan_file_to_json({"jb", 7, "full-hour", *r.plan, inst}));
   };
   auto a = plan_text(), b = plan_text();
   auto plan = plan_file_from_json(nlohmann::json::parse(a)).plan;
   SimConfig cfg;
   cfg.seed = 7;
   cfg.latency_jitter = 0.3;
   cfg.duration = 120;
   auto ra = dump(report_to_json(run_simulation(inst, plan, cfg), cfg));
   auto rb = dump(report_to_json(run_simulation(inst, plan, cfg), cfg));
   report("determinism", a == b && ra == rb,
          std::string("plan files ") + (a == b ? "identical" : "differ") + ", sim reports " +
              (ra == rb ? "identical" : "differ") + " (byte-identical)");
}
//---------------------------------------------------------------------------
void performance() {
   auto medium = shipped("medium.json");
   optimize(medium);  // warm caches
   double best_ms = 1e9;
   for (int i = 0; i < 3; ++i) best_ms = std::min(best_ms, optimize(medium).elapsed.count());
   auto small = shipped("small.json");
   auto t0 = Clock::now();
   auto lb = lower_bound(small);
   double brute_s = seconds_since(t0);
   bool ok = best_ms < kOptimizeBudgetMs && brute_s < kBruteBudgetS && lb.has_value();
   report("performance", ok,
          fmt("optimize medium (%.0f workers, %.0f nodes) %.2f ms (< 100 ms); brute force small %.3f s (< 10 s)",
              static_cast<double>(medium.infrastructure.workers.size()),
              static_cast<double>(medium.workflow.nodes.size()), best_ms, brute_s));
}
//---------------------------------------------------------------------------
}

int main() {
   const std::vector<std::function<void()>> checks{accuracy_lookup, tcoeff,           dominance_and_near_optimality,
                                                   selection_exactness, a2_relaxation, overprovisioning,
                                                   baseline_shape,  simulator_fidelity, determinism,
                                                   performance};
   for (const auto& c : checks) {
      try {
         c();
      } catch (const std::exception& e) {
         report("exception", false, e.what());
      }
   }
   return failures;
}

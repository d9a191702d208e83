#include "doctest.h"

#include "hetplan/baselines.hpp"
#include "hetplan/model_selection.hpp"
#include "hetplan/oracle.hpp"
#include "hetplan/simulator.hpp"
#include "support/random_instance.hpp"
#include "support/selection_oracle.hpp"

using namespace hetplan;
using hetplan::testing::random_instance;

namespace {
constexpr std::uint64_t kSeeds = 60;
}

TEST_CASE("random instances are valid and round-trip through json") {
   for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      CHECK(inst.violations().empty());
      auto doc = instance_to_json(inst);
      CHECK(dump(instance_to_json(instance_from_json(doc))) == dump(doc));
   }
}

TEST_CASE("every selection returned reaches the target") {
   for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      for (const auto& r : select_models(inst.workflow, inst.profiles, inst.objectives.target_accuracy)) {
         bool ok = false;
         double acc = hetplan::testing::forward_accuracy(inst.workflow, inst.profiles,
                                                         complete_with_identity(inst.workflow, r.selection), ok);
         REQUIRE(ok);
         CHECK(acc >= inst.objectives.target_accuracy);
         auto lib = end_to_end_accuracy(inst.workflow, r.selection, inst.profiles);
         REQUIRE(lib.has_value());
         CHECK(*lib == doctest::Approx(acc));
      }
   }
}

TEST_CASE("optimizer plans are sound and never beat the lower bound") {
   for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      auto jb = optimize(inst);
      auto lb = brute_force(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_accuracy,
                            inst.objectives.target_throughput);
      if (!jb.plan) continue;
      REQUIRE(lb.plan.has_value());
      auto model = make_cost_model(inst, jb.plan->selection, {});
      CHECK(check_plan(model, jb.plan->assignment).empty());
      auto again = plan_total_cost(model, jb.plan->assignment);
      CHECK(again.total == doctest::Approx(jb.plan->cost.total));
      CHECK(jb.plan->cost.total >= lb.plan->cost.total * (1 - 1e-9));
      bool ok = false;
      CHECK(hetplan::testing::forward_accuracy(inst.workflow, inst.profiles, jb.plan->selection, ok) >=
            inst.objectives.target_accuracy);
   }
}

TEST_CASE("relaxing one-way flow never raises the bound") {
   OracleConfig relaxed;
   relaxed.enforce_a2 = false;
   for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      auto e = brute_force(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_accuracy,
                           inst.objectives.target_throughput);
      auto r = brute_force(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_accuracy,
                           inst.objectives.target_throughput, relaxed);
      if (e.plan) {
         REQUIRE(r.plan.has_value());
         CHECK(r.plan->cost.total <= e.plan->cost.total * (1 + 1e-12));
      }
   }
}

TEST_CASE("utilization charging never costs more than full hours") {
   for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      OracleConfig util;
      util.charge = ChargeMode::Utilization;
      auto f = brute_force(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_accuracy,
                           inst.objectives.target_throughput);
      auto u = brute_force(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_accuracy,
                           inst.objectives.target_throughput, util);
      CHECK(f.plan.has_value() == u.plan.has_value());
      if (f.plan) CHECK(u.plan->cost.total <= f.plan->cost.total * (1 + 1e-12));
   }
}

TEST_CASE("enumeration estimate grows with every added worker") {
   for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      const double before = enumeration_estimate(inst.workflow, inst.infrastructure, inst.profiles,
                                                 inst.objectives.target_accuracy, {});
      inst.infrastructure.workers.push_back({"extra", "gpu", 1, 0});
      const double after = enumeration_estimate(inst.workflow, inst.infrastructure, inst.profiles,
                                                inst.objectives.target_accuracy, {});
      CHECK(after >= before);
   }
}

TEST_CASE("baseline plans pass the plan checks they claim") {
   for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      const double t = inst.objectives.target_throughput;
      if (auto bf = best_fit(inst.workflow, inst.infrastructure, inst.profiles, t)) {
         CHECK(bf->a2_violations.empty());
         CHECK(check_plan(make_cost_model(inst, bf->selection, {}), bf->assignment).empty());
      }
      if (auto ff = first_fit(inst.workflow, inst.infrastructure, inst.profiles, t)) {
         CostOptions relaxed;
         relaxed.enforce_a2 = false;
         auto model = make_cost_model(inst, ff->selection, relaxed);
         CHECK(check_plan(model, ff->assignment).empty());
         CHECK(model.downward_edges(ff->assignment) == ff->a2_violations);
         CHECK(plan_total_cost(model, ff->assignment).total == doctest::Approx(ff->cost.total));
      }
   }
}

TEST_CASE("optimizer plans simulate at their target rate") {
   int simulated = 0;
   for (std::uint64_t seed = 1; seed <= kSeeds && simulated < 15; ++seed) {
      CAPTURE(seed);
      auto inst = random_instance(seed);
      auto jb = optimize(inst);
      if (!jb.plan) continue;
      ++simulated;
      SimConfig cfg;
      cfg.duration = 60;
      auto r = run_simulation(inst, *jb.plan, cfg);
      CHECK(r.sink_achieved >= 0.98 * r.sink_target);
      CHECK(r.fifo_violations == 0);
   }
   CHECK(simulated > 0);
}

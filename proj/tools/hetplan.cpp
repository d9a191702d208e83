// hetplan: plan, compare and simulate ML workflows on tiered infrastructure.

#include "hetplan/baselines.hpp"
#include "hetplan/instance.hpp"
#include "hetplan/model_selection.hpp"
#include "hetplan/oracle.hpp"
#include "hetplan/simulator.hpp"
#include "hetplan/sweep.hpp"
#include "hetplan/worker_assignment.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

using namespace hetplan;

namespace {
//---------------------------------------------------------------------------
enum Exit { kOk = 0, kInputError = 1, kInfeasible = 2, kGuard = 3 };
//---------------------------------------------------------------------------
struct Infeasible : std::runtime_error {
   using std::runtime_error::runtime_error;
};
//---------------------------------------------------------------------------
std::uint64_t default_seed() {
   if (const char* env = std::getenv("HETPLAN_SEED")) {
      try {
         return std::stoull(env);
      } catch (const std::exception&) {
         throw InputError(std::string("HETPLAN_SEED is not an integer: ") + env);
      }
   }
   return 1;
}
//---------------------------------------------------------------------------
/// Flags shared by every planning subcommand.
struct PlanFlags {
   std::string instance;
   std::string out;
   std::optional<double> accuracy;
   std::optional<double> throughput;
   std::optional<double> bandwidth_mbps;
   std::string charge = "full-hour";
   std::uint64_t seed = 1;

   void add(CLI::App* cmd) {
      cmd->add_option("instance", instance, "Instance JSON file")->required()->check(CLI::ExistingFile);
      cmd->add_option("-o,--out", out, "Write the plan file here");
      cmd->add_option("--accuracy", accuracy, "Override the target end-to-end accuracy");
      cmd->add_option("--throughput", throughput, "Override the target input throughput (items/s)");
      cmd->add_option("--bandwidth-cap", bandwidth_mbps, "Outbound cross-tier cap per edge device, Mbps");
      cmd->add_option("--charge-mode", charge, "full-hour or utilization")
         ->check(CLI::IsMember({"full-hour", "utilization"}));
      cmd->add_option("--seed", seed, "Random seed (default: $HETPLAN_SEED or 1)");
   }

   Instance load() const {
      auto inst = load_instance(instance);
      if (accuracy) inst.objectives.target_accuracy = *accuracy;
      if (throughput) inst.objectives.target_throughput = *throughput;
      auto problems = inst.violations();
      if (!problems.empty()) {
         std::string msg = "invalid instance:";
         for (const auto& p : problems) msg += "\n  " + p;
         throw InputError(msg);
      }
      return inst;
   }

   CostOptions cost(const Instance& inst) const {
      CostOptions c;
      c.charge = charge_mode_from_string(charge);
      c.percentile = inst.objectives.percentile;
      if (bandwidth_mbps) c.edge_uplink_cap = *bandwidth_mbps * 1e6 / 8.0;
      return c;
   }
};
//---------------------------------------------------------------------------
void print_plan(const std::string& strategy, const PhysicalPlan& plan, std::optional<double> qo_ms) {
   std::cout << std::fixed << std::setprecision(6);
   std::cout << "strategy   " << strategy << "\n";
   std::cout << "selection  " << (plan.selection.empty() ? "-" : selection_key(plan.selection)) << "\n";
   for (const auto& [node, workers] : plan.assignment) {
      std::cout << "  " << node << " <-";
      for (const auto& w : workers) std::cout << ' ' << w;
      std::cout << "\n";
   }
   std::cout << "compute    " << plan.cost.compute << " $/h\n";
   std::cout << "network    " << plan.cost.network << " $/h\n";
   std::cout << "total      " << plan.cost.total << " $/h\n";
   if (!plan.a2_violations.empty()) {
      std::cout << "downward   ";
      for (const auto& e : plan.a2_violations) std::cout << e << ' ';
      std::cout << "\n";
   }
   if (qo_ms) std::cout << "qo_time    " << std::setprecision(3) << *qo_ms << " ms\n";
}
//---------------------------------------------------------------------------
void emit_plan(const PlanFlags& f, const std::string& strategy, const PhysicalPlan& plan, const Instance& inst,
               std::optional<double> qo_ms) {
   print_plan(strategy, plan, qo_ms);
   if (f.out.empty()) return;
   PlanFile file{strategy, f.seed, f.charge, plan, inst};
   write_text_file(f.out, dump(plan_file_to_json(file)));
}
//---------------------------------------------------------------------------
/// Tells accuracy and throughput failures apart for baselines.
[[noreturn]] void baseline_infeasible(const Instance& inst) {
   auto sel = most_accurate_selection(inst.workflow, inst.profiles);
   auto acc = end_to_end_accuracy(inst.workflow, sel, inst.profiles);
   if (!acc || *acc < inst.objectives.target_accuracy)
      throw Infeasible("target accuracy unreachable with the most accurate variants");
   throw Infeasible("target throughput unreachable");
}
//---------------------------------------------------------------------------
int cmd_validate(const std::string& path) {
   auto inst = load_instance(path);
   auto problems = inst.violations();
   for (const auto& p : problems) std::cout << p << "\n";
   if (!problems.empty()) return kInputError;
   std::cout << "ok: " << inst.workflow.nodes.size() << " nodes, " << inst.workflow.edges.size() << " edges, "
             << inst.infrastructure.workers.size() << " workers, " << inst.infrastructure.tier_count() << " tiers\n";
   return kOk;
}
//---------------------------------------------------------------------------
}

//---------------------------------------------------------------------------
int main(int argc, char** argv) {
   CLI::App app{"Cost-based planner and simulator for ML workflows on tiered infrastructure"};
   app.require_subcommand(1);

   std::string validate_path;
   auto* validate_cmd = app.add_subcommand("validate", "Check an instance file");
   validate_cmd->add_option("instance", validate_path, "Instance JSON file")->required()->check(CLI::ExistingFile);

   PlanFlags opt_flags;
   int beam_ms = 8, top_k = 3, beam_wa = 6, orderings = 4, jobs = 1;
   auto* optimize_cmd = app.add_subcommand("optimize", "Select models and assign workers");
   opt_flags.add(optimize_cmd);
   optimize_cmd->add_option("--beam-ms", beam_ms, "Model-selection beam width")->check(CLI::PositiveNumber);
   optimize_cmd->add_option("--top-k", top_k, "Selections passed to worker assignment")->check(CLI::PositiveNumber);
   optimize_cmd->add_option("--beam-wa", beam_wa, "Worker-assignment beam width")->check(CLI::PositiveNumber);
   optimize_cmd->add_option("--orderings", orderings, "Topological orderings tried")->check(CLI::PositiveNumber);
   optimize_cmd->add_option("--jobs", jobs, "Threads for the candidate selections")->check(CLI::PositiveNumber);

   PlanFlags base_flags;
   std::string strategy;
   auto* baseline_cmd = app.add_subcommand("baseline", "Best Fit or First Fit plan");
   base_flags.add(baseline_cmd);
   baseline_cmd->add_option("--strategy", strategy, "bf or ff")->required()->check(CLI::IsMember({"bf", "ff"}));

   PlanFlags lb_flags;
   bool relax_a2 = false;
   double max_enum = 1e7;
   auto* lb_cmd = app.add_subcommand("lower-bound", "Exhaustive minimum-cost plan");
   lb_flags.add(lb_cmd);
   lb_cmd->add_flag("--relax-a2", relax_a2, "Allow traffic to flow to lower tiers");
   lb_cmd->add_option("--max-enumeration", max_enum, "Refuse larger search spaces")->check(CLI::PositiveNumber);

   std::string plan_path, report_path, series_path, mode = "virtual-time";
   std::optional<std::string> sim_percentile, sim_charge;
   SimConfig sim;
   std::uint64_t sim_seed = 1;
   auto* sim_cmd = app.add_subcommand("simulate", "Run a plan file in the simulator");
   sim_cmd->add_option("--plan", plan_path, "Plan file from optimize/baseline/lower-bound")->required()->check(CLI::ExistingFile);
   sim_cmd->add_option("--duration", sim.duration, "Simulated seconds")->check(CLI::PositiveNumber);
   sim_cmd->add_option("--percentile", sim_percentile, "Latency percentile: P50, P75 or P90")
      ->check(CLI::IsMember({"P50", "P75", "P90"}));
   sim_cmd->add_option("--seed", sim_seed, "Random seed (default: $HETPLAN_SEED or 1)");
   sim_cmd->add_option("--jitter", sim.latency_jitter, "Service-time coefficient of variation")->check(CLI::NonNegativeNumber);
   sim_cmd->add_option("--mode", mode, "virtual-time or wall-clock")->check(CLI::IsMember({"virtual-time", "wall-clock"}));
   sim_cmd->add_option("--time-scale", sim.time_scale, "Wall seconds per simulated second (wall-clock mode)");
   sim_cmd->add_option("--queue-capacity", sim.queue_capacity, "Items per bounded queue")->check(CLI::PositiveNumber);
   sim_cmd->add_option("--load-factor", sim.load_factor, "Multiplier on source rates")->check(CLI::PositiveNumber);
   sim_cmd->add_option("--relay-per-message", sim.relay.per_message_s, "Relay seconds per message");
   sim_cmd->add_option("--relay-per-byte", sim.relay.per_byte_s, "Relay seconds per byte");
   sim_cmd->add_option("--relay-relative", sim.relay.relative, "Relay time as a fraction of mean service time");
   sim_cmd->add_option("--charge-mode", sim_charge, "full-hour or utilization (default: from the plan)")
      ->check(CLI::IsMember({"full-hour", "utilization"}));
   sim_cmd->add_flag("--drain", sim.drain, "Stop sources at the end and run until empty");
   sim_cmd->add_option("--report", report_path, "Write the JSON report here (default: stdout)");
   sim_cmd->add_option("--series", series_path, "Write the CSV time series here");

   PlanFlags sweep_flags;
   std::string axis, values_arg, strategies_arg = "jb,bf,ff";
   int sweep_jobs = 1;
   auto* sweep_cmd = app.add_subcommand("sweep", "Sensitivity sweep over one axis");
   sweep_flags.add(sweep_cmd);
   sweep_cmd->add_option("--axis", axis, "input_throughput, target_accuracy, traffic_price_scale, bandwidth_cap, tier_split")
      ->required()
      ->check(CLI::IsMember({"input_throughput", "target_accuracy", "traffic_price_scale", "bandwidth_cap", "tier_split"}));
   sweep_cmd->add_option("--values", values_arg, "Comma-separated axis values")->required();
   sweep_cmd->add_option("--strategies", strategies_arg, "Comma-separated subset of jb,bf,ff,lb");
   sweep_cmd->add_option("--jobs", sweep_jobs, "Cells run in parallel")->check(CLI::PositiveNumber);

   try {
      const auto seed = default_seed();
      for (auto* f : {&opt_flags, &base_flags, &lb_flags, &sweep_flags}) f->seed = seed;
      sim_seed = seed;
      app.parse(argc, argv);
   } catch (const CLI::ParseError& e) {
      int code = app.exit(e);
      return code == 0 ? kOk : kInputError;
   } catch (const InputError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kInputError;
   }

   try {
      if (*validate_cmd) return cmd_validate(validate_path);

      if (*optimize_cmd) {
         auto inst = opt_flags.load();
         OptimizeOptions o;
         o.selection.beam_width = beam_ms;
         o.selection.top_k = top_k;
         if (o.selection.beam_width < o.selection.top_k) o.selection.beam_width = o.selection.top_k;
         o.assign.beam_width = beam_wa;
         o.assign.orderings = orderings;
         o.assign.seed = opt_flags.seed;
         o.assign.cost = opt_flags.cost(inst);
         o.jobs = jobs;
         auto r = optimize(inst, o);
         if (r.status == PlanStatus::AccuracyUnreachable) throw Infeasible("target accuracy unreachable");
         if (r.status == PlanStatus::ThroughputUnreachable) throw Infeasible("target throughput unreachable");
         emit_plan(opt_flags, "jb", *r.plan, inst, r.elapsed.count());
         return kOk;
      }

      if (*baseline_cmd) {
         auto inst = base_flags.load();
         auto cost = base_flags.cost(inst);
         auto start = std::chrono::steady_clock::now();
         auto plan = strategy == "bf" ? best_fit(inst.workflow, inst.infrastructure, inst.profiles,
                                                 inst.objectives.target_throughput, cost)
                                      : first_fit(inst.workflow, inst.infrastructure, inst.profiles,
                                                  inst.objectives.target_throughput, cost);
         std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
         if (!plan) baseline_infeasible(inst);
         auto acc = end_to_end_accuracy(inst.workflow, plan->selection, inst.profiles);
         if (!acc || *acc < inst.objectives.target_accuracy) baseline_infeasible(inst);
         emit_plan(base_flags, strategy, *plan, inst, ms.count());
         return kOk;
      }

      if (*lb_cmd) {
         auto inst = lb_flags.load();
         auto cost = lb_flags.cost(inst);
         OracleConfig cfg;
         cfg.enforce_a2 = !relax_a2;
         cfg.max_enumeration = max_enum;
         cfg.charge = cost.charge;
         cfg.percentile = cost.percentile;
         cfg.edge_uplink_cap = cost.edge_uplink_cap;
         auto start = std::chrono::steady_clock::now();
         auto r = brute_force(inst.workflow, inst.infrastructure, inst.profiles, inst.objectives.target_accuracy,
                              inst.objectives.target_throughput, cfg);
         std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
         if (!r.plan) {
            if (r.feasible_selections == 0) throw Infeasible("target accuracy unreachable");
            throw Infeasible("target throughput unreachable");
         }
         if (relax_a2) {
            CostOptions relaxed = cost;
            relaxed.enforce_a2 = false;
            r.plan->a2_violations = make_cost_model(inst, r.plan->selection, relaxed).downward_edges(r.plan->assignment);
         }
         emit_plan(lb_flags, relax_a2 ? "lb-relaxed" : "lb", *r.plan, inst, ms.count());
         return kOk;
      }

      if (*sim_cmd) {
         auto file = plan_file_from_json(read_json_file(plan_path));
         sim.seed = sim_seed;
         sim.mode = sim_mode_from_string(mode);
         sim.latency_percentile = sim_percentile ? percentile_from_string(*sim_percentile) : file.instance.objectives.percentile;
         sim.charge = charge_mode_from_string(sim_charge.value_or(file.charge_mode));
         auto report = run_simulation(file.instance, file.plan, sim);
         auto text = dump(report_to_json(report, sim));
         if (report_path.empty()) std::cout << text;
         else write_text_file(report_path, text);
         if (!series_path.empty()) write_text_file(series_path, time_series_csv(report));
         return kOk;
      }

      if (*sweep_cmd) {
         auto inst = sweep_flags.load();
         SweepSpec grid;
         grid.axis = axis;
         std::stringstream vs(values_arg), ss(strategies_arg);
         for (std::string v; std::getline(vs, v, ',');)
            if (!v.empty()) grid.values.push_back(v);
         for (std::string s; std::getline(ss, s, ',');)
            if (!s.empty()) grid.strategies.push_back(strategy_from_string(s));
         SweepOptions o;
         o.optimize.assign.seed = sweep_flags.seed;
         o.optimize.assign.cost = sweep_flags.cost(inst);
         o.oracle.charge = o.optimize.assign.cost.charge;
         o.jobs = sweep_jobs;
         auto csv = sweep_csv(run_sweep(inst, grid, o));
         if (sweep_flags.out.empty()) std::cout << csv;
         else write_text_file(sweep_flags.out, csv);
         return kOk;
      }
   } catch (const Infeasible& e) {
      std::cerr << "infeasible: " << e.what() << "\n";
      return kInfeasible;
   } catch (const EnumerationGuardError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kGuard;
   } catch (const InputError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kInputError;
   } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kInputError;
   }
   return kOk;
}

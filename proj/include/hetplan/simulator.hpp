#pragma once

#include "hetplan/instance.hpp"
#include "hetplan/worker_assignment.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace hetplan {

enum class SimMode { VirtualTime, WallClock };

std::string to_string(SimMode m);
SimMode sim_mode_from_string(const std::string& s);

/// Time a relay spends forwarding one message: a fixed part, a part
/// proportional to payload size, and a part proportional to the sending
/// operator's mean service time.
struct RelayCostModel {
   double per_message_s = 2e-5;
   double per_byte_s = 1e-9;
   double relative = 0.0;
};

struct SimConfig {
   /// Simulated seconds.
   double duration = 300.0;
   Percentile latency_percentile = Percentile::P75;
   /// Coefficient of variation of service times; 0 means deterministic.
   double latency_jitter = 0.0;
   SimMode mode = SimMode::VirtualTime;
   std::uint64_t seed = 1;
   std::size_t queue_capacity = 1024;
   RelayCostModel relay;
   double warmup_fraction = 0.1;
   /// Multiplies every source rate; values above 1 overload the plan.
   double load_factor = 1.0;
   /// Keep running after `duration` with sources stopped until every item has left.
   bool drain = false;
   /// Time-series sampling period, simulated seconds.
   double sample_interval = 1.0;
   ChargeMode charge = ChargeMode::FullHour;
   /// Wall-clock seconds per simulated second.
   double time_scale = 0.01;
};

struct NodeReport {
   double target_rate = 0;
   double achieved_rate = 0;
   double capacity = 0;
   std::size_t queue_high_watermark = 0;
   std::uint64_t processed = 0;
   /// Per processed item: relay time of its outputs over its service time.
   std::vector<double> overhead_exec;
   std::vector<double> overhead_network;
};

struct TimeSample {
   double time = 0;
   std::string node;
   double throughput = 0;
   std::size_t queue_length = 0;
};

struct SimReport {
   double duration = 0;
   double warmup = 0;
   std::string sink;
   double sink_target = 0;
   double sink_achieved = 0;
   std::map<std::string, NodeReport> nodes;
   /// $/hour over the measurement window.
   CostBreakdown accrued_cost;
   double network_bytes = 0;
   std::uint64_t fifo_violations = 0;
   std::uint64_t emitted_total = 0;
   std::uint64_t sink_total = 0;
   std::uint64_t in_flight = 0;
   std::vector<TimeSample> series;
};

struct OverheadSummary {
   double exec_p50 = 0, exec_p90 = 0;
   double network_p50 = 0, network_p90 = 0;
   double total_p50 = 0, total_p90 = 0;
};

/// Executes `plan` on the instance's infrastructure. Throws InputError when the
/// plan fails the capacity or placement checks.
SimReport run_simulation(const Instance& instance, const PhysicalPlan& plan, const SimConfig& cfg = {});

/// Relay overhead ratios per node, as fractions of service time.
std::map<std::string, OverheadSummary> measure_overhead(const SimReport& report);

nlohmann::json report_to_json(const SimReport& report, const SimConfig& cfg);
/// time_s,node,throughput,queue_length
std::string time_series_csv(const SimReport& report);

}  // namespace hetplan

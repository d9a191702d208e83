#pragma once

#include "hetplan/core_model.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hetplan {

enum class Percentile { P50, P75, P90 };

std::string to_string(Percentile p);
Percentile percentile_from_string(const std::string& s);

struct AccuracyRow {
   std::vector<double> input;
   double output = 0.0;
};

/// Input-accuracy to output-accuracy response of one model variant.
/// `input[i]` is the accuracy delivered by the i-th parent of the node.
struct AccuracyProfile {
   std::size_t arity = 0;
   std::vector<AccuracyRow> rows;
};

struct ModelVariant {
   std::string id;
   /// Inference latency on the reference worker, in milliseconds.
   double cost_proxy_ms = 0.0;
   double params_millions = 0.0;
   AccuracyProfile accuracy;
};

/// Profiled items/s at the three latency percentiles.
struct PercentileRates {
   std::array<double, 3> values{0.0, 0.0, 0.0};

   double at(Percentile p) const { return values[static_cast<std::size_t>(p)]; }
   static PercentileRates uniform(double v) { return {{v, v, v}}; }
};

/// t_u^w: throughput of a variant on a worker type. Absent entries mean the
/// worker type cannot run the variant.
class ThroughputTable {
public:
   void set(const std::string& key, const std::string& worker_type, PercentileRates rates);
   /// Items/s, 0 when absent.
   double get(const std::string& key, const std::string& worker_type, Percentile p) const;
   const std::map<std::pair<std::string, std::string>, PercentileRates>& entries() const { return table_; }

private:
   std::map<std::pair<std::string, std::string>, PercentileRates> table_;
};

/// Throughput-table key for a (node, variant) pair. Identity variants are
/// profiled per node; model variants are shared across nodes.
std::string throughput_key(const std::string& node, const std::string& variant);

struct ProfileSet {
   std::map<std::string, ModelVariant> variants;
   ThroughputTable throughput;

   const ModelVariant& variant(const std::string& id) const;
};

/// Checks profile arities against the workflow, accuracy ranges, throughput
/// signs and (unless `allow_non_monotone`) monotone consistency of rows.
std::vector<std::string> validate_profiles(const LogicalPlan& plan, const ProfileSet& profiles,
                                           bool allow_non_monotone);

/// Conservative output accuracy: the best output among rows whose input
/// vector is componentwise no higher than `input`. nullopt when no row applies.
std::optional<double> estimate_output_accuracy(const AccuracyProfile& profile, const std::vector<double>& input);

/// Pareto-minimal input vectors of the rows reaching `min_output`.
std::vector<std::vector<double>> required_input_accuracy(const AccuracyProfile& profile, double min_output);

/// Dollars per item for `variant` (throughput key) on `worker`; nullopt when
/// the worker type cannot run it.
std::optional<double> unit_compute_cost(const std::string& key, const std::string& worker,
                                        const InfrastructureSpec& infra, const ThroughputTable& tput,
                                        Percentile p);

/// Number of locations between the worker's tier and the root: the product of
/// locations_per_parent over tiers [tier(worker), root).
int throughput_coefficient(const std::string& worker, const InfrastructureSpec& infra);

/// Componentwise a <= b.
bool dominated_by(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hetplan

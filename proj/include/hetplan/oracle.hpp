#pragma once

#include "hetplan/core_model.hpp"
#include "hetplan/profiler.hpp"
#include "hetplan/worker_assignment.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>

namespace hetplan {

enum class SelectionMode { Joint, Fixed };

struct OracleConfig {
   bool enforce_a2 = true;
   /// Refuse instances whose estimated search space exceeds this.
   double max_enumeration = 1e7;
   SelectionMode selection_mode = SelectionMode::Joint;
   /// Used when selection_mode is Fixed.
   Selection fixed_selection;
   ChargeMode charge = ChargeMode::FullHour;
   Percentile percentile = Percentile::P75;
   /// Per-location outbound bytes/s of edge devices.
   std::optional<double> edge_uplink_cap;
};

class EnumerationGuardError : public std::runtime_error {
public:
   EnumerationGuardError(double estimate, double limit);
   double estimate() const { return estimate_; }

private:
   double estimate_;
};

struct OracleResult {
   std::optional<PhysicalPlan> plan;
   /// Search-space size the guard was checked against.
   double estimate = 0;
   /// Model selections meeting the accuracy target.
   std::size_t feasible_selections = 0;
   std::uint64_t leaves = 0;
};

/// Upper estimate of the number of complete assignments the oracle may visit:
/// summed over accuracy-feasible selections, the product over workers of
/// (1 + number of nodes the worker can run).
double enumeration_estimate(const LogicalPlan& plan, const InfrastructureSpec& infra, const ProfileSet& profiles,
                            double target_accuracy, const OracleConfig& cfg);

/// Exact minimum-cost plan over every accuracy-feasible selection and every
/// capacity-feasible disjoint worker assignment. Exhaustive branch and bound;
/// ties go to the lexicographically smallest (selection, assignment) key.
/// Throws EnumerationGuardError when the estimate exceeds the guard.
OracleResult brute_force(const LogicalPlan& plan, const InfrastructureSpec& infra, const ProfileSet& profiles,
                         double target_accuracy, double input_throughput, const OracleConfig& cfg = {});

}  // namespace hetplan

#pragma once

#include "hetplan/core_model.hpp"
#include "hetplan/profiler.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace hetplan {

struct Objectives {
   double target_accuracy = 0.0;
   /// Overall input rate (items/s) the partition must sustain.
   double target_throughput = 0.0;
   /// Profile column the optimizer reads.
   Percentile percentile = Percentile::P75;
};

/// One planning problem: workflow, model profiles, infrastructure, objectives.
struct Instance {
   LogicalPlan workflow;
   ProfileSet profiles;
   InfrastructureSpec infrastructure;
   Objectives objectives;
   bool allow_non_monotone = false;

   /// Combined structural and profile violations.
   std::vector<std::string> violations() const;
   /// Items/s each node must absorb for `selection` at the target input rate.
   std::map<std::string, double> rates(const Selection& selection) const;
};

/// Parses an instance document. Unknown keys are rejected. A string
/// "workflow.models" is read as a path to a separate profile file relative
/// to `base_dir`.
Instance instance_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json instance_to_json(const Instance& instance);

Instance load_instance(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Profile document: {"<variant>": {cost_proxy_ms, params_millions, accuracy, throughput}}.
ProfileSet profiles_from_json(const nlohmann::json& doc);
nlohmann::json profiles_to_json(const ProfileSet& profiles);

inline constexpr int kSchemaVersion = 1;

struct PlanFile {
   std::string strategy;
   std::uint64_t seed = 0;
   std::string charge_mode;
   PhysicalPlan plan;
   Instance instance;
};

nlohmann::json plan_file_to_json(const PlanFile& file);
PlanFile plan_file_from_json(const nlohmann::json& doc);

/// Serialized form written to disk: two-space indent, sorted keys, trailing newline.
std::string dump(const nlohmann::json& doc);

}  // namespace hetplan

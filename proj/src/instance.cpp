#include "hetplan/instance.hpp"

#include <fstream>
#include <sstream>

namespace hetplan {

using nlohmann::json;

namespace {
//---------------------------------------------------------------------------
void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
   if (!obj.is_object()) throw InputError(where + ": expected an object");
   for (const auto& [key, value] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw InputError(where + ": unknown key '" + key + "'");
   }
}
//---------------------------------------------------------------------------
const json& require(const json& obj, const char* key, const std::string& where) {
   auto it = obj.find(key);
   if (it == obj.end()) throw InputError(where + ": missing key '" + key + "'");
   return *it;
}
//---------------------------------------------------------------------------
double number(const json& v, const std::string& where) {
   if (!v.is_number()) throw InputError(where + ": expected a number");
   return v.get<double>();
}
//---------------------------------------------------------------------------
std::string text(const json& v, const std::string& where) {
   if (!v.is_string()) throw InputError(where + ": expected a string");
   return v.get<std::string>();
}
//---------------------------------------------------------------------------
int integer(const json& v, const std::string& where) {
   if (!v.is_number_integer()) throw InputError(where + ": expected an integer");
   return v.get<int>();
}
//---------------------------------------------------------------------------
PercentileRates rates_from_json(const json& v, const std::string& where) {
   if (v.is_number()) return PercentileRates::uniform(v.get<double>());
   check_keys(v, {"P50", "P75", "P90"}, where);
   PercentileRates r;
   r.values[0] = number(require(v, "P50", where), where + ".P50");
   r.values[1] = number(require(v, "P75", where), where + ".P75");
   r.values[2] = number(require(v, "P90", where), where + ".P90");
   return r;
}
//---------------------------------------------------------------------------
json rates_to_json(const PercentileRates& r) {
   if (r.values[0] == r.values[1] && r.values[1] == r.values[2]) return r.values[0];
   return json{{"P50", r.values[0]}, {"P75", r.values[1]}, {"P90", r.values[2]}};
}
//---------------------------------------------------------------------------
void throughput_from_json(ThroughputTable& table, const std::string& key, const json& v, const std::string& where) {
   if (!v.is_object()) throw InputError(where + ": expected an object of worker types");
   for (const auto& [type, rates] : v.items()) table.set(key, type, rates_from_json(rates, where + "." + type));
}
//---------------------------------------------------------------------------
json throughput_to_json(const ThroughputTable& table, const std::string& key) {
   json out = json::object();
   for (const auto& [k, rates] : table.entries())
      if (k.first == key) out[k.second] = rates_to_json(rates);
   return out;
}
//---------------------------------------------------------------------------
ModelVariant variant_from_json(const std::string& id, const json& v, ThroughputTable& table) {
   const std::string where = "models." + id;
   check_keys(v, {"cost_proxy_ms", "params_millions", "accuracy", "throughput"}, where);
   ModelVariant mv;
   mv.id = id;
   mv.cost_proxy_ms = number(require(v, "cost_proxy_ms", where), where + ".cost_proxy_ms");
   if (v.contains("params_millions")) mv.params_millions = number(v["params_millions"], where + ".params_millions");
   const auto& acc = require(v, "accuracy", where);
   check_keys(acc, {"arity", "rows"}, where + ".accuracy");
   mv.accuracy.arity = static_cast<std::size_t>(integer(require(acc, "arity", where), where + ".accuracy.arity"));
   for (const auto& row : require(acc, "rows", where + ".accuracy")) {
      check_keys(row, {"in", "out"}, where + ".accuracy.rows[]");
      AccuracyRow r;
      for (const auto& a : require(row, "in", where)) r.input.push_back(number(a, where + ".accuracy.rows[].in"));
      r.output = number(require(row, "out", where), where + ".accuracy.rows[].out");
      mv.accuracy.rows.push_back(std::move(r));
   }
   if (v.contains("throughput")) throughput_from_json(table, id, v["throughput"], where + ".throughput");
   return mv;
}
//---------------------------------------------------------------------------
}
//---------------------------------------------------------------------------
ProfileSet profiles_from_json(const json& doc) {
   if (!doc.is_object()) throw InputError("models: expected an object");
   ProfileSet ps;
   for (const auto& [id, v] : doc.items()) ps.variants[id] = variant_from_json(id, v, ps.throughput);
   return ps;
}
//---------------------------------------------------------------------------
json profiles_to_json(const ProfileSet& profiles) {
   json out = json::object();
   for (const auto& [id, v] : profiles.variants) {
      json rows = json::array();
      for (const auto& r : v.accuracy.rows) rows.push_back({{"in", r.input}, {"out", r.output}});
      out[id] = {{"cost_proxy_ms", v.cost_proxy_ms},
                 {"params_millions", v.params_millions},
                 {"accuracy", {{"arity", v.accuracy.arity}, {"rows", rows}}},
                 {"throughput", throughput_to_json(profiles.throughput, id)}};
   }
   return out;
}
//---------------------------------------------------------------------------
Instance instance_from_json(const json& doc, const std::filesystem::path& base_dir) {
   check_keys(doc, {"workflow", "infrastructure", "objectives"}, "instance");
   Instance inst;

   const auto& wf = require(doc, "workflow", "instance");
   check_keys(wf, {"nodes", "edges", "models", "allow_non_monotone"}, "workflow");
   if (wf.contains("allow_non_monotone")) {
      if (!wf["allow_non_monotone"].is_boolean()) throw InputError("workflow.allow_non_monotone: expected a boolean");
      inst.allow_non_monotone = wf["allow_non_monotone"].get<bool>();
   }
   const auto& models = require(wf, "models", "workflow");
   if (models.is_string()) {
      auto path = base_dir / models.get<std::string>();
      inst.profiles = profiles_from_json(read_json_file(path));
   } else {
      inst.profiles = profiles_from_json(models);
   }

   auto& plan = inst.workflow;
   for (const auto& n : require(wf, "nodes", "workflow")) {
      check_keys(n, {"id", "kind", "choices", "output_ratio", "rate", "throughput"}, "workflow.nodes[]");
      OperatorNode node;
      node.id = text(require(n, "id", "workflow.nodes[]"), "workflow.nodes[].id");
      const std::string where = "workflow.nodes." + node.id;
      node.kind = node_kind_from_string(text(require(n, "kind", where), where + ".kind"));
      if (node.kind == NodeKind::Ml) {
         std::vector<std::string> choices;
         for (const auto& c : require(n, "choices", where)) choices.push_back(text(c, where + ".choices[]"));
         plan.choices[node.id] = choices;
         if (n.contains("output_ratio")) {
            const auto& r = n["output_ratio"];
            if (r.is_number()) {
               for (const auto& c : choices) node.output_ratio[c] = r.get<double>();
            } else {
               if (!r.is_object()) throw InputError(where + ".output_ratio: expected a number or object");
               for (const auto& [v, x] : r.items()) node.output_ratio[v] = number(x, where + ".output_ratio." + v);
            }
         } else {
            for (const auto& c : choices) node.output_ratio[c] = 1.0;
         }
         if (n.contains("rate") || n.contains("throughput"))
            throw InputError(where + ": ml nodes take throughput from their model profiles");
      } else {
         if (n.contains("choices")) throw InputError(where + ": only ml nodes take model choices");
         plan.choices[node.id] = {kIdentityVariant};
         double ratio = n.contains("output_ratio") ? number(n["output_ratio"], where + ".output_ratio") : 1.0;
         node.output_ratio[kIdentityVariant] = ratio;
         if (node.kind == NodeKind::Source) {
            plan.source_throughput[node.id] = number(require(n, "rate", where), where + ".rate");
         } else if (n.contains("rate")) {
            throw InputError(where + ": only sources take a rate");
         }
         if (n.contains("throughput")) {
            if (node.kind != NodeKind::Relational) throw InputError(where + ": only relational nodes take throughput");
            throughput_from_json(inst.profiles.throughput, throughput_key(node.id, kIdentityVariant), n["throughput"],
                                 where + ".throughput");
         }
      }
      plan.nodes.push_back(std::move(node));
   }
   for (const auto& e : require(wf, "edges", "workflow")) {
      check_keys(e, {"from", "to", "unit_bytes"}, "workflow.edges[]");
      Edge edge{text(require(e, "from", "workflow.edges[]"), "edge.from"),
                text(require(e, "to", "workflow.edges[]"), "edge.to")};
      plan.edge_unit_size[{edge.from, edge.to}] =
         e.contains("unit_bytes") ? number(e["unit_bytes"], "workflow.edges[].unit_bytes") : 0.0;
      plan.edges.push_back(std::move(edge));
   }

   const auto& inf = require(doc, "infrastructure", "instance");
   check_keys(inf, {"tiers", "worker_types", "workers", "traffic_price"}, "infrastructure");
   auto& infra = inst.infrastructure;
   for (const auto& t : require(inf, "tiers", "infrastructure")) {
      check_keys(t, {"name", "locations_per_parent"}, "infrastructure.tiers[]");
      Tier tier;
      tier.name = text(require(t, "name", "infrastructure.tiers[]"), "tier.name");
      if (t.contains("locations_per_parent")) tier.locations_per_parent = integer(t["locations_per_parent"], "tier.locations_per_parent");
      infra.tiers.push_back(tier);
   }
   for (const auto& t : require(inf, "worker_types", "infrastructure")) {
      check_keys(t, {"id", "hourly_price"}, "infrastructure.worker_types[]");
      infra.worker_types.push_back({text(require(t, "id", "worker_types[]"), "worker_types[].id"),
                                    number(require(t, "hourly_price", "worker_types[]"), "worker_types[].hourly_price")});
   }
   for (const auto& w : require(inf, "workers", "infrastructure")) {
      check_keys(w, {"id", "type", "tier", "location"}, "infrastructure.workers[]");
      Worker worker;
      worker.id = text(require(w, "id", "workers[]"), "workers[].id");
      worker.type = text(require(w, "type", "workers[]"), "workers[].type");
      worker.tier = integer(require(w, "tier", "workers[]"), "workers[].tier");
      if (w.contains("location")) worker.location = integer(w["location"], "workers[].location");
      infra.workers.push_back(std::move(worker));
   }
   if (inf.contains("traffic_price")) {
      for (const auto& p : inf["traffic_price"]) {
         check_keys(p, {"from", "to", "usd_per_gb"}, "infrastructure.traffic_price[]");
         int from = integer(require(p, "from", "traffic_price[]"), "traffic_price[].from");
         int to = integer(require(p, "to", "traffic_price[]"), "traffic_price[].to");
         const auto& v = require(p, "usd_per_gb", "traffic_price[]");
         TrafficPrice price;
         if (v.is_string()) {
            if (v.get<std::string>() != "forbidden")
               throw InputError("traffic_price[].usd_per_gb: expected a number or \"forbidden\"");
            price = TrafficPrice::forbidden_pair();
         } else {
            price = TrafficPrice::finite_per_gb(number(v, "traffic_price[].usd_per_gb"));
         }
         infra.traffic_price[{from, to}] = price;
      }
   }

   const auto& obj = require(doc, "objectives", "instance");
   check_keys(obj, {"target_accuracy", "target_throughput", "percentile"}, "objectives");
   inst.objectives.target_accuracy = number(require(obj, "target_accuracy", "objectives"), "objectives.target_accuracy");
   inst.objectives.target_throughput =
      number(require(obj, "target_throughput", "objectives"), "objectives.target_throughput");
   if (obj.contains("percentile"))
      inst.objectives.percentile = percentile_from_string(text(obj["percentile"], "objectives.percentile"));
   return inst;
}
//---------------------------------------------------------------------------
json instance_to_json(const Instance& inst) {
   const auto& plan = inst.workflow;
   json nodes = json::array();
   for (const auto& n : plan.nodes) {
      json j{{"id", n.id}, {"kind", to_string(n.kind)}};
      if (n.kind == NodeKind::Ml) {
         j["choices"] = plan.choices.at(n.id);
         j["output_ratio"] = n.output_ratio;
      } else {
         auto it = n.output_ratio.find(kIdentityVariant);
         if (it != n.output_ratio.end() && it->second != 1.0) j["output_ratio"] = it->second;
         if (n.kind == NodeKind::Source) j["rate"] = plan.source_throughput.at(n.id);
         if (n.kind == NodeKind::Relational)
            j["throughput"] = throughput_to_json(inst.profiles.throughput, throughput_key(n.id, kIdentityVariant));
      }
      nodes.push_back(std::move(j));
   }
   json edges = json::array();
   for (const auto& e : plan.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"unit_bytes", plan.unit_size(e.from, e.to)}});
   json wf{{"nodes", nodes}, {"edges", edges}, {"models", profiles_to_json(inst.profiles)}};
   if (inst.allow_non_monotone) wf["allow_non_monotone"] = true;

   const auto& infra = inst.infrastructure;
   json tiers = json::array();
   for (const auto& t : infra.tiers) tiers.push_back({{"name", t.name}, {"locations_per_parent", t.locations_per_parent}});
   json types = json::array();
   for (const auto& t : infra.worker_types) types.push_back({{"id", t.id}, {"hourly_price", t.hourly_price}});
   json workers = json::array();
   for (const auto& w : infra.workers)
      workers.push_back({{"id", w.id}, {"type", w.type}, {"tier", w.tier}, {"location", w.location}});
   json prices = json::array();
   for (const auto& [pair, p] : infra.traffic_price) {
      json v = p.forbidden ? json("forbidden") : json(p.usd_per_gb);
      prices.push_back({{"from", pair.first}, {"to", pair.second}, {"usd_per_gb", v}});
   }
   return json{{"workflow", wf},
               {"infrastructure", {{"tiers", tiers}, {"worker_types", types}, {"workers", workers}, {"traffic_price", prices}}},
               {"objectives",
                {{"target_accuracy", inst.objectives.target_accuracy},
                 {"target_throughput", inst.objectives.target_throughput},
                 {"percentile", to_string(inst.objectives.percentile)}}}};
}
//---------------------------------------------------------------------------
std::vector<std::string> Instance::violations() const {
   auto out = validate(workflow, infrastructure);
   auto prof = validate_profiles(workflow, profiles, allow_non_monotone);
   out.insert(out.end(), prof.begin(), prof.end());
   if (!(objectives.target_accuracy >= 0))
      out.push_back("target accuracy must be >= 0");
   if (!(objectives.target_throughput >= 0)) out.push_back("target throughput must be >= 0");
   return out;
}
//---------------------------------------------------------------------------
std::map<std::string, double> Instance::rates(const Selection& selection) const {
   return required_rates(workflow, complete_with_identity(workflow, selection), objectives.target_throughput);
}
//---------------------------------------------------------------------------
json read_json_file(const std::filesystem::path& path) {
   std::ifstream in(path);
   if (!in) throw InputError("cannot open " + path.string());
   try {
      return json::parse(in);
   } catch (const json::parse_error& e) {
      throw InputError(path.string() + ": " + e.what());
   }
}
//---------------------------------------------------------------------------
Instance load_instance(const std::filesystem::path& path) {
   try {
      return instance_from_json(read_json_file(path), path.parent_path());
   } catch (const json::exception& e) {
      throw InputError(path.string() + ": " + e.what());
   }
}
//---------------------------------------------------------------------------
void write_text_file(const std::filesystem::path& path, const std::string& text) {
   std::ofstream out(path, std::ios::binary);
   if (!out) throw InputError("cannot write " + path.string());
   out << text;
}
//---------------------------------------------------------------------------
std::string dump(const json& doc) {
   return doc.dump(2) + "\n";
}
//---------------------------------------------------------------------------
json plan_file_to_json(const PlanFile& file) {
   json assignment = json::object();
   for (const auto& [node, workers] : file.plan.assignment) assignment[node] = workers;
   return json{{"schema_version", kSchemaVersion},
               {"kind", "physical_plan"},
               {"strategy", file.strategy},
               {"seed", file.seed},
               {"charge_mode", file.charge_mode},
               {"selection", file.plan.selection},
               {"assignment", assignment},
               {"cost",
                {{"compute", file.plan.cost.compute}, {"network", file.plan.cost.network}, {"total", file.plan.cost.total}}},
               {"a2_violations", file.plan.a2_violations},
               {"instance", instance_to_json(file.instance)}};
}
//---------------------------------------------------------------------------
PlanFile plan_file_from_json(const json& doc) {
   check_keys(doc, {"schema_version", "kind", "strategy", "seed", "charge_mode", "selection", "assignment", "cost",
                    "a2_violations", "instance"},
              "plan");
   if (integer(require(doc, "schema_version", "plan"), "plan.schema_version") != kSchemaVersion)
      throw InputError("plan: unsupported schema_version");
   PlanFile f;
   f.strategy = text(require(doc, "strategy", "plan"), "plan.strategy");
   f.seed = require(doc, "seed", "plan").get<std::uint64_t>();
   f.charge_mode = doc.value("charge_mode", "full-hour");
   f.plan.selection = require(doc, "selection", "plan").get<Selection>();
   for (const auto& [node, workers] : require(doc, "assignment", "plan").items())
      f.plan.assignment[node] = workers.get<std::set<std::string>>();
   const auto& c = require(doc, "cost", "plan");
   f.plan.cost = CostBreakdown::of(number(require(c, "compute", "plan.cost"), "plan.cost.compute"),
                                   number(require(c, "network", "plan.cost"), "plan.cost.network"));
   if (doc.contains("a2_violations")) f.plan.a2_violations = doc["a2_violations"].get<std::vector<std::string>>();
   f.instance = instance_from_json(require(doc, "instance", "plan"));
   return f;
}
//---------------------------------------------------------------------------
}  // namespace hetplan

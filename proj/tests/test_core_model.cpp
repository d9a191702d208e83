#include "doctest.h"

#include "hetplan/core_model.hpp"
#include "hetplan/instance.hpp"
#include "support/builder.hpp"

#include <algorithm>
#include <set>

using namespace hetplan;
using hetplan::testing::Builder;

namespace {
//---------------------------------------------------------------------------
Builder chain(double rate, double det_ratio) {
   Builder b;
   b.tier("edge").tier("cloud").type("cpu", 1.0).worker("e0", "cpu", 1).price(1, 2, 0.1);
   b.source("src", rate).ml("det", {"d"}, det_ratio).sink("agg");
   b.variant("d", 10, 0.8, {{"cpu", 20}});
   b.edge("src", "det", 1000).edge("det", "agg", 100);
   return b;
}
//---------------------------------------------------------------------------
bool contains(const std::vector<std::string>& v, const std::string& needle) {
   return std::any_of(v.begin(), v.end(), [&](const auto& s) { return s.find(needle) != std::string::npos; });
}
//---------------------------------------------------------------------------
}

TEST_CASE("validate accepts a well-formed chain") {
   auto b = chain(10, 1.0);
   CHECK(validate(b.get().workflow, b.get().infrastructure).empty());
   CHECK(b.get().violations().empty());
}

TEST_CASE("validate reports an undefined edge target") {
   auto b = chain(10, 1.0);
   b.mut().workflow.edges.push_back({"det", "x"});
   auto v = validate(b.get().workflow, b.get().infrastructure);
   CHECK(contains(v, "edge target x undefined"));
}

TEST_CASE("validate rejects nonzero intra-tier price") {
   auto b = chain(10, 1.0);
   b.price(1, 1, 0.1);
   CHECK(contains(validate(b.get().workflow, b.get().infrastructure), "A1 violated"));
}

TEST_CASE("validate rejects a downward price that is not forbidden") {
   auto b = chain(10, 1.0);
   b.price(2, 1, 0.1);
   CHECK(contains(validate(b.get().workflow, b.get().infrastructure), "A2 violated"));
}

TEST_CASE("validate reports cycles") {
   auto b = chain(10, 1.0);
   b.mut().workflow.edges.push_back({"agg", "det"});
   CHECK(contains(validate(b.get().workflow, b.get().infrastructure), "cycle"));
}

TEST_CASE("propagate_throughput on a ratio-1 chain") {
   auto b = chain(10, 1.0);
   auto t = propagate_throughput(b.get().workflow, complete_with_identity(b.get().workflow, {{"det", "d"}}));
   CHECK(t.at("det") == doctest::Approx(10));
   CHECK(t.at("agg") == doctest::Approx(10));
}

TEST_CASE("propagate_throughput applies output ratios") {
   auto b = chain(10, 0.5);
   auto t = propagate_throughput(b.get().workflow, complete_with_identity(b.get().workflow, {{"det", "d"}}));
   CHECK(t.at("agg") == doctest::Approx(5));
}

TEST_CASE("propagate_throughput names the missing node") {
   auto b = chain(10, 1.0);
   try {
      propagate_throughput(b.get().workflow, {{"src", kIdentityVariant}, {"agg", kIdentityVariant}});
      FAIL("expected an error");
   } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("det") != std::string::npos);
   }
}

TEST_CASE("required_rates rescales sources to the input rate") {
   Builder b;
   b.tier("edge").type("cpu", 1).worker("w", "cpu", 1);
   b.source("a", 2).source("b", 6).relational("j", 1.0, {{"cpu", 100}}).sink("o");
   b.edge("a", "j", 1).edge("b", "j", 1).edge("j", "o", 1);
   auto r = required_rates(b.get().workflow, complete_with_identity(b.get().workflow, {}), 16);
   CHECK(r.at("a") == doctest::Approx(4));
   CHECK(r.at("b") == doctest::Approx(12));
   CHECK(r.at("j") == doctest::Approx(16));
   auto keep = required_rates(b.get().workflow, complete_with_identity(b.get().workflow, {}), 0);
   CHECK(keep.at("j") == doctest::Approx(8));
}

TEST_CASE("topological orderings of a chain") {
   LogicalPlan p;
   p.nodes = {{"a", NodeKind::Source, {}}, {"b", NodeKind::Ml, {}}, {"c", NodeKind::Sink, {}}};
   p.edges = {{"a", "b"}, {"b", "c"}};
   auto o = topological_orderings(p, 3, 1);
   REQUIRE(o.size() == 1);
   CHECK(o[0] == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("topological orderings of a diamond") {
   LogicalPlan p;
   p.nodes = {{"a", NodeKind::Source, {}}, {"b", NodeKind::Ml, {}}, {"c", NodeKind::Ml, {}}, {"d", NodeKind::Sink, {}}};
   p.edges = {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}};
   auto o = topological_orderings(p, 2, 7);
   REQUIRE(o.size() == 2);
   CHECK(o[0] != o[1]);
   for (const auto& ord : o) {
      CHECK(ord.front() == "a");
      CHECK(ord.back() == "d");
   }
}

TEST_CASE("topological orderings reject cycles") {
   LogicalPlan p;
   p.nodes = {{"a", NodeKind::Ml, {}}, {"b", NodeKind::Ml, {}}};
   p.edges = {{"a", "b"}, {"b", "a"}};
   CHECK_THROWS_AS(topological_orderings(p, 1, 1), InputError);
}

TEST_CASE("traffic price defaults") {
   InfrastructureSpec infra;
   infra.tiers = {{"edge", 1}, {"cloud", 1}};
   infra.traffic_price[{1, 2}] = TrafficPrice::finite_per_gb(0.2);
   CHECK(infra.price(1, 1).usd_per_gb == 0);
   CHECK_FALSE(infra.price(1, 1).forbidden);
   CHECK(infra.price(2, 1).forbidden);
   CHECK(infra.relaxed_price(2, 1).usd_per_gb == doctest::Approx(0.2));
   CHECK(infra.price(1, 2).per_byte() == doctest::Approx(0.2e-9));
}

TEST_CASE("instance json round trip") {
   auto inst = load_instance(HETPLAN_DATA_DIR "/small.json");
   auto doc = instance_to_json(inst);
   auto again = instance_to_json(instance_from_json(doc));
   CHECK(dump(doc) == dump(again));
}

TEST_CASE("instance parser rejects unknown keys") {
   auto doc = read_json_file(HETPLAN_DATA_DIR "/tiny.json");
   doc["objectives"]["bogus"] = 1;
   CHECK_THROWS_AS(instance_from_json(doc), InputError);
}

TEST_CASE("shipped instances validate") {
   for (const char* f : {"tiny.json", "small.json", "medium.json"}) {
      CAPTURE(f);
      auto inst = load_instance(std::string(HETPLAN_DATA_DIR) + "/" + f);
      CHECK(inst.violations().empty());
   }
}

TEST_CASE("selection and assignment keys are stable") {
   CHECK(selection_key({{"det", "a"}, {"reid", "b"}}) == "det=a;reid=b;");
   Assignment a{{"x", {"w2", "w1"}}};
   CHECK(assignment_key(a) == assignment_key(Assignment{{"x", {"w1", "w2"}}}));
}

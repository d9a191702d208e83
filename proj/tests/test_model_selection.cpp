#include "doctest.h"

#include "hetplan/model_selection.hpp"
#include "support/builder.hpp"
#include "support/random_instance.hpp"
#include "support/selection_oracle.hpp"

using namespace hetplan;
using hetplan::testing::Builder;

namespace {
//---------------------------------------------------------------------------
Builder single_node() {
   Builder b;
   b.tier("edge").type("cpu", 1).worker("w", "cpu", 1);
   b.source("s", 1).ml("m", {"small", "large"}).sink("o");
   b.variant("small", 10, 0.6, {{"cpu", 10}}).variant("large", 30, 0.8, {{"cpu", 3}});
   b.edge("s", "m", 1).edge("m", "o", 1);
   return b;
}
//---------------------------------------------------------------------------
std::vector<std::string> keys(const std::vector<RankedSelection>& r) {
   std::vector<std::string> out;
   for (const auto& s : r) out.push_back(selection_key(s.selection));
   return out;
}
//---------------------------------------------------------------------------
}

TEST_CASE("select_models keeps only variants meeting the target") {
   auto b = single_node();
   auto r = select_models(b.get().workflow, b.get().profiles, 0.7);
   REQUIRE(r.size() == 1);
   CHECK(r[0].selection.at("m") == "large");
}

TEST_CASE("select_models orders by proxy cost") {
   auto b = single_node();
   SelectionOptions o;
   o.top_k = 2;
   auto r = select_models(b.get().workflow, b.get().profiles, 0.5, o);
   REQUIRE(r.size() == 2);
   CHECK(r[0].selection.at("m") == "small");
   CHECK(r[1].selection.at("m") == "large");
   CHECK(r[0].proxy_cost == doctest::Approx(10));
}

TEST_CASE("select_models returns nothing for an unreachable target") {
   auto b = single_node();
   CHECK(select_models(b.get().workflow, b.get().profiles, 0.81).empty());
}

TEST_CASE("select_models on a 3-node chain matches enumeration") {
   Builder b;
   b.tier("edge").type("cpu", 1).worker("w", "cpu", 1);
   b.source("s", 1).ml("a", {"a1", "a2", "a3"}).ml("b", {"b1", "b2"}).ml("c", {"c1", "c2", "c3"}).sink("o");
   b.edge("s", "a", 1).edge("a", "b", 1).edge("b", "c", 1).edge("c", "o", 1);
   auto graded = [](double q) {
      AccuracyProfile p;
      p.arity = 1;
      for (double in : {0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) p.rows.push_back({{in}, q * in});
      return p;
   };
   b.variant("a1", 5, graded(0.8), {}).variant("a2", 9, graded(0.9), {}).variant("a3", 20, graded(1.0), {});
   b.variant("b1", 3, graded(0.85), {}).variant("b2", 8, graded(0.97), {});
   b.variant("c1", 4, graded(0.9), {}).variant("c2", 7, graded(0.95), {}).variant("c3", 12, graded(1.0), {});
   const auto& wf = b.get().workflow;
   auto want = hetplan::testing::cheapest_selections(wf, b.get().profiles, 0.65, 3);
   REQUIRE(want.size() == 3);

   // a narrow beam may miss the optimum here, but whatever it returns is feasible and sorted
   SelectionOptions narrow;
   narrow.beam_width = 4;
   narrow.top_k = 3;
   auto approx = select_models(wf, b.get().profiles, 0.65, narrow);
   REQUIRE_FALSE(approx.empty());
   for (std::size_t i = 0; i < approx.size(); ++i) {
      CHECK(end_to_end_accuracy(wf, approx[i].selection, b.get().profiles).value() >= 0.65);
      CHECK(approx[i].proxy_cost >= want[i].second);
      if (i > 0) CHECK(approx[i].proxy_cost >= approx[i - 1].proxy_cost);
   }

   SelectionOptions wide = narrow;
   wide.beam_width = static_cast<int>(hetplan::testing::combination_count(wf));
   auto got = select_models(wf, b.get().profiles, 0.65, wide);
   REQUIRE(got.size() == want.size());
   for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(selection_key(complete_with_identity(wf, got[i].selection)) == selection_key(want[i].first));
      CHECK(got[i].proxy_cost == doctest::Approx(want[i].second));
   }
}

TEST_CASE("end_to_end_accuracy of a single lookup") {
   Builder b;
   b.tier("edge").type("cpu", 1).worker("w", "cpu", 1);
   b.source("s", 1).ml("m", {"v"}).sink("o").variant("v", 1, 0.72, {});
   b.edge("s", "m", 1).edge("m", "o", 1);
   CHECK(end_to_end_accuracy(b.get().workflow, complete_with_identity(b.get().workflow, {{"m", "v"}}),
                             b.get().profiles)
             .value() == doctest::Approx(0.72));
}

TEST_CASE("identity-only plans are exact") {
   Builder b;
   b.tier("edge").type("cpu", 1).worker("w", "cpu", 1);
   b.source("s", 1).relational("f", 1.0, {{"cpu", 10}}).sink("o");
   b.edge("s", "f", 1).edge("f", "o", 1);
   CHECK(end_to_end_accuracy(b.get().workflow, complete_with_identity(b.get().workflow, {}), b.get().profiles)
             .value() == 1.0);
}

TEST_CASE("join of two parents uses the dominated-row lookup") {
   Builder b;
   b.tier("edge").type("cpu", 1).worker("w", "cpu", 1);
   b.source("s", 1).ml("l", {"lv"}).ml("r", {"rv"}).ml("j", {"jv"}).sink("o");
   b.variant("lv", 1, 0.55, {}).variant("rv", 1, 0.83, {});
   AccuracyProfile p;
   p.arity = 2;
   p.rows = {{{0.60, 0.50}, 0.55}, {{0.50, 0.60}, 0.60}, {{0.70, 0.90}, 0.65}};
   b.variant("jv", 1, p, {});
   b.edge("s", "l", 1).edge("s", "r", 1).edge("l", "j", 1).edge("r", "j", 1).edge("j", "o", 1);
   Selection s = complete_with_identity(b.get().workflow, {{"l", "lv"}, {"r", "rv"}, {"j", "jv"}});
   CHECK(end_to_end_accuracy(b.get().workflow, s, b.get().profiles).value() == doctest::Approx(0.60));
   CHECK(keys(select_models(b.get().workflow, b.get().profiles, 0.60)).size() == 1);
   CHECK(select_models(b.get().workflow, b.get().profiles, 0.61).empty());
}

TEST_CASE("most accurate variant") {
   auto b = single_node();
   CHECK(most_accurate_variant(b.get().workflow, b.get().profiles, "m") == "large");
}

TEST_CASE("select_models agrees with enumeration on random instances") {
   for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      CAPTURE(seed);
      auto inst = hetplan::testing::random_instance(seed);
      const auto& wf = inst.workflow;
      SelectionOptions o;
      o.beam_width = std::max(3, static_cast<int>(hetplan::testing::combination_count(wf)));
      o.top_k = 3;
      auto got = select_models(wf, inst.profiles, inst.objectives.target_accuracy, o);
      auto want = hetplan::testing::cheapest_selections(wf, inst.profiles, inst.objectives.target_accuracy, 3);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i)
         CHECK(selection_key(complete_with_identity(wf, got[i].selection)) == selection_key(want[i].first));
   }
}

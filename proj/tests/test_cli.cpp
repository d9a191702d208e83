#include "doctest.h"

#include "hetplan/instance.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {
//---------------------------------------------------------------------------
fs::path scratch() {
   static fs::path dir = [] {
      auto d = fs::temp_directory_path() / ("hetplan_cli_" + std::to_string(::getpid()));
      fs::create_directories(d);
      return d;
   }();
   return dir;
}
//---------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
   std::ifstream in(p, std::ios::binary);
   std::stringstream ss;
   ss << in.rdbuf();
   return ss.str();
}
//---------------------------------------------------------------------------
struct Run {
   int code;
   std::string out;
   std::string err;
};
//---------------------------------------------------------------------------
Run run(const std::string& args) {
   auto out = scratch() / "stdout.txt";
   auto err = scratch() / "stderr.txt";
   std::string cmd = std::string(HETPLAN_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
   int status = std::system(cmd.c_str());
   return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}
//---------------------------------------------------------------------------
std::string data(const char* f) { return std::string(HETPLAN_DATA_DIR) + "/" + f; }
//---------------------------------------------------------------------------
std::string tmp(const char* f) { return (scratch() / f).string(); }
//---------------------------------------------------------------------------
}

TEST_CASE("validate") {
   CHECK(run("validate " + data("tiny.json")).code == 0);
   std::ofstream(tmp("broken.json")) << "{\"workflow\": 3}";
   CHECK(run("validate " + tmp("broken.json")).code == 1);
   CHECK(run("validate /no/such/file.json").code == 1);
}

TEST_CASE("optimize on tiny matches the lower bound") {
   REQUIRE(run("optimize " + data("tiny.json") + " -o " + tmp("jb.json")).code == 0);
   REQUIRE(run("lower-bound " + data("tiny.json") + " -o " + tmp("lb.json")).code == 0);
   auto jb = hetplan::read_json_file(tmp("jb.json"));
   auto lb = hetplan::read_json_file(tmp("lb.json"));
   CHECK(jb["cost"]["total"].get<double>() == doctest::Approx(lb["cost"]["total"].get<double>()));
   CHECK(jb["strategy"] == "jb");
   CHECK(lb["strategy"] == "lb");
}

TEST_CASE("unreachable accuracy exits with 2") {
   auto r = run("optimize " + data("tiny.json") + " --accuracy 1.01");
   CHECK(r.code == 2);
   CHECK(r.err.find("target accuracy unreachable") != std::string::npos);
}

TEST_CASE("unreachable throughput exits with 2") {
   auto r = run("optimize " + data("tiny.json") + " --throughput 100000");
   CHECK(r.code == 2);
   CHECK(r.err.find("target throughput unreachable") != std::string::npos);
}

TEST_CASE("same seed gives byte-identical plan files") {
   REQUIRE(run("optimize " + data("medium.json") + " --seed 1 -o " + tmp("a.json")).code == 0);
   REQUIRE(run("optimize " + data("medium.json") + " --seed 1 --jobs 3 -o " + tmp("b.json")).code == 0);
   CHECK(slurp(tmp("a.json")) == slurp(tmp("b.json")));
}

TEST_CASE("baselines write plan files") {
   CHECK(run("baseline " + data("medium.json") + " --strategy bf -o " + tmp("bf.json")).code == 0);
   CHECK(run("baseline " + data("medium.json") + " --strategy ff -o " + tmp("ff.json")).code == 0);
   CHECK(run("baseline " + data("medium.json") + " --strategy xx").code == 1);
}

TEST_CASE("enumeration guard exits with 3") {
   CHECK(run("lower-bound " + data("medium.json") + " --max-enumeration 10").code == 3);
}

TEST_CASE("simulate a plan file deterministically") {
   REQUIRE(run("optimize " + data("small.json") + " -o " + tmp("s.json")).code == 0);
   const auto args = "simulate --plan " + tmp("s.json") + " --duration 30 --jitter 0.2 --seed 5";
   REQUIRE(run(args + " --report " + tmp("r1.json") + " --series " + tmp("ts.csv")).code == 0);
   REQUIRE(run(args + " --report " + tmp("r2.json")).code == 0);
   CHECK(slurp(tmp("r1.json")) == slurp(tmp("r2.json")));
   auto rep = hetplan::read_json_file(tmp("r1.json"));
   CHECK(rep["kind"] == "sim_report");
   CHECK(slurp(tmp("ts.csv")).rfind("time_s,node,throughput,queue_length", 0) == 0);
}

TEST_CASE("sweep writes one row per value and strategy") {
   auto r = run("sweep " + data("medium.json") + " --axis input_throughput --values 4,8 --strategies jb,bf -o " +
                tmp("sweep.csv"));
   REQUIRE(r.code == 0);
   std::istringstream in(slurp(tmp("sweep.csv")));
   std::string line;
   int lines = 0;
   while (std::getline(in, line)) ++lines;
   CHECK(lines == 5);
}

TEST_CASE("sweep usage errors") {
   CHECK(run("sweep " + data("medium.json") + " --axis colour --values 1").code == 1);
   CHECK(run("sweep " + data("medium.json") + " --axis input_throughput --values 4 --strategies ''").code == 1);
}

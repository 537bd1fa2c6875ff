#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "optswitch/cli.hpp"
#include "optswitch/config_format.hpp"
#include "optswitch/systems.hpp"

using namespace optswitch;
namespace fs = std::filesystem;

namespace {
struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "optswitch");
  std::ostringstream o, e;
  const int c = run_cli(args, o, e);
  return {c, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("optswitch_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// thermostat from one initial state with a small budget
fs::path small_thermostat(const fs::path& dir) {
  auto b = load_named("thermostat").bundle;
  b.system.init = {};
  b.system.init.states.push_back({0, {22.0, 16.0}});
  b.settings.set("restarts", 3);
  b.settings.set("screen_probes", 64);
  auto p = dir / "small.cfg";
  std::ofstream(p) << write_config(b);
  return p;
}
} // namespace

TEST_CASE("helpers") {
  auto sys = load_named("thermostat").bundle.system;
  auto s = parse_hybrid_state(sys, "HEAT temp=21.5 out=16");
  CHECK(s.mode == 1);
  CHECK(s.x == std::vector<double>{21.5, 16.0});
  CHECK_THROWS(parse_hybrid_state(sys, "WARM temp=1"));
  CHECK_THROWS(parse_hybrid_state(sys, "OFF nope=1"));
  CHECK(parse_number_list("1, 2.5 3e-1;4") == std::vector<double>{1, 2.5, 0.3, 4});
  CHECK_THROWS(parse_number_list("1 x"));
}

TEST_CASE("evaluate prints F and the reduced sequence") {
  auto r = cli({"evaluate", "--system", "thermostat", "--init", "OFF temp=22 out=16", "--schedule",
                "5.08, 5.32, 5.32, 6.97, 7.23, 7.23, 4.87, 8.66"});
  CHECK(r.code == 0);
  CHECK(r.out.find("sequence = OFF,HEAT,OFF,HEAT,OFF") != std::string::npos);
  CHECK(r.out.find("F = 2000") == std::string::npos);

  auto bad = cli({"evaluate", "--system", "thermostat", "--schedule", "5.32 5.08 5.32 6.97 7.23 7.23 4.87 8.66"});
  CHECK(bad.code == 0);
  CHECK(bad.out.rfind("F = 2000\n", 0) == 0);

  auto zero = cli({"evaluate", "--system", "thermostat", "--schedule", "0 0 0 0 0 0 0 0"});
  CHECK(zero.code == 0);
  CHECK(zero.out.rfind("F = 2000\n", 0) == 0);
  CHECK(zero.out.find("reason") != std::string::npos);

  auto junk = cli({"evaluate", "--system", "thermostat", "--schedule", "1 2 three"});
  CHECK(junk.code != 0);
  auto count = cli({"evaluate", "--system", "thermostat", "--schedule", "1 2 3"});
  CHECK(count.code != 0);
}

TEST_CASE("exactly one system source") {
  CHECK(cli({"evaluate", "--schedule", "1"}).code == kExitValidation);
  CHECK(cli({"evaluate", "--system", "thermostat", "--config", "x.cfg", "--schedule", "1"}).code == kExitValidation);
  CHECK(cli({"evaluate", "--system", "nope", "--schedule", "1"}).code == kExitValidation);
}

TEST_CASE("config with no initial states fails validation") {
  auto dir = scratch("noinit");
  auto b = load_named("thermostat").bundle;
  b.system.init = {};
  auto p = dir / "noinit.cfg";
  std::ofstream(p) << write_config(b);
  auto r = cli({"synthesize", "--config", p.string(), "--out", (dir / "o").string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("\"error\":\"validation\"") != std::string::npos);
  CHECK(r.err.find("no-initial-states") != std::string::npos);
}

TEST_CASE("simulate with empty guards stays in one mode") {
  auto dir = scratch("empty");
  std::ofstream(dir / "g.json") << R"({"logic": []})";
  auto r = cli({"simulate", "--system", "thermostat", "--guards", (dir / "g.json").string(), "--init",
                "HEAT temp=22 out=16", "--horizon", "5", "--out", dir.string(), "--seed", "3"});
  CHECK(r.code == 0);
  auto csv = slurp(dir / "trajectory.csv");
  CHECK(csv.rfind("# seed=3 config=", 0) == 0);
  CHECK(csv.find(",OFF,") == std::string::npos);
  CHECK(csv.find(",HEAT,") != std::string::npos);
  CHECK(fs::exists(dir / "cost.json"));
}

TEST_CASE("simulate reports zeno with a partial trajectory") {
  auto dir = scratch("zeno");
  std::ofstream(dir / "g.json") << R"({"logic": [{"from":"OFF","to":"HEAT","region":"full"},
                                                 {"from":"HEAT","to":"OFF","region":"full"}]})";
  auto r = cli({"simulate", "--system", "thermostat", "--guards", (dir / "g.json").string(), "--out", dir.string()});
  CHECK(r.code == kExitDiverged);
  CHECK(r.err.find("zeno") != std::string::npos);
  CHECK(fs::exists(dir / "trajectory.csv"));
}

TEST_CASE("simulate a schedule and the reference guards") {
  auto dir = scratch("sched");
  auto r = cli({"simulate", "--system", "thermostat", "--init", "OFF temp=22 out=16", "--schedule",
                "5.08 5.32 5.32 6.97 7.23 7.23 4.87 8.66", "--out", dir.string(), "--format", "json"});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "trajectory.json"));
  auto ref = cli({"simulate", "--system", "thermostat", "--reference", "--init", "OFF temp=22 out=16", "--horizon",
                  "50", "--out", dir.string()});
  CHECK(ref.code == 0);
  CHECK(ref.out.find("\"period\":{") != std::string::npos);
}

TEST_CASE("synthesize writes stamped, reproducible artifacts") {
  auto dir = scratch("synth");
  auto cfg = small_thermostat(dir);
  auto a = cli({"synthesize", "--config", cfg.string(), "--seed", "5", "--out", (dir / "a").string(), "--no-timestamp"});
  REQUIRE(a.code == 0);
  auto b = cli({"synthesize", "--config", cfg.string(), "--seed", "5", "--out", (dir / "b").string(), "--no-timestamp"});
  REQUIRE(b.code == 0);
  const auto ga = slurp(dir / "a" / "guards.json");
  CHECK(ga == slurp(dir / "b" / "guards.json"));
  CHECK(ga.find("\"seed\": 5") != std::string::npos);
  CHECK(ga.find("\"config_hash\"") != std::string::npos);
  CHECK(ga.find("generated_at") == std::string::npos);
  const auto opt = slurp(dir / "a" / "optima.csv");
  CHECK(opt.rfind("# seed=5 config=", 0) == 0);
  CHECK(fs::exists(dir / "a" / "trajectory_0.csv"));
  CHECK(slurp(dir / "a" / "trajectory_0.csv").rfind("# seed=5 config=", 0) == 0);

  auto c = cli({"synthesize", "--config", cfg.string(), "--seed", "5", "--out", (dir / "c").string()});
  CHECK(slurp(dir / "c" / "guards.json").find("generated_at") != std::string::npos);

  auto sim = cli({"simulate", "--config", cfg.string(), "--guards", (dir / "a" / "guards.json").string(), "--out",
                  (dir / "s").string()});
  CHECK(sim.code == 0);
}

TEST_CASE("systems listing") {
  auto r = cli({"systems"});
  CHECK(r.code == 0);
  CHECK(r.out.find("buck-boost") != std::string::npos);
  CHECK(cli({"bogus"}).code != 0);
}

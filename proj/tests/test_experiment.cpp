#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mfris/experiment.hpp"

using namespace mfris;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> readCsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    rows.push_back(cols);
  }
  return rows;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mfris_test_" + name);
  fs::remove_all(p);
  return p;
}

// Tiny instance so that sweeps finish in seconds.
ExperimentConfig tiny() {
  ExperimentConfig c;
  c.users = 2;
  c.antennas = 2;
  c.elements = 2;
  c.trials = 2;
  c.presets = {ArchitecturePreset::kNoRis, ArchitecturePreset::kSfRisReflect};
  setSweep(c, SweepVariable::kPMaxDbm, {10.0});
  return c;
}

std::string errorOf(const std::string& text) {
  try {
    parseConfig(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty config gives the table defaults") {
  for (const std::string text : {"", "  \n", "{}"}) {
    const auto c = parseConfig(text);
    CHECK(c.users == 6);
    CHECK(c.antennas == 16);
    CHECK(c.elements == 100);
    CHECK(c.budget.pMaxTransmit == doctest::Approx(100.0).epsilon(1e-14));
    CHECK(c.budget.pAmplify == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(c.betaMax == doctest::Approx(158.48931924611142).epsilon(1e-14));
    CHECK(c.budget.noiseUser == doctest::Approx(1e-8).epsilon(1e-14));
    CHECK(c.budget.noiseRis == doctest::Approx(1e-8).epsilon(1e-14));
    CHECK(c.budget.rateMin == 0.1);
    CHECK(c.algorithm.delta == 1e-6);
    CHECK(c.ris.y == 50.0);
    CHECK(c.ris.z == 20.0);
    CHECK(c.radius == 3.0);
    CHECK(c.kFactorDb == 3.0);
    CHECK(c.sweep.values == std::vector<double>{20.0});
    CHECK(c.presets.size() == 6);
  }
  const auto p = scratch("empty.json");
  std::ofstream(p).close();
  CHECK(loadConfig(p).elements == 100);
  fs::remove(p);
  CHECK_THROWS_AS(loadConfig(p), ConfigError);
}

TEST_CASE("dB fields become linear once") {
  const auto c = parseConfig(R"({"budget": {"betaMaxDb": 22, "pMaxDbm": 0, "noiseDbm": -90,
                                  "noiseRisDbm": -70},
                                 "sweep": {"variable": "pMaxDbm", "values": [0, 10, 20]}})");
  CHECK(c.betaMax == doctest::Approx(158.49).epsilon(1e-4));
  CHECK(c.budget.pMaxTransmit == doctest::Approx(1.0));
  CHECK(c.budget.noiseUser == doctest::Approx(1e-9));
  CHECK(c.budget.noiseRis == doctest::Approx(1e-7));
  REQUIRE(c.sweepLinear.size() == 3);
  CHECK(c.sweepLinear[0] == doctest::Approx(1.0));
  CHECK(c.sweepLinear[2] == doctest::Approx(100.0));
  CHECK(c.sweep.values[2] == 20.0);

  const auto m = parseConfig(R"({"sweep": {"variable": "elementCount", "values": [4, 8, 16]}})");
  CHECK(m.sweepLinear == std::vector<double>{4, 8, 16});
}

TEST_CASE("config errors name the field") {
  CHECK(errorOf(R"({"trials": -3})").rfind("trials:", 0) == 0);
  CHECK(errorOf(R"({"trials": 0})").rfind("trials:", 0) == 0);
  CHECK(errorOf(R"({"sweep": {"variable": "pMaxDbm", "values": [0, 20, 10]}})")
            .rfind("sweep.values[2]:", 0) == 0);
  CHECK(errorOf(R"({"sweep": {"variable": "pMaxDbm", "values": []}})").rfind("sweep.values:", 0) == 0);
  CHECK(errorOf(R"({"sweep": {"variable": "height", "values": [1]}})").rfind("sweep.variable:", 0) == 0);
  CHECK(errorOf(R"({"sweep": {"variable": "elementCount", "values": [2.5]}})")
            .rfind("sweep.values[0]:", 0) == 0);
  CHECK(errorOf(R"({"budget": {"pmax": 3}})").rfind("budget.pmax:", 0) == 0);
  CHECK(errorOf(R"({"scenario": {"users": "four"}})").rfind("scenario.users:", 0) == 0);
  CHECK(errorOf(R"({"scenario": {"ris": [0, 1]}})").rfind("scenario.ris:", 0) == 0);
  CHECK(errorOf(R"({"presets": ["MF_RIS", "BOGUS"]})").rfind("presets[1]:", 0) == 0);
  CHECK(errorOf(R"({"algorithm": {"mu": 2}})").rfind("algorithm:", 0) == 0);
  CHECK(errorOf(R"({"channel": {"exponentBsRis": 9}})").rfind("channel:", 0) == 0);
  CHECK(errorOf(R"({"trials": 3,)").rfind("<root>:", 0) == 0);
  CHECK(errorOf(R"([1, 2])").rfind("<root>:", 0) == 0);
}

TEST_CASE("scenario follows the sweep variable") {
  auto c = tiny();
  setSweep(c, SweepVariable::kRisYCoord, {10.0, 40.0});
  const auto s = buildScenario(c, 1, 77);
  CHECK(s.geometry.ris.y == 40.0);
  CHECK(s.geometry.ris.z == 20.0);
  CHECK(s.budget.pMaxTransmit == c.budget.pMaxTransmit);

  setSweep(c, SweepVariable::kElementCount, {3.0, 5.0});
  CHECK(buildScenario(c, 1, 77).channels.elements() == 5);

  setSweep(c, SweepVariable::kPMaxDbm, {0.0, 20.0});
  const auto p = buildScenario(c, 1, 77);
  CHECK(p.budget.pMaxTransmit == doctest::Approx(100.0));
  REQUIRE(p.sides.size() == 2);
  CHECK(p.sides[0] == Side::kReflection);
  CHECK(p.sides[1] == Side::kTransmission);

  CHECK(trialSeed(1, 0, 0) == trialSeed(1, 0, 0));
  CHECK(trialSeed(1, 0, 0) != trialSeed(1, 0, 1));
  CHECK(trialSeed(1, 0, 0) != trialSeed(1, 1, 0));
  CHECK(trialSeed(1, 0, 0) != trialSeed(2, 0, 0));
}

TEST_CASE("paired sweep reuses one realization per trial") {
  auto c = tiny();
  setSweep(c, SweepVariable::kElementCount, {3.0, 5.0});
  CHECK(runSeed(c, 0, 2) != runSeed(c, 1, 2));
  c.pairAcrossSweep = true;
  CHECK(runSeed(c, 0, 2) == runSeed(c, 1, 2));
  CHECK(runSeed(c, 0, 2) == trialSeed(c.seed, 0, 2));

  // More elements only append fading rows (the planar layout, and so the
  // steering part, changes with the count; flat LoS isolates the fading).
  c.los = LosModel::kAllOnes;
  const auto small = buildScenario(c, 0, runSeed(c, 0, 2));
  const auto big = buildScenario(c, 1, runSeed(c, 1, 2));
  CHECK(big.channels.bsToRis.topRows(3).isApprox(small.channels.bsToRis, 0.0));
  for (std::size_t k = 0; k < small.channels.users(); ++k) {
    CHECK(big.channels.direct[k] == small.channels.direct[k]);
    CHECK(big.channels.risToUser[k].head(3) == small.channels.risToUser[k]);
  }
  CHECK(parseConfig(R"({"pairAcrossSweep": true})").pairAcrossSweep);
  CHECK_THROWS_AS(parseConfig(R"({"pairAcrossSweep": 1})"), ConfigError);
}

TEST_CASE("one trial at one value") {
  auto c = tiny();
  c.trials = 1;
  c.presets = {ArchitecturePreset::kNoRis};
  const auto r = runSweep(c);
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].stderr_ == 0.0);
  CHECK(r.cells[0].mean == r.runs[0].sumRate);
  CHECK(r.cells[0].failures == 0);
}

TEST_CASE("presets share channels within a trial") {
  auto c = tiny();
  c.trials = 3;
  const auto r = runSweep(c);
  REQUIRE(r.runs.size() == 6);
  std::map<int, std::uint64_t> seedOf;
  for (const auto& run : r.runs) {
    if (seedOf.count(run.trial)) CHECK(seedOf[run.trial] == run.seed);
    seedOf[run.trial] = run.seed;
  }
  CHECK(seedOf.size() == 3);
  for (const auto& cell : r.cells) {
    CHECK(cell.mean >= cell.minRate);
    CHECK(cell.mean <= cell.maxRate);
  }
}

TEST_CASE("no-surface mean rate grows with the power budget") {
  ExperimentConfig c;
  c.users = 4;
  c.antennas = 4;
  c.elements = 8;
  c.trials = 5;
  c.presets = {ArchitecturePreset::kNoRis};
  setSweep(c, SweepVariable::kPMaxDbm, {0.0, 10.0, 20.0});
  const auto r = runSweep(c);
  const double m0 = r.cell(0.0, ArchitecturePreset::kNoRis).mean;
  const double m1 = r.cell(10.0, ArchitecturePreset::kNoRis).mean;
  const double m2 = r.cell(20.0, ArchitecturePreset::kNoRis).mean;
  CHECK(m0 <= m1);
  CHECK(m1 <= m2);
}

TEST_CASE("persisted files") {
  auto c = tiny();
  c.trials = 5;
  setSweep(c, SweepVariable::kPMaxDbm, {0.0, 10.0, 20.0});
  const auto r = runSweep(c);
  const auto dir = scratch("persist");
  persistResults(r, dir, false);

  const auto rows = readCsv(dir / "results.csv");
  REQUIRE(rows.size() == 31);
  CHECK(rows[0] == std::vector<std::string>{"sweep_var", "sweep_value", "preset", "trial",
                                            "sum_rate_bps_hz", "converged", "iters",
                                            "wall_ms"});

  // Summary recomputed from results.csv alone.
  std::map<std::string, std::vector<double>> perCell;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][4] != "nan") perCell[rows[i][1] + "," + rows[i][2]].push_back(std::stod(rows[i][4]));
  }
  const auto summary = readCsv(dir / "summary.csv");
  REQUIRE(summary.size() == 1 + r.cells.size());
  for (std::size_t i = 1; i < summary.size(); ++i) {
    const auto& s = summary[i];
    const auto& cell = r.cells[i - 1];
    CHECK(std::abs(std::stod(s[6]) - cell.mean) <= 1e-9);
    const auto& rates = perCell[s[1] + "," + s[2]];
    double mean = 0.0;
    for (double x : rates) mean += x / rates.size();
    CHECK(std::abs(std::stod(s[6]) - mean) <= 1e-9);
    CHECK(std::stoi(s[3]) == 5);
  }

  for (auto preset : c.presets) {
    std::ifstream in(dir / "plotdata" / (std::string(presetName(preset)) + ".dat"));
    std::string line;
    std::getline(in, line);
    CHECK(line[0] == '#');
    int n = 0;
    while (std::getline(in, line)) {
      std::string v, m;
      std::stringstream(line) >> v >> m;
      bool found = false;
      for (std::size_t i = 1; i < summary.size(); ++i) {
        if (summary[i][1] == v && summary[i][2] == presetName(preset)) {
          CHECK(summary[i][6] == m);
          found = true;
        }
      }
      CHECK(found);
      ++n;
    }
    CHECK(n == 3);
  }

  const auto trace = dir / "trace" / (cellName(r.variable, 10.0, c.presets[1]) + ".json");
  REQUIRE(fs::exists(trace));
  const auto doc = nlohmann::json::parse(slurp(trace));
  CHECK(doc["runs"].size() == 5);
  CHECK(doc["runs"][0]["trace"]["inner"].size() > 1);
  CHECK(doc["preset"] == presetName(c.presets[1]));
  CHECK(fs::directory_iterator(dir / "trace") != fs::directory_iterator());

  // Same config, more workers: identical bytes.
  auto c2 = c;
  c2.workers = 3;
  const auto dir2 = scratch("persist2");
  persistResults(runSweep(c2), dir2, false);
  CHECK(slurp(dir / "results.csv") == slurp(dir2 / "results.csv"));
  CHECK(slurp(dir / "summary.csv") == slurp(dir2 / "summary.csv"));

  const auto blocker = scratch("blocked");
  std::ofstream(blocker) << "file";
  CHECK_THROWS(persistResults(r, blocker / "sub", false));
  fs::remove_all(dir);
  fs::remove_all(dir2);
  fs::remove(blocker);
}

TEST_CASE("failed runs are counted, not fatal") {
  auto c = tiny();
  c.budget.rateMin = 3.0;  // out of reach at 0 dBm, fine at 30 dBm
  c.algorithm.randomStartAttempts = 5;
  c.presets = {ArchitecturePreset::kNoRis};
  setSweep(c, SweepVariable::kPMaxDbm, {-20.0, 40.0});
  CHECK_THROWS_AS(runSweep(c), SweepError);

  RunRecord ok, bad;
  ok.sweepValue = bad.sweepValue = 1.0;
  ok.sumRate = 2.0;
  bad.failed = true;
  SweepResult r;
  r.values = {1.0};
  r.presets = {ArchitecturePreset::kMfRis};
  r.runs = {ok, bad};
  const auto cells = summarize(r);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].failures == 1);
  CHECK(cells[0].trials == 2);
  CHECK(cells[0].mean == 2.0);
}

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 12345.678, 1e-300, 20.0}) {
    CHECK(std::stod(formatNumber(v)) == v);
  }
  CHECK(formatNumber(20.0) == "20");
  CHECK(formatNumber(std::nan("")) == "nan");
}

TEST_CASE("demo config") {
  const auto d = demoConfig();
  CHECK(d.users == 4);
  CHECK(d.antennas == 4);
  CHECK(d.elements == 8);
  CHECK(d.trials == 10);
  CHECK_NOTHROW(d.validate());
}

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mfris/experiment.hpp"

namespace mfris {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void rejectUnknown(const json& obj, const std::string& path,
                   std::initializer_list<const char*> known) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

void readNumber(const json& obj, const std::string& path, const char* key, double& out) {
  if (obj.contains(key)) out = number(obj.at(key), join(path, key));
}

void readInt(const json& obj, const std::string& path, const char* key, int& out) {
  if (obj.contains(key)) out = integer(obj.at(key), join(path, key));
}

Position3D position(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) fail(path, "expected [x, y, z]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]"),
          number(j[2], path + "[2]")};
}

void readScenario(const json& s, ExperimentConfig& c) {
  const std::string p = "scenario";
  rejectUnknown(s, p, {"bs", "ris", "circleCenters", "radius", "users", "antennas",
                       "elements"});
  if (s.contains("bs")) c.bs = position(s["bs"], p + ".bs");
  if (s.contains("ris")) c.ris = position(s["ris"], p + ".ris");
  if (s.contains("circleCenters")) {
    const auto& cc = s["circleCenters"];
    if (!cc.is_array() || cc.size() != 2) fail(p + ".circleCenters", "expected two positions");
    for (int i = 0; i < 2; ++i) {
      c.circleCenters[i] = position(cc[i], p + ".circleCenters[" + std::to_string(i) + "]");
    }
  }
  readNumber(s, p, "radius", c.radius);
  readInt(s, p, "users", c.users);
  readInt(s, p, "antennas", c.antennas);
  readInt(s, p, "elements", c.elements);
}

struct DbBudget {
  double pMaxDbm = 20.0;
  double pAmplifyDbm = 10.0;
  double betaMaxDb = 22.0;
  double noiseDbm = -80.0;
  std::optional<double> noiseRisDbm;
  double rateMin = 0.1;
};

DbBudget readBudget(const json& root) {
  DbBudget d;
  if (!root.contains("budget")) return d;
  const auto& b = root["budget"];
  const std::string p = "budget";
  rejectUnknown(b, p, {"pMaxDbm", "pAmplifyDbm", "betaMaxDb", "noiseDbm", "noiseRisDbm",
                       "rateMin"});
  readNumber(b, p, "pMaxDbm", d.pMaxDbm);
  readNumber(b, p, "pAmplifyDbm", d.pAmplifyDbm);
  readNumber(b, p, "betaMaxDb", d.betaMaxDb);
  readNumber(b, p, "noiseDbm", d.noiseDbm);
  if (b.contains("noiseRisDbm")) d.noiseRisDbm = number(b["noiseRisDbm"], p + ".noiseRisDbm");
  readNumber(b, p, "rateMin", d.rateMin);
  return d;
}

void readChannel(const json& ch, ExperimentConfig& c) {
  const std::string p = "channel";
  rejectUnknown(ch, p, {"referenceLossDb", "exponentBsRis", "exponentBsUser",
                        "exponentRisUser", "kFactorDb", "los"});
  readNumber(ch, p, "referenceLossDb", c.pathLoss.referenceLossDb);
  readNumber(ch, p, "exponentBsRis", c.pathLoss.exponentBsRis);
  readNumber(ch, p, "exponentBsUser", c.pathLoss.exponentBsUser);
  readNumber(ch, p, "exponentRisUser", c.pathLoss.exponentRisUser);
  readNumber(ch, p, "kFactorDb", c.kFactorDb);
  if (ch.contains("los")) {
    if (!ch["los"].is_string()) fail(p + ".los", "expected a string");
    const auto los = ch["los"].get<std::string>();
    if (los == "steering") {
      c.los = LosModel::kSteering;
    } else if (los == "all_ones") {
      c.los = LosModel::kAllOnes;
    } else {
      fail(p + ".los", "expected \"steering\" or \"all_ones\"");
    }
  }
}

void readAlgorithm(const json& a, AlgorithmConfig& c) {
  const std::string p = "algorithm";
  rejectUnknown(a, p, {"delta", "maxInnerIter", "etaInit", "xiInit", "mu", "epsilon",
                       "maxOuterIter", "randomStartAttempts", "solverGapTol",
                       "solverFeasTol", "solverMaxIter"});
  readNumber(a, p, "delta", c.delta);
  readInt(a, p, "maxInnerIter", c.maxInnerIter);
  readNumber(a, p, "etaInit", c.etaInit);
  readNumber(a, p, "xiInit", c.xiInit);
  readNumber(a, p, "mu", c.mu);
  readNumber(a, p, "epsilon", c.epsilon);
  readInt(a, p, "maxOuterIter", c.maxOuterIter);
  readInt(a, p, "randomStartAttempts", c.randomStartAttempts);
  readNumber(a, p, "solverGapTol", c.solverTol.gap);
  readNumber(a, p, "solverFeasTol", c.solverTol.feas);
  readInt(a, p, "solverMaxIter", c.solverMaxIter);
}

}  // namespace

const char* sweepVariableName(SweepVariable v) {
  switch (v) {
    case SweepVariable::kPMaxDbm: return "pMaxDbm";
    case SweepVariable::kElementCount: return "elementCount";
    case SweepVariable::kRisYCoord: return "risYCoord";
  }
  return "unknown";
}

SweepVariable parseSweepVariable(const std::string& name) {
  for (auto v : {SweepVariable::kPMaxDbm, SweepVariable::kElementCount,
                 SweepVariable::kRisYCoord}) {
    if (name == sweepVariableName(v)) return v;
  }
  throw std::invalid_argument("unknown sweep variable '" + name + "'");
}

void setSweep(ExperimentConfig& config, SweepVariable variable,
              std::vector<double> values) {
  config.sweep.variable = variable;
  config.sweep.values = std::move(values);
  config.sweepLinear.clear();
  for (double v : config.sweep.values) {
    config.sweepLinear.push_back(variable == SweepVariable::kPMaxDbm ? dbToLinear(v) : v);
  }
}

void ExperimentConfig::validate() const {
  if (!(radius > 0.0)) fail("scenario.radius", "must be > 0");
  if (users < 1) fail("scenario.users", "must be >= 1");
  if (antennas < 1) fail("scenario.antennas", "must be >= 1");
  if (elements < 1) fail("scenario.elements", "must be >= 1");
  if (!(budget.pMaxTransmit >= 0.0)) fail("budget.pMaxDbm", "invalid power");
  if (!(budget.pAmplify >= 0.0)) fail("budget.pAmplifyDbm", "invalid power");
  if (!(budget.noiseUser > 0.0)) fail("budget.noiseDbm", "must be a positive power");
  if (!(budget.noiseRis >= 0.0)) fail("budget.noiseRisDbm", "invalid power");
  if (!(budget.rateMin >= 0.0)) fail("budget.rateMin", "must be >= 0");
  if (!(betaMax > 0.0)) fail("budget.betaMaxDb", "invalid amplitude bound");
  try {
    pathLoss.validate();
  } catch (const std::exception& e) {
    fail("channel", e.what());
  }
  try {
    algorithm.validate();
  } catch (const std::exception& e) {
    fail("algorithm", e.what());
  }
  if (sweep.values.empty()) fail("sweep.values", "must not be empty");
  for (std::size_t i = 0; i < sweep.values.size(); ++i) {
    const std::string at = "sweep.values[" + std::to_string(i) + "]";
    const double v = sweep.values[i];
    if (!std::isfinite(v)) fail(at, "must be finite");
    if (i > 0 && !(v > sweep.values[i - 1])) fail(at, "values must be sorted ascending");
    if (sweep.variable == SweepVariable::kElementCount &&
        (v < 1.0 || v != std::floor(v))) {
      fail(at, "element count must be a positive integer");
    }
  }
  if (sweepLinear.size() != sweep.values.size()) fail("sweep.values", "not converted");
  if (presets.empty()) fail("presets", "must not be empty");
  std::set<ArchitecturePreset> seen(presets.begin(), presets.end());
  if (seen.size() != presets.size()) fail("presets", "duplicate preset");
  if (trials < 1) fail("trials", "must be >= 1");
  if (workers < 1) fail("workers", "must be >= 1");
}

ExperimentConfig parseConfig(const std::string& text) {
  ExperimentConfig c;
  json root = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
    }
  }
  rejectUnknown(root, "", {"scenario", "budget", "channel", "algorithm", "sweep",
                           "presets", "trials", "seed", "workers", "recordWallTime",
                           "pairAcrossSweep"});
  if (root.contains("scenario")) readScenario(root["scenario"], c);

  // dB fields become linear here and nowhere else.
  const DbBudget db = readBudget(root);
  c.budget.pMaxTransmit = dbToLinear(db.pMaxDbm);
  c.budget.pAmplify = dbToLinear(db.pAmplifyDbm);
  c.budget.noiseUser = dbToLinear(db.noiseDbm);
  c.budget.noiseRis = dbToLinear(db.noiseRisDbm.value_or(db.noiseDbm));
  c.budget.rateMin = db.rateMin;
  c.betaMax = dbToLinear(db.betaMaxDb);

  if (root.contains("channel")) readChannel(root["channel"], c);
  if (root.contains("algorithm")) readAlgorithm(root["algorithm"], c.algorithm);

  SweepVariable variable = SweepVariable::kPMaxDbm;
  std::vector<double> values{db.pMaxDbm};
  if (root.contains("sweep")) {
    const auto& s = root["sweep"];
    rejectUnknown(s, "sweep", {"variable", "values"});
    if (s.contains("variable")) {
      if (!s["variable"].is_string()) fail("sweep.variable", "expected a string");
      try {
        variable = parseSweepVariable(s["variable"].get<std::string>());
      } catch (const std::invalid_argument& e) {
        fail("sweep.variable", e.what());
      }
    }
    if (!s.contains("values")) fail("sweep.values", "required when sweep is given");
    if (!s["values"].is_array()) fail("sweep.values", "expected a list");
    values.clear();
    for (std::size_t i = 0; i < s["values"].size(); ++i) {
      values.push_back(number(s["values"][i], "sweep.values[" + std::to_string(i) + "]"));
    }
  }
  setSweep(c, variable, std::move(values));

  if (root.contains("presets")) {
    const auto& p = root["presets"];
    if (!p.is_array()) fail("presets", "expected a list");
    c.presets.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string at = "presets[" + std::to_string(i) + "]";
      if (!p[i].is_string()) fail(at, "expected a string");
      try {
        c.presets.push_back(parsePreset(p[i].get<std::string>()));
      } catch (const std::invalid_argument& e) {
        fail(at, e.what());
      }
    }
  }
  readInt(root, "", "trials", c.trials);
  readInt(root, "", "workers", c.workers);
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("recordWallTime")) {
    if (!root["recordWallTime"].is_boolean()) fail("recordWallTime", "expected a boolean");
    c.recordWallTime = root["recordWallTime"].get<bool>();
  }
  if (root.contains("pairAcrossSweep")) {
    if (!root["pairAcrossSweep"].is_boolean()) fail("pairAcrossSweep", "expected a boolean");
    c.pairAcrossSweep = root["pairAcrossSweep"].get<bool>();
  }
  c.validate();
  return c;
}

ExperimentConfig loadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseConfig(ss.str());
}

ExperimentConfig demoConfig() {
  ExperimentConfig c;
  c.users = 4;
  c.antennas = 4;
  c.elements = 8;
  c.trials = 10;
  setSweep(c, SweepVariable::kPMaxDbm, {0.0, 10.0, 20.0});
  c.budget.pMaxTransmit = dbToLinear(20.0);
  return c;
}

}  // namespace mfris

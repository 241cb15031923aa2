#include <charconv>
#include <cmath>
#include <fstream>
#include <system_error>

#include <json.hpp>

#include "mfris/experiment.hpp"

namespace mfris {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json toJson(const IterationTrace& t) {
  json inner = json::array();
  for (const auto& r : t.inner) {
    inner.push_back({{"outer", r.outer},
                     {"inner", r.inner},
                     {"sum_rate", r.sumRate},
                     {"objective", r.objective},
                     {"penalty_w", r.penaltyW},
                     {"penalty_v", r.penaltyV},
                     {"rank_violation_w", r.rankViolationW},
                     {"rank_violation_v", r.rankViolationV},
                     {"residual", r.residual},
                     {"wall_ms", r.wallMs}});
  }
  json outer = json::array();
  for (const auto& o : t.outer) {
    outer.push_back({{"eta", o.eta},
                     {"xi", o.xi},
                     {"inner_iterations", o.innerIterations},
                     {"reordered", o.reordered}});
  }
  return {{"inner", inner}, {"outer", outer}};
}

// json has no NaN; failed cells carry null.
json numberOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream openOut(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

std::string formatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string traceToJson(const IterationTrace& trace) { return toJson(trace).dump(); }

std::string cellName(SweepVariable variable, double value, ArchitecturePreset preset) {
  return std::string(sweepVariableName(variable)) + "_" + formatNumber(value) + "_" +
         presetName(preset);
}

void persistResults(const SweepResult& result, const fs::path& outDir,
                    bool recordWallTime) {
  std::error_code ec;
  fs::create_directories(outDir / "trace", ec);
  if (!ec) fs::create_directories(outDir / "plotdata", ec);
  if (ec) throw std::runtime_error("cannot create " + outDir.string() + ": " + ec.message());
  const std::string var = sweepVariableName(result.variable);

  {
    const auto p = outDir / "results.csv";
    auto out = openOut(p);
    out << "sweep_var,sweep_value,preset,trial,sum_rate_bps_hz,converged,iters,wall_ms\n";
    for (const auto& r : result.runs) {
      out << var << ',' << formatNumber(r.sweepValue) << ',' << presetName(r.preset) << ','
          << r.trial << ',' << (r.failed ? "nan" : formatNumber(r.sumRate)) << ','
          << (r.converged ? 1 : 0) << ',' << r.iterations << ','
          << (recordWallTime ? formatNumber(std::round(r.wallMs * 1e3) / 1e3) : "NA")
          << '\n';
    }
    finish(out, p);
  }
  {
    const auto p = outDir / "summary.csv";
    auto out = openOut(p);
    out << "sweep_var,sweep_value,preset,trials,failures,converged,mean_sum_rate,stderr,"
           "min,max,mean_iters\n";
    for (const auto& c : result.cells) {
      out << var << ',' << formatNumber(c.sweepValue) << ',' << presetName(c.preset) << ','
          << c.trials << ',' << c.failures << ',' << c.converged << ','
          << formatNumber(c.mean) << ',' << formatNumber(c.stderr_) << ','
          << formatNumber(c.minRate) << ',' << formatNumber(c.maxRate) << ','
          << formatNumber(c.meanIterations) << '\n';
    }
    finish(out, p);
  }
  for (const auto& c : result.cells) {
    json runs = json::array();
    for (const auto& r : result.runs) {
      if (r.sweepValue != c.sweepValue || r.preset != c.preset) continue;
      runs.push_back({{"trial", r.trial},
                      {"seed", r.seed},
                      {"failed", r.failed},
                      {"error", r.error},
                      {"status", r.status},
                      {"sum_rate", r.failed ? json(nullptr) : json(r.sumRate)},
                      {"converged", r.converged},
                      {"feasible", r.feasible},
                      {"iterations", r.iterations},
                      {"solver_failures", r.solverFailures},
                      {"wall_ms", r.wallMs},
                      {"trace", toJson(r.trace)}});
    }
    json doc = {{"sweep_var", var},
                {"sweep_value", c.sweepValue},
                {"preset", presetName(c.preset)},
                {"mean_sum_rate", numberOrNull(c.mean)},
                {"runs", runs}};
    const auto p = outDir / "trace" / (cellName(result.variable, c.sweepValue, c.preset) + ".json");
    auto out = openOut(p);
    out << doc.dump(1) << '\n';
    finish(out, p);
  }
  for (auto preset : result.presets) {
    const auto p = outDir / "plotdata" / (std::string(presetName(preset)) + ".dat");
    auto out = openOut(p);
    out << "# " << var << " mean_sum_rate_bps_hz\n";
    for (const auto& c : result.cells) {
      if (c.preset != preset || !std::isfinite(c.mean)) continue;
      out << formatNumber(c.sweepValue) << ' ' << formatNumber(c.mean) << '\n';
    }
    finish(out, p);
  }
}

}  // namespace mfris

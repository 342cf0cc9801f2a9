#pragma once

// End-to-end run: ingest, buffer the warm-up/validation prefix, run the
// warm-up protocol, then keep streaming and refreshing outputs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "../diagnostics.hpp"
#include "../simdata.hpp"
#include "archive.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "design.hpp"
#include "report.hpp"

namespace streamvb::io {

enum class RunMode { fit, diagnose };

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitReject = 2;

struct RunOptions {
  RunMode mode = RunMode::fit;
  // Keep streaming even when the warm-up is not validated.
  bool force = false;
  bool parallel = true;
};

struct RunOutcome {
  int exit_code = kExitOk;
  Recommendation recommendation;
  std::int64_t records = 0;
  std::int64_t malformed = 0;
};

namespace fs = std::filesystem;

inline void write_summary(const fs::path& dir, const Design& d, const FittedState& f) {
  const auto rows = summarize(d, f);
  const auto n = records_assimilated(f);
  write_atomically(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, rows, n); });
}

inline void write_snapshot(const fs::path& dir, const Design& d, const FittedState& f, bool mirror) {
  Archive a;
  d.save(a);
  save_state(a, f);
  write_atomically(dir / "state.bin", [&](std::ostream& os) { a.write_binary(os); }, true);
  if (mirror) write_atomically(dir / "state.csv", [&](std::ostream& os) { a.write_csv(os); });
}

/// Density grids (when enabled) and one curve per smooth term; curve.csv is the first.
inline void write_final_artifacts(const fs::path& dir, const Design& d, const FittedState& f) {
  if (d.config().densities) {
    for (const auto& row : summarize(d, f)) {
      const auto grid = density_grid(row);
      if (grid.empty()) continue;
      write_atomically(dir / ("density_" + sanitize_label(row.s.label) + ".csv"),
                       [&](std::ostream& os) { write_density_csv(os, grid); });
    }
  }
  for (std::size_t s = 0; s < d.bases().size(); ++s) {
    const auto curve = smooth_curve(d, f, s);
    auto emit = [&](std::ostream& os) { write_curve_csv(os, curve); };
    write_atomically(dir / ("curve_" + sanitize_label(d.config().smooth[s].column) + ".csv"), emit);
    if (s == 0) write_atomically(dir / "curve.csv", emit);
  }
}

inline std::string recommendation_line(const Recommendation& r, double threshold) {
  char buf[256];
  if (r.accept)
    std::snprintf(buf, sizeof buf, "recommendation: accept (divergence score %.6g < threshold %.6g)", r.score, threshold);
  else
    std::snprintf(buf, sizeof buf,
                  "recommendation: reject (divergence score %.6g >= threshold %.6g); retry with --warmup %lld", r.score,
                  threshold, static_cast<long long>(r.suggested_n_warm));
  return buf;
}

inline RunOutcome run(const RunConfig& cfg, std::istream& input, const RunOptions& opts, std::ostream& out,
                      std::ostream& err) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  CsvSource src(input, cfg, &err);
  ReplayableStream stream(src);
  const auto need = static_cast<std::size_t>(cfg.n_warm + cfg.n_valid);
  if (stream.fill(need) < need)
    throw ConfigError("stream exhausted after " + std::to_string(stream.prefix().size()) +
                      " records; n_warm + n_valid = " + std::to_string(need) + " required");

  const Design design = Design::build(cfg, stream.prefix());
  std::vector<Observation> prefix;
  prefix.reserve(need);
  for (const auto& r : stream.prefix()) {
    std::string why;
    prefix.push_back(*design.observe(r, why));  // every prefix level is known by construction
  }

  RunOutcome outcome;
  const AnyModel model = make_model(design);
  FittedState fitted = std::visit(
      [&](const auto& m) -> FittedState {
        auto res = run_warmup_protocol(std::span<const Observation>(prefix), cfg.n_warm, cfg.n_valid, m, opts.parallel);
        write_atomically(dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, res.trace); });
        if (res.trace.flagged) err << "warning: a prefix batch fit reached max_iter without converging\n";
        outcome.recommendation = recommend(res.trace, cfg.threshold);
        return std::move(res.online);
      },
      model);
  out << recommendation_line(outcome.recommendation, cfg.threshold) << '\n';

  auto finish = [&](int code) {
    outcome.exit_code = code;
    outcome.records = records_assimilated(fitted);
    outcome.malformed = src.malformed();
    return outcome;
  };
  if (opts.mode == RunMode::diagnose) return finish(outcome.recommendation.accept ? kExitOk : kExitReject);
  if (!outcome.recommendation.accept && !opts.force) {
    err << "error: warm-up not validated; streaming stopped (use --force to continue anyway)\n";
    write_summary(dir, design, fitted);
    return finish(kExitReject);
  }

  write_summary(dir, design, fitted);
  write_snapshot(dir, design, fitted, false);
  std::visit(
      [&](const auto& m) {
        auto& f = std::get<typename std::decay_t<decltype(m)>::Fitted>(fitted);
        while (auto rec = stream.next()) {
          std::string why;
          auto obs = design.observe(*rec, why);
          if (!obs) {
            src.reject(why);
            continue;
          }
          m.step(f, *obs);
          if (f.stats.n % cfg.cadence == 0) {
            write_summary(dir, design, fitted);
            write_snapshot(dir, design, fitted, false);
          }
        }
      },
      model);

  write_summary(dir, design, fitted);
  write_snapshot(dir, design, fitted, true);
  write_final_artifacts(dir, design, fitted);
  if (src.malformed() > 0) err << "warning: " << src.malformed() << " malformed rows skipped\n";
  return finish(kExitOk);
}

/// Re-renders summary.csv (and curves, densities) from a saved snapshot.
inline void summarize_snapshot(const fs::path& snapshot, const fs::path& dir) {
  std::ifstream in(snapshot, std::ios::binary);
  if (!in) throw SnapshotError("cannot open snapshot " + snapshot.string());
  const auto archive = Archive::read_binary(in);
  const auto design = Design::load(archive);
  const auto fitted = load_state(archive);
  fs::create_directories(dir);
  write_summary(dir, design, fitted);
  write_final_artifacts(dir, design, fitted);
}

/// Built-in configuration matching a simulation scenario's columns.
inline RunConfig default_config(sim::Scenario s) {
  RunConfig c;
  c.response = "y";
  switch (s) {
    case sim::Scenario::gaussian_additive:
      c.model = ModelKind::lmm;
      c.linear = {"x1", "x2", "x3"};
      c.smooth = {{"x4"}, {"x5"}, {"x6"}};
      break;
    case sim::Scenario::logistic_additive:
      c.model = ModelKind::logistic;
      c.linear = {"x1"};
      c.smooth = {{"x2"}, {"x3"}};
      break;
    case sim::Scenario::binary_1d:
      c.model = ModelKind::logistic;
      c.smooth = {{"x"}};
      break;
    case sim::Scenario::random_intercept:
      c.model = ModelKind::lmm;
      c.linear = {"x"};
      c.groups = {"group"};
      break;
    case sim::Scenario::sparse_signal: {
      c.model = ModelKind::sparse;
      const sim::Generator g(sim::SimConfig{.scenario = s});
      const auto names = g.column_names();
      c.linear.assign(names.begin() + 1, names.end());
      break;
    }
  }
  return c;
}

/// Scenario records as CSV with a header row.
inline void write_simulation_csv(std::ostream& os, const sim::Generator& g) {
  const auto names = g.column_names();
  for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
  os << '\n';
  const bool grouped = g.config().scenario == sim::Scenario::random_intercept;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    const auto r = g.record(i);
    os << format_number(r.y);
    for (double x : r.x) os << ',' << format_number(x);
    if (grouped) os << ',' << r.group;
    os << '\n';
  }
}

}  // namespace streamvb::io

#pragma once

// Batch warm-up, online validation run and batch-vs-online comparison.
//
// The first n_warm observations are batch-fitted; the online fitter is
// seeded from that fit and stepped to n_warm + n_valid. At 11 sample sizes
// (n_warm plus 10 equally spaced points up to n_warm + n_valid) the online
// summaries are compared with independent batch fits of the same prefix.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "models.hpp"
#include "summaries.hpp"

namespace streamvb {

struct DiagnosticTrace {
  std::int64_t n_warm = 0;
  std::int64_t n_valid = 0;
  std::vector<std::int64_t> sample_sizes;
  std::vector<std::string> labels;
  // [grid point][parameter]
  std::vector<std::vector<ParamSummary>> batch;
  std::vector<std::vector<ParamSummary>> online;
  // True when some prefix batch fit hit max_iter.
  bool flagged = false;
};

inline constexpr int kGridIntervals = 10;

/// n_warm, then 10 equally spaced sizes ending at n_warm + n_valid.
inline std::vector<std::int64_t> diagnostic_grid(std::int64_t n_warm, std::int64_t n_valid) {
  if (n_valid < kGridIntervals) throw std::invalid_argument("diagnostic grid: n_valid must be at least 10");
  std::vector<std::int64_t> grid;
  for (int i = 0; i <= kGridIntervals; ++i)
    grid.push_back(n_warm + static_cast<std::int64_t>(std::llround(static_cast<double>(n_valid) * i / kGridIntervals)));
  return grid;
}

template <OnlineModel M>
struct ProtocolResult {
  DiagnosticTrace trace;
  // Online fitter after n_warm + n_valid observations, ready to continue.
  typename M::Fitted online;
};

template <OnlineModel M>
ProtocolResult<M> run_warmup_protocol(std::span<const Observation> data, std::int64_t n_warm, std::int64_t n_valid,
                                      const M& model, bool parallel = true) {
  if (n_warm < 1) throw std::invalid_argument("warm-up protocol: n_warm must be positive");
  const auto grid = diagnostic_grid(n_warm, n_valid);
  if (static_cast<std::int64_t>(data.size()) < n_warm + n_valid)
    throw std::invalid_argument("warm-up protocol: stream supplies " + std::to_string(data.size()) +
                                " observations, need n_warm + n_valid = " + std::to_string(n_warm + n_valid));

  ProtocolResult<M> result;
  DiagnosticTrace& trace = result.trace;
  trace.n_warm = n_warm;
  trace.n_valid = n_valid;
  trace.sample_sizes = grid;

  // Independent prefix batch fits; the first one also seeds the online run.
  auto prefix_fit = [&](std::int64_t n) { return model.fit_batch(data.first(static_cast<std::size_t>(n))); };
  std::vector<typename M::Fitted> batch_fits(grid.size());
  if (parallel) {
    std::vector<std::future<typename M::Fitted>> jobs;
    for (std::size_t g = 0; g < grid.size(); ++g) jobs.push_back(std::async(std::launch::async, prefix_fit, grid[g]));
    for (std::size_t g = 0; g < grid.size(); ++g) batch_fits[g] = jobs[g].get();
  } else {
    for (std::size_t g = 0; g < grid.size(); ++g) batch_fits[g] = prefix_fit(grid[g]);
  }

  for (const auto& f : batch_fits) {
    trace.flagged = trace.flagged || !f.converged;
    trace.batch.push_back(model.summarize(f));
  }
  for (const auto& s : trace.batch.front()) trace.labels.push_back(s.label);

  result.online = batch_fits.front();
  trace.online.push_back(model.summarize(result.online));
  std::size_t next_grid = 1;
  for (std::int64_t i = n_warm; i < n_warm + n_valid; ++i) {
    model.step(result.online, data[static_cast<std::size_t>(i)]);
    if (next_grid < grid.size() && i + 1 == grid[next_grid]) {
      trace.online.push_back(model.summarize(result.online));
      ++next_grid;
    }
  }
  return result;
}

/// Largest |online mean - batch mean| in units of the batch 95% half-width.
inline double divergence_score(const DiagnosticTrace& trace) {
  double score = 0.0;
  for (std::size_t g = 0; g < trace.batch.size() && g < trace.online.size(); ++g) {
    for (std::size_t j = 0; j < trace.batch[g].size(); ++j) {
      const auto& b = trace.batch[g][j];
      const auto& o = trace.online[g][j];
      const double half = std::max(0.5 * (b.q975 - b.q025), 1e-12);
      score = std::max(score, std::abs(o.mean - b.mean) / half);
    }
  }
  return score;
}

struct Recommendation {
  bool accept = false;
  double score = 0.0;
  std::int64_t suggested_n_warm = 0;
};

inline constexpr double kDefaultDivergenceThreshold = 0.5;

inline Recommendation recommend(const DiagnosticTrace& trace, double threshold = kDefaultDivergenceThreshold) {
  const double score = divergence_score(trace);
  if (score < threshold) return {true, score, trace.n_warm};
  return {false, score, 2 * trace.n_warm};
}

/// Columns n, parameter, series, mean, q025, q975.
inline void write_trace_csv(std::ostream& os, const DiagnosticTrace& trace) {
  const auto old_precision = os.precision(17);
  os << "n,parameter,series,mean,q025,q975\n";
  for (std::size_t g = 0; g < trace.sample_sizes.size(); ++g) {
    for (std::size_t j = 0; j < trace.labels.size(); ++j) {
      const auto& b = trace.batch[g][j];
      const auto& o = trace.online[g][j];
      os << trace.sample_sizes[g] << ',' << trace.labels[j] << ",batch," << b.mean << ',' << b.q025 << ',' << b.q975
         << '\n';
      os << trace.sample_sizes[g] << ',' << trace.labels[j] << ",online," << o.mean << ',' << o.q025 << ',' << o.q975
         << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace streamvb

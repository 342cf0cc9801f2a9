#pragma once

// Seeded simulation scenarios. Every record is a pure function of
// (seed, index): record i seeds its own engine from a mix of the two, so any
// prefix can be replayed without generating earlier records.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "special_functions.hpp"

namespace streamvb::sim {

enum class Scenario { gaussian_additive, logistic_additive, binary_1d, random_intercept, sparse_signal };

inline std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::gaussian_additive: return "gaussian_additive";
    case Scenario::logistic_additive: return "logistic_additive";
    case Scenario::binary_1d: return "binary_1d";
    case Scenario::random_intercept: return "random_intercept";
    case Scenario::sparse_signal: return "sparse_signal";
  }
  return "unknown";
}

inline std::optional<Scenario> parse_scenario(std::string_view name) {
  for (auto s : {Scenario::gaussian_additive, Scenario::logistic_additive, Scenario::binary_1d,
                 Scenario::random_intercept, Scenario::sparse_signal})
    if (scenario_name(s) == name) return s;
  return std::nullopt;
}

struct SimConfig {
  std::uint64_t seed = 1;
  std::int64_t n = 3000;
  Scenario scenario = Scenario::gaussian_additive;

  // random_intercept
  int groups = 10;
  double beta0 = 0.3;
  double beta1 = 0.7;
  double sig_u = 0.5;
  double sig_eps = 0.4;

  // sparse_signal
  int basis_size = 64;
  int active = 6;
  double amplitude = 4.0;
};

struct Record {
  double y = 0.0;
  std::vector<double> x;
  int group = 0;  // 1-based group label for random_intercept, else 0
};

// Truth functions of the additive scenarios.
inline double f4(double x) { return 2.0 * normal_cdf(6.0 * x - 3.0); }
inline double f5(double x) { return std::sin(3.0 * std::numbers::pi * x * x * x); }
inline double f6(double x) { return std::cos(4.0 * std::numbers::pi * x); }
inline double f2_logistic(double x) { return std::cos(4.0 * std::numbers::pi * x) + 2.0 * x; }
inline double f3_logistic(double x) { return std::sin(2.0 * std::numbers::pi * x * x); }

inline constexpr double kBetaGaussian[3] = {0.2, -0.3, 0.6};
inline constexpr double kBetaLogistic = 0.2;

/// Success probability of the one-dimensional binary scenario.
inline double binary_1d_probability(double x) { return logistic(std::cos(4.0 * std::numbers::pi * x) + 2.0 * x - 1.0); }

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Engine for stream position `index` of substream `stream`.
inline std::mt19937_64 engine_for(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index));
}

class Generator {
 public:
  explicit Generator(SimConfig cfg) : cfg_(cfg) {
    if (cfg_.n < 1) throw std::invalid_argument("SimConfig: n must be at least 1");
    if (cfg_.scenario == Scenario::random_intercept) {
      if (cfg_.groups < 1) throw std::invalid_argument("random_intercept: m must be at least 1");
      auto eng = engine_for(cfg_.seed, kGroupStream, 0);
      std::normal_distribution<double> nd(0.0, 1.0);
      for (int g = 0; g < cfg_.groups; ++g) group_effects_.push_back(cfg_.sig_u * nd(eng));
    }
    if (cfg_.scenario == Scenario::sparse_signal) {
      if (cfg_.basis_size < 1) throw std::invalid_argument("sparse_signal: K must be at least 1");
      if (cfg_.active < 0 || cfg_.active > cfg_.basis_size)
        throw std::invalid_argument("sparse_signal: active count must lie in 0..K");
      coefficients_.assign(static_cast<std::size_t>(cfg_.basis_size), 0.0);
      std::vector<int> idx(static_cast<std::size_t>(cfg_.basis_size));
      for (int k = 0; k < cfg_.basis_size; ++k) idx[static_cast<std::size_t>(k)] = k;
      auto eng = engine_for(cfg_.seed, kCoefStream, 0);
      std::shuffle(idx.begin(), idx.end(), eng);
      std::bernoulli_distribution sign(0.5);
      for (int a = 0; a < cfg_.active; ++a)
        coefficients_[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] =
            sign(eng) ? cfg_.amplitude : -cfg_.amplitude;
    }
  }

  const SimConfig& config() const { return cfg_; }
  std::int64_t size() const { return cfg_.n; }

  /// Planted coefficients of the sparse scenario.
  const std::vector<double>& coefficients() const { return coefficients_; }
  /// Per-group random intercepts of the random_intercept scenario.
  const std::vector<double>& group_effects() const { return group_effects_; }

  std::vector<std::string> column_names() const {
    switch (cfg_.scenario) {
      case Scenario::gaussian_additive: return {"y", "x1", "x2", "x3", "x4", "x5", "x6"};
      case Scenario::logistic_additive: return {"y", "x1", "x2", "x3"};
      case Scenario::binary_1d: return {"y", "x"};
      case Scenario::random_intercept: return {"y", "x", "group"};
      case Scenario::sparse_signal: {
        std::vector<std::string> names{"y"};
        for (int k = 1; k <= cfg_.basis_size; ++k) names.push_back("z" + std::to_string(k));
        return names;
      }
    }
    return {};
  }

  Record record(std::int64_t i) const {
    auto eng = engine_for(cfg_.seed, kRecordStream, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    Record r;
    switch (cfg_.scenario) {
      case Scenario::gaussian_additive: {
        r.x.resize(6);
        for (int j = 0; j < 3; ++j) r.x[static_cast<std::size_t>(j)] = coin(eng) ? 1.0 : 0.0;
        for (int j = 3; j < 6; ++j) r.x[static_cast<std::size_t>(j)] = nd(eng);
        const double mean = kBetaGaussian[0] * r.x[0] + kBetaGaussian[1] * r.x[1] + kBetaGaussian[2] * r.x[2] +
                            f4(r.x[3]) + f5(r.x[4]) + f6(r.x[5]);
        r.y = mean + nd(eng);
        break;
      }
      case Scenario::logistic_additive: {
        r.x = {coin(eng) ? 1.0 : 0.0, nd(eng), nd(eng)};
        const double eta = kBetaLogistic * r.x[0] + f2_logistic(r.x[1]) + f3_logistic(r.x[2]);
        r.y = ud(eng) < logistic(eta) ? 1.0 : 0.0;
        break;
      }
      case Scenario::binary_1d: {
        const double x = ud(eng);
        r.x = {x};
        r.y = ud(eng) < binary_1d_probability(x) ? 1.0 : 0.0;
        break;
      }
      case Scenario::random_intercept: {
        std::uniform_int_distribution<int> pick(1, cfg_.groups);
        r.group = pick(eng);
        const double x = ud(eng);
        r.x = {x};
        r.y = cfg_.beta0 + group_effects_[static_cast<std::size_t>(r.group - 1)] + cfg_.beta1 * x +
              cfg_.sig_eps * nd(eng);
        break;
      }
      case Scenario::sparse_signal: {
        r.x.resize(static_cast<std::size_t>(cfg_.basis_size));
        double mean = 0.0;
        for (std::size_t k = 0; k < r.x.size(); ++k) {
          r.x[k] = nd(eng);
          mean += r.x[k] * coefficients_[k];
        }
        r.y = mean + nd(eng);
        break;
      }
    }
    return r;
  }

  std::vector<Record> records(std::int64_t count) const {
    std::vector<Record> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) out.push_back(record(i));
    return out;
  }

 private:
  static constexpr std::uint64_t kRecordStream = 1;
  static constexpr std::uint64_t kGroupStream = 2;
  static constexpr std::uint64_t kCoefStream = 3;

  SimConfig cfg_;
  std::vector<double> group_effects_;
  std::vector<double> coefficients_;
};

}  // namespace streamvb::sim

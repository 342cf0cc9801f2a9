#pragma once

// Turns configured column roles into design rows. Everything data-dependent
// (knots, group levels, scaling maps, predictor means) is frozen from the
// buffered prefix so later records map onto the same columns.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "../lmm.hpp"
#include "../models.hpp"
#include "../splines.hpp"
#include "archive.hpp"
#include "config.hpp"
#include "csv.hpp"

namespace streamvb::io {

class Design {
 public:
  /// `prefix` holds the buffered n_warm + n_valid records; knots, scaling and
  /// means use the first n_warm, group levels use all of them.
  static Design build(const RunConfig& cfg, const std::vector<StreamRecord>& prefix) {
    cfg.validate();
    const auto n_warm = static_cast<std::size_t>(std::min<std::int64_t>(cfg.n_warm, static_cast<std::int64_t>(prefix.size())));
    if (n_warm == 0) throw ConfigError("design: no warm-up records");
    Design d;
    d.cfg_ = cfg;
    const std::size_t L = cfg.linear.size(), S = cfg.smooth.size();
    d.x_offset_.assign(L + S, 0.0);
    d.x_scale_.assign(L + S, 1.0);
    d.x_mean_.assign(L + S, 0.0);
    for (std::size_t j = 0; j < L + S; ++j) {
      double lo = 0, hi = 0, sum = 0;
      for (std::size_t i = 0; i < n_warm; ++i) {
        const double v = raw_value(prefix[i], j, L);
        if (i == 0) lo = hi = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      d.x_mean_[j] = sum / static_cast<double>(n_warm);
      if (cfg.scaling) {
        d.x_offset_[j] = lo;
        d.x_scale_[j] = hi > lo ? hi - lo : 1.0;
      }
    }
    if (cfg.scaling && cfg.model != ModelKind::logistic) {
      double lo = prefix[0].y, hi = prefix[0].y;
      for (std::size_t i = 0; i < n_warm; ++i) {
        lo = std::min(lo, prefix[i].y);
        hi = std::max(hi, prefix[i].y);
      }
      d.y_offset_ = lo;
      d.y_scale_ = hi > lo ? hi - lo : 1.0;
    }
    for (std::size_t s = 0; s < S; ++s) {
      std::vector<double> xs;
      for (std::size_t i = 0; i < n_warm; ++i) xs.push_back(d.scale_x(L + s, prefix[i].smooth[s]));
      const int k = cfg.smooth[s].num_knots > 0 ? cfg.smooth[s].num_knots
                                                : static_cast<int>(default_num_knots(n_warm));
      try {
        d.bases_.push_back(make_knots(xs, static_cast<std::size_t>(k)));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("smooth term '" + cfg.smooth[s].column + "': " + e.what());
      }
    }
    d.levels_.resize(cfg.groups.size());
    for (const auto& r : prefix)
      for (std::size_t g = 0; g < cfg.groups.size(); ++g)
        if (std::find(d.levels_[g].begin(), d.levels_[g].end(), r.groups[g]) == d.levels_[g].end())
          d.levels_[g].push_back(r.groups[g]);
    d.index_levels();
    return d;
  }

  const RunConfig& config() const { return cfg_; }
  const std::vector<SplineBasis>& bases() const { return bases_; }
  const std::vector<std::vector<std::string>>& levels() const { return levels_; }
  bool gaussian() const { return cfg_.model != ModelKind::logistic; }

  /// Fixed-effect width: intercept plus linear terms (plus smooth linear terms).
  int num_fixed() const {
    if (cfg_.model == ModelKind::sparse) return 1;
    return 1 + static_cast<int>(cfg_.linear.size() + cfg_.smooth.size());
  }

  BlockSpec block_spec() const {
    std::vector<int> blocks;
    for (const auto& lv : levels_) blocks.push_back(static_cast<int>(lv.size()));
    for (const auto& b : bases_) blocks.push_back(static_cast<int>(b.size()));
    return BlockSpec(num_fixed(), blocks, cfg_.sigsq_beta, cfg_.A_eps, std::vector<double>(blocks.size(), cfg_.A_u));
  }

  /// Length of a design row (for the sparse model, of z).
  Eigen::Index row_length() const {
    switch (cfg_.model) {
      case ModelKind::linreg: return num_fixed();
      case ModelKind::sparse: return static_cast<Eigen::Index>(cfg_.linear.size()) + spline_width();
      default: return block_spec().total_dim();
    }
  }

  /// Labels of the fixed-effect coefficients (sparse: intercept then v per z column).
  std::vector<std::string> coefficient_labels() const {
    std::vector<std::string> out{"intercept"};
    const std::string tag = cfg_.model == ModelKind::sparse ? "v[" : "beta[";
    for (const auto& c : cfg_.linear) out.push_back(tag + c + "]");
    if (cfg_.model == ModelKind::sparse) {
      for (std::size_t s = 0; s < bases_.size(); ++s)
        for (std::size_t k = 1; k <= bases_[s].size(); ++k)
          out.push_back("v[s(" + cfg_.smooth[s].column + "):" + std::to_string(k) + "]");
    } else {
      for (const auto& s : cfg_.smooth) out.push_back("beta[" + s.column + "]");
    }
    return out;
  }

  std::vector<std::string> block_labels() const {
    std::vector<std::string> out = cfg_.groups;
    for (const auto& s : cfg_.smooth) out.push_back("s(" + s.column + ")");
    return out;
  }

  /// Design row from raw predictor values; level index -1 leaves that group's indicators at zero.
  Vec row(const std::vector<double>& linear, const std::vector<double>& smooth, const std::vector<int>& level_index) const {
    const std::size_t L = cfg_.linear.size();
    Vec c = Vec::Zero(row_length());
    Eigen::Index at = 0;
    if (cfg_.model != ModelKind::sparse) c(at++) = 1.0;
    for (std::size_t j = 0; j < L; ++j) c(at++) = scale_x(j, linear[j]);
    if (cfg_.model == ModelKind::sparse) {
      for (std::size_t s = 0; s < bases_.size(); ++s) {
        const auto k = static_cast<Eigen::Index>(bases_[s].size());
        bases_[s].eval_into(scale_x(L + s, smooth[s]), c.segment(at, k));
        at += k;
      }
      return c;
    }
    for (std::size_t s = 0; s < smooth.size(); ++s) c(at++) = scale_x(L + s, smooth[s]);
    for (std::size_t g = 0; g < levels_.size(); ++g) {
      if (level_index[g] >= 0) c(at + level_index[g]) = 1.0;
      at += static_cast<Eigen::Index>(levels_[g].size());
    }
    for (std::size_t s = 0; s < bases_.size(); ++s) {
      const auto k = static_cast<Eigen::Index>(bases_[s].size());
      bases_[s].eval_into(scale_x(L + s, smooth[s]), c.segment(at, k));
      at += k;
    }
    return c;
  }

  /// Observation for a record, or nullopt (with a reason) for an unseen group level.
  std::optional<Observation> observe(const StreamRecord& r, std::string& why) const {
    std::vector<int> idx(levels_.size(), -1);
    for (std::size_t g = 0; g < levels_.size(); ++g) {
      auto it = level_index_[g].find(r.groups[g]);
      if (it == level_index_[g].end()) {
        why = "group level '" + r.groups[g] + "' of column '" + cfg_.groups[g] + "' not seen in the buffered prefix";
        return std::nullopt;
      }
      idx[g] = it->second;
    }
    return Observation{scale_y(r.y), row(r.linear, r.smooth, idx)};
  }

  double scale_x(std::size_t j, double x) const { return (x - x_offset_[j]) / x_scale_[j]; }
  double unscale_x(std::size_t j, double x) const { return x_offset_[j] + x_scale_[j] * x; }
  double scale_y(double y) const { return (y - y_offset_) / y_scale_; }
  double y_offset() const { return y_offset_; }
  double y_scale() const { return y_scale_; }
  const std::vector<double>& x_offset() const { return x_offset_; }
  const std::vector<double>& x_scale() const { return x_scale_; }
  /// Warm-up means of the raw linear then smooth predictors.
  const std::vector<double>& x_mean() const { return x_mean_; }

  void save(Archive& a) const {
    a.put_string("config", emit_config(cfg_));
    a.put("design.x_offset", x_offset_);
    a.put("design.x_scale", x_scale_);
    a.put("design.x_mean", x_mean_);
    a.put("design.y_offset", y_offset_);
    a.put("design.y_scale", y_scale_);
    for (std::size_t s = 0; s < bases_.size(); ++s) {
      const auto tag = "design.basis" + std::to_string(s);
      a.put(tag + ".knots", bases_[s].knots());
      a.put(tag + ".lo", bases_[s].domain_lo());
      a.put(tag + ".hi", bases_[s].domain_hi());
    }
    for (std::size_t g = 0; g < levels_.size(); ++g) a.put_strings("design.levels" + std::to_string(g), levels_[g]);
  }

  static Design load(const Archive& a) {
    Design d;
    d.cfg_ = parse_config(a.string("config"));
    d.x_offset_ = a.doubles("design.x_offset");
    d.x_scale_ = a.doubles("design.x_scale");
    d.x_mean_ = a.doubles("design.x_mean");
    d.y_offset_ = a.scalar("design.y_offset");
    d.y_scale_ = a.scalar("design.y_scale");
    for (std::size_t s = 0; s < d.cfg_.smooth.size(); ++s) {
      const auto tag = "design.basis" + std::to_string(s);
      d.bases_.emplace_back(a.doubles(tag + ".knots"), a.scalar(tag + ".lo"), a.scalar(tag + ".hi"));
    }
    for (std::size_t g = 0; g < d.cfg_.groups.size(); ++g) d.levels_.push_back(a.strings("design.levels" + std::to_string(g)));
    d.index_levels();
    return d;
  }

 private:
  static double raw_value(const StreamRecord& r, std::size_t j, std::size_t L) {
    return j < L ? r.linear[j] : r.smooth[j - L];
  }

  Eigen::Index spline_width() const {
    Eigen::Index w = 0;
    for (const auto& b : bases_) w += static_cast<Eigen::Index>(b.size());
    return w;
  }

  void index_levels() {
    level_index_.assign(levels_.size(), {});
    for (std::size_t g = 0; g < levels_.size(); ++g)
      for (std::size_t i = 0; i < levels_[g].size(); ++i) level_index_[g].emplace(levels_[g][i], static_cast<int>(i));
  }

  RunConfig cfg_;
  std::vector<SplineBasis> bases_;
  std::vector<std::vector<std::string>> levels_;
  std::vector<std::map<std::string, int>> level_index_;
  std::vector<double> x_offset_, x_scale_, x_mean_;
  double y_offset_ = 0.0;
  double y_scale_ = 1.0;
};

}  // namespace streamvb::io

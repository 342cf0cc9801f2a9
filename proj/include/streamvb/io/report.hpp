#pragma once

// Model construction from a Design, original-unit summaries, density grids,
// fitted curves and state (de)serialization. Summaries depend only on the
// design and the fitted state, so a snapshot re-renders identically.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "../linreg.hpp"
#include "../logistic.hpp"
#include "../models.hpp"
#include "../summaries.hpp"
#include "archive.hpp"
#include "design.hpp"

namespace streamvb::io {

using AnyModel = std::variant<LinRegModel, LmmModel, LogisticModel, SparseModel>;
using FittedState = std::variant<LinRegModel::Fitted, LmmModel::Fitted, LogisticModel::Fitted, SparseModel::Fitted>;

inline AnyModel make_model(const Design& d) {
  const auto& cfg = d.config();
  const FitOptions opts{cfg.tol, cfg.max_iter};
  const auto labels = d.coefficient_labels();
  switch (cfg.model) {
    case ModelKind::linreg:
      return LinRegModel(d.num_fixed(), LinRegHyper{cfg.sigsq_beta, cfg.A_eps}, opts, labels);
    case ModelKind::sparse:
      return SparseModel(d.row_length(), SparseHyper{cfg.sigsq_beta, cfg.A_u, cfg.A_eps, cfg.A_rho, cfg.B_rho}, opts);
    case ModelKind::lmm:
    case ModelKind::logistic: {
      const auto spec = d.block_spec();
      std::vector<Probe> probes;
      for (int j = 0; j < spec.p; ++j) {
        Vec c = Vec::Zero(spec.total_dim());
        c(j) = 1.0;
        probes.push_back({labels[static_cast<std::size_t>(j)], c});
      }
      if (cfg.model == ModelKind::lmm) return LmmModel(spec, opts, probes, d.block_labels());
      return LogisticModel(spec, opts, probes, d.block_labels());
    }
  }
  throw ConfigError("unknown model");
}

enum class SummaryKind { normal, variance, probability };

struct SummaryRow {
  ParamSummary s;
  SummaryKind kind = SummaryKind::normal;
  // Inverse-Gamma q-density of variance rows, in original units.
  double shape = 0.0;
  double rate = 0.0;
};

inline std::int64_t records_assimilated(const FittedState& f) {
  return std::visit([](const auto& x) { return static_cast<std::int64_t>(x.stats.n); }, f);
}

namespace detail {

/// Affine map of [intercept, coefficients...] back to original units.
inline UnitIntervalScaling coefficient_maps(const Design& d) {
  const auto& cfg = d.config();
  const std::size_t L = cfg.linear.size();
  std::vector<double> off{0.0}, sc{1.0};
  for (std::size_t j = 0; j < L; ++j) {
    off.push_back(d.x_offset()[j]);
    sc.push_back(d.x_scale()[j]);
  }
  for (std::size_t s = 0; s < cfg.smooth.size(); ++s) {
    const std::size_t reps = cfg.model == ModelKind::sparse ? d.bases()[s].size() : 1;
    for (std::size_t k = 0; k < reps; ++k) {
      // Spline columns carry no offset, only the scale of their predictor.
      off.push_back(cfg.model == ModelKind::sparse ? 0.0 : d.x_offset()[L + s]);
      sc.push_back(d.x_scale()[L + s]);
    }
  }
  Vec o = Eigen::Map<Vec>(off.data(), static_cast<Eigen::Index>(off.size()));
  Vec s = Eigen::Map<Vec>(sc.data(), static_cast<Eigen::Index>(sc.size()));
  return UnitIntervalScaling::from_maps(o, s, d.y_offset(), d.y_scale(), 0);
}

inline void append_coefficients(std::vector<SummaryRow>& out, const Design& d, const Vec& mu, const Mat& sigma) {
  const auto p = static_cast<Eigen::Index>(d.coefficient_labels().size());
  const auto [m, v] = coefficient_maps(d).back_transform(mu.head(p), sigma.topLeftCorner(p, p));
  const auto labels = d.coefficient_labels();
  for (Eigen::Index j = 0; j < p; ++j)
    out.push_back({normal_summary(labels[static_cast<std::size_t>(j)], m(j), v(j, j)), SummaryKind::normal});
}

inline void append_variance(std::vector<SummaryRow>& out, const std::string& label, const InverseGammaParams& q,
                            double factor) {
  const InverseGammaParams scaled(q.shape(), q.rate() * factor);
  out.push_back({inv_gamma_summary(label, scaled), SummaryKind::variance, scaled.shape(), scaled.rate()});
}

}  // namespace detail

/// The model's declared parameter list, in declaration order, in original units.
inline std::vector<SummaryRow> summarize(const Design& d, const FittedState& fitted) {
  std::vector<SummaryRow> out;
  const double vf = d.y_scale() * d.y_scale();
  const auto blocks = d.block_labels();
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinRegModel::Fitted>) {
          detail::append_coefficients(out, d, f.state.mu_beta, f.state.Sigma_beta);
          detail::append_variance(out, "sigma2_eps", sigma2_posterior(f.state, f.stats), vf);
        } else if constexpr (std::is_same_v<T, LmmModel::Fitted>) {
          const auto spec = d.block_spec();
          detail::append_coefficients(out, d, f.state.mu_bu, f.state.Sigma_bu);
          detail::append_variance(out, "sigma2_eps", sigma2_eps_posterior(f.state, f.stats), vf);
          for (int l = 0; l < spec.num_blocks(); ++l) {
            const auto li = static_cast<std::size_t>(l);
            detail::append_variance(out, "sigma2_u[" + blocks[li] + "]",
                                    sigma2_u_posterior(f.state.mu_recip_sigsq_u[li], spec.block_sizes[li]), vf);
          }
        } else if constexpr (std::is_same_v<T, LogisticModel::Fitted>) {
          const auto spec = d.block_spec();
          detail::append_coefficients(out, d, f.state.mu_bu, f.state.Sigma_bu);
          for (int l = 0; l < spec.num_blocks(); ++l) {
            const auto li = static_cast<std::size_t>(l);
            detail::append_variance(out, "sigma2_u[" + blocks[li] + "]",
                                    sigma2_u_posterior(f.state.mu_recip_sigsq_u[li], spec.block_sizes[li]), 1.0);
          }
        } else {
          detail::append_coefficients(out, d, f.state.mu_bv, f.state.Sigma_bv);
          const auto labels = d.coefficient_labels();
          for (Eigen::Index k = 0; k < f.state.mu_gamma.size(); ++k) {
            const double g = f.state.mu_gamma(k);
            auto name = labels[static_cast<std::size_t>(k + 1)];
            name.replace(0, 1, "gamma");
            out.push_back({{name, g, std::sqrt(g * (1.0 - g)), 0.0, 1.0}, SummaryKind::probability});
          }
          detail::append_variance(out, "sigma2_eps", sparse_sigma2_eps_posterior(f.state, f.stats), vf);
          detail::append_variance(out, "sigma2_u", sparse_sigma2_u_posterior(f.state), vf);
        }
      },
      fitted);
  return out;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows, std::int64_t n) {
  os << "parameter,mean,sd,q025,q975,n\n";
  for (const auto& r : rows)
    os << r.s.label << ',' << format_number(r.s.mean) << ',' << format_number(r.s.sd) << ',' << format_number(r.s.q025)
       << ',' << format_number(r.s.q975) << ',' << n << '\n';
}

/// File-name-safe form of a parameter label: beta[x1] -> beta_x1.
inline std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char ch : label) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-';
    if (ok) out += ch;
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

/// 201-point density grid; empty for inclusion probabilities.
inline std::vector<DensityPoint> density_grid(const SummaryRow& r) {
  switch (r.kind) {
    case SummaryKind::normal: return normal_density_grid(r.s.mean, r.s.sd);
    case SummaryKind::variance: return inv_gamma_density_grid(InverseGammaParams(r.shape, r.rate));
    case SummaryKind::probability: return {};
  }
  return {};
}

inline void write_density_csv(std::ostream& os, const std::vector<DensityPoint>& grid) {
  os << "x,density\n";
  for (const auto& p : grid) os << format_number(p.x) << ',' << format_number(p.density) << '\n';
}

/// Fitted curve of smooth term `s` over its warm-up range, other predictors
/// held at their warm-up means and group effects at zero. Logistic curves are
/// on the logit scale; Gaussian ones in response units.
inline std::vector<CurvePoint> smooth_curve(const Design& d, const FittedState& fitted, std::size_t s,
                                            int points = 201) {
  const auto& cfg = d.config();
  const std::size_t L = cfg.linear.size();
  const auto& basis = d.bases().at(s);
  std::vector<double> lin(d.x_mean().begin(), d.x_mean().begin() + static_cast<std::ptrdiff_t>(L));
  std::vector<double> smo(d.x_mean().begin() + static_cast<std::ptrdiff_t>(L), d.x_mean().end());
  const std::vector<int> no_level(d.levels().size(), -1);
  std::vector<CurvePoint> out;
  for (int i = 0; i < points; ++i) {
    const double xs = basis.domain_lo() + (basis.domain_hi() - basis.domain_lo()) * i / (points - 1);
    smo[s] = d.unscale_x(L + s, xs);
    const Vec row = d.row(lin, smo, no_level);
    double mean = 0.0, var = 0.0;
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, SparseModel::Fitted>) {
            // c'(w . theta) with w ~ inclusion indicators independent of theta.
            Vec c(row.size() + 1);
            c(0) = 1.0;
            c.tail(row.size()) = row;
            const Vec wmu = f.state.mu_w.cwiseProduct(f.state.mu_bv);
            const Mat second = f.state.Omega_w.cwiseProduct(f.state.Sigma_bv + f.state.mu_bv * f.state.mu_bv.transpose()) -
                               wmu * wmu.transpose();
            mean = c.dot(wmu);
            var = c.dot(second * c);
          } else if constexpr (std::is_same_v<T, LinRegModel::Fitted>) {
            mean = row.dot(f.state.mu_beta);
            var = row.dot(f.state.Sigma_beta * row);
          } else {
            mean = row.dot(f.state.mu_bu);
            var = row.dot(f.state.Sigma_bu * row);
          }
        },
        fitted);
    const double sd = std::sqrt(std::max(var, 0.0));
    const double a = d.gaussian() ? d.y_scale() : 1.0, b = d.gaussian() ? d.y_offset() : 0.0;
    out.push_back({smo[s], b + a * mean, b + a * (mean - kZ975 * sd), b + a * (mean + kZ975 * sd)});
  }
  return out;
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve) {
  os << "x,fit,lo,hi\n";
  for (const auto& p : curve)
    os << format_number(p.x) << ',' << format_number(p.fit) << ',' << format_number(p.lo) << ',' << format_number(p.hi)
       << '\n';
}

inline void save_state(Archive& a, const FittedState& fitted) {
  a.put_int("state.kind", static_cast<std::int64_t>(fitted.index()));
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        a.put_int("state.converged", f.converged ? 1 : 0);
        a.put_int("state.iterations", f.iterations);
        a.put_int("stats.n", f.stats.n);
        if constexpr (std::is_same_v<T, LinRegModel::Fitted>) {
          a.put("state.mu_beta", f.state.mu_beta);
          a.put("state.Sigma_beta", f.state.Sigma_beta);
          a.put("state.mu_recip_sigsq", f.state.mu_recip_sigsq);
          a.put("state.mu_recip_a", f.state.mu_recip_a);
        } else if constexpr (std::is_same_v<T, SparseModel::Fitted>) {
          const auto& s = f.state;
          a.put("state.mu_bv", s.mu_bv);
          a.put("state.Sigma_bv", s.Sigma_bv);
          a.put("state.mu_b", s.mu_b);
          a.put("state.mu_gamma", s.mu_gamma);
          a.put("state.mu_recip_sigsq_u", s.mu_recip_sigsq_u);
          a.put("state.mu_recip_sigsq_eps", s.mu_recip_sigsq_eps);
          a.put("state.mu_recip_a_u", s.mu_recip_a_u);
          a.put("state.mu_recip_a_eps", s.mu_recip_a_eps);
          a.put("state.B_sigsq_u", s.B_sigsq_u);
          a.put("state.B_sigsq_eps", s.B_sigsq_eps);
          a.put_int("state.gamma_clamps", s.gamma_clamps);
        } else {
          a.put("state.mu_bu", f.state.mu_bu);
          a.put("state.Sigma_bu", f.state.Sigma_bu);
          a.put("state.mu_recip_sigsq_u", f.state.mu_recip_sigsq_u);
          a.put("state.mu_recip_a_u", f.state.mu_recip_a_u);
          if constexpr (std::is_same_v<T, LmmModel::Fitted>) {
            a.put("state.mu_recip_sigsq_eps", f.state.mu_recip_sigsq_eps);
            a.put("state.mu_recip_a_eps", f.state.mu_recip_a_eps);
          }
        }
        if constexpr (std::is_same_v<T, LogisticModel::Fitted>) {
          a.put("stats.cty_half", f.stats.cty_half);
          a.put("stats.ct_lam_c", f.stats.ct_lam_c);
        } else {
          a.put("stats.yty", f.stats.yty);
          a.put("stats.cty", f.stats.cty);
          a.put("stats.ctc", f.stats.ctc);
          if constexpr (std::is_same_v<T, SparseModel::Fitted>) {
            a.put("stats.zt1", f.stats.zt1);
            a.put("stats.zty", f.stats.zty);
            a.put("stats.ztz", f.stats.ztz);
          }
        }
      },
      fitted);
}

inline FittedState load_state(const Archive& a) {
  const auto kind = a.integer("state.kind");
  auto common = [&](auto& f) {
    f.converged = a.integer("state.converged") != 0;
    f.iterations = static_cast<int>(a.integer("state.iterations"));
    f.stats.n = a.integer("stats.n");
  };
  auto gaussian_stats = [&](auto& st) {
    st.yty = a.scalar("stats.yty");
    st.cty = a.vec("stats.cty");
    st.ctc = a.mat("stats.ctc");
  };
  switch (kind) {
    case 0: {
      LinRegModel::Fitted f;
      common(f);
      gaussian_stats(f.stats);
      f.state.mu_beta = a.vec("state.mu_beta");
      f.state.Sigma_beta = a.mat("state.Sigma_beta");
      f.state.mu_recip_sigsq = a.scalar("state.mu_recip_sigsq");
      f.state.mu_recip_a = a.scalar("state.mu_recip_a");
      return f;
    }
    case 1: {
      LmmModel::Fitted f;
      common(f);
      gaussian_stats(f.stats);
      f.state.mu_bu = a.vec("state.mu_bu");
      f.state.Sigma_bu = a.mat("state.Sigma_bu");
      f.state.mu_recip_sigsq_u = a.doubles("state.mu_recip_sigsq_u");
      f.state.mu_recip_a_u = a.doubles("state.mu_recip_a_u");
      f.state.mu_recip_sigsq_eps = a.scalar("state.mu_recip_sigsq_eps");
      f.state.mu_recip_a_eps = a.scalar("state.mu_recip_a_eps");
      return f;
    }
    case 2: {
      LogisticModel::Fitted f;
      common(f);
      f.stats.cty_half = a.vec("stats.cty_half");
      f.stats.ct_lam_c = a.mat("stats.ct_lam_c");
      f.state.mu_bu = a.vec("state.mu_bu");
      f.state.Sigma_bu = a.mat("state.Sigma_bu");
      f.state.mu_recip_sigsq_u = a.doubles("state.mu_recip_sigsq_u");
      f.state.mu_recip_a_u = a.doubles("state.mu_recip_a_u");
      return f;
    }
    case 3: {
      SparseModel::Fitted f;
      common(f);
      gaussian_stats(f.stats);
      f.stats.zt1 = a.vec("stats.zt1");
      f.stats.zty = a.vec("stats.zty");
      f.stats.ztz = a.mat("stats.ztz");
      auto& s = f.state;
      s.mu_bv = a.vec("state.mu_bv");
      s.Sigma_bv = a.mat("state.Sigma_bv");
      s.mu_b = a.vec("state.mu_b");
      s.set_inclusion(a.vec("state.mu_gamma"));
      s.mu_recip_sigsq_u = a.scalar("state.mu_recip_sigsq_u");
      s.mu_recip_sigsq_eps = a.scalar("state.mu_recip_sigsq_eps");
      s.mu_recip_a_u = a.scalar("state.mu_recip_a_u");
      s.mu_recip_a_eps = a.scalar("state.mu_recip_a_eps");
      s.B_sigsq_u = a.scalar("state.B_sigsq_u");
      s.B_sigsq_eps = a.scalar("state.B_sigsq_eps");
      s.gamma_clamps = a.integer("state.gamma_clamps");
      return f;
    }
    default: throw SnapshotError("snapshot: unknown model kind " + std::to_string(kind));
  }
}

}  // namespace streamvb::io

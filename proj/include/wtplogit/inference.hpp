#pragma once

// Post-estimation: covariance, coefficient tables, fit statistics, WTP
// transforms with Krinsky-Robb uncertainty, random-coefficient summaries.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wtplogit/choice_data.hpp"
#include "wtplogit/draws.hpp"
#include "wtplogit/error.hpp"
#include "wtplogit/estimation.hpp"
#include "wtplogit/likelihood.hpp"
#include "wtplogit/model_spec.hpp"

namespace wtplogit {

/// Central differences of an analytic gradient, step max(1e-5, 1e-5 |x_i|),
/// symmetrized. `grad(x, g)` writes the gradient of the function into g.
template <class GradFn>
Eigen::MatrixXd numerical_hessian(GradFn&& grad, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd xp = x, gp(n), gm(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = std::max(1e-5, 1e-5 * std::abs(x(i)));
    xp(i) = x(i) + h;
    grad(xp, gp);
    xp(i) = x(i) - h;
    grad(xp, gm);
    xp(i) = x(i);
    H.col(i) = (gp - gm) / (2.0 * h);
  }
  if (!H.allFinite()) throw InferenceError("numerical Hessian has non-finite entries");
  return 0.5 * (H + H.transpose());
}

/// Hessian of the negative log-likelihood.
inline Eigen::MatrixXd hessian_negll(const std::shared_ptr<const LikelihoodProblem>& problem,
                                     const Eigen::VectorXd& theta) {
  ObjectiveContext ctx(problem);
  return numerical_hessian(
      [&ctx](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        LogLikResult r = ctx.evaluate(x);
        if (!r.ok) throw InferenceError("log-likelihood not finite near the optimum");
        g = -r.grad;
      },
      theta);
}

inline Eigen::MatrixXd invert_hessian(const Eigen::MatrixXd& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  if (es.info() != Eigen::Success) throw InferenceError("eigendecomposition of the Hessian failed");
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || ev.cwiseAbs().minCoeff() <= 1e-10 * scale)
    throw InferenceError(
        "Hessian is singular; some parameters may not be identified (check for collinear "
        "covariates or a scale parameter near zero)");
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

/// Classical H^-1, or the cluster-robust sandwich H^-1 G H^-1 with
/// G = C/(C-1) sum_c g_c g_c' over rows of `cluster_scores`.
inline Eigen::MatrixXd vcov(const Eigen::MatrixXd& H, bool robust,
                            const Eigen::MatrixXd& cluster_scores = {}) {
  const Eigen::MatrixXd Hinv = invert_hessian(H);
  if (!robust) return Hinv;
  const Eigen::Index C = cluster_scores.rows();
  if (C < 2) throw InferenceError("robust covariance needs at least two clusters");
  if (cluster_scores.cols() != H.rows()) throw InferenceError("score matrix does not match the Hessian");
  const Eigen::MatrixXd G =
      (static_cast<double>(C) / static_cast<double>(C - 1)) * (cluster_scores.transpose() * cluster_scores);
  Eigen::MatrixXd V = Hinv * G * Hinv;
  return 0.5 * (V + V.transpose());
}

/// Cluster index per likelihood unit. Clusters must contain whole units.
inline std::vector<int> unit_clusters(const LikelihoodProblem& pb, const LongChoiceData& data,
                                      ClusterLevel level, std::vector<std::string>* warnings = nullptr) {
  const std::size_t N = pb.dm.num_obs();
  std::vector<int> of_obs(N);
  const bool units_are_panels = pb.num_units != N || (pb.spec.panel && pb.simulated());
  switch (level) {
    case ClusterLevel::obs:
      if (units_are_panels) {
        if (warnings)
          warnings->push_back("panel likelihood: robust errors clustered by individual instead of observation");
        of_obs = pb.unit_of_obs;
      } else {
        for (std::size_t n = 0; n < N; ++n) of_obs[n] = static_cast<int>(n);
      }
      break;
    case ClusterLevel::panel:
      if (!data.has_panel()) throw InferenceError("panel clustering needs a panel id column");
      of_obs = data.panel_of_obs;
      break;
    case ClusterLevel::custom:
      if (!data.has_clusters()) throw InferenceError("custom clustering needs a cluster id column");
      of_obs = data.cluster_of_obs;
      break;
  }
  std::vector<int> out(pb.num_units, -1);
  for (std::size_t n = 0; n < N; ++n) {
    int& c = out[static_cast<std::size_t>(pb.unit_of_obs[n])];
    if (c < 0) {
      c = of_obs[n];
    } else if (c != of_obs[n]) {
      throw InferenceError("clusters must not split an individual's observations");
    }
  }
  return out;
}

/// Sums unit score rows into cluster rows, renumbering clusters densely.
inline Eigen::MatrixXd aggregate_scores(const Eigen::MatrixXd& unit_scores,
                                        const std::vector<int>& cluster_of_unit) {
  std::map<int, Eigen::Index> dense;
  for (int c : cluster_of_unit) dense.emplace(c, 0);
  Eigen::Index k = 0;
  for (auto& [c, idx] : dense) idx = k++;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, unit_scores.cols());
  for (std::size_t u = 0; u < cluster_of_unit.size(); ++u)
    out.row(dense[cluster_of_unit[u]]) += unit_scores.row(static_cast<Eigen::Index>(u));
  return out;
}

inline FitStatistics fit_statistics(double ll, double ll0, int k, std::size_t n) {
  FitStatistics s;
  s.loglik = ll;
  s.null_loglik = ll0;
  s.num_params = k;
  s.num_obs = n;
  s.aic = 2.0 * k - 2.0 * ll;
  s.bic = k * std::log(static_cast<double>(n)) - 2.0 * ll;
  s.mcfadden_r2 = 1.0 - ll / ll0;
  s.adj_mcfadden_r2 = 1.0 - (ll - k) / ll0;
  return s;
}

inline std::string significance_stars(double p) {
  if (!std::isfinite(p)) return "";
  if (p <= 0.001) return "***";
  if (p <= 0.01) return "**";
  if (p <= 0.05) return "*";
  if (p <= 0.1) return ".";
  return "";
}

struct CoefficientRow {
  std::string name;
  double estimate = 0.0;
  double std_error = std::numeric_limits<double>::quiet_NaN();
  double z_value = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  std::string stars;
};

struct CoefficientTable {
  std::vector<CoefficientRow> rows;
  std::vector<std::string> warnings;

  const CoefficientRow& at(std::string_view name) const {
    for (const auto& r : rows)
      if (r.name == name) return r;
    throw SchemaError("no coefficient named '" + std::string(name) + "'");
  }
};

inline CoefficientTable coefficient_table(const std::vector<std::string>& names,
                                          const Eigen::VectorXd& est,
                                          const Eigen::VectorXd& se = {}) {
  CoefficientTable t;
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    CoefficientRow r;
    r.name = names[static_cast<std::size_t>(i)];
    r.estimate = est(i);
    if (se.size() == est.size()) {
      r.std_error = se(i);
      r.z_value = est(i) / se(i);
      r.p_value = std::erfc(std::abs(r.z_value) / std::numbers::sqrt2);  // 2(1 - Phi(|z|))
      r.stars = significance_stars(r.p_value);
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline CoefficientTable coefficient_table(const FitResult& fit) {
  return coefficient_table(fit.names(), fit.coef(), fit.has_vcov() ? fit.std_errors() : Eigen::VectorXd{});
}

/// R-style (type 7) quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// n x P draws from N(mean, cov). A covariance that is not positive definite
/// is repaired by clipping eigenvalues at 1e-10.
inline Eigen::MatrixXd mvn_draws(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, int n,
                                 std::uint64_t seed, std::vector<std::string>* warnings = nullptr) {
  const Eigen::Index P = mean.size();
  if (cov.rows() != P || cov.cols() != P) throw InferenceError("covariance does not match the mean");
  Eigen::MatrixXd L;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-10);
    L = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
    if (warnings) warnings->push_back("covariance not positive definite; eigenvalues clipped at 1e-10");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  Eigen::MatrixXd Z(n, P);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < P; ++j) Z(i, j) = norm(rng);
  Eigen::MatrixXd out = Z * L.transpose();
  out.rowwise() += mean.transpose();
  return out;
}

namespace detail {

inline std::size_t coef_position(const FitResult& fit, const std::string& name) {
  const auto names = fit.names();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw SpecError("'" + name + "' is not a model coefficient");
  return static_cast<std::size_t>(it - names.begin());
}

// (-alpha, theta_{-alpha} / -alpha) for one parameter vector.
inline Eigen::VectorXd wtp_transform(const Eigen::VectorXd& theta, std::size_t scale_pos) {
  const double neg = -theta(static_cast<Eigen::Index>(scale_pos));
  Eigen::VectorXd out(theta.size());
  out(0) = neg;
  Eigen::Index k = 1;
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (static_cast<std::size_t>(i) != scale_pos) out(k++) = theta(i) / neg;
  return out;
}

}  // namespace detail

inline std::vector<std::string> wtp_names(const FitResult& fit, const std::string& scale_par) {
  const std::size_t pos = detail::coef_position(fit, scale_par);
  const auto names = fit.names();
  std::vector<std::string> out{"scalePar"};
  for (std::size_t i = 0; i < names.size(); ++i)
    if (i != pos) out.push_back(names[i]);
  return out;
}

/// WTP point estimates from a preference-space fit.
inline Eigen::VectorXd wtp_point(const FitResult& fit, const std::string& scale_par) {
  if (fit.layout.space != Space::preference) throw SpecError("wtp() needs a preference space model");
  const std::size_t pos = detail::coef_position(fit, scale_par);
  if (fit.coef()(static_cast<Eigen::Index>(pos)) == 0.0)
    throw DomainError("the '" + scale_par + "' coefficient is zero; WTP is undefined");
  return detail::wtp_transform(fit.coef(), pos);
}

/// WTP estimates with Krinsky-Robb standard errors.
inline CoefficientTable wtp(const FitResult& fit, const std::string& scale_par, int kr_draws = 10000,
                            std::uint64_t seed = 0) {
  const Eigen::VectorXd point = wtp_point(fit, scale_par);
  const std::size_t pos = detail::coef_position(fit, scale_par);
  std::vector<std::string> warnings;
  Eigen::VectorXd se;
  if (fit.has_vcov() && kr_draws > 1) {
    const Eigen::MatrixXd draws = mvn_draws(fit.coef(), fit.vcov, kr_draws, seed, &warnings);
    Eigen::MatrixXd T(kr_draws, point.size());
    for (int i = 0; i < kr_draws; ++i) T.row(i) = detail::wtp_transform(draws.row(i).transpose(), pos).transpose();
    const Eigen::RowVectorXd mu = T.colwise().mean();
    se = ((T.rowwise() - mu).colwise().squaredNorm() / static_cast<double>(kr_draws - 1)).cwiseSqrt().transpose();
    const double a = fit.coef()(static_cast<Eigen::Index>(pos));
    const double a_se = fit.std_errors()(static_cast<Eigen::Index>(pos));
    if (std::abs(a / a_se) < 2.0)
      warnings.push_back("the '" + scale_par +
                         "' coefficient is not clearly different from zero; WTP draws are heavy-tailed");
  }
  CoefficientTable t = coefficient_table(wtp_names(fit, scale_par), point, se);
  t.warnings = std::move(warnings);
  return t;
}

struct WtpComparison {
  std::vector<std::string> names;  // last entry is "logLik"
  std::vector<double> pref, wtp, difference;
};

/// WTP computed from a preference space fit next to direct WTP space
/// estimates; difference = pref - wtp.
inline WtpComparison wtp_compare(const FitResult& fit_pref, const FitResult& fit_wtp,
                                 const std::string& scale_par) {
  if (fit_wtp.layout.space != Space::wtp) throw SpecError("wtp_compare needs a WTP space model second");
  const auto names = wtp_names(fit_pref, scale_par);
  const auto wnames = fit_wtp.names();
  if (names != wnames)
    throw SpecError("models have different parameters; cannot compare");
  const Eigen::VectorXd p = wtp_point(fit_pref, scale_par);
  WtpComparison c;
  c.names = names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    c.pref.push_back(p(static_cast<Eigen::Index>(i)));
    c.wtp.push_back(fit_wtp.coef()(static_cast<Eigen::Index>(i)));
    c.difference.push_back(c.pref.back() - c.wtp.back());
  }
  c.names.push_back("logLik");
  c.pref.push_back(fit_pref.best.loglik);
  c.wtp.push_back(fit_wtp.best.loglik);
  c.difference.push_back(fit_pref.best.loglik - fit_wtp.best.loglik);
  return c;
}

struct RandomCoefSummary {
  std::string name;
  Distribution dist = Distribution::normal;
  double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
};

/// Quantiles of the estimated population distributions. Support bounds are
/// reported as the min/max of unbounded sides (-Inf, Inf).
inline std::vector<RandomCoefSummary> random_coef_summary(const ParameterLayout& layout,
                                                          const Eigen::VectorXd& theta,
                                                          int n_draws = 10000) {
  std::vector<RandomCoefSummary> out;
  if (layout.num_random() == 0) return out;
  const DrawType type = layout.num_coefs <= static_cast<std::size_t>(kMaxHaltonDim) ? DrawType::halton
                                                                                    : DrawType::sobol;
  const DrawSet ds = make_draws(layout, type, n_draws);
  const Eigen::MatrixXd B = realize_parameters(theta, layout, ds.Z);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < layout.num_random(); ++k) {
    const auto c = static_cast<Eigen::Index>(layout.random_coefs[k]);
    std::vector<double> v(B.col(c).data(), B.col(c).data() + B.rows());
    std::sort(v.begin(), v.end());
    RandomCoefSummary s;
    s.name = layout.coef_names[static_cast<std::size_t>(c)];
    s.dist = layout.coef_dist[static_cast<std::size_t>(c)];
    const bool degenerate = v.front() == v.back();
    s.min = degenerate ? v.front() : (s.dist == Distribution::normal ? -inf : 0.0);
    s.max = degenerate ? v.back() : inf;
    s.q1 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.mean = B.col(c).mean();
    s.q3 = quantile_sorted(v, 0.75);
    out.push_back(s);
  }
  return out;
}

inline std::vector<RandomCoefSummary> random_coef_summary(const FitResult& fit, int n_draws = 10000) {
  return random_coef_summary(fit.layout, fit.coef(), n_draws);
}

/// Fills vcov and fit statistics of a freshly estimated model.
inline void compute_inference(FitResult& fit, const LongChoiceData& data) {
  if (!fit.problem) throw InferenceError("fit has no estimation problem attached");
  const auto& pb = *fit.problem;
  const Eigen::VectorXd& theta = fit.coef();
  const Eigen::MatrixXd H = hessian_negll(fit.problem, theta);
  if (fit.spec.robust) {
    ObjectiveContext ctx(fit.problem);
    const std::vector<int> clusters = unit_clusters(pb, data, fit.spec.cluster_level, &fit.warnings);
    const Eigen::MatrixXd G = aggregate_scores(ctx.unit_scores(theta), clusters);
    fit.num_clusters = static_cast<std::size_t>(G.rows());
    fit.vcov = vcov(H, true, G);
    fit.vcov_robust = true;
  } else {
    fit.vcov = vcov(H, false);
  }
}

/// Encode, estimate, and compute inference in one call.
inline FitResult fit_model(const LongChoiceData& data, const ModelSpec& spec, const EstimationOptions& opts) {
  PreparedModel prep = prepare(data, spec, opts);
  FitResult fit = multistart(prep.problem, opts);
  fit.encoding = std::move(prep.encoding);
  fit.alt_frequencies = chosen_position_frequencies(data);
  fit.fit_stats = fit_statistics(fit.best.loglik, null_loglik(*prep.problem),
                                 static_cast<int>(fit.layout.total_len()), fit.num_obs);
  try {
    compute_inference(fit, data);
  } catch (const InferenceError& e) {
    fit.warnings.push_back(std::string("standard errors unavailable: ") + e.what());
  }
  return fit;
}

}  // namespace wtplogit

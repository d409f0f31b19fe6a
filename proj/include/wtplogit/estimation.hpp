#pragma once

// Multi-start maximum likelihood estimation.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "wtplogit/choice_data.hpp"
#include "wtplogit/draws.hpp"
#include "wtplogit/error.hpp"
#include "wtplogit/likelihood.hpp"
#include "wtplogit/model_spec.hpp"
#include "wtplogit/optimizer.hpp"

namespace wtplogit {

struct RunResult {
  int run_index = 0;
  Eigen::VectorXd theta_start;
  Eigen::VectorXd theta_hat;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double grad_norm = std::numeric_limits<double>::quiet_NaN();  // sup norm at theta_hat
  int iterations = 0;
  ExitStatus exit_status = ExitStatus::evaluation_failure;
  double elapsed = 0.0;  // seconds
  std::string message;   // exception text when the run threw
};

struct FitStatistics {
  double loglik = 0.0;
  double null_loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  double mcfadden_r2 = 0.0;
  double adj_mcfadden_r2 = 0.0;
  int num_params = 0;
  std::size_t num_obs = 0;
};

struct FitResult {
  RunResult best;
  std::vector<RunResult> all_runs;
  ModelSpec spec;
  ParameterLayout layout;
  EstimationOptions options;
  Encoding encoding;
  Eigen::MatrixXd vcov;  // empty until inference runs
  bool vcov_robust = false;
  FitStatistics fit_stats;
  std::vector<double> alt_frequencies;
  std::size_t num_obs = 0;
  std::size_t num_panels = 0;
  std::size_t num_clusters = 0;
  double elapsed = 0.0;
  std::vector<std::string> warnings;
  // Estimation problem; absent for fits restored from an artifact.
  std::shared_ptr<const LikelihoodProblem> problem;

  const Eigen::VectorXd& coef() const { return best.theta_hat; }
  std::vector<std::string> names() const { return layout.names(); }
  bool has_vcov() const { return vcov.size() > 0; }
  Eigen::VectorXd std_errors() const {
    if (!has_vcov()) throw InferenceError("model has no covariance matrix");
    return vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
};

inline OptimizerOptions optimizer_options(const EstimationOptions& o) {
  OptimizerOptions out;
  out.ftol_rel = o.ftol_rel;
  out.ftol_abs = o.ftol_abs;
  out.xtol_rel = o.xtol_rel;
  out.xtol_abs = o.xtol_abs;
  out.max_iterations = o.max_iterations;
  return out;
}

/// Per-coefficient rescaling used during optimization. Design columns (and
/// the scale variable) are divided by their largest magnitude; parameters
/// map exactly between the two parameterizations.
struct InputScaling {
  Eigen::VectorXd column;  // per design column
  double price = 1.0;
  Eigen::VectorXd factor;  // per coefficient: scaled = factor * original

  /// Original -> scaled parameters.
  Eigen::VectorXd to_scaled(const Eigen::VectorXd& theta, const ParameterLayout& layout) const {
    return apply(theta, layout, false);
  }
  Eigen::VectorXd to_original(const Eigen::VectorXd& theta, const ParameterLayout& layout) const {
    return apply(theta, layout, true);
  }

 private:
  Eigen::VectorXd apply(const Eigen::VectorXd& theta, const ParameterLayout& layout, bool inverse) const {
    Eigen::VectorXd out = theta;
    // log-normal coefficients shift the underlying mean; the rest scale
    auto mult = [&](std::size_t c) {
      const bool ln = layout.coef_dist[c] == Distribution::log_normal;
      const double f = factor(static_cast<Eigen::Index>(c));
      return ln ? 1.0 : (inverse ? 1.0 / f : f);
    };
    for (std::size_t c = 0; c < layout.num_coefs; ++c) {
      const auto i = static_cast<Eigen::Index>(c);
      if (layout.coef_dist[c] == Distribution::log_normal) {
        const double shift = std::log(factor(i));
        out(i) = inverse ? theta(i) - shift : theta(i) + shift;
      } else {
        out(i) = theta(i) * mult(c);
      }
    }
    const auto& rc = layout.random_coefs;
    for (std::size_t k = 0; k < rc.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(layout.sd_index(k));
      out(i) = theta(i) * mult(rc[k]);
    }
    if (layout.correlated)
      for (std::size_t r = 1; r < rc.size(); ++r)
        for (std::size_t c = 0; c < r; ++c) {
          const auto i = static_cast<Eigen::Index>(layout.cholesky_index(r, c));
          out(i) = theta(i) * mult(rc[r]);
        }
    return out;
  }
};

inline InputScaling input_scaling(const LikelihoodProblem& pb) {
  InputScaling s;
  const DesignMatrix& dm = pb.dm;
  auto magnitude = [](double m) { return m > 0.0 && std::isfinite(m) ? m : 1.0; };
  s.column.resize(dm.X.cols());
  for (Eigen::Index k = 0; k < dm.X.cols(); ++k) s.column(k) = magnitude(dm.X.col(k).cwiseAbs().maxCoeff());
  if (dm.has_scale()) s.price = magnitude(dm.p.cwiseAbs().maxCoeff());
  const ParameterLayout& layout = pb.layout;
  s.factor.resize(static_cast<Eigen::Index>(layout.num_coefs));
  if (layout.space == Space::wtp) {
    s.factor(0) = s.price;
    s.factor.tail(dm.X.cols()) = s.column / s.price;
  } else {
    s.factor = s.column;
  }
  return s;
}

/// The same problem on rescaled inputs (draws and weights shared).
inline std::shared_ptr<const LikelihoodProblem> scaled_problem(const LikelihoodProblem& pb,
                                                               const InputScaling& s) {
  auto out = std::make_shared<LikelihoodProblem>(pb);
  DesignMatrix& dm = out->dm;
  const Eigen::VectorXd inv = s.column.cwiseInverse();
  dm.X = dm.X * inv.asDiagonal();
  dm.X_diff = dm.X_diff * inv.asDiagonal();
  if (dm.has_scale()) {
    dm.p /= s.price;
    dm.p_diff /= s.price;
  }
  return out;
}

/// One optimization run maximizing the (simulated) log-likelihood from x0.
inline RunResult run_once(const std::shared_ptr<const LikelihoodProblem>& problem,
                          const Eigen::VectorXd& x0, const EstimationOptions& opts, int run_index) {
  RunResult rr;
  rr.run_index = run_index;
  rr.theta_start = x0;
  ObjectiveContext ctx(problem);
  auto negll = [&ctx](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    LogLikResult r = ctx.evaluate(x);
    if (!r.ok) return std::numeric_limits<double>::quiet_NaN();
    g = -r.grad;
    return -r.loglik;
  };
  const MinimizeResult m = minimize(negll, x0, optimizer_options(opts));
  rr.theta_hat = m.x;
  rr.loglik = -m.f;
  rr.grad_norm = m.grad.size() ? m.grad.lpNorm<Eigen::Infinity>() : rr.grad_norm;
  rr.iterations = m.iterations;
  rr.exit_status = m.status;
  rr.elapsed = m.elapsed;
  return rr;
}

/// Runs 1..K from initial_values(k) on a pool of num_cores workers and picks
/// the successful run with the largest log-likelihood (lowest index on ties).
/// Results do not depend on scheduling.
inline FitResult multistart(const std::shared_ptr<const LikelihoodProblem>& problem,
                            const EstimationOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  opts.validate(problem->layout.total_len());
  const int K = opts.num_multi_starts;
  std::vector<RunResult> runs(static_cast<std::size_t>(K));
  std::optional<InputScaling> scaling;
  std::shared_ptr<const LikelihoodProblem> scaled;
  if (opts.scale_inputs) {
    scaling = input_scaling(*problem);
    scaled = scaled_problem(*problem, *scaling);
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < K; k = next++) {
      const int run = k + 1;
      RunResult& rr = runs[static_cast<std::size_t>(k)];
      try {
        if (scaling) {
          // start values live in the scaled parameterization, except
          // caller-supplied ones, which are in original units
          Eigen::VectorXd x0 = initial_values(problem->layout, opts, run);
          if (run == 1 && opts.start_vals) x0 = scaling->to_scaled(x0, problem->layout);
          rr = run_once(scaled, x0, opts, run);
          rr.theta_start = scaling->to_original(rr.theta_start, problem->layout);
          rr.theta_hat = scaling->to_original(rr.theta_hat, problem->layout);
          if (is_success(rr.exit_status)) {
            ObjectiveContext ctx(problem);
            const LogLikResult lr = ctx.evaluate(rr.theta_hat);
            rr.loglik = lr.loglik;
            rr.grad_norm = lr.grad.lpNorm<Eigen::Infinity>();
          }
        } else {
          rr = run_once(problem, initial_values(problem->layout, opts, run), opts, run);
        }
      } catch (const std::exception& e) {
        rr.run_index = run;
        rr.exit_status = ExitStatus::evaluation_failure;
        rr.message = e.what();
      }
    }
  };
  const int workers = std::min(opts.num_cores, K);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  FitResult fit;
  fit.all_runs = runs;
  fit.layout = problem->layout;
  fit.spec = problem->spec;
  fit.options = opts;
  fit.problem = problem;
  fit.num_obs = problem->dm.num_obs();
  fit.num_panels = static_cast<std::size_t>(problem->dm.num_panels);

  const RunResult* best = nullptr;
  for (const auto& r : runs)
    if (is_success(r.exit_status) && std::isfinite(r.loglik) && (!best || r.loglik > best->loglik))
      best = &r;
  if (!best) {
    std::string msg = "all " + std::to_string(K) + " estimation runs failed:";
    for (const auto& r : runs) {
      msg += "\n  run " + std::to_string(r.run_index) + ": " + std::string(to_string(r.exit_status));
      if (!r.message.empty()) msg += " (" + r.message + ")";
    }
    throw EstimationError(msg);
  }
  fit.best = *best;
  if (best->exit_status == ExitStatus::max_iterations)
    fit.warnings.push_back("best run stopped at max_iterations; the optimum may be inaccurate");
  fit.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return fit;
}

/// Builds the estimation problem for `spec` on `data`: encoding, design,
/// layout and draws.
struct PreparedModel {
  Encoding encoding;
  std::shared_ptr<const LikelihoodProblem> problem;
};

inline PreparedModel prepare(const LongChoiceData& data, const ModelSpec& spec_in,
                             const EstimationOptions& opts) {
  ModelSpec spec = spec_in;
  spec.validate();
  if (!data.has_outcome()) throw SchemaError("estimation needs an outcome column");
  if (spec.panel && !data.has_panel()) throw SpecError("panel model needs a panel id column");
  if (spec.weighted && !data.has_weights()) throw SpecError("weighted model needs a weights column");
  if (spec.cluster_level == ClusterLevel::custom && !data.has_clusters())
    throw SpecError("custom clustering needs a cluster id column");

  PreparedModel out;
  out.encoding = make_encoding(data, spec.pars, spec.scale_par);
  DesignMatrix dm = apply_encoding(out.encoding, data);
  ParameterLayout layout = build_layout(spec, out.encoding);
  std::optional<DrawSet> draws;
  if (layout.num_random() > 0)
    draws = make_draws(layout, opts.draw_type, opts.num_draws, opts.halton_drop, opts.antithetic);
  out.problem = make_problem(std::move(dm), spec, std::move(layout), std::move(draws),
                             spec.weighted ? data.obs_weight : std::vector<double>{});
  return out;
}

}  // namespace wtplogit

#pragma once

// Log-likelihood and analytic gradient for multinomial and mixed logit models
// in preference and WTP space.
//
// Everything is written in terms of the chosen alternative c of observation n:
//   d_nj = v_nj - v_nc  (j != c),   ln P_nc = -ln(1 + sum_j exp(d_nj)).
// Preference space: d_nj = (x_nj - x_nc)'beta.
// WTP space:        d_nj = lambda * a_nj,  a_nj = (x_nj - x_nc)'omega - (p_nj - p_nc).
// The difference blocks are fixed, so each evaluation is a pair of
// matrix products plus one pass over observations.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wtplogit/choice_data.hpp"
#include "wtplogit/draws.hpp"
#include "wtplogit/error.hpp"
#include "wtplogit/model_spec.hpp"

namespace wtplogit {

/// Per-row systematic utility for one coefficient realization. `coefs` is
/// (beta) in preference space or (lambda, omega) in WTP space.
inline Eigen::VectorXd utilities(const Eigen::Ref<const Eigen::VectorXd>& coefs,
                                 const DesignMatrix& dm, Space space) {
  if (space == Space::preference) return dm.X * coefs;
  const double lambda = coefs(0);
  return lambda * (dm.X * coefs.tail(coefs.size() - 1) - dm.p);
}

/// ln P_c = -ln(1 + sum_j exp(v_j - v_c)), accumulated in extended precision
/// and shifted when the sum would overflow.
inline double log_chosen_prob(std::span<const double> v, std::size_t chosen) {
  const double vc = v[chosen];
  double m = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j)
    if (j != chosen) m = std::max(m, v[j] - vc);
  long double sum = 0.0L;
  if (m == 0.0) {
    for (std::size_t j = 0; j < v.size(); ++j)
      if (j != chosen) sum += std::exp(static_cast<long double>(v[j] - vc));
    return -static_cast<double>(std::log1p(sum));
  }
  sum = std::exp(static_cast<long double>(-m));
  for (std::size_t j = 0; j < v.size(); ++j)
    if (j != chosen) sum += std::exp(static_cast<long double>(v[j] - vc - m));
  return -(m + static_cast<double>(std::log(sum)));
}

inline double chosen_prob(std::span<const double> v, std::size_t chosen) {
  return std::exp(log_chosen_prob(v, chosen));
}

namespace detail {

// ln P from the non-chosen differences d_j of one observation; writes
// q_j = exp(d_j) * P (the non-chosen probabilities) into q.
inline double log_prob_from_diffs(const double* d, std::size_t count, double* q) {
  double m = 0.0;
  for (std::size_t j = 0; j < count; ++j) m = std::max(m, d[j]);
  long double sum = 0.0L;
  double lnp;
  if (m == 0.0) {
    for (std::size_t j = 0; j < count; ++j) sum += std::exp(static_cast<long double>(d[j]));
    lnp = -static_cast<double>(std::log1p(sum));
  } else {
    sum = std::exp(static_cast<long double>(-m));
    for (std::size_t j = 0; j < count; ++j) sum += std::exp(static_cast<long double>(d[j] - m));
    lnp = -(m + static_cast<double>(std::log(sum)));
  }
  for (std::size_t j = 0; j < count; ++j) q[j] = std::exp(d[j] + lnp);
  return lnp;
}

}  // namespace detail

/// Immutable inputs of one estimation: shared by every multi-start run.
struct LikelihoodProblem {
  DesignMatrix dm;
  ModelSpec spec;
  ParameterLayout layout;
  std::optional<DrawSet> draws;
  // Likelihood units: observations, or individuals for panel models with
  // random parameters (their probabilities multiply within a draw).
  std::vector<int> unit_of_obs;
  std::size_t num_units = 0;
  std::vector<double> unit_weight;  // empty when unweighted

  bool simulated() const { return layout.num_random() > 0; }
  bool weighted() const { return !unit_weight.empty(); }
};

inline std::shared_ptr<const LikelihoodProblem> make_problem(
    DesignMatrix dm, ModelSpec spec, ParameterLayout layout, std::optional<DrawSet> draws,
    const std::vector<double>& obs_weight = {}) {
  if (!dm.has_differences())
    throw ValidationError("design matrix lacks chosen-alternative differences");
  if (layout.space == Space::wtp && !dm.has_scale())
    throw SpecError("WTP space model needs the scale column in the design");
  if (layout.num_random() > 0 && !draws)
    throw SpecError("a model with random parameters needs a draw set");
  if (layout.num_random() == 0 && draws) draws.reset();
  if (draws && static_cast<std::size_t>(draws->Z.cols()) != layout.num_random())
    throw SpecError("draw set does not match the random parameters");

  auto p = std::make_shared<LikelihoodProblem>();
  const std::size_t N = dm.num_obs();
  if (spec.panel && layout.num_random() > 0) {
    if (dm.panel_of_obs.empty()) throw SpecError("panel model needs a panel id column");
    p->unit_of_obs = dm.panel_of_obs;
    p->num_units = static_cast<std::size_t>(dm.num_panels);
  } else {
    p->unit_of_obs.resize(N);
    for (std::size_t n = 0; n < N; ++n) p->unit_of_obs[n] = static_cast<int>(n);
    p->num_units = N;
  }
  if (!obs_weight.empty()) {
    if (obs_weight.size() != N) throw ValidationError("one weight per observation required");
    p->unit_weight.assign(p->num_units, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t n = 0; n < N; ++n) {
      double& w = p->unit_weight[static_cast<std::size_t>(p->unit_of_obs[n])];
      if (std::isnan(w)) {
        w = obs_weight[n];
      } else if (w != obs_weight[n]) {
        throw ValidationError("weights must be constant within each individual in panel models");
      }
    }
  }
  p->dm = std::move(dm);
  p->spec = std::move(spec);
  p->layout = std::move(layout);
  p->draws = std::move(draws);
  return p;
}

/// Log-likelihood with its gradient. `ok` is false when the value is not
/// finite; optimizers treat that as a rejected step.
struct LogLikResult {
  double loglik = 0.0;
  Eigen::VectorXd grad;
  bool ok = true;
};

/// Evaluation state of one optimization run over a shared problem. Scratch
/// buffers are reused across calls; not thread-safe, one per run.
class ObjectiveContext {
 public:
  explicit ObjectiveContext(std::shared_ptr<const LikelihoodProblem> problem)
      : problem_(std::move(problem)) {
    if (!problem_) throw SpecError("null likelihood problem");
  }

  const LikelihoodProblem& problem() const { return *problem_; }
  std::shared_ptr<const LikelihoodProblem> shared_problem() const { return problem_; }

  /// Dispatches to the fixed or simulated likelihood.
  LogLikResult evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta);

  /// Per-unit gradient contributions (weights applied), units x params.
  Eigen::MatrixXd unit_scores(const Eigen::Ref<const Eigen::VectorXd>& theta);

  // scratch
  Eigen::VectorXd a, d, q;
  Eigen::MatrixXd A, D, Q, lnP, S, W;

 private:
  std::shared_ptr<const LikelihoodProblem> problem_;
};

namespace detail {

inline double unit_weight(const LikelihoodProblem& p, std::size_t u) {
  return p.unit_weight.empty() ? 1.0 : p.unit_weight[u];
}

}  // namespace detail

/// Fixed-parameter log-likelihood L = sum_n w_n ln P_nc and its gradient.
/// With `scores`, also fills per-observation gradient rows.
inline LogLikResult mnl_loglik_grad(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                    ObjectiveContext& ctx, Eigen::MatrixXd* scores = nullptr) {
  const LikelihoodProblem& pb = ctx.problem();
  const DesignMatrix& dm = pb.dm;
  const ParameterLayout& layout = pb.layout;
  if (layout.num_random() > 0) throw SpecError("mnl_loglik_grad needs a fixed-parameter model");
  const auto P = static_cast<Eigen::Index>(layout.total_len());
  if (theta.size() != P) throw DomainError("parameter vector length does not match the layout");

  const bool wtp = layout.space == Space::wtp;
  const Eigen::Index rows = dm.X_diff.rows();
  LogLikResult out;
  out.grad = Eigen::VectorXd::Zero(P);
  double lambda = 1.0;
  if (wtp) {
    lambda = theta(0);
    ctx.a.noalias() = dm.X_diff * theta.tail(P - 1);
    ctx.a -= dm.p_diff;
    ctx.d = lambda * ctx.a;
  } else {
    ctx.d.noalias() = dm.X_diff * theta;
  }
  ctx.q.resize(rows);
  if (scores) scores->setZero(static_cast<Eigen::Index>(dm.num_obs()), P);

  long double ll = 0.0L;
  for (std::size_t n = 0; n < dm.num_obs(); ++n) {
    const auto begin = static_cast<Eigen::Index>(dm.diff_start[n]);
    const auto count = dm.diff_start[n + 1] - dm.diff_start[n];
    const double w = detail::unit_weight(pb, static_cast<std::size_t>(pb.unit_of_obs[n]));
    const double lnp = detail::log_prob_from_diffs(ctx.d.data() + begin, count, ctx.q.data() + begin);
    ll += static_cast<long double>(w) * lnp;
    for (std::size_t j = 0; j < count; ++j) ctx.q(begin + static_cast<Eigen::Index>(j)) *= -w;
  }
  out.loglik = static_cast<double>(ll);
  // d lnP/d theta = -sum_j q_j d(d_j)/d theta; q now holds -w q_j.
  if (wtp) {
    out.grad(0) = ctx.q.dot(ctx.a);
    out.grad.tail(P - 1).noalias() = lambda * (dm.X_diff.transpose() * ctx.q);
  } else {
    out.grad.noalias() = dm.X_diff.transpose() * ctx.q;
  }
  if (scores) {
    for (std::size_t n = 0; n < dm.num_obs(); ++n) {
      const auto begin = static_cast<Eigen::Index>(dm.diff_start[n]);
      const auto count = static_cast<Eigen::Index>(dm.diff_start[n + 1] - dm.diff_start[n]);
      auto qn = ctx.q.segment(begin, count);
      auto Xn = dm.X_diff.middleRows(begin, count);
      auto row = scores->row(static_cast<Eigen::Index>(n));
      if (wtp) {
        row(0) = qn.dot(ctx.a.segment(begin, count));
        row.tail(P - 1) = lambda * (Xn.transpose() * qn).transpose();
      } else {
        row = (Xn.transpose() * qn).transpose();
      }
    }
  }
  out.ok = std::isfinite(out.loglik) && out.grad.allFinite();
  return out;
}

namespace detail {

// Chains d LL / d(coefficient realization) for every draw (C x R) into the
// parameter gradient through mu + L z and the mixing transforms.
inline void chain_to_params(const Eigen::MatrixXd& G, const Eigen::MatrixXd& U,
                            const Eigen::MatrixXd& Z, const ParameterLayout& layout,
                            Eigen::Ref<Eigen::VectorXd> grad) {
  const auto K = static_cast<Eigen::Index>(layout.num_random());
  const Eigen::Index R = G.cols();
  grad.setZero();
  std::vector<bool> is_random(layout.num_coefs, false);
  for (auto c : layout.random_coefs) is_random[c] = true;
  for (std::size_t c = 0; c < layout.num_coefs; ++c)
    if (!is_random[c]) grad(static_cast<Eigen::Index>(c)) = G.row(static_cast<Eigen::Index>(c)).sum();
  Eigen::MatrixXd H(R, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const std::size_t c = layout.random_coefs[static_cast<std::size_t>(k)];
    const Distribution dist = layout.coef_dist[c];
    const auto ci = static_cast<Eigen::Index>(c);
    for (Eigen::Index r = 0; r < R; ++r) H(r, k) = G(ci, r) * distribution_slope(dist, U(r, ci));
    grad(ci) = H.col(k).sum();
  }
  const Eigen::MatrixXd HZ = H.transpose() * Z;  // (i, j): sum_r H(r,i) Z(r,j)
  for (Eigen::Index k = 0; k < K; ++k)
    grad(static_cast<Eigen::Index>(layout.sd_index(static_cast<std::size_t>(k)))) = HZ(k, k);
  if (layout.correlated)
    for (Eigen::Index i = 1; i < K; ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        grad(static_cast<Eigen::Index>(
            layout.cholesky_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))) = HZ(i, j);
}

// d LL / d(coefficient realization) per draw from the weighted non-chosen
// probabilities Qt (rows x R, already multiplied by -w_u * omega_ur) on a
// row block.
inline Eigen::MatrixXd coef_gradient(const DesignMatrix& dm, const ParameterLayout& layout,
                                     const Eigen::MatrixXd& B, const Eigen::MatrixXd& A,
                                     const Eigen::MatrixXd& Qt, Eigen::Index begin,
                                     Eigen::Index count) {
  const Eigen::Index R = Qt.cols();
  const auto C = static_cast<Eigen::Index>(layout.num_coefs);
  Eigen::MatrixXd G(C, R);
  auto Xb = dm.X_diff.middleRows(begin, count);
  auto Qb = Qt.middleRows(begin, count);
  if (layout.space == Space::wtp) {
    G.bottomRows(C - 1).noalias() = Xb.transpose() * Qb;
    for (Eigen::Index r = 0; r < R; ++r) {
      G.col(r).tail(C - 1) *= B(r, 0);
      G(0, r) = Qb.col(r).dot(A.col(r).segment(begin, count));
    }
  } else {
    G.noalias() = Xb.transpose() * Qb;
  }
  return G;
}

}  // namespace detail

/// Simulated log-likelihood: P_u = (1/R) sum_r prod_{n in u} P_nc(theta_r),
/// L = sum_u w_u ln P_u, with the exact gradient of the simulator. With
/// `scores`, also fills per-unit gradient rows.
inline LogLikResult mxl_simulated_loglik_grad(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                              ObjectiveContext& ctx,
                                              Eigen::MatrixXd* scores = nullptr) {
  const LikelihoodProblem& pb = ctx.problem();
  const DesignMatrix& dm = pb.dm;
  const ParameterLayout& layout = pb.layout;
  if (!pb.draws) throw SpecError("simulated likelihood needs draws");
  const auto P = static_cast<Eigen::Index>(layout.total_len());
  if (theta.size() != P) throw DomainError("parameter vector length does not match the layout");
  const Eigen::MatrixXd& Z = pb.draws->Z;
  const Eigen::Index R = Z.rows();
  const bool wtp = layout.space == Space::wtp;

  const Eigen::MatrixXd U = underlying_normals(theta, layout, Z);
  Eigen::MatrixXd B = U;
  for (auto c : layout.random_coefs)
    for (Eigen::Index r = 0; r < R; ++r)
      B(r, static_cast<Eigen::Index>(c)) =
          apply_distribution(layout.coef_dist[c], U(r, static_cast<Eigen::Index>(c)));

  if (wtp) {
    const auto C = static_cast<Eigen::Index>(layout.num_coefs);
    ctx.A.noalias() = dm.X_diff * B.rightCols(C - 1).transpose();
    ctx.A.colwise() -= dm.p_diff;
    ctx.D = ctx.A * B.col(0).asDiagonal();
  } else {
    ctx.D.noalias() = dm.X_diff * B.transpose();
  }
  const Eigen::Index rows = ctx.D.rows();
  ctx.Q.resize(rows, R);

  // Column-wise differences per draw; per-observation ln P for every draw.
  const std::size_t N = dm.num_obs();
  ctx.lnP.resize(static_cast<Eigen::Index>(N), R);
  Eigen::VectorXd dcol(rows), qcol(rows);
  for (Eigen::Index r = 0; r < R; ++r) {
    dcol = ctx.D.col(r);
    for (std::size_t n = 0; n < N; ++n) {
      const auto begin = dm.diff_start[n];
      ctx.lnP(static_cast<Eigen::Index>(n), r) = detail::log_prob_from_diffs(
          dcol.data() + begin, dm.diff_start[n + 1] - begin, qcol.data() + begin);
    }
    ctx.Q.col(r) = qcol;
  }

  // Unit sums over draws: S(u, r) = sum_{n in u} ln P_nr.
  ctx.S.setZero(static_cast<Eigen::Index>(pb.num_units), R);
  for (std::size_t n = 0; n < N; ++n) ctx.S.row(pb.unit_of_obs[n]) += ctx.lnP.row(static_cast<Eigen::Index>(n));

  LogLikResult out;
  out.grad = Eigen::VectorXd::Zero(P);
  long double ll = 0.0L;
  ctx.W.resize(static_cast<Eigen::Index>(pb.num_units), R);  // -w_u * draw weight
  const double logR = std::log(static_cast<double>(R));
  bool finite = true;
  for (std::size_t u = 0; u < pb.num_units; ++u) {
    const auto ui = static_cast<Eigen::Index>(u);
    const double m = ctx.S.row(ui).maxCoeff();
    if (!std::isfinite(m)) {
      finite = false;
      break;
    }
    long double sum = 0.0L;
    for (Eigen::Index r = 0; r < R; ++r) sum += std::exp(static_cast<long double>(ctx.S(ui, r) - m));
    const double lse = m + static_cast<double>(std::log(sum));
    const double w = detail::unit_weight(pb, u);
    ll += static_cast<long double>(w) * (lse - logR);
    for (Eigen::Index r = 0; r < R; ++r) ctx.W(ui, r) = -w * std::exp(ctx.S(ui, r) - lse);
  }
  if (!finite) {
    out.loglik = -std::numeric_limits<double>::infinity();
    out.ok = false;
    return out;
  }
  out.loglik = static_cast<double>(ll);

  for (std::size_t n = 0; n < N; ++n) {
    const auto begin = static_cast<Eigen::Index>(dm.diff_start[n]);
    const auto count = static_cast<Eigen::Index>(dm.diff_start[n + 1] - dm.diff_start[n]);
    ctx.Q.middleRows(begin, count) *= ctx.W.row(pb.unit_of_obs[n]).asDiagonal();
  }
  const Eigen::MatrixXd G = detail::coef_gradient(dm, layout, B, ctx.A, ctx.Q, 0, rows);
  detail::chain_to_params(G, U, Z, layout, out.grad);

  if (scores) {
    scores->setZero(static_cast<Eigen::Index>(pb.num_units), P);
    Eigen::VectorXd g(P);
    for (std::size_t n = 0; n < N; ++n) {
      const auto begin = static_cast<Eigen::Index>(dm.diff_start[n]);
      const auto count = static_cast<Eigen::Index>(dm.diff_start[n + 1] - dm.diff_start[n]);
      const Eigen::MatrixXd Gn = detail::coef_gradient(dm, layout, B, ctx.A, ctx.Q, begin, count);
      detail::chain_to_params(Gn, U, Z, layout, g);
      scores->row(pb.unit_of_obs[n]) += g.transpose();
    }
  }
  out.ok = std::isfinite(out.loglik) && out.grad.allFinite();
  return out;
}

inline LogLikResult ObjectiveContext::evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  return problem_->simulated() ? mxl_simulated_loglik_grad(theta, *this)
                               : mnl_loglik_grad(theta, *this);
}

inline Eigen::MatrixXd ObjectiveContext::unit_scores(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  Eigen::MatrixXd scores;
  if (problem_->simulated()) {
    mxl_simulated_loglik_grad(theta, *this, &scores);
  } else {
    mnl_loglik_grad(theta, *this, &scores);
  }
  return scores;
}

/// Log-likelihood at the null model (every parameter zero): sum_n w_n ln(1/J_n).
inline double null_loglik(const LikelihoodProblem& pb) {
  long double ll = 0.0L;
  const DesignMatrix& dm = pb.dm;
  std::vector<long double> unit(pb.num_units, 0.0L);
  for (std::size_t n = 0; n < dm.num_obs(); ++n)
    unit[static_cast<std::size_t>(pb.unit_of_obs[n])] -= std::log(static_cast<long double>(dm.num_alts(n)));
  for (std::size_t u = 0; u < pb.num_units; ++u)
    ll += static_cast<long double>(detail::unit_weight(pb, u)) * unit[u];
  return static_cast<double>(ll);
}

}  // namespace wtplogit

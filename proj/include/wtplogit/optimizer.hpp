#pragma once

// Limited-memory BFGS with a strong Wolfe line search.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <string_view>

#include "wtplogit/error.hpp"

namespace wtplogit {

enum class ExitStatus { ftol_reached, xtol_reached, max_iterations, evaluation_failure, diverged };

inline std::string_view to_string(ExitStatus s) {
  switch (s) {
    case ExitStatus::ftol_reached: return "ftol_reached";
    case ExitStatus::xtol_reached: return "xtol_reached";
    case ExitStatus::max_iterations: return "max_iterations";
    case ExitStatus::evaluation_failure: return "evaluation_failure";
    default: return "diverged";
  }
}

inline ExitStatus parse_exit_status(std::string_view s) {
  for (auto e : {ExitStatus::ftol_reached, ExitStatus::xtol_reached, ExitStatus::max_iterations,
                 ExitStatus::evaluation_failure, ExitStatus::diverged})
    if (to_string(e) == s) return e;
  throw SchemaError("unknown exit status '" + std::string(s) + "'");
}

inline std::string_view describe(ExitStatus s) {
  switch (s) {
    case ExitStatus::ftol_reached:
      return "converged: the change in the objective fell below ftol_rel or ftol_abs";
    case ExitStatus::xtol_reached:
      return "converged: the parameter step fell below xtol_rel or xtol_abs";
    case ExitStatus::max_iterations:
      return "stopped: max_iterations reached before convergence";
    case ExitStatus::evaluation_failure:
      return "failed: the log-likelihood was not finite at the starting values";
    default:
      return "failed: parameters or objective left the finite range";
  }
}

/// Converged or usable (max_iterations is reported with a warning).
inline bool is_success(ExitStatus s) {
  return s == ExitStatus::ftol_reached || s == ExitStatus::xtol_reached ||
         s == ExitStatus::max_iterations;
}

struct OptimizerOptions {
  double ftol_rel = 1e-10;
  double ftol_abs = 1e-10;
  double xtol_rel = 1e-10;
  double xtol_abs = 1e-10;
  int max_iterations = 2000;
  int memory = 10;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd grad;
  int iterations = 0;
  int evaluations = 0;
  ExitStatus status = ExitStatus::evaluation_failure;
  double elapsed = 0.0;  // seconds
};

/// Minimizes f. `fn(x, g)` returns f(x) and writes its gradient into g; a
/// non-finite return rejects the point.
template <class Fn>
MinimizeResult minimize(Fn&& fn, const Eigen::VectorXd& x0, const OptimizerOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  auto finish = [&](ExitStatus s) {
    res.status = s;
    res.elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    return res;
  };

  Eigen::VectorXd x = x0, g(n), xn(n), gn(n), dir(n), xb(n), gb(n);
  res.x = x;
  double f = fn(x, g);
  ++res.evaluations;
  if (!std::isfinite(f) || !g.allFinite()) return finish(ExitStatus::evaluation_failure);
  res.f = f;
  res.grad = g;
  if (n == 0) return finish(ExitStatus::ftol_reached);

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  constexpr double c1 = 1e-4;
  constexpr double c2 = 0.9;
  constexpr double kDivergeNorm = 1e12;

  auto two_loop = [&](const Eigen::VectorXd& grad) {
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(S.size());
    for (std::size_t i = S.size(); i-- > 0;) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double beta = rho[i] * Y[i].dot(q);
      q += (alpha[i] - beta) * S[i];
    }
    return Eigen::VectorXd(-q);
  };

  // Line search along d satisfying the strong Wolfe conditions (bracketing
  // plus zoom). On success xn, gn, res.f hold the accepted point; returns the
  // step or 0. Trial points with a non-finite objective count as too long.
  struct Trial {
    double a, f, d;
  };
  Eigen::VectorXd xt(n), gt(n);
  auto line_search = [&](const Eigen::VectorXd& d, double step) {
    const double slope = g.dot(d);
    if (!(slope < 0.0)) return 0.0;
    auto eval = [&](double a) {
      xt = x + a * d;
      const double fv = fn(xt, gt);
      ++res.evaluations;
      if (!std::isfinite(fv) || !gt.allFinite()) return Trial{a, std::numeric_limits<double>::infinity(), 0.0};
      return Trial{a, fv, gt.dot(d)};
    };
    auto accept = [&](const Trial& t) {
      xn = xt;
      gn = gt;
      res.f = t.f;
      return t.a;
    };
    auto armijo = [&](const Trial& t) { return t.f <= f + c1 * t.a * slope; };
    Trial best{0.0, f, slope};  // best Armijo point seen
    bool have_best = false;
    auto remember = [&](const Trial& t) {
      if (armijo(t) && t.f < best.f) {
        best = t;
        have_best = true;
        xb = xt;
        gb = gt;
      }
    };
    auto zoom = [&](Trial lo, Trial hi) {
      for (int k = 0; k < 40; ++k) {
        double a;
        const double w = hi.a - lo.a;
        if (std::isfinite(hi.f)) {
          // minimizer of the quadratic through (lo.f, lo.d) and hi.f
          const double denom = 2.0 * (hi.f - lo.f - lo.d * w);
          double t = denom > 0.0 ? -lo.d * w * w / denom / w : 0.5;
          t = std::clamp(t, 0.1, 0.9);
          a = lo.a + t * w;
        } else {
          a = lo.a + 0.5 * w;
        }
        const Trial tr = eval(a);
        remember(tr);
        if (!armijo(tr) || tr.f >= lo.f) {
          hi = tr;
        } else {
          if (std::abs(tr.d) <= -c2 * slope) return accept(tr);
          if (tr.d * (hi.a - lo.a) >= 0.0) hi = lo;
          lo = tr;
        }
        if (std::abs(hi.a - lo.a) <= 1e-16 * std::max(1.0, std::abs(lo.a))) break;
      }
      return 0.0;
    };

    Trial prev{0.0, f, slope};
    double a = step;
    for (int k = 0; k < 40; ++k) {
      const Trial tr = eval(a);
      remember(tr);
      if (!armijo(tr) || (k > 0 && tr.f >= prev.f)) {
        if (const double r = zoom(prev, tr); r > 0.0) return r;
        break;
      }
      if (std::abs(tr.d) <= -c2 * slope) return accept(tr);
      if (tr.d >= 0.0) {
        if (const double r = zoom(tr, prev); r > 0.0) return r;
        break;
      }
      prev = tr;
      a *= 2.0;
    }
    if (!have_best) return 0.0;
    xn = xb;
    gn = gb;
    res.f = best.f;
    return best.a;
  };

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() == 0.0) return finish(ExitStatus::ftol_reached);
    dir = two_loop(g);
    double step0 = S.empty() ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;
    double step = line_search(dir, step0);
    if (step == 0.0) {
      // one steepest-descent attempt with fresh curvature memory
      S.clear();
      Y.clear();
      rho.clear();
      dir = -g;
      step = line_search(dir, std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()));
      // no decrease possible along either direction: f is stationary to
      // working precision
      if (step == 0.0)
        return finish(x.lpNorm<Eigen::Infinity>() > kDivergeNorm ? ExitStatus::diverged
                                                                 : ExitStatus::ftol_reached);
    }
    const double f_old = f;
    Eigen::VectorXd s = xn - x;
    Eigen::VectorXd y = gn - g;
    x = xn;
    g = gn;
    f = res.f;
    res.x = x;
    res.grad = g;
    res.iterations = it + 1;
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > kDivergeNorm)
      return finish(ExitStatus::diverged);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }

    const double df = std::abs(f_old - f);
    if (df <= opts.ftol_abs || df <= opts.ftol_rel * std::abs(f))
      return finish(ExitStatus::ftol_reached);
    bool small_step = true;
    for (Eigen::Index i = 0; i < n && small_step; ++i)
      small_step = std::abs(s(i)) <= opts.xtol_abs || std::abs(s(i)) <= opts.xtol_rel * std::abs(x(i));
    if (small_step) return finish(ExitStatus::xtol_reached);
  }
  return finish(ExitStatus::max_iterations);
}

}  // namespace wtplogit

#pragma once

// Plain-text summaries of fitted models.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "wtplogit/estimation.hpp"
#include "wtplogit/inference.hpp"

namespace wtplogit {

namespace detail {

inline std::string fmt(const char* f, double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t w, bool left = false) {
  if (s.size() >= w) return s;
  return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

inline std::size_t name_width(const std::vector<std::string>& names) {
  std::size_t w = 4;
  for (const auto& n : names) w = std::max(w, n.size());
  return w;
}

}  // namespace detail

inline std::string format_coefficients(const CoefficientTable& t) {
  std::vector<std::string> names;
  for (const auto& r : t.rows) names.push_back(r.name);
  const std::size_t w = detail::name_width(names);
  std::ostringstream os;
  os << detail::pad("", w) << detail::pad("Estimate", 14) << detail::pad("Std. Error", 14)
     << detail::pad("z-value", 10) << detail::pad("Pr(>|z|)", 12) << '\n';
  for (const auto& r : t.rows) {
    os << detail::pad(r.name, w, true) << detail::pad(detail::fmt("%.6f", r.estimate), 14)
       << detail::pad(detail::fmt("%.6f", r.std_error), 14) << detail::pad(detail::fmt("%.4f", r.z_value), 10)
       << detail::pad(r.p_value < 2.2e-16 ? "< 2.2e-16" : detail::fmt("%.6g", r.p_value), 12) << ' '
       << r.stars << '\n';
  }
  os << "---\nSignif. codes:  0 '***' 0.001 '**' 0.01 '*' 0.05 '.' 0.1 ' ' 1\n";
  for (const auto& warn : t.warnings) os << "Warning: " << warn << '\n';
  return os.str();
}

inline std::string format_multistart(const FitResult& fit) {
  std::ostringstream os;
  os << "Multistart summary:\n"
     << detail::pad("run", 5) << detail::pad("Log Likelihood", 18) << detail::pad("Iterations", 12)
     << "  Exit Status\n";
  for (const auto& r : fit.all_runs)
    os << detail::pad(std::to_string(r.run_index), 5) << detail::pad(detail::fmt("%.3f", r.loglik), 18)
       << detail::pad(std::to_string(r.iterations), 12) << "  " << to_string(r.exit_status) << '\n';
  return os.str();
}

inline std::string format_random_summary(const std::vector<RandomCoefSummary>& rows, int n_draws) {
  std::vector<std::string> names;
  for (const auto& r : rows) names.push_back(r.name);
  const std::size_t w = detail::name_width(names);
  std::ostringstream os;
  os << "Summary of " << n_draws << " draws for random coefficients:\n"
     << detail::pad("", w) << detail::pad("Min.", 12) << detail::pad("1st Qu.", 12) << detail::pad("Median", 12)
     << detail::pad("Mean", 12) << detail::pad("3rd Qu.", 12) << detail::pad("Max.", 12) << '\n';
  for (const auto& r : rows) {
    os << detail::pad(r.name + " (" + std::string(to_string(r.dist)) + ")", w + 5, true);
    for (double v : {r.min, r.q1, r.median, r.mean, r.q3, r.max}) os << detail::pad(detail::fmt("%.6f", v), 12);
    os << '\n';
  }
  return os.str();
}

inline std::string format_wtp_comparison(const WtpComparison& c) {
  const std::size_t w = detail::name_width(c.names);
  std::ostringstream os;
  os << detail::pad("", w) << detail::pad("pref", 16) << detail::pad("wtp", 16) << detail::pad("difference", 16)
     << '\n';
  for (std::size_t i = 0; i < c.names.size(); ++i) {
    const char* f = c.names[i] == "logLik" ? "%.7f" : "%.8f";
    os << detail::pad(c.names[i], w, true) << detail::pad(detail::fmt(f, c.pref[i]), 16)
       << detail::pad(detail::fmt(f, c.wtp[i]), 16) << detail::pad(detail::fmt(f, c.difference[i]), 16) << '\n';
  }
  return os.str();
}

/// Full fit report: frequencies, multistart runs, best-run header,
/// coefficients, fit statistics and, for random parameters, draw summaries.
inline std::string format_summary(const FitResult& fit, const std::string& call = {}) {
  std::ostringstream os;
  const bool mxl = fit.layout.num_random() > 0;
  if (!call.empty()) os << "Call:\n" << call << "\n\n";
  if (!fit.alt_frequencies.empty()) {
    os << "Frequencies of alternatives:\n";
    for (std::size_t i = 0; i < fit.alt_frequencies.size(); ++i)
      os << detail::pad(std::to_string(i + 1), 10);
    os << '\n';
    for (double f : fit.alt_frequencies) os << detail::pad(detail::fmt("%.6f", f), 10);
    os << "\n\n";
  }
  if (fit.all_runs.size() > 1) os << format_multistart(fit) << '\n';

  os << "Model type:    " << (mxl ? "Mixed Logit" : "Multinomial Logit") << '\n'
     << "Model space:   " << (fit.layout.space == Space::wtp ? "Willingness-to-Pay" : "Preference") << '\n'
     << "Model run:     " << fit.best.run_index << " of " << fit.all_runs.size() << '\n'
     << "Iterations:    " << fit.best.iterations << '\n'
     << "Elapsed time:  " << detail::fmt("%.3fs", fit.elapsed) << '\n'
     << "Algorithm:     L-BFGS (memory 10, strong Wolfe line search)\n"
     << "Exit status:   " << to_string(fit.best.exit_status) << '\n'
     << "Weights used?: " << (fit.spec.weighted ? "TRUE" : "FALSE") << '\n';
  if (fit.spec.panel) os << "Panel ID:      " << fit.num_panels << " individuals\n";
  if (fit.vcov_robust)
    os << "Cluster level: " << to_string(fit.spec.cluster_level) << " (" << fit.num_clusters << " clusters)\n";
  os << "Robust?        " << (fit.vcov_robust ? "TRUE" : "FALSE") << "\n\n";

  os << "Model Coefficients:\n" << format_coefficients(coefficient_table(fit)) << '\n';
  const auto& s = fit.fit_stats;
  os << "Log-Likelihood:         " << detail::fmt("%.7f", s.loglik) << '\n'
     << "Null Log-Likelihood:    " << detail::fmt("%.7f", s.null_loglik) << '\n'
     << "AIC:                    " << detail::fmt("%.7f", s.aic) << '\n'
     << "BIC:                    " << detail::fmt("%.7f", s.bic) << '\n'
     << "McFadden R2:            " << detail::fmt("%.7f", s.mcfadden_r2) << '\n'
     << "Adj McFadden R2:        " << detail::fmt("%.7f", s.adj_mcfadden_r2) << '\n'
     << "Number of Observations: " << s.num_obs << '\n';
  if (mxl) {
    constexpr int n = 10000;
    os << '\n' << format_random_summary(random_coef_summary(fit, n), n);
  }
  for (const auto& w : fit.warnings) os << "Warning: " << w << '\n';
  return os.str();
}

}  // namespace wtplogit

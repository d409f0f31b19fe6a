#pragma once

// JSON model artifact: everything needed to report, predict from, or
// compare a fitted model without refitting.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "wtplogit/choice_data.hpp"
#include "wtplogit/error.hpp"
#include "wtplogit/estimation.hpp"
#include "wtplogit/model_spec.hpp"

namespace wtplogit {

inline constexpr int kArtifactVersion = 1;

namespace detail {

using nlohmann::json;

// Non-finite values are stored as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

inline Eigen::VectorXd to_vec(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = num(j[i]);
  return v;
}

inline json mat(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

inline Eigen::MatrixXd to_mat(const json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t i = 0; i < j.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = to_vec(j[i]).transpose();
  return m;
}

template <class T>
json opt(const std::optional<T>& o) {
  return o ? json(*o) : json(nullptr);
}

}  // namespace detail

inline nlohmann::json spec_to_json(const ModelSpec& s) {
  nlohmann::json rp = nlohmann::json::object();
  for (const auto& [k, d] : s.rand_pars) rp[k] = std::string(to_string(d));
  return {{"space", std::string(to_string(s.space))},
          {"pars", s.pars},
          {"scale_par", detail::opt(s.scale_par)},
          {"rand_pars", rp},
          {"rand_scale", s.rand_scale ? nlohmann::json(std::string(to_string(*s.rand_scale))) : nlohmann::json(nullptr)},
          {"correlation", s.correlation},
          {"panel", s.panel},
          {"weighted", s.weighted},
          {"robust", s.robust},
          {"cluster_level", std::string(to_string(s.cluster_level))}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.space = parse_space(j.at("space").get<std::string>());
  s.pars = j.at("pars").get<std::vector<std::string>>();
  if (!j.at("scale_par").is_null()) s.scale_par = j.at("scale_par").get<std::string>();
  for (const auto& [k, v] : j.at("rand_pars").items()) s.rand_pars[k] = parse_distribution(v.get<std::string>());
  if (!j.at("rand_scale").is_null()) s.rand_scale = parse_distribution(j.at("rand_scale").get<std::string>());
  s.correlation = j.at("correlation").get<bool>();
  s.panel = j.at("panel").get<bool>();
  s.weighted = j.at("weighted").get<bool>();
  s.robust = j.at("robust").get<bool>();
  s.cluster_level = parse_cluster_level(j.at("cluster_level").get<std::string>());
  return s;
}

inline nlohmann::json options_to_json(const EstimationOptions& o) {
  return {{"num_multi_starts", o.num_multi_starts},
          {"start_lower", o.start_lower},
          {"start_upper", o.start_upper},
          {"start_vals", o.start_vals ? detail::vec(*o.start_vals) : nlohmann::json(nullptr)},
          {"num_draws", o.num_draws},
          {"draw_type", std::string(to_string(o.draw_type))},
          {"halton_drop", o.halton_drop},
          {"antithetic", o.antithetic},
          {"num_cores", o.num_cores},
          {"seed", o.seed},
          {"ftol_rel", o.ftol_rel},
          {"ftol_abs", o.ftol_abs},
          {"xtol_rel", o.xtol_rel},
          {"xtol_abs", o.xtol_abs},
          {"max_iterations", o.max_iterations},
          {"scale_inputs", o.scale_inputs}};
}

inline EstimationOptions options_from_json(const nlohmann::json& j) {
  EstimationOptions o;
  o.num_multi_starts = j.at("num_multi_starts").get<int>();
  o.start_lower = j.at("start_lower").get<double>();
  o.start_upper = j.at("start_upper").get<double>();
  if (!j.at("start_vals").is_null()) o.start_vals = detail::to_vec(j.at("start_vals"));
  o.num_draws = j.at("num_draws").get<int>();
  o.draw_type = parse_draw_type(j.at("draw_type").get<std::string>());
  o.halton_drop = j.at("halton_drop").get<int>();
  o.antithetic = j.at("antithetic").get<bool>();
  o.num_cores = j.at("num_cores").get<int>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.ftol_rel = j.at("ftol_rel").get<double>();
  o.ftol_abs = j.at("ftol_abs").get<double>();
  o.xtol_rel = j.at("xtol_rel").get<double>();
  o.xtol_abs = j.at("xtol_abs").get<double>();
  o.max_iterations = j.at("max_iterations").get<int>();
  o.scale_inputs = j.at("scale_inputs").get<bool>();
  return o;
}

inline nlohmann::json encoding_to_json(const Encoding& e) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : e.columns) {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& x : c.factors) f.push_back({{"source", x.source}, {"level", x.level}});
    cols.push_back({{"name", c.name}, {"factors", f}});
  }
  return {{"terms", e.terms},
          {"columns", cols},
          {"scale_par", detail::opt(e.scale_par)},
          {"levels", e.levels},
          {"term_columns", e.term_columns}};
}

inline Encoding encoding_from_json(const nlohmann::json& j) {
  Encoding e;
  e.terms = j.at("terms").get<std::vector<std::string>>();
  for (const auto& c : j.at("columns")) {
    EncodedColumn col;
    col.name = c.at("name").get<std::string>();
    for (const auto& f : c.at("factors")) col.factors.push_back({f.at("source").get<std::string>(), f.at("level").get<int>()});
    e.columns.push_back(std::move(col));
  }
  if (!j.at("scale_par").is_null()) e.scale_par = j.at("scale_par").get<std::string>();
  e.levels = j.at("levels").get<std::map<std::string, std::vector<std::string>>>();
  e.term_columns = j.at("term_columns").get<std::map<std::string, std::vector<std::size_t>>>();
  return e;
}

inline nlohmann::json run_to_json(const RunResult& r) {
  return {{"run_index", r.run_index},
          {"loglik", detail::num(r.loglik)},
          {"grad_norm", detail::num(r.grad_norm)},
          {"iterations", r.iterations},
          {"exit_status", std::string(to_string(r.exit_status))},
          {"elapsed", r.elapsed},
          {"theta_start", detail::vec(r.theta_start)},
          {"theta_hat", detail::vec(r.theta_hat)},
          {"message", r.message}};
}

inline RunResult run_from_json(const nlohmann::json& j) {
  RunResult r;
  r.run_index = j.at("run_index").get<int>();
  r.loglik = detail::num(j.at("loglik"));
  r.grad_norm = detail::num(j.at("grad_norm"));
  r.iterations = j.at("iterations").get<int>();
  r.exit_status = parse_exit_status(j.at("exit_status").get<std::string>());
  r.elapsed = j.at("elapsed").get<double>();
  r.theta_start = detail::to_vec(j.at("theta_start"));
  r.theta_hat = detail::to_vec(j.at("theta_hat"));
  r.message = j.at("message").get<std::string>();
  return r;
}

inline nlohmann::json to_json(const FitResult& f) {
  const auto& s = f.fit_stats;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : f.all_runs) runs.push_back(run_to_json(r));
  return {{"artifact_version", kArtifactVersion},
          {"spec", spec_to_json(f.spec)},
          {"options", options_to_json(f.options)},
          {"encoding", encoding_to_json(f.encoding)},
          {"parameters", f.layout.names()},
          {"theta_hat", detail::vec(f.coef())},
          {"vcov", detail::mat(f.vcov)},
          {"vcov_robust", f.vcov_robust},
          {"fit_stats",
           {{"loglik", s.loglik},
            {"null_loglik", s.null_loglik},
            {"aic", s.aic},
            {"bic", s.bic},
            {"mcfadden_r2", s.mcfadden_r2},
            {"adj_mcfadden_r2", s.adj_mcfadden_r2},
            {"num_params", s.num_params},
            {"num_obs", s.num_obs}}},
          {"alt_frequencies", f.alt_frequencies},
          {"num_obs", f.num_obs},
          {"num_panels", f.num_panels},
          {"num_clusters", f.num_clusters},
          {"elapsed", f.elapsed},
          {"best_run", f.best.run_index},
          {"runs", runs},
          {"warnings", f.warnings}};
}

inline FitResult fit_from_json(const nlohmann::json& j) {
  if (!j.contains("artifact_version") || j.at("artifact_version").get<int>() != kArtifactVersion)
    throw SchemaError("unsupported model artifact version");
  try {
    FitResult f;
    f.spec = spec_from_json(j.at("spec"));
    f.options = options_from_json(j.at("options"));
    f.encoding = encoding_from_json(j.at("encoding"));
    f.layout = build_layout(f.spec, f.encoding);
    if (f.layout.names() != j.at("parameters").get<std::vector<std::string>>())
      throw SchemaError("artifact parameter names do not match its specification");
    for (const auto& r : j.at("runs")) f.all_runs.push_back(run_from_json(r));
    const int best = j.at("best_run").get<int>();
    bool found = false;
    for (const auto& r : f.all_runs)
      if (r.run_index == best) {
        f.best = r;
        found = true;
      }
    if (!found) throw SchemaError("artifact best_run not among its runs");
    f.vcov = detail::to_mat(j.at("vcov"));
    f.vcov_robust = j.at("vcov_robust").get<bool>();
    const auto& s = j.at("fit_stats");
    f.fit_stats.loglik = s.at("loglik").get<double>();
    f.fit_stats.null_loglik = s.at("null_loglik").get<double>();
    f.fit_stats.aic = s.at("aic").get<double>();
    f.fit_stats.bic = s.at("bic").get<double>();
    f.fit_stats.mcfadden_r2 = s.at("mcfadden_r2").get<double>();
    f.fit_stats.adj_mcfadden_r2 = s.at("adj_mcfadden_r2").get<double>();
    f.fit_stats.num_params = s.at("num_params").get<int>();
    f.fit_stats.num_obs = s.at("num_obs").get<std::size_t>();
    f.alt_frequencies = j.at("alt_frequencies").get<std::vector<double>>();
    f.num_obs = j.at("num_obs").get<std::size_t>();
    f.num_panels = j.at("num_panels").get<std::size_t>();
    f.num_clusters = j.at("num_clusters").get<std::size_t>();
    f.elapsed = j.at("elapsed").get<double>();
    f.warnings = j.at("warnings").get<std::vector<std::string>>();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model artifact: ") + e.what());
  }
}

inline void save_artifact(const FitResult& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  out << to_json(f).dump(2) << '\n';
}

inline FitResult load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model artifact '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("model artifact '" + path + "' is not valid JSON: " + e.what());
  }
  return fit_from_json(j);
}

}  // namespace wtplogit

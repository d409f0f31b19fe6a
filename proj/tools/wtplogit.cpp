// wtplogit command-line interface: fit, predict, wtp, bench.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wtplogit/wtplogit.hpp"

namespace {

using namespace wtplogit;

constexpr int kExitEstimation = 1;
constexpr int kExitUsage = 2;

std::string shortest(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

// Data-column roles shared by fit, predict and bench.
struct DataArgs {
  std::string path;
  std::string outcome;
  std::string obs_id;
  std::string panel_id;
  std::string weights;
  std::string cluster_id;
  std::vector<std::string> levels;  // "column:level1,level2,..."

  ColumnSchema schema() const {
    ColumnSchema s;
    s.outcome = outcome;
    s.obs_id = obs_id;
    s.panel_id = panel_id;
    s.weights = weights;
    s.cluster_id = cluster_id;
    for (const auto& spec : levels) {
      const auto colon = spec.find(':');
      if (colon == std::string::npos || colon == 0)
        throw SpecError("--levels expects column:level1,level2,... (got '" + spec + "')");
      s.levels[spec.substr(0, colon)] = split(spec.substr(colon + 1), ',');
    }
    return s;
  }
};

void add_data_options(CLI::App* cmd, DataArgs& d, bool outcome_required) {
  cmd->add_option("--data", d.path, "Long-format choice data (CSV)")->required()->check(CLI::ExistingFile);
  auto* o = cmd->add_option("--outcome", d.outcome, "Binary column marking the chosen alternative");
  if (outcome_required) o->required();
  cmd->add_option("--obs-id", d.obs_id, "Choice observation identifier column")->required();
  cmd->add_option("--panel-id", d.panel_id, "Individual identifier column (panel data)");
  cmd->add_option("--weights", d.weights, "Positive observation weight column");
  cmd->add_option("--cluster-id", d.cluster_id, "Cluster identifier column for robust errors");
  cmd->add_option("--levels", d.levels, "Categorical level order, column:ref,level2,... (repeatable)");
}

// Model formulation shared by fit and bench.
struct ModelArgs {
  std::vector<std::string> pars;
  std::string scale_par;
  std::string space;
  std::vector<std::string> rand_pars;  // "term:dist"
  std::string rand_scale;
  bool correlation = false;
  bool robust = false;
  std::string cluster_level = "obs";

  ModelSpec spec(const DataArgs& d) const {
    ModelSpec s;
    s.pars = pars;
    if (!scale_par.empty()) s.scale_par = scale_par;
    s.space = space.empty() ? (scale_par.empty() ? Space::preference : Space::wtp) : parse_space(space);
    for (const auto& rp : rand_pars) {
      const auto colon = rp.rfind(':');
      if (colon == std::string::npos || colon == 0) throw SpecError("--rand-pars expects term:dist (got '" + rp + "')");
      s.rand_pars[rp.substr(0, colon)] = parse_distribution(rp.substr(colon + 1));
    }
    if (!rand_scale.empty()) s.rand_scale = parse_distribution(rand_scale);
    s.correlation = correlation;
    s.panel = !d.panel_id.empty();
    s.weighted = !d.weights.empty();
    s.robust = robust || s.weighted;
    s.cluster_level = !d.cluster_id.empty() && cluster_level == "obs" ? ClusterLevel::custom
                                                                      : parse_cluster_level(cluster_level);
    return s;
  }
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--pars", m.pars, "Covariate terms; a*b adds an interaction")->required()->delimiter(',');
  cmd->add_option("--scale-par", m.scale_par, "Scale variable (price); implies WTP space");
  cmd->add_option("--space", m.space, "pref or wtp (default: wtp when --scale-par is given)")
      ->check(CLI::IsMember({"pref", "preference", "wtp"}));
  cmd->add_option("--rand-pars", m.rand_pars, "Random parameters as term:dist, dist in n, ln, cn")->delimiter(',');
  cmd->add_option("--rand-scale", m.rand_scale, "Distribution of a random scale parameter (WTP space)")
      ->check(CLI::IsMember({"n", "ln", "cn"}));
  cmd->add_flag("--correlation", m.correlation, "Estimate correlations among random parameters");
  cmd->add_flag("--robust", m.robust, "Cluster-robust standard errors (on for weighted models)");
  cmd->add_option("--cluster-level", m.cluster_level, "Clustering for robust errors: obs, panel or custom")
      ->check(CLI::IsMember({"obs", "panel", "custom"}));
}

void add_estimation_options(CLI::App* cmd, EstimationOptions& o, std::vector<double>& start_vals,
                            std::string& draw_type, bool& no_scale) {
  cmd->add_option("--num-multi-starts", o.num_multi_starts, "Number of optimization runs")->check(CLI::PositiveNumber);
  cmd->add_option("--start-lower", o.start_lower, "Lower bound of random starting values");
  cmd->add_option("--start-upper", o.start_upper, "Upper bound of random starting values");
  cmd->add_option("--start-vals", start_vals, "Starting values of the first run")->delimiter(',');
  cmd->add_option("--num-draws", o.num_draws, "Draws for simulated likelihoods")->check(CLI::PositiveNumber);
  cmd->add_option("--draw-type", draw_type, "halton or sobol")->check(CLI::IsMember({"halton", "sobol"}));
  cmd->add_option("--halton-drop", o.halton_drop, "Leading Halton points to discard")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--antithetic", o.antithetic, "Pair every draw with its negation");
  cmd->add_option("--num-cores", o.num_cores, "Concurrent optimization runs")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Seed for random starting values");
  cmd->add_option("--ftol-rel", o.ftol_rel, "Relative objective tolerance");
  cmd->add_option("--ftol-abs", o.ftol_abs, "Absolute objective tolerance");
  cmd->add_option("--xtol-rel", o.xtol_rel, "Relative parameter tolerance");
  cmd->add_option("--xtol-abs", o.xtol_abs, "Absolute parameter tolerance");
  cmd->add_option("--max-iterations", o.max_iterations, "Iteration limit per run")->check(CLI::PositiveNumber);
  cmd->add_flag("--no-scale-inputs", no_scale, "Optimize on the raw covariate scale");
}

void finish_options(EstimationOptions& o, const std::vector<double>& start_vals, const std::string& draw_type,
                    bool no_scale) {
  if (!start_vals.empty())
    o.start_vals = Eigen::Map<const Eigen::VectorXd>(start_vals.data(), static_cast<Eigen::Index>(start_vals.size()));
  o.draw_type = parse_draw_type(draw_type);
  o.scale_inputs = !no_scale;
}

std::string status_table() {
  std::ostringstream os;
  for (auto s : {ExitStatus::ftol_reached, ExitStatus::xtol_reached, ExitStatus::max_iterations,
                 ExitStatus::evaluation_failure, ExitStatus::diverged})
    os << "  " << to_string(s) << ": " << describe(s) << '\n';
  return os.str();
}

std::string call_echo(int argc, char** argv) {
  std::string out;
  for (int i = 1; i < argc; ++i) out += (i > 1 ? " " : "") + std::string(argv[i]);
  return "wtplogit " + out;
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw SchemaError("cannot write '" + path + "'");
  return file;
}

void write_predictions(std::ostream& os, const PredictionFrame& f, const std::string& obs_name, bool json) {
  if (json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : f.rows) {
      nlohmann::json j{{obs_name, r.obs_id}, {"alt", r.alt + 1}, {"predicted_prob", r.prob}};
      if (f.ci) {
        j["predicted_prob_lower"] = r.lower;
        j["predicted_prob_upper"] = r.upper;
      }
      if (f.has_outcome) j["predicted_outcome"] = r.outcome;
      if (!f.data_header.empty())
        for (std::size_t c = 0; c < f.data_header.size(); ++c) j["data"][f.data_header[c]] = f.data_rows[r.row][c];
      rows.push_back(std::move(j));
    }
    os << rows.dump(2) << '\n';
    return;
  }
  os << csv_field(obs_name) << ",alt,predicted_prob";
  if (f.ci) os << ",predicted_prob_lower,predicted_prob_upper";
  if (f.has_outcome) os << ",predicted_outcome";
  for (const auto& h : f.data_header) os << ',' << csv_field(h);
  os << '\n';
  for (const auto& r : f.rows) {
    os << csv_field(r.obs_id) << ',' << r.alt + 1 << ',' << shortest(r.prob);
    if (f.ci) os << ',' << shortest(r.lower) << ',' << shortest(r.upper);
    if (f.has_outcome) os << ',' << r.outcome;
    if (!f.data_header.empty())
      for (const auto& cell : f.data_rows[r.row]) os << ',' << csv_field(cell);
    os << '\n';
  }
}

// Categorical columns of a model are declared so new data is read with the
// training levels.
ColumnSchema prediction_schema(const DataArgs& d, const FitResult& fit) {
  ColumnSchema s = d.schema();
  for (const auto& [col, lv] : fit.encoding.levels)
    if (!s.levels.count(col)) s.levels[col] = lv;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multinomial and mixed logit estimation in preference and WTP space"};
  app.set_config("--config", "", "TOML config file; keys are the long flag names");
  app.require_subcommand(0, 1);
  bool explain_status = false;
  app.add_flag("--explain-status", explain_status, "Describe optimizer exit statuses and exit");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Estimate a model and write a JSON artifact");
  DataArgs fit_data;
  ModelArgs fit_model_args;
  EstimationOptions fit_opts;
  std::vector<double> fit_start;
  std::string fit_draw_type = "halton";
  bool fit_no_scale = false;
  std::string fit_out = "model.json";
  add_data_options(fit_cmd, fit_data, true);
  add_model_options(fit_cmd, fit_model_args);
  add_estimation_options(fit_cmd, fit_opts, fit_start, fit_draw_type, fit_no_scale);
  fit_cmd->add_option("--out", fit_out, "Model artifact path ('' to skip)");

  // predict
  auto* pred_cmd = app.add_subcommand("predict", "Predict probabilities or outcomes from a model artifact");
  DataArgs pred_data;
  std::string pred_model, pred_type = "prob", pred_out, pred_format = "csv";
  double pred_ci = 0.0;
  int pred_kr = 10000, pred_draws = 0;
  std::uint64_t pred_seed = 0;
  bool pred_return = false;
  pred_cmd->add_option("--model", pred_model, "Model artifact (JSON)")->required()->check(CLI::ExistingFile);
  add_data_options(pred_cmd, pred_data, false);
  pred_cmd->add_option("--type", pred_type, "prob or outcome")->check(CLI::IsMember({"prob", "outcome"}));
  pred_cmd->add_option("--ci", pred_ci, "Confidence level of Krinsky-Robb intervals, e.g. 0.95")
      ->check(CLI::Range(0.0, 1.0));
  pred_cmd->add_option("--kr-draws", pred_kr, "Parameter draws for intervals")->check(CLI::PositiveNumber);
  pred_cmd->add_option("--num-draws", pred_draws, "Mixed logit draws (default: as estimated)");
  pred_cmd->add_option("--seed", pred_seed, "Seed for interval draws and outcome sampling");
  pred_cmd->add_flag("--return-data", pred_return, "Append the input columns");
  pred_cmd->add_option("--format", pred_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  pred_cmd->add_option("--out", pred_out, "Output path (default: stdout)");

  // wtp
  auto* wtp_cmd = app.add_subcommand("wtp", "WTP from a preference space model, optionally compared to a WTP model");
  std::string wtp_model, wtp_scale, wtp_compare_path;
  int wtp_kr = 10000;
  std::uint64_t wtp_seed = 0;
  wtp_cmd->add_option("--model", wtp_model, "Preference space model artifact")->required()->check(CLI::ExistingFile);
  wtp_cmd->add_option("--scale-par", wtp_scale, "Price coefficient name")->required();
  wtp_cmd->add_option("--compare", wtp_compare_path, "WTP space model artifact to compare against")
      ->check(CLI::ExistingFile);
  wtp_cmd->add_option("--kr-draws", wtp_kr, "Krinsky-Robb draws")->check(CLI::PositiveNumber);
  wtp_cmd->add_option("--seed", wtp_seed, "Seed for Krinsky-Robb draws");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Time estimation against the number of draws (CSV)");
  DataArgs bench_data;
  ModelArgs bench_model_args;
  EstimationOptions bench_opts;
  std::vector<double> bench_start;
  std::string bench_draw_type = "halton", bench_out;
  bool bench_no_scale = false;
  std::vector<int> bench_draws{50, 200, 400};
  int bench_reps = 3;
  add_data_options(bench_cmd, bench_data, true);
  add_model_options(bench_cmd, bench_model_args);
  add_estimation_options(bench_cmd, bench_opts, bench_start, bench_draw_type, bench_no_scale);
  bench_cmd->remove_option(bench_cmd->get_option("--num-draws"));
  bench_cmd->add_option("--num-draws", bench_draws, "Draw counts to time")->delimiter(',');
  bench_cmd->add_option("--reps", bench_reps, "Repetitions per draw count")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_out, "Output path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (explain_status) {
    std::cout << "Optimizer exit statuses:\n" << status_table();
    return 0;
  }

  try {
    if (fit_cmd->parsed()) {
      finish_options(fit_opts, fit_start, fit_draw_type, fit_no_scale);
      const LongChoiceData data = load_csv(fit_data.path, fit_data.schema());
      const ModelSpec spec = fit_model_args.spec(fit_data);
      FitResult fit;
      try {
        fit = fit_model(data, spec, fit_opts);
      } catch (const EstimationError& e) {
        std::cerr << "estimation failed: " << e.what() << "\nStatus meanings:\n" << status_table();
        return kExitEstimation;
      }
      std::cout << format_summary(fit, call_echo(argc, argv));
      if (!fit_out.empty()) {
        save_artifact(fit, fit_out);
        std::cout << "\nModel written to " << fit_out << '\n';
      }
      return 0;
    }

    if (pred_cmd->parsed()) {
      const FitResult fit = load_artifact(pred_model);
      const LongChoiceData data = load_csv(pred_data.path, prediction_schema(pred_data, fit));
      PredictOptions po;
      if (pred_ci > 0.0) po.ci = pred_ci;
      po.kr_draws = pred_kr;
      po.seed = pred_seed;
      po.num_draws = pred_draws;
      po.return_data = pred_return;
      const PredictionFrame frame =
          pred_type == "outcome" ? predict_outcomes(fit, data, pred_seed, po) : predict_probabilities(fit, data, po);
      std::ofstream file;
      write_predictions(open_out(pred_out, file), frame, pred_data.obs_id, pred_format == "json");
      if (frame.has_outcome && data.has_outcome())
        std::cerr << "accuracy: " << shortest(prediction_accuracy(frame, data)) << '\n';
      return 0;
    }

    if (wtp_cmd->parsed()) {
      const FitResult pref = load_artifact(wtp_model);
      if (!wtp_compare_path.empty()) {
        const FitResult w = load_artifact(wtp_compare_path);
        std::cout << format_wtp_comparison(wtp_compare(pref, w, wtp_scale));
      } else {
        std::cout << format_coefficients(wtp(pref, wtp_scale, wtp_kr, wtp_seed));
      }
      return 0;
    }

    if (bench_cmd->parsed()) {
      finish_options(bench_opts, bench_start, bench_draw_type, bench_no_scale);
      const LongChoiceData data = load_csv(bench_data.path, bench_data.schema());
      const ModelSpec spec = bench_model_args.spec(bench_data);
      std::ofstream file;
      std::ostream& os = open_out(bench_out, file);
      os << "num_draws,rep,seconds,loglik,iterations\n";
      for (int R : bench_draws) {
        for (int rep = 1; rep <= bench_reps; ++rep) {
          EstimationOptions o = bench_opts;
          o.num_draws = R;
          const auto t0 = std::chrono::steady_clock::now();
          const PreparedModel prep = prepare(data, spec, o);
          const FitResult fit = multistart(prep.problem, o);
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          os << R << ',' << rep << ',' << shortest(secs) << ',' << shortest(fit.best.loglik) << ','
             << fit.best.iterations << '\n';
        }
      }
      return 0;
    }

    std::cout << app.help();
    return kExitUsage;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEstimation;
  } catch (const InferenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEstimation;
  } catch (const wtplogit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEstimation;
  }
}

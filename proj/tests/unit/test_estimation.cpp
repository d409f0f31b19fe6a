#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "wtplogit/estimation.hpp"

using namespace wtplogit;

namespace {

const LongChoiceData& yogurt() {
  static const LongChoiceData d = [] {
    ColumnSchema s;
    s.outcome = "choice";
    s.obs_id = "obsID";
    s.panel_id = "id";
    return load_csv(oracle::data_path("yogurt.csv"), s);
  }();
  return d;
}

ModelSpec pref() {
  ModelSpec s;
  s.pars = {"price", "feat", "brand"};
  return s;
}

ModelSpec wtp() {
  ModelSpec s;
  s.space = Space::wtp;
  s.pars = {"feat", "brand"};
  s.scale_par = "price";
  return s;
}

}  // namespace

TEST(Multistart, SingleRun) {
  EstimationOptions o;
  auto fit = multistart(prepare(yogurt(), pref(), o).problem, o);
  ASSERT_EQ(fit.all_runs.size(), 1u);
  EXPECT_EQ(fit.best.run_index, 1);
  EXPECT_NEAR(fit.best.loglik, -2656.8879, 1e-3);
  EXPECT_LE(fit.best.iterations, 50);
  EXPECT_LT(fit.best.grad_norm, 1e-2);
}

TEST(Multistart, WtpAllRunsReachOptimum) {
  EstimationOptions o;
  o.num_multi_starts = 10;
  o.seed = 123;
  auto fit = multistart(prepare(yogurt(), wtp(), o).problem, o);
  ASSERT_EQ(fit.all_runs.size(), 10u);
  for (const auto& r : fit.all_runs) {
    EXPECT_TRUE(is_success(r.exit_status)) << r.run_index;
    EXPECT_NEAR(r.loglik, -2656.888, 1e-2) << r.run_index;
  }
}

TEST(Multistart, UnscaledMatchesScaled) {
  EstimationOptions o;
  auto pb = prepare(yogurt(), pref(), o).problem;
  auto a = multistart(pb, o);
  o.scale_inputs = false;
  auto b = multistart(pb, o);
  EXPECT_NEAR(a.best.loglik, b.best.loglik, 1e-6);
  EXPECT_LT((a.coef() - b.coef()).lpNorm<Eigen::Infinity>(), 1e-3);
}

TEST(Multistart, StartValsInOriginalUnits) {
  EstimationOptions o;
  Eigen::VectorXd sv(5);
  sv << -0.3665546, 0.4914392, -3.7154773, -0.6411384, 0.7345195;
  o.start_vals = sv;
  auto fit = multistart(prepare(yogurt(), pref(), o).problem, o);
  EXPECT_EQ(fit.best.theta_start, sv);
  EXPECT_LE(fit.best.iterations, 10);
}

TEST(Multistart, ResultIndependentOfCores) {
  oracle::SyntheticOptions so;
  so.num_obs = 60;
  so.obs_per_person = 3;
  auto d = from_table(oracle::synthetic_table(so), oracle::synthetic_schema(true));
  ModelSpec s;
  s.pars = {"price", "x1", "x2"};
  s.panel = true;
  s.rand_pars = {{"x2", Distribution::normal}};
  EstimationOptions o;
  o.num_multi_starts = 6;
  o.num_draws = 20;
  o.seed = 99;
  auto pb = prepare(d, s, o).problem;
  auto one = multistart(pb, o);
  o.num_cores = 3;
  auto three = multistart(pb, o);
  for (std::size_t k = 0; k < 6; ++k) {
    EXPECT_EQ(one.all_runs[k].theta_hat, three.all_runs[k].theta_hat);
    EXPECT_EQ(one.all_runs[k].loglik, three.all_runs[k].loglik);
  }
  EXPECT_EQ(one.best.run_index, three.best.run_index);
}

TEST(Multistart, AllRunsFailedListsStatuses) {
  EstimationOptions o;
  o.num_multi_starts = 2;
  Eigen::VectorXd sv = Eigen::VectorXd::Constant(5, std::nan(""));
  o.start_vals = sv;
  o.start_lower = 1e300;
  o.start_upper = 1.5e300;
  try {
    multistart(prepare(yogurt(), pref(), o).problem, o);
    FAIL() << "expected EstimationError";
  } catch (const EstimationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("run 1: evaluation_failure"), std::string::npos);
    EXPECT_NE(msg.find("run 2: diverged"), std::string::npos);
  }
}

TEST(Multistart, MaxIterationsWarns) {
  EstimationOptions o;
  o.max_iterations = 2;
  auto fit = multistart(prepare(yogurt(), pref(), o).problem, o);
  EXPECT_EQ(fit.best.exit_status, ExitStatus::max_iterations);
  ASSERT_FALSE(fit.warnings.empty());
}

TEST(Scaling, RoundTrip) {
  EstimationOptions o;
  for (bool mixed : {false, true}) {
    ModelSpec s = wtp();
    s.panel = true;
    if (mixed) {
      s.rand_pars = {{"feat", Distribution::log_normal}, {"brand", Distribution::normal}};
      s.correlation = true;
    }
    auto pb = prepare(yogurt(), s, o).problem;
    auto sc = input_scaling(*pb);
    Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(pb->layout.total_len()), -0.7, 0.9);
    EXPECT_LT((sc.to_original(sc.to_scaled(x, pb->layout), pb->layout) - x).lpNorm<Eigen::Infinity>(), 1e-12);
    // the scaled problem at mapped parameters has the same log-likelihood
    ObjectiveContext a(pb), b(scaled_problem(*pb, sc));
    EXPECT_NEAR(a.evaluate(x).loglik, b.evaluate(sc.to_scaled(x, pb->layout)).loglik, 1e-8);
  }
}

TEST(Prepare, Errors) {
  EstimationOptions o;
  ModelSpec s = pref();
  s.weighted = true;
  EXPECT_THROW(prepare(yogurt(), s, o), SpecError);
  ColumnSchema sc;
  sc.obs_id = "obsID";
  auto no_outcome = load_csv(oracle::data_path("yogurt.csv"), sc);
  EXPECT_THROW(prepare(no_outcome, pref(), o), SchemaError);
}

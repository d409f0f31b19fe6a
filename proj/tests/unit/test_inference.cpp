#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "wtplogit/inference.hpp"

using namespace wtplogit;

namespace {

LongChoiceData load_yogurt() {
  ColumnSchema s;
  s.outcome = "choice";
  s.obs_id = "obsID";
  s.panel_id = "id";
  return load_csv(oracle::data_path("yogurt.csv"), s);
}

const LongChoiceData& yogurt() {
  static const LongChoiceData d = load_yogurt();
  return d;
}

const FitResult& pref_fit() {
  static const FitResult f = [] {
    ModelSpec s;
    s.pars = {"price", "feat", "brand"};
    return fit_model(yogurt(), s, EstimationOptions{});
  }();
  return f;
}

}  // namespace

TEST(Hessian, QuadraticForm) {
  Eigen::MatrixXd A(3, 3);
  A << 4, 1, 0.5, 1, 3, -0.2, 0.5, -0.2, 2;
  auto grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = A * x; };
  Eigen::VectorXd x(3);
  x << 0.3, -1.0, 2.0;
  const Eigen::MatrixXd H = numerical_hessian(grad, x);
  EXPECT_LT((H - A).cwiseAbs().maxCoeff() / A.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Hessian, QuarticAtOne) {
  auto grad = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(1);
    g(0) = 4.0 * std::pow(x(0), 3);
  };
  const Eigen::MatrixXd H = numerical_hessian(grad, Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(H(0, 0), 12.0, 1e-4);
}

TEST(Hessian, NonFiniteIsError) {
  auto grad = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) { g = Eigen::VectorXd::Constant(x.size(), INFINITY); };
  EXPECT_THROW(numerical_hessian(grad, Eigen::VectorXd::Ones(2)), InferenceError);
}

TEST(Vcov, SingularHessian) {
  Eigen::MatrixXd H(2, 2);
  H << 1, 1, 1, 1;
  try {
    vcov(H, false);
    FAIL();
  } catch (const InferenceError& e) {
    EXPECT_NE(std::string(e.what()).find("identified"), std::string::npos);
  }
}

TEST(Vcov, YogurtStandardErrors) {
  const auto& fit = pref_fit();
  ASSERT_TRUE(fit.has_vcov());
  const double expect[] = {0.024365, 0.120062, 0.145417, 0.054498, 0.080642};
  const Eigen::VectorXd se = fit.std_errors();
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(se(i), expect[i], 2e-3) << fit.names()[i];
}

TEST(Vcov, RobustSameOrderAsClassical) {
  ModelSpec s;
  s.pars = {"price", "feat", "brand"};
  s.robust = true;
  auto fit = fit_model(yogurt(), s, EstimationOptions{});
  ASSERT_TRUE(fit.vcov_robust);
  EXPECT_EQ(fit.num_clusters, 2412u);
  const Eigen::VectorXd r = fit.std_errors(), c = pref_fit().std_errors();
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    EXPECT_GT(r(i) / c(i), 0.5);
    EXPECT_LT(r(i) / c(i), 2.0);
  }
}

TEST(Vcov, SandwichMatchesDirectFormula) {
  Eigen::MatrixXd H(2, 2);
  H << 3, 0.5, 0.5, 2;
  Eigen::MatrixXd S(4, 2);
  S << 1, 0, 0.5, -1, -0.2, 0.3, 0.7, 0.1;
  const Eigen::MatrixXd Hi = H.inverse();
  const Eigen::MatrixXd expect = Hi * (4.0 / 3.0 * S.transpose() * S) * Hi;
  EXPECT_LT((vcov(H, true, S) - expect).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(vcov(H, true, S.topRows(1)), InferenceError);
}

TEST(Vcov, DuplicatedHalfWeightsUnchanged) {
  oracle::SyntheticOptions so;
  so.num_obs = 80;
  so.seed = 4;
  CsvTable base = oracle::synthetic_table(so);
  CsvTable orig = base, dup = base;
  orig.header.push_back("w");
  dup.header.push_back("w");
  for (auto& r : orig.rows) r.push_back("1");
  dup.rows.clear();
  for (int copy = 0; copy < 2; ++copy)
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
      auto r = base.rows[i];
      r[1] = std::to_string(copy * 1000 + std::stoi(r[1]));
      r.push_back("0.5");
      dup.rows.push_back(r);
    }
  auto schema = oracle::synthetic_schema();
  schema.weights = "w";
  ModelSpec s;
  s.pars = {"price", "x1", "x2", "cat"};
  s.weighted = true;
  auto a = fit_model(from_table(orig, schema), s, EstimationOptions{});
  auto b = fit_model(from_table(dup, schema), s, EstimationOptions{});
  EXPECT_NEAR(a.best.loglik, b.best.loglik, 1e-8);
  EXPECT_LT((a.vcov - b.vcov).cwiseAbs().maxCoeff() / a.vcov.cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Clusters, ObsFallsBackToIndividualForPanelMxl) {
  oracle::SyntheticOptions so;
  so.num_obs = 12;
  so.obs_per_person = 3;
  auto d = from_table(oracle::synthetic_table(so), oracle::synthetic_schema(true));
  ModelSpec s;
  s.pars = {"price", "x1"};
  s.panel = true;
  s.rand_pars = {{"x1", Distribution::normal}};
  EstimationOptions o;
  o.num_draws = 5;
  auto pb = prepare(d, s, o).problem;
  std::vector<std::string> warnings;
  auto c = unit_clusters(*pb, d, ClusterLevel::obs, &warnings);
  EXPECT_EQ(c.size(), 4u);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_THROW(unit_clusters(*pb, d, ClusterLevel::custom), InferenceError);
}

TEST(FitStats, YogurtValues) {
  auto s = fit_statistics(-2656.8879, 2412 * std::log(0.25), 5, 2412);
  EXPECT_NEAR(s.aic, 5323.7758, 1e-3);
  EXPECT_NEAR(s.bic, 5352.7168, 1e-3);
  EXPECT_NEAR(s.mcfadden_r2, 0.2054148, 1e-6);
  EXPECT_NEAR(s.adj_mcfadden_r2, 0.2039195, 1e-6);
}

TEST(FitStats, Identities) {
  EXPECT_EQ(fit_statistics(-100, -100, 3, 50).mcfadden_r2, 0.0);
  EXPECT_EQ(fit_statistics(-100, -150, 0, 50).aic, 200.0);
}

TEST(Table, PValuesAndStars) {
  Eigen::VectorXd est(3), se(3);
  est << 1.96, 0.5, -10;
  se << 1, 1, 1;
  auto t = coefficient_table({"a", "b", "c"}, est, se);
  EXPECT_NEAR(t.rows[0].p_value, 2.0 * (1.0 - oracle::norm_cdf(1.96)), 1e-12);
  EXPECT_EQ(t.rows[0].stars, "*");
  EXPECT_EQ(t.rows[1].stars, "");
  EXPECT_EQ(t.rows[2].stars, "***");
  EXPECT_EQ(t.at("b").estimate, 0.5);
}

TEST(Quantile, Type7) {
  std::vector<double> v = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 1.0), 4.0);
}

TEST(MvnDraws, MomentsAndRepair) {
  Eigen::VectorXd mu(2);
  mu << 1, -2;
  Eigen::MatrixXd cov(2, 2);
  cov << 2, 0.6, 0.6, 1;
  auto D = mvn_draws(mu, cov, 200000, 3);
  const Eigen::RowVectorXd m = D.colwise().mean();
  const Eigen::MatrixXd C = (D.rowwise() - m).transpose() * (D.rowwise() - m) / (D.rows() - 1.0);
  EXPECT_LT((m.transpose() - mu).lpNorm<Eigen::Infinity>(), 0.02);
  EXPECT_LT((C - cov).cwiseAbs().maxCoeff(), 0.03);
  EXPECT_EQ(D, mvn_draws(mu, cov, 200000, 3));
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 1, 1, 1;
  std::vector<std::string> w;
  mvn_draws(mu, bad, 10, 1, &w);
  EXPECT_EQ(w.size(), 1u);
}

TEST(Wtp, PointIsExactRatio) {
  const auto& fit = pref_fit();
  auto t = wtp(fit, "price", 2000, 1);
  const Eigen::VectorXd b = fit.coef();
  EXPECT_EQ(t.rows[0].name, "scalePar");
  EXPECT_EQ(t.rows[0].estimate, -b(0));
  for (int i = 1; i < 5; ++i) EXPECT_EQ(t.rows[static_cast<std::size_t>(i)].estimate, b(i) / -b(0));
  EXPECT_NEAR(t.rows[1].estimate, 1.340699, 2e-3);
  EXPECT_NEAR(t.rows[2].estimate, -10.136219, 2e-3);
}

TEST(Wtp, ZeroBetaGivesZeroWtp) {
  FitResult f = pref_fit();
  f.best.theta_hat.tail(4).setZero();
  auto t = wtp(f, "price", 0);
  for (std::size_t i = 1; i < 5; ++i) EXPECT_EQ(t.rows[i].estimate, 0.0);
  f.best.theta_hat(0) = 0.0;
  EXPECT_THROW(wtp(f, "price", 0), DomainError);
}

TEST(Wtp, NearZeroPriceWarns) {
  FitResult f = pref_fit();
  f.best.theta_hat(0) = -0.01;
  auto t = wtp(f, "price", 1000, 2);
  EXPECT_FALSE(t.warnings.empty());
}

TEST(Wtp, KrinskyRobbStableUnderDoubling) {
  const auto& fit = pref_fit();
  auto a = wtp(fit, "price", 10000, 11), b = wtp(fit, "price", 20000, 12);
  for (std::size_t i = 0; i < 5; ++i)
    EXPECT_NEAR(a.rows[i].std_error / b.rows[i].std_error, 1.0, 0.05) << a.rows[i].name;
}

TEST(WtpCompare, IdenticalFitsGiveZero) {
  ModelSpec s;
  s.space = Space::wtp;
  s.pars = {"feat", "brand"};
  s.scale_par = "price";
  auto w = fit_model(yogurt(), s, EstimationOptions{});
  FitResult p = pref_fit();
  // a preference fit whose coefficients reproduce the WTP fit exactly
  const Eigen::VectorXd c = w.coef();
  p.best.theta_hat(0) = -c(0);
  for (int i = 1; i < 5; ++i) p.best.theta_hat(i) = c(i) * c(0);
  p.best.loglik = w.best.loglik;
  auto cmp = wtp_compare(p, w, "price");
  for (double d : cmp.difference) EXPECT_NEAR(d, 0.0, 1e-14);
  EXPECT_EQ(cmp.names.back(), "logLik");
}

TEST(WtpCompare, MismatchedNames) {
  ModelSpec s;
  s.space = Space::wtp;
  s.pars = {"feat"};
  s.scale_par = "price";
  auto w = fit_model(yogurt(), s, EstimationOptions{});
  EXPECT_THROW(wtp_compare(pref_fit(), w, "price"), SpecError);
}

TEST(RandomSummary, Quantiles) {
  ParameterLayout l;
  l.num_coefs = 3;
  l.coef_names = {"a", "b", "c"};
  l.coef_dist = {Distribution::normal, Distribution::log_normal, Distribution::normal};
  l.random_coefs = {0, 1, 2};
  for (std::size_t i = 0; i < 6; ++i) l.entries.push_back({"p" + std::to_string(i), ParamRole::mean, i});
  Eigen::VectorXd theta(6);
  theta << 0.777, 0.0, 2.5, 0.567, 1.0, 0.0;
  auto s = random_coef_summary(l, theta, 10000);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s[0].median, 0.777, 0.02);
  EXPECT_EQ(s[0].min, -INFINITY);
  EXPECT_NEAR(s[1].median, 1.0, 0.03);
  EXPECT_EQ(s[1].min, 0.0);
  for (double v : {s[2].min, s[2].q1, s[2].median, s[2].mean, s[2].q3, s[2].max}) EXPECT_EQ(v, 2.5);
}

#include <gtest/gtest.h>

#include <algorithm>

#include "../oracles.hpp"
#include "wtplogit/draws.hpp"

using namespace wtplogit;

namespace {

double ks_uniform(Eigen::VectorXd col) {
  std::sort(col.data(), col.data() + col.size());
  const double n = static_cast<double>(col.size());
  double d = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i)
    d = std::max({d, (i + 1) / n - col(i), col(i) - i / n});
  return d;
}

double star_discrepancy_grid(const Eigen::MatrixXd& u) {
  double worst = 0.0;
  for (int a = 1; a <= 64; ++a) {
    for (int b = 1; b <= 64; ++b) {
      const double x = a / 64.0, y = b / 64.0;
      int count = 0;
      for (Eigen::Index i = 0; i < u.rows(); ++i) count += u(i, 0) < x && u(i, 1) < y;
      worst = std::max(worst, std::abs(count / static_cast<double>(u.rows()) - x * y));
    }
  }
  return worst;
}

ParameterLayout layout_with(std::vector<Distribution> dists, bool correlated = false) {
  ParameterLayout l;
  l.num_coefs = dists.size();
  l.coef_dist = dists;
  l.correlated = correlated;
  for (std::size_t c = 0; c < dists.size(); ++c) {
    l.coef_names.push_back("b" + std::to_string(c));
    l.entries.push_back({l.coef_names.back(), ParamRole::mean, c});
    if (dists[c] != Distribution::fixed) l.random_coefs.push_back(c);
  }
  for (auto c : l.random_coefs) l.entries.push_back({"sd_b" + std::to_string(c), ParamRole::sd, l.entries.size()});
  if (correlated)
    for (std::size_t i = 1; i < l.random_coefs.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) l.entries.push_back({"chol", ParamRole::cholesky, l.entries.size()});
  return l;
}

}  // namespace

TEST(Halton, RadicalInverseBases) {
  auto u = halton(2, 4);
  EXPECT_EQ(u(0, 0), 0.5);
  EXPECT_EQ(u(1, 0), 0.25);
  EXPECT_EQ(u(2, 0), 0.75);
  EXPECT_EQ(u(3, 0), 0.125);
  EXPECT_NEAR(u(0, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(u(1, 1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(u(2, 1), 1.0 / 9.0, 1e-15);
}

TEST(Halton, DropSkipsLeadingPoints) {
  auto all = halton(3, 20);
  auto dropped = halton(3, 10, 10);
  EXPECT_EQ(dropped, all.bottomRows(10));
}

TEST(Halton, KolmogorovSmirnov) {
  auto u = halton(4, 10000);
  for (int d = 0; d < 4; ++d) {
    EXPECT_LT(ks_uniform(u.col(d)), 0.01) << "column " << d;
    EXPECT_GT(u.col(d).minCoeff(), 0.0);
    EXPECT_LT(u.col(d).maxCoeff(), 1.0);
  }
}

TEST(Halton, TooManyDimensions) { EXPECT_THROW(halton(26, 5), CapabilityError); }

TEST(Sobol, FirstPoints) {
  auto u = sobol(1, 3);
  EXPECT_EQ(u(0, 0), 0.5);
  EXPECT_EQ(u(1, 0), 0.75);
  EXPECT_EQ(u(2, 0), 0.25);
}

TEST(Sobol, Deterministic) { EXPECT_EQ(sobol(5, 50), sobol(5, 50)); }

TEST(Sobol, BeyondTable) { EXPECT_THROW(sobol(1112, 2), CapabilityError); }

TEST(Sobol, LowerDiscrepancyThanHaltonIn2D) {
  const double ds = star_discrepancy_grid(sobol(2, 1024));
  const double dh = star_discrepancy_grid(halton(2, 1024));
  EXPECT_LT(ds, dh);
}

TEST(Sobol, StrictlyInsideUnitInterval) {
  auto u = sobol(20, 4096);
  EXPECT_GT(u.minCoeff(), 0.0);
  EXPECT_LT(u.maxCoeff(), 1.0);
}

TEST(InvNormal, KnownValues) {
  EXPECT_EQ(inv_normal_cdf(0.5), 0.0);
  EXPECT_NEAR(inv_normal_cdf(0.975), oracle::norm_quantile(0.975), 1e-9);
  EXPECT_NEAR(inv_normal_cdf(0.975), 1.959964, 1e-6);
  EXPECT_NEAR(inv_normal_cdf(0.0013499), oracle::norm_quantile(0.0013499), 1e-9);
  EXPECT_NEAR(inv_normal_cdf(0.0013499), -3.0, 1e-4);
}

TEST(InvNormal, AccuracyOverRange) {
  double worst = 0.0;
  for (double lp = -12.0; lp <= -0.30103; lp += 0.01) {
    const double u = std::pow(10.0, lp);
    worst = std::max(worst, std::abs(inv_normal_cdf(u) - oracle::norm_quantile(u)));
    worst = std::max(worst, std::abs(inv_normal_cdf(1.0 - u) - oracle::norm_quantile(1.0 - u)));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(InvNormal, Domain) {
  EXPECT_THROW(inv_normal_cdf(0.0), DomainError);
  EXPECT_THROW(inv_normal_cdf(1.0), DomainError);
  EXPECT_THROW(inv_normal_cdf(std::nan("")), DomainError);
}

TEST(DrawSet, MomentsAtTenThousand) {
  auto l = layout_with({Distribution::normal, Distribution::normal, Distribution::fixed, Distribution::normal});
  for (auto type : {DrawType::halton, DrawType::sobol}) {
    auto ds = make_draws(l, type, 10000);
    ASSERT_EQ(ds.Z.cols(), 3);
    for (Eigen::Index k = 0; k < 3; ++k) {
      const double m = ds.Z.col(k).mean();
      const double v = (ds.Z.col(k).array() - m).square().sum() / (ds.Z.rows() - 1);
      EXPECT_NEAR(m, 0.0, 0.02);
      EXPECT_NEAR(v, 1.0, 0.05);
    }
  }
}

TEST(DrawSet, ColumnsTiedToCoefficientPosition) {
  auto a = layout_with({Distribution::normal, Distribution::fixed, Distribution::normal});
  auto b = layout_with({Distribution::fixed, Distribution::fixed, Distribution::normal});
  auto da = make_draws(a, DrawType::halton, 100);
  auto db = make_draws(b, DrawType::halton, 100);
  EXPECT_EQ(da.Z.col(1), db.Z.col(0));
}

TEST(DrawSet, AntitheticPairs) {
  auto l = layout_with({Distribution::normal, Distribution::normal});
  auto ds = make_draws(l, DrawType::halton, 100, 0, true);
  EXPECT_EQ(ds.Z.topRows(50), -ds.Z.bottomRows(50));
  EXPECT_THROW(make_draws(l, DrawType::halton, 101, 0, true), DomainError);
}

TEST(DrawSet, Regeneration) {
  auto l = layout_with({Distribution::normal, Distribution::log_normal});
  EXPECT_EQ(make_draws(l, DrawType::halton, 77).Z, make_draws(l, DrawType::halton, 77).Z);
}

TEST(Realize, ZeroSigmaGivesMeans) {
  auto l = layout_with({Distribution::normal, Distribution::fixed, Distribution::censored_normal});
  Eigen::VectorXd theta(5);
  theta << 0.3, -1.2, 0.8, 0.0, 0.0;
  auto B = realize_parameters(theta, l, make_draws(l, DrawType::halton, 20).Z);
  for (Eigen::Index r = 0; r < B.rows(); ++r) EXPECT_EQ(B.row(r), theta.head(3).transpose());
}

TEST(Realize, LogNormalAtZeroIsOne) {
  auto l = layout_with({Distribution::log_normal});
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  auto B = realize_parameters(theta, l, make_draws(l, DrawType::halton, 10).Z);
  EXPECT_TRUE((B.array() == 1.0).all());
}

TEST(Realize, NormalMean) {
  auto l = layout_with({Distribution::normal});
  Eigen::VectorXd theta(2);
  theta << 1.122, 3.261;
  auto B = realize_parameters(theta, l, make_draws(l, DrawType::halton, 10000).Z);
  EXPECT_NEAR(B.col(0).mean(), 1.122, 0.05);
}

TEST(Realize, MatchesDirectDefinition) {
  auto l = layout_with({Distribution::normal, Distribution::log_normal, Distribution::fixed,
                        Distribution::censored_normal},
                       true);
  ASSERT_EQ(l.total_len(), 4u + 3u + 3u);
  Eigen::VectorXd theta(10);
  theta << 0.4, -0.3, 1.5, 0.1, 0.9, 0.5, 1.3, -0.4, 0.25, 0.6;
  auto ds = make_draws(l, DrawType::sobol, 64);
  auto B = realize_parameters(theta, l, ds.Z);
  for (Eigen::Index r = 0; r < B.rows(); ++r) {
    const Eigen::VectorXd expect = oracle::realize(theta, l, ds.Z.row(r));
    EXPECT_LT((B.row(r).transpose() - expect).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(Realize, CensoredNeverNegative) {
  auto l = layout_with({Distribution::censored_normal});
  Eigen::VectorXd theta(2);
  theta << -0.5, 2.0;
  auto B = realize_parameters(theta, l, make_draws(l, DrawType::halton, 1000).Z);
  EXPECT_GE(B.minCoeff(), 0.0);
  EXPECT_GT((B.array() == 0.0).count(), 0);
}

TEST(Realize, ShapeMismatch) {
  auto l = layout_with({Distribution::normal});
  EXPECT_THROW(realize_parameters(Eigen::VectorXd::Zero(3), l, make_draws(l, DrawType::halton, 5).Z),
               DomainError);
}

#pragma once

// Quasi-random draws for simulated likelihoods and their mapping to
// per-draw coefficient realizations.

#include <Eigen/Dense>
#include <boost/random/detail/sobol_table.hpp>

#include <array>
#include <cmath>
#include <bit>
#include <cstdint>
#include <numbers>
#include <string>

#include "wtplogit/error.hpp"
#include "wtplogit/model_spec.hpp"

namespace wtplogit {

inline constexpr std::array<int, 25> kHaltonPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23,
                                                      29, 31, 37, 41, 43, 47, 53, 59, 61,
                                                      67, 71, 73, 79, 83, 89, 97};
inline constexpr int kMaxHaltonDim = static_cast<int>(kHaltonPrimes.size());
inline constexpr int kMaxSobolDim = 1111;

inline double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0;
  const double inv = 1.0 / base;
  while (index > 0) {
    f *= inv;
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
  }
  return result;
}

/// n x dim Halton points. Column d uses the d-th prime; point i is the
/// radical inverse of drop + i, i = 1..n, so the origin is never produced.
inline Eigen::MatrixXd halton(int dim, int n, int drop = 0) {
  if (dim < 1 || n < 1) throw DomainError("halton: dim and n must be positive");
  if (dim > kMaxHaltonDim)
    throw CapabilityError("halton draws support at most " + std::to_string(kMaxHaltonDim) +
                          " dimensions; use sobol draws for larger models");
  if (drop < 0) throw DomainError("halton: drop must be non-negative");
  Eigen::MatrixXd u(n, dim);
  for (int d = 0; d < dim; ++d)
    for (int i = 0; i < n; ++i)
      u(i, d) = radical_inverse(static_cast<std::uint64_t>(drop) + static_cast<std::uint64_t>(i) + 1,
                                kHaltonPrimes[static_cast<std::size_t>(d)]);
  return u;
}

namespace detail {

// 32-bit direction numbers for dimension `d` (0-based) from the Joe-Kuo
// primitive polynomials and initial values.
inline std::array<std::uint32_t, 32> sobol_directions(int d) {
  std::array<std::uint32_t, 32> v{};
  if (d == 0) {
    for (int k = 0; k < 32; ++k) v[static_cast<std::size_t>(k)] = 1u << (31 - k);
    return v;
  }
  using table = boost::random::detail::qrng_tables::sobol;
  const auto poly = static_cast<std::uint32_t>(table::polynomial(static_cast<std::size_t>(d - 1)));
  int s = 0;
  while ((poly >> (s + 1)) != 0) ++s;  // polynomial degree
  std::array<std::uint32_t, 32> m{};
  for (int k = 0; k < s && k < 32; ++k)
    m[static_cast<std::size_t>(k)] =
        table::minit(static_cast<std::size_t>(d - 1), static_cast<std::size_t>(k));
  for (int k = s; k < 32; ++k) {
    std::uint32_t mk = m[static_cast<std::size_t>(k - s)] ^ (m[static_cast<std::size_t>(k - s)] << s);
    for (int j = 1; j < s; ++j) {
      const std::uint32_t a_j = (poly >> (s - j)) & 1u;
      if (a_j) mk ^= m[static_cast<std::size_t>(k - j)] << j;
    }
    m[static_cast<std::size_t>(k)] = mk;
  }
  for (int k = 0; k < 32; ++k)
    v[static_cast<std::size_t>(k)] = m[static_cast<std::size_t>(k)] << (31 - k);
  return v;
}

}  // namespace detail

/// n x dim unscrambled Sobol points in Gray-code order with the initial
/// all-zero point skipped.
inline Eigen::MatrixXd sobol(int dim, int n) {
  if (dim < 1 || n < 1) throw DomainError("sobol: dim and n must be positive");
  if (dim > kMaxSobolDim)
    throw CapabilityError("sobol draws support at most " + std::to_string(kMaxSobolDim) +
                          " dimensions");
  Eigen::MatrixXd u(n, dim);
  constexpr double scale = 1.0 / 4294967296.0;
  for (int d = 0; d < dim; ++d) {
    const auto v = detail::sobol_directions(d);
    std::uint32_t x = 0;
    for (int i = 0; i < n; ++i) {
      // point i+1 = point i XOR v[c], c = position of the lowest zero bit of i
      auto c = static_cast<std::size_t>(std::countr_one(static_cast<std::uint32_t>(i)));
      x ^= v[c];
      u(i, d) = static_cast<double>(x) * scale;
    }
  }
  return u;
}

/// Standard normal quantile. Rational approximation refined by one Halley
/// step against erfc; absolute error well below 1e-9 on [1e-300, 1 - 1e-16].
inline double inv_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("inv_normal_cdf: argument must lie in (0, 1)");
  if (p > 0.5) return -inv_normal_cdf(1.0 - p);  // 1 - p is exact here

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard-normal draws, one column per random parameter.
struct DrawSet {
  Eigen::MatrixXd Z;
  DrawType draw_type = DrawType::halton;
  int num_draws = 0;
};

/// Uniform points are generated over every coefficient position and the
/// columns of the random coefficients are kept, so a random coefficient's
/// sequence is tied to its place in the model rather than to how many other
/// coefficients are random.
inline DrawSet make_draws(const ParameterLayout& layout, DrawType type, int num_draws,
                          int halton_drop = 0, bool antithetic = false) {
  DrawSet set;
  set.draw_type = type;
  set.num_draws = num_draws;
  if (num_draws < 1) throw DomainError("num_draws must be positive");
  if (antithetic && num_draws % 2 != 0)
    throw DomainError("antithetic draws need an even number of draws");
  const int dim = static_cast<int>(layout.num_coefs);
  const int base_n = antithetic ? num_draws / 2 : num_draws;
  const Eigen::MatrixXd u = type == DrawType::halton ? halton(dim, base_n, halton_drop)
                                                     : sobol(dim, base_n);
  const auto R = static_cast<Eigen::Index>(num_draws);
  set.Z.resize(R, static_cast<Eigen::Index>(layout.num_random()));
  for (std::size_t k = 0; k < layout.num_random(); ++k) {
    const auto col = static_cast<Eigen::Index>(layout.random_coefs[k]);
    for (Eigen::Index i = 0; i < base_n; ++i) {
      const double z = inv_normal_cdf(u(i, col));
      set.Z(i, static_cast<Eigen::Index>(k)) = z;
      if (antithetic) set.Z(i + base_n, static_cast<Eigen::Index>(k)) = -z;
    }
  }
  return set;
}

/// Lower-triangular factor mapping standard draws to the underlying normals
/// of the random coefficients. Diagonal-only unless correlated.
inline Eigen::MatrixXd cholesky_factor(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                       const ParameterLayout& layout) {
  const auto K = static_cast<Eigen::Index>(layout.num_random());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(K, K);
  for (Eigen::Index r = 0; r < K; ++r)
    L(r, r) = theta(static_cast<Eigen::Index>(layout.sd_index(static_cast<std::size_t>(r))));
  if (layout.correlated)
    for (Eigen::Index i = 1; i < K; ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        L(i, j) = theta(static_cast<Eigen::Index>(
            layout.cholesky_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j))));
  return L;
}

inline double apply_distribution(Distribution dist, double u) {
  switch (dist) {
    case Distribution::log_normal: return std::exp(u);
    case Distribution::censored_normal: return u > 0.0 ? u : 0.0;
    default: return u;
  }
}

/// d realization / d underlying normal; 0 at the censoring point.
inline double distribution_slope(Distribution dist, double u) {
  switch (dist) {
    case Distribution::log_normal: return std::exp(u);
    case Distribution::censored_normal: return u > 0.0 ? 1.0 : 0.0;
    default: return 1.0;
  }
}

/// Underlying normals mu + L z for every draw: R x num_coefs, with fixed
/// coefficients at their means.
inline Eigen::MatrixXd underlying_normals(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                          const ParameterLayout& layout, const Eigen::MatrixXd& Z) {
  const auto R = Z.rows();
  const auto C = static_cast<Eigen::Index>(layout.num_coefs);
  Eigen::MatrixXd U(R, C);
  for (Eigen::Index c = 0; c < C; ++c) U.col(c).setConstant(theta(c));
  if (layout.num_random() > 0) {
    if (Z.cols() != static_cast<Eigen::Index>(layout.num_random()))
      throw DomainError("draw matrix has " + std::to_string(Z.cols()) + " columns; model has " +
                        std::to_string(layout.num_random()) + " random parameters");
    const Eigen::MatrixXd shocks = Z * cholesky_factor(theta, layout).transpose();
    for (std::size_t k = 0; k < layout.num_random(); ++k)
      U.col(static_cast<Eigen::Index>(layout.random_coefs[k])) += shocks.col(static_cast<Eigen::Index>(k));
  }
  return U;
}

/// Per-draw coefficient realizations (R x num_coefs).
inline Eigen::MatrixXd realize_parameters(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                          const ParameterLayout& layout, const Eigen::MatrixXd& Z) {
  if (static_cast<std::size_t>(theta.size()) != layout.total_len())
    throw DomainError("parameter vector length does not match the layout");
  Eigen::MatrixXd B = underlying_normals(theta, layout, Z);
  for (auto c : layout.random_coefs) {
    const Distribution dist = layout.coef_dist[c];
    for (Eigen::Index r = 0; r < B.rows(); ++r)
      B(r, static_cast<Eigen::Index>(c)) = apply_distribution(dist, B(r, static_cast<Eigen::Index>(c)));
  }
  return B;
}

}  // namespace wtplogit

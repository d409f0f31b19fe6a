#pragma once

// Choice probabilities and simulated outcomes for fitted models.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wtplogit/choice_data.hpp"
#include "wtplogit/draws.hpp"
#include "wtplogit/error.hpp"
#include "wtplogit/estimation.hpp"
#include "wtplogit/inference.hpp"
#include "wtplogit/model_spec.hpp"

namespace wtplogit {

struct PredictionRow {
  std::string obs_id;
  std::size_t row = 0;  // row of the input data
  std::size_t alt = 0;  // position within the observation
  double prob = 0.0;
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  int outcome = -1;  // -1 when not predicted
};

struct PredictionFrame {
  std::vector<PredictionRow> rows;
  std::optional<double> ci;
  bool has_outcome = false;
  // input columns echoed when requested
  std::vector<std::string> data_header;
  std::vector<std::vector<std::string>> data_rows;
};

struct PredictOptions {
  std::optional<double> ci;   // e.g. 0.95
  int kr_draws = 10000;
  std::uint64_t seed = 0;
  int num_draws = 0;  // mixed logit draws; 0 = as estimated
  bool return_data = false;
};

/// Probability of every row under one parameter vector. Mixed logit
/// probabilities average the per-draw softmax over the rows of Z.
inline Eigen::VectorXd row_probabilities(const ParameterLayout& layout, const Eigen::VectorXd& theta,
                                         const Eigen::Ref<const Eigen::MatrixXd>& X,
                                         const Eigen::Ref<const Eigen::VectorXd>& p,
                                         const std::vector<std::size_t>& starts,
                                         const Eigen::MatrixXd& Z) {
  const auto C = static_cast<Eigen::Index>(layout.num_coefs);
  Eigen::MatrixXd B;
  if (layout.num_random() == 0) {
    B = theta.head(C).transpose();
  } else {
    B = realize_parameters(theta, layout, Z);
  }
  Eigen::MatrixXd V;
  if (layout.space == Space::wtp) {
    V.noalias() = X * B.rightCols(C - 1).transpose();
    V.colwise() -= p;
    V = V * B.col(0).asDiagonal();
  } else {
    V.noalias() = X * B.transpose();
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
  const std::size_t N = starts.size() - 1;
  for (Eigen::Index r = 0; r < V.cols(); ++r) {
    for (std::size_t n = 0; n < N; ++n) {
      const auto b = static_cast<Eigen::Index>(starts[n]);
      const auto len = static_cast<Eigen::Index>(starts[n + 1] - starts[n]);
      auto v = V.col(r).segment(b, len);
      const double m = v.maxCoeff();
      Eigen::VectorXd e = (v.array() - m).exp().matrix();
      out.segment(b, len) += e / e.sum();
    }
  }
  return out / static_cast<double>(V.cols());
}

namespace detail {

inline Eigen::MatrixXd prediction_draws(const FitResult& fit, const PredictOptions& opts) {
  if (fit.layout.num_random() == 0) return {};
  const int R = opts.num_draws > 0 ? opts.num_draws : fit.options.num_draws;
  return make_draws(fit.layout, fit.options.draw_type, R, fit.options.halton_drop, fit.options.antithetic).Z;
}

inline PredictionFrame frame_skeleton(const LongChoiceData& data, bool return_data) {
  PredictionFrame f;
  for (std::size_t n = 0; n < data.num_obs(); ++n)
    for (std::size_t r = data.obs_start[n]; r < data.obs_start[n + 1]; ++r)
      f.rows.push_back({data.obs_labels[n], r, r - data.obs_start[n]});
  if (return_data) {
    f.data_header = data.table.header;
    f.data_rows = data.table.rows;
  }
  return f;
}

}  // namespace detail

/// Predicted probabilities at the estimates, with optional Krinsky-Robb
/// intervals from quantiles over parameter draws.
inline PredictionFrame predict_probabilities(const FitResult& fit, const LongChoiceData& data,
                                             const PredictOptions& opts = {}) {
  if (opts.ci && !(*opts.ci > 0.0 && *opts.ci < 1.0)) throw DomainError("ci level must lie in (0, 1)");
  const DesignMatrix dm = apply_encoding(fit.encoding, data);
  if (fit.layout.space == Space::wtp && !dm.has_scale()) throw SchemaError("data lacks the scale column");
  const Eigen::MatrixXd Z = detail::prediction_draws(fit, opts);
  PredictionFrame frame = detail::frame_skeleton(data, opts.return_data);
  const Eigen::VectorXd point = row_probabilities(fit.layout, fit.coef(), dm.X, dm.p, dm.obs_start, Z);
  for (std::size_t i = 0; i < frame.rows.size(); ++i) frame.rows[i].prob = point(static_cast<Eigen::Index>(i));
  if (!opts.ci) return frame;

  if (!fit.has_vcov()) throw InferenceError("confidence intervals need a covariance matrix");
  if (opts.kr_draws < 2) throw DomainError("kr_draws must be at least 2");
  frame.ci = opts.ci;
  const Eigen::MatrixXd T = mvn_draws(fit.coef(), fit.vcov, opts.kr_draws, opts.seed);
  const double lo_p = (1.0 - *opts.ci) / 2.0, hi_p = (1.0 + *opts.ci) / 2.0;
  // Observations are processed in chunks so only chunk_rows x kr_draws
  // probabilities are held at once.
  const std::size_t N = dm.num_obs();
  const std::size_t budget = std::max<std::size_t>(1, 4'000'000 / static_cast<std::size_t>(opts.kr_draws));
  std::vector<double> buf;
  for (std::size_t a = 0; a < N;) {
    std::size_t b = a + 1;
    while (b < N && dm.obs_start[b + 1] - dm.obs_start[a] <= budget) ++b;
    const std::size_t r0 = dm.obs_start[a], r1 = dm.obs_start[b];
    const auto rows = static_cast<Eigen::Index>(r1 - r0);
    std::vector<std::size_t> starts;
    for (std::size_t n = a; n <= b; ++n) starts.push_back(dm.obs_start[n] - r0);
    const auto Xc = dm.X.middleRows(static_cast<Eigen::Index>(r0), rows);
    const Eigen::VectorXd pc = dm.has_scale() ? Eigen::VectorXd(dm.p.segment(static_cast<Eigen::Index>(r0), rows))
                                              : Eigen::VectorXd::Zero(rows);
    Eigen::MatrixXd P(rows, opts.kr_draws);
    for (int s = 0; s < opts.kr_draws; ++s)
      P.col(s) = row_probabilities(fit.layout, T.row(s).transpose(), Xc, pc, starts, Z);
    for (Eigen::Index i = 0; i < rows; ++i) {
      buf.resize(static_cast<std::size_t>(opts.kr_draws));
      for (int s = 0; s < opts.kr_draws; ++s) buf[static_cast<std::size_t>(s)] = P(i, s);
      std::sort(buf.begin(), buf.end());
      PredictionRow& pr = frame.rows[r0 + static_cast<std::size_t>(i)];
      pr.lower = quantile_sorted(buf, lo_p);
      pr.upper = quantile_sorted(buf, hi_p);
    }
    a = b;
  }
  return frame;
}

/// Uniform in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Samples one chosen alternative per observation from the predicted
/// probabilities.
inline PredictionFrame predict_outcomes(const FitResult& fit, const LongChoiceData& data,
                                        std::uint64_t seed, const PredictOptions& opts = {}) {
  PredictOptions o = opts;
  o.ci.reset();
  PredictionFrame frame = predict_probabilities(fit, data, o);
  std::mt19937_64 rng(seed);
  frame.has_outcome = true;
  for (std::size_t n = 0; n < data.num_obs(); ++n) {
    const std::size_t b = data.obs_start[n], e = data.obs_start[n + 1];
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t pick = e - 1;
    for (std::size_t r = b; r < e; ++r) {
      cum += frame.rows[r].prob;
      if (u < cum) {
        pick = r;
        break;
      }
    }
    for (std::size_t r = b; r < e; ++r) frame.rows[r].outcome = r == pick ? 1 : 0;
  }
  return frame;
}

/// Share of observations whose predicted outcome is the observed choice.
inline double prediction_accuracy(const PredictionFrame& frame, const LongChoiceData& data) {
  if (!frame.has_outcome || !data.has_outcome()) throw ValidationError("accuracy needs predicted and observed outcomes");
  std::size_t hits = 0;
  for (std::size_t n = 0; n < data.num_obs(); ++n) {
    const std::size_t c = data.obs_start[n] + data.chosen_position(n);
    hits += frame.rows[c].outcome == 1;
  }
  return static_cast<double>(hits) / static_cast<double>(data.num_obs());
}

}  // namespace wtplogit

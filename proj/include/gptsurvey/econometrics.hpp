#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gptsurvey {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct EstimationResult {
  VectorXd coefficients;
  MatrixXd covariance;
  VectorXd t_stats;
  int n_obs = 0;
  double r_squared = 0.0;  // percent
  std::string estimator;   // "OLS+NW(L)" | "OLS+DK(L)"
  int lag = 0;
  std::vector<std::string> names;
};

struct OlsFit {
  VectorXd coefficients;
  VectorXd residuals;
  VectorXd fitted;
  MatrixXd xtx_inv;
  double r_squared = 0.0;  // percent
  int n = 0;
};

namespace detail {

inline constexpr double kRankTol = 1e-10;

inline std::string column_name(const std::vector<std::string>& names, int i) {
  return i < static_cast<int>(names.size()) ? names[i]
                                            : "col" + std::to_string(i);
}

}  // namespace detail

// Least squares via rank-revealing QR; rank deficiency is an error that
// names the offending column.
inline OlsFit ols(const VectorXd& y, const MatrixXd& X,
                  const std::vector<std::string>& names = {}) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (y.size() != n) throw std::invalid_argument("ols: y/X size mismatch");
  if (n <= k)
    throw std::invalid_argument("ols: need n > k, have n=" +
                                std::to_string(n) + " k=" + std::to_string(k));

  Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
  qr.setThreshold(detail::kRankTol);
  if (qr.rank() < k) {
    // The last pivoted column is the one dropped by the factorization.
    const int bad = qr.colsPermutation().indices()(k - 1);
    throw std::invalid_argument("ols: rank-deficient design, column '" +
                                detail::column_name(names, bad) +
                                "' is collinear");
  }

  OlsFit fit;
  fit.n = n;
  fit.coefficients = qr.solve(y);
  fit.fitted = X * fit.coefficients;
  fit.residuals = y - fit.fitted;
  fit.xtx_inv = (X.transpose() * X).ldlt().solve(MatrixXd::Identity(k, k));
  const double tss = (y.array() - y.mean()).square().sum();
  const double rss = fit.residuals.squaredNorm();
  fit.r_squared = tss > 0 ? 100.0 * (1.0 - rss / tss) : 0.0;
  return fit;
}

// Bartlett-kernel HAC covariance of OLS coefficients:
//   S = G0 + sum_{l=1..L} (1 - l/(L+1)) (Gl + Gl'),  Gl from scores x_t e_t,
//   cov = n (X'X)^-1 S (X'X)^-1.
// L = 0 reduces to the White covariance.
inline MatrixXd newey_west_cov(const MatrixXd& X, const VectorXd& residuals,
                               int L) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (residuals.size() != n)
    throw std::invalid_argument("newey_west_cov: residual length mismatch");
  if (L < 0 || L >= n)
    throw std::invalid_argument("newey_west_cov: need 0 <= L < n");

  const MatrixXd U = X.array().colwise() * residuals.array();
  MatrixXd S = U.transpose() * U / n;
  for (int l = 1; l <= L; ++l) {
    const MatrixXd Gl =
        U.bottomRows(n - l).transpose() * U.topRows(n - l) / n;
    const double w = 1.0 - static_cast<double>(l) / (L + 1);
    S += w * (Gl + Gl.transpose());
  }
  const MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(MatrixXd::Identity(k, k));
  MatrixXd cov = n * xtx_inv * S * xtx_inv;
  return (cov + cov.transpose()) / 2.0;  // clean symmetry to machine precision
}

// Driscoll-Kraay: Bartlett HAC applied to per-period cross-sectional sums
// of the scores, sandwiched with the pooled (X'X)^-1. With one unit per
// period this is exactly newey_west_cov.
inline MatrixXd driscoll_kraay_cov(const MatrixXd& X, const VectorXd& residuals,
                                   const std::vector<int>& time_ids, int L) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (residuals.size() != n || static_cast<int>(time_ids.size()) != n)
    throw std::invalid_argument("driscoll_kraay_cov: size mismatch");

  std::map<int, int> order;  // time id -> dense row
  for (int t : time_ids) order.emplace(t, 0);
  int T = 0;
  for (auto& [t, idx] : order) idx = T++;
  if (T < L + 2)
    throw std::invalid_argument("driscoll_kraay_cov: need at least L+2 = " +
                                std::to_string(L + 2) + " time periods, have " +
                                std::to_string(T));

  MatrixXd H = MatrixXd::Zero(T, k);
  for (int i = 0; i < n; ++i)
    H.row(order[time_ids[i]]) += X.row(i) * residuals(i);

  MatrixXd S = H.transpose() * H / T;
  for (int l = 1; l <= L; ++l) {
    const MatrixXd Gl =
        H.bottomRows(T - l).transpose() * H.topRows(T - l) / T;
    const double w = 1.0 - static_cast<double>(l) / (L + 1);
    S += w * (Gl + Gl.transpose());
  }
  const MatrixXd xtx_inv =
      (X.transpose() * X).ldlt().solve(MatrixXd::Identity(k, k));
  MatrixXd cov = T * xtx_inv * S * xtx_inv;
  return (cov + cov.transpose()) / 2.0;
}

namespace detail {

inline EstimationResult finish(const OlsFit& fit, MatrixXd cov, int L,
                               std::string estimator,
                               std::vector<std::string> names) {
  EstimationResult r;
  r.coefficients = fit.coefficients;
  r.covariance = std::move(cov);
  r.t_stats.resize(fit.coefficients.size());
  for (int i = 0; i < fit.coefficients.size(); ++i)
    r.t_stats(i) = fit.coefficients(i) / std::sqrt(r.covariance(i, i));
  r.n_obs = fit.n;
  r.r_squared = fit.r_squared;
  r.estimator = std::move(estimator);
  r.lag = L;
  r.names = std::move(names);
  return r;
}

inline void check_sample(int n, int k, int L, const char* what) {
  if (n < k + L + 2)
    throw std::invalid_argument(std::string(what) + ": need n >= k + L + 2 (" +
                                std::to_string(k + L + 2) + "), have " +
                                std::to_string(n));
}

}  // namespace detail

inline EstimationResult ts_regression(const VectorXd& y, const MatrixXd& X,
                                      int L,
                                      std::vector<std::string> names = {}) {
  detail::check_sample(static_cast<int>(X.rows()),
                       static_cast<int>(X.cols()), L, "ts_regression");
  const OlsFit fit = ols(y, X, names);
  return detail::finish(fit, newey_west_cov(X, fit.residuals, L), L,
                        "OLS+NW(" + std::to_string(L) + ")", std::move(names));
}

inline EstimationResult panel_regression(const VectorXd& y, const MatrixXd& X,
                                         const std::vector<int>& time_ids,
                                         int L,
                                         std::vector<std::string> names = {}) {
  detail::check_sample(static_cast<int>(X.rows()),
                       static_cast<int>(X.cols()), L, "panel_regression");
  const OlsFit fit = ols(y, X, names);
  return detail::finish(fit,
                        driscoll_kraay_cov(X, fit.residuals, time_ids, L), L,
                        "OLS+DK(" + std::to_string(L) + ")", std::move(names));
}

namespace detail {

inline VectorXd standardized(const VectorXd& v) {
  const int n = static_cast<int>(v.size());
  const double m = v.mean();
  const double sd = std::sqrt((v.array() - m).square().sum() / (n - 1));
  if (sd == 0) throw std::invalid_argument("standardize: constant input");
  return (v.array() - m) / sd;
}

inline MatrixXd with_intercept(const VectorXd& x) {
  MatrixXd X(x.size(), 2);
  X.col(0).setOnes();
  X.col(1) = x;
  return X;
}

}  // namespace detail

struct CorrelationTest {
  double corr = 0.0;
  double t_stat = 0.0;
  int n = 0;
  int lag = 0;
  std::string estimator;
};

// Pearson correlation with a HAC t-stat: the slope t of standardized b on
// standardized a under NW(L). Standardization makes the slope the
// correlation itself, so the statistic is scale-free.
inline CorrelationTest correlation_test(const std::vector<double>& a,
                                        const std::vector<double>& b, int L) {
  const int n = static_cast<int>(a.size());
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("correlation_test: length mismatch");
  if (n < L + 3)
    throw std::invalid_argument("correlation_test: need >= L+3 observations");
  const VectorXd za =
      detail::standardized(Eigen::Map<const VectorXd>(a.data(), n));
  const VectorXd zb =
      detail::standardized(Eigen::Map<const VectorXd>(b.data(), n));
  const auto res = ts_regression(zb, detail::with_intercept(za), L,
                                 {"intercept", "corr"});
  double sab = 0;
  for (int i = 0; i < n; ++i) sab += za(i) * zb(i);
  return {sab / (n - 1), res.t_stats(1), n, L, res.estimator};
}

// Pooled variant: per-series standardized pairs stacked, DK errors.
inline CorrelationTest panel_correlation_test(
    const std::vector<std::vector<double>>& a_by_series,
    const std::vector<std::vector<double>>& b_by_series,
    const std::vector<std::vector<int>>& time_by_series, int L) {
  std::vector<double> za, zb;
  std::vector<int> times;
  for (std::size_t s = 0; s < a_by_series.size(); ++s) {
    const int n = static_cast<int>(a_by_series[s].size());
    if (n < 2) continue;
    const VectorXd x = detail::standardized(
        Eigen::Map<const VectorXd>(a_by_series[s].data(), n));
    const VectorXd y = detail::standardized(
        Eigen::Map<const VectorXd>(b_by_series[s].data(), n));
    for (int i = 0; i < n; ++i) {
      za.push_back(x(i));
      zb.push_back(y(i));
      times.push_back(time_by_series[s][i]);
    }
  }
  const int n = static_cast<int>(za.size());
  if (n < L + 3)
    throw std::invalid_argument("panel_correlation_test: sample too small");
  const VectorXd x = Eigen::Map<const VectorXd>(za.data(), n);
  const VectorXd y = Eigen::Map<const VectorXd>(zb.data(), n);
  const auto res = panel_regression(y, detail::with_intercept(x), times, L,
                                    {"intercept", "corr"});
  return {res.coefficients(1), res.t_stats(1), n, L, res.estimator};
}

struct CgResult {
  EstimationResult raw;           // slope in natural units
  EstimationResult standardized;  // slope = correlation (reporting convention)
};

// Forecast errors on revisions (or on an expectation proxy). Positive
// slope = underreaction, negative = overreaction.
inline CgResult cg_regression(const std::vector<double>& errors,
                              const std::vector<double>& revisions, int L) {
  const int n = static_cast<int>(errors.size());
  if (static_cast<int>(revisions.size()) != n)
    throw std::invalid_argument("cg_regression: length mismatch");
  const VectorXd y = Eigen::Map<const VectorXd>(errors.data(), n);
  const VectorXd x = Eigen::Map<const VectorXd>(revisions.data(), n);
  CgResult out;
  out.raw = ts_regression(y, detail::with_intercept(x), L,
                          {"intercept", "revision"});
  out.standardized =
      ts_regression(detail::standardized(y),
                    detail::with_intercept(detail::standardized(x)), L,
                    {"intercept", "revision"});
  return out;
}

inline CgResult cg_regression_panel(
    const std::vector<std::vector<double>>& errors_by_series,
    const std::vector<std::vector<double>>& revisions_by_series,
    const std::vector<std::vector<int>>& time_by_series, int L) {
  std::vector<double> y, x, zy, zx;
  std::vector<int> times;
  for (std::size_t s = 0; s < errors_by_series.size(); ++s) {
    const int n = static_cast<int>(errors_by_series[s].size());
    if (n < 2) continue;
    const VectorXd e = Eigen::Map<const VectorXd>(errors_by_series[s].data(), n);
    const VectorXd r =
        Eigen::Map<const VectorXd>(revisions_by_series[s].data(), n);
    const VectorXd ze = detail::standardized(e);
    const VectorXd zr = detail::standardized(r);
    for (int i = 0; i < n; ++i) {
      y.push_back(e(i));
      x.push_back(r(i));
      zy.push_back(ze(i));
      zx.push_back(zr(i));
      times.push_back(time_by_series[s][i]);
    }
  }
  const int n = static_cast<int>(y.size());
  auto vec = [](const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), v.size()).eval();
  };
  CgResult out;
  out.raw = panel_regression(vec(y), detail::with_intercept(vec(x)), times, L,
                             {"intercept", "revision"});
  out.standardized = panel_regression(
      vec(zy), detail::with_intercept(vec(zx)), times, L,
      {"intercept", "revision"});
  (void)n;
  return out;
}

// Future cumulative return from t+1 to t+h on the standardized expectation
// at t. Overlapping observations are kept; NW lag = horizon.
struct PredictiveResult {
  int horizon = 0;
  EstimationResult result;
};

inline std::vector<PredictiveResult> predictive_regression(
    const std::vector<double>& returns,       // period-by-period log returns
    const std::vector<double>& expectation,   // same grid as returns
    const std::vector<int>& horizons,
    std::vector<std::string>* warnings = nullptr) {
  const int n = static_cast<int>(returns.size());
  if (static_cast<int>(expectation.size()) != n)
    throw std::invalid_argument("predictive_regression: length mismatch");
  std::vector<PredictiveResult> out;
  for (int h : horizons) {
    if (h < 1) throw std::invalid_argument("predictive_regression: h >= 1");
    const int m = n - h;
    if (m < h + 4) {
      if (warnings)
        warnings->push_back("horizon " + std::to_string(h) +
                            " skipped: sample too short");
      continue;
    }
    VectorXd y(m), x(m);
    for (int t = 0; t < m; ++t) {
      double cum = 0;
      for (int j = 1; j <= h; ++j) cum += returns[t + j];
      y(t) = cum;
      x(t) = expectation[t];
    }
    const auto res = ts_regression(y, detail::with_intercept(
                                          detail::standardized(x)),
                                   h, {"intercept", "expectation"});
    out.push_back({h, res});
  }
  return out;
}

// Objective expected-return index: fitted values of a full-sample OLS of
// 12-month-ahead cumulative returns on the given predictor set.
struct CompositeEr {
  std::vector<std::optional<double>> index;  // aligned with input rows
  EstimationResult fit;
};

inline CompositeEr composite_er(
    const std::vector<double>& returns,  // monthly log returns
    const std::vector<std::vector<std::optional<double>>>& predictors,
    std::vector<std::string> names, int horizon_months = 12) {
  const int n = static_cast<int>(returns.size());
  const int k = static_cast<int>(predictors.size());
  for (const auto& col : predictors)
    if (static_cast<int>(col.size()) != n)
      throw std::invalid_argument("composite_er: predictor length mismatch");

  std::vector<int> rows;  // usable estimation rows
  for (int t = 0; t + horizon_months < n; ++t) {
    bool ok = true;
    for (const auto& col : predictors) ok = ok && col[t].has_value();
    if (ok) rows.push_back(t);
  }
  const int m = static_cast<int>(rows.size());
  if (m < k + 3) throw std::invalid_argument("composite_er: sample too small");

  VectorXd y(m);
  MatrixXd X(m, k + 1);
  X.col(0).setOnes();
  for (int i = 0; i < m; ++i) {
    const int t = rows[i];
    double cum = 0;
    for (int j = 1; j <= horizon_months; ++j) cum += returns[t + j];
    y(i) = cum;
    for (int c = 0; c < k; ++c) X(i, c + 1) = *predictors[c][t];
  }
  std::vector<std::string> full_names{"intercept"};
  for (auto& s : names) full_names.push_back(std::move(s));
  const OlsFit fit = ols(y, X, full_names);

  CompositeEr out;
  out.fit = detail::finish(fit, newey_west_cov(X, fit.residuals, horizon_months),
                           horizon_months,
                           "OLS+NW(" + std::to_string(horizon_months) + ")",
                           full_names);
  out.index.assign(n, std::nullopt);
  for (int t = 0; t < n; ++t) {
    bool ok = true;
    for (const auto& col : predictors) ok = ok && col[t].has_value();
    if (!ok) continue;
    double v = fit.coefficients(0);
    for (int c = 0; c < k; ++c)
      v += fit.coefficients(c + 1) * *predictors[c][t];
    out.index[t] = v;
  }
  return out;
}

}  // namespace gptsurvey

#pragma once

// Error metrics and Monte-Carlo risk estimates.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pat/errors.hpp"
#include "pat/grid.hpp"
#include "pat/parallel.hpp"
#include "pat/simulation.hpp"
#include "pat/wave_operator.hpp"

namespace pat {

/// ||rec - truth|| / ||truth||.
inline double relative_l2(const ImageField& rec, const ImageField& truth) {
  const double t = norm(truth);
  if (t == 0.0) throw ZeroTruth("relative error against a zero field");
  return norm(rec - truth) / t;
}

struct NamedEstimator {
  std::string name;
  std::function<ImageField(const DataField&)> run;
};

struct RiskReport {
  std::string estimator_name;
  int trials = 0;
  double mean_sq_error = 0.0;
  double std_err = 0.0;
  std::vector<double> per_trial;
};

/// Squared L2 errors of the estimator on A phantom + noise over seeded trials
/// (trial n uses seed ^ n).
inline RiskReport monte_carlo_risk(const NamedEstimator& estimator, const ForwardOperator& op,
                                   const ImageField& phantom, double sigma, int trials, std::uint64_t seed) {
  if (trials < 2) throw InvalidParams("risk estimate needs at least two trials");
  const DataField clean = op.apply(phantom);
  RiskReport r{estimator.name, trials, 0.0, 0.0, std::vector<double>(static_cast<std::size_t>(trials))};
  parallel_for(r.per_trial.size(), [&](std::size_t n) {
    const DataField g = add_noise(clean, {sigma, trial_seed(seed, n)});
    const ImageField err = estimator.run(g) - phantom;
    r.per_trial[n] = inner_product(err, err);
  });
  double s = 0.0;
  for (double e : r.per_trial) s += e;
  r.mean_sq_error = s / trials;
  double v = 0.0;
  for (double e : r.per_trial) v += (e - r.mean_sq_error) * (e - r.mean_sq_error);
  r.std_err = std::sqrt(v / (trials - 1) / trials);
  return r;
}

/// Relative errors of the three estimators on one noisy realisation.
struct OrderingRow {
  std::uint64_t seed = 0;
  double data_error = 0.0;
  double baseline = 0.0;
  double wvd = 0.0;
  double hybrid = 0.0;
  bool hybrid_converged = false;

  bool expected_ordering() const { return wvd < hybrid && hybrid < baseline; }
};

/// Runs `row_for(seed)` for every seed; the callable builds one OrderingRow.
inline std::vector<OrderingRow> risk_ordering_experiment(const std::vector<std::uint64_t>& seeds,
                                                         const std::function<OrderingRow(std::uint64_t)>& row_for) {
  std::vector<OrderingRow> rows;
  rows.reserve(seeds.size());
  for (std::uint64_t s : seeds) rows.push_back(row_for(s));
  return rows;
}

/// Least-squares slope of log(y) against log(x).
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParams("slope needs at least two matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidParams("log-log slope needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace pat

#include <gtest/gtest.h>

#include "pat/estimators.hpp"
#include "pat/metrics.hpp"

using namespace pat;

namespace {

struct Problem {
  Grid2D grid = make_grid(32, 32, 128, 1.0 / 8, 1.0 / 32);
  ForwardOperator op{grid};
  ImageField truth = make_phantom({{{0.0, 1.0, 0.5, 1.0}}, std::nullopt}, grid);
};

}  // namespace

TEST(RelativeL2, Basics) {
  const Problem s;
  EXPECT_EQ(relative_l2(s.truth, s.truth), 0.0);
  EXPECT_DOUBLE_EQ(relative_l2(ImageField(s.grid), s.truth), 1.0);
  EXPECT_DOUBLE_EQ(relative_l2(scaled(s.truth, 2.0), s.truth), 1.0);
  EXPECT_THROW(relative_l2(s.truth, ImageField(s.grid)), ZeroTruth);
  const ImageField rec = scaled(s.truth, 0.7);
  EXPECT_NEAR(relative_l2(scaled(rec, -3.0), scaled(s.truth, -3.0)), relative_l2(rec, s.truth), 1e-14);
}

TEST(MonteCarlo, DeterministicAndConsistent) {
  const Problem s;
  const NamedEstimator base{"baseline", [&](const DataField& g) { return s.op.adjoint(g); }};
  const RiskReport a = monte_carlo_risk(base, s.op, s.truth, 0.25, 2, 7);
  const RiskReport b = monte_carlo_risk(base, s.op, s.truth, 0.25, 2, 7);
  EXPECT_EQ(a.per_trial, b.per_trial);
  EXPECT_EQ(a.trials, 2);
  EXPECT_DOUBLE_EQ(a.mean_sq_error, 0.5 * (a.per_trial[0] + a.per_trial[1]));
  EXPECT_THROW(monte_carlo_risk(base, s.op, s.truth, 0.25, 1, 7), InvalidParams);
}

TEST(MonteCarlo, StdErrShrinks) {
  const Problem s;
  const NamedEstimator base{"baseline", [&](const DataField& g) { return s.op.adjoint(g); }};
  const RiskReport a = monte_carlo_risk(base, s.op, s.truth, 0.25, 10, 3);
  const RiskReport b = monte_carlo_risk(base, s.op, s.truth, 0.25, 20, 3);
  EXPECT_LE(b.std_err, 1.2 * a.std_err);
}

TEST(MonteCarlo, ThresholdingBeatsAdjoint) {
  const Problem s;
  const auto spec = WaveletSpec::daubechies(4, 3);
  const auto sched = universal_schedule(coefficient_noise(s.op, spec, 0.25), s.grid);
  const NamedEstimator base{"baseline", [&](const DataField& g) { return s.op.adjoint(g); }};
  const NamedEstimator wvd{"wvd", [&](const DataField& g) { return wvd_soft_estimator(s.op, g, sched, spec); }};
  const RiskReport rb = monte_carlo_risk(base, s.op, s.truth, 0.25, 20, 11);
  const RiskReport rw = monte_carlo_risk(wvd, s.op, s.truth, 0.25, 20, 11);
  EXPECT_LT(rw.mean_sq_error + 2 * std::hypot(rw.std_err, rb.std_err), rb.mean_sq_error);
}

TEST(LogLogSlope, PowerLaw) {
  const std::vector<double> x{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.5));
  EXPECT_NEAR(log_log_slope(x, y), 1.5, 1e-12);
  EXPECT_THROW(log_log_slope({1.0}, {1.0}), InvalidParams);
  EXPECT_THROW(log_log_slope({1.0, 0.0}, {1.0, 1.0}), InvalidParams);
}

TEST(Ordering, RowPredicate) {
  OrderingRow r;
  r.baseline = 0.66;
  r.wvd = 0.38;
  r.hybrid = 0.42;
  EXPECT_TRUE(r.expected_ordering());
  r.hybrid = 0.3;
  EXPECT_FALSE(r.expected_ordering());
  const auto rows = risk_ordering_experiment({1, 2, 3}, [](std::uint64_t s) {
    OrderingRow row;
    row.seed = s;
    return row;
  });
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].seed, 3u);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "pat/admm.hpp"
#include "pat/simulation.hpp"
#include "tv_dual_oracle.hpp"

using namespace pat;

namespace {

ImageField random_image(const Grid2D& g, unsigned seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> v(g.image_size());
  for (auto& x : v) x = n(rng);
  return ImageField(g, v);
}

struct Small {
  Grid2D grid = make_grid(32, 32, 128, 1.0 / 8, 1.0 / 32);
  ForwardOperator op{grid};
  WaveletSpec spec = WaveletSpec::daubechies(4, 3);
  ImageField truth = make_phantom({{{0.0, 1.0, 0.5, 1.0}, {0.6, 1.9, 0.3, 1.0}}, std::nullopt}, grid);
};

}  // namespace

TEST(TotalVariation, ConstantHasZeroTv) {
  const Grid2D g = make_grid(8, 8, 8, 0.1, 0.1);
  EXPECT_EQ(total_variation(ImageField(g, std::vector<double>(64, 3.0))), 0.0);
  // step of height 1 across a full column boundary: length 8 dx
  std::vector<double> v(64, 0.0);
  for (int r = 0; r < 8; ++r)
    for (int c = 4; c < 8; ++c) v[r * 8 + c] = 1.0;
  EXPECT_NEAR(total_variation(ImageField(g, v)), 0.8, 1e-12);
}

TEST(Chambolle, ConstantIsFixed) {
  const Grid2D g = make_grid(8, 8, 8, 0.1, 0.1);
  const ImageField b(g, std::vector<double>(64, 2.0));
  EXPECT_LT(norm(tv_denoise_chambolle(b, 0.5) - b), 1e-12);
}

TEST(Chambolle, VanishingWeight) {
  const Grid2D g = make_grid(16, 16, 16, 0.1, 0.1);
  const ImageField b = random_image(g, 1);
  EXPECT_LT(norm(tv_denoise_chambolle(b, 1e-8, {1000, 1e-12}) - b), 1e-6 * norm(b));
  EXPECT_THROW(tv_denoise_chambolle(b, 0.0), InvalidParams);
}

TEST(Chambolle, MatchesDualProjectedGradient) {
  const Grid2D g = make_grid(4, 4, 4, 1.0, 1.0);
  for (unsigned seed = 0; seed < 10; ++seed) {
    const ImageField b = random_image(g, 100 + seed);
    const ImageField u = tv_denoise_chambolle(b, 0.3, {200000, 1e-12});
    const std::vector<double> oracle =
        oracles::dual_projected_gradient(std::vector<double>(b.values().begin(), b.values().end()), 4, 0.3);
    const ImageField o(g, oracle);
    EXPECT_LE(norm(u - o), 1e-3 * norm(o)) << seed;
  }
}

TEST(Chambolle, ReducesTv) {
  const Grid2D g = make_grid(32, 32, 32, 1.0 / 32, 1.0 / 32);
  const ImageField b = random_image(g, 4);
  const ImageField u = tv_denoise_warm(b, 0.01, {500, 1e-9}).image;
  EXPECT_LE(total_variation(u), total_variation(b));
}

TEST(Chambolle, NotConverged) {
  const Grid2D g = make_grid(32, 32, 32, 1.0 / 32, 1.0 / 32);
  EXPECT_THROW(tv_denoise_chambolle(random_image(g, 5), 0.05, {2, 1e-12}), NotConverged);
}

TEST(Admm, BoxFeasibleAndNoWorseThanBaseline) {
  const Small s;
  const DataField g = s.op.apply(s.truth);
  const double q = 0.002;
  AdmmConfig cfg;
  cfg.v_update = VUpdate::Box;
  cfg.c = 3e-3;
  cfg.max_iters = 400;
  const AdmmResult r = hybrid_tv_solve(s.op, g, ThresholdSchedule::zero_coarse(q, 3), s.spec, cfg);
  ASSERT_TRUE(r.converged);
  const auto c = dwt2_forward(s.op.adjoint(g) - r.image, s.spec);
  double worst = 0.0;
  for (int j = 1; j <= 3; ++j)
    for (double v : c.level_span(j)) worst = std::max(worst, std::abs(v));
  EXPECT_LE(worst, q * (1 + cfg.feasibility_tol));
  const ImageField base = s.op.adjoint(g);
  EXPECT_LE(norm(r.image - s.truth), norm(base - s.truth));
}

TEST(Admm, BoxTvNotAboveClosedForm) {
  const Small s;
  const DataField g = add_noise(s.op.apply(s.truth), {0.25, 3});
  const auto sched = ThresholdSchedule::zero_coarse(0.01, 3);
  AdmmConfig cfg;
  cfg.v_update = VUpdate::Box;
  cfg.c = 3e-3;
  cfg.max_iters = 400;
  const AdmmResult r = hybrid_tv_solve(s.op, g, sched, s.spec, cfg);
  ASSERT_TRUE(r.converged);
  // the closed-form estimate satisfies the same constraint
  EXPECT_LE(total_variation(r.image), total_variation(wvd_soft_estimator(s.op, g, sched, s.spec)) * 1.01);
  // primal residual shrinks over the run
  std::vector<double> head, tail;
  for (std::size_t k = 0; k < 10; ++k) {
    head.push_back(r.history[k].primal_residual);
    tail.push_back(r.history[r.history.size() - 10 + k].primal_residual);
  }
  std::nth_element(head.begin(), head.begin() + 5, head.end());
  std::nth_element(tail.begin(), tail.begin() + 5, tail.end());
  EXPECT_LT(tail[5], head[5]);
}

// With no effective constraint the minimal-TV answer is flat; the TV prox
// keeps the mean, so the iterate flattens towards the mean of B g.
TEST(Admm, VacuousConstraintFlattens) {
  const Small s;
  const DataField g = s.op.apply(s.truth);
  const ImageField b = s.op.adjoint(g);
  double mean = 0.0;
  for (double v : b.values()) mean += v;
  mean /= static_cast<double>(b.size());
  for (VUpdate vu : {VUpdate::Ball, VUpdate::Box}) {
    AdmmConfig cfg;
    cfg.v_update = vu;
    const AdmmResult r = hybrid_tv_solve(s.op, g, ThresholdSchedule::uniform(1e6, 3), s.spec, cfg);
    EXPECT_LT(total_variation(r.image), 0.05 * total_variation(b));
    EXPECT_LT(norm(r.image - ImageField(s.grid, std::vector<double>(b.size(), mean))), 0.15 * norm(b));
  }
}

// min TV(f) s.t. ||f - b|| <= q is the ROF problem at the weight where the
// residual norm reaches q; bisect that weight with the Chambolle solver.
TEST(Admm, BallMatchesRofAtDiscrepancyWeight) {
  const Small s;
  const DataField g = add_noise(s.op.apply(s.truth), {0.25, 4});
  const ImageField b = s.op.adjoint(g);
  const double q = 0.05 * norm(b);
  AdmmConfig cfg;
  cfg.c = 1e-3;
  cfg.max_iters = 2000;
  cfg.feasibility_tol = 1e-5;
  cfg.tv_inner_iters = 2000;
  cfg.tv_inner_tol = 1e-7;
  const AdmmResult r = hybrid_tv_solve(s.op, g, ThresholdSchedule::uniform(q, 3), s.spec, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(norm(b - r.image), q * (1 + 1e-3));
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 40; ++k) {
    const double mid = 0.5 * (lo + hi);
    const ImageField u = tv_denoise_warm(b, mid, {20000, 1e-9}).image;
    (norm(u - b) > q ? hi : lo) = mid;
  }
  const ImageField rof = tv_denoise_warm(b, lo, {20000, 1e-9}).image;
  EXPECT_LE(norm(rof - b), q * (1 + 1e-3));
  EXPECT_NEAR(total_variation(r.image), total_variation(rof), 0.01 * total_variation(rof));
  EXPECT_LE(norm(r.image - rof), 0.02 * norm(rof));
}

TEST(Admm, BallResidualBoundsWaveletResidual) {
  const Small s;
  const DataField g = add_noise(s.op.apply(s.truth), {0.25, 5});
  const double q = 0.01;
  AdmmConfig cfg;
  cfg.c = 3e-4;
  const AdmmResult r = hybrid_tv_solve(s.op, g, ThresholdSchedule::uniform(q, 3), s.spec, cfg);
  ASSERT_TRUE(r.converged);
  const ImageField res = s.op.adjoint(g) - r.image;
  EXPECT_LE(norm(res), q * (1 + cfg.feasibility_tol));
  EXPECT_LE(max_abs(dwt2_forward(res, s.spec)), norm(res) * (1 + 1e-12));
  EXPECT_LE(total_variation(r.image), total_variation(s.op.adjoint(g)));
}

TEST(Admm, NotConvergedAndLog) {
  const Small s;
  const DataField g = add_noise(s.op.apply(s.truth), {0.25, 9});
  AdmmConfig cfg;
  cfg.max_iters = 3;
  EXPECT_THROW(hybrid_tv_estimator(s.op, g, 0.01, s.spec, cfg), NotConverged);
  const AdmmResult r = hybrid_tv_solve(s.op, g, ThresholdSchedule::zero_coarse(0.01, 3), s.spec, cfg);
  EXPECT_FALSE(r.converged);
  std::ostringstream os;
  write_json_lines(os, r.history);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("\"iteration\":3"), std::string::npos);
}

TEST(Admm, InvalidConfig) {
  const Small s;
  AdmmConfig cfg;
  cfg.c = 0.0;
  EXPECT_THROW(hybrid_tv_estimator(s.op, DataField(s.grid), 0.01, s.spec, cfg), InvalidParams);
  EXPECT_THROW(hybrid_tv_estimator(s.op, DataField(s.grid), 0.0, s.spec), InvalidParams);
}

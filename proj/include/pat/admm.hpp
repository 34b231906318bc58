#pragma once

// Hybrid vaguelette-TV reconstruction:
//   min TV(f)  subject to  |W(B g - f)|_lambda <= w_lambda,   B = A*,
// solved by ADMM on the split f + v = B g. The Ball v-update replaces the wavelet box
// by the L2 ball of radius q, which lies inside the box when every w_lambda equals q.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pat/dwt.hpp"
#include "pat/errors.hpp"
#include "pat/estimators.hpp"
#include "pat/tv.hpp"
#include "pat/wave_operator.hpp"

namespace pat {

/// v-update of the ADMM loop.
///   Ball: v = q x / max(q, ||x||_2), the step as listed for the hybrid method.
///   Box:  v = W* clamp(W x, -w_j, w_j), the exact projection onto { |W v|_lambda <= w_j }.
enum class VUpdate { Ball, Box };

struct AdmmConfig {
  double c = 1.0;
  int max_iters = 200;
  double feasibility_tol = 1e-3;
  int tv_inner_iters = 100;
  double tv_inner_tol = 1e-4;
  VUpdate v_update = VUpdate::Ball;

  void validate() const {
    if (!(c > 0.0)) throw InvalidParams("ADMM penalty must be positive");
    if (max_iters < 1 || tv_inner_iters < 1) throw InvalidParams("iteration counts must be positive");
    if (!(feasibility_tol > 0.0) || !(tv_inner_tol > 0.0)) throw InvalidParams("tolerances must be positive");
  }
};

struct AdmmRecord {
  int iteration = 0;
  double tv = 0.0;
  double primal_residual = 0.0;  // ||f + v - B g||
  double feasibility = 0.0;      // max_lambda |W(B g - f)|_lambda / q
  double change = 0.0;           // ||f_{k+1} - f_k|| / ||f_{k+1}||
  double seconds = 0.0;
};

struct AdmmResult {
  ImageField image;
  std::vector<AdmmRecord> history;
  bool converged = false;
  double q = 0.0;
};

inline void write_json_lines(std::ostream& os, const std::vector<AdmmRecord>& history) {
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line,
                  "{\"iteration\":%d,\"tv\":%.9g,\"primal_residual\":%.9g,\"feasibility\":%.9g,"
                  "\"change\":%.9g,\"seconds\":%.6f}\n",
                  r.iteration, r.tv, r.primal_residual, r.feasibility, r.change, r.seconds);
    os << line;
  }
}

namespace detail {

// max_lambda (|c_lambda| - w_lambda) relative to the scale q.
inline double excess_over_bound(const WaveletPyramid& c, const ThresholdSchedule& sched, double q) {
  double worst = 0.0;
  for (int level = 0; level <= c.levels(); ++level) {
    const double w = sched.weight(level);
    for (double v : c.level_span(level)) worst = std::max(worst, std::abs(v) - w);
  }
  return worst / q;
}

}  // namespace detail

/// Runs the ADMM iteration; never throws on non-convergence.
inline AdmmResult hybrid_tv_solve(const ForwardOperator& op, const DataField& g, const ThresholdSchedule& sched,
                                  const WaveletSpec& spec, const AdmmConfig& cfg = {}) {
  cfg.validate();
  sched.check_compatible(spec);
  double q = 0.0;
  for (double w : sched.weights()) q = std::max(q, w);
  if (!(q > 0.0)) throw InvalidParams("hybrid estimator needs a positive threshold");

  const auto start = std::chrono::steady_clock::now();
  const Grid2D& grid = op.grid();
  const ImageField b = op.adjoint(g);
  ImageField f(grid), v(grid), mu(grid);
  TvDual warm;
  const TvSettings tv{cfg.tv_inner_iters, cfg.tv_inner_tol};
  AdmmResult out{f, {}, false, q};

  for (int k = 0; k < cfg.max_iters; ++k) {
    // f-update: TV denoising of B g - v - c mu with weight c
    TvResult fr = tv_denoise_warm(axpby(1.0, b - v, -cfg.c, mu), cfg.c, tv, std::move(warm));
    warm = std::move(fr.dual);
    const ImageField f_next = std::move(fr.image);

    const ImageField x = axpby(1.0, b - f_next, -cfg.c, mu);
    if (cfg.v_update == VUpdate::Ball) {
      v = scaled(x, q / std::max(q, norm(x)));
    } else {
      auto coeffs = dwt2_forward(x, spec);
      for (int level = 0; level <= spec.levels(); ++level) {
        const double w = sched.weight(level);
        for (double& y : coeffs.level_span(level)) y = std::clamp(y, -w, w);
      }
      v = dwt2_inverse(coeffs);
    }

    // dual ascent
    const ImageField residual = f_next + v - b;
    mu = axpby(1.0, mu, 1.0 / cfg.c, residual);

    const double size = norm(f_next);
    AdmmRecord rec;
    rec.iteration = k + 1;
    rec.change = size > 0.0 ? norm(f_next - f) / size : norm(f_next - f);
    f = f_next;
    rec.tv = total_variation(f);
    rec.primal_residual = norm(residual);
    rec.feasibility = detail::excess_over_bound(dwt2_forward(b - f, spec), sched, q);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.history.push_back(rec);

    if (rec.feasibility <= cfg.feasibility_tol && rec.change <= cfg.feasibility_tol) {
      out.converged = true;
      break;
    }
  }
  out.image = f;
  return out;
}

/// Hybrid estimator for || W(B g - f) ||_inf <= q (uniform schedule); throws NotConverged.
inline ImageField hybrid_tv_estimator(const ForwardOperator& op, const DataField& g, double q,
                                      const WaveletSpec& spec, const AdmmConfig& cfg = {}) {
  AdmmResult r = hybrid_tv_solve(op, g, ThresholdSchedule::uniform(q, spec.levels()), spec, cfg);
  if (!r.converged)
    throw NotConverged("ADMM did not reach feasibility " + std::to_string(cfg.feasibility_tol) + " in " +
                       std::to_string(cfg.max_iters) + " iterations");
  return std::move(r.image);
}

}  // namespace pat

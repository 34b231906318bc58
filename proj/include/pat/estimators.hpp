#pragma once

// Soft-thresholding estimators in the vaguelette domain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "pat/dwt.hpp"
#include "pat/errors.hpp"
#include "pat/vaguelette.hpp"
#include "pat/wave_operator.hpp"

namespace pat {

/// s_w(y) = sign(y) max(|y| - w, 0).
inline double soft_threshold(double y, double w) {
  if (y > w) return y - w;
  if (y < -w) return y + w;
  return 0.0;
}

enum class ThresholdMode { Uniform, PerLevel, ZeroCoarse };

/// Level-wise thresholds w_j for j = 0 (coarse block) .. J.
class ThresholdSchedule {
 public:
  ThresholdSchedule(ThresholdMode mode, std::vector<double> per_level)
      : mode_(mode), per_level_(std::move(per_level)) {
    if (per_level_.empty()) throw InvalidParams("threshold schedule needs at least the coarse entry");
    for (double w : per_level_)
      if (!(w >= 0.0)) throw InvalidParams("thresholds must be nonnegative");
    if (mode_ == ThresholdMode::ZeroCoarse) per_level_[0] = 0.0;
  }

  /// Same w on every block, coarse included.
  static ThresholdSchedule uniform(double w, int levels) {
    return {ThresholdMode::Uniform, std::vector<double>(static_cast<std::size_t>(levels) + 1, w)};
  }
  /// Same w on every detail level, coarse block untouched.
  static ThresholdSchedule zero_coarse(double w, int levels) {
    return {ThresholdMode::ZeroCoarse, std::vector<double>(static_cast<std::size_t>(levels) + 1, w)};
  }
  static ThresholdSchedule per_level(std::vector<double> w) { return {ThresholdMode::PerLevel, std::move(w)}; }

  ThresholdMode mode() const { return mode_; }
  int levels() const { return static_cast<int>(per_level_.size()) - 1; }
  double weight(int level) const { return per_level_.at(static_cast<std::size_t>(level)); }
  const std::vector<double>& weights() const { return per_level_; }

  void check_compatible(const WaveletSpec& spec) const {
    if (levels() != spec.levels())
      throw InvalidParams("threshold schedule has " + std::to_string(levels()) + " levels, wavelet has " +
                          std::to_string(spec.levels()));
  }

 private:
  ThresholdMode mode_;
  std::vector<double> per_level_;
};

/// Half of the universal threshold: 0.5 sigma_c sqrt(2 ln count).
inline double universal_threshold(double sigma_c, double count) {
  if (!(sigma_c >= 0.0)) throw InvalidParams("noise level must be nonnegative");
  if (!(count > 1.0)) throw InvalidParams("coefficient count must exceed 1");
  return 0.5 * sigma_c * std::sqrt(2.0 * std::log(count));
}

/// Counts image coefficients n_x n_y.
inline double universal_threshold(double sigma_c, const Grid2D& grid) {
  return universal_threshold(sigma_c, static_cast<double>(grid.image_size()));
}

/// Per-level standard deviation of vaguelette coefficients of white data noise.
struct CoefficientNoise {
  std::vector<double> per_level;  // j = 0 .. J

  double finest() const { return per_level.back(); }
  double mean_detail() const {
    double s = 0.0;
    for (std::size_t j = 1; j < per_level.size(); ++j) s += per_level[j];
    return s / static_cast<double>(per_level.size() - 1);
  }
};

/// Sample deviation per data entry sigma propagated to coefficients:
/// sd <u_lambda, z> = sigma sqrt(dx dt) ||u_lambda||, averaged in the mean-square
/// sense over `per_block` vaguelettes per orientation block.
inline CoefficientNoise coefficient_noise(const ForwardOperator& op, const WaveletSpec& spec, double sigma,
                                          std::size_t per_block = 4, std::uint64_t seed = 1) {
  if (!(sigma >= 0.0)) throw InvalidParams("noise level must be nonnegative");
  const Grid2D& g = op.grid();
  WaveletPyramid layout(g, spec);
  std::mt19937_64 rng(seed);
  const double cell = std::sqrt(g.dx() * g.dt());
  CoefficientNoise out;
  for (int level = 0; level <= spec.levels(); ++level) {
    const std::size_t s = layout.block_side(level);
    double sum_sq = 0.0;
    std::size_t count = 0;
    const int first = level == 0 ? 0 : 1, last = level == 0 ? 0 : 3;
    for (int o = first; o <= last; ++o)
      for (std::size_t n = 0; n < per_block; ++n) {
        const WaveletIndex idx{level, o, rng() % s, rng() % s};
        const DataField u = synthesize_vaguelette(op, idx, spec);
        sum_sq += inner_product(u, u);
        ++count;
      }
    out.per_level.push_back(sigma * cell * std::sqrt(sum_sq / static_cast<double>(count)));
  }
  return out;
}

/// Noise level estimated from the data alone: MAD / 0.6745 of the finest
/// vaguelette level, used for every level.
inline CoefficientNoise coefficient_noise_mad(const ForwardOperator& op, const DataField& g,
                                              const WaveletSpec& spec) {
  const auto c = vaguelette_transform(op, g, spec).pyramid;
  const auto fine = c.level_span(spec.levels());
  std::vector<double> a(fine.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(fine[i]);
  const auto mid = a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2);
  std::nth_element(a.begin(), mid, a.end());
  const double sd = *mid / 0.6745;
  return {std::vector<double>(static_cast<std::size_t>(spec.levels()) + 1, sd)};
}

/// ZeroCoarse schedule w_j = scale * universal_threshold(sigma_j).
inline ThresholdSchedule universal_schedule(const CoefficientNoise& noise, const Grid2D& grid,
                                            double scale = 1.0) {
  std::vector<double> w(noise.per_level.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = scale * universal_threshold(noise.per_level[j], grid);
  return {ThresholdMode::ZeroCoarse, std::move(w)};
}

inline void soft_threshold_pyramid(WaveletPyramid& p, const ThresholdSchedule& sched, double step = 1.0) {
  sched.check_compatible(p.spec());
  for (int level = 0; level <= p.levels(); ++level) {
    const double w = step * sched.weight(level);
    for (double& v : p.level_span(level)) v = soft_threshold(v, w);
  }
}

// The estimators accept any operator with grid(), apply() and adjoint();
// ForwardOperator is the one used in practice.

/// f = sum_lambda s_{w_j}(<g, u_lambda>) psi_lambda.
template <class Op = ForwardOperator>
inline ImageField wvd_soft_estimator(const Op& op, const DataField& g,
                                     const ThresholdSchedule& sched, const WaveletSpec& spec) {
  auto c = vaguelette_transform(op, g, spec).pyramid;
  soft_threshold_pyramid(c, sched);
  return dwt2_inverse(c);
}

/// Phi(f) = 1/2 ||A f - g||^2 + sum_lambda w_j |<psi_lambda, f>|.
template <class Op = ForwardOperator>
inline double lasso_objective(const Op& op, const DataField& g, const ImageField& f,
                              const ThresholdSchedule& sched, const WaveletSpec& spec) {
  sched.check_compatible(spec);
  const DataField r = op.apply(f) - g;
  double penalty = 0.0;
  const auto c = dwt2_forward(f, spec);
  for (int level = 0; level <= spec.levels(); ++level) {
    double s = 0.0;
    for (double v : c.level_span(level)) s += std::abs(v);
    penalty += sched.weight(level) * s;
  }
  return 0.5 * inner_product(r, r) + penalty;
}

/// max_lambda |<u_lambda, g - A f>| / w_j over blocks with w_j > 0.
template <class Op = ForwardOperator>
inline double dual_feasibility(const Op& op, const DataField& g, const ImageField& f,
                               const ThresholdSchedule& sched, const WaveletSpec& spec) {
  sched.check_compatible(spec);
  const auto c = vaguelette_transform(op, g - op.apply(f), spec).pyramid;
  double worst = 0.0;
  for (int level = 0; level <= spec.levels(); ++level) {
    const double w = sched.weight(level);
    if (w <= 0.0) continue;
    for (double v : c.level_span(level)) worst = std::max(worst, std::abs(v) / w);
  }
  return worst;
}

struct IstaResult {
  ImageField image;
  std::vector<double> objective;  // one entry per accepted iterate, starting at f = 0
  int iterations = 0;
  double step = 1.0;
};

/// Iterative soft thresholding for Phi with step 1 (halved whenever the
/// objective would increase). Stops when ||f_{k+1} - f_k|| <= tol ||f_{k+1}||.
template <class Op = ForwardOperator>
inline IstaResult ista_oracle(const Op& op, const DataField& g, const ThresholdSchedule& sched,
                              const WaveletSpec& spec, int iters, double tol = 1e-10) {
  sched.check_compatible(spec);
  if (iters < 1) throw InvalidParams("ista needs at least one iteration");
  const Grid2D& grid = op.grid();
  ImageField f(grid);
  IstaResult out{f, {lasso_objective(op, g, f, sched, spec)}, 0, 1.0};
  const ImageField atg = op.adjoint(g);
  for (int k = 0; k < iters; ++k) {
    const ImageField grad_step = atg - op.adjoint(op.apply(f));
    for (;;) {
      auto c = dwt2_forward(axpby(1.0, f, out.step, grad_step), spec);
      soft_threshold_pyramid(c, sched, out.step);
      ImageField next = dwt2_inverse(c);
      const double phi = lasso_objective(op, g, next, sched, spec);
      if (phi <= out.objective.back() * (1.0 + 1e-15) + 1e-300 || out.step < 1e-6) {
        const double change = norm(next - f);
        const double size = norm(next);
        f = std::move(next);
        out.objective.push_back(phi);
        out.iterations = k + 1;
        if (change <= tol * size || size == 0.0) {
          out.image = f;
          return out;
        }
        break;
      }
      out.step *= 0.5;
    }
  }
  throw NotConverged("ista did not reach relative change " + std::to_string(tol) + " in " +
                     std::to_string(iters) + " iterations");
}

}  // namespace pat

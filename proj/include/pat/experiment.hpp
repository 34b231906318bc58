#pragma once

// Config-driven pipeline shared by the command-line tool and the acceptance run.

#include <chrono>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "pat/admm.hpp"
#include "pat/config.hpp"
#include "pat/estimators.hpp"
#include "pat/metrics.hpp"
#include "pat/simulation.hpp"
#include "pat/wave_operator.hpp"

namespace pat {

struct Pipeline {
  ExperimentConfig config;
  ForwardOperator op;
  WaveletSpec spec;
  CoefficientNoise noise;  // at the configured sigma
  ThresholdSchedule schedule;

  /// Thresholds for another noise level; coefficient noise is linear in sigma.
  ThresholdSchedule schedule_for(double sigma) const {
    if (config.threshold) return ThresholdSchedule::zero_coarse(*config.threshold, spec.levels());
    CoefficientNoise scaled_noise = noise_at_unit;
    for (double& s : scaled_noise.per_level) s *= sigma;
    return universal_schedule(scaled_noise, op.grid(), config.threshold_scale);
  }

  CoefficientNoise noise_at_unit;
};

inline Pipeline make_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  ForwardOperator op(cfg.grid());
  const WaveletSpec spec = cfg.wavelet();
  CoefficientNoise unit = coefficient_noise(op, spec, 1.0);
  CoefficientNoise at_sigma = unit;
  for (double& s : at_sigma.per_level) s *= cfg.sigma;
  ThresholdSchedule sched = cfg.threshold ? ThresholdSchedule::zero_coarse(*cfg.threshold, spec.levels())
                                          : universal_schedule(at_sigma, op.grid(), cfg.threshold_scale);
  return {cfg, std::move(op), spec, std::move(at_sigma), std::move(sched), std::move(unit)};
}

struct Simulation {
  ImageField phantom;
  DataField clean;
  DataField noisy;
};

/// Phantom, clean data and noisy data (masked when limited view is on).
inline Simulation simulate(const Pipeline& p, std::uint64_t seed) {
  const ExperimentConfig& c = p.config;
  ImageField f = make_phantom(c.phantom(), p.op.grid());
  DataField clean = p.op.apply(f);
  DataField noisy = add_noise(clean, {c.sigma, seed});
  if (c.limited_view) {
    clean = apply_limited_view(clean, c.aperture, c.view_t_max);
    noisy = apply_limited_view(noisy, c.aperture, c.view_t_max);
  }
  return {std::move(f), std::move(clean), std::move(noisy)};
}

/// The hybrid constraint uses one bound q on every coefficient, the largest level threshold.
inline ThresholdSchedule hybrid_schedule(const ThresholdSchedule& sched) {
  double q = 0.0;
  for (double w : sched.weights()) q = std::max(q, w);
  return ThresholdSchedule::uniform(q, sched.levels());
}

struct Reconstruction {
  ImageField image;
  Method method = Method::Baseline;
  int iterations = 0;
  bool converged = true;
  double seconds = 0.0;
  std::vector<AdmmRecord> history;
};

inline Reconstruction reconstruct(const Pipeline& p, Method method, const DataField& g,
                                  const std::optional<ThresholdSchedule>& sched_override = std::nullopt) {
  if (!(g.grid() == p.op.grid())) throw GridMismatch("data grid does not match the configured grid");
  const ThresholdSchedule& sched = sched_override ? *sched_override : p.schedule;
  const auto start = std::chrono::steady_clock::now();
  Reconstruction r{ImageField(g.grid()), method, 0, true, 0.0, {}};
  switch (method) {
    case Method::Baseline:
      r.image = p.op.adjoint(g);
      break;
    case Method::Wvd:
      r.image = wvd_soft_estimator(p.op, g, sched, p.spec);
      break;
    case Method::Hybrid: {
      AdmmResult a = hybrid_tv_solve(p.op, g, hybrid_schedule(sched), p.spec, p.config.admm);
      r.image = std::move(a.image);
      r.iterations = static_cast<int>(a.history.size());
      r.converged = a.converged;
      r.history = std::move(a.history);
      break;
    }
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// One row of the three-method comparison on a single noise draw.
inline OrderingRow ordering_row(const Pipeline& p, std::uint64_t seed) {
  const Simulation s = simulate(p, seed);
  OrderingRow row;
  row.seed = seed;
  row.data_error = norm(s.noisy - s.clean) / norm(s.clean);
  row.baseline = relative_l2(reconstruct(p, Method::Baseline, s.noisy).image, s.phantom);
  row.wvd = relative_l2(reconstruct(p, Method::Wvd, s.noisy).image, s.phantom);
  const Reconstruction h = reconstruct(p, Method::Hybrid, s.noisy);
  row.hybrid = relative_l2(h.image, s.phantom);
  row.hybrid_converged = h.converged;
  return row;
}

}  // namespace pat

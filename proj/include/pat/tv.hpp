#pragma once

// Isotropic total variation and Chambolle's dual projection denoiser.
//
// Continuum scaling: TV(f) = sum |D f| dx with D the forward difference
// (Neumann boundary), so that min 1/2 ||f - b||^2_{L2} + reg TV(f) is the
// raw-sample problem with weight reg / dx.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pat/errors.hpp"
#include "pat/grid.hpp"

namespace pat {

struct TvSettings {
  int max_iters = 100;
  double tol = 1e-4;  // on max |p_{k+1} - p_k|
};

namespace detail {

// Forward-difference gradient with zero last difference.
inline void gradient(const std::vector<double>& u, std::size_t nx, std::size_t ny, std::vector<double>& gx,
                     std::vector<double>& gy) {
  for (std::size_t k = 0; k < ny; ++k)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t a = k * nx + i;
      gx[a] = i + 1 < nx ? u[a + 1] - u[a] : 0.0;
      gy[a] = k + 1 < ny ? u[a + nx] - u[a] : 0.0;
    }
}

// div = -gradient^T.
inline void divergence(const std::vector<double>& px, const std::vector<double>& py, std::size_t nx,
                       std::size_t ny, std::vector<double>& out) {
  for (std::size_t k = 0; k < ny; ++k)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t a = k * nx + i;
      double d = 0.0;
      if (i + 1 < nx) d += px[a];
      if (i > 0) d -= px[a - 1];
      if (k + 1 < ny) d += py[a];
      if (k > 0) d -= py[a - nx];
      out[a] = d;
    }
}

}  // namespace detail

inline double total_variation(const ImageField& f) {
  const std::size_t nx = f.grid().nx(), ny = f.grid().ny();
  std::vector<double> u(f.values().begin(), f.values().end()), gx(u.size()), gy(u.size());
  detail::gradient(u, nx, ny, gx, gy);
  double s = 0.0;
  for (std::size_t a = 0; a < u.size(); ++a) s += std::hypot(gx[a], gy[a]);
  return s * f.grid().dx();
}

/// Dual variable of the Chambolle iteration, reusable as a warm start.
struct TvDual {
  std::vector<double> px;
  std::vector<double> py;
};

struct TvResult {
  ImageField image;
  TvDual dual;
  int iterations = 0;
  double residual = 0.0;  // last max |p_{k+1} - p_k|
  bool converged = false;
};

/// Chambolle's fixed point
///   p <- (p + tau grad(div p - b / lam)) / (1 + tau |grad(div p - b / lam)|),
///   f = b - lam div p,  tau = 1/8,  lam = reg / dx.
/// Never throws on non-convergence; see tv_denoise_chambolle.
inline TvResult tv_denoise_warm(const ImageField& b, double reg, const TvSettings& cfg, TvDual warm = {}) {
  if (!(reg > 0.0)) throw InvalidParams("TV weight must be positive");
  if (cfg.max_iters < 1 || !(cfg.tol > 0.0)) throw InvalidParams("TV settings must be positive");
  const std::size_t nx = b.grid().nx(), ny = b.grid().ny(), n = nx * ny;
  const double lam = reg / b.grid().dx();
  const double tau = 0.125;
  std::vector<double> bv(b.values().begin(), b.values().end());
  TvDual p = std::move(warm);
  if (p.px.size() != n || p.py.size() != n) p = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<double> div(n), w(n), gx(n), gy(n);
  int it = 0;
  double change = 0.0;
  bool converged = false;
  while (it < cfg.max_iters) {
    detail::divergence(p.px, p.py, nx, ny, div);
    for (std::size_t a = 0; a < n; ++a) w[a] = div[a] - bv[a] / lam;
    detail::gradient(w, nx, ny, gx, gy);
    change = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const double den = 1.0 + tau * std::hypot(gx[a], gy[a]);
      const double qx = (p.px[a] + tau * gx[a]) / den;
      const double qy = (p.py[a] + tau * gy[a]) / den;
      change = std::max({change, std::abs(qx - p.px[a]), std::abs(qy - p.py[a])});
      p.px[a] = qx;
      p.py[a] = qy;
    }
    ++it;
    if (change <= cfg.tol) {
      converged = true;
      break;
    }
  }
  detail::divergence(p.px, p.py, nx, ny, div);
  std::vector<double> f(n);
  for (std::size_t a = 0; a < n; ++a) f[a] = bv[a] - lam * div[a];
  return {ImageField(b.grid(), std::move(f)), std::move(p), it, change, converged};
}

/// argmin_f 1/2 ||f - b||^2 + reg TV(f). Throws NotConverged.
inline ImageField tv_denoise_chambolle(const ImageField& b, double reg, const TvSettings& cfg = {}) {
  TvResult r = tv_denoise_warm(b, reg, cfg);
  if (!r.converged)
    throw NotConverged("Chambolle iteration stopped at dual change " + std::to_string(r.residual) + " after " +
                       std::to_string(r.iterations) + " iterations");
  return std::move(r.image);
}

}  // namespace pat

#pragma once

// Disk phantoms, seeded white noise and limited-view masking.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pat/errors.hpp"
#include "pat/grid.hpp"

namespace pat {

struct Disk {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
  double amplitude = 1.0;

  friend bool operator==(const Disk&, const Disk&) = default;
};

struct PhantomSpec {
  std::vector<Disk> disks;
  std::optional<Box> box;  // declared support of the phantom
};

struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Default experiment: 128 x 128 image on [-2, 2] x (0, 4), 512 time samples up to T = 4.
inline Grid2D default_grid() { return make_grid(128, 128, 512, 1.0 / 32, 1.0 / 128); }

inline Box default_box() { return {{-1.0, 1.0}, {0.0, 2.0}}; }

/// Three disks inside the default box; the amplitude puts the relative
/// data error of sigma = 0.25 noise near 1.05.
inline PhantomSpec default_phantom() {
  const double a = 1.65;
  return {{{-0.35, 0.6, 0.2, a}, {0.3, 0.9, 0.25, a}, {0.0, 1.4, 0.15, a}}, default_box()};
}

/// Disk used for the isometry checks.
inline PhantomSpec isometry_probe_phantom() { return {{{0.0, 0.5, 0.1, 1.0}}, default_box()}; }

inline void validate_phantom(const PhantomSpec& spec, const Grid2D& grid) {
  const double clearance = 2.0 * grid.dx();
  const Interval xr = grid.x_extent();
  for (std::size_t n = 0; n < spec.disks.size(); ++n) {
    const Disk& d = spec.disks[n];
    const std::string name = "disk " + std::to_string(n) + " (x=" + std::to_string(d.x) +
                             ", y=" + std::to_string(d.y) + ", r=" + std::to_string(d.radius) + ")";
    if (!(d.radius > 0.0) || !std::isfinite(d.amplitude)) throw SupportViolation(name + " has invalid radius or amplitude");
    if (d.y - d.radius < clearance) throw SupportViolation(name + " comes closer than 2 dx to y = 0");
    if (d.x - d.radius < xr.lo + clearance || d.x + d.radius > xr.hi - clearance)
      throw SupportViolation(name + " comes closer than 2 dx to the x boundary");
    if (d.y + d.radius > grid.y_extent().hi - clearance)
      throw SupportViolation(name + " comes closer than 2 dx to the bottom of the grid");
    if (spec.box && !(d.x - d.radius >= spec.box->x.lo && d.x + d.radius <= spec.box->x.hi &&
                      d.y - d.radius >= spec.box->y.lo && d.y + d.radius <= spec.box->y.hi))
      throw SupportViolation(name + " leaves the support box");
  }
}

/// Sum of disk indicators with 4 x 4 supersampling in every cell.
inline ImageField make_phantom(const PhantomSpec& spec, const Grid2D& grid) {
  validate_phantom(spec, grid);
  const std::size_t nx = grid.nx(), ny = grid.ny();
  const double h = grid.dx();
  std::vector<double> v(grid.image_size(), 0.0);
  for (const Disk& d : spec.disks) {
    const double r2 = d.radius * d.radius;
    for (std::size_t k = 0; k < ny; ++k)
      for (std::size_t i = 0; i < nx; ++i) {
        const double x = grid.x_node(i), y = grid.y_node(k);
        if (std::abs(x - d.x) > d.radius + h || std::abs(y - d.y) > d.radius + h) continue;
        int inside = 0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            const double px = x + ((a + 0.5) / 4.0 - 0.5) * h - d.x;
            const double py = y + ((b + 0.5) / 4.0 - 0.5) * h - d.y;
            inside += px * px + py * py <= r2;
          }
        v[k * nx + i] += d.amplitude * inside / 16.0;
      }
  }
  return ImageField(grid, std::move(v), spec.box);
}

/// g + sigma Z with Z i.i.d. standard normal from a seeded generator.
inline DataField add_noise(const DataField& g, const NoiseSpec& noise) {
  if (!(noise.sigma >= 0.0)) throw InvalidParams("noise deviation must be nonnegative");
  if (noise.sigma == 0.0) return g;
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> z(0.0, noise.sigma);
  std::vector<double> v(g.values().begin(), g.values().end());
  for (double& x : v) x += z(rng);
  return DataField(g.grid(), std::move(v));
}

/// Seed of trial n derived from a base seed.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) { return seed ^ trial; }

/// Zeroes samples outside aperture x [0, t_max]. An aperture with lo >= hi is empty.
inline DataField apply_limited_view(const DataField& g, const Interval& aperture, double t_max) {
  const Grid2D& grid = g.grid();
  const Interval xr = grid.x_extent();
  const double eps = 1e-12 * (xr.hi - xr.lo);
  if (!std::isfinite(aperture.lo) || !std::isfinite(aperture.hi) ||
      (aperture.lo < aperture.hi && (aperture.lo < xr.lo - eps || aperture.hi > xr.hi + eps)))
    throw BadAperture("aperture must lie within the detector extent");
  if (!(t_max >= 0.0) || t_max > grid.t_max() * (1 + 1e-12))
    throw BadAperture("t_max must lie in [0, T]");
  std::vector<double> v(g.values().begin(), g.values().end());
  for (std::size_t m = 0; m < grid.nt(); ++m)
    for (std::size_t i = 0; i < grid.nx(); ++i)
      if (!(aperture.lo < aperture.hi && aperture.contains(grid.x_node(i)) && grid.t_node(m) <= t_max))
        v[m * grid.nx() + i] = 0.0;
  return DataField(grid, std::move(v));
}

}  // namespace pat

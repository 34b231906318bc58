#pragma once

// Forward wave operator for a line detector at y = 0.
//
//   U h (x, t) = trace on y = 0 of the solution of u_tt = Laplace u with
//                u(., 0) = h evenly extended in y, u_t(., 0) = 0,
//   A f        = t^{-1/2} U (y^{1/2} f).
//
// Spectral backend: h is expanded in an orthonormal real Fourier basis along
// x (periodic on the grid width) and an orthonormal DCT-II basis along y (the
// even extension about y = 0). Each mode evolves by cos(|k| t); the trace at
// y = 0 is evaluated exactly from the cosine modes. A* is the exact transpose
// of this chain with respect to the cell-measure inner products.
//
// The trace of the evenly extended field is twice the free-space trace of h;
// with this normalization A is the isometry of the continuum theory.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "pat/errors.hpp"
#include "pat/grid.hpp"
#include "pat/parallel.hpp"

namespace pat {

enum class WaveBackend { Spectral, SphericalMeanOracle };

namespace detail {

// Bilinear interpolation of image samples; nodes outside the grid read as 0.
// With periodic_x the x index wraps around the grid width.
inline double bilinear(const ImageField& f, double x, double y, bool periodic_x) {
  const Grid2D& g = f.grid();
  const double fx = (x - g.x_extent().lo) / g.dx() - 0.5;
  const double fy = y / g.dx() - 0.5;
  const double ix0 = std::floor(fx);
  const double iy0 = std::floor(fy);
  const double ax = fx - ix0;
  const double ay = fy - iy0;
  const auto nx = static_cast<long>(g.nx());
  const auto ny = static_cast<long>(g.ny());
  auto at = [&](long ix, long iy) -> double {
    if (iy < 0 || iy >= ny) return 0.0;
    if (periodic_x) {
      ix %= nx;
      if (ix < 0) ix += nx;
    } else if (ix < 0 || ix >= nx) {
      return 0.0;
    }
    return f(static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
  };
  const long i0 = static_cast<long>(ix0);
  const long j0 = static_cast<long>(iy0);
  return (1 - ax) * (1 - ay) * at(i0, j0) + ax * (1 - ay) * at(i0 + 1, j0) +
         (1 - ax) * ay * at(i0, j0 + 1) + ax * ay * at(i0 + 1, j0 + 1);
}

inline double circle_mean(const ImageField& f, double x, double r, bool periodic_x) {
  const auto points = static_cast<std::size_t>(
      4 * std::max(1.0, std::ceil(std::numbers::pi * r / f.grid().dx())));
  double s = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
    s += bilinear(f, x + r * std::cos(phi), r * std::sin(phi), periodic_x);
  }
  return s / static_cast<double>(points);
}

}  // namespace detail

/// Circular mean of f over the circle of radius r centered at (x, 0),
/// 4 ceil(pi r / dx) equispaced bilinear samples. Off-grid samples read as 0.
inline double spherical_mean_oracle(const ImageField& f, double x, double r) {
  if (!(r > 0.0)) throw InvalidParams("radius must be positive");
  return detail::circle_mean(f, x, r, false);
}

class ForwardOperator {
 public:
  /// Propagator tables up to this many entries are cached; larger grids
  /// recompute them per application.
  static constexpr std::size_t kDefaultCacheEntries = std::size_t{1} << 23;

  explicit ForwardOperator(const Grid2D& grid, WaveBackend backend = WaveBackend::Spectral,
                           std::size_t cache_entries = kDefaultCacheEntries)
      : grid_(grid), backend_(backend) {
    const std::size_t nx = grid_.nx(), ny = grid_.ny(), nt = grid_.nt();
    const double pi = std::numbers::pi;

    // Real orthonormal Fourier basis along x; rows sharing |k_x| form a group.
    fourier_x_.assign(nx * nx, 0.0);
    row_group_.assign(nx, 0);
    const double norm0 = 1.0 / std::sqrt(static_cast<double>(nx));
    const double norm1 = std::sqrt(2.0 / static_cast<double>(nx));
    std::size_t row = 0;
    auto set_row = [&](std::size_t group, auto&& fn) {
      for (std::size_t i = 0; i < nx; ++i) fourier_x_[row * nx + i] = fn(static_cast<double>(i));
      row_group_[row++] = group;
    };
    set_row(0, [&](double) { return norm0; });
    for (std::size_t r = 1; r < nx / 2; ++r) {
      const double w = 2.0 * pi * static_cast<double>(r) / static_cast<double>(nx);
      set_row(r, [&](double i) { return norm1 * std::cos(w * i); });
      set_row(r, [&](double i) { return norm1 * std::sin(w * i); });
    }
    set_row(nx / 2, [&](double i) { return (static_cast<std::size_t>(i) % 2 == 0 ? norm0 : -norm0); });

    groups_ = nx / 2 + 1;
    group_rows_.assign(groups_, {});
    for (std::size_t q = 0; q < nx; ++q) group_rows_[row_group_[q]].push_back(q);
    kx_.resize(groups_);
    for (std::size_t g = 0; g < groups_; ++g)
      kx_[g] = 2.0 * pi * static_cast<double>(g) / (static_cast<double>(nx) * grid_.dx());

    // Orthonormal DCT-II along y (even extension about y = 0 and y = Y).
    cosine_y_.assign(ny * ny, 0.0);
    trace_.assign(ny, 0.0);
    ky_.assign(ny, 0.0);
    for (std::size_t p = 0; p < ny; ++p) {
      const double s = p == 0 ? std::sqrt(1.0 / static_cast<double>(ny))
                              : std::sqrt(2.0 / static_cast<double>(ny));
      trace_[p] = s;  // basis function evaluated at y = 0
      ky_[p] = pi * static_cast<double>(p) / (static_cast<double>(ny) * grid_.dx());
      for (std::size_t k = 0; k < ny; ++k)
        cosine_y_[p * ny + k] =
            s * std::cos(pi * static_cast<double>(p) * (static_cast<double>(k) + 0.5) /
                         static_cast<double>(ny));
    }

    sqrt_y_.resize(ny);
    for (std::size_t k = 0; k < ny; ++k) sqrt_y_[k] = std::sqrt(grid_.y_node(k));
    inv_sqrt_t_.resize(nt);
    for (std::size_t m = 0; m < nt; ++m) inv_sqrt_t_[m] = 1.0 / std::sqrt(grid_.t_node(m));

    if (backend_ == WaveBackend::Spectral && groups_ * ny * nt <= cache_entries) {
      propagator_.resize(groups_ * ny * nt);
      for (std::size_t g = 0; g < groups_; ++g)
        fill_slab(g, std::span<double>(propagator_.data() + g * ny * nt, ny * nt));
    }
  }

  const Grid2D& grid() const { return grid_; }
  WaveBackend backend() const { return backend_; }
  bool has_cached_propagator() const { return !propagator_.empty(); }

  /// Propagator entry cos(|k| t_m) for x-mode group g and y-mode p.
  double propagator(std::size_t g, std::size_t p, std::size_t m) const {
    return std::cos(frequency(g, p) * grid_.t_node(m));
  }
  double frequency(std::size_t g, std::size_t p) const { return std::hypot(kx_[g], ky_[p]); }

  /// Detector trace of the wave field started from h.
  DataField forward_U(const ImageField& h) const {
    check_grid(h.grid());
    if (h.support_box() && h.support_box()->y.lo < 0.0)
      throw SupportViolation("initial pressure must vanish for y <= 0");
    std::vector<double> in(h.values().begin(), h.values().end());
    return DataField(grid_, backend_ == WaveBackend::Spectral ? spectral_forward(in)
                                                              : oracle_forward(h));
  }

  /// A f = t^{-1/2} U (y^{1/2} f).
  DataField apply(const ImageField& f) const {
    check_grid(f.grid());
    const std::size_t nx = grid_.nx(), ny = grid_.ny(), nt = grid_.nt();
    std::vector<double> weighted(f.values().begin(), f.values().end());
    for (std::size_t k = 0; k < ny; ++k)
      for (std::size_t i = 0; i < nx; ++i) weighted[k * nx + i] *= sqrt_y_[k];
    std::vector<double> out;
    if (backend_ == WaveBackend::Spectral) {
      out = spectral_forward(weighted);
    } else {
      out = oracle_forward(ImageField(grid_, std::move(weighted)));
    }
    for (std::size_t m = 0; m < nt; ++m)
      for (std::size_t i = 0; i < nx; ++i) out[m * nx + i] *= inv_sqrt_t_[m];
    return DataField(grid_, std::move(out));
  }

  /// Exact adjoint of apply() for the cell-measure inner products.
  ImageField adjoint(const DataField& g) const {
    check_grid(g.grid());
    if (backend_ != WaveBackend::Spectral)
      throw InvalidParams("the spherical-mean oracle backend has no adjoint");
    const std::size_t nx = grid_.nx(), ny = grid_.ny(), nt = grid_.nt();
    std::vector<double> weighted(g.values().begin(), g.values().end());
    for (std::size_t m = 0; m < nt; ++m)
      for (std::size_t i = 0; i < nx; ++i) weighted[m * nx + i] *= inv_sqrt_t_[m];
    std::vector<double> out = spectral_transpose(weighted);
    const double measure_ratio = grid_.dt() / grid_.dx();
    for (std::size_t k = 0; k < ny; ++k)
      for (std::size_t i = 0; i < nx; ++i) out[k * nx + i] *= sqrt_y_[k] * measure_ratio;
    return ImageField(grid_, std::move(out));
  }

 private:
  void check_grid(const Grid2D& g) const {
    if (!(g == grid_)) throw GridMismatch("field grid differs from the operator grid");
  }

  void fill_slab(std::size_t g, std::span<double> slab) const {
    const std::size_t ny = grid_.ny(), nt = grid_.nt();
    for (std::size_t p = 0; p < ny; ++p) {
      const double w = frequency(g, p);
      for (std::size_t m = 0; m < nt; ++m) slab[p * nt + m] = std::cos(w * grid_.t_node(m));
    }
  }

  // Raw (unweighted) chain: image samples (rows y) -> trace samples (rows t).
  std::vector<double> spectral_forward(const std::vector<double>& h) const {
    const std::size_t nx = grid_.nx(), ny = grid_.ny(), nt = grid_.nt();

    // x analysis: hx[q][k] = sum_i F[q][i] h[k][i]
    std::vector<double> hx(nx * ny, 0.0);
    parallel_for(nx, [&](std::size_t q) {
      const double* fq = &fourier_x_[q * nx];
      for (std::size_t k = 0; k < ny; ++k) {
        const double* hk = &h[k * nx];
        double s = 0.0;
        for (std::size_t i = 0; i < nx; ++i) s += fq[i] * hk[i];
        hx[q * ny + k] = s;
      }
    });

    // y analysis and evaluation at y = 0: c[q][p] = trace[p] sum_k C[p][k] hx[q][k]
    std::vector<double> c(nx * ny, 0.0);
    parallel_for(nx, [&](std::size_t q) {
      const double* hq = &hx[q * ny];
      for (std::size_t p = 0; p < ny; ++p) {
        const double* cp = &cosine_y_[p * ny];
        double s = 0.0;
        for (std::size_t k = 0; k < ny; ++k) s += cp[k] * hq[k];
        c[q * ny + p] = trace_[p] * s;
      }
    });

    // propagation: d[q][m] = sum_p c[q][p] cos(w_{q,p} t_m)
    std::vector<double> d(nx * nt, 0.0);
    parallel_for(groups_, [&](std::size_t g) {
      std::vector<double> scratch;
      std::span<const double> slab = slab_for(g, scratch);
      for (std::size_t q : group_rows_[g]) {
        double* dq = &d[q * nt];
        for (std::size_t p = 0; p < ny; ++p) {
          const double a = c[q * ny + p];
          const double* row = &slab[p * nt];
          for (std::size_t m = 0; m < nt; ++m) dq[m] += a * row[m];
        }
      }
    });

    // x synthesis: out[m][i] = sum_q F[q][i] d[q][m]
    std::vector<double> out(nt * nx, 0.0);
    parallel_for(nt, [&](std::size_t m) {
      double* om = &out[m * nx];
      for (std::size_t q = 0; q < nx; ++q) {
        const double a = d[q * nt + m];
        const double* fq = &fourier_x_[q * nx];
        for (std::size_t i = 0; i < nx; ++i) om[i] += a * fq[i];
      }
    });
    return out;
  }

  // Transpose of spectral_forward.
  std::vector<double> spectral_transpose(const std::vector<double>& gdata) const {
    const std::size_t nx = grid_.nx(), ny = grid_.ny(), nt = grid_.nt();

    std::vector<double> d(nx * nt, 0.0);
    parallel_for(nx, [&](std::size_t q) {
      const double* fq = &fourier_x_[q * nx];
      for (std::size_t m = 0; m < nt; ++m) {
        const double* gm = &gdata[m * nx];
        double s = 0.0;
        for (std::size_t i = 0; i < nx; ++i) s += fq[i] * gm[i];
        d[q * nt + m] = s;
      }
    });

    std::vector<double> c(nx * ny, 0.0);
    parallel_for(groups_, [&](std::size_t g) {
      std::vector<double> scratch;
      std::span<const double> slab = slab_for(g, scratch);
      for (std::size_t q : group_rows_[g]) {
        const double* dq = &d[q * nt];
        for (std::size_t p = 0; p < ny; ++p) {
          const double* row = &slab[p * nt];
          double s = 0.0;
          for (std::size_t m = 0; m < nt; ++m) s += row[m] * dq[m];
          c[q * ny + p] = trace_[p] * s;
        }
      }
    });

    std::vector<double> hx(nx * ny, 0.0);
    parallel_for(nx, [&](std::size_t q) {
      double* hq = &hx[q * ny];
      for (std::size_t p = 0; p < ny; ++p) {
        const double a = c[q * ny + p];
        const double* cp = &cosine_y_[p * ny];
        for (std::size_t k = 0; k < ny; ++k) hq[k] += a * cp[k];
      }
    });

    std::vector<double> out(ny * nx, 0.0);
    parallel_for(ny, [&](std::size_t k) {
      double* ok = &out[k * nx];
      for (std::size_t q = 0; q < nx; ++q) {
        const double a = hx[q * ny + k];
        const double* fq = &fourier_x_[q * nx];
        for (std::size_t i = 0; i < nx; ++i) ok[i] += a * fq[i];
      }
    });
    return out;
  }

  std::span<const double> slab_for(std::size_t g, std::vector<double>& scratch) const {
    const std::size_t n = grid_.ny() * grid_.nt();
    if (!propagator_.empty()) return {propagator_.data() + g * n, n};
    scratch.resize(n);
    fill_slab(g, scratch);
    return scratch;
  }

  // Poisson-formula trace built from circular means (x periodic like the
  // spectral model):  U h = 2 d/dt [ t int_0^{pi/2} sin(th) M h(x, t sin(th)) dth ].
  std::vector<double> oracle_forward(const ImageField& h) const {
    const std::size_t nx = grid_.nx(), nt = grid_.nt();
    const double dx = grid_.dx(), dt = grid_.dt();
    const double t_end = grid_.t_max();
    const double dr = 0.25 * dx;
    const auto n_r = static_cast<std::size_t>(std::ceil(t_end / dr)) + 2;

    // Radial table of circular means per detector node.
    std::vector<double> means(nx * n_r, 0.0);
    parallel_for(nx, [&](std::size_t i) {
      const double x = grid_.x_node(i);
      means[i * n_r] = detail::bilinear(h, x, 0.0, true);
      for (std::size_t j = 1; j < n_r; ++j)
        means[i * n_r + j] = detail::circle_mean(h, x, static_cast<double>(j) * dr, true);
    });
    auto mean_at = [&](std::size_t i, double r) {
      const double u = r / dr;
      const auto j = std::min(static_cast<std::size_t>(u), n_r - 2);
      const double a = u - static_cast<double>(j);
      return (1 - a) * means[i * n_r + j] + a * means[i * n_r + j + 1];
    };

    // P(x_i, j dt) for j = 0 .. nt by midpoint quadrature in theta.
    std::vector<double> potential(nx * (nt + 1), 0.0);
    parallel_for(nx, [&](std::size_t i) {
      for (std::size_t j = 1; j <= nt; ++j) {
        const double t = static_cast<double>(j) * dt;
        const auto n_theta = static_cast<std::size_t>(std::max(64.0, std::ceil(8.0 * t / dr)));
        const double dth = 0.5 * std::numbers::pi / static_cast<double>(n_theta);
        double s = 0.0;
        for (std::size_t k = 0; k < n_theta; ++k) {
          const double th = (static_cast<double>(k) + 0.5) * dth;
          s += std::sin(th) * mean_at(i, t * std::sin(th));
        }
        potential[i * (nt + 1) + j] = t * s * dth;
      }
    });

    std::vector<double> out(nt * nx, 0.0);
    for (std::size_t m = 0; m < nt; ++m)
      for (std::size_t i = 0; i < nx; ++i)
        out[m * nx + i] =
            2.0 * (potential[i * (nt + 1) + m + 1] - potential[i * (nt + 1) + m]) / dt;
    return out;
  }

  Grid2D grid_;
  WaveBackend backend_;
  std::vector<double> fourier_x_;
  std::vector<std::size_t> row_group_;
  std::vector<std::vector<std::size_t>> group_rows_;
  std::size_t groups_ = 0;
  std::vector<double> kx_;
  std::vector<double> cosine_y_;
  std::vector<double> trace_;
  std::vector<double> ky_;
  std::vector<double> sqrt_y_;
  std::vector<double> inv_sqrt_t_;
  std::vector<double> propagator_;
};

// Named free-function entry points.

inline DataField wave_forward_U(const ForwardOperator& op, const ImageField& h) { return op.forward_U(h); }
inline DataField op_A(const ForwardOperator& op, const ImageField& f) { return op.apply(f); }
inline ImageField op_A_adjoint(const ForwardOperator& op, const DataField& g) { return op.adjoint(g); }

/// Samples on the whole (x, y) plane, rows y = (r - n_y + 1/2) dx for
/// r = 0 .. 2 n_y - 1 (lower half first).
class FullPlaneField {
 public:
  FullPlaneField(const Grid2D& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != 2 * grid_.image_size()) throw ShapeMismatch("full-plane field has wrong size");
  }

  static FullPlaneField from_halves(const ImageField& upper, const ImageField& lower_reflected) {
    require_same_grid(upper, lower_reflected);
    const Grid2D& g = upper.grid();
    const std::size_t nx = g.nx(), ny = g.ny();
    std::vector<double> v(2 * nx * ny);
    for (std::size_t k = 0; k < ny; ++k)
      for (std::size_t i = 0; i < nx; ++i) {
        v[(ny + k) * nx + i] = upper(k, i);
        v[(ny - 1 - k) * nx + i] = lower_reflected(k, i);
      }
    return {g, std::move(v)};
  }

  const Grid2D& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double y_node(std::size_t r) const {
    return (static_cast<double>(r) - static_cast<double>(grid_.ny()) + 0.5) * grid_.dx();
  }

  friend bool operator==(const FullPlaneField&, const FullPlaneField&) = default;

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

/// (S f)(x, y) = f(x, -y).
inline FullPlaneField reflect(const FullPlaneField& f) {
  const std::size_t nx = f.grid().nx(), rows = 2 * f.grid().ny();
  std::vector<double> v(f.values().size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < nx; ++i) v[r * nx + i] = f.values()[(rows - 1 - r) * nx + i];
  return {f.grid(), std::move(v)};
}

/// Upper part P_+ f and the reflected lower part S P_- f, both on the half grid.
struct HalfSpaceSplit {
  ImageField plus;
  ImageField minus;
};

inline HalfSpaceSplit extend_full_plane(const FullPlaneField& f) {
  const Grid2D& g = f.grid();
  const std::size_t nx = g.nx(), ny = g.ny();
  std::vector<double> up(nx * ny), down(nx * ny);
  for (std::size_t k = 0; k < ny; ++k)
    for (std::size_t i = 0; i < nx; ++i) {
      up[k * nx + i] = f.values()[(ny + k) * nx + i];
      down[k * nx + i] = f.values()[(ny - 1 - k) * nx + i];
    }
  return {ImageField(g, std::move(up)), ImageField(g, std::move(down))};
}

/// Full-plane operator: the t > 0 trace is A P_+ f, the t < 0 trace is
/// (A S P_- f) reflected in time, returned here on positive times.
struct DataPair {
  DataField upper;
  DataField lower;

  double norm_squared() const {
    return inner_product(upper, upper) + inner_product(lower, lower);
  }
};

inline DataPair op_A_full(const ForwardOperator& op, const FullPlaneField& f) {
  if (!(f.grid() == op.grid())) throw GridMismatch("full-plane field grid differs from operator grid");
  HalfSpaceSplit split = extend_full_plane(f);
  return {op.apply(split.plus), op.apply(split.minus)};
}

}  // namespace pat

#pragma once

// Sampling lattice and field containers.
//
// Layout conventions used everywhere in the library:
//   * x is the detector axis, centered on 0: x_i = (i + 1/2) dx - n_x dx / 2.
//   * y is depth, cell centered: y_k = (k + 1/2) dx, so no node sits on y = 0.
//   * t is time, cell centered:  t_m = (m + 1/2) dt, so no node sits on t = 0.
//   * values are stored row-major with one row per y (image) or t (data)
//     index and x contiguous.
// Sound speed is 1; physical units only enter through dx and dt.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pat/errors.hpp"

namespace pat {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
  int l = 0;
  while ((std::size_t{1} << l) < n) ++l;
  return l;
}

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Axis-aligned rectangle in the (x, y) image plane.
struct Box {
  Interval x;
  Interval y;

  bool contains(double px, double py) const { return x.contains(px) && y.contains(py); }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Uniform image/detector/time lattice. Image cells are square (dy = dx).
class Grid2D {
 public:
  Grid2D(std::size_t n_x, std::size_t n_y, std::size_t n_t, double delta_x, double delta_t)
      : n_x_(n_x), n_y_(n_y), n_t_(n_t), dx_(delta_x), dt_(delta_t) {
    auto check = [](std::size_t n, const char* name) {
      if (n < 2 || !is_power_of_two(n))
        throw InvalidGrid(std::string(name) + " = " + std::to_string(n) +
                          " is not a power of two >= 2");
    };
    check(n_x, "n_x");
    check(n_y, "n_y");
    check(n_t, "n_t");
    if (!(delta_x > 0.0) || !std::isfinite(delta_x))
      throw InvalidGrid("delta_x must be positive and finite");
    if (!(delta_t > 0.0) || !std::isfinite(delta_t))
      throw InvalidGrid("delta_t must be positive and finite");
  }

  std::size_t nx() const { return n_x_; }
  std::size_t ny() const { return n_y_; }
  std::size_t nt() const { return n_t_; }
  double dx() const { return dx_; }
  double dt() const { return dt_; }

  std::size_t image_size() const { return n_x_ * n_y_; }
  std::size_t data_size() const { return n_x_ * n_t_; }

  double x_node(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) * dx_ - 0.5 * static_cast<double>(n_x_) * dx_;
  }
  double y_node(std::size_t k) const { return (static_cast<double>(k) + 0.5) * dx_; }
  double t_node(std::size_t m) const { return (static_cast<double>(m) + 0.5) * dt_; }

  Interval x_extent() const {
    const double half = 0.5 * static_cast<double>(n_x_) * dx_;
    return {-half, half};
  }
  Interval y_extent() const { return {0.0, static_cast<double>(n_y_) * dx_}; }
  double t_max() const { return static_cast<double>(n_t_) * dt_; }

  /// True iff both step sizes resolve a signal of essential bandwidth omega.
  bool is_nyquist_ok(double omega) const {
    const double limit = std::numbers::pi / omega;
    return dx_ <= limit && dt_ <= limit;
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  std::size_t n_x_;
  std::size_t n_y_;
  std::size_t n_t_;
  double dx_;
  double dt_;
};

inline Grid2D make_grid(std::size_t n_x, std::size_t n_y, std::size_t n_t, double delta_x,
                        double delta_t) {
  return Grid2D(n_x, n_y, n_t, delta_x, delta_t);
}

enum class FieldKind { Image, Data };

/// Real samples on either the image lattice (rows = y) or the detector
/// lattice (rows = t). Immutable once constructed.
template <FieldKind Kind>
class Field {
 public:
  static constexpr FieldKind kind = Kind;

  explicit Field(const Grid2D& grid) : grid_(grid), values_(grid_size(grid), 0.0) {}

  Field(const Grid2D& grid, std::vector<double> values, std::optional<Box> support = {})
      : grid_(grid), values_(std::move(values)), support_(support) {
    if (values_.size() != grid_size(grid_))
      throw ShapeMismatch("field has " + std::to_string(values_.size()) + " values, grid needs " +
                          std::to_string(grid_size(grid_)));
    for (double v : values_)
      if (!std::isfinite(v)) throw InvalidField("non-finite sample");
    if (support_) check_support();
  }

  static std::size_t grid_size(const Grid2D& g) {
    return Kind == FieldKind::Image ? g.image_size() : g.data_size();
  }

  const Grid2D& grid() const { return grid_; }
  std::size_t cols() const { return grid_.nx(); }
  std::size_t rows() const { return Kind == FieldKind::Image ? grid_.ny() : grid_.nt(); }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  double operator()(std::size_t row, std::size_t col) const { return values_[row * cols() + col]; }
  const std::optional<Box>& support_box() const { return support_; }

  /// Cell measure of the Riemann-sum inner product.
  double cell_measure() const {
    return Kind == FieldKind::Image ? grid_.dx() * grid_.dx() : grid_.dx() * grid_.dt();
  }

  /// Moves the samples out, leaving the field empty.
  std::vector<double> release() && { return std::move(values_); }

 private:
  void check_support() const {
    // A cell counts as outside only if it lies entirely outside the box.
    const double h = 0.5 * grid_.dx();
    for (std::size_t r = 0; r < rows(); ++r) {
      const double y = grid_.y_node(r);
      for (std::size_t c = 0; c < cols(); ++c) {
        const double x = grid_.x_node(c);
        const bool outside = x + h < support_->x.lo || x - h > support_->x.hi ||
                             y + h < support_->y.lo || y - h > support_->y.hi;
        if (outside && values_[r * cols() + c] != 0.0)
          throw SupportViolation("nonzero sample outside the declared support box");
      }
    }
  }

  Grid2D grid_;
  std::vector<double> values_;
  std::optional<Box> support_;
};

using ImageField = Field<FieldKind::Image>;
using DataField = Field<FieldKind::Data>;

template <FieldKind K>
void require_same_grid(const Field<K>& a, const Field<K>& b) {
  if (!(a.grid() == b.grid())) throw GridMismatch("fields live on different grids");
}

/// Riemann-sum approximation of the L2 inner product.
template <FieldKind K>
double inner_product(const Field<K>& a, const Field<K>& b) {
  require_same_grid(a, b);
  const auto va = a.values();
  const auto vb = b.values();
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  return s * a.cell_measure();
}

template <FieldKind K>
double norm(const Field<K>& a) {
  return std::sqrt(inner_product(a, a));
}

// Small value-semantic arithmetic helpers; each returns a new field.

template <FieldKind K, class Fn>
Field<K> map(const Field<K>& a, Fn fn) {
  std::vector<double> out(a.size());
  const auto v = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = fn(v[i]);
  return Field<K>(a.grid(), std::move(out));
}

template <FieldKind K>
Field<K> scaled(const Field<K>& a, double s) {
  return map(a, [s](double v) { return s * v; });
}

template <FieldKind K>
Field<K> axpby(double alpha, const Field<K>& a, double beta, const Field<K>& b) {
  require_same_grid(a, b);
  std::vector<double> out(a.size());
  const auto va = a.values();
  const auto vb = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * va[i] + beta * vb[i];
  return Field<K>(a.grid(), std::move(out));
}

template <FieldKind K>
Field<K> operator+(const Field<K>& a, const Field<K>& b) {
  return axpby(1.0, a, 1.0, b);
}

template <FieldKind K>
Field<K> operator-(const Field<K>& a, const Field<K>& b) {
  return axpby(1.0, a, -1.0, b);
}

}  // namespace pat

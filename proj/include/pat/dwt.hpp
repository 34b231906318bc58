#pragma once

// Periodic orthonormal 2-D discrete wavelet transform (Daubechies family).
//
// Coefficients approximate continuum L2 inner products <psi_lambda, f>, i.e.
// the raw orthonormal filter bank output is multiplied by the cell width dx.
// With that scaling the transform is an isometry from ImageField (with its
// cell-measure inner product) onto plain l2 coefficient space.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pat/daubechies.hpp"
#include "pat/errors.hpp"
#include "pat/grid.hpp"

namespace pat {

enum class WaveletFamily { Haar, Daubechies };
enum class WaveletBoundary { Periodic };

class WaveletSpec {
 public:
  WaveletSpec(WaveletFamily family, int order, int levels,
              WaveletBoundary boundary = WaveletBoundary::Periodic)
      : family_(family), order_(family == WaveletFamily::Haar ? 1 : order), levels_(levels),
        boundary_(boundary) {
    if (order_ < 1 || order_ > 10)
      throw InvalidParams("Daubechies order must be in [1, 10], got " + std::to_string(order));
    if (levels < 1) throw InvalidParams("wavelet levels must be positive");
    const auto h = filters::daubechies(order_);
    low_.assign(h.begin(), h.end());
    high_.resize(low_.size());
    const std::size_t m = low_.size();
    for (std::size_t k = 0; k < m; ++k)
      high_[k] = ((k % 2 == 0) ? 1.0 : -1.0) * low_[m - 1 - k];
    validate();
  }

  static WaveletSpec haar(int levels) { return {WaveletFamily::Haar, 1, levels}; }
  static WaveletSpec daubechies(int order, int levels) {
    return {WaveletFamily::Daubechies, order, levels};
  }

  /// Parses "haar" or "dbN".
  static WaveletSpec parse(const std::string& name, int levels) {
    if (name == "haar") return haar(levels);
    if (name.size() > 2 && name.rfind("db", 0) == 0) {
      try {
        std::size_t used = 0;
        const int order = std::stoi(name.substr(2), &used);
        if (used == name.size() - 2) return daubechies(order, levels);
      } catch (const std::exception&) {
      }
    }
    throw InvalidParams("unknown wavelet family '" + name + "'");
  }

  std::string name() const {
    return family_ == WaveletFamily::Haar ? "haar" : "db" + std::to_string(order_);
  }

  WaveletFamily family() const { return family_; }
  int order() const { return order_; }
  int levels() const { return levels_; }
  WaveletBoundary boundary() const { return boundary_; }
  std::span<const double> low_pass() const { return low_; }
  std::span<const double> high_pass() const { return high_; }

  friend bool operator==(const WaveletSpec& a, const WaveletSpec& b) {
    return a.family_ == b.family_ && a.order_ == b.order_ && a.levels_ == b.levels_ &&
           a.boundary_ == b.boundary_;
  }

 private:
  void validate() const {
    double sum = 0.0;
    for (double v : low_) sum += v;
    if (std::abs(sum - std::sqrt(2.0)) > 1e-12) throw InvalidParams("filter taps do not sum to sqrt(2)");
    const std::size_t m = low_.size();
    for (std::size_t shift = 0; shift < m; shift += 2) {
      double acc = 0.0;
      for (std::size_t k = 0; k + shift < m; ++k) acc += low_[k] * low_[k + shift];
      const double expected = shift == 0 ? 1.0 : 0.0;
      if (std::abs(acc - expected) > 1e-12) throw InvalidParams("filter is not orthonormal");
    }
  }

  WaveletFamily family_;
  int order_;
  int levels_;
  WaveletBoundary boundary_;
  std::vector<double> low_;
  std::vector<double> high_;
};

/// Coefficient address. Level 0 / orientation 0 is the coarse scaling block;
/// detail levels run 1 (coarsest) .. J (finest) with orientation 1 = psi(x)phi(y),
/// 2 = phi(x)psi(y), 3 = psi(x)psi(y).
struct WaveletIndex {
  int level = 0;
  int orientation = 0;
  std::size_t kx = 0;
  std::size_t ky = 0;

  friend bool operator==(const WaveletIndex&, const WaveletIndex&) = default;
};

/// Multi-level coefficient tree, stored contiguously: coarse block first,
/// then detail levels from coarse to fine, three orientation blocks each.
class WaveletPyramid {
 public:
  WaveletPyramid(const Grid2D& grid, WaveletSpec spec) : grid_(grid), spec_(std::move(spec)) {
    if (grid_.nx() != grid_.ny())
      throw ShapeMismatch("wavelet transform needs a square image grid");
    const int max_levels = log2_exact(grid_.nx());
    if (spec_.levels() > max_levels)
      throw DepthTooLarge(std::to_string(spec_.levels()) + " levels requested, grid of side " +
                          std::to_string(grid_.nx()) + " allows " + std::to_string(max_levels));
    coeffs_.assign(grid_.image_size(), 0.0);
  }

  const Grid2D& grid() const { return grid_; }
  const WaveletSpec& spec() const { return spec_; }
  int levels() const { return spec_.levels(); }
  std::size_t side() const { return grid_.nx(); }
  std::size_t size() const { return coeffs_.size(); }

  /// Side length of the coarse block or of a detail block at `level`.
  std::size_t block_side(int level) const {
    const int shift = level == 0 ? levels() : levels() - level + 1;
    return side() >> shift;
  }

  std::size_t offset(int level, int orientation) const {
    const std::size_t c = block_side(0);
    if (level == 0) return 0;
    std::size_t off = c * c;
    for (int j = 1; j < level; ++j) off += 3 * block_side(j) * block_side(j);
    const std::size_t s = block_side(level);
    return off + static_cast<std::size_t>(orientation - 1) * s * s;
  }

  std::span<double> coarse() { return {coeffs_.data(), block_side(0) * block_side(0)}; }
  std::span<const double> coarse() const { return {coeffs_.data(), block_side(0) * block_side(0)}; }

  std::span<double> detail(int level, int orientation) {
    check_block(level, orientation);
    const std::size_t s = block_side(level);
    return {coeffs_.data() + offset(level, orientation), s * s};
  }
  std::span<const double> detail(int level, int orientation) const {
    check_block(level, orientation);
    const std::size_t s = block_side(level);
    return {coeffs_.data() + offset(level, orientation), s * s};
  }

  /// All coefficients of one level (coarse block for level 0, the three
  /// orientation blocks otherwise); contiguous by construction.
  std::span<double> level_span(int level) {
    const std::size_t s = block_side(level);
    return {coeffs_.data() + offset(level, level == 0 ? 0 : 1), (level == 0 ? 1 : 3) * s * s};
  }
  std::span<const double> level_span(int level) const {
    const std::size_t s = block_side(level);
    return {coeffs_.data() + offset(level, level == 0 ? 0 : 1), (level == 0 ? 1 : 3) * s * s};
  }

  std::span<double> data() { return coeffs_; }
  std::span<const double> data() const { return coeffs_; }

  bool is_valid(const WaveletIndex& idx) const {
    if (idx.level < 0 || idx.level > levels()) return false;
    if (idx.level == 0 ? idx.orientation != 0 : (idx.orientation < 1 || idx.orientation > 3))
      return false;
    const std::size_t s = block_side(idx.level);
    return idx.kx < s && idx.ky < s;
  }

  std::size_t flat_index(const WaveletIndex& idx) const {
    if (!is_valid(idx)) throw InvalidIndex("wavelet index out of range");
    return offset(idx.level, idx.orientation) + idx.ky * block_side(idx.level) + idx.kx;
  }

  WaveletIndex index_of(std::size_t flat) const {
    if (flat >= size()) throw InvalidIndex("flat index out of range");
    for (int level = levels(); level >= 0; --level) {
      const int first = level == 0 ? 0 : 1;
      const std::size_t off = offset(level, first);
      if (flat >= off) {
        const std::size_t s = block_side(level);
        const std::size_t local = flat - off;
        const int orientation = level == 0 ? 0 : 1 + static_cast<int>(local / (s * s));
        const std::size_t within = local % (s * s);
        return {level, orientation, within % s, within / s};
      }
    }
    return {};
  }

  double& operator[](const WaveletIndex& idx) { return coeffs_[flat_index(idx)]; }
  double operator[](const WaveletIndex& idx) const { return coeffs_[flat_index(idx)]; }

  bool same_layout(const WaveletPyramid& other) const {
    return grid_ == other.grid_ && spec_ == other.spec_;
  }

 private:
  void check_block(int level, int orientation) const {
    if (level < 1 || level > levels() || orientation < 1 || orientation > 3)
      throw InvalidIndex("detail block (" + std::to_string(level) + ", " +
                         std::to_string(orientation) + ") does not exist");
  }

  Grid2D grid_;
  WaveletSpec spec_;
  std::vector<double> coeffs_;
};

namespace detail {

// One periodic analysis step on a strided sequence of even length n.
inline void analyze_1d(const double* in, std::size_t stride, std::size_t n, std::span<const double> lo,
                       std::span<const double> hi, double* approx, double* det) {
  const std::size_t m = lo.size();
  for (std::size_t k = 0; k < n / 2; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      const double v = in[((2 * k + t) % n) * stride];
      a += lo[t] * v;
      d += hi[t] * v;
    }
    approx[k] = a;
    det[k] = d;
  }
}

// Transpose of analyze_1d.
inline void synthesize_1d(const double* approx, const double* det, std::size_t n,
                          std::span<const double> lo, std::span<const double> hi, double* out,
                          std::size_t stride) {
  const std::size_t m = lo.size();
  for (std::size_t i = 0; i < n; ++i) out[i * stride] = 0.0;
  for (std::size_t k = 0; k < n / 2; ++k) {
    for (std::size_t t = 0; t < m; ++t) {
      out[((2 * k + t) % n) * stride] += lo[t] * approx[k] + hi[t] * det[k];
    }
  }
}

// In-place Mallat-layout transform of a side x side row-major buffer.
inline void mallat_forward(std::vector<double>& buf, std::size_t side, const WaveletSpec& spec) {
  const auto lo = spec.low_pass();
  const auto hi = spec.high_pass();
  std::vector<double> line(side), approx(side / 2), det(side / 2);
  std::size_t s = side;
  for (int level = 0; level < spec.levels(); ++level, s /= 2) {
    for (std::size_t r = 0; r < s; ++r) {
      double* row = buf.data() + r * side;
      std::copy(row, row + s, line.begin());
      analyze_1d(line.data(), 1, s, lo, hi, approx.data(), det.data());
      std::copy(approx.begin(), approx.begin() + s / 2, row);
      std::copy(det.begin(), det.begin() + s / 2, row + s / 2);
    }
    for (std::size_t c = 0; c < s; ++c) {
      for (std::size_t r = 0; r < s; ++r) line[r] = buf[r * side + c];
      analyze_1d(line.data(), 1, s, lo, hi, approx.data(), det.data());
      for (std::size_t r = 0; r < s / 2; ++r) {
        buf[r * side + c] = approx[r];
        buf[(r + s / 2) * side + c] = det[r];
      }
    }
  }
}

inline void mallat_inverse(std::vector<double>& buf, std::size_t side, const WaveletSpec& spec) {
  const auto lo = spec.low_pass();
  const auto hi = spec.high_pass();
  std::vector<double> line(side), approx(side / 2), det(side / 2);
  std::size_t s = side >> (spec.levels() - 1);
  for (int level = 0; level < spec.levels(); ++level, s *= 2) {
    for (std::size_t c = 0; c < s; ++c) {
      for (std::size_t r = 0; r < s / 2; ++r) {
        approx[r] = buf[r * side + c];
        det[r] = buf[(r + s / 2) * side + c];
      }
      synthesize_1d(approx.data(), det.data(), s, lo, hi, line.data(), 1);
      for (std::size_t r = 0; r < s; ++r) buf[r * side + c] = line[r];
    }
    for (std::size_t r = 0; r < s; ++r) {
      double* row = buf.data() + r * side;
      std::copy(row, row + s / 2, approx.begin());
      std::copy(row + s / 2, row + s, det.begin());
      synthesize_1d(approx.data(), det.data(), s, lo, hi, row, 1);
    }
  }
}

// Copies between the Mallat layout and the pyramid's block layout.
template <bool ToPyramid>
void shuffle_blocks(std::vector<double>& mallat, WaveletPyramid& p) {
  const std::size_t side = p.side();
  auto move_block = [&](std::span<double> block, std::size_t row0, std::size_t col0, std::size_t s) {
    for (std::size_t r = 0; r < s; ++r)
      for (std::size_t c = 0; c < s; ++c) {
        double& m = mallat[(row0 + r) * side + col0 + c];
        double& b = block[r * s + c];
        if constexpr (ToPyramid) b = m; else m = b;
      }
  };
  const std::size_t c0 = p.block_side(0);
  move_block(p.coarse(), 0, 0, c0);
  for (int level = 1; level <= p.levels(); ++level) {
    const std::size_t s = p.block_side(level);
    move_block(p.detail(level, 1), 0, s, s);  // high in x, low in y
    move_block(p.detail(level, 2), s, 0, s);  // low in x, high in y
    move_block(p.detail(level, 3), s, s, s);
  }
}

}  // namespace detail

inline WaveletPyramid dwt2_forward(const ImageField& f, const WaveletSpec& spec) {
  WaveletPyramid p(f.grid(), spec);
  const std::size_t side = p.side();
  std::vector<double> buf(f.values().begin(), f.values().end());
  detail::mallat_forward(buf, side, spec);
  const double dx = f.grid().dx();
  for (double& v : buf) v *= dx;
  detail::shuffle_blocks<true>(buf, p);
  return p;
}

inline ImageField dwt2_inverse(const WaveletPyramid& p) {
  WaveletPyramid copy = p;
  std::vector<double> buf(p.size(), 0.0);
  detail::shuffle_blocks<false>(buf, copy);
  detail::mallat_inverse(buf, p.side(), p.spec());
  const double inv_dx = 1.0 / p.grid().dx();
  for (double& v : buf) v *= inv_dx;
  return ImageField(p.grid(), std::move(buf));
}

/// Basis image psi_lambda: inverse transform of a unit coefficient.
inline ImageField wavelet_basis_image(const Grid2D& grid, const WaveletSpec& spec,
                                      const WaveletIndex& idx) {
  WaveletPyramid p(grid, spec);
  p[idx] = 1.0;
  return dwt2_inverse(p);
}

/// Besov sequence norm ( sum_j 2^{j s q} ||c_j||_pp^q )^{1/q}, s = r + d/2 - d/pp.
/// The coarse block enters as level j = 0.
inline double besov_norm(const WaveletPyramid& p, double r, double pp, double q, int d = 2) {
  if (!(pp >= 1.0) || !(q >= 1.0)) throw InvalidParams("Besov exponents must be >= 1");
  if (!(r >= 0.0)) throw InvalidParams("Besov smoothness must be >= 0");
  if (d != 2) throw InvalidParams("only d = 2 is supported");
  const double s = r + 0.5 * d - d / pp;
  double total = 0.0;
  for (int j = 0; j <= p.levels(); ++j) {
    double lp = 0.0;
    for (double c : p.level_span(j)) lp += std::pow(std::abs(c), pp);
    lp = std::pow(lp, 1.0 / pp);
    total += std::pow(2.0, j * s * q) * std::pow(lp, q);
  }
  return std::pow(total, 1.0 / q);
}

// Coefficient-space helpers.

inline double l2_norm(const WaveletPyramid& p) {
  double s = 0.0;
  for (double v : p.data()) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const WaveletPyramid& p) {
  double m = 0.0;
  for (double v : p.data()) m = std::max(m, std::abs(v));
  return m;
}

inline WaveletPyramid axpby(double alpha, const WaveletPyramid& a, double beta, const WaveletPyramid& b) {
  if (!a.same_layout(b)) throw ShapeMismatch("pyramids have different layouts");
  WaveletPyramid out = a;
  auto o = out.data();
  auto vb = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * o[i] + beta * vb[i];
  return out;
}

}  // namespace pat

#pragma once

// Vaguelette transform V g = (<u_lambda, g>)_lambda with u_lambda = A psi_lambda,
// computed as W A* g (no vaguelette is ever materialized for reconstruction).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "pat/dwt.hpp"
#include "pat/wave_operator.hpp"

namespace pat {

struct VagueletteCoeffs {
  WaveletPyramid pyramid;
};

template <class Op = ForwardOperator>
inline VagueletteCoeffs vaguelette_transform(const Op& op, const DataField& g,
                                             const WaveletSpec& spec) {
  return {dwt2_forward(op.adjoint(g), spec)};
}

/// u_lambda = A psi_lambda.
inline DataField synthesize_vaguelette(const ForwardOperator& op, const WaveletIndex& lambda,
                                       const WaveletSpec& spec) {
  WaveletPyramid layout(op.grid(), spec);
  if (!layout.is_valid(lambda)) throw InvalidIndex("vaguelette index out of range");
  return op.apply(wavelet_basis_image(op.grid(), spec, lambda));
}

/// f = sum_lambda <g, u_lambda> psi_lambda; as a discrete map this is A*.
inline ImageField wvd_reconstruct_exact(const ForwardOperator& op, const DataField& g,
                                        const WaveletSpec& spec) {
  return dwt2_inverse(vaguelette_transform(op, g, spec).pyramid);
}

/// h = y^{1/2} sum_lambda <t^{-1/2} g_U, u_lambda> psi_lambda for data of the unweighted model.
inline ImageField wvd_reconstruct_U_data(const ForwardOperator& op, const DataField& g_u,
                                         const WaveletSpec& spec) {
  const Grid2D& grid = op.grid();
  std::vector<double> weighted(g_u.values().begin(), g_u.values().end());
  for (std::size_t m = 0; m < grid.nt(); ++m)
    for (std::size_t i = 0; i < grid.nx(); ++i)
      weighted[m * grid.nx() + i] /= std::sqrt(grid.t_node(m));
  std::vector<double> f = std::move(wvd_reconstruct_exact(op, DataField(grid, std::move(weighted)), spec)).release();
  for (std::size_t k = 0; k < grid.ny(); ++k)
    for (std::size_t i = 0; i < grid.nx(); ++i) f[k * grid.nx() + i] *= std::sqrt(grid.y_node(k));
  return ImageField(grid, std::move(f));
}

/// Gram matrix <u_a, u_b> over a list of indices, row-major.
struct GramSample {
  std::vector<WaveletIndex> indices;
  std::vector<double> entries;

  double at(std::size_t a, std::size_t b) const { return entries[a * indices.size() + b]; }
  double max_diagonal_defect() const {
    double m = 0.0;
    for (std::size_t a = 0; a < indices.size(); ++a) m = std::max(m, std::abs(at(a, a) - 1.0));
    return m;
  }
  double max_off_diagonal() const {
    double m = 0.0;
    for (std::size_t a = 0; a < indices.size(); ++a)
      for (std::size_t b = 0; b < indices.size(); ++b)
        if (a != b) m = std::max(m, std::abs(at(a, b)));
    return m;
  }
};

inline GramSample vaguelette_gram(const ForwardOperator& op, const WaveletSpec& spec,
                                  std::vector<WaveletIndex> indices) {
  std::vector<DataField> u;
  u.reserve(indices.size());
  for (const auto& idx : indices) u.push_back(synthesize_vaguelette(op, idx, spec));
  const std::size_t n = indices.size();
  std::vector<double> entries(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) entries[a * n + b] = entries[b * n + a] = inner_product(u[a], u[b]);
  return {std::move(indices), std::move(entries)};
}

}  // namespace pat

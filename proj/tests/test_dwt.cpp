#include <gtest/gtest.h>

#include <random>

#include "pat/dwt.hpp"

using namespace pat;

namespace {

ImageField random_field(const Grid2D& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> v(g.image_size());
  for (auto& x : v) x = n(rng);
  return ImageField(g, v);
}

double rel_diff(const ImageField& a, const ImageField& b) { return norm(a - b) / norm(b); }

}  // namespace

TEST(WaveletSpec, FiltersValidate) {
  for (int n = 1; n <= 10; ++n) EXPECT_NO_THROW(WaveletSpec::daubechies(n, 1));
  EXPECT_THROW(WaveletSpec::daubechies(11, 1), InvalidParams);
  EXPECT_EQ(WaveletSpec::parse("db4", 3).order(), 4);
  EXPECT_EQ(WaveletSpec::parse("haar", 3).family(), WaveletFamily::Haar);
  EXPECT_THROW(WaveletSpec::parse("sym4", 3), InvalidParams);
}

TEST(Dwt, ZeroInZeroOut) {
  const Grid2D g = make_grid(16, 16, 16, 1.0 / 16, 1.0 / 16);
  const auto p = dwt2_forward(ImageField(g), WaveletSpec::daubechies(2, 2));
  EXPECT_EQ(max_abs(p), 0.0);
  EXPECT_EQ(norm(dwt2_inverse(p)), 0.0);
}

TEST(Dwt, HaarConstant) {
  const double dx = 0.5, c = 3.0;
  const Grid2D g = make_grid(2, 2, 2, dx, dx);
  const auto p = dwt2_forward(ImageField(g, std::vector<double>(4, c)), WaveletSpec::haar(1));
  EXPECT_NEAR(p.coarse()[0], 2 * c * dx, 1e-14);
  for (int o = 1; o <= 3; ++o) EXPECT_NEAR(p.detail(1, o)[0], 0.0, 1e-14);
}

TEST(Dwt, DepthTooLarge) {
  const Grid2D g = make_grid(16, 16, 16, 1.0 / 16, 1.0 / 16);
  EXPECT_THROW(dwt2_forward(ImageField(g), WaveletSpec::daubechies(2, 5)), DepthTooLarge);
  EXPECT_NO_THROW(dwt2_forward(ImageField(g), WaveletSpec::daubechies(2, 3)));
}

TEST(Dwt, NonSquareRejected) {
  const Grid2D g = make_grid(16, 8, 16, 1.0 / 16, 1.0 / 16);
  EXPECT_THROW(dwt2_forward(ImageField(g), WaveletSpec::haar(1)), ShapeMismatch);
}

TEST(Dwt, MatchesBasisInnerProducts) {
  const Grid2D g = make_grid(16, 16, 16, 1.0 / 16, 1.0 / 16);
  const auto spec = WaveletSpec::daubechies(4, 2);
  const ImageField f = random_field(g, 11);
  const auto p = dwt2_forward(f, spec);
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const ImageField psi = wavelet_basis_image(g, spec, p.index_of(k));
    worst = std::max(worst, std::abs(inner_product(psi, f) - p.data()[k]));
  }
  EXPECT_LT(worst, 1e-10 * l2_norm(p));
}

TEST(Dwt, RoundTripAndParseval) {
  const Grid2D g = make_grid(64, 64, 64, 1.0 / 64, 1.0 / 64);
  for (int order : {1, 2, 4, 10}) {
    const auto spec = WaveletSpec::daubechies(order, 4);
    const ImageField f = random_field(g, 5 + order);
    const auto p = dwt2_forward(f, spec);
    EXPECT_LT(rel_diff(dwt2_inverse(p), f), 1e-10) << order;
    EXPECT_NEAR(l2_norm(p), norm(f), 1e-10 * norm(f)) << order;
  }
}

TEST(Dwt, AdjointIdentity) {
  const Grid2D g = make_grid(32, 32, 32, 1.0 / 32, 1.0 / 32);
  const auto spec = WaveletSpec::daubechies(3, 3);
  const ImageField f = random_field(g, 1);
  auto c = dwt2_forward(random_field(g, 2), spec);
  const auto wf = dwt2_forward(f, spec);
  double lhs = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) lhs += wf.data()[k] * c.data()[k];
  const double rhs = inner_product(f, dwt2_inverse(c));
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::abs(lhs));
}

TEST(Dwt, Orthonormality) {
  const Grid2D g = make_grid(32, 32, 32, 1.0 / 32, 1.0 / 32);
  const auto spec = WaveletSpec::daubechies(4, 3);
  WaveletPyramid layout(g, spec);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, layout.size() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = layout.index_of(pick(rng));
    auto b = layout.index_of(pick(rng));
    const ImageField pa = wavelet_basis_image(g, spec, a);
    const ImageField pb = wavelet_basis_image(g, spec, b);
    EXPECT_NEAR(inner_product(pa, pa), 1.0, 1e-10);
    EXPECT_NEAR(inner_product(pa, pb), a == b ? 1.0 : 0.0, 1e-10);
  }
}

TEST(Dwt, Linearity) {
  const Grid2D g = make_grid(32, 32, 32, 1.0 / 32, 1.0 / 32);
  const auto spec = WaveletSpec::daubechies(5, 3);
  const ImageField f = random_field(g, 3), h = random_field(g, 4);
  const auto lhs = dwt2_forward(axpby(1.5, f, -0.25, h), spec);
  const auto rhs = axpby(1.5, dwt2_forward(f, spec), -0.25, dwt2_forward(h, spec));
  EXPECT_LT(l2_norm(axpby(1.0, lhs, -1.0, rhs)), 1e-13 * l2_norm(lhs));
}

TEST(Dwt, VanishingMoments) {
  const std::size_t n = 64;
  const Grid2D g = make_grid(n, n, n, 1.0, 1.0);
  for (int order : {2, 3, 4}) {
    const auto spec = WaveletSpec::daubechies(order, 1);
    std::vector<double> v(n * n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / 8.0;
        v[k * n + i] = std::pow(x, order - 1) - 2.0 * x + 1.0;
      }
    const auto p = dwt2_forward(ImageField(g, v), spec);
    // x-detail coefficients whose filter support avoids the periodic seam
    const auto d = p.detail(1, 1);
    const std::size_t half = n / 2;
    const std::size_t taps = 2 * static_cast<std::size_t>(order);
    double worst = 0.0;
    for (std::size_t ky = 0; ky < half; ++ky)
      for (std::size_t kx = 0; 2 * kx + taps <= n; ++kx) worst = std::max(worst, std::abs(d[ky * half + kx]));
    EXPECT_LT(worst, 1e-8) << order;
  }
}

TEST(Besov, ParsevalCaseAndHomogeneity) {
  const Grid2D g = make_grid(32, 32, 32, 1.0 / 32, 1.0 / 32);
  const auto spec = WaveletSpec::daubechies(2, 3);
  const ImageField f = random_field(g, 8);
  const auto p = dwt2_forward(f, spec);
  EXPECT_NEAR(besov_norm(p, 0.0, 2.0, 2.0), norm(f), 1e-10 * norm(f));
  const auto p3 = axpby(-3.0, p, 0.0, p);
  EXPECT_NEAR(besov_norm(p3, 1.0, 1.0, 1.5), 3.0 * besov_norm(p, 1.0, 1.0, 1.5), 1e-10 * besov_norm(p3, 1.0, 1.0, 1.5));
  EXPECT_EQ(besov_norm(WaveletPyramid(g, spec), 1.0, 1.0, 1.0), 0.0);
  EXPECT_THROW(besov_norm(p, 0.0, 0.5, 1.0), InvalidParams);
}

TEST(Besov, SingleCoefficientWeight) {
  const Grid2D g = make_grid(32, 32, 32, 1.0 / 32, 1.0 / 32);
  WaveletPyramid p(g, WaveletSpec::daubechies(2, 3));
  p[{3, 2, 1, 1}] = 1.0;
  // s = r + d/2 - d/p = 1 + 1 - 2 = 0
  EXPECT_NEAR(besov_norm(p, 1.0, 1.0, 1.0), 1.0, 1e-14);
  // s = 2 + 1 - 2 = 1 -> weight 2^3
  EXPECT_NEAR(besov_norm(p, 2.0, 1.0, 1.0), 8.0, 1e-12);
}

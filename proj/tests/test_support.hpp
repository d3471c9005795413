#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "scbf/field.hpp"

namespace scbf::testing {

// Random real divergence-free field with amplitudes ~ λ^{-decay}, built
// from std::mt19937_64 so it is independent of the library generator.
inline SpectralField random_field(const SpectrumPtr& spectrum, std::mt19937_64& rng,
                                  double decay = 1.0, double scale = 1.0) {
  std::normal_distribution<double> normal;
  ModeCoeffs raw = ModeCoeffs::Zero(spectrum->size(), 2);
  for (Eigen::Index i = 0; i < spectrum->size(); ++i) {
    const auto& k = spectrum->mode(i);
    if (!StokesSpectrum::is_upper_half(k)) continue;
    const double w = scale * std::pow(double(k.norm2()), -decay);
    for (int c = 0; c < 2; ++c) raw(i, c) = w * Complex(normal(rng), normal(rng));
    raw.row(spectrum->conjugate_index(i)) = raw.row(i).conjugate();
  }
  return leray_project(spectrum, raw);
}

// Point values of Σ_k c_k e^{ik·x} on an n×n grid by direct summation,
// using separable exponential tables. Row-major, index i1*n + i2.
inline std::vector<double> direct_sum(const StokesSpectrum& spectrum,
                                      const std::vector<Complex>& c, int n) {
  const int K = spectrum.k_max();
  std::vector<Complex> table(std::size_t(n) * (2 * K + 1));
  for (int i = 0; i < n; ++i) {
    const double x = 2.0 * std::numbers::pi * i / n;
    for (int k = -K; k <= K; ++k) table[std::size_t(i) * (2 * K + 1) + (k + K)] = std::polar(1.0, k * x);
  }
  std::vector<double> out(std::size_t(n) * n, 0.0);
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      Complex s = 0.0;
      for (Eigen::Index m = 0; m < spectrum.size(); ++m) {
        const auto& k = spectrum.mode(m);
        s += c[m] * table[std::size_t(i1) * (2 * K + 1) + (k.k1 + K)] *
             table[std::size_t(i2) * (2 * K + 1) + (k.k2 + K)];
      }
      out[std::size_t(i1) * n + i2] = s.real();
    }
  }
  return out;
}

// Component j of u, or of ∂_axis u when axis >= 0.
inline std::vector<Complex> component(const SpectralField& u, int j, int axis = -1) {
  std::vector<Complex> c(u.size());
  for (Eigen::Index m = 0; m < u.size(); ++m) {
    const auto& k = u.spectrum().mode(m);
    Complex factor = 1.0;
    if (axis == 0) factor = Complex(0.0, k.k1);
    if (axis == 1) factor = Complex(0.0, k.k2);
    c[m] = factor * u.coeffs()(m, j);
  }
  return c;
}

inline double cell_area(int n) {
  const double h = 2.0 * std::numbers::pi / n;
  return h * h;
}

}  // namespace scbf::testing

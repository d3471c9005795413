#pragma once

#include <vector>

#include <Eigen/Core>

#include "scbf/field.hpp"

namespace scbf {

/// Velocity samples at the collocation points x = 2π(i1, i2)/n, flattened
/// row-major: index i1*n + i2.
struct PhysicalField {
  int n = 0;
  Eigen::ArrayXd u1;
  Eigen::ArrayXd u2;

  double cell_area() const;
};

/// Smallest even grid that resolves quadratic products of K_max-band fields
/// without aliasing into retained modes (2/3 rule: K_max <= n/3).
int collocation_grid(int k_max);

/// Grid for |u|^{r-1}u, twice the collocation resolution.
int damping_grid(int k_max);
/// For odd integer r, |u|^{r-1}u is a polynomial of degree r and the grid
/// n > (r+1)·K_max removes aliasing entirely; otherwise damping_grid(k_max).
int damping_grid(int k_max, double r);

/// Grid on which the trapezoidal rule integrates |u|^p exactly for even
/// integer p (n > p·K_max); never smaller than ceil(p/2)·K_max, and at least
/// the damping grid when p is not an even integer.
int lp_grid(int k_max, double p);

/// Real-to-complex 2D transforms of one grid size. Plans are created once
/// per size and shared; execution is thread-safe and scratch is per call.
class GridTransform {
 public:
  static const GridTransform& for_size(int n);

  int n() const { return n_; }

  /// Σ_k c_k e^{ik·x} at every grid point, for Hermitian mode data c.
  void to_grid(const StokesSpectrum& spectrum, const Eigen::Ref<const Eigen::VectorXcd>& coeffs,
               Eigen::ArrayXd& out) const;
  /// Fourier coefficients of grid data at the retained modes.
  void to_modes(const StokesSpectrum& spectrum, const Eigen::ArrayXd& grid,
                Eigen::Ref<Eigen::VectorXcd> out) const;

  PhysicalField to_physical(const SpectralField& u) const;
  /// Transform back and keep the retained modes; no projection is applied.
  ModeCoeffs to_coeffs(const StokesSpectrum& spectrum, const PhysicalField& u) const;

  GridTransform(const GridTransform&) = delete;
  GridTransform& operator=(const GridTransform&) = delete;
  ~GridTransform();

 private:
  explicit GridTransform(int n);

  int n_;
  void* forward_ = nullptr;
  void* backward_ = nullptr;
};

PhysicalField to_physical(const SpectralField& u, int n);
/// Inverse of to_physical followed by truncation to the retained modes.
SpectralField to_spectral(SpectrumPtr spectrum, const PhysicalField& u);

/// ∫|u|^p dx by trapezoidal quadrature.
double integrate_power(const PhysicalField& u, double p);

/// ‖u‖_{L^p}, p >= 2.
double norm_Lp(const SpectralField& u, double p);

}  // namespace scbf

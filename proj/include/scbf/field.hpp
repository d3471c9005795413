#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Core>

#include "scbf/spectrum.hpp"

namespace scbf {

using Complex = std::complex<double>;

/// One row per retained mode (spectrum order), one column per velocity component.
using ModeCoeffs = Eigen::Matrix<Complex, Eigen::Dynamic, 2>;

/// Velocity field u(x) = Σ_k û(k) e^{ik·x} on [0,2π)², stored as the complex
/// amplitudes of every retained mode (both k and -k). Real fields satisfy
/// û(-k) = conj(û(k)); divergence-free fields satisfy k·û(k) = 0.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(SpectrumPtr spectrum);
  /// Takes the coefficients as given; use leray_project for arbitrary input.
  SpectralField(SpectrumPtr spectrum, ModeCoeffs coeffs);

  const StokesSpectrum& spectrum() const { return *spectrum_; }
  const SpectrumPtr& spectrum_ptr() const { return spectrum_; }
  int k_max() const { return spectrum_->k_max(); }
  Eigen::Index size() const { return coeffs_.rows(); }

  const ModeCoeffs& coeffs() const { return coeffs_; }
  ModeCoeffs& coeffs() { return coeffs_; }

  bool all_finite() const;
  /// max_k |û(-k) - conj(û(k))|
  double hermitian_residual() const;
  /// max_k |k·û(k)| / max(|k||û(k)|, tiny)
  double divergence_residual() const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double s);

 private:
  SpectrumPtr spectrum_;
  ModeCoeffs coeffs_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(double s, SpectralField a);
SpectralField operator*(SpectralField a, double s);

/// Throws shape-mismatch unless both fields share a K_max.
void require_same_shape(const SpectralField& a, const SpectralField& b);

/// û - k (k·û)/|k|² per mode.
SpectralField leray_project(SpectrumPtr spectrum, const ModeCoeffs& raw);
SpectralField leray_project(const SpectralField& raw);

/// Multiplies each coefficient by λ_k.
SpectralField apply_A(const SpectralField& u);

/// (u, w)_ℍ = (2π)² Re Σ_k û(k)·conj(ŵ(k))
double inner_H(const SpectralField& u, const SpectralField& w);
double norm_H2(const SpectralField& u);
double norm_V2(const SpectralField& u);
double norm_H(const SpectralField& u);
double norm_V(const SpectralField& u);
/// ‖A u‖²_ℍ
double norm_A2(const SpectralField& u);

/// Rigorous sup-norm bounds from the coefficients, e.g. ‖u‖_∞ <= Σ|û(k)|.
double sup_bound(const SpectralField& u);
double grad_sup_bound(const SpectralField& u);
double laplacian_sup_bound(const SpectralField& u);

/// Keeps the first m modes of the spectrum ordering; Q_m = I - P_m.
/// When m splits a {k, -k} pair the result is no longer real-valued.
SpectralField project_Pm(const SpectralField& u, Eigen::Index m);
SpectralField project_Qm(const SpectralField& u, Eigen::Index m);

/// Real-valued, divergence-free random field whose mode amplitudes are
/// standard complex Gaussians along the divergence-free direction scaled by
/// `weights` (one entry per mode, evaluated at the upper-half representative).
/// Deterministic in (key, stream, tag); distinct tags give independent streams.
SpectralField gaussian_field(SpectrumPtr spectrum, const Eigen::ArrayXd& weights,
                             std::uint64_t key, std::uint64_t stream, std::uint32_t tag = 3);

/// Uniform sample of the ℍ-ball of the given radius in the Galerkin space.
SpectralField sample_ball(SpectrumPtr spectrum, double radius, std::uint64_t key,
                          std::uint64_t index);

/// Unit divergence-free direction (-k2, k1)/|k| for the mode at position i.
Eigen::Vector2d solenoidal_direction(const WaveVector& k);

}  // namespace scbf

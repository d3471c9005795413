#include "scbf/params.hpp"

#include <cmath>

#include "scbf/error.hpp"

namespace scbf {

void SCBFParams::validate() const {
  require(std::isfinite(mu) && mu > 0.0, ErrorKind::InvalidParameter, "mu must be positive");
  require(std::isfinite(beta) && beta >= 0.0, ErrorKind::InvalidParameter, "beta must be nonnegative");
  require(std::isfinite(r) && r >= 1.0, ErrorKind::InvalidParameter, "r must be >= 1");
  require(epsilon >= 0.0 && epsilon <= 1.0, ErrorKind::InvalidParameter, "epsilon must lie in [0, 1]");
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorKind::InvalidParameter, "alpha must be nonnegative");
  require(std::isfinite(dt) && dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
  require(k_max >= 1, ErrorKind::InvalidParameter, "K_max must be >= 1");
  if (forcing.spectrum_ptr()) {
    require(forcing.k_max() == k_max, ErrorKind::ShapeMismatch, "forcing K_max differs from K_max");
    require(forcing.all_finite(), ErrorKind::InvalidParameter, "forcing is not finite");
  }
}

SpectralField SCBFParams::forcing_field() const {
  if (forcing.spectrum_ptr()) return forcing;
  return SpectralField(spectrum());
}

double SCBFParams::forcing_norm_H2() const {
  return forcing.spectrum_ptr() ? norm_H2(forcing) : 0.0;
}

void require_compatible(const SCBFParams& params, const NoiseConfig& noise) {
  require(params.mu == noise.mu, ErrorKind::InvalidParameter,
          "noise viscosity differs from the solver viscosity");
  require(params.alpha == noise.alpha, ErrorKind::InvalidParameter,
          "noise alpha differs from the solver alpha");
}

SpectralField low_mode_forcing(SpectrumPtr spectrum, double norm) {
  require(norm >= 0.0, ErrorKind::InvalidParameter, "forcing norm must be nonnegative");
  SpectralField f(spectrum);
  // Fixed amplitudes on k = (1,0), (0,1), (1,1), (-1,1) and their conjugates.
  const std::pair<WaveVector, Complex> shape[] = {
      {{1, 0}, Complex(1.0, 0.0)},
      {{0, 1}, Complex(0.0, -0.5)},
      {{1, 1}, Complex(0.3, 0.2)},
      {{-1, 1}, Complex(-0.2, 0.1)},
  };
  for (const auto& [k, amp] : shape) {
    const Eigen::Index i = spectrum->index_of(k);
    if (i < 0) continue;
    const Eigen::Vector2d a = solenoidal_direction(k);
    f.coeffs()(i, 0) = amp * a[0];
    f.coeffs()(i, 1) = amp * a[1];
    f.coeffs().row(spectrum->conjugate_index(i)) = f.coeffs().row(i).conjugate();
  }
  const double n = norm_H(f);
  return (norm / n) * std::move(f);
}

}  // namespace scbf

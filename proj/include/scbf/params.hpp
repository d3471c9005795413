#pragma once

#include "scbf/field.hpp"
#include "scbf/ou_noise.hpp"

namespace scbf {

/// du + [μAu + B(u) + βC(u)]dt = f dt + ε dW, truncated to |k| <= K_max.
struct SCBFParams {
  double mu = 1.0;
  double beta = 1.0;
  double r = 3.0;
  double epsilon = 0.0;
  double alpha = 0.0;  // enters only through the OU transform
  double dt = 1e-3;
  int k_max = 16;
  SpectralField forcing;  // time independent; left empty for f = 0

  void validate() const;
  SpectrumPtr spectrum() const { return build_basis(k_max); }
  /// The forcing, or a zero field when none was set.
  SpectralField forcing_field() const;
  double forcing_norm_H2() const;
};

/// The viscosity and OU damping appear in both structures; they must agree.
void require_compatible(const SCBFParams& params, const NoiseConfig& noise);

/// Divergence-free forcing on the |k|² <= 2 shells, normalized to ‖f‖_ℍ = norm.
SpectralField low_mode_forcing(SpectrumPtr spectrum, double norm);

}  // namespace scbf

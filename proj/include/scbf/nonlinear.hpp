#pragma once

#include "scbf/field.hpp"

namespace scbf {

/// B(u, v) = P_H (u·∇)v, products formed on the collocation grid and
/// truncated to K_max.
SpectralField convective_term(const SpectralField& u, const SpectralField& v);
/// B(u) = B(u, u); three products instead of four.
SpectralField convective_term(const SpectralField& u);

/// b(u, v, w) = ∫ (u·∇)v · w dx. Exact for band-limited input.
double trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w);

struct DampingEvaluation {
  SpectralField term;  // C(u) = P_H(|u|^{r-1}u)
  double lr1 = 0.0;    // ∫|u|^{r+1} dx on the same grid
};

/// C(u) evaluated on the damping grid, truncated and projected.
DampingEvaluation evaluate_damping(const SpectralField& u, double r);
SpectralField damping_term(const SpectralField& u, double r);

/// ‖g‖²_{V'} = (2π)² Σ_k |ĝ(k)|²/λ_k.
double norm_Vdual2(const SpectralField& g);

}  // namespace scbf

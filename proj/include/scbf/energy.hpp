#pragma once

#include <vector>

#include "scbf/ou_noise.hpp"
#include "scbf/params.hpp"
#include "scbf/record.hpp"

namespace scbf {

/// Constant c with ‖z‖_{L^p} <= c‖z‖_𝕍 on the Galerkin space, from
/// ‖z‖_∞ <= Σ|ẑ(k)| and Cauchy–Schwarz: c = (2π)^{2/p - 1} (Σ_k 1/λ_k)^{1/2}.
double embedding_constant(const StokesSpectrum& spectrum, double p);

/// Coefficients of the H-energy differential inequality for v:
///   d‖v‖²/dt + μλ₁‖v‖² <= vz‖v‖²‖z‖²_𝕍 + z4‖z‖⁴_𝕍 + zr‖z‖^{r+1}_𝕍 + z2‖z‖²_𝕍 + f
struct LedgerCoefficients {
  double mu_lambda1 = 0.0;
  double vz = 0.0;  // 8ε²/μ
  double z4 = 0.0;  // 8ε⁴/(μλ₁²)
  double zr = 0.0;  // ε^{r+1} · 2β(2r)^r/(r+1)^{r+1} · c_emb^{r+1}
  double z2 = 0.0;  // 8α²ε²/(μλ₁⁴)
  double f = 0.0;   // 8‖f‖²/(μλ₁²)
  double r = 3.0;
  double c_emb = 0.0;

  static LedgerCoefficients from(const SCBFParams& params, const StokesSpectrum& spectrum);
  /// Forcing terms that do not involve v.
  double source(double z_v2) const;
  double rhs(double v_h2, double z_v2) const { return vz * v_h2 * z_v2 + source(z_v2); }
};

/// Normalized residual of one step: (LHS - RHS)/(RHS + μλ₁‖v_n‖²), with
/// LHS = (‖v_{n+1}‖² - ‖v_n‖²)/dt + μλ₁‖v_n‖². Nonpositive when the discrete
/// step honours the inequality.
double ledger_residual(const LedgerCoefficients& c, double v_h2, double v_h2_next, double z_v2,
                       double dt);

/// Largest positive ledger residual stored in the record.
double check_energy_inequality_H(const TrajectoryRecord& record, const SCBFParams& params);
/// Recomputes the residuals from the record's ‖v‖² and the given noise path.
/// The record must hold every step on the path's time grid.
double check_energy_inequality_H(const TrajectoryRecord& record, const OUPath& z_path,
                                 const SCBFParams& params);

/// Scalar summary of an OU path on t0 + n·dt: ‖z‖²_ℍ, ‖z‖²_𝕍 and the
/// coefficient bounds on ‖z‖_∞, ‖∇z‖_∞, ‖Az‖_∞.
struct NoiseTrace {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> h2, v2, sup, grad_sup, lap_sup;

  std::size_t size() const { return h2.size(); }
  double time(std::size_t n) const { return t0 + double(n) * dt; }
  void push(const SpectralField& z);
};

NoiseTrace trace_noise(const NoiseConfig& noise, SpectrumPtr spectrum, double dt, double t0,
                       double t_end);
NoiseTrace trace_path(const OUPath& path);

/// Φ(t) = μλ₁t + (8ε²/μ)∫_t^0 ‖z‖²_𝕍 at every trace point (trace ends at 0).
std::vector<double> dissipation_exponent(const NoiseTrace& trace, const SCBFParams& params);

struct AbsorbingRadius {
  double kappa11 = 0.0;
  double kappa12 = 0.0;
  double kappa13 = 0.0;  // ℍ radius for u(0)
  double kappa14 = 0.0;  // bound on ∫_{-1}^0 ‖v‖²_𝕍 + ‖v+εz‖^{r+1}_{L^{r+1}}
  double kappa15 = 0.0;  // 𝕍 radius for v(0)
  double kappa16 = 0.0;  // bound on μ∫_{-1}^0 ‖Av‖²_ℍ
  double v_ball = 0.0;   // κ15 + ε‖z(0)‖_𝕍
  double max_kappa11 = 0.0;  // max of κ11(θ_τω) over τ in [-2, 0]
  double initial_radius = 0.0;
  double t_D = 0.0;    // entry time into the ℍ ball for data of initial_radius
  double t_D_V = 0.0;  // entry time after which the 𝕍 bounds apply
  double tail_estimate = 0.0;
  double c_emb = 0.0;
};

/// Truncated κ quadratures from a noise trace on [-T, 0]. With
/// initial_radius <= 0 the entry times are computed for 10·κ13.
/// Throws HorizonError when the neglected tail beyond -T exceeds 1e-6 of κ11².
AbsorbingRadius compute_absorbing_radius(const NoiseTrace& trace, const SCBFParams& params,
                                         double initial_radius = 0.0);

/// κ11(θ_τω) at every trace point τ in [τ_min, 0].
std::vector<double> kappa11_along(const NoiseTrace& trace, const SCBFParams& params, double tau_min);

}  // namespace scbf

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "scbf/energy.hpp"
#include "scbf/ou_noise.hpp"
#include "scbf/params.hpp"
#include "scbf/record.hpp"

namespace scbf {

/// Exponential Euler for the transformed system and Euler–Maruyama for the
/// original one. Holds the per-mode linear factors for one parameter set.
class Integrator {
 public:
  explicit Integrator(const SCBFParams& params);

  const SCBFParams& params() const { return params_; }
  const SpectrumPtr& spectrum() const { return spectrum_; }

  /// v ← e^{-μAdt}(v + dt·N(v, z)), N = -B(w) - βC(w) + εαz + f, w = v + εz.
  /// Returns ‖w‖^{r+1}_{L^{r+1}} at the old state. Throws DivergedError.
  double step_v(SpectralField& v, const SpectralField& z, std::int64_t step = 0,
                double time = 0.0) const;

  /// u ← e^{-μAdt}(u + dt·(-B(u) - βC(u) + f)) + ε dW.
  void step_u_direct(SpectralField& u, const SpectralField& dW, std::int64_t step = 0,
                     double time = 0.0) const;

 private:
  SpectralField drift(const SpectralField& w, double* lr1) const;

  SCBFParams params_;
  SpectrumPtr spectrum_;
  SpectralField forcing_;
  Eigen::ArrayXd decay_;
};

SpectralField step_v(const SpectralField& v, const SpectralField& z, const SCBFParams& params);
SpectralField step_u_direct(const SpectralField& u, const SpectralField& dW, const SCBFParams& params);

struct RunOptions {
  int record_stride = 1;  // 0 records only the end points
  // Integrals of ‖v‖²_𝕍, ‖w‖^{r+1} and ‖Av‖² are accumulated for t >= window_start.
  double window_start = -1.0;
  // solve() and resume() call this with (t, v, z) at every lattice time,
  // end points included.
  std::function<void(double, const SpectralField&, const SpectralField&)> observer;
};

struct RunResult {
  SpectralField u;  // u at the final time
  SpectralField v;
  SpectralField z;  // z at the final time (zero when ε = 0)
  TrajectoryRecord record;
  std::int64_t steps = 0;
  double int_v2 = 0.0;
  double int_lr1 = 0.0;
  double int_a2 = 0.0;
};

/// u on [t0, t1] from u(t0) = u0 via v = u - εz. t0 and t1 must lie on the dt
/// lattice. The noise path is a function of (noise, dt) only, so any two runs
/// see the same z at the same time whenever noise.origin is set.
RunResult solve(const SpectralField& u0, double t0, double t1, const SCBFParams& params,
                const NoiseConfig& noise, const RunOptions& options = {});

/// solve() from s <= 0 to 0.
RunResult solve_pullback(const SpectralField& u0, double s, const SCBFParams& params,
                         const NoiseConfig& noise, const RunOptions& options = {});

/// Euler–Maruyama for u driven by the same standard increments as the OU
/// path, dW = σ√dt·ξ.
RunResult solve_direct(const SpectralField& u0, double t0, double t1, const SCBFParams& params,
                       const NoiseConfig& noise, const RunOptions& options = {});

/// Exact state needed to continue a run: v, z and the lattice time.
struct RestartState {
  SCBFParams params;
  NoiseConfig noise;
  double time = 0.0;
  SpectralField v;
  SpectralField z;
};

/// Continues from a saved state to t1; bitwise identical to an uninterrupted run.
RunResult resume(const RestartState& state, double t1, const RunOptions& options = {});

/// As solve(), additionally returning the state at t1 for a later resume().
RunResult solve_with_state(const SpectralField& u0, double t0, double t1, const SCBFParams& params,
                           const NoiseConfig& noise, RestartState* state_out,
                           const RunOptions& options = {});

/// Directory with v.scbf, z.scbf, f.scbf and params.txt (key=value).
void save_restart(const std::filesystem::path& dir, const RestartState& state);
RestartState load_restart(const std::filesystem::path& dir);

}  // namespace scbf

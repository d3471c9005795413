#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "scbf/field.hpp"

namespace scbf {

/// Diagonal noise on the retained modes: dW_k has intensity σ_k = σ₀ λ_k^{-s'}.
struct NoiseConfig {
  double decay_exponent = 1.76;  // s'
  double amplitude = 0.0;        // σ₀
  double alpha = 0.0;            // OU damping
  double mu = 1.0;
  std::uint64_t seed = 0;
  // Realizes θ_h for h = shift_steps·dt: every draw is re-indexed by this offset.
  std::int64_t shift_steps = 0;
  // When set, z starts from the stationary law at this time instead of at the
  // start of each run, so runs from different start times share one path.
  std::optional<double> origin;
  // The path is built from exact sub-steps on a lattice 2^refinement times
  // finer than dt, so runs at dt and dt/2 (refinement one lower) share the
  // same Brownian path and the same z at common times.
  int refinement = 0;

  void validate() const;
};

/// σ_k for every retained mode.
Eigen::ArrayXd noise_intensity(const NoiseConfig& config, const StokesSpectrum& spectrum);
/// γ_k = μλ_k + α.
Eigen::ArrayXd ou_rates(const NoiseConfig& config, const StokesSpectrum& spectrum);

/// Lattice index of time t on a dt grid; throws unless t/dt is within 1e-9 of
/// an integer.
std::int64_t step_index(double t, double dt);

/// Standard complex Gaussian per mode along the divergence-free direction,
/// E|ξ̂(k)|² = 1, Hermitian. Keyed by (seed, absolute step index).
SpectralField standard_increment(const NoiseConfig& config, SpectrumPtr spectrum,
                                 std::int64_t absolute_step);

/// Stationary draw E|ẑ(k)|² = σ_k²/(2γ_k), keyed by (seed, absolute index)
/// on a stream disjoint from the increments.
SpectralField sample_stationary_initial(const NoiseConfig& config, SpectrumPtr spectrum,
                                        std::int64_t absolute_index = 0);

/// Exact transition over dt driven by the standard increment xi.
SpectralField ou_step(const SpectralField& z, double dt, const NoiseConfig& config,
                      const SpectralField& xi);
/// Same, drawing the increments of the given absolute step (honours refinement).
SpectralField ou_step(const SpectralField& z, double dt, const NoiseConfig& config,
                      std::int64_t absolute_step);

/// Streaming OU path on the grid start_time + n·dt. Cheap to advance, holds
/// only the current value.
class OUProcess {
 public:
  OUProcess(NoiseConfig config, SpectrumPtr spectrum, double dt, double start_time);
  /// Continues a path whose value at start_time (on the dt lattice) is z.
  OUProcess(NoiseConfig config, SpectrumPtr spectrum, double dt, double start_time, SpectralField z);

  const SpectralField& current() const { return z_; }
  /// Standard increment used by the most recent advance().
  const SpectralField& last_increment() const { return xi_; }
  double time() const { return start_time_ + double(local_) * dt_; }
  std::int64_t steps_taken() const { return local_; }
  double dt() const { return dt_; }
  const NoiseConfig& config() const { return config_; }
  const SpectrumPtr& spectrum() const { return spectrum_; }

  /// σ_k √dt, the Wiener increment per unit ξ.
  const Eigen::ArrayXd& wiener_scale() const { return wiener_scale_; }

  void advance();
  /// Advances one step with the draws of the given absolute step index.
  void advance_at(std::int64_t absolute_step);

 private:
  void init_factors();
  void step_once(std::int64_t absolute_step);

  NoiseConfig config_;
  SpectrumPtr spectrum_;
  double dt_;
  double start_time_;
  std::int64_t base_index_;  // absolute index of start_time
  std::int64_t local_ = 0;
  std::int64_t fine_ = 1;  // sub-steps per step
  Eigen::ArrayXd decay_;  // per sub-step
  Eigen::ArrayXd kick_;
  Eigen::ArrayXd wiener_scale_;
  bool noisy_;
  SpectralField z_;
  SpectralField xi_;
};

struct OUPath {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<SpectralField> values;  // values[n] at t0 + n·dt
  NoiseConfig config;

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  double time(std::size_t n) const { return t0 + double(n) * dt; }
};

/// Materializes the path on [t0, t_end]; (t_end - t0)/dt must be an integer.
OUPath generate_path(double t0, double t_end, double dt, const NoiseConfig& config,
                     SpectrumPtr spectrum);

struct OUMoments {
  double mean_H2 = 0.0;
  double mean_V2 = 0.0;
};

/// Closed-form stationary E‖z‖²_ℍ and E‖z‖²_𝕍.
OUMoments analytic_moments(const NoiseConfig& config, const StokesSpectrum& spectrum);

/// Smallest α >= 0 with E‖z‖²_𝕍 <= target (default μ²λ₁/16), to relative 1e-10.
double alpha_threshold(const NoiseConfig& config, const StokesSpectrum& spectrum,
                       std::optional<double> target = std::nullopt);

void write_ou_path(std::ostream& os, const OUPath& path);
OUPath read_ou_path(std::istream& is, SpectrumPtr spectrum = nullptr);
void save_ou_path(const std::filesystem::path& file, const OUPath& path);
OUPath load_ou_path(const std::filesystem::path& file, SpectrumPtr spectrum = nullptr);

}  // namespace scbf

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scbf/solver.hpp"

namespace scbf {

enum class SpaceTag { H, V };

const char* to_string(SpaceTag tag);
SpaceTag parse_space_tag(const std::string& text);

/// ‖a - b‖ in the tagged norm.
double distance(const SpectralField& a, const SpectralField& b, SpaceTag tag);

/// Pullback start times s <= 0, strictly decreasing; the evaluation time is 0.
struct PullbackSchedule {
  std::vector<double> pullback_times;
  double evaluation_time = 0.0;

  void validate() const;
  double longest() const { return pullback_times.back(); }
};

/// Per-member quantities of one pullback run.
struct MemberDiagnostics {
  double u_norm_H = 0.0;
  double v_norm_V = 0.0;
  double int_energy = 0.0;  // ∫_{-1}^0 ‖v‖²_𝕍 + ‖v + εz‖^{r+1}_{L^{r+1}}
  double int_a2 = 0.0;      // ∫_{-1}^0 ‖Av‖²_ℍ
};

/// Terminal cloud at t = 0 of an ensemble started at one pullback time.
struct AttractorSample {
  std::vector<SpectralField> points;       // u(0)
  std::vector<SpectralField> transformed;  // v(0)
  std::vector<MemberDiagnostics> diagnostics;
  SpectralField z_final;  // z(0), shared by every member
  double pullback_time = 0.0;
  std::uint64_t seed = 0;
  int ensemble_size = 0;
  SpaceTag space_tag = SpaceTag::H;
  int diverged = 0;  // members lost to blow-up, excluded from points

  double diameter() const;
};

/// d(A, B) = max_{a∈A} min_{b∈B} ‖a - b‖. Throws invalid-input on an empty cloud.
double hausdorff_semidistance(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b,
                              SpaceTag tag);
double hausdorff_semidistance(const AttractorSample& a, const AttractorSample& b, SpaceTag tag);

/// The noise with its origin moved to the start of the schedule, so every
/// run of an experiment sees the same ω.
NoiseConfig fixed_omega(const NoiseConfig& noise, double earliest);

/// Ensemble of ensemble_size points drawn uniformly from the ℍ-ball of the
/// given radius (keyed by seed), evolved from each pullback time to 0 under
/// one ω. Members run in parallel.
std::vector<AttractorSample> attractor_sample(const PullbackSchedule& schedule, const SCBFParams& params,
                                              const NoiseConfig& noise, double initial_ball_radius,
                                              int ensemble_size, std::uint64_t seed,
                                              SpaceTag tag = SpaceTag::H);

/// ‖φ(t+s,ω)x0 - φ(t,θ_sω)φ(s,ω)x0‖_ℍ with both sides on one increment stream.
double cocycle_residual(const SCBFParams& params, const NoiseConfig& noise, const SpectralField& x0,
                        double t, double s);
/// ‖φ_dt(T)x0 - φ_{dt/2}(T)x0‖_ℍ on a shared Brownian path: the size of the
/// discretization error over the same horizon.
double truncation_scale(const SCBFParams& params, const NoiseConfig& noise, const SpectralField& x0,
                        double horizon);

/// ‖Q_m v‖_𝕍.
double flattening_tail(const SpectralField& v, Eigen::Index m);

/// Mode counts m at which P_m holds complete eigenvalue shells.
std::vector<Eigen::Index> shell_boundaries(const StokesSpectrum& spectrum);

struct FlatteningFit {
  std::vector<Eigen::Index> m;
  std::vector<double> lambda_next;  // λ_{m+1}
  std::vector<double> tail;         // max over the cloud of ‖Q_m v‖_𝕍
  bool nonincreasing = true;        // for every point separately
  double slope = 0.0;               // of log tail against λ_{m+1}
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Tails over the shell boundaries with λ_{m+1} > lambda_floor and a nonzero
/// tail. The monotonicity flag covers every m.
FlatteningFit flattening_fit(const std::vector<SpectralField>& cloud, double lambda_floor = 0.0);

/// Largest λ_k with f̂(k) != 0, or 0 for f = 0.
double forced_eigenvalue(const SpectralField& f);

struct DistanceEstimate {
  double epsilon = 0.0;
  double distance = 0.0;
  double se = 0.0;  // bootstrap over the points of the first cloud
};

/// Bootstrap standard error of d(A, B) from resampling A.
double bootstrap_se(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b, SpaceTag tag,
                    std::uint64_t seed, int resamples = 200);

struct SweepOptions {
  int ensemble_size = 16;
  double initial_ball_radius = 1.0;
  std::uint64_t seed = 0;
};

/// d(A_ε, A_0) in ℍ for each ε (sorted descending) against the ε = 0
/// baseline, each cloud taken at the schedule's longest pullback under one ω.
std::vector<DistanceEstimate> usc_sweep(const std::vector<double>& epsilons, const PullbackSchedule& schedule,
                                        const SCBFParams& params, const NoiseConfig& noise,
                                        const SweepOptions& options);

/// d(A_eps, A_eps0) in ℍ under a shared ω.
DistanceEstimate usc_pair(double eps, double eps0, const PullbackSchedule& schedule, const SCBFParams& params,
                          const NoiseConfig& noise, const SweepOptions& options);

/// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

/// ‖u‖²_ℍ, ‖u‖²_𝕍, or the energy (2π)²Σ|û|² of the modes with lo <= λ <= hi.
struct Observable {
  enum class Kind { HNorm2, VNorm2, Band } kind = Kind::HNorm2;
  double lo = 0.0;
  double hi = 0.0;

  /// "h_norm2", "v_norm2" or "band:<lo>:<hi>".
  static Observable parse(const std::string& tag);
  std::string tag() const;
  double operator()(const SpectralField& u) const;
};

struct TimeAverage {
  double mean = 0.0;
  double se = 0.0;  // batch means
  int batches = 0;
  std::vector<double> batch_means;
};

/// (1/(T - burn_in)) ∫_{burn_in}^T f(u(t)) dt from u(0) = u0, left-point rule.
TimeAverage time_average_observable(const SCBFParams& params, const NoiseConfig& noise,
                                    const Observable& observable, double T, double burn_in,
                                    const SpectralField& u0, int batches = 20);

/// Cloud file: "SCBC" header then one field checkpoint per point.
void write_cloud(std::ostream& os, const AttractorSample& sample);
AttractorSample read_cloud(std::istream& is, SpectrumPtr spectrum = nullptr);
void save_cloud(const std::filesystem::path& file, const AttractorSample& sample);
AttractorSample load_cloud(const std::filesystem::path& file, SpectrumPtr spectrum = nullptr);

}  // namespace scbf

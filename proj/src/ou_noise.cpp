#include "scbf/ou_noise.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "scbf/checkpoint.hpp"
#include "scbf/error.hpp"

namespace scbf {

namespace {

constexpr double kTwoPiSquared = 4.0 * std::numbers::pi * std::numbers::pi;
constexpr std::uint32_t kIncrementTag = 1;
constexpr std::uint32_t kInitialTag = 2;

SpectralField scale_rows(const SpectralField& u, const Eigen::ArrayXd& w) {
  SpectralField out = u;
  out.coeffs().array().colwise() *= w.cast<Complex>();
  return out;
}

}  // namespace

void NoiseConfig::validate() const {
  require(std::isfinite(decay_exponent) && decay_exponent > 1.0, ErrorKind::InvalidParameter,
          "noise decay exponent must exceed 1");
  require(std::isfinite(amplitude) && amplitude >= 0.0, ErrorKind::InvalidParameter,
          "noise amplitude must be nonnegative");
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorKind::InvalidParameter,
          "OU damping alpha must be nonnegative");
  require(std::isfinite(mu) && mu > 0.0, ErrorKind::InvalidParameter, "viscosity must be positive");
  if (origin) require(std::isfinite(*origin), ErrorKind::InvalidParameter, "noise origin must be finite");
  require(refinement >= 0 && refinement <= 20, ErrorKind::InvalidParameter,
          "noise refinement must lie in [0, 20]");
}

Eigen::ArrayXd noise_intensity(const NoiseConfig& config, const StokesSpectrum& spectrum) {
  return config.amplitude * spectrum.eigenvalues().pow(-config.decay_exponent);
}

Eigen::ArrayXd ou_rates(const NoiseConfig& config, const StokesSpectrum& spectrum) {
  return config.mu * spectrum.eigenvalues() + config.alpha;
}

std::int64_t step_index(double t, double dt) {
  require(dt > 0.0 && std::isfinite(t), ErrorKind::InvalidParameter, "invalid time grid");
  const double x = t / dt;
  const auto n = static_cast<std::int64_t>(std::llround(x));
  require(std::abs(x - double(n)) <= 1e-9 * std::max(1.0, std::abs(x)), ErrorKind::InvalidParameter,
          "time " + std::to_string(t) + " is not a multiple of dt=" + std::to_string(dt));
  return n;
}

SpectralField standard_increment(const NoiseConfig& config, SpectrumPtr spectrum,
                                 std::int64_t absolute_step) {
  const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(spectrum->size());
  if (config.refinement == 0) {
    return gaussian_field(std::move(spectrum), ones, config.seed,
                          static_cast<std::uint64_t>(absolute_step), kIncrementTag);
  }
  const std::int64_t fine = std::int64_t{1} << config.refinement;
  SpectralField sum(spectrum);
  for (std::int64_t j = 0; j < fine; ++j) {
    sum += gaussian_field(spectrum, ones, config.seed,
                          static_cast<std::uint64_t>(absolute_step * fine + j), kIncrementTag);
  }
  return (1.0 / std::sqrt(double(fine))) * std::move(sum);
}

SpectralField sample_stationary_initial(const NoiseConfig& config, SpectrumPtr spectrum,
                                        std::int64_t absolute_index) {
  config.validate();
  const Eigen::ArrayXd gamma = ou_rates(config, *spectrum);
  require(gamma.minCoeff() > 0.0, ErrorKind::InvalidParameter, "μλ₁ + α must be positive");
  if (config.amplitude == 0.0) return SpectralField(spectrum);
  const Eigen::ArrayXd sigma = noise_intensity(config, *spectrum);
  const Eigen::ArrayXd sd = sigma / (2.0 * gamma).sqrt();
  const std::int64_t fine = absolute_index * (std::int64_t{1} << config.refinement);
  return gaussian_field(std::move(spectrum), sd, config.seed, static_cast<std::uint64_t>(fine),
                        kInitialTag);
}

SpectralField ou_step(const SpectralField& z, double dt, const NoiseConfig& config,
                      const SpectralField& xi) {
  require(dt > 0.0 && std::isfinite(dt), ErrorKind::InvalidParameter, "dt must be positive");
  require_same_shape(z, xi);
  const Eigen::ArrayXd gamma = ou_rates(config, z.spectrum());
  const Eigen::ArrayXd decay = (-gamma * dt).exp();
  const Eigen::ArrayXd kick =
      noise_intensity(config, z.spectrum()) * (-(-2.0 * gamma * dt).expm1() / (2.0 * gamma)).sqrt();
  SpectralField out = scale_rows(z, decay);
  out.coeffs() += (xi.coeffs().array().colwise() * kick.cast<Complex>()).matrix();
  return out;
}

SpectralField ou_step(const SpectralField& z, double dt, const NoiseConfig& config,
                      std::int64_t absolute_step) {
  OUProcess process(config, z.spectrum_ptr(), dt, double(absolute_step) * dt, z);
  process.advance_at(absolute_step);
  return process.current();
}

OUProcess::OUProcess(NoiseConfig config, SpectrumPtr spectrum, double dt, double start_time)
    : config_(std::move(config)), spectrum_(std::move(spectrum)), dt_(dt), start_time_(start_time) {
  init_factors();

  if (config_.origin) {
    require(*config_.origin <= start_time, ErrorKind::InvalidParameter,
            "noise origin must not lie after the run start");
    const std::int64_t origin_index = step_index(*config_.origin, dt);
    base_index_ = step_index(start_time, dt);
    z_ = sample_stationary_initial(config_, spectrum_, origin_index + config_.shift_steps);
    for (std::int64_t n = origin_index; n < base_index_; ++n) step_once(n + config_.shift_steps);
    xi_ = SpectralField(spectrum_);
  } else {
    base_index_ = std::llround(start_time / dt);
    z_ = sample_stationary_initial(config_, spectrum_, base_index_ + config_.shift_steps);
  }
}

OUProcess::OUProcess(NoiseConfig config, SpectrumPtr spectrum, double dt, double start_time,
                     SpectralField z)
    : config_(std::move(config)), spectrum_(std::move(spectrum)), dt_(dt), start_time_(start_time) {
  init_factors();
  require(z.spectrum_ptr() && z.k_max() == spectrum_->k_max(), ErrorKind::ShapeMismatch,
          "OU state does not match the spectrum");
  base_index_ = config_.origin ? step_index(start_time, dt) : std::llround(start_time / dt);
  z_ = std::move(z);
}

void OUProcess::init_factors() {
  config_.validate();
  require(dt_ > 0.0 && std::isfinite(dt_), ErrorKind::InvalidParameter, "dt must be positive");
  const Eigen::ArrayXd gamma = ou_rates(config_, *spectrum_);
  require(gamma.minCoeff() > 0.0, ErrorKind::InvalidParameter, "μλ₁ + α must be positive");
  const Eigen::ArrayXd sigma = noise_intensity(config_, *spectrum_);
  fine_ = std::int64_t{1} << config_.refinement;
  const double h = dt_ / double(fine_);
  decay_ = (-gamma * h).exp();
  kick_ = sigma * (-(-2.0 * gamma * h).expm1() / (2.0 * gamma)).sqrt();
  wiener_scale_ = sigma * std::sqrt(dt_);
  noisy_ = config_.amplitude > 0.0;
  xi_ = SpectralField(spectrum_);
}

void OUProcess::step_once(std::int64_t absolute_step) {
  if (!noisy_) {
    for (std::int64_t j = 0; j < fine_; ++j) z_.coeffs().array().colwise() *= decay_.cast<Complex>();
    return;
  }
  const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(spectrum_->size());
  xi_ = SpectralField(spectrum_);
  for (std::int64_t j = 0; j < fine_; ++j) {
    const SpectralField draw = gaussian_field(
        spectrum_, ones, config_.seed, static_cast<std::uint64_t>(absolute_step * fine_ + j), kIncrementTag);
    z_.coeffs().array().colwise() *= decay_.cast<Complex>();
    z_.coeffs().array() += draw.coeffs().array().colwise() * kick_.cast<Complex>();
    if (fine_ == 1) {
      xi_ = draw;
    } else {
      xi_ += draw;
    }
  }
  if (fine_ > 1) xi_ *= 1.0 / std::sqrt(double(fine_));
}

void OUProcess::advance() {
  step_once(base_index_ + local_ + config_.shift_steps);
  ++local_;
}

void OUProcess::advance_at(std::int64_t absolute_step) {
  step_once(absolute_step);
  ++local_;
}

OUPath generate_path(double t0, double t_end, double dt, const NoiseConfig& config,
                     SpectrumPtr spectrum) {
  require(t0 < t_end, ErrorKind::InvalidParameter, "path needs t0 < t_end");
  require(dt > 0.0, ErrorKind::InvalidParameter, "dt must be positive");
  const double x = (t_end - t0) / dt;
  const double steps = std::round(x);
  require(std::abs(x - steps) <= 1e-12 * std::max(1.0, x), ErrorKind::InvalidParameter,
          "dt does not divide the path interval");
  OUProcess process(config, std::move(spectrum), dt, t0);
  OUPath path{t0, dt, {}, config};
  path.values.reserve(std::size_t(steps) + 1);
  path.values.push_back(process.current());
  for (std::int64_t n = 0; n < std::int64_t(steps); ++n) {
    process.advance();
    path.values.push_back(process.current());
  }
  return path;
}

OUMoments analytic_moments(const NoiseConfig& config, const StokesSpectrum& spectrum) {
  config.validate();
  const Eigen::ArrayXd var = noise_intensity(config, spectrum).square() / (2.0 * ou_rates(config, spectrum));
  return {kTwoPiSquared * var.sum(), kTwoPiSquared * (var * spectrum.eigenvalues()).sum()};
}

double alpha_threshold(const NoiseConfig& config, const StokesSpectrum& spectrum,
                       std::optional<double> target) {
  const double goal = target.value_or(config.mu * config.mu * spectrum.lambda1() / 16.0);
  require(goal > 0.0, ErrorKind::InvalidParameter, "moment target must be positive");
  NoiseConfig c = config;
  auto mean_v2 = [&](double a) {
    c.alpha = a;
    return analytic_moments(c, spectrum).mean_V2;
  };
  if (mean_v2(0.0) <= goal) return 0.0;
  // E‖z‖²_𝕍 < (2π)² Σ λσ²/(2α), which bounds the root from above.
  const Eigen::ArrayXd sigma = noise_intensity(config, spectrum);
  double hi = kTwoPiSquared * (spectrum.eigenvalues() * sigma.square()).sum() / (2.0 * goal);
  double lo = 0.0;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    (mean_v2(mid) <= goal ? hi : lo) = mid;
  }
  return hi;
}

void write_ou_path(std::ostream& os, const OUPath& path) {
  binary::put_f64(os, path.t0);
  binary::put_f64(os, path.dt);
  binary::put_u32(os, static_cast<std::uint32_t>(path.steps()));
  binary::put_u64(os, path.config.seed);
  for (const auto& z : path.values) write_field(os, z);
}

OUPath read_ou_path(std::istream& is, SpectrumPtr spectrum) {
  OUPath path;
  path.t0 = binary::get_f64(is);
  path.dt = binary::get_f64(is);
  const std::uint32_t steps = binary::get_u32(is);
  path.config.seed = binary::get_u64(is);
  path.values.reserve(std::size_t(steps) + 1);
  for (std::uint32_t n = 0; n <= steps; ++n) {
    path.values.push_back(read_field(is, spectrum));
    if (!spectrum) spectrum = path.values.back().spectrum_ptr();
  }
  return path;
}

void save_ou_path(const std::filesystem::path& file, const OUPath& path) {
  std::ofstream os(file, std::ios::binary);
  require(bool(os), ErrorKind::Io, "cannot open " + file.string() + " for writing");
  write_ou_path(os, path);
}

OUPath load_ou_path(const std::filesystem::path& file, SpectrumPtr spectrum) {
  std::ifstream is(file, std::ios::binary);
  require(bool(is), ErrorKind::Io, "cannot open " + file.string());
  return read_ou_path(is, std::move(spectrum));
}

}  // namespace scbf

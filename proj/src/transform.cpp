#include "scbf/transform.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "scbf/error.hpp"

namespace scbf {

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

int round_up_even(int n) { return n % 2 == 0 ? n : n + 1; }

int wrap(int k, int n) { return k < 0 ? k + n : k; }

}  // namespace

double PhysicalField::cell_area() const {
  const double h = 2.0 * std::numbers::pi / n;
  return h * h;
}

int collocation_grid(int k_max) { return round_up_even(3 * k_max + 1); }

int damping_grid(int k_max) { return 2 * collocation_grid(k_max); }

int damping_grid(int k_max, double r) {
  const bool odd_integer = r == std::floor(r) && static_cast<long>(r) % 2 == 1;
  if (!odd_integer) return damping_grid(k_max);
  return round_up_even(static_cast<int>(r + 1.0) * k_max + 1);
}

int lp_grid(int k_max, double p) {
  const int exact = static_cast<int>(std::ceil(p)) * k_max + 1;
  const int floor_rule = static_cast<int>(std::ceil(p / 2.0)) * k_max;
  const bool even_integer = p == std::floor(p) && static_cast<long>(p) % 2 == 0;
  // |u|^p is not band limited otherwise; refine like the damping grid.
  const int base = even_integer ? collocation_grid(k_max) : damping_grid(k_max);
  return round_up_even(std::max({exact, floor_rule, base}));
}

GridTransform::GridTransform(int n) : n_(n) {
  const int half = n / 2 + 1;
  std::vector<double> real(static_cast<std::size_t>(n) * n);
  std::vector<fftw_complex> cplx(static_cast<std::size_t>(n) * half);
  forward_ = fftw_plan_dft_r2c_2d(n, n, real.data(), cplx.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  backward_ = fftw_plan_dft_c2r_2d(n, n, cplx.data(), real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(forward_ && backward_, ErrorKind::InvalidParameter, "FFTW planning failed");
}

GridTransform::~GridTransform() {
  std::lock_guard lock(registry_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

const GridTransform& GridTransform::for_size(int n) {
  require(n >= 4 && n % 2 == 0, ErrorKind::InvalidParameter,
          "grid size must be even and >= 4, got " + std::to_string(n));
  static std::map<int, std::unique_ptr<GridTransform>> registry;
  std::lock_guard lock(registry_mutex());
  auto& slot = registry[n];
  if (!slot) slot.reset(new GridTransform(n));
  return *slot;
}

void GridTransform::to_grid(const StokesSpectrum& spectrum,
                            const Eigen::Ref<const Eigen::VectorXcd>& coeffs,
                            Eigen::ArrayXd& out) const {
  const int half = n_ / 2 + 1;
  require(2 * spectrum.k_max() < n_, ErrorKind::InvalidParameter,
          "grid too coarse for K_max=" + std::to_string(spectrum.k_max()));
  Eigen::VectorXcd buffer = Eigen::VectorXcd::Zero(Eigen::Index(n_) * half);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const auto& k = spectrum.mode(i);
    if (k.k2 < 0) continue;
    buffer[wrap(k.k1, n_) * half + k.k2] = coeffs[i];
  }
  out.resize(Eigen::Index(n_) * n_);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_),
                       reinterpret_cast<fftw_complex*>(buffer.data()), out.data());
}

void GridTransform::to_modes(const StokesSpectrum& spectrum, const Eigen::ArrayXd& grid,
                             Eigen::Ref<Eigen::VectorXcd> out) const {
  const int half = n_ / 2 + 1;
  require(grid.size() == Eigen::Index(n_) * n_, ErrorKind::ShapeMismatch, "grid size mismatch");
  Eigen::VectorXcd buffer(Eigen::Index(n_) * half);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_), const_cast<double*>(grid.data()),
                       reinterpret_cast<fftw_complex*>(buffer.data()));
  const double scale = 1.0 / (double(n_) * n_);
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    const auto& k = spectrum.mode(i);
    if (k.k2 >= 0) {
      out[i] = buffer[wrap(k.k1, n_) * half + k.k2] * scale;
    } else {
      out[i] = std::conj(buffer[wrap(-k.k1, n_) * half - k.k2]) * scale;
    }
  }
}

PhysicalField GridTransform::to_physical(const SpectralField& u) const {
  PhysicalField p;
  p.n = n_;
  to_grid(u.spectrum(), u.coeffs().col(0), p.u1);
  to_grid(u.spectrum(), u.coeffs().col(1), p.u2);
  return p;
}

ModeCoeffs GridTransform::to_coeffs(const StokesSpectrum& spectrum, const PhysicalField& u) const {
  require(u.n == n_, ErrorKind::ShapeMismatch, "grid size mismatch");
  ModeCoeffs out(spectrum.size(), 2);
  to_modes(spectrum, u.u1, out.col(0));
  to_modes(spectrum, u.u2, out.col(1));
  return out;
}

PhysicalField to_physical(const SpectralField& u, int n) {
  return GridTransform::for_size(n).to_physical(u);
}

SpectralField to_spectral(SpectrumPtr spectrum, const PhysicalField& u) {
  ModeCoeffs c = GridTransform::for_size(u.n).to_coeffs(*spectrum, u);
  return SpectralField(std::move(spectrum), std::move(c));
}

double integrate_power(const PhysicalField& u, double p) {
  const Eigen::ArrayXd mag2 = u.u1.square() + u.u2.square();
  double sum;
  if (p == 2.0) {
    sum = mag2.sum();
  } else if (p == 4.0) {
    sum = mag2.square().sum();
  } else {
    sum = mag2.pow(0.5 * p).sum();
  }
  return sum * u.cell_area();
}

double norm_Lp(const SpectralField& u, double p) {
  require(p >= 2.0 && std::isfinite(p), ErrorKind::InvalidParameter,
          "L^p norm needs finite p >= 2, got " + std::to_string(p));
  const PhysicalField phys = to_physical(u, lp_grid(u.k_max(), p));
  return std::pow(integrate_power(phys, p), 1.0 / p);
}

}  // namespace scbf

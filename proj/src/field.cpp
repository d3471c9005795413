#include "scbf/field.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "scbf/error.hpp"
#include "scbf/philox.hpp"

namespace scbf {

namespace {

constexpr double kTwoPiSquared = 4.0 * std::numbers::pi * std::numbers::pi;
constexpr std::uint32_t kBallRadiusTag = 4;

}  // namespace

SpectralField::SpectralField(SpectrumPtr spectrum)
    : spectrum_(std::move(spectrum)), coeffs_(ModeCoeffs::Zero(spectrum_->size(), 2)) {}

SpectralField::SpectralField(SpectrumPtr spectrum, ModeCoeffs coeffs)
    : spectrum_(std::move(spectrum)), coeffs_(std::move(coeffs)) {
  require(coeffs_.rows() == spectrum_->size(), ErrorKind::ShapeMismatch,
          "coefficient rows do not match the mode count");
}

bool SpectralField::all_finite() const {
  return coeffs_.real().allFinite() && coeffs_.imag().allFinite();
}

double SpectralField::hermitian_residual() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    const Eigen::Index j = spectrum_->conjugate_index(i);
    worst = std::max(worst, (coeffs_.row(j) - coeffs_.row(i).conjugate()).norm());
  }
  return worst;
}

double SpectralField::divergence_residual() const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    const auto& k = spectrum_->mode(i);
    const Complex div = double(k.k1) * coeffs_(i, 0) + double(k.k2) * coeffs_(i, 1);
    const double scale = std::sqrt(double(k.norm2())) * coeffs_.row(i).norm();
    if (scale > 0.0) worst = std::max(worst, std::abs(div) / scale);
  }
  return worst;
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  require_same_shape(*this, other);
  coeffs_ += other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  require_same_shape(*this, other);
  coeffs_ -= other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  coeffs_ *= s;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(double s, SpectralField a) { return a *= s; }
SpectralField operator*(SpectralField a, double s) { return a *= s; }

void require_same_shape(const SpectralField& a, const SpectralField& b) {
  require(a.spectrum_ptr() && b.spectrum_ptr(), ErrorKind::InvalidInput, "uninitialised field");
  require(a.k_max() == b.k_max(), ErrorKind::ShapeMismatch,
          "K_max mismatch: " + std::to_string(a.k_max()) + " vs " + std::to_string(b.k_max()));
}

SpectralField leray_project(SpectrumPtr spectrum, const ModeCoeffs& raw) {
  require(raw.rows() == spectrum->size(), ErrorKind::ShapeMismatch,
          "coefficient rows do not match the mode count");
  ModeCoeffs out(raw.rows(), 2);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const auto& k = spectrum->mode(i);
    const double k1 = k.k1, k2 = k.k2;
    const Complex along = (k1 * raw(i, 0) + k2 * raw(i, 1)) / double(k.norm2());
    out(i, 0) = raw(i, 0) - k1 * along;
    out(i, 1) = raw(i, 1) - k2 * along;
  }
  return SpectralField(std::move(spectrum), std::move(out));
}

SpectralField leray_project(const SpectralField& raw) {
  return leray_project(raw.spectrum_ptr(), raw.coeffs());
}

SpectralField apply_A(const SpectralField& u) {
  SpectralField out = u;
  out.coeffs().array().colwise() *= u.spectrum().eigenvalues().cast<Complex>();
  return out;
}

double inner_H(const SpectralField& u, const SpectralField& w) {
  require_same_shape(u, w);
  return kTwoPiSquared * (u.coeffs().array() * w.coeffs().array().conjugate()).real().sum();
}

double norm_H2(const SpectralField& u) { return kTwoPiSquared * u.coeffs().squaredNorm(); }

double norm_V2(const SpectralField& u) {
  return kTwoPiSquared *
         (u.coeffs().rowwise().squaredNorm().array() * u.spectrum().eigenvalues()).sum();
}

double norm_A2(const SpectralField& u) {
  const auto& lambda = u.spectrum().eigenvalues();
  return kTwoPiSquared * (u.coeffs().rowwise().squaredNorm().array() * lambda * lambda).sum();
}

double norm_H(const SpectralField& u) { return std::sqrt(norm_H2(u)); }
double norm_V(const SpectralField& u) { return std::sqrt(norm_V2(u)); }

double sup_bound(const SpectralField& u) { return u.coeffs().rowwise().norm().sum(); }

double grad_sup_bound(const SpectralField& u) {
  return (u.coeffs().rowwise().norm().array() * u.spectrum().eigenvalues().sqrt()).sum();
}

double laplacian_sup_bound(const SpectralField& u) {
  return (u.coeffs().rowwise().norm().array() * u.spectrum().eigenvalues()).sum();
}

SpectralField project_Pm(const SpectralField& u, Eigen::Index m) {
  require(m >= 0 && m <= u.size(), ErrorKind::InvalidParameter,
          "projection index m=" + std::to_string(m) + " outside [0, " + std::to_string(u.size()) + "]");
  SpectralField out = u;
  out.coeffs().bottomRows(u.size() - m).setZero();
  return out;
}

SpectralField project_Qm(const SpectralField& u, Eigen::Index m) {
  require(m >= 0 && m <= u.size(), ErrorKind::InvalidParameter,
          "projection index m=" + std::to_string(m) + " outside [0, " + std::to_string(u.size()) + "]");
  SpectralField out = u;
  out.coeffs().topRows(m).setZero();
  return out;
}

Eigen::Vector2d solenoidal_direction(const WaveVector& k) {
  const double len = std::sqrt(double(k.norm2()));
  return {-k.k2 / len, k.k1 / len};
}

SpectralField gaussian_field(SpectrumPtr spectrum, const Eigen::ArrayXd& weights,
                             std::uint64_t key, std::uint64_t stream, std::uint32_t tag) {
  require(weights.size() == spectrum->size(), ErrorKind::ShapeMismatch,
          "weight count does not match the mode count");
  SpectralField out(spectrum);
  const auto philox = philox_key(key, tag);
  for (Eigen::Index i = 0; i < spectrum->size(); ++i) {
    const auto& k = spectrum->mode(i);
    if (!StokesSpectrum::is_upper_half(k)) continue;
    const auto block = Philox4x32::generate(
        {static_cast<std::uint32_t>(k.k1), static_cast<std::uint32_t>(k.k2),
         static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)},
        philox);
    const auto n = normal_pair(block);
    const Complex zeta = weights[i] * Complex(n[0], n[1]) * (1.0 / std::numbers::sqrt2);
    const Eigen::Vector2d a = solenoidal_direction(k);
    out.coeffs()(i, 0) = zeta * a[0];
    out.coeffs()(i, 1) = zeta * a[1];
    const Eigen::Index j = spectrum->conjugate_index(i);
    out.coeffs().row(j) = out.coeffs().row(i).conjugate();
  }
  return out;
}

SpectralField sample_ball(SpectrumPtr spectrum, double radius, std::uint64_t key,
                          std::uint64_t index) {
  require(radius >= 0.0, ErrorKind::InvalidParameter, "ball radius must be nonnegative");
  const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(spectrum->size());
  SpectralField g = gaussian_field(spectrum, ones, key, index);
  const double len = norm_H(g);
  const auto block = Philox4x32::generate(
      {0u, 0u, static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)},
      philox_key(key, kBallRadiusTag));
  const double u = unit_interval_open_left(block[0], block[1]);
  // Real dimension of the Galerkin space equals the number of retained modes.
  const double r = radius * std::pow(u, 1.0 / double(spectrum->size()));
  if (len == 0.0) return g;
  return (r / len) * std::move(g);
}

}  // namespace scbf

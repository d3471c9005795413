#include "scbf/nonlinear.hpp"

#include <cmath>
#include <numbers>

#include "scbf/error.hpp"
#include "scbf/transform.hpp"

namespace scbf {

namespace {

constexpr double kTwoPiSquared = 4.0 * std::numbers::pi * std::numbers::pi;

// ∂_i applied to the mode data of one scalar component.
Eigen::VectorXcd derivative(const Eigen::ArrayXd& k, const Eigen::Ref<const Eigen::VectorXcd>& c) {
  return (c.array() * k.cast<Complex>() * Complex(0.0, 1.0)).matrix();
}

}  // namespace

SpectralField convective_term(const SpectralField& u, const SpectralField& v) {
  require_same_shape(u, v);
  const auto& spectrum = u.spectrum();
  const auto& fft = GridTransform::for_size(collocation_grid(u.k_max()));
  const PhysicalField pu = fft.to_physical(u);
  const PhysicalField pv = fft.to_physical(v);

  const Eigen::ArrayXd& k1 = spectrum.k1();
  const Eigen::ArrayXd& k2 = spectrum.k2();
  Eigen::VectorXcd p(spectrum.size());
  ModeCoeffs raw = ModeCoeffs::Zero(spectrum.size(), 2);
  // (u·∇)v_j = ∂_i(u_i v_j) for divergence-free u.
  const Eigen::ArrayXd* ui[2] = {&pu.u1, &pu.u2};
  const Eigen::ArrayXd* vj[2] = {&pv.u1, &pv.u2};
  for (int i = 0; i < 2; ++i) {
    const Eigen::ArrayXd& k = i == 0 ? k1 : k2;
    for (int j = 0; j < 2; ++j) {
      fft.to_modes(spectrum, (*ui[i]) * (*vj[j]), p);
      raw.col(j) += derivative(k, p);
    }
  }
  return leray_project(u.spectrum_ptr(), raw);
}

SpectralField convective_term(const SpectralField& u) {
  const auto& spectrum = u.spectrum();
  const auto& fft = GridTransform::for_size(collocation_grid(u.k_max()));
  const PhysicalField pu = fft.to_physical(u);

  const Eigen::ArrayXd& k1 = spectrum.k1();
  const Eigen::ArrayXd& k2 = spectrum.k2();
  Eigen::VectorXcd p11(spectrum.size()), p12(spectrum.size()), p22(spectrum.size());
  fft.to_modes(spectrum, pu.u1 * pu.u1, p11);
  fft.to_modes(spectrum, pu.u1 * pu.u2, p12);
  fft.to_modes(spectrum, pu.u2 * pu.u2, p22);

  const Eigen::ArrayXcd ik1 = k1.cast<Complex>() * Complex(0.0, 1.0);
  const Eigen::ArrayXcd ik2 = k2.cast<Complex>() * Complex(0.0, 1.0);
  ModeCoeffs raw(spectrum.size(), 2);
  raw.col(0) = (ik1 * p11.array() + ik2 * p12.array()).matrix();
  raw.col(1) = (ik1 * p12.array() + ik2 * p22.array()).matrix();
  return leray_project(u.spectrum_ptr(), raw);
}

double trilinear(const SpectralField& u, const SpectralField& v, const SpectralField& w) {
  require_same_shape(u, v);
  require_same_shape(u, w);
  const auto& spectrum = u.spectrum();
  // Triple products of K_max-band fields are resolved exactly once n > 3 K_max.
  const auto& fft = GridTransform::for_size(collocation_grid(u.k_max()));
  const PhysicalField pu = fft.to_physical(u);
  const PhysicalField pw = fft.to_physical(w);
  const Eigen::ArrayXd* k[2] = {&spectrum.k1(), &spectrum.k2()};
  const Eigen::ArrayXd* ui[2] = {&pu.u1, &pu.u2};
  const Eigen::ArrayXd* wj[2] = {&pw.u1, &pw.u2};

  Eigen::ArrayXd integrand = Eigen::ArrayXd::Zero(pu.u1.size());
  Eigen::ArrayXd grad;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      fft.to_grid(spectrum, derivative(*k[i], v.coeffs().col(j)), grad);
      integrand += (*ui[i]) * grad * (*wj[j]);
    }
  }
  return integrand.sum() * pu.cell_area();
}

DampingEvaluation evaluate_damping(const SpectralField& u, double r) {
  require(r >= 1.0 && std::isfinite(r), ErrorKind::InvalidParameter,
          "damping exponent must satisfy r >= 1, got " + std::to_string(r));
  const auto& spectrum = u.spectrum();
  const auto& fft = GridTransform::for_size(damping_grid(u.k_max(), r));
  PhysicalField pu = fft.to_physical(u);

  const Eigen::ArrayXd mag2 = pu.u1.square() + pu.u2.square();
  Eigen::ArrayXd weight;  // |u|^{r-1}
  if (r == 1.0) {
    weight = Eigen::ArrayXd::Ones(mag2.size());
  } else if (r == 2.0) {
    weight = mag2.sqrt();
  } else if (r == 3.0) {
    weight = mag2;
  } else if (r == 5.0) {
    weight = mag2.square();
  } else {
    weight = mag2.pow(0.5 * (r - 1.0));
  }

  DampingEvaluation out;
  out.lr1 = (weight * mag2).sum() * pu.cell_area();
  pu.u1 *= weight;
  pu.u2 *= weight;
  out.term = leray_project(u.spectrum_ptr(), fft.to_coeffs(spectrum, pu));
  return out;
}

SpectralField damping_term(const SpectralField& u, double r) { return evaluate_damping(u, r).term; }

double norm_Vdual2(const SpectralField& g) {
  return kTwoPiSquared *
         (g.coeffs().rowwise().squaredNorm().array() / g.spectrum().eigenvalues()).sum();
}

}  // namespace scbf

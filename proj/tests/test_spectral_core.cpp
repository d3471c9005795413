#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "scbf/checkpoint.hpp"
#include "scbf/error.hpp"
#include "scbf/field.hpp"
#include "scbf/nonlinear.hpp"
#include "scbf/transform.hpp"
#include "test_support.hpp"

using namespace scbf;
using scbf::testing::random_field;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField single_pair(const SpectrumPtr& s, WaveVector k, Eigen::Vector2cd amp) {
  SpectralField u(s);
  u.coeffs().row(s->index_of(k)) = amp.transpose();
  u.coeffs().row(s->index_of(-k)) = amp.conjugate().transpose();
  return u;
}

double max_abs(const SpectralField& u) { return u.coeffs().cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Basis, SmallCutoffs) {
  const auto s1 = build_basis(1);
  ASSERT_EQ(s1->size(), 4);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(s1->eigenvalues()[i], 1.0);
  EXPECT_EQ(s1->lambda1(), 1.0);

  const auto s2 = build_basis(2);
  std::vector<double> ev(s2->eigenvalues().begin(), s2->eigenvalues().end());
  EXPECT_EQ(ev, (std::vector<double>{1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4}));
}

TEST(Basis, LatticeCountAndOrdering) {
  for (int K : {3, 8, 16}) {
    int count = 0;
    for (int a = -K; a <= K; ++a)
      for (int b = -K; b <= K; ++b)
        if (a * a + b * b > 0 && a * a + b * b <= K * K) ++count;
    const auto s = build_basis(K);
    EXPECT_EQ(s->size(), count) << "K=" << K;
    for (Eigen::Index i = 0; i < s->size(); ++i) {
      const auto& k = s->mode(i);
      EXPECT_EQ(s->eigenvalues()[i], double(k.k1 * k.k1 + k.k2 * k.k2));
      EXPECT_EQ(s->index_of(k), i);
      EXPECT_EQ(s->mode(s->conjugate_index(i)), -k);
      if (i > 0) {
        const auto& p = s->mode(i - 1);
        EXPECT_TRUE(p.norm2() < k.norm2() || (p.norm2() == k.norm2() && p < k));
      }
    }
    EXPECT_EQ(s->index_of({0, 0}), -1);
    EXPECT_EQ(s->index_of({K, 1}), -1);
  }
}

TEST(Basis, RejectsNonPositiveCutoff) {
  EXPECT_THROW(build_basis(0), Error);
  try {
    build_basis(-2);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidParameter);
  }
}

TEST(Leray, Examples) {
  const auto s = build_basis(2);
  ModeCoeffs raw = ModeCoeffs::Zero(s->size(), 2);
  raw.row(s->index_of({1, 0})) << 1.0, 0.0;
  raw.row(s->index_of({0, 1})) << 0.0, 1.0;  // parallel to k
  raw.row(s->index_of({1, 1})) << 1.0, 1.0;
  raw.row(s->index_of({-1, 1})) << 1.0, 1.0;  // orthogonal to k
  const auto p = leray_project(s, raw);
  EXPECT_EQ(p.coeffs().row(s->index_of({1, 0})).norm(), 0.0);
  EXPECT_EQ(p.coeffs().row(s->index_of({0, 1})).norm(), 0.0);
  EXPECT_NEAR(p.coeffs().row(s->index_of({1, 1})).norm(), 0.0, 1e-16);
  EXPECT_EQ(p.coeffs()(s->index_of({-1, 1}), 0), Complex(1.0));

  ModeCoeffs keep = ModeCoeffs::Zero(s->size(), 2);
  keep.row(s->index_of({1, 0})) << 0.0, 1.0;
  EXPECT_EQ(leray_project(s, keep).coeffs(), keep);
}

TEST(Leray, IdempotentAndSolenoidal) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    ModeCoeffs raw(s->size(), 2);
    for (Eigen::Index i = 0; i < raw.rows(); ++i)
      for (int c = 0; c < 2; ++c) raw(i, c) = Complex(n(rng), n(rng));
    const auto once = leray_project(s, raw);
    const auto twice = leray_project(once);
    EXPECT_LE((twice.coeffs() - once.coeffs()).cwiseAbs().maxCoeff(), 1e-14 * max_abs(once));
    EXPECT_LE(once.divergence_residual(), 1e-14);
  }
}

TEST(StokesOperator, EigenvalueAction) {
  const auto s = build_basis(4);
  const auto u = single_pair(s, {1, 2}, Eigen::Vector2cd(2.0, -1.0) / std::sqrt(5.0));
  const auto Au = apply_A(u);
  EXPECT_EQ(Au.coeffs(), (5.0 * u).coeffs());

  SpectralField ring(s);
  std::mt19937_64 rng(3);
  const auto r = random_field(s, rng);
  for (Eigen::Index i = 0; i < 4; ++i) ring.coeffs().row(i) = r.coeffs().row(i);
  EXPECT_EQ(apply_A(ring).coeffs(), ring.coeffs());
}

TEST(StokesOperator, PoincareChain) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = random_field(s, rng, 0.5);
    EXPECT_GE(norm_A2(u), s->lambda1() * norm_V2(u));
    EXPECT_GE(norm_V2(u), s->lambda1() * norm_H2(u));
    EXPECT_GT(norm_V2(u), norm_H2(u) * (1 + 1e-6));
  }
  SpectralField ring(s);
  const auto r = random_field(s, rng);
  ring.coeffs().topRows(4) = r.coeffs().topRows(4);
  EXPECT_NEAR(norm_V2(ring), norm_H2(ring), 1e-14 * norm_H2(ring));
}

TEST(Norms, CosineExample) {
  const auto s = build_basis(4);
  const auto u = single_pair(s, {1, 0}, Eigen::Vector2cd(0.0, 1.0));
  EXPECT_NEAR(norm_H2(u), 8 * kPi * kPi, 1e-12);
  EXPECT_NEAR(norm_V2(u), 8 * kPi * kPi, 1e-12);

  // ∫ 4cos²(x1) dx and ∫ 16 cos⁴(x1) dx by trapezoid on a fine grid.
  const int n = 64;
  double q2 = 0.0, q4 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = 2.0 * std::cos(2 * kPi * i / n);
    q2 += n * c * c;
    q4 += n * std::pow(c, 4);
  }
  q2 *= scbf::testing::cell_area(n);
  q4 *= scbf::testing::cell_area(n);
  EXPECT_NEAR(norm_H2(u), q2, 1e-12 * q2);
  EXPECT_NEAR(std::pow(norm_Lp(u, 4.0), 4), q4, 1e-12 * q4);

  const SpectralField zero(s);
  EXPECT_EQ(norm_H(zero), 0.0);
  EXPECT_EQ(norm_V(zero), 0.0);
  EXPECT_EQ(norm_Lp(zero, 3.0), 0.0);
}

TEST(Norms, LpAgainstDirectQuadrature) {
  const auto s = build_basis(6);
  std::mt19937_64 rng(17);
  const auto u = random_field(s, rng, 0.5);
  const int n = 4 * collocation_grid(6);
  const auto u1 = scbf::testing::direct_sum(*s, scbf::testing::component(u, 0), n);
  const auto u2 = scbf::testing::direct_sum(*s, scbf::testing::component(u, 1), n);
  for (double p : {2.0, 3.0, 4.0, 6.0}) {
    double q = 0.0;
    for (std::size_t i = 0; i < u1.size(); ++i) q += std::pow(u1[i] * u1[i] + u2[i] * u2[i], p / 2);
    q = std::pow(q * scbf::testing::cell_area(n), 1.0 / p);
    // Odd p leaves a non-smooth integrand; only even p is exact.
    const double tol = p == 3.0 ? 1e-4 : 1e-10;
    EXPECT_NEAR(norm_Lp(u, p), q, tol * q) << "p=" << p;
  }
  EXPECT_NEAR(norm_Lp(u, 2.0), norm_H(u), 1e-12 * norm_H(u));
}

TEST(Norms, LpRejectsSmallExponent) {
  const auto s = build_basis(2);
  EXPECT_THROW(norm_Lp(SpectralField(s), 1.5), Error);
}

TEST(Norms, ParsevalAgainstGrid) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = random_field(s, rng);
    const auto phys = to_physical(u, collocation_grid(8));
    const double q = integrate_power(phys, 2.0);
    EXPECT_NEAR(q, norm_H2(u), 1e-12 * q);
  }
}

TEST(Transform, RoundTrip) {
  for (int K : {4, 8, 16}) {
    const auto s = build_basis(K);
    std::mt19937_64 rng(K);
    const auto u = random_field(s, rng, 0.0);
    for (int n : {collocation_grid(K), damping_grid(K)}) {
      const auto back = to_spectral(s, to_physical(u, n));
      EXPECT_LE((back.coeffs() - u.coeffs()).cwiseAbs().maxCoeff(), 1e-12 * max_abs(u));
    }
  }
}

TEST(Transform, PointValuesMatchDirectSum) {
  const auto s = build_basis(5);
  std::mt19937_64 rng(29);
  const auto u = random_field(s, rng);
  const int n = collocation_grid(5);
  const auto phys = to_physical(u, n);
  const auto u2 = scbf::testing::direct_sum(*s, scbf::testing::component(u, 1), n);
  for (std::size_t i = 0; i < u2.size(); ++i) EXPECT_NEAR(phys.u2[Eigen::Index(i)], u2[i], 1e-13);
}

TEST(Convective, SingleModeVanishes) {
  const auto s = build_basis(8);
  for (WaveVector k : {WaveVector{1, 0}, WaveVector{2, 3}, WaveVector{-4, 1}}) {
    const Eigen::Vector2d a = solenoidal_direction(k);
    const auto u = single_pair(s, k, Complex(0.7, -0.2) * a.cast<Complex>());
    EXPECT_LE(max_abs(convective_term(u)), 1e-15);
    EXPECT_LE(max_abs(convective_term(u, u)), 1e-15);
  }
  std::mt19937_64 rng(2);
  const auto v = random_field(s, rng);
  EXPECT_EQ(max_abs(convective_term(SpectralField(s), v)), 0.0);
}

TEST(Convective, SymmetricOverloadAgrees) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(31);
  const auto u = random_field(s, rng);
  const auto a = convective_term(u);
  const auto b = convective_term(u, u);
  EXPECT_LE((a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff(), 1e-13 * max_abs(a));
  EXPECT_LE(a.divergence_residual(), 1e-13);
  EXPECT_LE(a.hermitian_residual(), 1e-13 * max_abs(a));
}

TEST(Convective, ShapeMismatch) {
  const auto a = build_basis(4);
  const auto b = build_basis(5);
  try {
    convective_term(SpectralField(a), SpectralField(b));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Trilinear, SkewSymmetry) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(37);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto u = random_field(s, rng, 0.5);
    const auto v = random_field(s, rng, 0.5);
    const double scale = norm_V(u) * norm_V2(v);
    worst = std::max(worst, std::abs(trilinear(u, v, v)) / scale);
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Trilinear, AntisymmetryAndConsistencyWithB) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_field(s, rng);
    const auto v = random_field(s, rng);
    const auto w = random_field(s, rng);
    const double scale = norm_V(u) * norm_V(v) * norm_V(w);
    EXPECT_NEAR(trilinear(u, v, w), -trilinear(u, w, v), 1e-10 * scale);
    EXPECT_NEAR(inner_H(convective_term(u, v), w), trilinear(u, v, w), 1e-10 * scale);
  }
}

TEST(Trilinear, FineGridOracle) {
  const auto s = build_basis(6);
  std::mt19937_64 rng(43);
  const auto u = random_field(s, rng);
  const auto v = random_field(s, rng);
  const auto w = random_field(s, rng);
  const int n = 4 * collocation_grid(6);
  using scbf::testing::component;
  using scbf::testing::direct_sum;
  double q = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto ui = direct_sum(*s, component(u, i), n);
    for (int j = 0; j < 2; ++j) {
      const auto dv = direct_sum(*s, component(v, j, i), n);
      const auto wj = direct_sum(*s, component(w, j), n);
      for (std::size_t p = 0; p < ui.size(); ++p) q += ui[p] * dv[p] * wj[p];
    }
  }
  q *= scbf::testing::cell_area(n);
  EXPECT_NEAR(trilinear(u, v, w), q, 1e-8 * std::abs(q));
}

TEST(Convective, DualNormBound) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = random_field(s, rng, 0.5);
    const double bound = std::sqrt(2.0) * norm_H(u) * norm_V(u);
    EXPECT_LE(std::sqrt(norm_Vdual2(convective_term(u))), bound);
    EXPECT_LE(bound, std::sqrt(2.0) / std::pow(s->lambda1(), 0.25) * norm_V2(u) * (1 + 1e-14));
  }
}

TEST(Damping, TrivialCases) {
  const auto s = build_basis(8);
  for (double r : {1.0, 2.0, 3.0, 4.5}) EXPECT_EQ(max_abs(damping_term(SpectralField(s), r)), 0.0);
  std::mt19937_64 rng(53);
  const auto u = random_field(s, rng);
  EXPECT_LE((damping_term(u, 1.0).coeffs() - u.coeffs()).cwiseAbs().maxCoeff(), 1e-13 * max_abs(u));
  EXPECT_THROW(damping_term(u, 0.5), Error);
}

TEST(Damping, PairingWithLr1Norm) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = random_field(s, rng, 0.5);
    const auto eval = evaluate_damping(u, 3.0);
    const double l4 = std::pow(norm_Lp(u, 4.0), 4.0);
    EXPECT_NEAR(inner_H(eval.term, u), l4, 1e-6 * l4);
    EXPECT_NEAR(eval.lr1, l4, 1e-10 * l4);
  }
}

TEST(Damping, Monotone) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(61);
  for (double r : {1.0, 2.0, 3.0, 5.0}) {
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto a = random_field(s, rng, 0.5);
      const auto b = random_field(s, rng, 0.5);
      const auto d = a - b;
      const double g = inner_H(damping_term(a, r) - damping_term(b, r), d);
      const double scale =
          std::pow(std::max(norm_Lp(a, r + 1), norm_Lp(b, r + 1)), r - 1) * norm_H2(d);
      worst = std::min(worst, g / scale);
    }
    EXPECT_GE(worst, -1e-10) << "r=" << r;
  }
}

TEST(Damping, AliasingShrinksWithResolution) {
  // |u|u is not band limited; compare against the same field embedded in a
  // larger cutoff, where the damping grid is finer.
  const auto s = build_basis(6);
  const auto fine = build_basis(12);
  std::mt19937_64 rng(67);
  const auto u = random_field(s, rng, 1.0);
  SpectralField ue(fine);
  for (Eigen::Index i = 0; i < s->size(); ++i) ue.coeffs().row(fine->index_of(s->mode(i))) = u.coeffs().row(i);
  const auto coarse = damping_term(u, 2.0);
  const auto refined = damping_term(ue, 2.0);
  double err = 0.0;
  for (Eigen::Index i = 0; i < s->size(); ++i)
    err = std::max(err, (coarse.coeffs().row(i) - refined.coeffs().row(fine->index_of(s->mode(i)))).norm());
  EXPECT_LE(err, 1e-3 * max_abs(coarse));
}

TEST(Damping, OddExponentsAreAliasFree) {
  // Embedding in a larger cutoff changes the grid but not the projected result.
  const auto s = build_basis(6);
  const auto fine = build_basis(11);
  std::mt19937_64 rng(71);
  const auto u = random_field(s, rng, 0.5);
  SpectralField ue(fine);
  for (Eigen::Index i = 0; i < s->size(); ++i) ue.coeffs().row(fine->index_of(s->mode(i))) = u.coeffs().row(i);
  for (double r : {1.0, 3.0, 5.0}) {
    EXPECT_EQ(damping_grid(6, r) % 2, 0);
    EXPECT_GT(damping_grid(6, r), int(r + 1.0) * 6);
    const auto a = evaluate_damping(u, r);
    const auto b = evaluate_damping(ue, r);
    double err = 0.0;
    for (Eigen::Index i = 0; i < s->size(); ++i)
      err = std::max(err, (a.term.coeffs().row(i) - b.term.coeffs().row(fine->index_of(s->mode(i)))).norm());
    EXPECT_LE(err, 1e-12 * max_abs(a.term)) << "r=" << r;
    EXPECT_NEAR(a.lr1, b.lr1, 1e-12 * a.lr1) << "r=" << r;
  }
}

TEST(Inequalities, LadyzhenskayaAndGagliardoNirenberg) {
  std::map<double, std::vector<double>> constants;
  for (int K : {6, 10}) {
    const auto s = build_basis(K);
    std::mt19937_64 rng(71 + K);
    std::map<double, double> worst;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto u = random_field(s, rng, trial % 2 == 0 ? 0.5 : 1.5);
      const double h = norm_H(u), v = norm_V(u);
      EXPECT_LE(norm_Lp(u, 4.0), std::pow(2.0, 0.25) * std::sqrt(h * v));
      if (trial % 4 == 0) {
        for (double p : {4.0, 6.0, 8.0})
          worst[p] = std::max(worst[p], norm_Lp(u, p) / (std::pow(h, 1 - 2 / p) * std::pow(v, 2 / p)));
      }
    }
    for (auto [p, c] : worst) constants[p].push_back(c);
  }
  for (auto& [p, c] : constants) {
    EXPECT_GT(c[0], 0.0);
    EXPECT_LT(std::abs(c[1] / c[0] - 1.0), 0.5) << "p=" << p;
  }
}

TEST(Projection, PmQm) {
  const auto s = build_basis(8);
  std::mt19937_64 rng(73);
  const auto u = random_field(s, rng);
  EXPECT_EQ(max_abs(project_Pm(u, 0)), 0.0);
  EXPECT_EQ(project_Qm(u, 0).coeffs(), u.coeffs());
  EXPECT_EQ(max_abs(project_Qm(u, s->size())), 0.0);
  EXPECT_THROW(project_Pm(u, -1), Error);
  EXPECT_THROW(project_Qm(u, s->size() + 1), Error);

  for (Eigen::Index m : {Eigen::Index(12), Eigen::Index(20), Eigen::Index(100)}) {
    const auto p = project_Pm(u, m);
    const auto q = project_Qm(u, m);
    EXPECT_EQ((p + q).coeffs(), u.coeffs());
    const double lm = s->eigenvalues()[m - 1], lm1 = s->eigenvalues()[m];
    EXPECT_GE(norm_A2(q), lm1 * norm_V2(q));
    EXPECT_LE(norm_A2(p), lm * norm_V2(p));
  }
}

TEST(Checkpoint, RoundTrip) {
  const auto s = build_basis(5);
  std::mt19937_64 rng(79);
  const auto u = random_field(s, rng);
  std::stringstream buf;
  write_field(buf, u);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "SCBF");
  EXPECT_EQ(bytes.size(), 16 + s->size() * (8 + 32));
  EXPECT_EQ(bytes[4], 1);  // little-endian version
  EXPECT_EQ(bytes[8], 5);
  const auto back = read_field(buf);
  EXPECT_EQ(back.coeffs(), u.coeffs());

  std::stringstream bad("XXXX");
  EXPECT_THROW(read_field(bad), Error);
  std::stringstream other;
  write_field(other, u);
  EXPECT_THROW(read_field(other, build_basis(6)), Error);
}

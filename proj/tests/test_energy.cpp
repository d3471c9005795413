#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "scbf/energy.hpp"
#include "scbf/error.hpp"
#include "scbf/solver.hpp"
#include "scbf/transform.hpp"
#include "test_support.hpp"

using namespace scbf;
using scbf::testing::random_field;

TEST(Energy, EmbeddingConstantBoundsLp) {
  auto s = build_basis(8);
  std::mt19937_64 rng(1);
  for (double p : {2.0, 4.0, 6.0}) {
    const double c = embedding_constant(*s, p);
    for (int trial = 0; trial < 20; ++trial) {
      const auto z = random_field(s, rng, 0.5 * (trial % 3));
      EXPECT_LE(norm_Lp(z, p), c * norm_V(z));
    }
  }
}

TEST(Energy, ZeroDataHasNoViolation) {
  SCBFParams p;
  p.k_max = 4;
  const auto res = solve(SpectralField(p.spectrum()), 0.0, 0.2, p, NoiseConfig{});
  for (double r : res.record.ledger_residual) EXPECT_LE(r, 0.0);
  EXPECT_EQ(check_energy_inequality_H(res.record, p), 0.0);
}

TEST(Energy, UnforcedDeterministicDecay) {
  SCBFParams p;
  p.k_max = 8;
  std::mt19937_64 rng(2);
  const auto u0 = random_field(p.spectrum(), rng, 0.5, 3.0);
  const auto res = solve(u0, 0.0, 2.0, p, NoiseConfig{});
  const double l1 = p.spectrum()->lambda1();
  for (std::size_t i = 0; i < res.record.size(); ++i) {
    const double bound = norm_H2(u0) * std::exp(-p.mu * l1 * res.record.t[i]) * (1.0 + 1e-3);
    EXPECT_LE(res.record.u_h2[i], bound) << "t = " << res.record.t[i];
  }
  EXPECT_EQ(check_energy_inequality_H(res.record, p), 0.0);
}

TEST(Energy, StochasticLedgerAndRecompute) {
  SCBFParams p;
  p.k_max = 8;
  p.epsilon = 0.5;
  p.alpha = 1.0;
  p.forcing = low_mode_forcing(p.spectrum(), 1.0);
  NoiseConfig n;
  n.amplitude = 0.03;
  n.alpha = 1.0;
  n.seed = 3;
  n.origin = -0.5;
  const auto u0 = sample_ball(p.spectrum(), 5.0, 2, 0);
  const auto res = solve(u0, -0.5, 0.0, p, n);
  const double stored = check_energy_inequality_H(res.record, p);
  EXPECT_LE(stored, 0.05);
  const auto path = generate_path(-0.5, 0.0, p.dt, n, p.spectrum());
  EXPECT_NEAR(check_energy_inequality_H(res.record, path, p), stored, 1e-9);

  const auto short_path = generate_path(-0.5, -0.1, p.dt, n, p.spectrum());
  EXPECT_THROW(check_energy_inequality_H(res.record, short_path, p), Error);
}

TEST(Energy, LedgerCoefficients) {
  SCBFParams p;
  p.k_max = 4;
  p.mu = 2.0;
  p.epsilon = 0.5;
  p.alpha = 3.0;
  p.forcing = low_mode_forcing(p.spectrum(), 1.5);
  const auto c = LedgerCoefficients::from(p, *p.spectrum());
  EXPECT_DOUBLE_EQ(c.mu_lambda1, 2.0);
  EXPECT_DOUBLE_EQ(c.vz, 8.0 * 0.25 / 2.0);
  EXPECT_DOUBLE_EQ(c.z4, 8.0 * 0.0625 / 2.0);
  EXPECT_DOUBLE_EQ(c.z2, 8.0 * 9.0 * 0.25 / 2.0);
  EXPECT_NEAR(c.f, 8.0 * 2.25 / 2.0, 1e-12);
  EXPECT_NEAR(c.zr, std::pow(0.5, 4) * 2.0 * 216.0 / 256.0 * std::pow(c.c_emb, 4), 1e-12 * c.zr);
  EXPECT_EQ(ledger_residual(c, 0.0, 0.0, 0.0, 1e-3), -1.0 * c.f / c.f);
}

TEST(Energy, RadiusClosedFormWithoutNoise) {
  SCBFParams p;
  p.k_max = 4;
  NoiseConfig n;
  const auto trace0 = trace_noise(n, p.spectrum(), 1e-2, -40.0, 0.0);
  EXPECT_NEAR(compute_absorbing_radius(trace0, p).kappa13, std::sqrt(2.0), 1e-12);

  p.forcing = low_mode_forcing(p.spectrum(), 1.0);
  p.mu = 1.5;
  const auto trace = trace_noise(n, p.spectrum(), 1e-2, -40.0, 0.0);
  const auto r = compute_absorbing_radius(trace, p);
  const double expected = 2.0 + 8.0 / (p.mu * p.mu);
  EXPECT_NEAR(r.kappa13 * r.kappa13, expected, 1e-4 * expected);
  EXPECT_EQ(r.kappa12, 0.0);
}

TEST(Energy, ShortHorizonIsReported) {
  SCBFParams p;
  p.k_max = 4;
  p.forcing = low_mode_forcing(p.spectrum(), 1.0);
  NoiseConfig n;
  const auto trace = trace_noise(n, p.spectrum(), 1e-2, -5.0, 0.0);
  try {
    compute_absorbing_radius(trace, p);
    FAIL() << "expected a horizon error";
  } catch (const HorizonError& e) {
    EXPECT_GT(e.suggested_horizon(), 5.0);
  }
}

TEST(Energy, StochasticRadiusAndEntryTimes) {
  SCBFParams p;
  p.k_max = 8;
  p.epsilon = 0.5;
  p.alpha = 1.0;
  p.forcing = low_mode_forcing(p.spectrum(), 1.0);
  NoiseConfig n;
  n.amplitude = 0.03;
  n.alpha = 1.0;
  n.seed = 5;
  n.origin = -40.0;
  const auto trace = trace_noise(n, p.spectrum(), p.dt, -40.0, 0.0);
  const auto r = compute_absorbing_radius(trace, p);
  EXPECT_GT(r.kappa11, std::sqrt(2.0));
  EXPECT_NEAR(r.kappa13, r.kappa11 + 0.5 * std::sqrt(trace.h2.back()), 1e-12);
  EXPECT_GE(r.max_kappa11, r.kappa11);
  EXPECT_GT(r.t_D, 0.0);
  EXPECT_GE(r.t_D_V, r.t_D);
  EXPECT_GE(r.kappa15, 0.0);
  EXPECT_GE(r.v_ball, r.kappa15);
  const auto along = kappa11_along(trace, p, -2.0);
  EXPECT_EQ(along.size(), 2001u);
  EXPECT_DOUBLE_EQ(along.back(), r.kappa11);
}

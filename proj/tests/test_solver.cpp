#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "scbf/error.hpp"
#include "scbf/solver.hpp"
#include "test_support.hpp"

using namespace scbf;
using scbf::testing::random_field;

namespace {

SCBFParams base_params(int k_max = 8) {
  SCBFParams p;
  p.k_max = k_max;
  p.alpha = 1.0;
  return p;
}

NoiseConfig base_noise(std::uint64_t seed) {
  NoiseConfig n;
  n.amplitude = 0.03;
  n.alpha = 1.0;
  n.seed = seed;
  return n;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("scbf_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Solver, SingleModeAnalyticDecay) {
  auto p = base_params();
  p.beta = 0.0;
  auto s = p.spectrum();
  SpectralField u(s);
  const WaveVector k{1, 2};
  const Eigen::Vector2d a = solenoidal_direction(k);
  u.coeffs().row(s->index_of(k)) << Complex(0.3, 0.4) * a[0], Complex(0.3, 0.4) * a[1];
  u.coeffs().row(s->index_of(-k)) = u.coeffs().row(s->index_of(k)).conjugate();

  // One step is exact in the linear part.
  const auto one = step_v(u, SpectralField(s), p);
  const double g = std::exp(-5.0 * p.dt);
  EXPECT_LT(norm_H(one - g * u), 1e-14 * norm_H(u));

  const auto res = solve(u, 0.0, 1.0, p, NoiseConfig{});
  const SpectralField exact = std::exp(-5.0) * u;
  EXPECT_LT(norm_H(res.u - exact) / norm_H(exact), 1e-3);
  EXPECT_EQ(res.steps, 1000);
}

TEST(Solver, EnergyNonincreasingWithoutForcing) {
  auto p = base_params();
  std::mt19937_64 rng(3);
  SpectralField v = random_field(p.spectrum(), rng, 1.0, 2.0);
  const Integrator integrator(p);
  const SpectralField zero(p.spectrum());
  double last = norm_H(v);
  for (int n = 0; n < 300; ++n) {
    integrator.step_v(v, zero, n);
    const double now = norm_H(v);
    EXPECT_LE(now, last);
    last = now;
  }
}

TEST(Solver, RichardsonRatioUnderStepHalving) {
  // RMS over two noise paths; each dt level sees the same Brownian path.
  double num = 0.0, den = 0.0;
  for (std::uint64_t seed : {1u, 2u}) {
    SpectralField v[3];
    for (int level = 0; level < 3; ++level) {
      auto p = base_params();
      p.epsilon = 0.5;
      p.dt = 1e-3 / double(1 << level);
      p.forcing = low_mode_forcing(p.spectrum(), 1.0);
      auto n = base_noise(seed);
      n.refinement = 2 - level;
      RunOptions o;
      o.record_stride = 0;
      v[level] = solve(sample_ball(p.spectrum(), 3.0, 5, 0), 0.0, 0.5, p, n, o).v;
    }
    num += norm_H2(v[0] - v[1]);
    den += norm_H2(v[1] - v[2]);
  }
  EXPECT_NEAR(std::sqrt(num / den), 2.0, 0.2);
}

TEST(Solver, ZeroLengthRun) {
  auto p = base_params();
  p.epsilon = 0.5;
  std::mt19937_64 rng(4);
  const auto u0 = random_field(p.spectrum(), rng);
  const auto res = solve_pullback(u0, 0.0, p, base_noise(1));
  EXPECT_EQ(res.u.coeffs(), u0.coeffs());
  EXPECT_TRUE(res.record.empty());
  EXPECT_EQ(res.steps, 0);
}

TEST(Solver, EpsilonZeroIsDeterministicFlow) {
  auto p = base_params();
  p.forcing = low_mode_forcing(p.spectrum(), 1.0);
  std::mt19937_64 rng(5);
  const auto u0 = random_field(p.spectrum(), rng);
  const auto a = solve(u0, -0.2, 0.0, p, base_noise(1));
  const auto b = solve(u0, -0.2, 0.0, p, NoiseConfig{});
  const auto c = solve_direct(u0, -0.2, 0.0, p, base_noise(1));
  EXPECT_EQ(a.u.coeffs(), b.u.coeffs());
  EXPECT_EQ(a.u.coeffs(), c.u.coeffs());

  SpectralField x = u0, y = u0;
  const Integrator integrator(p);
  const SpectralField zero(p.spectrum());
  integrator.step_v(x, zero);
  integrator.step_u_direct(y, zero);
  EXPECT_EQ(x.coeffs(), y.coeffs());
}

TEST(Solver, OUTransformMatchesDirectScheme) {
  auto p = base_params();
  p.epsilon = 0.5;
  p.forcing = low_mode_forcing(p.spectrum(), 1.0);
  const auto u0 = sample_ball(p.spectrum(), 3.0, 8, 0);
  RunOptions o;
  o.record_stride = 0;
  const auto a = solve(u0, 0.0, 0.5, p, base_noise(3), o);
  const auto b = solve_direct(u0, 0.0, 0.5, p, base_noise(3), o);
  EXPECT_LT(norm_H(a.u - b.u) / norm_H(b.u), 1e-2);
  EXPECT_GT(norm_H(a.z), 0.0);
}

TEST(Solver, RestartIsBitwise) {
  auto p = base_params();
  p.epsilon = 0.5;
  p.forcing = low_mode_forcing(p.spectrum(), 1.0);
  std::mt19937_64 rng(6);
  const auto u0 = random_field(p.spectrum(), rng);
  const auto noise = base_noise(4);
  const auto full = solve(u0, -0.3, 0.0, p, noise);

  RestartState state;
  solve_with_state(u0, -0.3, -0.1, p, noise, &state);
  const auto dir = scratch_dir("restart");
  save_restart(dir, state);
  const auto loaded = load_restart(dir);
  EXPECT_EQ(loaded.time, state.time);
  EXPECT_EQ(loaded.params.forcing.coeffs(), p.forcing.coeffs());
  const auto rest = resume(loaded, 0.0);
  EXPECT_EQ(rest.u.coeffs(), full.u.coeffs());
  EXPECT_EQ(rest.record.h_norm2.back(), full.record.h_norm2.back());
  std::filesystem::remove_all(dir);
}

TEST(Solver, RecordLayout) {
  auto p = base_params(4);
  p.epsilon = 0.5;
  std::mt19937_64 rng(7);
  const auto u0 = random_field(p.spectrum(), rng);
  RunOptions o;
  o.record_stride = 10;
  const auto res = solve(u0, -1.0, 0.0, p, base_noise(2), o);
  ASSERT_EQ(res.record.size(), 101u);
  for (std::size_t i = 1; i < res.record.size(); ++i) EXPECT_GT(res.record.t[i], res.record.t[i - 1]);
  EXPECT_EQ(res.record.t.back(), 0.0);
  for (std::size_t i = 0; i < res.record.size(); ++i) {
    EXPECT_GE(res.record.h_norm2[i], 0.0);
    EXPECT_GE(res.record.lr1_norm[i], 0.0);
  }
  EXPECT_NEAR(res.record.u_h2.back(), norm_H2(res.u), 1e-12 * norm_H2(res.u));

  std::ostringstream os;
  write_csv(os, res.record);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,h_norm2,v_norm2,lr1_norm,ledger_residual");

  o.record_stride = 0;
  EXPECT_EQ(solve(u0, -1.0, 0.0, p, base_noise(2), o).record.size(), 2u);
}

TEST(Solver, WindowIntegralsMatchRecord) {
  auto p = base_params(4);
  p.epsilon = 0.5;
  std::mt19937_64 rng(8);
  const auto u0 = random_field(p.spectrum(), rng);
  const auto res = solve(u0, -1.5, 0.0, p, base_noise(2));
  double v2 = 0.0, lr1 = 0.0, a2 = 0.0;
  for (std::size_t i = 0; i + 1 < res.record.size(); ++i) {
    if (res.record.t[i] < -1.0 - 1e-12) continue;
    v2 += p.dt * res.record.v_norm2[i];
    lr1 += p.dt * res.record.lr1_norm[i];
    a2 += p.dt * res.record.a_norm2[i];
  }
  EXPECT_NEAR(res.int_v2, v2, 1e-12 * v2);
  EXPECT_NEAR(res.int_lr1, lr1, 1e-12 * lr1);
  EXPECT_NEAR(res.int_a2, a2, 1e-12 * a2);
}

TEST(Solver, BlowUpRaisesDiverged) {
  auto p = base_params(4);
  p.dt = 0.5;
  p.beta = 0.0;
  std::mt19937_64 rng(9);
  const auto u0 = random_field(p.spectrum(), rng, 0.0, 1e4);
  try {
    solve(u0, 0.0, 200.0, p, NoiseConfig{});
    FAIL() << "expected divergence";
  } catch (const DivergedError& e) {
    EXPECT_GE(e.step(), 0);
    EXPECT_EQ(e.kind(), ErrorKind::Diverged);
  }
}

TEST(Solver, RejectsInvalidRuns) {
  auto p = base_params(4);
  std::mt19937_64 rng(10);
  const auto u0 = random_field(p.spectrum(), rng);
  EXPECT_THROW(solve(u0, 0.0, -1.0, p, NoiseConfig{}), Error);
  EXPECT_THROW(solve(u0, 0.0, 0.00015, p, NoiseConfig{}), Error);
  EXPECT_THROW(solve(random_field(build_basis(5), rng), 0.0, 1.0, p, NoiseConfig{}), Error);
  p.epsilon = 0.5;
  auto n = base_noise(1);
  n.alpha = 2.0;
  EXPECT_THROW(solve(u0, 0.0, 0.1, p, n), Error);
  p.epsilon = 1.5;
  EXPECT_THROW(solve(u0, 0.0, 0.1, p, base_noise(1)), Error);
}

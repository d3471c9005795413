#include "scbf/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scbf/error.hpp"
#include "scbf/nonlinear.hpp"
#include "scbf/parallel.hpp"
#include "scbf/transform.hpp"

#ifndef SCBF_GIT_DESCRIBE
#define SCBF_GIT_DESCRIBE "unknown"
#endif

namespace scbf {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

const std::vector<std::pair<Experiment, const char*>>& names() {
  static const std::vector<std::pair<Experiment, const char*>> table = {
      {Experiment::Identities, "identities"},
      {Experiment::OuStats, "ou-stats"},
      {Experiment::Trajectory, "trajectory"},
      {Experiment::Absorbing, "absorbing"},
      {Experiment::Flattening, "flattening"},
      {Experiment::Usc, "usc"},
      {Experiment::UscPair, "usc-pair"},
      {Experiment::InvariantMeasure, "invariant-measure"},
      {Experiment::Cocycle, "cocycle"},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::InvalidParameter, what); }

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double x, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(text, &used);
  } catch (const std::exception&) {
    bad(key + ": not a number: '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(x)) bad(key + ": not a finite number: '" + text + "'");
  return x;
}

std::map<std::string, std::string> defaults_for(Experiment e) {
  std::map<std::string, std::string> d = {
      {"mu", "1"},
      {"beta", "1"},
      {"r", "3"},
      {"epsilon", "0.5"},
      {"alpha", "1"},
      {"dt", "0.001"},
      {"k_max", "8"},
      {"forcing_norm", "1"},
      {"noise.amplitude", "0.03"},
      {"noise.decay_exponent", "1.76"},
      {"noise.refinement", "0"},
      {"seed", "1"},
      {"pullback_times", ""},
      {"ensemble_size", "16"},
      {"initial_radius", "0"},
      {"noise_horizon", "60"},
      {"epsilons", "0.5,0.25,0.1,0.05"},
      {"eps0", "0.25"},
      {"eps_pair", "0.35,0.3"},
      {"horizon", "1"},
      {"burn_in", "50"},
      {"observable", "h_norm2"},
      {"batches", "20"},
      {"samples", "100000"},
      {"trajectories", "16"},
      {"paths", "8"},
      {"convergence_horizon", "0.5"},
      {"cocycle_pairs", "1:1,2:0.5,0:1,1:0"},
      {"cocycle_epsilons", "0,0.5"},
      {"output_dir", std::string("results/") + to_string(e)},
  };
  switch (e) {
    case Experiment::OuStats:
      d["k_max"] = "4";
      d["dt"] = "0.01";
      d["horizon"] = "1000";
      d["noise.amplitude"] = "0.7";
      d["alpha"] = "0.5";
      break;
    case Experiment::Trajectory:
      d["initial_radius"] = "5";
      break;
    case Experiment::Usc:
    case Experiment::UscPair:
      d["forcing_norm"] = "0";
      d["pullback_times"] = "-10";
      d["ensemble_size"] = "8";
      d["initial_radius"] = "1";
      break;
    case Experiment::InvariantMeasure:
      d["horizon"] = "500";
      d["initial_radius"] = "3";
      break;
    case Experiment::Cocycle:
      d["initial_radius"] = "3";
      break;
    default:
      break;
  }
  return d;
}

std::vector<std::pair<double, double>> cocycle_pairs(const Settings& s) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split(s.get("cocycle_pairs"), ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) bad("cocycle_pairs: expected t:s, got '" + item + "'");
    out.emplace_back(parse_number("cocycle_pairs", trim(item.substr(0, colon))),
                     parse_number("cocycle_pairs", trim(item.substr(colon + 1))));
  }
  return out;
}

Assertion declared(std::string name, std::string description, std::string relation, double tolerance,
                   double upper = 0.0) {
  Assertion a;
  a.name = std::move(name);
  a.description = std::move(description);
  a.relation = std::move(relation);
  a.tolerance = tolerance;
  a.upper = upper;
  return a;
}

bool holds(const Assertion& a, double x) {
  if (!std::isfinite(x)) return false;
  if (a.relation == "<=") return x <= a.tolerance;
  if (a.relation == "<") return x < a.tolerance;
  if (a.relation == ">=") return x >= a.tolerance;
  if (a.relation == "==") return x == a.tolerance;
  if (a.relation == "in") return x >= a.tolerance && x <= a.upper;
  return false;
}

std::string criterion_text(const Assertion& a) {
  if (a.relation == "in") return "in [" + fmt(a.tolerance, "%g") + ", " + fmt(a.upper, "%g") + "]";
  return a.relation + " " + fmt(a.tolerance, "%g");
}

Table record_table(const std::string& name, const TrajectoryRecord& record) {
  Table t{name, {"t", "h_norm2", "v_norm2", "lr1_norm", "ledger_residual"}, {}};
  for (std::size_t i = 0; i < record.size(); ++i)
    t.rows.push_back({record.t[i], record.h_norm2[i], record.v_norm2[i], record.lr1_norm[i],
                      record.ledger_residual[i]});
  return t;
}

SpectralField random_test_field(const SpectrumPtr& s, std::uint64_t seed, std::uint64_t stream, double decay) {
  const Eigen::ArrayXd w = s->eigenvalues().pow(-decay);
  return gaussian_field(s, w, seed, stream);
}

// Amplitude of mode i along its divergence-free direction.
Complex solenoidal_amplitude(const SpectralField& z, Eigen::Index i) {
  const Eigen::Vector2d d = solenoidal_direction(z.spectrum().mode(i));
  return d[0] * z.coeffs()(i, 0) + d[1] * z.coeffs()(i, 1);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& x) {
  MeanSe out;
  const double n = double(x.size());
  for (double v : x) out.mean += v;
  out.mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - out.mean) * (v - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

// Sections, one per experiment.

void run_identities(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const auto s = c.params.spectrum();
  const std::uint64_t seed = c.seed;
  std::uint64_t stream = 0;
  auto next = [&](double decay = 0.5) { return random_test_field(s, seed, stream++, decay); };

  double leray = 0.0, divergence = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ModeCoeffs raw = next().coeffs();
    const ModeCoeffs noise = next().coeffs();
    // Add a gradient part k·φ so the projection has work to do.
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const auto& k = s->mode(i);
      raw(i, 0) += double(k.k1) * noise(i, 0);
      raw(i, 1) += double(k.k2) * noise(i, 0);
    }
    const auto once = leray_project(s, raw);
    const auto twice = leray_project(once);
    const double scale = once.coeffs().cwiseAbs().maxCoeff();
    leray = std::max(leray, (twice.coeffs() - once.coeffs()).cwiseAbs().maxCoeff() / scale);
    divergence = std::max(divergence, once.divergence_residual());
  }
  rep.check("leray_idempotence", leray);
  rep.check("leray_divergence_free", divergence);

  double poincare = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = next();
    poincare = std::min(poincare, (norm_V2(u) - s->lambda1() * norm_H2(u)) / norm_V2(u));
    poincare = std::min(poincare, (norm_A2(u) - s->lambda1() * norm_V2(u)) / norm_A2(u));
  }
  rep.check("poincare", poincare);
  {
    SpectralField ring(s);
    const auto r = next();
    for (Eigen::Index i = 0; i < s->size() && s->eigenvalues()[i] == s->lambda1(); ++i)
      ring.coeffs().row(i) = r.coeffs().row(i);
    rep.check("poincare_equality", std::abs(norm_V2(ring) - s->lambda1() * norm_H2(ring)) / norm_H2(ring));
  }

  double parseval = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = next();
    const double q = integrate_power(to_physical(u, collocation_grid(s->k_max())), 2.0);
    parseval = std::max(parseval, std::abs(q - norm_H2(u)) / norm_H2(u));
  }
  rep.check("parseval", parseval);

  double skew = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto u = next(), v = next(), w = next();
    skew = std::max(skew, std::abs(trilinear(u, v, v)) / (norm_V(u) * norm_V2(v)));
    const double scale = norm_V(u) * norm_V(v) * norm_V(w);
    skew = std::max(skew, std::abs(trilinear(u, v, w) + trilinear(u, w, v)) / scale);
  }
  rep.check("trilinear_skew", skew);

  Table mono{"damping_monotonicity", {"r", "pairs", "min_normalized_pairing"}, {}};
  double worst = std::numeric_limits<double>::infinity();
  for (double r : {1.0, 2.0, 3.0, 5.0}) {
    double w = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 1000; ++trial) {
      const auto a = next(), b = next();
      const auto d = a - b;
      const double g = inner_H(damping_term(a, r) - damping_term(b, r), d);
      const double scale = std::pow(std::max(norm_Lp(a, r + 1), norm_Lp(b, r + 1)), r - 1) * norm_H2(d);
      w = std::min(w, g / scale);
    }
    mono.rows.push_back({r, 1000.0, w});
    worst = std::min(worst, w);
  }
  rep.tables.push_back(std::move(mono));
  rep.check("damping_monotone", worst);

  // Exact: P_m + Q_m = I bitwise, and both spectral inequalities with no slack.
  int violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = next();
    for (Eigen::Index m = 1; m < s->size(); m += 7) {
      const auto p = project_Pm(u, m), q = project_Qm(u, m);
      if ((p + q).coeffs() != u.coeffs()) ++violations;
      if (norm_A2(q) < s->eigenvalues()[m] * norm_V2(q)) ++violations;
      if (norm_A2(p) > s->eigenvalues()[m - 1] * norm_V2(p)) ++violations;
    }
  }
  rep.check("projection_inequalities", double(violations));
  rep.section_seconds["identities"] = seconds_since(t0);
}

void run_ou_stats(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const auto s = c.params.spectrum();
  NoiseConfig n = c.noise;
  n.origin.reset();
  const double dt = c.params.dt;
  const auto samples = c.settings.integer("samples");

  std::vector<Eigen::Index> modes;
  double last = -1.0;
  for (Eigen::Index i = 0; i < s->size(); ++i)
    if (s->eigenvalues()[i] != last && StokesSpectrum::is_upper_half(s->mode(i))) {
      modes.push_back(i);
      last = s->eigenvalues()[i];
    }

  std::vector<std::vector<double>> v0(modes.size()), v1(modes.size()), cross(modes.size());
  for (auto* v : {&v0, &v1, &cross})
    for (auto& x : *v) x.reserve(std::size_t(samples));
  for (std::int64_t k = 0; k < samples; ++k) {
    const auto z0 = sample_stationary_initial(n, s, k);
    const auto z1 = ou_step(z0, dt, n, k);
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const Complex a0 = solenoidal_amplitude(z0, modes[m]), a1 = solenoidal_amplitude(z1, modes[m]);
      v0[m].push_back(std::norm(a0));
      v1[m].push_back(std::norm(a1));
      cross[m].push_back((a1 * std::conj(a0)).real());
    }
  }
  const Eigen::ArrayXd gamma = ou_rates(n, *s);
  const Eigen::ArrayXd sigma = noise_intensity(n, *s);
  Table t{"ou_stats",
          {"k1", "k2", "lambda", "variance", "variance_measured", "variance_se", "autocorrelation",
           "autocorrelation_measured", "autocorrelation_se"},
          {}};
  double var_z = 0.0, rho_z = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const Eigen::Index i = modes[m];
    const double var = sigma[i] * sigma[i] / (2.0 * gamma[i]);
    const double rho = std::exp(-gamma[i] * dt);
    const auto e0 = mean_se(v0[m]), e1 = mean_se(v1[m]), ec = mean_se(cross[m]);
    var_z = std::max({var_z, std::abs(e0.mean - var) / e0.se, std::abs(e1.mean - var) / e1.se});
    rho_z = std::max(rho_z, std::abs(ec.mean / var - rho) / (ec.se / var));
    t.rows.push_back({double(s->mode(i).k1), double(s->mode(i).k2), s->eigenvalues()[i], var, e0.mean, e0.se, rho,
                      ec.mean / var, ec.se / var});
  }
  rep.tables.push_back(std::move(t));
  rep.check("stationary_variance", var_z);
  rep.check("lag1_autocorrelation", rho_z);
  rep.section_seconds["per_mode"] = seconds_since(t0);

  const auto t1 = Clock::now();
  const double T = c.settings.number("horizon");
  OUProcess p(n, s, dt, -T);
  const auto steps = step_index(T, dt);
  double sum = 0.0;
  for (std::int64_t k = 0; k < steps; ++k) {
    const double a = norm_V2(p.current());
    p.advance();
    sum += 0.5 * (a + norm_V2(p.current())) * dt;
  }
  const double expected = analytic_moments(n, *s).mean_V2;
  rep.values["ergodic_v2_average"] = sum / T;
  rep.values["ergodic_v2_expected"] = expected;
  rep.check("ergodic_v_average", std::abs(sum / T / expected - 1.0));
  rep.section_seconds["ergodic"] = seconds_since(t1);
}

void run_trajectory(const ExperimentConfig& c, Report& rep) {
  const auto sp = c.params.spectrum();
  const double Tc = c.settings.number("convergence_horizon");
  const auto paths = std::size_t(c.settings.integer("paths"));
  RunOptions end_only;
  end_only.record_stride = 0;

  // Step convergence of the transformed system on a shared Brownian path.
  auto t0 = Clock::now();
  {
    std::vector<double> num(paths), den(paths);
    parallel_for(paths, [&](std::size_t i) {
      SpectralField v[3];
      for (int level = 0; level < 3; ++level) {
        SCBFParams p = c.params;
        p.dt = c.params.dt / double(1 << level);
        NoiseConfig n = c.noise;
        n.seed = c.seed + i;
        n.origin = 0.0;
        n.refinement = c.noise.refinement + 2 - level;
        v[level] = solve(sample_ball(sp, c.initial_radius, c.seed + 1, i), 0.0, Tc, p, n, end_only).v;
      }
      num[i] = norm_H2(v[0] - v[1]);
      den[i] = norm_H2(v[1] - v[2]);
    });
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < paths; ++i) a += num[i], b += den[i];
    rep.check("richardson_ratio", std::sqrt(a / b));
  }
  {
    SCBFParams p = c.params;
    p.beta = 0.0;
    p.epsilon = 0.0;
    p.forcing = SpectralField();
    SpectralField u(sp);
    const WaveVector k{1, 2};
    const Eigen::Vector2d d = solenoidal_direction(k);
    u.coeffs().row(sp->index_of(k)) << Complex(0.3, 0.4) * d[0], Complex(0.3, 0.4) * d[1];
    u.coeffs().row(sp->index_of(-k)) = u.coeffs().row(sp->index_of(k)).conjugate();
    const double T = 1.0;
    const auto res = solve(u, 0.0, T, p, NoiseConfig{}, end_only);
    const SpectralField exact = std::exp(-p.mu * 5.0 * T) * u;
    rep.check("single_mode_decay", norm_H(res.u - exact) / norm_H(exact));
  }
  rep.section_seconds["convergence"] = seconds_since(t0);

  // Direct Euler–Maruyama against v + εz on the same increments.
  t0 = Clock::now();
  {
    std::vector<double> coarse(paths), fine(paths);
    parallel_for(paths, [&](std::size_t i) {
      for (int level = 0; level < 2; ++level) {
        SCBFParams p = c.params;
        p.dt = c.params.dt / double(1 << level);
        NoiseConfig n = c.noise;
        n.seed = c.seed + i;
        n.origin = 0.0;
        n.refinement = c.noise.refinement + 1 - level;
        const auto u0 = sample_ball(sp, c.initial_radius, c.seed + 1, i);
        const auto a = solve(u0, 0.0, Tc, p, n, end_only);
        const auto b = solve_direct(u0, 0.0, Tc, p, n, end_only);
        (level == 0 ? coarse : fine)[i] = norm_H(a.u - b.u) / norm_H(b.u);
      }
    });
    double worst = 0.0, a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < paths; ++i) {
      worst = std::max(worst, coarse[i]);
      a += coarse[i] * coarse[i];
      b += fine[i] * fine[i];
    }
    Table t{"transform_equivalence", {"path", "relative_gap_dt", "relative_gap_dt_half"}, {}};
    for (std::size_t i = 0; i < paths; ++i) t.rows.push_back({double(i), coarse[i], fine[i]});
    rep.tables.push_back(std::move(t));
    rep.check("transform_gap", worst);
    rep.check("transform_gap_ratio", std::sqrt(a / b));
  }
  rep.section_seconds["transform"] = seconds_since(t0);

  // Energy ledger along random trajectories, at dt and dt/2.
  t0 = Clock::now();
  {
    const auto members = std::size_t(c.settings.integer("trajectories"));
    const double T = c.settings.number("horizon");
    std::vector<double> full(members), half(members);
    TrajectoryRecord first;
    parallel_for(members, [&](std::size_t i) {
      for (int level = 0; level < 2; ++level) {
        SCBFParams p = c.params;
        p.dt = c.params.dt / double(1 << level);
        NoiseConfig n = c.noise;
        n.seed = c.seed + i;
        n.origin = 0.0;
        n.refinement = c.noise.refinement + 1 - level;
        const auto res = solve(sample_ball(sp, c.initial_radius, c.seed + 2, i), 0.0, T, p, n);
        (level == 0 ? full : half)[i] = check_energy_inequality_H(res.record, p);
        if (i == 0 && level == 0) first = res.record;
      }
    });
    Table t{"trajectory", {"member", "seed", "max_violation_dt", "max_violation_dt_half"}, {}};
    double worst_full = 0.0, worst_half = 0.0;
    for (std::size_t i = 0; i < members; ++i) {
      t.rows.push_back({double(i), double(c.seed + i), full[i], half[i]});
      worst_full = std::max(worst_full, full[i]);
      worst_half = std::max(worst_half, half[i]);
    }
    rep.tables.push_back(std::move(t));
    rep.tables.push_back(record_table("trajectory_record", first));
    rep.values["max_violation_dt"] = worst_full;
    rep.values["max_violation_dt_half"] = worst_half;
    rep.check("ledger_violation", worst_full);
    rep.check("ledger_dt_halving", worst_half - worst_full);
  }
  {
    SCBFParams p = c.params;
    p.epsilon = 0.0;
    p.forcing = SpectralField();
    const auto u0 = sample_ball(sp, c.initial_radius, c.seed + 3, 0);
    const auto res = solve(u0, 0.0, 2.0, p, NoiseConfig{});
    double worst = 0.0;
    for (std::size_t i = 0; i < res.record.size(); ++i) {
      const double bound = norm_H2(u0) * std::exp(-p.mu * sp->lambda1() * res.record.t[i]);
      worst = std::max(worst, res.record.u_h2[i] / bound - 1.0);
    }
    rep.check("unforced_decay", worst);
  }
  rep.section_seconds["ledger"] = seconds_since(t0);
}

struct RadiusSetup {
  NoiseConfig omega;
  AbsorbingRadius radius;
  double ball = 0.0;
  PullbackSchedule schedule;
};

RadiusSetup absorbing_setup(const ExperimentConfig& c, double extra) {
  RadiusSetup r;
  const double H = c.settings.number("noise_horizon");
  r.omega = c.noise;
  r.omega.origin = -H;
  const auto trace = trace_noise(r.omega, c.params.spectrum(), c.params.dt, -H, 0.0);
  r.radius = compute_absorbing_radius(trace, c.params, c.initial_radius);
  r.ball = c.initial_radius > 0.0 ? c.initial_radius : 10.0 * r.radius.kappa13;
  if (!c.schedule.pullback_times.empty()) {
    r.schedule = c.schedule;
  } else {
    const double s1 = -std::ceil(r.radius.t_D_V + 1.0);
    r.schedule.pullback_times = extra > 0.0 ? std::vector<double>{s1, s1 - extra} : std::vector<double>{s1 - 4.0};
  }
  require(r.schedule.longest() >= -H, ErrorKind::InvalidParameter,
          "pullback times reach beyond the noise horizon");
  return r;
}

void radius_values(const RadiusSetup& r, Report& rep) {
  rep.values["kappa13"] = r.radius.kappa13;
  rep.values["kappa14"] = r.radius.kappa14;
  rep.values["kappa15"] = r.radius.kappa15;
  rep.values["kappa16"] = r.radius.kappa16;
  rep.values["v_ball"] = r.radius.v_ball;
  rep.values["t_D"] = r.radius.t_D;
  rep.values["t_D_V"] = r.radius.t_D_V;
  rep.values["initial_radius"] = r.ball;
}

void run_absorbing(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const auto r = absorbing_setup(c, 4.0);
  radius_values(r, rep);
  const auto clouds = attractor_sample(r.schedule, c.params, r.omega, r.ball, c.ensemble_size, c.seed + 1);

  Table members{"absorbing", {"s", "member", "u_norm_H", "v_norm_V", "u_norm_V", "int_energy", "int_a2"}, {}};
  Table pull{"pullback", {"s", "cloud_diameter", "d_to_baseline", "diverged"}, {}};
  double h = 0.0, v = 0.0, uv = 0.0, e = 0.0, a2 = 0.0, diverged = 0.0;
  for (const auto& cloud : clouds) {
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
      const auto& d = cloud.diagnostics[i];
      const double u_v = norm_V(cloud.points[i]);
      members.rows.push_back({cloud.pullback_time, double(i), d.u_norm_H, d.v_norm_V, u_v, d.int_energy, d.int_a2});
      h = std::max(h, d.u_norm_H / r.radius.kappa13);
      v = std::max(v, d.v_norm_V / r.radius.kappa15);
      uv = std::max(uv, u_v / r.radius.v_ball);
      e = std::max(e, d.int_energy / r.radius.kappa14);
      a2 = std::max(a2, c.params.mu * d.int_a2 / r.radius.kappa16);
    }
    diverged += cloud.diverged;
    const double base = cloud.points.empty() || clouds.back().points.empty()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : hausdorff_semidistance(cloud, clouds.back(), SpaceTag::H);
    pull.rows.push_back({cloud.pullback_time, cloud.diameter(), base, double(cloud.diverged)});
  }
  rep.tables.push_back(std::move(pull));
  rep.tables.push_back(std::move(members));
  rep.check("entry_time", r.schedule.pullback_times.front() + r.radius.t_D_V);
  rep.check("h_ball", h);
  rep.check("v_ball", v);
  rep.check("u_v_ball", uv);
  rep.check("energy_integral", e);
  rep.check("a2_integral", a2);
  rep.check("diverged", diverged);
  rep.section_seconds["absorbing"] = seconds_since(t0);
}

void run_flattening(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const auto r = absorbing_setup(c, 0.0);
  radius_values(r, rep);
  PullbackSchedule one{{r.schedule.longest()}, 0.0};
  const auto clouds = attractor_sample(one, c.params, r.omega, r.ball, c.ensemble_size, c.seed + 1);
  const auto& cloud = clouds.front();
  require(!cloud.transformed.empty(), ErrorKind::Diverged, "every ensemble member diverged");
  const double floor = forced_eigenvalue(c.params.forcing_field());
  const auto fit = flattening_fit(cloud.transformed, floor);

  Table t{"flattening", {"m", "lambda_next", "tail", "fitted"}, {}};
  const auto& lam = c.params.spectrum()->eigenvalues();
  for (auto m : shell_boundaries(*c.params.spectrum())) {
    if (m >= lam.size()) continue;
    double tail = 0.0;
    for (const auto& v : cloud.transformed) tail = std::max(tail, flattening_tail(v, m));
    const bool fitted = std::find(fit.m.begin(), fit.m.end(), m) != fit.m.end();
    t.rows.push_back({double(m), lam[m], tail, fitted ? 1.0 : 0.0});
  }
  rep.tables.push_back(std::move(t));
  rep.values["pullback_time"] = cloud.pullback_time;
  rep.values["lambda_floor"] = floor;
  rep.values["slope"] = fit.slope;
  rep.values["intercept"] = fit.intercept;
  rep.values["fitted_points"] = double(fit.m.size());
  rep.values["diverged"] = cloud.diverged;
  rep.check("tail_nonincreasing", fit.nonincreasing ? 1.0 : 0.0);
  rep.check("fit_slope", fit.m.size() >= 2 ? fit.slope : std::numeric_limits<double>::quiet_NaN());
  rep.check("fit_r_squared", fit.r_squared);
  rep.section_seconds["flattening"] = seconds_since(t0);
}

SweepOptions sweep_options(const ExperimentConfig& c) {
  SweepOptions o;
  o.ensemble_size = c.ensemble_size;
  o.initial_ball_radius = c.initial_radius;
  o.seed = c.seed + 1;
  return o;
}

void run_usc(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const auto eps = c.settings.list("epsilons");
  const auto sweep = usc_sweep(eps, c.schedule, c.params, c.noise, sweep_options(c));
  Table t{"usc", {"s", "epsilon", "d_to_baseline", "se"}, {}};
  std::vector<double> position, d;
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    t.rows.push_back({c.schedule.longest(), sweep[i].epsilon, sweep[i].distance, sweep[i].se});
    position.push_back(double(i));
    d.push_back(sweep[i].distance);
    if (i > 0) {
      const double se = std::hypot(sweep[i].se, sweep[i - 1].se);
      excess = std::max(excess, sweep[i].distance - sweep[i - 1].distance - 2.0 * se);
    }
  }
  rep.tables.push_back(std::move(t));
  const double slope = least_squares_slope(position, d);
  rep.values["slope_vs_epsilon"] = least_squares_slope(eps, d);
  rep.check("usc_nonincreasing", sweep.size() > 1 ? excess : 0.0);
  rep.check("usc_trend", slope);
  rep.section_seconds["usc"] = seconds_since(t0);
}

void run_usc_pair(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const double eps0 = c.settings.number("eps0");
  const auto pair = c.settings.list("eps_pair");
  Table t{"usc_pair", {"epsilon", "eps0", "distance", "se"}, {}};
  std::vector<DistanceEstimate> est;
  for (double e : pair) {
    est.push_back(usc_pair(e, eps0, c.schedule, c.params, c.noise, sweep_options(c)));
    t.rows.push_back({e, eps0, est.back().distance, est.back().se});
  }
  rep.tables.push_back(std::move(t));
  rep.check("pair_ratio", est[0].distance / est[1].distance);
  rep.section_seconds["usc-pair"] = seconds_since(t0);
}

void run_invariant(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const auto obs = Observable::parse(c.settings.get("observable"));
  const double T = c.settings.number("horizon");
  const double burn = c.settings.number("burn_in");
  const int batches = int(c.settings.integer("batches"));
  const auto sp = c.params.spectrum();
  auto one = [&](std::uint64_t seed) {
    NoiseConfig n = c.noise;
    n.seed = seed;
    n.origin = 0.0;
    return time_average_observable(c.params, n, obs, T, burn, sample_ball(sp, c.initial_radius, seed, 0),
                                   batches);
  };
  const auto a = one(c.seed);
  const auto b = one(c.seed + 1);
  const auto again = one(c.seed);

  Table summary{"invariant_measure", {"run", "seed", "mean", "se"}, {}};
  summary.rows.push_back({0.0, double(c.seed), a.mean, a.se});
  summary.rows.push_back({1.0, double(c.seed + 1), b.mean, b.se});
  Table per{"invariant_batches", {"batch", "mean_a", "mean_b"}, {}};
  for (std::size_t i = 0; i < a.batch_means.size(); ++i)
    per.rows.push_back({double(i), a.batch_means[i], b.batch_means[i]});

  std::ostringstream first, second;
  write_table(first, summary);
  Table rerun = summary;
  rerun.rows[0] = {0.0, double(c.seed), again.mean, again.se};
  write_table(second, rerun);
  const bool identical = first.str() == second.str() && a.batch_means == again.batch_means;

  rep.tables.push_back(std::move(summary));
  rep.tables.push_back(std::move(per));
  rep.values["mean_a"] = a.mean;
  rep.values["mean_b"] = b.mean;
  rep.check("time_average_agreement", std::abs(a.mean - b.mean) / std::hypot(a.se, b.se));
  rep.check("rerun_identical", identical ? 1.0 : 0.0);
  rep.section_seconds["invariant-measure"] = seconds_since(t0);
}

void run_cocycle(const ExperimentConfig& c, Report& rep) {
  const auto t0 = Clock::now();
  const auto x0 = sample_ball(c.params.spectrum(), c.initial_radius, c.seed + 1, 0);
  Table t{"cocycle", {"epsilon", "t", "s", "residual", "truncation_scale"}, {}};
  double within = 0.0, zero = 0.0, deterministic = 0.0;
  for (double eps : c.settings.list("cocycle_epsilons")) {
    SCBFParams p = c.params;
    p.epsilon = eps;
    for (const auto& [tt, ss] : cocycle_pairs(c.settings)) {
      const double res = cocycle_residual(p, c.noise, x0, tt, ss);
      double scale = std::numeric_limits<double>::quiet_NaN();
      if (tt * ss == 0.0) {
        zero = std::max(zero, res);
      } else {
        scale = truncation_scale(p, c.noise, x0, tt + ss);
        within = std::max(within, scale > 0.0 ? res / (10.0 * scale) : (res > 0.0 ? INFINITY : 0.0));
      }
      if (eps == 0.0) deterministic = std::max(deterministic, res);
      t.rows.push_back({eps, tt, ss, res, scale});
    }
  }
  rep.tables.push_back(std::move(t));
  rep.check("cocycle_truncation", within);
  rep.check("cocycle_split_at_zero", zero);
  rep.check("cocycle_deterministic", deterministic);
  rep.section_seconds["cocycle"] = seconds_since(t0);
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + file.string());
  os << text;
  if (!os) throw Error(ErrorKind::Io, "write failed: " + file.string());
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json assertion_json(const Assertion& a) {
  json j = {{"name", a.name}, {"description", a.description}, {"relation", a.relation},
            {"tolerance", a.tolerance}};
  if (a.relation == "in") j["upper"] = a.upper;
  return j;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

const char* to_string(Experiment e) {
  for (const auto& [x, name] : names())
    if (x == e) return name;
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (const auto& [x, n] : names())
    if (name == n) return x;
  bad("unknown experiment '" + name + "'");
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all = [] {
    std::vector<Experiment> v;
    for (const auto& p : names()) v.push_back(p.first);
    return v;
  }();
  return all;
}

Settings::Settings(Experiment e) : values_(defaults_for(e)) {}

void Settings::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) bad("unknown key '" + key + "'");
  it->second = value;
}

const std::string& Settings::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) bad("unknown key '" + key + "'");
  return it->second;
}

double Settings::number(const std::string& key) const { return parse_number(key, get(key)); }

std::int64_t Settings::integer(const std::string& key) const {
  const std::string& text = get(key);
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(text, &used);
  } catch (const std::exception&) {
    bad(key + ": not an integer: '" + text + "'");
  }
  if (used != text.size()) bad(key + ": not an integer: '" + text + "'");
  return x;
}

std::vector<double> Settings::list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(get(key), ',')) out.push_back(parse_number(key, item));
  return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) bad("expected key=value, got '" + text + "'");
  auto key = trim(text.substr(0, eq));
  if (key.empty()) bad("empty key in '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

std::vector<std::pair<std::string, std::string>> parse_assignments(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      out.push_back(split_assignment(line));
    } catch (const Error& e) {
      bad("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) bad("cannot read config file " + file.string());
  return parse_assignments(is);
}

ExperimentConfig ExperimentConfig::make(Experiment e,
                                        const std::vector<std::pair<std::string, std::string>>& assignments) {
  ExperimentConfig c;
  c.experiment = e;
  c.settings = Settings(e);
  for (const auto& [k, v] : assignments) c.settings.set(k, v);
  c.resolve();
  return c;
}

void ExperimentConfig::resolve() {
  const Settings& s = settings;
  params = SCBFParams{};
  params.mu = s.number("mu");
  params.beta = s.number("beta");
  params.r = s.number("r");
  params.epsilon = s.number("epsilon");
  params.alpha = s.number("alpha");
  params.dt = s.number("dt");
  params.k_max = int(s.integer("k_max"));
  params.validate();
  const double fnorm = s.number("forcing_norm");
  if (fnorm < 0.0) bad("forcing_norm must be nonnegative");
  if (fnorm > 0.0) params.forcing = low_mode_forcing(params.spectrum(), fnorm);

  const auto seed_value = s.integer("seed");
  if (seed_value < 0) bad("seed must be nonnegative");
  seed = std::uint64_t(seed_value);

  noise = NoiseConfig{};
  noise.amplitude = s.number("noise.amplitude");
  noise.decay_exponent = s.number("noise.decay_exponent");
  noise.refinement = int(s.integer("noise.refinement"));
  noise.alpha = params.alpha;
  noise.mu = params.mu;
  noise.seed = seed;
  noise.validate();
  require_compatible(params, noise);

  schedule = PullbackSchedule{};
  schedule.pullback_times = s.list("pullback_times");
  if (!schedule.pullback_times.empty()) schedule.validate();
  if ((experiment == Experiment::Usc || experiment == Experiment::UscPair) && schedule.pullback_times.empty())
    bad("pullback_times is required for " + std::string(to_string(experiment)));
  if (!schedule.pullback_times.empty() && s.number("noise_horizon") < -schedule.longest())
    bad("pullback_times reach beyond noise_horizon");
  if (s.number("noise_horizon") <= 0.0) bad("noise_horizon must be positive");

  const auto ens = s.integer("ensemble_size");
  if (ens < 1 || ens > 256) bad("ensemble_size must lie in [1, 256]");
  ensemble_size = int(ens);
  initial_radius = s.number("initial_radius");
  if (initial_radius < 0.0) bad("initial_radius must be nonnegative");
  const bool needs_radius = experiment == Experiment::Trajectory || experiment == Experiment::Usc ||
                            experiment == Experiment::UscPair || experiment == Experiment::InvariantMeasure ||
                            experiment == Experiment::Cocycle;
  if (needs_radius && initial_radius <= 0.0) bad("initial_radius must be positive for this experiment");

  const auto eps = s.list("epsilons");
  if (eps.empty()) bad("epsilons must not be empty");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (eps[i] < 0.0 || eps[i] > 1.0) bad("epsilons must lie in [0, 1]");
    if (i > 0 && eps[i] >= eps[i - 1]) bad("epsilons must be strictly descending");
  }
  const double eps0 = s.number("eps0");
  if (eps0 <= 0.0 || eps0 > 1.0) bad("eps0 must lie in (0, 1]");
  const auto pair = s.list("eps_pair");
  if (pair.size() != 2) bad("eps_pair needs exactly two values");
  for (double e : pair)
    if (e <= 0.0 || e > 1.0 || e == eps0) bad("eps_pair values must lie in (0, 1] and differ from eps0");

  const double horizon = s.number("horizon");
  const double burn = s.number("burn_in");
  if (horizon <= 0.0) bad("horizon must be positive");
  if (experiment == Experiment::InvariantMeasure && (burn <= 0.0 || burn >= horizon))
    bad("burn_in must lie in (0, horizon)");
  (void)step_index(horizon, params.dt);
  Observable::parse(s.get("observable"));
  if (s.integer("batches") < 2) bad("batches must be at least 2");
  if (s.integer("samples") < 2) bad("samples must be at least 2");
  if (s.integer("trajectories") < 1) bad("trajectories must be positive");
  if (s.integer("paths") < 1) bad("paths must be positive");
  const double tc = s.number("convergence_horizon");
  if (tc <= 0.0) bad("convergence_horizon must be positive");
  (void)step_index(tc, params.dt);
  for (const auto& [t, sv] : cocycle_pairs(s)) {
    if (t < 0.0 || sv < 0.0) bad("cocycle_pairs need t, s >= 0");
    (void)step_index(t, params.dt);
    (void)step_index(sv, params.dt);
  }
  for (double e : s.list("cocycle_epsilons"))
    if (e < 0.0 || e > 1.0) bad("cocycle_epsilons must lie in [0, 1]");

  if (s.get("output_dir").empty()) bad("output_dir must not be empty");
  output_dir = s.get("output_dir");
}

void Report::check(const std::string& name, double measured) {
  for (auto& a : assertions)
    if (a.name == name) return check(name, measured, holds(a, measured));
  throw std::logic_error("undeclared assertion " + name);
}

void Report::check(const std::string& name, double measured, bool ok) {
  for (auto& a : assertions)
    if (a.name == name) {
      a.measured = measured;
      a.evaluated = true;
      a.passed = ok;
      return;
    }
  throw std::logic_error("undeclared assertion " + name);
}

const Assertion& Report::find(const std::string& name) const {
  for (const auto& a : assertions)
    if (a.name == name) return a;
  throw Error(ErrorKind::InvalidInput, "no assertion named " + name);
}

bool Report::passed() const {
  if (!error.empty()) return false;
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.evaluated && a.passed; });
}

std::vector<std::string> Report::failed() const {
  std::vector<std::string> out;
  for (const auto& a : assertions)
    if (!a.evaluated || !a.passed) out.push_back(a.name);
  return out;
}

std::vector<Assertion> declare_assertions(const ExperimentConfig& c) {
  switch (c.experiment) {
    case Experiment::Identities:
      return {
          declared("leray_idempotence", "max relative change of a second Leray projection", "<=", 1e-14),
          declared("leray_divergence_free", "max |k.u(k)| / (|k||u(k)|) after projection", "<=", 1e-13),
          declared("poincare", "min (|u|_V^2 - l1|u|_H^2)/|u|_V^2 and the A analogue", ">=", 0.0),
          declared("poincare_equality", "relative Poincare gap on the first eigenspace", "<=", 1e-14),
          declared("parseval", "relative gap between coefficient and quadrature H norms", "<=", 1e-12),
          declared("trilinear_skew", "max |b(u,v,v)| and |b(u,v,w)+b(u,w,v)| relative", "<=", 1e-10),
          declared("damping_monotone", "min normalized <C(a)-C(b), a-b> over 1000 pairs, r in {1,2,3,5}", ">=",
                   -1e-10),
          declared("projection_inequalities", "violations of P_m+Q_m=I and the P_m/Q_m bounds", "==", 0.0),
      };
    case Experiment::OuStats:
      return {
          declared("stationary_variance", "max |mean - s^2/(2g)| in SE units over shell modes", "<=", 3.0),
          declared("lag1_autocorrelation", "max |rho - exp(-g dt)| in SE units over shell modes", "<=", 3.0),
          declared("ergodic_v_average", "relative error of the time-averaged |z|_V^2", "<=", 0.05),
      };
    case Experiment::Trajectory:
      return {
          declared("richardson_ratio", "RMS step-convergence ratio under dt halving", "in", 1.8, 2.2),
          declared("single_mode_decay", "relative error of a single decaying mode at T=1", "<=", 1e-3),
          declared("transform_gap", "max |u_direct - (v + eps z)|_H / |u|_H at dt", "<=", 1e-2),
          declared("transform_gap_ratio", "RMS gap ratio under dt halving", "in", 1.7, 2.3),
          declared("ledger_violation", "max normalized energy ledger violation", "<=", 0.05),
          declared("ledger_dt_halving", "violation at dt/2 minus violation at dt", "<=", 0.0),
          declared("unforced_decay", "max |u(t)|^2/(|u0|^2 exp(-mu l1 t)) - 1", "<=", 1e-3),
      };
    case Experiment::Absorbing:
      return {
          declared("entry_time", "latest pullback time plus the V entry time", "<=", 0.0),
          declared("h_ball", "max |u(0)|_H / kappa13", "<=", 1.0),
          declared("v_ball", "max |v(0)|_V / kappa15", "<=", 1.0),
          declared("u_v_ball", "max |u(0)|_V / (kappa15 + eps |z(0)|_V)", "<=", 1.0),
          declared("energy_integral", "max integral over [-1,0] / kappa14", "<=", 1.0),
          declared("a2_integral", "max mu * integral |Av|^2 over [-1,0] / kappa16", "<=", 1.0),
          declared("diverged", "diverged ensemble members", "==", 0.0),
      };
    case Experiment::Flattening:
      return {
          declared("tail_nonincreasing", "|Q_m v|_V nonincreasing in m for every point", "==", 1.0),
          declared("fit_slope", "slope of log tail against lambda_{m+1}", "<", 0.0),
          declared("fit_r_squared", "R^2 of the log-linear fit", ">=", 0.8),
      };
    case Experiment::Usc:
      return {
          declared("usc_nonincreasing", "max increase of d along decreasing eps beyond 2 SE", "<=", 0.0),
          declared("usc_trend", "slope of d along the eps sequence", "<", 0.0),
      };
    case Experiment::UscPair:
      return {declared("pair_ratio", "d(A_eps1, A_eps0) / d(A_eps2, A_eps0)", "in", 1.5, 3.0)};
    case Experiment::InvariantMeasure:
      return {
          declared("time_average_agreement", "|mean_a - mean_b| in combined SE units", "<=", 3.0),
          declared("rerun_identical", "same seed reproduces the averages byte for byte", "==", 1.0),
      };
    case Experiment::Cocycle:
      return {
          declared("cocycle_truncation", "max residual / (10 x truncation scale) for t*s > 0", "<=", 1.0),
          declared("cocycle_split_at_zero", "max residual when t*s = 0", "==", 0.0),
          declared("cocycle_deterministic", "max residual at eps = 0", "<=", 1e-12),
      };
  }
  return {};
}

Report run_experiment(const ExperimentConfig& config) {
  Report rep;
  rep.experiment = config.experiment;
  rep.assertions = declare_assertions(config);
  switch (config.experiment) {
    case Experiment::Identities: run_identities(config, rep); break;
    case Experiment::OuStats: run_ou_stats(config, rep); break;
    case Experiment::Trajectory: run_trajectory(config, rep); break;
    case Experiment::Absorbing: run_absorbing(config, rep); break;
    case Experiment::Flattening: run_flattening(config, rep); break;
    case Experiment::Usc: run_usc(config, rep); break;
    case Experiment::UscPair: run_usc_pair(config, rep); break;
    case Experiment::InvariantMeasure: run_invariant(config, rep); break;
    case Experiment::Cocycle: run_cocycle(config, rep); break;
  }
  return rep;
}

void write_table(std::ostream& os, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
    os << '\n';
  }
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());

  json j;
  j["experiment"] = to_string(report.experiment);
  j["passed"] = report.passed();
  if (!report.error.empty()) j["error"] = report.error;
  j["assertions"] = json::array();
  for (const auto& a : report.assertions) {
    json x = assertion_json(a);
    x["measured"] = a.evaluated ? number_or_null(a.measured) : json(nullptr);
    x["evaluated"] = a.evaluated;
    x["passed"] = a.evaluated && a.passed;
    j["assertions"].push_back(x);
  }
  j["values"] = json::object();
  for (const auto& [k, v] : report.values) j["values"][k] = number_or_null(v);
  j["section_seconds"] = report.section_seconds;
  j["tables"] = json::array();
  for (const auto& t : report.tables) j["tables"].push_back(t.name + ".csv");
  write_text(dir / "summary.json", j.dump(2) + "\n");

  std::ostringstream md;
  md << "# " << to_string(report.experiment) << ": " << (report.passed() ? "PASS" : "FAIL") << "\n\n";
  if (!report.error.empty()) md << "Error: " << report.error << "\n\n";
  if (!report.assertions.empty()) {
    md << "| assertion | measured | criterion | result | description |\n|---|---|---|---|---|\n";
    for (const auto& a : report.assertions)
      md << "| " << a.name << " | " << (a.evaluated ? fmt(a.measured, "%.6g") : "-") << " | " << criterion_text(a)
         << " | " << (a.evaluated ? (a.passed ? "pass" : "FAIL") : "not run") << " | " << a.description << " |\n";
    md << '\n';
  }
  if (!report.values.empty()) {
    md << "## Values\n\n";
    for (const auto& [k, v] : report.values) md << "- " << k << " = " << fmt(v, "%.6g") << '\n';
    md << '\n';
  }
  for (const auto& t : report.tables) {
    md << "## " << t.name << "\n\n|";
    for (const auto& col : t.columns) md << ' ' << col << " |";
    md << "\n|";
    for (std::size_t i = 0; i < t.columns.size(); ++i) md << "---|";
    md << '\n';
    const std::size_t shown = std::min<std::size_t>(t.rows.size(), 40);
    for (std::size_t r = 0; r < shown; ++r) {
      md << '|';
      for (double x : t.rows[r]) md << ' ' << fmt(x, "%.6g") << " |";
      md << '\n';
    }
    if (shown < t.rows.size()) md << "\n(" << t.rows.size() << " rows in " << t.name << ".csv)\n";
    md << '\n';
  }
  write_text(dir / "summary.md", md.str());

  for (const auto& t : report.tables) {
    std::ostringstream os;
    write_table(os, t);
    write_text(dir / (t.name + ".csv"), os.str());
  }
}

const char* build_version() { return SCBF_GIT_DESCRIBE; }

void write_manifest(const ExperimentConfig& config, const std::vector<Assertion>& declared_list,
                    const std::filesystem::path& dir, double wall_seconds, bool finished) {
  json j;
  j["experiment"] = to_string(config.experiment);
  j["settings"] = config.settings.values();
  j["seeds"] = {{"seed", config.seed},
                {"noise", config.noise.seed},
                {"initial_points", config.seed + 1}};
  j["git_describe"] = build_version();
  j["threads"] = thread_cap();
  j["written_at"] = utc_now();
  j["finished"] = finished;
  j["wall_clock_seconds"] = wall_seconds;
  j["assertions"] = json::array();
  for (const auto& a : declared_list) j["assertions"].push_back(assertion_json(a));
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

int run(const ExperimentConfig& config, std::ostream& log) {
  const auto& dir = config.output_dir;
  const auto declared_list = declare_assertions(config);
  try {
    std::filesystem::create_directories(dir);
    write_manifest(config, declared_list, dir, 0.0, false);
  } catch (const std::exception& e) {
    log << "error: output directory " << dir.string() << " is not writable: " << e.what() << '\n';
    return 2;
  }

  const auto start = Clock::now();
  Report report;
  try {
    report = run_experiment(config);
  } catch (const std::exception& e) {
    report.experiment = config.experiment;
    report.assertions = declared_list;
    report.error = e.what();
  }
  try {
    emit_report(report, dir);
    write_manifest(config, declared_list, dir, seconds_since(start), true);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }

  for (const auto& a : report.assertions)
    log << (a.evaluated ? (a.passed ? "pass " : "FAIL ") : "skip ") << a.name << ": "
        << (a.evaluated ? fmt(a.measured, "%.6g") : "-") << ' ' << criterion_text(a) << '\n';
  if (!report.error.empty()) {
    log << "error: " << report.error << '\n';
    return 1;
  }
  if (!report.passed()) {
    for (const auto& name : report.failed()) {
      const auto& a = report.find(name);
      log << "assertion failed: " << to_string(config.experiment) << "/" << name << " (" << a.description << ")\n";
    }
    return 1;
  }
  return 0;
}

}  // namespace scbf

#include "scbf/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "scbf/error.hpp"

namespace scbf {

namespace {

constexpr double kTwoPiSquared = 4.0 * std::numbers::pi * std::numbers::pi;

// Cumulative trapezoid from the first sample: out[n] = ∫_{t0}^{t_n} y.
std::vector<double> cumulative(const std::vector<double>& y, double dt) {
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t n = 1; n < y.size(); ++n) out[n] = out[n - 1] + 0.5 * dt * (y[n - 1] + y[n]);
  return out;
}

void require_trace_ends_at_zero(const NoiseTrace& trace) {
  require(trace.size() >= 2 && trace.dt > 0.0, ErrorKind::InvalidInput, "noise trace is empty");
  const double t_end = trace.time(trace.size() - 1);
  require(std::abs(t_end) <= 1e-9 * std::max(1.0, std::abs(trace.t0)), ErrorKind::InvalidInput,
          "noise trace must end at t = 0");
}

}  // namespace

double embedding_constant(const StokesSpectrum& spectrum, double p) {
  const double two_pi = 2.0 * std::numbers::pi;
  return std::pow(two_pi, 2.0 / p - 1.0) * std::sqrt(spectrum.eigenvalues().inverse().sum());
}

LedgerCoefficients LedgerCoefficients::from(const SCBFParams& params, const StokesSpectrum& spectrum) {
  const double mu = params.mu, eps = params.epsilon, r = params.r;
  const double l1 = spectrum.lambda1();
  LedgerCoefficients c;
  c.r = r;
  c.mu_lambda1 = mu * l1;
  c.c_emb = embedding_constant(spectrum, r + 1.0);
  // Young's inequality on εβ‖w‖^r_{L^{r+1}}‖z‖_{L^{r+1}} against (β/2)‖w‖^{r+1}, doubled.
  const double young = 2.0 * params.beta * std::pow(2.0 * r, r) / std::pow(r + 1.0, r + 1.0);
  c.vz = 8.0 * eps * eps / mu;
  c.z4 = 8.0 * std::pow(eps, 4) / (mu * l1 * l1);
  c.zr = std::pow(eps, r + 1.0) * young * std::pow(c.c_emb, r + 1.0);
  c.z2 = 8.0 * params.alpha * params.alpha * eps * eps / (mu * std::pow(l1, 4));
  c.f = 8.0 * params.forcing_norm_H2() / (mu * l1 * l1);
  return c;
}

double LedgerCoefficients::source(double z_v2) const {
  return z4 * z_v2 * z_v2 + zr * std::pow(z_v2, 0.5 * (r + 1.0)) + z2 * z_v2 + f;
}

double ledger_residual(const LedgerCoefficients& c, double v_h2, double v_h2_next, double z_v2,
                       double dt) {
  const double lhs = (v_h2_next - v_h2) / dt + c.mu_lambda1 * v_h2;
  const double rhs = c.rhs(v_h2, z_v2);
  const double scale = rhs + c.mu_lambda1 * v_h2;
  if (scale == 0.0) return lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return (lhs - rhs) / scale;
}

double check_energy_inequality_H(const TrajectoryRecord& record, const SCBFParams&) {
  double worst = 0.0;
  for (double r : record.ledger_residual) worst = std::max(worst, r);
  return worst;
}

double check_energy_inequality_H(const TrajectoryRecord& record, const OUPath& z_path,
                                 const SCBFParams& params) {
  require(record.stride == 1 && record.size() == z_path.values.size(), ErrorKind::InvalidInput,
          "record and noise path have different lengths");
  require(!z_path.values.empty(), ErrorKind::InvalidInput, "empty noise path");
  for (std::size_t n = 0; n < record.size(); ++n) {
    require(std::abs(record.t[n] - z_path.time(n)) <= 1e-9 * std::max(1.0, std::abs(record.t[n])),
            ErrorKind::InvalidInput, "record and noise path are on different time grids");
  }
  const auto c = LedgerCoefficients::from(params, z_path.values.front().spectrum());
  double worst = 0.0;
  for (std::size_t n = 0; n + 1 < record.size(); ++n) {
    const double z_v2 = norm_V2(z_path.values[n]);
    worst = std::max(worst, ledger_residual(c, record.h_norm2[n], record.h_norm2[n + 1], z_v2,
                                            record.t[n + 1] - record.t[n]));
  }
  return worst;
}

void NoiseTrace::push(const SpectralField& z) {
  h2.push_back(norm_H2(z));
  v2.push_back(norm_V2(z));
  sup.push_back(sup_bound(z));
  grad_sup.push_back(grad_sup_bound(z));
  lap_sup.push_back(laplacian_sup_bound(z));
}

NoiseTrace trace_noise(const NoiseConfig& noise, SpectrumPtr spectrum, double dt, double t0,
                       double t_end) {
  require(t0 < t_end, ErrorKind::InvalidParameter, "trace needs t0 < t_end");
  const double x = (t_end - t0) / dt;
  const auto steps = std::llround(x);
  require(std::abs(x - double(steps)) <= 1e-9 * std::max(1.0, x), ErrorKind::InvalidParameter,
          "dt does not divide the trace interval");
  OUProcess process(noise, std::move(spectrum), dt, t0);
  NoiseTrace trace{t0, dt, {}, {}, {}, {}, {}};
  trace.push(process.current());
  for (long long n = 0; n < steps; ++n) {
    process.advance();
    trace.push(process.current());
  }
  return trace;
}

NoiseTrace trace_path(const OUPath& path) {
  NoiseTrace trace{path.t0, path.dt, {}, {}, {}, {}, {}};
  for (const auto& z : path.values) trace.push(z);
  return trace;
}

std::vector<double> dissipation_exponent(const NoiseTrace& trace, const SCBFParams& params) {
  require_trace_ends_at_zero(trace);
  const auto spectrum = params.spectrum();
  const double ml1 = params.mu * spectrum->lambda1();
  const double vz = 8.0 * params.epsilon * params.epsilon / params.mu;
  const auto cum = cumulative(trace.v2, trace.dt);
  std::vector<double> phi(trace.size());
  for (std::size_t n = 0; n < trace.size(); ++n)
    phi[n] = ml1 * trace.time(n) + vz * (cum.back() - cum[n]);
  return phi;
}

namespace {

// Pieces shared by κ11(θ_τω) at every trace point.
struct Kappa11Parts {
  std::vector<double> phi;
  std::vector<double> weight;  // e^{Φ}
  std::vector<double> sup_z;   // sup_{m<=n} ‖z_m‖² e^{Φ_m}
  std::vector<double> integral;  // ∫_{t0}^{t_n} g e^{Φ}
  std::vector<double> source;

  double kappa2(std::size_t n, double eps) const {
    return 2.0 + (2.0 * eps * eps * sup_z[n] + integral[n]) / weight[n];
  }
};

Kappa11Parts kappa11_parts(const NoiseTrace& trace, const SCBFParams& params) {
  const auto c = LedgerCoefficients::from(params, *params.spectrum());
  Kappa11Parts p;
  p.phi = dissipation_exponent(trace, params);
  const std::size_t N = trace.size();
  p.weight.resize(N);
  p.sup_z.resize(N);
  p.source.resize(N);
  std::vector<double> integrand(N);
  for (std::size_t n = 0; n < N; ++n) {
    p.weight[n] = std::exp(p.phi[n]);
    const double s = trace.h2[n] * p.weight[n];
    p.sup_z[n] = n == 0 ? s : std::max(p.sup_z[n - 1], s);
    p.source[n] = c.source(trace.v2[n]);
    integrand[n] = p.source[n] * p.weight[n];
  }
  p.integral = cumulative(integrand, trace.dt);
  return p;
}

std::size_t index_at(const NoiseTrace& trace, double t) {
  const auto n = std::llround((t - trace.t0) / trace.dt);
  require(n >= 0 && std::size_t(n) < trace.size(), ErrorKind::InvalidInput,
          "time outside the noise trace");
  return std::size_t(n);
}

}  // namespace

std::vector<double> kappa11_along(const NoiseTrace& trace, const SCBFParams& params, double tau_min) {
  const auto parts = kappa11_parts(trace, params);
  std::vector<double> out;
  for (std::size_t n = index_at(trace, tau_min); n < trace.size(); ++n)
    out.push_back(std::sqrt(parts.kappa2(n, params.epsilon)));
  return out;
}

AbsorbingRadius compute_absorbing_radius(const NoiseTrace& trace, const SCBFParams& params,
                                         double initial_radius) {
  params.validate();
  require_trace_ends_at_zero(trace);
  require(trace.t0 <= -3.0, ErrorKind::InvalidInput, "noise trace must cover at least [-3, 0]");
  const auto spectrum = params.spectrum();
  const auto c = LedgerCoefficients::from(params, *spectrum);
  const auto parts = kappa11_parts(trace, params);
  const double eps = params.epsilon, mu = params.mu, beta = params.beta, r = params.r;
  const double l1 = spectrum->lambda1();
  const std::size_t N = trace.size();
  const std::size_t last = N - 1;
  const double dt = trace.dt;

  AbsorbingRadius out;
  out.c_emb = c.c_emb;
  out.kappa11 = std::sqrt(parts.kappa2(last, eps));
  out.kappa12 = eps * std::sqrt(trace.h2[last]);
  out.kappa13 = out.kappa11 + out.kappa12;

  // Neglected part of the quadratures beyond -T, estimated with the
  // dissipation rate μλ₁/2 guaranteed once E‖z‖²_𝕍 <= μ²λ₁/16.
  const std::size_t i2 = index_at(trace, -2.0);
  const std::size_t head = std::min<std::size_t>(N, std::size_t(std::llround(1.0 / dt)) + 1);
  double head_source = 0.0, head_h2 = 0.0;
  for (std::size_t n = 0; n < head; ++n) {
    head_source = std::max(head_source, parts.source[n]);
    head_h2 = std::max(head_h2, trace.h2[n]);
  }
  const double rate = 0.5 * mu * l1;
  double worst_rel = 0.0;
  for (std::size_t n = i2; n < N; ++n) {
    const double tail = (head_source / rate + 2.0 * eps * eps * head_h2) * parts.weight[0] / parts.weight[n];
    worst_rel = std::max(worst_rel, tail / parts.kappa2(n, eps));
    if (n == last) out.tail_estimate = tail;
  }
  if (worst_rel > 1e-6) {
    const double horizon = -trace.t0;
    throw HorizonError(horizon + std::log(worst_rel / 1e-6) / rate + 1.0,
                       "noise horizon too short for the κ quadratures");
  }

  // Entry times.
  out.initial_radius = initial_radius > 0.0 ? initial_radius : 10.0 * out.kappa13;
  const double R2 = out.initial_radius * out.initial_radius;
  double min_weight = std::numeric_limits<double>::infinity();
  for (std::size_t n = i2; n < N; ++n) min_weight = std::min(min_weight, parts.weight[n]);
  auto entry_time = [&](double threshold) {
    std::size_t fail = 0;
    while (fail < N && R2 * parts.weight[fail] <= threshold) ++fail;
    if (fail == N) return 0.0;
    if (fail == 0) {
      throw HorizonError(-trace.t0 + std::log(R2 / threshold) / rate + 1.0,
                         "noise horizon shorter than the entry time");
    }
    return -trace.time(fail) + dt;
  };
  out.t_D = entry_time(1.0);
  out.t_D_V = entry_time(min_weight);

  // Uniform Gronwall for y = ‖v‖²_𝕍 on unit windows [τ-1, τ], τ in [-1, 0].
  double K2 = 0.0;
  for (std::size_t n = i2; n < N; ++n) K2 = std::max(K2, parts.kappa2(n, eps));
  out.max_kappa11 = std::sqrt(K2);

  const double f2 = params.forcing_norm_H2();
  std::vector<double> rbar(N), g(N), h(N), lap(N);
  for (std::size_t n = 0; n < N; ++n) {
    rbar[n] = c.vz * K2 * trace.v2[n] + parts.source[n];
    const double s2 = trace.sup[n] * trace.sup[n];
    g[n] = 4.0 * eps * eps / mu * (trace.grad_sup[n] * trace.grad_sup[n] / l1 + s2);
    h[n] = 4.0 / mu *
           (std::pow(eps, 4) * s2 * trace.v2[n] + eps * eps * params.alpha * params.alpha * trace.h2[n] + f2);
    lap[n] = std::pow(trace.lap_sup[n], r + 1.0);
  }
  const auto Rc = cumulative(rbar, dt), Gc = cumulative(g, dt), Hc = cumulative(h, dt),
             Lc = cumulative(lap, dt);
  const std::size_t w = std::size_t(std::llround(1.0 / dt));
  const double damp_const = 2.0 * beta * eps * std::pow(kTwoPiSquared, 1.0 / (r + 1.0));
  struct Window {
    double Q, a1, a2, y;
  };
  auto window = [&](std::size_t end) {
    const std::size_t start = end - w;
    Window win;
    win.Q = K2 + (Rc[end] - Rc[start]);
    win.a1 = Gc[end] - Gc[start];
    win.a2 = Hc[end] - Hc[start];
    if (beta > 0.0 && eps > 0.0) {
      win.a2 += damp_const * std::pow(Lc[end] - Lc[start], 1.0 / (r + 1.0)) *
                std::pow(win.Q / beta, r / (r + 1.0));
    }
    win.y = (win.Q / mu + win.a2) * std::exp(win.a1);
    return win;
  };
  const Window now = window(last);
  out.kappa15 = std::sqrt(now.y);
  out.v_ball = out.kappa15 + eps * std::sqrt(trace.v2[last]);
  out.kappa14 = beta > 0.0 ? now.Q * (1.0 / mu + 1.0 / beta) : std::numeric_limits<double>::infinity();
  double Y = 0.0;
  for (std::size_t end = last - w; end <= last; ++end) Y = std::max(Y, window(end).y);
  out.kappa16 = 4.0 / 3.0 * (Y * (1.0 + now.a1) + now.a2);
  return out;
}

}  // namespace scbf

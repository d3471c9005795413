#include "scbf/solver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "scbf/checkpoint.hpp"
#include "scbf/error.hpp"
#include "scbf/nonlinear.hpp"
#include "scbf/transform.hpp"

namespace scbf {

Integrator::Integrator(const SCBFParams& params) : params_(params) {
  params_.validate();
  spectrum_ = params_.spectrum();
  forcing_ = params_.forcing_field();
  decay_ = (-params_.mu * params_.dt * spectrum_->eigenvalues()).exp();
}

SpectralField Integrator::drift(const SpectralField& w, double* lr1) const {
  SpectralField out = forcing_;
  out -= convective_term(w);
  const DampingEvaluation damping = evaluate_damping(w, params_.r);
  if (params_.beta != 0.0) out.coeffs() -= params_.beta * damping.term.coeffs();
  if (lr1) *lr1 = damping.lr1;
  return out;
}

double Integrator::step_v(SpectralField& v, const SpectralField& z, std::int64_t step,
                          double time) const {
  require_same_shape(v, z);
  const double eps = params_.epsilon;
  double lr1 = 0.0;
  SpectralField n = drift(eps != 0.0 ? v + eps * z : v, &lr1);
  if (eps != 0.0 && params_.alpha != 0.0) n.coeffs() += (eps * params_.alpha) * z.coeffs();
  v.coeffs() += params_.dt * n.coeffs();
  v.coeffs().array().colwise() *= decay_.cast<Complex>();
  if (!v.all_finite()) throw DivergedError(step, time, "non-finite coefficient in v");
  return lr1;
}

void Integrator::step_u_direct(SpectralField& u, const SpectralField& dW, std::int64_t step,
                               double time) const {
  require_same_shape(u, dW);
  SpectralField n = drift(u, nullptr);
  u.coeffs() += params_.dt * n.coeffs();
  u.coeffs().array().colwise() *= decay_.cast<Complex>();
  if (params_.epsilon != 0.0) u.coeffs() += params_.epsilon * dW.coeffs();
  if (!u.all_finite()) throw DivergedError(step, time, "non-finite coefficient in u");
}

SpectralField step_v(const SpectralField& v, const SpectralField& z, const SCBFParams& params) {
  SpectralField out = v;
  Integrator(params).step_v(out, z);
  return out;
}

SpectralField step_u_direct(const SpectralField& u, const SpectralField& dW, const SCBFParams& params) {
  SpectralField out = u;
  Integrator(params).step_u_direct(out, dW);
  return out;
}

namespace {

std::int64_t step_count(double t0, double t1, double dt) {
  require(std::isfinite(t0) && std::isfinite(t1) && t0 <= t1, ErrorKind::InvalidParameter,
          "run interval needs t0 <= t1");
  return step_index(t1, dt) - step_index(t0, dt);
}

void check_initial(const SpectralField& u0, const SCBFParams& params) {
  require(u0.spectrum_ptr() && u0.k_max() == params.k_max, ErrorKind::ShapeMismatch,
          "initial state does not match K_max");
  require(u0.all_finite(), ErrorKind::InvalidInput, "initial state is not finite");
}

bool records_row(std::int64_t n, std::int64_t steps, int stride) {
  return n == 0 || n == steps || (stride > 0 && n % stride == 0);
}

// Shared loop for the transformed system. z is null when ε = 0.
RunResult march(SpectralField v, OUProcess* ou, double t0, std::int64_t steps, const SCBFParams& params,
                const RunOptions& options) {
  require(options.record_stride >= 0, ErrorKind::InvalidParameter, "record stride must be >= 0");
  const Integrator integrator(params);
  const auto& spectrum = integrator.spectrum();
  const auto ledger = LedgerCoefficients::from(params, *spectrum);
  const double dt = params.dt;
  const double eps = params.epsilon;
  const SpectralField zero(spectrum);

  RunResult result;
  result.record.stride = options.record_stride;
  if (options.record_stride > 0) result.record.reserve(std::size_t(steps / options.record_stride) + 2);

  double prev_h2 = 0.0, prev_zv2 = 0.0, pending = 0.0;
  for (std::int64_t n = 0;; ++n) {
    const SpectralField& z = ou ? ou->current() : zero;
    const double time = t0 + double(n) * dt;
    const double h2 = norm_H2(v);
    const double zv2 = ou ? norm_V2(z) : 0.0;
    if (n > 0) pending = std::max(pending, ledger_residual(ledger, prev_h2, h2, prev_zv2, dt));
    if (options.observer) options.observer(time, v, z);
    const bool row = records_row(n, steps, options.record_stride);
    const bool in_window = n < steps && time >= options.window_start - 1e-9 * dt;

    double v2 = 0.0, a2 = 0.0;
    if (row || in_window) {
      v2 = norm_V2(v);
      a2 = norm_A2(v);
    }
    double lr1 = 0.0;
    if (n < steps) {
      prev_h2 = h2;
      prev_zv2 = zv2;
      SpectralField next = v;
      lr1 = integrator.step_v(next, z, n, time);
      if (row) {
        auto& rec = result.record;
        rec.t.push_back(time);
        rec.h_norm2.push_back(h2);
        rec.v_norm2.push_back(v2);
        rec.lr1_norm.push_back(lr1);
        rec.ledger_residual.push_back(pending);
        rec.a_norm2.push_back(a2);
        rec.z_h2.push_back(ou ? norm_H2(z) : 0.0);
        rec.z_v2.push_back(zv2);
        rec.u_h2.push_back(eps != 0.0 ? norm_H2(v + eps * z) : h2);
        pending = 0.0;
      }
      if (in_window) {
        result.int_v2 += dt * v2;
        result.int_lr1 += dt * lr1;
        result.int_a2 += dt * a2;
      }
      v = std::move(next);
      if (ou) ou->advance();
      continue;
    }
    const SpectralField u = eps != 0.0 ? v + eps * z : v;
    auto& rec = result.record;
    rec.t.push_back(time);
    rec.h_norm2.push_back(h2);
    rec.v_norm2.push_back(v2);
    rec.lr1_norm.push_back(std::pow(norm_Lp(u, params.r + 1.0), params.r + 1.0));
    rec.ledger_residual.push_back(pending);
    rec.a_norm2.push_back(a2);
    rec.z_h2.push_back(ou ? norm_H2(z) : 0.0);
    rec.z_v2.push_back(zv2);
    rec.u_h2.push_back(norm_H2(u));
    result.u = u;
    result.z = ou ? z : zero;
    break;
  }
  result.v = std::move(v);
  result.steps = steps;
  return result;
}

}  // namespace

RunResult solve_with_state(const SpectralField& u0, double t0, double t1, const SCBFParams& params,
                           const NoiseConfig& noise, RestartState* state_out,
                           const RunOptions& options) {
  params.validate();
  check_initial(u0, params);
  const std::int64_t steps = step_count(t0, t1, params.dt);
  const auto spectrum = params.spectrum();
  std::optional<OUProcess> ou;
  SpectralField v = u0;
  if (params.epsilon != 0.0) {
    require_compatible(params, noise);
    ou.emplace(noise, spectrum, params.dt, t0);
    v -= params.epsilon * ou->current();
  }
  RunResult result;
  if (steps == 0) {
    result.record.stride = options.record_stride;
    result.z = ou ? ou->current() : SpectralField(spectrum);
    result.v = std::move(v);
    result.u = u0;
  } else {
    result = march(std::move(v), ou ? &*ou : nullptr, t0, steps, params, options);
  }
  if (state_out) *state_out = RestartState{params, noise, t1, result.v, result.z};
  return result;
}

RunResult solve(const SpectralField& u0, double t0, double t1, const SCBFParams& params,
                const NoiseConfig& noise, const RunOptions& options) {
  return solve_with_state(u0, t0, t1, params, noise, nullptr, options);
}

RunResult solve_pullback(const SpectralField& u0, double s, const SCBFParams& params,
                         const NoiseConfig& noise, const RunOptions& options) {
  require(s <= 0.0, ErrorKind::InvalidParameter, "pullback start must be <= 0");
  return solve(u0, s, 0.0, params, noise, options);
}

RunResult resume(const RestartState& state, double t1, const RunOptions& options) {
  const SCBFParams& params = state.params;
  params.validate();
  check_initial(state.v, params);
  const std::int64_t steps = step_count(state.time, t1, params.dt);
  std::optional<OUProcess> ou;
  if (params.epsilon != 0.0) {
    require_compatible(params, state.noise);
    require_same_shape(state.v, state.z);
    ou.emplace(state.noise, state.v.spectrum_ptr(), params.dt, state.time, state.z);
  }
  return march(state.v, ou ? &*ou : nullptr, state.time, steps, params, options);
}

RunResult solve_direct(const SpectralField& u0, double t0, double t1, const SCBFParams& params,
                       const NoiseConfig& noise, const RunOptions& options) {
  params.validate();
  check_initial(u0, params);
  require(options.record_stride >= 0, ErrorKind::InvalidParameter, "record stride must be >= 0");
  const std::int64_t steps = step_count(t0, t1, params.dt);
  const Integrator integrator(params);
  std::optional<OUProcess> ou;
  if (params.epsilon != 0.0) {
    require_compatible(params, noise);
    ou.emplace(noise, integrator.spectrum(), params.dt, t0);
  }
  const SpectralField zero(integrator.spectrum());

  RunResult result;
  result.record.stride = options.record_stride;
  SpectralField u = u0;
  for (std::int64_t n = 0;; ++n) {
    const double time = t0 + double(n) * params.dt;
    if (records_row(n, steps, options.record_stride)) {
      auto& rec = result.record;
      const double h2 = norm_H2(u);
      rec.t.push_back(time);
      rec.h_norm2.push_back(h2);
      rec.v_norm2.push_back(norm_V2(u));
      rec.lr1_norm.push_back(std::pow(norm_Lp(u, params.r + 1.0), params.r + 1.0));
      rec.ledger_residual.push_back(0.0);
      rec.a_norm2.push_back(norm_A2(u));
      rec.z_h2.push_back(0.0);
      rec.z_v2.push_back(0.0);
      rec.u_h2.push_back(h2);
    }
    if (n == steps) break;
    if (ou) {
      ou->advance();
      SpectralField dW = ou->last_increment();
      dW.coeffs().array().colwise() *= ou->wiener_scale().cast<Complex>();
      integrator.step_u_direct(u, dW, n, time);
    } else {
      integrator.step_u_direct(u, zero, n, time);
    }
  }
  result.z = ou ? ou->current() : zero;
  result.v = params.epsilon != 0.0 ? u - params.epsilon * result.z : u;
  result.u = std::move(u);
  result.steps = steps;
  return result;
}

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  require(it != kv.end(), ErrorKind::InvalidInput, "restart file lacks " + key);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == it->second.size() && used > 0, ErrorKind::InvalidInput, "bad value for " + key);
  return x;
}

}  // namespace

void save_restart(const std::filesystem::path& dir, const RestartState& state) {
  std::filesystem::create_directories(dir);
  save_field(dir / "v.scbf", state.v);
  save_field(dir / "z.scbf", state.z.size() ? state.z : SpectralField(state.v.spectrum_ptr()));
  if (state.params.forcing.size()) save_field(dir / "f.scbf", state.params.forcing);
  std::ofstream os(dir / "params.txt");
  require(bool(os), ErrorKind::Io, "cannot write " + (dir / "params.txt").string());
  const auto& p = state.params;
  const auto& n = state.noise;
  os << "time=" << format_double(state.time) << '\n'
     << "mu=" << format_double(p.mu) << '\n'
     << "beta=" << format_double(p.beta) << '\n'
     << "r=" << format_double(p.r) << '\n'
     << "epsilon=" << format_double(p.epsilon) << '\n'
     << "alpha=" << format_double(p.alpha) << '\n'
     << "dt=" << format_double(p.dt) << '\n'
     << "k_max=" << p.k_max << '\n'
     << "noise.decay_exponent=" << format_double(n.decay_exponent) << '\n'
     << "noise.amplitude=" << format_double(n.amplitude) << '\n'
     << "noise.alpha=" << format_double(n.alpha) << '\n'
     << "noise.mu=" << format_double(n.mu) << '\n'
     << "noise.seed=" << n.seed << '\n'
     << "noise.shift_steps=" << n.shift_steps << '\n'
     << "noise.refinement=" << n.refinement << '\n';
  if (n.origin) os << "noise.origin=" << format_double(*n.origin) << '\n';
}

RestartState load_restart(const std::filesystem::path& dir) {
  std::ifstream is(dir / "params.txt");
  require(bool(is), ErrorKind::Io, "cannot open " + (dir / "params.txt").string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::InvalidInput, "malformed restart line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  RestartState state;
  state.time = parse_double(kv, "time");
  auto& p = state.params;
  p.mu = parse_double(kv, "mu");
  p.beta = parse_double(kv, "beta");
  p.r = parse_double(kv, "r");
  p.epsilon = parse_double(kv, "epsilon");
  p.alpha = parse_double(kv, "alpha");
  p.dt = parse_double(kv, "dt");
  p.k_max = static_cast<int>(parse_double(kv, "k_max"));
  auto& n = state.noise;
  n.decay_exponent = parse_double(kv, "noise.decay_exponent");
  n.amplitude = parse_double(kv, "noise.amplitude");
  n.alpha = parse_double(kv, "noise.alpha");
  n.mu = parse_double(kv, "noise.mu");
  n.seed = std::stoull(kv.at("noise.seed"));
  n.shift_steps = std::stoll(kv.at("noise.shift_steps"));
  n.refinement = std::stoi(kv.at("noise.refinement"));
  if (kv.count("noise.origin")) n.origin = parse_double(kv, "noise.origin");
  p.validate();
  const auto spectrum = p.spectrum();
  state.v = load_field(dir / "v.scbf", spectrum);
  state.z = load_field(dir / "z.scbf", spectrum);
  if (std::filesystem::exists(dir / "f.scbf")) p.forcing = load_field(dir / "f.scbf", spectrum);
  return state;
}

}  // namespace scbf

#include "scbf/rds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "scbf/checkpoint.hpp"
#include "scbf/error.hpp"
#include "scbf/parallel.hpp"

namespace scbf {

namespace {

constexpr double kTwoPiSquared = 4.0 * std::numbers::pi * std::numbers::pi;
constexpr char kCloudMagic[4] = {'S', 'C', 'B', 'C'};
constexpr std::uint32_t kCloudVersion = 1;

double tagged_norm(const SpectralField& u, SpaceTag tag) { return tag == SpaceTag::H ? norm_H(u) : norm_V(u); }

// Row i: min_j ‖a_i - b_j‖.
std::vector<double> nearest(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b,
                            SpaceTag tag) {
  require(!a.empty() && !b.empty(), ErrorKind::InvalidInput, "Hausdorff semidistance of an empty cloud");
  std::vector<double> out(a.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (const auto& y : b) {
      require_same_shape(a[i], y);
      out[i] = std::min(out[i], distance(a[i], y, tag));
    }
  }
  return out;
}

}  // namespace

const char* to_string(SpaceTag tag) { return tag == SpaceTag::H ? "H" : "V"; }

SpaceTag parse_space_tag(const std::string& text) {
  if (text == "H" || text == "h") return SpaceTag::H;
  if (text == "V" || text == "v") return SpaceTag::V;
  throw Error(ErrorKind::InvalidParameter, "space tag must be H or V, got '" + text + "'");
}

double distance(const SpectralField& a, const SpectralField& b, SpaceTag tag) {
  return tagged_norm(a - b, tag);
}

void PullbackSchedule::validate() const {
  require(!pullback_times.empty(), ErrorKind::InvalidParameter, "empty pullback schedule");
  require(evaluation_time == 0.0, ErrorKind::InvalidParameter, "pullback evaluation time must be 0");
  for (std::size_t i = 0; i < pullback_times.size(); ++i) {
    require(std::isfinite(pullback_times[i]) && pullback_times[i] <= 0.0, ErrorKind::InvalidParameter,
            "pullback times must be finite and <= 0");
    if (i > 0)
      require(pullback_times[i] < pullback_times[i - 1], ErrorKind::InvalidParameter,
              "pullback times must be strictly decreasing");
  }
}

double AttractorSample::diameter() const {
  double d = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) d = std::max(d, distance(points[i], points[j], space_tag));
  return d;
}

double hausdorff_semidistance(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b,
                              SpaceTag tag) {
  const auto m = nearest(a, b, tag);
  return *std::max_element(m.begin(), m.end());
}

double hausdorff_semidistance(const AttractorSample& a, const AttractorSample& b, SpaceTag tag) {
  return hausdorff_semidistance(a.points, b.points, tag);
}

NoiseConfig fixed_omega(const NoiseConfig& noise, double earliest) {
  NoiseConfig out = noise;
  out.origin = std::min(noise.origin.value_or(earliest), earliest);
  return out;
}

std::vector<AttractorSample> attractor_sample(const PullbackSchedule& schedule, const SCBFParams& params,
                                              const NoiseConfig& noise, double initial_ball_radius,
                                              int ensemble_size, std::uint64_t seed, SpaceTag tag) {
  schedule.validate();
  params.validate();
  require(ensemble_size >= 2, ErrorKind::InvalidParameter, "ensemble size must be >= 2");
  require(std::isfinite(initial_ball_radius) && initial_ball_radius >= 0.0, ErrorKind::InvalidParameter,
          "initial ball radius must be finite and nonnegative");
  const auto spectrum = params.spectrum();
  const NoiseConfig omega = fixed_omega(noise, schedule.longest());
  if (params.epsilon != 0.0) require_compatible(params, omega);

  std::vector<SpectralField> initial;
  for (int i = 0; i < ensemble_size; ++i) initial.push_back(sample_ball(spectrum, initial_ball_radius, seed, i));

  const std::size_t members = std::size_t(ensemble_size);
  const std::size_t tasks = schedule.pullback_times.size() * members;
  std::vector<std::optional<RunResult>> runs(tasks);
  parallel_for(tasks, [&](std::size_t task) {
    const double s = schedule.pullback_times[task / members];
    RunOptions options;
    options.record_stride = 0;
    try {
      runs[task] = solve(initial[task % members], s, 0.0, params, omega, options);
    } catch (const DivergedError&) {
      runs[task].reset();
    }
  });

  std::vector<AttractorSample> out;
  for (std::size_t k = 0; k < schedule.pullback_times.size(); ++k) {
    AttractorSample sample;
    sample.pullback_time = schedule.pullback_times[k];
    sample.seed = seed;
    sample.space_tag = tag;
    for (std::size_t i = 0; i < members; ++i) {
      auto& run = runs[k * members + i];
      if (!run) {
        ++sample.diverged;
        continue;
      }
      MemberDiagnostics d;
      d.u_norm_H = norm_H(run->u);
      d.v_norm_V = norm_V(run->v);
      d.int_energy = run->int_v2 + run->int_lr1;
      d.int_a2 = run->int_a2;
      sample.diagnostics.push_back(d);
      sample.z_final = run->z;
      sample.points.push_back(std::move(run->u));
      sample.transformed.push_back(std::move(run->v));
      run.reset();
    }
    sample.ensemble_size = int(sample.points.size());
    out.push_back(std::move(sample));
  }
  return out;
}

double cocycle_residual(const SCBFParams& params, const NoiseConfig& noise, const SpectralField& x0,
                        double t, double s) {
  require(t >= 0.0 && s >= 0.0, ErrorKind::InvalidParameter, "cocycle needs t, s >= 0");
  RunOptions options;
  options.record_stride = 0;
  NoiseConfig omega = noise;
  omega.origin = 0.0;
  const SpectralField whole = solve(x0, 0.0, t + s, params, omega, options).u;
  const SpectralField first = solve(x0, 0.0, s, params, omega, options).u;
  // θ_s ω: the same increments read s later, with z(θ_sω)(0) = z(ω)(s).
  NoiseConfig shifted = noise;
  shifted.shift_steps = noise.shift_steps + step_index(s, params.dt);
  shifted.origin = -s;
  const SpectralField second = solve(first, 0.0, t, params, shifted, options).u;
  return norm_H(whole - second);
}

double truncation_scale(const SCBFParams& params, const NoiseConfig& noise, const SpectralField& x0,
                        double horizon) {
  RunOptions options;
  options.record_stride = 0;
  NoiseConfig coarse = noise;
  coarse.origin = 0.0;
  coarse.refinement = noise.refinement + 1;
  NoiseConfig fine = noise;
  fine.origin = 0.0;
  SCBFParams half = params;
  half.dt = 0.5 * params.dt;
  const auto a = solve(x0, 0.0, horizon, params, coarse, options).u;
  const auto b = solve(x0, 0.0, horizon, half, fine, options).u;
  return norm_H(a - b);
}

double flattening_tail(const SpectralField& v, Eigen::Index m) {
  require(m >= 0 && m <= v.size(), ErrorKind::InvalidParameter, "flattening index out of range");
  return norm_V(project_Qm(v, m));
}

std::vector<Eigen::Index> shell_boundaries(const StokesSpectrum& spectrum) {
  std::vector<Eigen::Index> out;
  const auto& l = spectrum.eigenvalues();
  for (Eigen::Index m = 1; m < spectrum.size(); ++m)
    if (l[m] > l[m - 1]) out.push_back(m);
  return out;
}

FlatteningFit flattening_fit(const std::vector<SpectralField>& cloud, double lambda_floor) {
  require(!cloud.empty(), ErrorKind::InvalidInput, "flattening fit of an empty cloud");
  const auto& spectrum = cloud.front().spectrum();
  const auto& l = spectrum.eigenvalues();
  const Eigen::Index n = spectrum.size();
  FlatteningFit fit;
  const auto bounds = shell_boundaries(spectrum);
  std::vector<double> worst(bounds.size(), 0.0);
  for (const auto& v : cloud) {
    const Eigen::ArrayXd energy = kTwoPiSquared * l * v.coeffs().rowwise().squaredNorm().array();
    // suffix[m] = ‖Q_m v‖²_𝕍
    std::vector<double> suffix(std::size_t(n) + 1, 0.0);
    for (Eigen::Index m = n - 1; m >= 0; --m) suffix[std::size_t(m)] = suffix[std::size_t(m) + 1] + energy[m];
    for (std::size_t m = 1; m < suffix.size(); ++m)
      if (suffix[m] > suffix[m - 1]) fit.nonincreasing = false;
    for (std::size_t b = 0; b < bounds.size(); ++b)
      worst[b] = std::max(worst[b], std::sqrt(suffix[std::size_t(bounds[b])]));
  }
  std::vector<double> x, y;
  for (std::size_t b = 0; b < bounds.size(); ++b) {
    if (!(worst[b] > 0.0) || l[bounds[b]] <= lambda_floor) continue;
    fit.m.push_back(bounds[b]);
    fit.lambda_next.push_back(l[bounds[b]]);
    fit.tail.push_back(worst[b]);
    x.push_back(l[bounds[b]]);
    y.push_back(std::log(worst[b]));
  }
  if (x.size() >= 2) {
    fit.slope = least_squares_slope(x, y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= double(x.size());
    my /= double(y.size());
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += e * e;
      ss_tot += (y[i] - my) * (y[i] - my);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  }
  return fit;
}

double forced_eigenvalue(const SpectralField& f) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (f.coeffs().row(i).squaredNorm() > 0.0) out = std::max(out, f.spectrum().eigenvalues()[i]);
  return out;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::InvalidInput, "slope needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(x.size());
  my /= double(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, ErrorKind::InvalidInput, "slope needs distinct abscissae");
  return sxy / sxx;
}

double bootstrap_se(const std::vector<SpectralField>& a, const std::vector<SpectralField>& b, SpaceTag tag,
                    std::uint64_t seed, int resamples) {
  const auto m = nearest(a, b, tag);
  if (m.size() < 2 || resamples < 2) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < resamples; ++r) {
    double d = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) d = std::max(d, m[pick(rng)]);
    s += d;
    s2 += d * d;
  }
  const double mean = s / resamples;
  return std::sqrt(std::max(0.0, (s2 - resamples * mean * mean) / (resamples - 1)));
}

namespace {

AttractorSample terminal_cloud(double epsilon, const PullbackSchedule& schedule, const SCBFParams& params,
                               const NoiseConfig& noise, const SweepOptions& options) {
  SCBFParams p = params;
  p.epsilon = epsilon;
  PullbackSchedule longest{{schedule.longest()}, 0.0};
  auto clouds = attractor_sample(longest, p, fixed_omega(noise, schedule.longest()), options.initial_ball_radius,
                                 options.ensemble_size, options.seed);
  return std::move(clouds.front());
}

}  // namespace

std::vector<DistanceEstimate> usc_sweep(const std::vector<double>& epsilons, const PullbackSchedule& schedule,
                                        const SCBFParams& params, const NoiseConfig& noise,
                                        const SweepOptions& options) {
  schedule.validate();
  require(!epsilons.empty(), ErrorKind::InvalidParameter, "empty ε list");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] >= 0.0 && epsilons[i] <= 1.0, ErrorKind::InvalidParameter, "ε must lie in [0, 1]");
    if (i > 0) require(epsilons[i] < epsilons[i - 1], ErrorKind::InvalidParameter, "ε list must be descending");
  }
  const AttractorSample baseline = terminal_cloud(0.0, schedule, params, noise, options);
  std::vector<DistanceEstimate> out;
  for (double eps : epsilons) {
    const AttractorSample cloud = terminal_cloud(eps, schedule, params, noise, options);
    DistanceEstimate e;
    e.epsilon = eps;
    e.distance = hausdorff_semidistance(cloud, baseline, SpaceTag::H);
    e.se = bootstrap_se(cloud.points, baseline.points, SpaceTag::H, options.seed);
    out.push_back(e);
  }
  return out;
}

DistanceEstimate usc_pair(double eps, double eps0, const PullbackSchedule& schedule, const SCBFParams& params,
                          const NoiseConfig& noise, const SweepOptions& options) {
  schedule.validate();
  require(eps > 0.0 && eps <= 1.0 && eps0 > 0.0 && eps0 <= 1.0, ErrorKind::InvalidParameter,
          "ε and ε₀ must lie in (0, 1]");
  const AttractorSample a = terminal_cloud(eps, schedule, params, noise, options);
  const AttractorSample b = terminal_cloud(eps0, schedule, params, noise, options);
  DistanceEstimate e;
  e.epsilon = eps;
  e.distance = hausdorff_semidistance(a, b, SpaceTag::H);
  e.se = bootstrap_se(a.points, b.points, SpaceTag::H, options.seed);
  return e;
}

Observable Observable::parse(const std::string& tag) {
  Observable o;
  if (tag == "h_norm2") return o;
  if (tag == "v_norm2") {
    o.kind = Kind::VNorm2;
    return o;
  }
  if (tag.rfind("band:", 0) == 0) {
    const auto colon = tag.find(':', 5);
    require(colon != std::string::npos, ErrorKind::InvalidParameter, "band observable needs band:<lo>:<hi>");
    o.kind = Kind::Band;
    try {
      o.lo = std::stod(tag.substr(5, colon - 5));
      o.hi = std::stod(tag.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidParameter, "bad band observable '" + tag + "'");
    }
    require(o.lo <= o.hi, ErrorKind::InvalidParameter, "band needs lo <= hi");
    return o;
  }
  throw Error(ErrorKind::InvalidParameter, "unknown observable '" + tag + "'");
}

std::string Observable::tag() const {
  switch (kind) {
    case Kind::HNorm2:
      return "h_norm2";
    case Kind::VNorm2:
      return "v_norm2";
    case Kind::Band:
      break;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "band:%g:%g", lo, hi);
  return buf;
}

double Observable::operator()(const SpectralField& u) const {
  switch (kind) {
    case Kind::HNorm2:
      return norm_H2(u);
    case Kind::VNorm2:
      return norm_V2(u);
    case Kind::Band:
      break;
  }
  const auto& l = u.spectrum().eigenvalues();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i)
    if (l[i] >= lo && l[i] <= hi) sum += u.coeffs().row(i).squaredNorm();
  return kTwoPiSquared * sum;
}

TimeAverage time_average_observable(const SCBFParams& params, const NoiseConfig& noise,
                                    const Observable& observable, double T, double burn_in,
                                    const SpectralField& u0, int batches) {
  require(burn_in > 0.0 && T > burn_in, ErrorKind::InvalidParameter, "time average needs T > burn_in > 0");
  require(batches >= 2, ErrorKind::InvalidParameter, "time average needs two or more batches");
  const std::int64_t first = step_index(burn_in, params.dt);
  const std::int64_t samples = step_index(T, params.dt) - first;
  require(samples >= batches, ErrorKind::InvalidParameter, "fewer steps than batches");

  std::vector<double> sums(std::size_t(batches), 0.0);
  std::vector<std::int64_t> counts(std::size_t(batches), 0);
  const double eps = params.epsilon;
  RunOptions options;
  options.record_stride = 0;
  options.observer = [&](double t, const SpectralField& v, const SpectralField& z) {
    const std::int64_t k = std::llround(t / params.dt) - first;
    if (k < 0 || k >= samples) return;
    const double value = eps != 0.0 ? observable(v + eps * z) : observable(v);
    const auto b = std::size_t(k * batches / samples);
    sums[b] += value;
    ++counts[b];
  };
  solve(u0, 0.0, T, params, noise, options);

  TimeAverage out;
  out.batches = batches;
  double total = 0.0;
  for (int b = 0; b < batches; ++b) {
    out.batch_means.push_back(sums[std::size_t(b)] / double(counts[std::size_t(b)]));
    total += sums[std::size_t(b)];
  }
  out.mean = total / double(samples);
  double ss = 0.0;
  for (double m : out.batch_means) {
    const double mb = m - out.mean;
    ss += mb * mb;
  }
  out.se = std::sqrt(ss / double(batches - 1) / double(batches));
  return out;
}

void write_cloud(std::ostream& os, const AttractorSample& sample) {
  os.write(kCloudMagic, 4);
  binary::put_u32(os, kCloudVersion);
  binary::put_f64(os, sample.pullback_time);
  binary::put_u64(os, sample.seed);
  binary::put_u32(os, static_cast<std::uint32_t>(sample.space_tag == SpaceTag::H ? 0 : 1));
  binary::put_u32(os, static_cast<std::uint32_t>(sample.diverged));
  binary::put_u32(os, static_cast<std::uint32_t>(sample.points.size()));
  binary::put_u32(os, static_cast<std::uint32_t>(sample.transformed.size()));
  for (const auto& p : sample.points) write_field(os, p);
  for (const auto& p : sample.transformed) write_field(os, p);
  require(bool(os), ErrorKind::Io, "failed writing cloud");
}

AttractorSample read_cloud(std::istream& is, SpectrumPtr spectrum) {
  char magic[4] = {};
  is.read(magic, 4);
  require(bool(is) && std::equal(magic, magic + 4, kCloudMagic), ErrorKind::InvalidInput, "not a cloud file");
  require(binary::get_u32(is) == kCloudVersion, ErrorKind::InvalidInput, "unsupported cloud version");
  AttractorSample s;
  s.pullback_time = binary::get_f64(is);
  s.seed = binary::get_u64(is);
  const std::uint32_t tag = binary::get_u32(is);
  require(tag <= 1, ErrorKind::InvalidInput, "bad space tag in cloud file");
  s.space_tag = tag == 0 ? SpaceTag::H : SpaceTag::V;
  s.diverged = int(binary::get_u32(is));
  const std::uint32_t points = binary::get_u32(is);
  const std::uint32_t transformed = binary::get_u32(is);
  for (std::uint32_t i = 0; i < points; ++i) {
    s.points.push_back(read_field(is, spectrum));
    if (!spectrum) spectrum = s.points.back().spectrum_ptr();
  }
  for (std::uint32_t i = 0; i < transformed; ++i) s.transformed.push_back(read_field(is, spectrum));
  s.ensemble_size = int(points);
  return s;
}

void save_cloud(const std::filesystem::path& file, const AttractorSample& sample) {
  std::ofstream os(file, std::ios::binary);
  require(bool(os), ErrorKind::Io, "cannot open " + file.string() + " for writing");
  write_cloud(os, sample);
}

AttractorSample load_cloud(const std::filesystem::path& file, SpectrumPtr spectrum) {
  std::ifstream is(file, std::ios::binary);
  require(bool(is), ErrorKind::Io, "cannot open " + file.string());
  return read_cloud(is, std::move(spectrum));
}

}  // namespace scbf

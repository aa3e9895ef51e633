#include "qsep/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string_view>
#include <thread>

namespace qsep {

namespace {

constexpr double kPi = std::numbers::pi;

// Leading path elements that keep pool, sample and margin substreams apart.
constexpr std::uint64_t kPoolStream = 0x706f6f6cULL;
constexpr std::uint64_t kSampleStream = 0x73616d70ULL;
constexpr std::uint64_t kMarginStream = 0x6d617267ULL;

std::uint64_t tag_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::atomic<unsigned> g_workers{0};

template <class Fn>
void parallel_for(std::size_t n, Fn fn) {
  const unsigned requested = g_workers.load();
  const std::size_t workers = std::clamp<std::size_t>(
      requested == 0 ? std::thread::hardware_concurrency() : requested, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
}

Mat4 amplitude_damp_both(const Mat4& rho, double g) {
  Mat2 k0 = Mat2::Zero();
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - g);
  Mat2 k1 = Mat2::Zero();
  k1(0, 1) = std::sqrt(g);
  const std::array<Mat2, 2> ks{k0, k1};
  Mat4 out = Mat4::Zero();
  for (const Mat2& a : ks)
    for (const Mat2& b : ks) {
      const Mat4 k = kron(a, b);
      out += k * rho * k.adjoint();
    }
  return out;
}

struct Achieved {
  double purity;
  double concurrence;
};

Achieved measure_bell(const SourceModel& m) {
  const DensityMatrix rho = apply_noise(density_from_ket(bell_psi_plus()), m);
  return {purity(rho), concurrence(rho)};
}

// Along one calibration branch, `second` is the knob that moves concurrence
// monotonically at fixed v (d up raises it, g up lowers it).
struct Branch {
  SourceModel (*make)(double v, double knob);
  bool concurrence_increases;
};

SourceModel make_vd(double v, double d) { return SourceModel{v, d, 0.0}; }
SourceModel make_vg(double v, double g) { return SourceModel{v, 1.0, g}; }

// Knob value hitting the concurrence target at this v, if reachable.
std::optional<double> solve_knob(const Branch& br, double v, double target_c) {
  auto c_at = [&](double k) { return measure_bell(br.make(v, k)).concurrence; };
  double lo = 0.0, hi = 1.0;
  const double c_lo = c_at(lo), c_hi = c_at(hi);
  const double c_min = std::min(c_lo, c_hi), c_max = std::max(c_lo, c_hi);
  if (target_c < c_min - 1e-12 || target_c > c_max + 1e-12) return std::nullopt;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool below = c_at(mid) < target_c;
    if (below == br.concurrence_increases)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Candidate {
  SourceModel model;
  Achieved achieved;
  double distance;
};

std::optional<CalibrationResult> search_branch(const Branch& br, double target_p, double target_c,
                                               Candidate& nearest) {
  constexpr int kGrid = 200;
  auto consider = [&](double v, double knob) {
    const SourceModel m = br.make(v, knob);
    const Achieved a = measure_bell(m);
    const double dist = std::hypot(a.purity - target_p, a.concurrence - target_c);
    if (dist < nearest.distance) nearest = Candidate{m, a, dist};
    return a;
  };

  // Purity residual along the concurrence level set, sampled on a v grid.
  std::optional<double> prev_v, prev_r;
  for (int i = 0; i <= kGrid; ++i) {
    const double v = double(i) / kGrid;
    const auto knob = solve_knob(br, v, target_c);
    if (!knob) {
      // Off the level set: still record the closest point for diagnostics.
      consider(v, br.concurrence_increases ? 1.0 : 0.0);
      prev_v.reset();
      continue;
    }
    const double r = consider(v, *knob).purity - target_p;
    if (std::abs(r) <= 1e-12 || (prev_r && (r > 0) != (*prev_r > 0))) {
      double lo = prev_v.value_or(v), hi = v;
      double r_lo = prev_r.value_or(r);
      for (int it = 0; it < 60 && std::abs(r) > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto k = solve_knob(br, mid, target_c);
        if (!k) break;
        const double rm = consider(mid, *k).purity - target_p;
        if ((rm > 0) == (r_lo > 0)) {
          lo = mid;
          r_lo = rm;
        } else {
          hi = mid;
        }
      }
      const Achieved a = nearest.achieved;
      if (std::abs(a.purity - target_p) <= 1e-3 && std::abs(a.concurrence - target_c) <= 1e-3)
        return CalibrationResult{nearest.model, a.purity, a.concurrence};
    }
    prev_v = v;
    prev_r = r;
  }
  return std::nullopt;
}

}  // namespace

void SourceModel::validate() const {
  auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in01(v) || !in01(d) || !in01(g)) throw std::domain_error("SourceModel: parameters must lie in [0, 1]");
}

DensityMatrix apply_noise(const DensityMatrix& rho, const SourceModel& m) {
  m.validate();
  Mat4 x = rho.matrix();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) x(i, j) *= m.d;
  if (m.g > 0.0) x = amplitude_damp_both(x, m.g);
  x = m.v * x + (1.0 - m.v) * 0.25 * Mat4::Identity();
  x = 0.5 * (x + x.adjoint());
  x /= x.trace().real();
  return DensityMatrix(x);
}

CalibrationResult calibrate_source(double target_purity, double target_concurrence) {
  if (!(target_purity > 0.25 && target_purity <= 1.0) ||
      !(target_concurrence >= 0.0 && target_concurrence <= 1.0))
    throw CalibrationError("calibration targets outside purity (0.25, 1], concurrence [0, 1]");

  Candidate nearest{SourceModel{}, measure_bell(SourceModel{}), std::numeric_limits<double>::infinity()};
  nearest.distance = std::hypot(nearest.achieved.purity - target_purity,
                                nearest.achieved.concurrence - target_concurrence);
  if (std::abs(nearest.achieved.purity - target_purity) <= 1e-3 &&
      std::abs(nearest.achieved.concurrence - target_concurrence) <= 1e-3)
    return CalibrationResult{nearest.model, nearest.achieved.purity, nearest.achieved.concurrence};

  const Branch dephasing{&make_vd, true};
  const Branch damping{&make_vg, false};
  if (auto r = search_branch(dephasing, target_purity, target_concurrence, nearest)) return *r;
  if (auto r = search_branch(damping, target_purity, target_concurrence, nearest)) return *r;

  std::ostringstream msg;
  msg.precision(6);
  msg << "no source model reaches purity " << target_purity << " and concurrence " << target_concurrence
      << "; nearest achievable point: v=" << nearest.model.v << " d=" << nearest.model.d
      << " g=" << nearest.model.g << " (purity " << nearest.achieved.purity << ", concurrence "
      << nearest.achieved.concurrence << ")";
  throw CalibrationError(msg.str());
}

void set_worker_count(unsigned n) { g_workers.store(n); }

DensityMatrix component_state(int component, double theta, double phi, const SourceModel& m) {
  if (component == kEntangledComponent) return apply_noise(density_from_ket(ket_from_params(theta, phi)), m);
  return density_from_ket(basis_ket(component - 1));
}

DataPool build_pool(double theta, double phi, const SourceModel& m, const FeaturePlan& plan,
                    std::uint64_t shots, Stream& rng) {
  DataPool pool;
  pool.theta = theta;
  pool.phi = phi;
  pool.shots = shots;
  pool.stream_key = rng.key();
  const auto settings = plan.settings();
  for (int c = 0; c < kComponentCount; ++c) {
    const DensityMatrix rho = component_state(c, theta, phi, m);
    for (int s = 0; s < 4; ++s) pool.components[c].plan[s] = sample_counts(rho, settings[s], shots, rng);
    pool.components[c].tomography = tomography_measure(rho, shots, rng);
  }
  return pool;
}

namespace {

// One setting's worth of time-mixed events.
CountRecord mix_setting(const std::array<const CountRecord*, kComponentCount>& cells, std::uint64_t events,
                        double p, Stream& rng) {
  std::array<std::array<std::uint64_t, 4>, kComponentCount> left{};
  std::array<std::uint64_t, kComponentCount> left_total{};
  for (int c = 0; c < kComponentCount; ++c) {
    for (int k = 0; k < 4; ++k) left[c][k] = (*cells[c])[k];
    left_total[c] = cells[c]->total();
  }
  CountRecord out;
  out.setting = cells[0]->setting;
  for (std::uint64_t n = 0; n < events; ++n) {
    const int c = rng.uniform() < p ? kEntangledComponent : 1 + static_cast<int>(rng.below(4));
    if (left_total[c] == 0) throw std::logic_error("mix_sample: pool component exhausted");
    std::uint64_t pick = rng.below(left_total[c]);
    int k = 0;
    while (pick >= left[c][k]) pick -= left[c][k++];
    --left[c][k];
    --left_total[c];
    ++out[k];
  }
  return out;
}

}  // namespace

MixedSample mix_sample(const DataPool& pool, double p, Stream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("mix_sample: p outside [0, 1]");
  MixedSample out;
  std::array<const CountRecord*, kComponentCount> cells{};
  for (int s = 0; s < 4; ++s) {
    for (int c = 0; c < kComponentCount; ++c) cells[c] = &pool.components[c].plan[s];
    out.plan_counts[s] = mix_setting(cells, pool.shots, p, rng);
  }
  for (int s = 0; s < 9; ++s) {
    for (int c = 0; c < kComponentCount; ++c) cells[c] = &pool.components[c].tomography[s];
    out.tomography[s] = mix_setting(cells, pool.shots, p, rng);
  }
  out.features = features_from_counts(out.plan_counts);
  out.reconstructed = reconstruct_density(out.tomography);
  return out;
}

std::string to_string(ProtocolKind k) { return k == ProtocolKind::Linear ? "linear" : "nonlinear"; }

ProtocolKind protocol_from_string(const std::string& s) {
  if (s == "linear") return ProtocolKind::Linear;
  if (s == "nonlinear") return ProtocolKind::Nonlinear;
  throw std::invalid_argument("unknown protocol '" + s + "'");
}

void ProtocolSpec::validate() const {
  if (thetas.empty() || phis.empty() || p_grid.empty())
    throw std::invalid_argument("protocol: theta, phi and p lists must be non-empty");
  for (double t : thetas)
    if (!(t > 0.0 && t <= kPi / 4 + 1e-12)) throw std::invalid_argument("protocol: theta outside (0, pi/4]");
  for (double f : phis)
    if (!(f >= 0.0 && f <= kPi + 1e-12)) throw std::invalid_argument("protocol: phi outside [0, pi]");
  for (double p : p_grid)
    if (!(p >= 0.01 - 1e-12 && p <= 0.99 + 1e-12)) throw std::invalid_argument("protocol: p outside [0.01, 0.99]");
  if (margin_count < 1) throw std::invalid_argument("protocol: margin count must be positive");
  if (!(margin_halfwidth > 0.0 && margin_halfwidth < 0.5))
    throw std::invalid_argument("protocol: margin half-width outside (0, 0.5)");
  if (shots == 0) throw std::invalid_argument("protocol: shots must be positive");
  plan_by_name(plan);
}

std::vector<double> uniform_p_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 99; ++i) g.push_back(i / 100.0);
  return g;
}

std::vector<double> default_thetas() { return {kPi / 20, kPi / 10, 3 * kPi / 20, kPi / 5, kPi / 4}; }

ProtocolSpec default_linear_spec(std::uint64_t seed) {
  ProtocolSpec s;
  s.kind = ProtocolKind::Linear;
  s.thetas = default_thetas();
  s.phis = {0.0};
  s.p_grid = uniform_p_grid();
  s.plan = "xz";
  s.seed = seed;
  return s;
}

ProtocolSpec default_nonlinear_spec(std::uint64_t seed) {
  ProtocolSpec s = default_linear_spec(seed);
  s.kind = ProtocolKind::Nonlinear;
  s.phis = {0.0, kPi / 2, kPi};
  s.plan = "xyz";
  return s;
}

std::optional<double> noisy_boundary(double theta, double phi, const SourceModel& m) {
  return ppt_boundary(component_state(kEntangledComponent, theta, phi, m));
}

namespace {

struct Job {
  int theta_index;
  int phi_index;
  int p_index;
  double p;
};

std::vector<Job> grid_jobs(const ProtocolSpec& spec, const std::vector<int>& phi_indices) {
  std::vector<Job> jobs;
  for (int fi : phi_indices)
    for (int ti = 0; ti < int(spec.thetas.size()); ++ti)
      for (int pi = 0; pi < int(spec.p_grid.size()); ++pi) jobs.push_back({ti, fi, pi, spec.p_grid[pi]});
  return jobs;
}

double clip_p(double p) { return std::clamp(p, 0.01, 0.99); }

std::vector<Job> margin_jobs(const ProtocolSpec& spec, const SourceModel& m, std::uint64_t acq) {
  std::vector<Job> jobs;
  for (int fi = 0; fi < int(spec.phis.size()); ++fi)
    for (int ti = 0; ti < int(spec.thetas.size()); ++ti) {
      const auto star = noisy_boundary(spec.thetas[ti], spec.phis[fi], m);
      if (!star) throw std::invalid_argument("protocol: source state has no entangled region");
      const double center = clip_p(*star);
      for (int k = 0; k < spec.margin_count; ++k) {
        Stream s = Stream::derive(spec.seed, {kMarginStream, acq, std::uint64_t(ti), std::uint64_t(fi),
                                              std::uint64_t(k)});
        const double p = clip_p(center + (2.0 * s.uniform() - 1.0) * spec.margin_halfwidth);
        jobs.push_back({ti, fi, k, p});
      }
    }
  return jobs;
}

// `pool_tag` names the measurement run the pools come from; `acquisition`
// keys the mixing draws. Both splits of one protocol may share pools.
Dataset run_jobs(const ProtocolSpec& spec, const SourceModel& m, const std::vector<Job>& jobs,
                 const std::string& acquisition, Split split, const std::string& pool_tag) {
  const FeaturePlan plan = plan_by_name(spec.plan);
  const std::uint64_t acq = tag_hash(acquisition);
  const std::uint64_t pool_acq = tag_hash(pool_tag);

  // Pools for every (theta, phi) touched by the jobs.
  const int nt = int(spec.thetas.size());
  const int nf = int(spec.phis.size());
  std::vector<std::optional<DataPool>> pools(std::size_t(nt) * nf);
  std::vector<int> wanted;
  for (const Job& j : jobs) {
    const int key = j.phi_index * nt + j.theta_index;
    if (std::find(wanted.begin(), wanted.end(), key) == wanted.end()) wanted.push_back(key);
  }
  parallel_for(wanted.size(), [&](std::size_t i) {
    const int key = wanted[i];
    const int ti = key % nt, fi = key / nt;
    Stream rng = Stream::derive(spec.seed, {kPoolStream, pool_acq, std::uint64_t(ti), std::uint64_t(fi)});
    pools[key] = build_pool(spec.thetas[ti], spec.phis[fi], m, plan, spec.shots, rng);
  });

  std::vector<std::optional<LabeledSample>> out(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& j = jobs[i];
    const DataPool& pool = *pools[j.phi_index * nt + j.theta_index];
    Stream rng = Stream::derive(spec.seed, {kSampleStream, acq, std::uint64_t(j.theta_index),
                                            std::uint64_t(j.phi_index), std::uint64_t(j.p_index), 0});
    const MixedSample mixed = mix_sample(pool, j.p, rng);
    const DensityMatrix source = component_state(kEntangledComponent, pool.theta, pool.phi, m);
    out[i] = LabeledSample{mixed.features,
                           ppt_label(mixed.reconstructed),
                           pool.theta,
                           pool.phi,
                           j.p,
                           j.theta_index,
                           j.phi_index,
                           mixed.reconstructed,
                           werner_like(source, j.p)};
  });

  Dataset ds;
  ds.samples.reserve(out.size());
  for (auto& s : out) ds.samples.push_back(std::move(*s));
  ds.provenance = Provenance{spec, m, split, false, acquisition};
  return ds;
}

}  // namespace

Dataset gen_linear_dataset(const ProtocolSpec& spec, const SourceModel& m, const std::string& acquisition) {
  spec.validate();
  if (spec.kind != ProtocolKind::Linear) throw std::invalid_argument("gen_linear_dataset: protocol is not linear");
  return run_jobs(spec, m, grid_jobs(spec, {0}), acquisition, Split::Grid, acquisition);
}

TrainTest gen_nonlinear_dataset(const ProtocolSpec& spec, const SourceModel& m) {
  spec.validate();
  if (spec.kind != ProtocolKind::Nonlinear)
    throw std::invalid_argument("gen_nonlinear_dataset: protocol is not nonlinear");
  std::vector<int> all_phis;
  for (int i = 0; i < int(spec.phis.size()); ++i) all_phis.push_back(i);
  TrainTest tt;
  // One pool per state, as in a single measurement campaign; the two splits
  // are independent time-mixing draws from it.
  tt.train = run_jobs(spec, m, margin_jobs(spec, m, tag_hash("train")), "train", Split::Margin, "pool");
  tt.test = run_jobs(spec, m, grid_jobs(spec, all_phis), "test", Split::Grid, "pool");
  return tt;
}

Dataset gen_theory_dataset(const ProtocolSpec& spec, Split split) {
  spec.validate();
  const FeaturePlan plan = plan_by_name(spec.plan);
  std::vector<int> phis;
  if (spec.kind == ProtocolKind::Linear)
    phis = {0};
  else
    for (int i = 0; i < int(spec.phis.size()); ++i) phis.push_back(i);

  std::vector<Job> jobs;
  if (split == Split::Grid) {
    jobs = grid_jobs(spec, phis);
  } else {
    for (int fi : phis)
      for (int ti = 0; ti < int(spec.thetas.size()); ++ti) {
        const auto star = ppt_boundary(spec.thetas[ti], spec.phis[fi]);
        if (!star) throw std::invalid_argument("protocol: state has no entangled region");
        const double center = clip_p(*star);
        const int n = spec.margin_count;
        for (int k = 0; k < n; ++k) {
          const double offset = n == 1 ? 0.0 : -1.0 + 2.0 * k / (n - 1);
          jobs.push_back({ti, fi, k, clip_p(center + offset * spec.margin_halfwidth)});
        }
      }
  }

  Dataset ds;
  for (const Job& j : jobs) {
    const double theta = spec.thetas[j.theta_index];
    const double phi = spec.phis[j.phi_index];
    const DensityMatrix rho = werner_like(density_from_ket(ket_from_params(theta, phi)), j.p);
    ds.samples.push_back(LabeledSample{features_exact(rho, plan), ppt_label(rho), theta, phi, j.p,
                                       j.theta_index, j.phi_index, rho, rho});
  }
  ds.provenance = Provenance{spec, SourceModel{}, split, true, "theory"};
  return ds;
}

}  // namespace qsep

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsep/measurement.hpp"
#include "qsep/quantum.hpp"
#include "qsep/random.hpp"

namespace qsep {

inline constexpr std::uint64_t kDefaultSeed = 20180601;
inline constexpr std::uint64_t kDefaultShots = 10000;

/// Imperfections of the entangled-pair source.
///   v: retention against white noise, rho -> v rho + (1 - v) I/4
///   d: retention of off-diagonal coherences
///   g: local amplitude damping (V -> H relaxation) on each photon
struct SourceModel {
  double v = 1.0;
  double d = 1.0;
  double g = 0.0;

  /// Throws std::domain_error unless every field is in [0, 1].
  void validate() const;
};

/// Dephase by d, damp both photons by g, then depolarize by v.
DensityMatrix apply_noise(const DensityMatrix& rho, const SourceModel& m);

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationResult {
  SourceModel model;
  double purity = 0.0;
  double concurrence = 0.0;
};

/// Finds a SourceModel whose noisy Bell state matches both targets within
/// 1e-3. Searches (v, d) with g = 0 first and falls back to (v, g) with
/// d = 1: at fixed concurrence, white noise and dephasing alone keep the
/// purity at or above the Werner curve. Throws CalibrationError naming the
/// closest achievable point on failure.
CalibrationResult calibrate_source(double target_purity, double target_concurrence);

/// Product states |HH>, |HV>, |VH>, |VV> follow the entangled component.
inline constexpr int kEntangledComponent = 0;
inline constexpr int kComponentCount = 5;

struct ComponentCounts {
  std::array<CountRecord, 4> plan;
  TomographyRecords tomography;
};

/// Recorded coincidences of the five source components for one (theta, phi).
struct DataPool {
  double theta = 0.0;
  double phi = 0.0;
  std::uint64_t shots = 0;
  std::uint64_t stream_key = 0;
  std::array<ComponentCounts, kComponentCount> components;
};

DensityMatrix component_state(int component, double theta, double phi, const SourceModel& m);

/// Measures the noisy entangled state and the four noiseless product states
/// under the plan settings and the nine tomography settings.
DataPool build_pool(double theta, double phi, const SourceModel& m, const FeaturePlan& plan,
                    std::uint64_t shots, Stream& rng);

struct MixedSample {
  FeatureVector features{};
  std::array<CountRecord, 4> plan_counts;
  TomographyRecords tomography;
  DensityMatrix reconstructed = DensityMatrix::maximally_mixed();
};

/// Time-mixing: per setting, `shots` events, each taken from the entangled
/// component with probability p and otherwise from a uniformly chosen
/// product component; the event's outcome is drawn without replacement from
/// that component's recorded counts.
MixedSample mix_sample(const DataPool& pool, double p, Stream& rng);

enum class ProtocolKind { Linear, Nonlinear };

std::string to_string(ProtocolKind k);
ProtocolKind protocol_from_string(const std::string& s);

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::Linear;
  std::vector<double> thetas;
  std::vector<double> phis;
  std::vector<double> p_grid;
  int margin_count = 80;
  double margin_halfwidth = 0.05;
  std::string plan = "xz";
  std::uint64_t shots = kDefaultShots;
  std::uint64_t seed = kDefaultSeed;

  /// Throws std::invalid_argument when the spec breaks its invariants.
  void validate() const;
};

/// 0.01, 0.02, ..., 0.99.
std::vector<double> uniform_p_grid();
std::vector<double> default_thetas();

ProtocolSpec default_linear_spec(std::uint64_t seed = kDefaultSeed);
ProtocolSpec default_nonlinear_spec(std::uint64_t seed = kDefaultSeed);

struct LabeledSample {
  FeatureVector features{};
  Separability label = Separability::Separable;
  double theta = 0.0;
  double phi = 0.0;
  double p = 0.0;
  int theta_index = 0;
  int phi_index = 0;
  DensityMatrix reconstructed = DensityMatrix::maximally_mixed();
  DensityMatrix truth = DensityMatrix::maximally_mixed();
};

enum class Split { Grid, Margin };

struct Provenance {
  ProtocolSpec spec;
  SourceModel source;
  Split split = Split::Grid;
  bool theory = false;
  /// Distinguishes independent acquisitions drawn from the same master seed.
  std::string acquisition = "train";
};

struct Dataset {
  std::vector<LabeledSample> samples;
  Provenance provenance;
};

/// Threads used by dataset generation; 0 (the default) means one per core.
/// Output does not depend on it.
void set_worker_count(unsigned n);

/// PPT boundary of the mixture p * apply_noise(ket(theta, phi)) + (1 - p) I/4.
std::optional<double> noisy_boundary(double theta, double phi, const SourceModel& m);

/// Five theta blocks of 99 grid states at phi = spec.phis[0].
Dataset gen_linear_dataset(const ProtocolSpec& spec, const SourceModel& m,
                           const std::string& acquisition = "train");

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// 15 states (3 phases x 5 thetas); training draws margin_count p values
/// uniformly within margin_halfwidth of each state's boundary, testing uses
/// the uniform grid. Both splits are drawn from one pool per state.
TrainTest gen_nonlinear_dataset(const ProtocolSpec& spec, const SourceModel& m);

/// Noiseless counterpart: exact correlators of ideal states, exact PPT
/// labels. Margin p values are evenly spaced instead of drawn.
Dataset gen_theory_dataset(const ProtocolSpec& spec, Split split);

}  // namespace qsep

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qsep/quantum.hpp"
#include "qsep/random.hpp"

namespace qsep {

/// Unit vector on the Bloch sphere naming a +/-1 valued polarization observable.
class BlochDirection {
 public:
  /// Throws std::domain_error unless x^2 + y^2 + z^2 == 1 within 1e-12.
  BlochDirection(double x, double y, double z);

  /// Rescales (x, y, z) to unit length.
  static BlochDirection normalized(double x, double y, double z);

  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  friend bool operator==(const BlochDirection&, const BlochDirection&) = default;

 private:
  double x_, y_, z_;
};

struct SettingPair {
  BlochDirection a;
  BlochDirection b;
  friend bool operator==(const SettingPair&, const SettingPair&) = default;
};

/// Four measurement settings in the order (a0 b0, a0 b0', a0' b0, a0' b0').
struct FeaturePlan {
  std::string name;
  BlochDirection a0, a0p, b0, b0p;

  std::array<SettingPair, 4> settings() const;
};

/// a0 = z, a0' = x, b0 = (z + x)/sqrt2, b0' = (z - x)/sqrt2.
FeaturePlan xz_plan();

/// a0 = (z + y)/sqrt2, a0' = x, b0 = (z + x)/sqrt2, b0' = (z + y)/sqrt2.
/// Sensitive to the relative phase of the Werner-like family.
FeaturePlan xyz_plan();

/// "xz" or "xyz"; throws std::invalid_argument otherwise.
FeaturePlan plan_by_name(const std::string& name);

/// Coincidence counts of one setting; outcome order (++, +-, -+, --).
struct CountRecord {
  std::uint64_t n_pp = 0, n_pm = 0, n_mp = 0, n_mm = 0;
  SettingPair setting{BlochDirection(0, 0, 1), BlochDirection(0, 0, 1)};

  std::uint64_t total() const { return n_pp + n_pm + n_mp + n_mm; }
  std::uint64_t& operator[](int outcome);
  std::uint64_t operator[](int outcome) const;
};

using FeatureVector = std::array<double, 4>;
using Signs = std::array<int, 4>;

/// Sign pattern of the textbook CHSH combination <ab> - <ab'> + <a'b> + <a'b'>.
inline constexpr Signs kChshSigns{+1, -1, +1, +1};

/// The eight sign patterns with an odd number of minus signs: the relabelings
/// under which the local-realistic bound stays 2.
const std::array<Signs, 8>& chsh_sign_patterns();

Mat2 pauli_from_direction(const BlochDirection& d);

/// tr(rho (A (x) B)).
double correlator_exact(const DensityMatrix& rho, const BlochDirection& a, const BlochDirection& b);

double chsh_value(const FeatureVector& f, const Signs& signs = kChshSigns);
double chsh_value(const DensityMatrix& rho, const FeaturePlan& plan, const Signs& signs = kChshSigns);

/// max over chsh_sign_patterns() of |chsh_value|.
double max_chsh_value(const FeatureVector& f);

/// Entangled iff |sum sign_i f_i| > 2.
Separability chsh_classifier_standard(const FeatureVector& f, const Signs& signs = kChshSigns);

/// Entangled iff some valid sign pattern violates the bound.
Separability chsh_classifier_best(const FeatureVector& f);

/// Joint outcome probabilities (++, +-, -+, --). Round-off negatives down to
/// -1e-12 are clipped and the vector renormalized; anything more negative
/// throws std::domain_error.
std::array<double, 4> joint_probabilities(const DensityMatrix& rho, const SettingPair& s);

/// Multinomial draw of `shots` coincidences.
CountRecord sample_counts(const DensityMatrix& rho, const SettingPair& s, std::uint64_t shots,
                          Stream& rng);

/// Counts proportional to the exact probabilities, rounded at `total`; the
/// infinite-shot stand-in used by inversion checks.
CountRecord expected_counts(const DensityMatrix& rho, const SettingPair& s, std::uint64_t total);

/// (n++ - n+- - n-+ + n--) / total. Throws std::domain_error on an empty record.
double estimate_correlator(const CountRecord& c);

FeatureVector features_exact(const DensityMatrix& rho, const FeaturePlan& plan);
FeatureVector features_from_counts(const std::array<CountRecord, 4>& records);

using TomographyRecords = std::array<CountRecord, 9>;

/// The nine Pauli pairs, index 3*i + j for Alice axis i and Bob axis j in (x, y, z).
const std::array<SettingPair, 9>& tomography_settings();

TomographyRecords tomography_measure(const DensityMatrix& rho, std::uint64_t shots_per_setting,
                                     Stream& rng);
TomographyRecords tomography_expected(const DensityMatrix& rho, std::uint64_t total);

/// Linear inversion (1/4) sum_ij <s_i s_j> s_i (x) s_j; Hermitian, trace one,
/// possibly not positive.
Mat4 linear_inversion(const TomographyRecords& records);

/// Clip negative eigenvalues to zero and spread the deficit evenly over the
/// remaining ones, repeating until all are non-negative.
std::array<double, 4> project_spectrum(std::array<double, 4> ascending);

DensityMatrix project_to_physical(const Mat4& m);

DensityMatrix reconstruct_density(const TomographyRecords& records);

}  // namespace qsep

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsep/ann.hpp"
#include "qsep/dataset_io.hpp"
#include "qsep/experiment.hpp"

namespace qsep {

struct StateRate {
  double theta = 0.0;
  double phi = 0.0;
  double p_star = 0.0;  // NaN when the state has no entangled region
  std::size_t n = 0;
  std::size_t hits = 0;
  double rate() const { return n == 0 ? 0.0 : double(hits) / double(n); }
};

struct Mismatch {
  double theta = 0.0;
  double phi = 0.0;
  double p = 0.0;
  double p_star = 0.0;
  int label = 0;
  int predicted = 0;
};

struct Confusion {
  std::size_t true_entangled = 0, true_separable = 0, false_entangled = 0, false_separable = 0;
};

/// Match statistics of one classifier on one labeled table.
struct ClassifierScore {
  std::string name;
  double overall = 0.0;
  std::vector<StateRate> per_state;
  Confusion confusion;
  std::vector<Mismatch> mismatches;
  /// Share of mismatches with |p - p*| < 0.1; 1 when there are none.
  double near_boundary_fraction = 1.0;
};

struct EvalReport {
  ClassifierScore model;
  std::optional<ClassifierScore> baseline;  // best-oriented standard CHSH, x-z plan only
};

/// Boundary p* of each (theta, phi) in the table, from its source model (or
/// the ideal state for theory tables).
double table_boundary(const DatasetTable& t, double theta, double phi);

ClassifierScore score_predictions(const std::string& name, const DatasetTable& t, const std::vector<int>& predicted);

std::vector<int> predict_all(const Model& m, const DatasetTable& t, double threshold);
std::vector<int> chsh_baseline_predictions(const DatasetTable& t);

/// Throws PlanMismatchError when model and dataset plans differ.
EvalReport evaluate(const ModelFile& model, const DatasetTable& t);

json to_json(const ClassifierScore& s);
json to_json(const EvalReport& r);
std::string mismatch_csv(const ClassifierScore& s);

/// Files produced by a command, keyed by file name.
using Artifacts = std::map<std::string, std::string>;

void write_artifacts(const std::filesystem::path& dir, const Artifacts& a);

struct ReproduceOptions {
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t shots = kDefaultShots;
  SourceModel source;  // calibrated default, see default_source()
  TrainConfig train;
  std::vector<int> hidden_widths{5, 10, 100};
};

/// Source calibrated to purity 0.914, concurrence 0.927.
SourceModel default_source();
ReproduceOptions default_reproduce_options(std::uint64_t seed = kDefaultSeed);

json to_json(const ReproduceOptions& o);

struct LinearStudy {
  DatasetTable train;
  DatasetTable test;
  ModelFile model;
  TrainReport report;
  EvalReport eval;
};

/// Linear protocol: train on one acquisition, test on a fresh one.
LinearStudy run_linear_study(const ReproduceOptions& o);

struct TrainedClassifier {
  Arch arch;
  ModelFile model;
  TrainReport report;
  ClassifierScore score;  // on the noisy nonlinear test set
};

struct NonlinearStudy {
  DatasetTable train;
  DatasetTable test;
  DatasetTable theory_train;
  std::vector<TrainedClassifier> experiment;  // linear first, then hidden widths
  std::vector<TrainedClassifier> theory;
};

/// `with_theory` adds the classifiers trained on noiseless data.
NonlinearStudy run_nonlinear_study(const ReproduceOptions& o, bool with_theory);

Artifacts fig3_artifacts(const LinearStudy& s);
Artifacts figS1_artifacts(const LinearStudy& s);
Artifacts fig4_artifacts(const NonlinearStudy& s);
Artifacts fig5_artifacts(const NonlinearStudy& s);

/// Runs the pipeline behind one figure ("fig3", "fig4", "fig5", "figS1").
Artifacts reproduce(const std::string& figure, const ReproduceOptions& o);

}  // namespace qsep

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsep/ann.hpp"
#include "qsep/experiment.hpp"

namespace qsep {

using json = nlohmann::ordered_json;

/// One line of a dataset CSV: theta,phi,p,f1,f2,f3,f4,label,seed.
struct DatasetRow {
  double theta = 0.0;
  double phi = 0.0;
  double p = 0.0;
  FeatureVector f{};
  int label = 0;
  std::uint64_t seed = 0;
};

/// Dataset as stored on disk: rows plus the provenance sidecar.
struct DatasetTable {
  std::vector<DatasetRow> rows;
  json sidecar;

  std::string plan() const;
  bool theory() const;
  SourceModel source() const;
};

class PlanMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kDatasetHeader = "theta,phi,p,f1,f2,f3,f4,label,seed";

/// Rows are rounded to the 12 significant digits of the CSV form, so a
/// table built in memory equals the one read back from disk.
DatasetTable to_table(const Dataset& ds);

std::string dataset_csv(const DatasetTable& t);
/// Writes `csv` and its sidecar `csv` with extension .json.
void write_dataset(const std::filesystem::path& csv, const DatasetTable& t);
/// Throws std::invalid_argument on a malformed file.
DatasetTable read_dataset(const std::filesystem::path& csv);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Reconstructed matrices, one row per sample: 16 entries row-major with
/// real and imaginary parts interleaved.
void write_matrices(const std::filesystem::path& csv, const Dataset& ds);

std::vector<Example> examples(const DatasetTable& t);

json to_json(const SourceModel& m);
SourceModel source_from_json(const json& j);
json to_json(const ProtocolSpec& s);
json to_json(const FeaturePlan& p);
json sidecar_json(const Provenance& p);
json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j);

struct ModelFile {
  Model model;
  std::string plan;
  double threshold = 0.5;
  TrainConfig config;
  json dataset_provenance;
};

json model_json(const ModelFile& m);
ModelFile model_from_json(const json& j);

/// 17 significant digits for model weights, 12 for dataset values.
std::string format_double(double x, int digits);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace qsep

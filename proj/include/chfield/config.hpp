#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chfield/covariance.hpp"
#include "chfield/cv.hpp"
#include "chfield/detrend.hpp"
#include "chfield/estimate.hpp"
#include "chfield/gp.hpp"
#include "chfield/ingest.hpp"
#include "chfield/study.hpp"

namespace chfield {

// All loaders read YAML (JSON documents are accepted too) and throw ConfigError on
// malformed content. Relative data paths resolve against the config file's directory.

CovarianceSpec parse_spec_text(const std::string& yaml);
// Accepts a bare spec document or a fit result (its `spec` entry).
CovarianceSpec load_spec_file(const std::string& path);
std::string spec_to_yaml(const CovarianceSpec& spec);

struct DataSource {
  std::string path;
  CsvSchema schema;
};

struct FitConfig {
  DataSource data;
  int p = 0;  // 0: largest variable index in the data
  ModelShape shape;
  FitOptions options;
  std::optional<CovarianceSpec> init;
};

struct PredictConfig {
  CovarianceSpec spec;
  DataSource train;
  DataSource targets;
  PredictOptions options;
};

struct SimulateConfig {
  CovarianceSpec spec;
  std::optional<DataSource> design;  // locations + variables from a file
  std::vector<int> counts;           // otherwise uniform random sites per variable
  std::vector<double> lower, upper;
  std::uint64_t seed = 1;
};

struct DetrendConfig {
  DataSource data;
  DetrendOptions options;
};

struct CVRunConfig {
  DataSource data;
  std::optional<DataSource> auxiliary;
  int p = 0;
  CVConfig cv;
};

FitConfig load_fit_config(const std::string& path);
PredictConfig load_predict_config(const std::string& path);
SimulateConfig load_simulate_config(const std::string& path);
DetrendConfig load_detrend_config(const std::string& path);
StudyConfig load_study_config(const std::string& path);
CVRunConfig load_cv_config(const std::string& path);

std::string fit_result_to_yaml(const FittedModel& fm, const Parameterization& par);

const char* library_version();

// FNV-1a of the file bytes, as 16 hex digits (run manifests).
std::string file_digest(const std::string& path);

}  // namespace chfield

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chfield/covariance.hpp"
#include "chfield/dataset.hpp"
#include "chfield/estimate.hpp"

namespace chfield {

enum class CVScheme { KFold, LeaveOneGroupOut };

const char* scheme_name(CVScheme s);
CVScheme parse_scheme(const std::string& s);

struct CVModel {
  std::string name;
  ModelShape shape;
  std::optional<CovarianceSpec> fixed;  // predict with these parameters instead of fitting
};

struct CVVariant {
  std::string name = "base";
  bool use_auxiliary = false;  // add the auxiliary observations as predictors
};

struct CVConfig {
  CVScheme scheme = CVScheme::KFold;
  int k = 2;
  std::vector<CVModel> models;
  std::vector<CVVariant> variants = {CVVariant{}};
  std::uint64_t seed = 1;
  double level = 0.95;
  bool intervals_with_nugget = true;  // held-out data are noisy
  FitOptions fit;

  void validate() const;
};

struct CVScore {
  std::string model;
  std::string variant;
  std::string fold;  // 1-based fold number, or "all"
  int response = 0;  // 0-based
  int n = 0;
  double rmse = 0.0;
  double mae = 0.0;       // median absolute error
  double coverage = 0.0;  // percent
  double interval_length = 0.0;  // median
};

struct CVResult {
  std::vector<std::vector<std::string>> folds;  // unit labels per fold
  std::vector<CVScore> scores;
};

// Folds are built from the dataset's unit labels. Throws ConfigError when labels are
// missing or a fold leaves no training or no test data.
CVResult run_cv(const SpatialDataset& data, int p, const CVConfig& cfg, const SpatialDataset* auxiliary = nullptr);

void write_cv_scores(std::ostream& out, const CVResult& res);

}  // namespace chfield

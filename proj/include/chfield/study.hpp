#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chfield/covariance.hpp"
#include "chfield/estimate.hpp"

namespace chfield {

struct FamilyChoice {
  std::string name;  // label in the output tables, e.g. "CH"
  ModelShape shape;
};

// Which observations predict which target variable at the held-out locations.
struct PredictorSet {
  std::string label;  // e.g. "Y1+Y2"
  bool first = false;        // Y1 at its own sites
  bool second = false;       // Y2 at its own sites
  bool first_out = false;    // Y1 at the held-out sites
  bool second_out = false;   // Y2 at the held-out sites
  int response = 0;          // 0-based target variable
};

// The six predictor/response pairs of the main comparison table.
std::vector<PredictorSet> main_predictor_sets();
// Variants that also observe the other variable at the held-out sites.
std::vector<PredictorSet> other_at_target_sets();

struct StudyConfig {
  int replicates = 20;
  int n1 = 100;
  int n2 = 200;
  int n_out = 200;
  bool colocated = false;  // second-variable sites reuse the first-variable sites (n2 = n1)
  std::vector<double> lower = {0.0, 0.0};
  std::vector<double> upper = {1.0, 1.0};
  std::string truth_name = "CH";
  CovarianceSpec truth;
  std::vector<FamilyChoice> families;
  std::vector<PredictorSet> predictor_sets = main_predictor_sets();
  bool oracle = true;  // also predict with the true covariance
  bool intervals_with_nugget = false;
  std::uint64_t seed = 1;
  double level = 0.95;
  FitOptions fit;

  void validate() const;
};

struct StudyRow {
  int replicate = 0;
  std::string family;      // fitted family label, "oracle" or "null"
  std::string predictors;
  int response = 0;        // 0-based
  double rmse = 0.0;
  double coverage = 0.0;   // percent
  double length = 0.0;     // mean interval length
  double loglik = 0.0;
  bool converged = true;
  std::string status = "ok";
};

struct StudySummaryRow {
  std::string family;
  std::string predictors;
  int response = 0;
  int ok = 0;
  int failed = 0;
  double mean_rmse = 0.0;
  double mean_coverage = 0.0;
  double mean_length = 0.0;
};

struct StudyResult {
  std::string truth_name;
  std::vector<StudyRow> rows;  // replicate order, then family, then predictor set
  std::vector<StudySummaryRow> summary;  // sorted by (family, predictors, response)
  int failed_fits = 0;
};

StudyResult run_simulation_study(const StudyConfig& cfg);
std::vector<StudySummaryRow> summarize(const std::vector<StudyRow>& rows);

void write_study_long(std::ostream& out, const StudyResult& res);
void write_study_summary(std::ostream& out, const StudyResult& res);

}  // namespace chfield

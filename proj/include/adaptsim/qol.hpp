#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "adaptsim/rng.hpp"
#include "adaptsim/transport.hpp"

namespace adaptsim {

struct SurveyData {
  std::vector<std::string> categories;  // feature columns
  Eigen::MatrixXd features;             // rows x categories, per-capita accessibility
  Eigen::VectorXd satisfied;            // 0 or 1
  int rows() const { return static_cast<int>(features.rows()); }
};

struct FitConfig {
  double l2_lambda = 1.0;
  int max_iterations = 100;
  double tolerance = 1e-8;  // on the gradient's Euclidean norm
  bool include_intercept = true;
};

struct QoLWeights {
  std::map<std::string, double> weights;
};

struct FitReport {
  std::vector<std::string> categories;
  Eigen::VectorXd coefficients;  // raw, one per category
  double intercept = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  QoLWeights weights;            // coefficients scaled so that sum |w| = 1
};

// Regularized negative log-likelihood
//   sum_i [log(1 + exp(b + x_i.w)) - y_i (b + x_i.w)] + lambda/2 |w|^2
// The intercept b is not penalized.
double logistic_nll(const SurveyData& data, const Eigen::VectorXd& w, double intercept, double lambda);
// Gradient with respect to (w, b); the last entry is the intercept component.
Eigen::VectorXd logistic_nll_gradient(const SurveyData& data, const Eigen::VectorXd& w, double intercept,
                                      double lambda);

// Newton (IRLS) iterations with an LDLT solve. Throws FitError for single-class
// labels or fewer than two rows, ConvergenceError if the tolerance is not reached.
FitReport fit_weights(const SurveyData& data, const FitConfig& cfg = {});

// Scales by sum |w|; throws FitError when every weight is zero.
QoLWeights normalize_weights(const std::vector<std::string>& categories, const Eigen::VectorXd& coefficients);

// Q = sum_c w_c * access_c. Throws DomainError for a profile category without a weight.
double qol(const AccessProfile& profile, const QoLWeights& weights);

// Respondents with uniform features in [0, feature_scale) and labels drawn from the
// logistic model, then flipped with probability `flip`.
SurveyData synthetic_survey(const std::vector<std::string>& categories, const Eigen::VectorXd& true_weights,
                            double true_intercept, int rows, double feature_scale, double flip, Rng& rng);

SurveyData parse_survey_csv(const CsvTable& table);
std::string format_survey_csv(const SurveyData& data);

nlohmann::json to_json(const FitReport& report);
nlohmann::json to_json(const QoLWeights& weights);
QoLWeights weights_from_json(const nlohmann::json& j);
FitConfig fit_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitConfig& cfg);

}  // namespace adaptsim

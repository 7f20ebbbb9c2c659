#include "adaptsim/qol.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

#include "adaptsim/errors.hpp"

namespace adaptsim {

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void check_shapes(const SurveyData& data, const Eigen::VectorXd& w) {
  if (data.features.cols() != static_cast<Eigen::Index>(data.categories.size()) ||
      data.features.rows() != data.satisfied.size() || w.size() != data.features.cols())
    throw DomainError("survey data and coefficient shapes disagree");
}

}  // namespace

double logistic_nll(const SurveyData& data, const Eigen::VectorXd& w, double intercept, double lambda) {
  check_shapes(data, w);
  const Eigen::VectorXd eta = (data.features * w).array() + intercept;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) nll += softplus(eta[i]) - data.satisfied[i] * eta[i];
  return nll + 0.5 * lambda * w.squaredNorm();
}

Eigen::VectorXd logistic_nll_gradient(const SurveyData& data, const Eigen::VectorXd& w, double intercept,
                                      double lambda) {
  check_shapes(data, w);
  const Eigen::VectorXd eta = (data.features * w).array() + intercept;
  Eigen::VectorXd resid = eta.unaryExpr([](double t) { return sigmoid(t); }) - data.satisfied;
  Eigen::VectorXd g(w.size() + 1);
  g.head(w.size()) = data.features.transpose() * resid + lambda * w;
  g[w.size()] = resid.sum();
  return g;
}

FitReport fit_weights(const SurveyData& data, const FitConfig& cfg) {
  if (!(cfg.l2_lambda >= 0.0) || !std::isfinite(cfg.l2_lambda)) throw FitError("l2_lambda must be >= 0");
  if (!(cfg.tolerance > 0.0)) throw FitError("tolerance must be > 0");
  const Eigen::Index n = data.features.rows(), p = data.features.cols();
  if (n < 2) throw FitError("at least two survey rows are required");
  if (!data.features.allFinite()) throw FitError("survey features must be finite");
  for (Eigen::Index i = 0; i < n; ++i)
    if (data.satisfied[i] != 0.0 && data.satisfied[i] != 1.0) throw FitError("labels must be 0 or 1");
  const double pos = data.satisfied.sum();
  if (pos == 0.0 || pos == static_cast<double>(n)) throw FitError("labels contain a single class");

  const Eigen::Index k = cfg.include_intercept ? p + 1 : p;
  Eigen::MatrixXd X(n, k);
  X.leftCols(p) = data.features;
  if (cfg.include_intercept) X.col(p).setOnes();
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(k, cfg.l2_lambda);
  if (cfg.include_intercept) penalty[p] = 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  auto gradient = [&](const Eigen::VectorXd& b, Eigen::VectorXd& mu) {
    mu = (X * b).unaryExpr([](double t) { return sigmoid(t); });
    return Eigen::VectorXd(X.transpose() * (mu - data.satisfied) + penalty.cwiseProduct(b));
  };
  auto objective = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f += softplus(eta[i]) - data.satisfied[i] * eta[i];
    return f + 0.5 * (penalty.array() * b.array().square()).sum();
  };

  FitReport rep;
  rep.categories = data.categories;
  Eigen::VectorXd mu;
  Eigen::VectorXd g = gradient(beta, mu);
  int it = 0;
  for (; it < cfg.max_iterations && g.norm() > cfg.tolerance; ++it) {
    const Eigen::VectorXd wts = mu.array() * (1.0 - mu.array());
    Eigen::MatrixXd H = X.transpose() * wts.asDiagonal() * X;
    H.diagonal() += penalty;
    const Eigen::VectorXd step = H.ldlt().solve(g);
    if (!step.allFinite()) throw ConvergenceError("Newton step is not finite", g.norm());
    // Backtracking keeps the objective decreasing when the quadratic model overshoots.
    // Near the optimum the objective is flat to rounding, so allow that much slack.
    const double f0 = objective(beta);
    const double slack = 1e-12 * (1.0 + std::abs(f0));
    double t = 1.0;
    Eigen::VectorXd next = beta - step;
    while (objective(next) > f0 + slack && t > 1e-10) {
      t *= 0.5;
      next = beta - t * step;
    }
    beta = next;
    g = gradient(beta, mu);
  }
  rep.iterations = it;
  rep.gradient_norm = g.norm();
  if (!(rep.gradient_norm <= cfg.tolerance))
    throw ConvergenceError("no convergence after " + std::to_string(it) + " iterations, gradient norm " +
                               std::to_string(rep.gradient_norm),
                           rep.gradient_norm);
  rep.coefficients = beta.head(p);
  rep.intercept = cfg.include_intercept ? beta[p] : 0.0;
  if (p > 0) rep.weights = normalize_weights(data.categories, rep.coefficients);
  return rep;
}

QoLWeights normalize_weights(const std::vector<std::string>& categories, const Eigen::VectorXd& coefficients) {
  if (static_cast<Eigen::Index>(categories.size()) != coefficients.size())
    throw DomainError("one coefficient per category is required");
  const double s = coefficients.lpNorm<1>();
  if (!(s > 0.0)) throw FitError("all fitted weights are zero; cannot normalize");
  QoLWeights w;
  for (std::size_t i = 0; i < categories.size(); ++i)
    w.weights[categories[i]] = coefficients[static_cast<Eigen::Index>(i)] / s;
  return w;
}

double qol(const AccessProfile& profile, const QoLWeights& weights) {
  double q = 0.0;
  for (const auto& [cat, v] : profile.per_capita) {
    auto it = weights.weights.find(cat);
    if (it == weights.weights.end()) throw DomainError("no weight for category '" + cat + "'");
    q += it->second * v;
  }
  return q;
}

SurveyData synthetic_survey(const std::vector<std::string>& categories, const Eigen::VectorXd& true_weights,
                            double true_intercept, int rows, double feature_scale, double flip, Rng& rng) {
  if (static_cast<Eigen::Index>(categories.size()) != true_weights.size())
    throw DomainError("one weight per category is required");
  SurveyData d;
  d.categories = categories;
  d.features.resize(rows, true_weights.size());
  d.satisfied.resize(rows);
  for (int i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < true_weights.size(); ++c) d.features(i, c) = feature_scale * rng.uniform();
    const double eta = d.features.row(i).dot(true_weights) + true_intercept;
    bool y = rng.bernoulli(sigmoid(eta));
    if (rng.bernoulli(flip)) y = !y;
    d.satisfied[i] = y ? 1.0 : 0.0;
  }
  return d;
}

SurveyData parse_survey_csv(const CsvTable& table) {
  const auto ys = table.column("satisfied");
  SurveyData d;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (i != ys) {
      if (table.header[i].empty()) throw ParseError(table.file, 1, "empty category name");
      d.categories.push_back(table.header[i]);
      cols.push_back(i);
    }
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  d.features.resize(n, static_cast<Eigen::Index>(cols.size()));
  d.satisfied.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    const auto y = parse_int(row.fields[ys], table.file, row.line);
    if (y != 0 && y != 1) throw ParseError(table.file, row.line, "satisfied must be 0 or 1");
    d.satisfied[r] = static_cast<double>(y);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double v = parse_double(row.fields[cols[c]], table.file, row.line);
      if (!std::isfinite(v)) throw ParseError(table.file, row.line, "feature values must be finite");
      d.features(r, static_cast<Eigen::Index>(c)) = v;
    }
  }
  return d;
}

std::string format_survey_csv(const SurveyData& data) {
  std::ostringstream out;
  out << "satisfied";
  for (const auto& c : data.categories) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    out << static_cast<int>(data.satisfied[r]);
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) out << ',' << format_double(data.features(r, c));
    out << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const QoLWeights& weights) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : weights.weights) j[k] = v;
  return j;
}

QoLWeights weights_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.empty()) throw ValidationError("qol weights must be a non-empty object");
  QoLWeights w;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ValidationError("weight for '" + k + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError("weight for '" + k + "' must be finite");
    w.weights[k] = x;
  }
  return w;
}

nlohmann::json to_json(const FitReport& report) {
  nlohmann::json coef = nlohmann::json::object();
  for (std::size_t i = 0; i < report.categories.size(); ++i)
    coef[report.categories[i]] = report.coefficients[static_cast<Eigen::Index>(i)];
  return {{"coefficients", coef},
          {"intercept", report.intercept},
          {"iterations", report.iterations},
          {"gradient_norm", report.gradient_norm},
          {"weights", to_json(report.weights)}};
}

FitConfig fit_config_from_json(const nlohmann::json& j) {
  FitConfig c;
  c.l2_lambda = j.value("l2_lambda", c.l2_lambda);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.include_intercept = j.value("include_intercept", c.include_intercept);
  if (!(c.l2_lambda >= 0.0)) throw ValidationError("l2_lambda must be >= 0");
  if (!(c.tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
  if (c.max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  return c;
}

nlohmann::json to_json(const FitConfig& cfg) {
  return {{"l2_lambda", cfg.l2_lambda},
          {"max_iterations", cfg.max_iterations},
          {"tolerance", cfg.tolerance},
          {"include_intercept", cfg.include_intercept}};
}

}  // namespace adaptsim

#include <cmath>

#include "adaptsim/errors.hpp"
#include "adaptsim/qol.hpp"
#include "doctest.h"
#include "oracles/nll_oracle.hpp"

using namespace adaptsim;

namespace {

SurveyData from_rows(std::vector<std::string> cats, const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
  SurveyData d;
  d.categories = std::move(cats);
  d.features.resize(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(d.categories.size()));
  d.satisfied.resize(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t c = 0; c < x[i].size(); ++c) d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = x[i][c];
    d.satisfied[static_cast<Eigen::Index>(i)] = y[i];
  }
  return d;
}

}  // namespace

TEST_CASE("fit: mirrored features give opposite weights") {
  Rng rng(1);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    const double v = rng.uniform() * 2 - 1;
    x.push_back({v, -v});
    y.push_back(i % 2);
  }
  const auto rep = fit_weights(from_rows({"a", "b"}, x, y));
  CHECK(rep.coefficients[0] == doctest::Approx(-rep.coefficients[1]).epsilon(1e-9));
  CHECK(std::abs(rep.weights.weights.at("a")) == doctest::Approx(0.5));
  CHECK(rep.weights.weights.at("a") == doctest::Approx(-rep.weights.weights.at("b")));
}

TEST_CASE("fit: intercept-only model on balanced labels") {
  SurveyData d;
  d.features.resize(50, 0);
  d.satisfied.resize(50);
  for (int i = 0; i < 50; ++i) d.satisfied[i] = i % 2;
  const auto rep = fit_weights(d);
  CHECK(std::abs(rep.intercept) < 1e-12);
  CHECK(rep.weights.weights.empty());
}

TEST_CASE("fit: intercept-only model recovers logit of the mean") {
  SurveyData d;
  d.features.resize(40, 0);
  d.satisfied = Eigen::VectorXd::Zero(40);
  d.satisfied.head(30).setOnes();
  CHECK(fit_weights(d).intercept == doctest::Approx(std::log(0.75 / 0.25)).epsilon(1e-10));
}

TEST_CASE("fit: matches a brute-force minimization of the penalized loss") {
  Rng rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::VectorXd truth(2);
    truth << 1.5, -0.7;
    const auto d = synthetic_survey({"a", "b"}, truth, 0.1, 40, 2.0, 0.1, rng);
    const auto rep = fit_weights(d);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int i = 0; i < d.rows(); ++i) {
      x.push_back({d.features(i, 0), d.features(i, 1)});
      y.push_back(static_cast<int>(d.satisfied[i]));
    }
    const auto theta = oracle::brute_force_minimize(x, y, 1.0, 2);
    CHECK(std::abs(rep.coefficients[0] - theta[0]) < 1e-3);
    CHECK(std::abs(rep.coefficients[1] - theta[1]) < 1e-3);
    CHECK(std::abs(rep.intercept - theta[2]) < 1e-3);
    CHECK(logistic_nll(d, rep.coefficients, rep.intercept, 1.0) <= oracle::nll(x, y, theta, 1.0) + 1e-9);
  }
}

TEST_CASE("fit: analytic gradient matches central differences") {
  Rng rng(3);
  Eigen::VectorXd truth(3);
  truth << 0.5, -1.0, 2.0;
  const auto d = synthetic_survey({"a", "b", "c"}, truth, -0.3, 30, 1.5, 0.05, rng);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd w = Eigen::VectorXd::Random(3);
    const double b = rng.uniform() - 0.5, lambda = 2.0 * rng.uniform();
    const auto g = logistic_nll_gradient(d, w, b, lambda);
    const double h = 1e-6;
    for (int c = 0; c < 4; ++c) {
      Eigen::VectorXd wp = w, wm = w;
      double bp = b, bm = b;
      if (c < 3) wp[c] += h, wm[c] -= h;
      else bp += h, bm -= h;
      const double fd = (logistic_nll(d, wp, bp, lambda) - logistic_nll(d, wm, bm, lambda)) / (2 * h);
      CHECK(std::abs(fd - g[c]) <= 1e-5 * std::max(1.0, std::abs(g[c])));
    }
  }
}

TEST_CASE("fit: stronger regularization never grows the coefficients") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd truth = 2.0 * Eigen::VectorXd::Random(3);
    const auto d = synthetic_survey({"a", "b", "c"}, truth, 0.0, 50, 2.0, 0.1, rng);
    double prev = INFINITY;
    for (double lambda : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
      FitConfig cfg;
      cfg.l2_lambda = lambda;
      const double n = fit_weights(d, cfg).coefficients.norm();
      CHECK(n <= prev + 1e-9);
      prev = n;
    }
  }
}

TEST_CASE("fit: errors") {
  SurveyData one_class = from_rows({"a"}, {{1}, {2}, {3}}, {1, 1, 1});
  CHECK_THROWS_AS(fit_weights(one_class), FitError);
  SurveyData single = from_rows({"a"}, {{1}}, {1});
  CHECK_THROWS_AS(fit_weights(single), FitError);

  Rng rng(6);
  Eigen::VectorXd truth(2);
  truth << 1, 1;
  const auto d = synthetic_survey({"a", "b"}, truth, 0, 30, 1.0, 0.1, rng);
  FitConfig cfg;
  cfg.max_iterations = 1;
  try {
    fit_weights(d, cfg);
    FAIL("expected non-convergence");
  } catch (const ConvergenceError& e) {
    CHECK(e.gradient_norm() > cfg.tolerance);
  }
}

TEST_CASE("qol: weighted sums") {
  QoLWeights w{{{"park", 0.3}, {"shop", 0.7}}};
  CHECK(qol({"z", {{"park", 0.0}, {"shop", 0.0}}}, w) == 0.0);
  CHECK(qol({"z", {{"park", 0.5}, {"shop", 1.0}}}, w) == doctest::Approx(0.85).epsilon(1e-15));
  CHECK_THROWS_AS(qol({"z", {{"clinic", 1.0}}}, w), DomainError);

  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    QoLWeights rw;
    AccessProfile p1{"z", {}}, p2{"z", {}}, mix{"z", {}};
    const double alpha = 4.0 * rng.uniform() - 2.0;
    double expect = 0.0, e1 = 0.0, e2 = 0.0;
    for (int c = 0; c < 5; ++c) {
      const auto cat = "c" + std::to_string(c);
      rw.weights[cat] = rng.uniform() - 0.5;
      p1.per_capita[cat] = rng.uniform();
      p2.per_capita[cat] = rng.uniform();
      mix.per_capita[cat] = alpha * p1.per_capita[cat] + p2.per_capita[cat];
      expect += rw.weights[cat] * p1.per_capita[cat];
      e1 += rw.weights[cat] * p1.per_capita[cat];
      e2 += rw.weights[cat] * p2.per_capita[cat];
    }
    CHECK(std::abs(qol(p1, rw) - expect) < 1e-12);
    CHECK(std::abs(qol(mix, rw) - (alpha * e1 + e2)) < 1e-12);
  }
}

TEST_CASE("normalized weights ignore positive rescaling") {
  Rng rng(8);
  const std::vector<std::string> cats{"a", "b", "c"};
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd coef = Eigen::VectorXd::Random(3);
    const double k = 0.1 + 10.0 * rng.uniform();
    const auto w1 = normalize_weights(cats, coef), w2 = normalize_weights(cats, k * coef);
    double total = 0.0;
    for (const auto& c : cats) {
      CHECK(w1.weights.at(c) == doctest::Approx(w2.weights.at(c)).epsilon(1e-12));
      total += std::abs(w1.weights.at(c));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(normalize_weights(cats, Eigen::VectorXd::Zero(3)), FitError);
}

TEST_CASE("survey CSV round trip") {
  Rng rng(9);
  Eigen::VectorXd truth(2);
  truth << 1, -1;
  const auto d = synthetic_survey({"park", "shop"}, truth, 0, 25, 1.0, 0.1, rng);
  const auto again = parse_survey_csv(parse_csv(format_survey_csv(d), "survey.csv"));
  CHECK(again.categories == d.categories);
  CHECK(again.features == d.features);
  CHECK(again.satisfied == d.satisfied);
  CHECK_THROWS_AS(parse_survey_csv(parse_csv("satisfied,a\n2,0.5\n", "s.csv")), ParseError);
}

#pragma once

#include <cmath>
#include <vector>

namespace oracle {

// Penalized logistic loss written out row by row; theta = (w..., b).
inline double nll(const std::vector<std::vector<double>>& x, const std::vector<int>& y, const std::vector<double>& theta,
                  double lambda) {
  const std::size_t p = theta.size() - 1;
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double eta = theta[p];
    for (std::size_t c = 0; c < p; ++c) eta += x[i][c] * theta[c];
    f += (eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta))) - y[i] * eta;
  }
  for (std::size_t c = 0; c < p; ++c) f += 0.5 * lambda * theta[c] * theta[c];
  return f;
}

// Cyclic coordinate search with golden-section line minimization.
inline std::vector<double> brute_force_minimize(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                                double lambda, std::size_t features) {
  std::vector<double> theta(features + 1, 0.0);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 5000; ++sweep) {
    double moved = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      auto f = [&](double v) {
        auto t = theta;
        t[k] = v;
        return nll(x, y, t, lambda);
      };
      double lo = theta[k] - 4.0, hi = theta[k] + 4.0;
      double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
      double fa = f(a), fb = f(b);
      while (hi - lo > 1e-11) {
        if (fa < fb) {
          hi = b, b = a, fb = fa;
          a = hi - phi * (hi - lo), fa = f(a);
        } else {
          lo = a, a = b, fa = fb;
          b = lo + phi * (hi - lo), fb = f(b);
        }
      }
      const double v = 0.5 * (lo + hi);
      moved = std::max(moved, std::abs(v - theta[k]));
      theta[k] = v;
    }
    if (moved < 1e-9) break;
  }
  return theta;
}

}  // namespace oracle

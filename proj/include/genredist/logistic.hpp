#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genredist/error.hpp"

namespace genredist::logistic {

// Parameters are packed as [w_0 .. w_{p-1}, bias]. The objective is
//   f = C * sum_i log(1 + exp(-s_i m_i)) + 0.5 * |w|^2,   m_i = x_i.w + bias
// with s_i = +1 for label 1 and -1 for label 0; the bias is unpenalized.
struct Objective {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

inline double sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

// log(1 + exp(-m)) without overflow
inline double log1p_exp_neg(double m) { return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m)); }

inline Objective objective(const Eigen::MatrixXd& X, std::span<const int> y, const Eigen::VectorXd& params, double C) {
  const Eigen::Index p = X.cols();
  const Eigen::VectorXd margins = (X * params.head(p)).array() + params[p];
  Eigen::VectorXd residual(X.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double s = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    loss += log1p_exp_neg(s * margins[i]);
    residual[i] = sigmoid(margins[i]) - (s > 0.0 ? 1.0 : 0.0);
  }
  Objective out;
  out.value = C * loss + 0.5 * params.head(p).squaredNorm();
  out.gradient.resize(p + 1);
  out.gradient.head(p) = C * (X.transpose() * residual) + params.head(p);
  out.gradient[p] = C * residual.sum();
  return out;
}

struct FitOptions {
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 200;
};

struct FitResult {
  Eigen::VectorXd weights;
  double bias = 0.0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  // objective value before the first step and after each accepted step
  std::vector<double> trace;
};

// Truncated-Newton minimization (conjugate gradient on Hessian-vector
// products, Armijo backtracking). Converged when |grad f| <= tolerance.
inline FitResult fit(const Eigen::MatrixXd& X, std::span<const int> y, double C, const FitOptions& options = {},
                     const Eigen::VectorXd* warm_start = nullptr) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n == 0 || static_cast<std::size_t>(n) != y.size()) throw Error("logistic fit: bad training data shape");
  if (!(C > 0.0)) throw Error("logistic fit: regularization constant must be positive");

  Eigen::VectorXd params = warm_start && warm_start->size() == p + 1 ? *warm_start : Eigen::VectorXd::Zero(p + 1);
  FitResult result;
  Objective current = objective(X, y, params, C);
  result.trace.push_back(current.value);

  Eigen::VectorXd curvature(n);
  auto hessian_times = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd xv = (X * v.head(p)).array() + v[p];
    const Eigen::VectorXd weighted = curvature.cwiseProduct(xv);
    Eigen::VectorXd out(p + 1);
    out.head(p) = X.transpose() * weighted + v.head(p);
    out[p] = weighted.sum();
    return out;
  };

  for (std::size_t iter = 0;; ++iter) {
    const double gnorm = current.gradient.norm();
    result.gradient_norm = gnorm;
    result.iterations = iter;
    if (gnorm <= options.gradient_tolerance) break;
    if (iter >= options.max_iterations)
      throw Error("logistic fit did not converge: C=" + std::to_string(C) + ", iterations=" +
                  std::to_string(iter) + ", gradient norm=" + std::to_string(gnorm) +
                  ", objective=" + std::to_string(current.value));

    const Eigen::VectorXd margins = (X * params.head(p)).array() + params[p];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = sigmoid(margins[i]);
      curvature[i] = C * s * (1.0 - s);
    }

    // CG on H d = -g
    const double forcing = std::min(0.5, std::sqrt(gnorm));
    Eigen::VectorXd step = Eigen::VectorXd::Zero(p + 1);
    Eigen::VectorXd r = -current.gradient;
    Eigen::VectorXd dir = r;
    double rr = r.squaredNorm();
    const std::size_t cg_limit = static_cast<std::size_t>(2 * (p + 1));
    for (std::size_t k = 0; k < cg_limit && std::sqrt(rr) > forcing * gnorm; ++k) {
      const Eigen::VectorXd hd = hessian_times(dir);
      const double dhd = dir.dot(hd);
      if (dhd <= 0.0) break;
      const double a = rr / dhd;
      step += a * dir;
      r -= a * hd;
      const double rr_next = r.squaredNorm();
      dir = r + (rr_next / rr) * dir;
      rr = rr_next;
    }
    if (step.squaredNorm() == 0.0) step = -current.gradient;

    const double slope = current.gradient.dot(step);
    double t = 1.0;
    bool accepted = false;
    Objective trial;
    for (int backtrack = 0; backtrack < 60; ++backtrack, t *= 0.5) {
      trial = objective(X, y, params + t * step, C);
      if (trial.value <= current.value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // At this scale the decrease is below the objective's rounding error;
      // take the Newton step if it still shrinks the gradient.
      trial = objective(X, y, params + step, C);
      if (trial.gradient.norm() >= gnorm || trial.value > current.value * (1.0 + 1e-14) + 1e-300)
        throw Error("logistic fit: line search failed at gradient norm " + std::to_string(gnorm) +
                    " (C=" + std::to_string(C) + ")");
      t = 1.0;
    }
    params += t * step;
    current = std::move(trial);
    result.trace.push_back(current.value);
  }
  result.weights = params.head(p);
  result.bias = params[p];
  return result;
}

}  // namespace genredist::logistic

#include <gtest/gtest.h>

#include <cmath>

#include "genredist/logistic.hpp"
#include "genredist/random.hpp"

using namespace genredist;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  std::vector<int> y;
};

Problem random_problem(Rng& rng, Eigen::Index n, Eigen::Index p) {
  Problem pr{Eigen::MatrixXd(n, p), std::vector<int>(static_cast<std::size_t>(n))};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) pr.X(i, j) = rng.normal();
    pr.y[static_cast<std::size_t>(i)] = rng.bernoulli(0.5) ? 1 : 0;
  }
  return pr;
}

}  // namespace

TEST(LogisticObjective, GradientMatchesCentralDifferences) {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(5 + rng.index(20));
    const auto p = static_cast<Eigen::Index>(1 + rng.index(6));
    const auto pr = random_problem(rng, n, p);
    Eigen::VectorXd w(p + 1);
    for (Eigen::Index j = 0; j <= p; ++j) w[j] = rng.normal();
    const double C = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    const auto obj = logistic::objective(pr.X, pr.y, w, C);
    Eigen::VectorXd numeric(p + 1);
    for (Eigen::Index j = 0; j <= p; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(w[j]));
      Eigen::VectorXd up = w, down = w;
      up[j] += h;
      down[j] -= h;
      numeric[j] = (logistic::objective(pr.X, pr.y, up, C).value - logistic::objective(pr.X, pr.y, down, C).value) /
                   (2.0 * h);
    }
    const double rel = (numeric - obj.gradient).norm() / std::max(1e-12, obj.gradient.norm());
    EXPECT_LT(rel, 1e-5) << "trial " << trial;
  }
}

TEST(LogisticObjective, StableForHugeMargins) {
  Eigen::MatrixXd X(2, 1);
  X << 1000.0, -1000.0;
  const std::vector<int> y = {0, 1};
  Eigen::VectorXd w(2);
  w << 5.0, 0.0;
  const auto obj = logistic::objective(X, y, w, 1.0);
  EXPECT_TRUE(std::isfinite(obj.value));
  EXPECT_NEAR(obj.value, 2 * 5000.0 + 12.5, 1e-6);
  EXPECT_TRUE(obj.gradient.allFinite());
}

TEST(LogisticFit, ConvergesAndDecreasesMonotonically) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pr = random_problem(rng, 60, 8);
    const auto r = logistic::fit(pr.X, pr.y, 1.0);
    EXPECT_LE(r.gradient_norm, 1e-6);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  }
}

TEST(LogisticFit, WarmStartReachesSameOptimum) {
  Rng rng(8);
  const auto pr = random_problem(rng, 80, 5);
  const auto cold = logistic::fit(pr.X, pr.y, 0.1);
  Eigen::VectorXd start(6);
  start.head(5) = cold.weights;
  start[5] = cold.bias;
  const auto warm = logistic::fit(pr.X, pr.y, 10.0, {}, &start);
  const auto fresh = logistic::fit(pr.X, pr.y, 10.0);
  EXPECT_LT((warm.weights - fresh.weights).norm(), 1e-5);
}

TEST(LogisticFit, SeparableDataStaysBounded) {
  Eigen::MatrixXd X(4, 1);
  X << -2, -1, 1, 2;
  const std::vector<int> y = {0, 0, 1, 1};
  const auto r = logistic::fit(X, y, 10.0);
  EXPECT_GT(r.weights[0], 0.0);
  EXPECT_TRUE(std::isfinite(r.weights[0]));
}

TEST(LogisticFit, RejectsBadInput) {
  Eigen::MatrixXd X(2, 1);
  X << 1, 2;
  const std::vector<int> y = {0, 1};
  EXPECT_THROW(logistic::fit(X, y, 0.0), Error);
  const std::vector<int> short_y = {1};
  EXPECT_THROW(logistic::fit(X, short_y, 1.0), Error);
}

#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "occkit/error.hpp"
#include "occkit/gmm.hpp"

using namespace occkit;

namespace {

std::vector<Vec3> two_clusters(std::uint64_t seed, int n, const Vec3& a, const Vec3& b, double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i) {
    const Vec3& m = (i % 2 == 0) ? a : b;
    out.push_back(m + Vec3(g(rng), g(rng), g(rng)));
  }
  return out;
}

// Straight density evaluation, independent of the fitter.
double mixture_log_likelihood(const GmmModel& m, const std::vector<Vec3>& xs) {
  double ll = 0.0;
  for (const auto& x : xs) {
    double p = 0.0;
    for (const auto& c : m.components) {
      const Vec3 d = x - c.mean;
      const double q = d.dot(c.covariance.inverse() * d);
      p += c.weight * std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * M_PI, 3) * c.covariance.determinant());
    }
    ll += std::log(p);
  }
  return ll;
}

}  // namespace

TEST_CASE("identical samples collapse to one floored component") {
  const std::vector<Vec3> xs(20, Vec3(4.5, 1.9, 1.6));
  const GmmModel m = fit_gmm(xs, 4);
  REQUIRE(m.k() == 1);
  CHECK((m.components[0].mean - xs[0]).norm() < 1e-12);
  CHECK((m.components[0].covariance - kCovarianceFloor * Mat3::Identity()).norm() < 1e-15);
  CHECK(m.components[0].weight == doctest::Approx(1.0));
}

TEST_CASE("two separated clusters are recovered") {
  const Vec3 a(4.0, 1.8, 1.5), b(8.0, 1.8, 1.5);
  const auto xs = two_clusters(7, 500, a, b, 0.1);
  std::vector<EmRun> runs;
  const GmmModel m = fit_gmm(xs, 4, {}, &runs);
  REQUIRE(m.k() == 2);
  const auto& c0 = m.components[0].mean.x() < m.components[1].mean.x() ? m.components[0] : m.components[1];
  const auto& c1 = &c0 == &m.components[0] ? m.components[1] : m.components[0];
  CHECK((c0.mean - a).norm() < 0.05);
  CHECK((c1.mean - b).norm() < 0.05);
  CHECK(c0.weight == doctest::Approx(0.5).epsilon(0.02));
  // BIC picked the smallest.
  REQUIRE(runs.size() == 4);
  for (const auto& r : runs) CHECK(r.bic >= runs[1].bic);
  // Stored log-likelihood agrees with a direct evaluation of the final model.
  CHECK(runs[1].log_likelihood.back() == doctest::Approx(mixture_log_likelihood(runs[1].model, xs)).epsilon(1e-6));
}

TEST_CASE("EM log-likelihood never decreases") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> u(3.0, 10.0);
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    const auto xs = two_clusters(rng(), 200, a, b, 0.3 + 0.2 * (trial % 3));
    for (int k = 1; k <= 4; ++k) {
      EmOptions opt;
      opt.seed = static_cast<std::uint64_t>(trial);
      const EmRun run = fit_gmm_fixed(xs, k, opt);
      for (std::size_t i = 1; i < run.log_likelihood.size(); ++i) {
        const double prev = run.log_likelihood[i - 1];
        CHECK(run.log_likelihood[i] >= prev - 1e-9 * std::abs(prev));
      }
      CHECK_NOTHROW(run.model.validate());
    }
  }
}

TEST_CASE("single component is the sample mean and ML covariance") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec3> xs;
  for (int i = 0; i < 300; ++i) xs.emplace_back(4 + 0.5 * g(rng), 2 + 0.2 * g(rng) + 0.1 * g(rng), 1.5 + 0.1 * g(rng));
  Vec3 mean = Vec3::Zero();
  for (const auto& x : xs) mean += x;
  mean /= 300.0;
  Mat3 cov = Mat3::Zero();
  for (const auto& x : xs) cov += (x - mean) * (x - mean).transpose();
  cov /= 300.0;
  const EmRun run = fit_gmm_fixed(xs, 1);
  CHECK((run.model.components[0].mean - mean).norm() < 1e-9);
  CHECK((run.model.components[0].covariance - cov).norm() < 1e-9);
}

TEST_CASE("translating the data translates the means") {
  const auto xs = two_clusters(3, 300, {4, 2, 1.5}, {7, 2.5, 2}, 0.2);
  const Vec3 shift(1.0, -0.5, 2.0);
  std::vector<Vec3> ys;
  for (const auto& x : xs) ys.push_back(x + shift);
  const GmmModel a = fit_gmm(xs, 3), b = fit_gmm(ys, 3);
  REQUIRE(a.k() == b.k());
  for (int k = 0; k < a.k(); ++k) {
    CHECK((a.components[k].mean + shift - b.components[k].mean).norm() < 1e-6);
    CHECK((a.components[k].covariance - b.components[k].covariance).norm() < 1e-6);
  }
}

TEST_CASE("fitting is deterministic for a seed") {
  const auto xs = two_clusters(9, 200, {4, 2, 1.5}, {9, 3, 3}, 0.4);
  EmOptions opt;
  opt.seed = 42;
  CHECK(fit_gmm(xs, 3, opt) == fit_gmm(xs, 3, opt));
}

TEST_CASE("insufficient data") {
  CHECK_THROWS_AS(fit_gmm(std::vector<Vec3>{}, 2), Error);
  CHECK_THROWS_AS(fit_gmm(std::vector<Vec3>{Vec3(1, 1, 1)}, 2), Error);
  try {
    fit_gmm(std::vector<Vec3>{Vec3(1, 1, 1)}, 2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientData);
  }
  CHECK_THROWS_AS(fit_gmm_fixed(std::vector<Vec3>{Vec3(1, 1, 1), Vec3(2, 2, 2)}, 3), Error);
}

TEST_CASE("dimension probability") {
  GmmModel m;
  m.category = 1;
  const double sigma = 0.3;
  m.components.push_back({1.0, Vec3(4.5, 1.9, 1.6), sigma * sigma * Mat3::Identity()});
  CHECK(dim_probability(Vec3(4.5, 1.9, 1.6), m) == 1.0);
  const Vec3 dir = Vec3(1, 2, -1).normalized();
  const Vec3 edge = m.components[0].mean + sigma * std::sqrt(2.0 * std::log(2.0)) * dir;
  CHECK(std::abs(dim_probability(edge, m) - 0.5) < 1e-9);
  CHECK(dim_probability(m.components[0].mean + 1e3 * dir, m) < 1e-300);
  CHECK(is_plausible(0.5));
  CHECK_FALSE(is_plausible(0.4999));

  SUBCASE("max over components") {
    m.components[0].weight = 0.1;
    m.components.push_back({0.9, Vec3(10, 3, 3), Mat3::Identity()});
    CHECK(dim_probability(Vec3(4.5, 1.9, 1.6), m) == 1.0);
    CHECK(dim_probability(Vec3(10, 3, 3), m) == 1.0);
    const Vec3 x(9, 3, 3);
    CHECK(dim_probability(x, m) == doctest::Approx(std::exp(-0.5)));
  }
  SUBCASE("mahalanobis against a direct inverse") {
    GmmComponent c{1.0, Vec3(1, 2, 3), Mat3::Zero()};
    c.covariance << 2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 0.5;
    const Vec3 x(0.2, 2.5, 4.0);
    CHECK(mahalanobis_squared(x, c) == doctest::Approx((x - c.mean).dot(c.covariance.inverse() * (x - c.mean))).epsilon(1e-12));
  }
}

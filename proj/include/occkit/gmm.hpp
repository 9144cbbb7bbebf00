#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occkit/pose.hpp"
#include "occkit/taxonomy.hpp"

namespace occkit {

struct GmmComponent {
  double weight = 1.0;
  Vec3 mean = Vec3::Zero();  // <l, w, h> meters
  Mat3 covariance = Mat3::Identity();
  bool operator==(const GmmComponent&) const = default;
};

struct GmmModel {
  ClassId category = 0;
  std::vector<GmmComponent> components;

  int k() const { return static_cast<int>(components.size()); }
  // Positive weights summing to 1, SPD covariances.
  void validate() const;
  bool operator==(const GmmModel&) const = default;
};

inline constexpr double kCovarianceFloor = 1e-6;
inline constexpr double kDefaultRho = 0.5;

struct EmOptions {
  int max_iterations = 500;
  double tolerance = 1e-10;  // relative log-likelihood change
  int restarts = 3;
  std::uint64_t seed = 0;
};

struct EmRun {
  GmmModel model;
  std::vector<double> log_likelihood;  // one entry per EM iteration
  double bic = 0.0;
};

// Single EM run with a fixed component count (k-means++ seeding).
EmRun fit_gmm_fixed(std::span<const Vec3> samples, int k, const EmOptions& options = {});

// EM for K = 1..k_max, keeping the lowest BIC. Throws InsufficientData.
GmmModel fit_gmm(std::span<const Vec3> samples, int k_max, const EmOptions& options = {},
                 std::vector<EmRun>* runs = nullptr);

double mahalanobis_squared(const Vec3& x, const GmmComponent& component);

// max_k exp(-d_k^2 / 2): each component density normalised by its mode.
double dim_probability(const Vec3& dims, const GmmModel& model);

inline bool is_plausible(double p, double rho = kDefaultRho) { return p >= rho; }

}  // namespace occkit

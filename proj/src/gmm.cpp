#include "occkit/gmm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "occkit/error.hpp"

namespace occkit {
namespace {

// Symmetrises and clips eigenvalues at the floor: the maximiser of the
// Gaussian likelihood under the constraint Sigma >= floor * I.
Mat3 floor_covariance(const Mat3& c) {
  const Mat3 sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
  Vec3 ev = es.eigenvalues();
  if (ev.minCoeff() >= kCovarianceFloor) return sym;
  for (int i = 0; i < 3; ++i) ev[i] = std::max(ev[i], kCovarianceFloor);
  const Mat3 out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

double log_gaussian(const Vec3& x, const Vec3& mean, const Eigen::LLT<Mat3>& chol, double log_det) {
  const Vec3 d = x - mean;
  const double m2 = d.dot(chol.solve(d));
  return -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + log_det + m2);
}

std::vector<Vec3> kmeanspp_seeds(std::span<const Vec3> samples, int k, std::mt19937_64& rng) {
  std::vector<Vec3> seeds;
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  seeds.push_back(samples[pick(rng)]);
  std::vector<double> d2(samples.size());
  while (static_cast<int>(seeds.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& s : seeds) best = std::min(best, (samples[i] - s).squaredNorm());
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      seeds.push_back(samples[pick(rng)]);
      continue;
    }
    std::discrete_distribution<std::size_t> weighted(d2.begin(), d2.end());
    seeds.push_back(samples[weighted(rng)]);
  }
  return seeds;
}

EmRun run_em(std::span<const Vec3> samples, int k, const EmOptions& opt, std::mt19937_64& rng) {
  const std::size_t n = samples.size();
  Vec3 mean = Vec3::Zero();
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (const auto& s : samples) cov += (s - mean) * (s - mean).transpose();
  cov = floor_covariance(cov / static_cast<double>(n));

  EmRun run;
  for (const auto& seed : kmeanspp_seeds(samples, k, rng)) {
    run.model.components.push_back({1.0 / k, seed, cov});
  }

  std::vector<double> resp(n * k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    // E-step
    std::vector<Eigen::LLT<Mat3>> chol;
    std::vector<double> log_det(k), log_w(k);
    for (int c = 0; c < k; ++c) {
      const auto& comp = run.model.components[c];
      chol.emplace_back(comp.covariance);
      log_det[c] = 2.0 * chol.back().matrixLLT().diagonal().array().log().sum();
      log_w[c] = std::log(comp.weight);
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double v = log_w[c] + log_gaussian(samples[i], run.model.components[c].mean, chol[c], log_det[c]);
        resp[i * k + c] = v;
        mx = std::max(mx, v);
      }
      double sum = 0.0;
      for (int c = 0; c < k; ++c) sum += std::exp(resp[i * k + c] - mx);
      const double lse = mx + std::log(sum);
      ll += lse;
      for (int c = 0; c < k; ++c) resp[i * k + c] = std::exp(resp[i * k + c] - lse);
    }
    run.log_likelihood.push_back(ll);
    if (iter > 0 && std::abs(ll - prev_ll) <= opt.tolerance * std::max(1.0, std::abs(ll))) break;
    prev_ll = ll;

    // M-step
    for (int c = 0; c < k; ++c) {
      double nk = 0.0;
      Vec3 mu = Vec3::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        nk += resp[i * k + c];
        mu += resp[i * k + c] * samples[i];
      }
      auto& comp = run.model.components[c];
      if (nk <= std::numeric_limits<double>::min()) continue;  // starved component keeps its parameters
      mu /= nk;
      Mat3 s = Mat3::Zero();
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d = samples[i] - mu;
        s += resp[i * k + c] * d * d.transpose();
      }
      comp.weight = nk / static_cast<double>(n);
      comp.mean = mu;
      comp.covariance = floor_covariance(s / nk);
    }
    double wsum = 0.0;
    for (const auto& comp : run.model.components) wsum += comp.weight;
    for (auto& comp : run.model.components) comp.weight /= wsum;
  }

  const double params = k * 9.0 + (k - 1);
  run.bic = -2.0 * run.log_likelihood.back() + params * std::log(static_cast<double>(n));
  return run;
}

}  // namespace

void GmmModel::validate() const {
  if (components.empty()) throw Error(ErrorCode::InvariantViolation, "GMM has no components");
  double sum = 0.0;
  for (const auto& c : components) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw Error(ErrorCode::InvariantViolation, "GMM weights must be positive");
    }
    sum += c.weight;
    if (!c.mean.allFinite() || !c.covariance.allFinite()) {
      throw Error(ErrorCode::InvariantViolation, "GMM parameters must be finite");
    }
    if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.covariance.cwiseAbs().maxCoeff())) {
      throw Error(ErrorCode::InvariantViolation, "GMM covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(c.covariance, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-12)) {
      throw Error(ErrorCode::InvariantViolation, "GMM covariance is not positive definite");
    }
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvariantViolation, "GMM weights do not sum to 1");
}

EmRun fit_gmm_fixed(std::span<const Vec3> samples, int k, const EmOptions& options) {
  if (samples.size() < 2) throw Error(ErrorCode::InsufficientData, "GMM fitting needs at least two samples");
  if (k < 1 || static_cast<std::size_t>(k) > samples.size()) {
    throw Error(ErrorCode::InsufficientData, "component count must be in 1..#samples");
  }
  for (const auto& s : samples) {
    if (!s.allFinite() || (s.array() <= 0.0).any()) {
      throw Error(ErrorCode::InvariantViolation, "box dimensions must be positive and finite");
    }
  }
  std::mt19937_64 rng(options.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(k));
  EmRun best;
  bool have = false;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    EmRun run = run_em(samples, k, options, rng);
    if (!have || run.log_likelihood.back() > best.log_likelihood.back()) {
      best = std::move(run);
      have = true;
    }
  }
  return best;
}

GmmModel fit_gmm(std::span<const Vec3> samples, int k_max, const EmOptions& options, std::vector<EmRun>* runs) {
  if (samples.size() < 2) throw Error(ErrorCode::InsufficientData, "GMM fitting needs at least two samples");
  if (k_max < 1) throw Error(ErrorCode::InsufficientData, "k_max must be >= 1");
  const int top = static_cast<int>(std::min<std::size_t>(k_max, samples.size()));
  EmRun best;
  bool have = false;
  for (int k = 1; k <= top; ++k) {
    EmRun run = fit_gmm_fixed(samples, k, options);
    if (runs) runs->push_back(run);
    if (!have || run.bic < best.bic) {
      best = std::move(run);
      have = true;
    }
  }
  GmmModel model = std::move(best.model);
  std::erase_if(model.components, [](const GmmComponent& c) { return !(c.weight > 1e-12); });
  double sum = 0.0;
  for (const auto& c : model.components) sum += c.weight;
  for (auto& c : model.components) c.weight /= sum;
  return model;
}

double mahalanobis_squared(const Vec3& x, const GmmComponent& component) {
  const Eigen::LLT<Mat3> chol(component.covariance);
  const Vec3 d = x - component.mean;
  return d.dot(chol.solve(d));
}

double dim_probability(const Vec3& dims, const GmmModel& model) {
  double best = 0.0;
  for (const auto& c : model.components) best = std::max(best, std::exp(-0.5 * mahalanobis_squared(dims, c)));
  return best;
}

}  // namespace occkit

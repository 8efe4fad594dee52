#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fedban/errors.hpp"
#include "fedban/matrix.hpp"
#include "fedban/rng.hpp"

namespace fedban {

struct EnvConfig {
  int d = 5;                   // action/parameter dimension
  int M = 1;                   // number of agents
  long long T = 1000;          // horizon (trials per agent)
  int K = 10;                  // actions per decision set, K <= d^2
  double L = 1.0;              // action norm bound
  double S = 1.0;              // parameter norm bound
  double sigma = 0.5;          // sub-Gaussian reward-noise proxy
  double B = 1.0;              // reward bound
  double gap = 0.1;            // guaranteed minimum suboptimality gap
  std::uint64_t master_seed = 0;

  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (d < 2) issues.push_back("env.d: must be >= 2");
    if (M < 1) issues.push_back("env.M: must be >= 1");
    if (T < 0) issues.push_back("env.T: must be >= 0");
    if (K < 2) issues.push_back("env.K: must be >= 2");
    if (d >= 2 && K > d * d) issues.push_back("env.K: must satisfy K <= d^2");
    if (!(L > 0.0)) issues.push_back("env.L: must be > 0");
    if (!(S > 0.0)) issues.push_back("env.S: must be > 0");
    if (!(sigma > 0.0)) issues.push_back("env.sigma: must be > 0");
    if (B != 1.0) issues.push_back("env.B: must be 1 (Beta rewards)");
    if (!(gap > 0.0 && gap <= 0.1))
      issues.push_back("env.gap: must lie in (0, 0.1]");
    return issues;
  }
};

struct GroundTruth {
  Vec theta_star;
};

// Flat storage: one allocation, reused across trials by the run loops.
struct DecisionSet {
  int K = 0;
  int d = 0;
  std::vector<double> flat;  // K rows of length d
  int optimal_index = -1;

  std::span<const double> action(int k) const {
    return {flat.data() + std::size_t(k) * d, std::size_t(d)};
  }
  Vec action_copy(int k) const {
    auto a = action(k);
    return Vec(a.begin(), a.end());
  }
};

// theta* uniform on the sphere, then scaled by a uniform radius in [0.9, 1],
// so the inner-product bands below stay reachable with unit-norm actions.
inline GroundTruth gen_theta(const EnvConfig& cfg, Rng& rng) {
  GroundTruth gt;
  gt.theta_star.assign(cfg.d, 0.0);
  double n = 0.0;
  do {
    for (auto& v : gt.theta_star) v = rng.normal();
    n = norm2(gt.theta_star);
  } while (n == 0.0);
  const double radius = 0.9 + 0.1 * rng.uniform();
  for (auto& v : gt.theta_star) v *= radius / n;
  return gt;
}

namespace detail {

// One action with <x, theta*> = c and ||x|| = 1: the theta-aligned part is
// fixed by c, the orthogonal direction is uniform and its magnitude fills
// the norm budget, so every action sits on the unit sphere.
inline void sample_action_with_level(std::span<double> out, const Vec& theta,
                                     double theta_norm_sq, double c,
                                     Rng& rng) {
  const int d = int(out.size());
  const double par_sq = c * c / theta_norm_sq;
  const double orth_mag = std::sqrt(std::max(0.0, 1.0 - par_sq));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    double dp = 0.0, osq = 0.0;
    for (int i = 0; i < d; ++i) out[i] = rng.normal();
    for (int i = 0; i < d; ++i) dp += out[i] * theta[i];
    const double proj = dp / theta_norm_sq;
    for (int i = 0; i < d; ++i) {
      out[i] -= proj * theta[i];
      osq += out[i] * out[i];
    }
    if (osq < 1e-24) continue;  // degenerate orthogonal direction, retry
    const double f = orth_mag / std::sqrt(osq);
    const double par = c / theta_norm_sq;
    for (int i = 0; i < d; ++i) out[i] = par * theta[i] + f * out[i];
    return;
  }
  throw GenerationFailure("decision-set sampler exceeded retry budget");
}

}  // namespace detail

inline void gen_decision_set_into(DecisionSet& ds, const GroundTruth& gt,
                                  const EnvConfig& cfg, Rng& rng) {
  const double tn = norm2(gt.theta_star);
  if (tn < 0.7)
    throw GenerationFailure("||theta*|| < 0.7: target bands unreachable");
  const double tn_sq = tn * tn;
  ds.K = cfg.K;
  ds.d = cfg.d;
  ds.flat.resize(std::size_t(cfg.K) * cfg.d);
  ds.optimal_index = int(rng.below(std::uint64_t(cfg.K)));
  for (int k = 0; k < cfg.K; ++k) {
    const bool optimal = (k == ds.optimal_index);
    const double c = optimal ? rng.uniform(0.7, 0.8) : rng.uniform(0.5, 0.6);
    std::span<double> row{ds.flat.data() + std::size_t(k) * cfg.d,
                          std::size_t(cfg.d)};
    detail::sample_action_with_level(row, gt.theta_star, tn_sq, c, rng);
  }
}

inline DecisionSet gen_decision_set(const GroundTruth& gt,
                                    const EnvConfig& cfg, Rng& rng) {
  DecisionSet ds;
  gen_decision_set_into(ds, gt, cfg, rng);
  return ds;
}

// Beta(mu, 1-mu) reward with mean mu = <x, theta*>.
inline double sample_reward(std::span<const double> x, const GroundTruth& gt,
                            Rng& rng) {
  const double mu = dot(x, gt.theta_star);
  if (!(mu > 0.0) || !(mu < 1.0))
    throw MeanOutOfRange("sample_reward: mean must lie strictly in (0, 1)");
  std::gamma_distribution<double> ga(mu, 1.0);
  std::gamma_distribution<double> gb(1.0 - mu, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double a = ga(rng);
    const double b = gb(rng);
    if (a + b > 0.0) return a / (a + b);
  }
  return mu;
}

inline double regret_by_index(const DecisionSet& ds, int chosen,
                              const GroundTruth& gt) {
  return dot(ds.action(ds.optimal_index), gt.theta_star) -
         dot(ds.action(chosen), gt.theta_star);
}

inline double instant_regret(const Vec& chosen, const DecisionSet& ds,
                             const GroundTruth& gt) {
  for (int k = 0; k < ds.K; ++k) {
    auto a = ds.action(k);
    bool same = true;
    for (int i = 0; i < ds.d && same; ++i) same = (a[i] == chosen[i]);
    if (same) return regret_by_index(ds, k, gt);
  }
  throw ActionNotInSet("instant_regret: chosen action not in decision set");
}

}  // namespace fedban

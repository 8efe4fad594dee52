#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fedban/environment.hpp"
#include "fedban/rng.hpp"

using namespace fedban;

namespace {

EnvConfig small_env() {
  EnvConfig env;
  env.d = 5;
  env.M = 2;
  env.T = 100;
  env.K = 6;
  return env;
}

}  // namespace

TEST_CASE("theta* stays inside the unit ball across many seeds") {
  const EnvConfig env = small_env();
  for (int s = 0; s < 10000; ++s) {
    Rng rng(mix_seed({std::uint64_t(s), 77}));
    const GroundTruth gt = gen_theta(env, rng);
    const double n = norm2(gt.theta_star);
    CHECK(n <= 1.0 + 1e-12);
    CHECK(n >= 0.9 - 1e-12);
  }
}

TEST_CASE("theta* generation is deterministic per seed") {
  const EnvConfig env = small_env();
  Rng a(123), b(123);
  CHECK(gen_theta(env, a).theta_star == gen_theta(env, b).theta_star);
}

TEST_CASE("theta* direction is rotation invariant (octant chi-square)") {
  EnvConfig env = small_env();
  env.d = 3;
  const int n = 10000;
  std::vector<int> counts(8, 0);
  for (int s = 0; s < n; ++s) {
    Rng rng(mix_seed({std::uint64_t(s), 991}));
    const GroundTruth gt = gen_theta(env, rng);
    int oct = 0;
    for (int i = 0; i < 3; ++i)
      if (gt.theta_star[i] > 0) oct |= 1 << i;
    counts[oct] += 1;
  }
  const double expect = n / 8.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // chi-square critical value, 7 dof, 1% level
  CHECK(chi2 < 18.4753);
}

TEST_CASE("decision sets satisfy the band and gap constraints") {
  const EnvConfig env = small_env();
  Rng trng(5);
  const GroundTruth gt = gen_theta(env, trng);
  for (int s = 0; s < 10000; ++s) {
    Rng rng(mix_seed({std::uint64_t(s), 17}));
    const DecisionSet ds = gen_decision_set(gt, env, rng);
    REQUIRE(ds.K == env.K);
    double best_sub = 0.0;
    for (int k = 0; k < ds.K; ++k) {
      const double ip = dot(ds.action(k), gt.theta_star);
      CHECK(norm2(ds.action(k)) <= 1.0 + 1e-9);
      if (k == ds.optimal_index) {
        CHECK(ip >= 0.7 - 1e-9);
        CHECK(ip <= 0.8 + 1e-9);
      } else {
        CHECK(ip >= 0.5 - 1e-9);
        CHECK(ip <= 0.6 + 1e-9);
        best_sub = std::max(best_sub, ip);
      }
    }
    const double opt = dot(ds.action(ds.optimal_index), gt.theta_star);
    CHECK(opt - best_sub >= 0.1 - 1e-9);
    for (int k = 0; k < ds.K; ++k)
      CHECK(dot(ds.action(k), gt.theta_star) <= opt + 1e-12);
  }
}

TEST_CASE("decision set generation rejects an unreachable theta*") {
  const EnvConfig env = small_env();
  GroundTruth tiny;
  tiny.theta_star.assign(env.d, 0.0);
  tiny.theta_star[0] = 0.5;
  Rng rng(1);
  CHECK_THROWS_AS(gen_decision_set(tiny, env, rng), GenerationFailure);
}

TEST_CASE("reward sampling is a Beta with the right mean and range") {
  const EnvConfig env = small_env();
  GroundTruth gt;
  gt.theta_star.assign(env.d, 0.0);
  gt.theta_star[0] = 1.0;
  Vec x(env.d, 0.0);
  x[0] = 0.75;  // mean 0.75
  Rng rng(99);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double y = sample_reward(x, gt, rng);
    CHECK(y >= 0.0);
    CHECK(y <= 1.0);
    sum += y;
  }
  CHECK(sum / n == doctest::Approx(0.75).epsilon(0.015));
}

TEST_CASE("reward sampling rejects a degenerate mean") {
  GroundTruth gt;
  gt.theta_star = {1.0, 0.0};
  Rng rng(3);
  Vec at_one{1.0, 0.0};
  CHECK_THROWS_AS(sample_reward(at_one, gt, rng), MeanOutOfRange);
  Vec at_zero{0.0, 0.0};
  CHECK_THROWS_AS(sample_reward(at_zero, gt, rng), MeanOutOfRange);
}

TEST_CASE("instant regret is zero at the optimum and banded otherwise") {
  const EnvConfig env = small_env();
  Rng trng(5);
  const GroundTruth gt = gen_theta(env, trng);
  Rng rng(6);
  const DecisionSet ds = gen_decision_set(gt, env, rng);
  CHECK(instant_regret(ds.action_copy(ds.optimal_index), ds, gt) == 0.0);
  for (int k = 0; k < ds.K; ++k) {
    if (k == ds.optimal_index) continue;
    const double r = instant_regret(ds.action_copy(k), ds, gt);
    CHECK(r >= 0.1 - 1e-9);
    CHECK(r <= 0.3 + 1e-9);
  }
  Vec outsider(env.d, 0.3);
  CHECK_THROWS_AS(instant_regret(outsider, ds, gt), ActionNotInSet);
}

TEST_CASE("summed regret over a trace matches an independent replay") {
  const EnvConfig env = small_env();
  Rng trng(8);
  const GroundTruth gt = gen_theta(env, trng);
  double collected = 0.0, replayed = 0.0;
  for (int t = 0; t < 500; ++t) {
    Rng rng(mix_seed({std::uint64_t(t), 51}));
    const DecisionSet ds = gen_decision_set(gt, env, rng);
    const int pick = t % env.K;
    collected += regret_by_index(ds, pick, gt);
    double best = -1.0;
    for (int k = 0; k < ds.K; ++k)
      best = std::max(best, dot(ds.action(k), gt.theta_star));
    replayed += best - dot(ds.action(pick), gt.theta_star);
  }
  CHECK(collected == doctest::Approx(replayed).epsilon(1e-12));
}

TEST_CASE("identical seed and indices replay the same set and reward") {
  const EnvConfig env = small_env();
  Rng trng(9);
  const GroundTruth gt = gen_theta(env, trng);
  const std::uint64_t master = 4242;
  for (int agent = 0; agent < 2; ++agent) {
    for (int t = 1; t <= 5; ++t) {
      Rng r1 = make_stream(master, StreamTag::kDecision,
                           std::uint64_t(agent), std::uint64_t(t));
      Rng r2 = make_stream(master, StreamTag::kDecision,
                           std::uint64_t(agent), std::uint64_t(t));
      const DecisionSet a = gen_decision_set(gt, env, r1);
      const DecisionSet b = gen_decision_set(gt, env, r2);
      CHECK(a.flat == b.flat);
      CHECK(a.optimal_index == b.optimal_index);
      CHECK(sample_reward(a.action(0), gt, r1) ==
            sample_reward(b.action(0), gt, r2));
    }
  }
}

TEST_CASE("config validation flags the documented invariants") {
  EnvConfig env = small_env();
  env.K = 26;  // > d^2 = 25
  env.gap = 0.2;
  env.B = 2.0;
  const auto issues = env.validate();
  REQUIRE(issues.size() == 3);
}

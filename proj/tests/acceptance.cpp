// Acceptance suite: one integration check per release criterion, each
// printed as a single PASS/FAIL line. Run with no arguments for the full
// suite or pass criterion numbers to run a subset.

#include <bit>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedban/fedban.hpp"
#include "oracles.hpp"

using namespace fedban;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Elliptical-potential audits collected from criteria 1-3 runs.
struct PotentialAudit {
  double sum;
  double bound;
};
std::vector<PotentialAudit> g_potential;

ProtocolConfig base_private(int d, int M, long long T, double eps) {
  ProtocolConfig cfg;
  cfg.env.d = d;
  cfg.env.M = M;
  cfg.env.T = T;
  cfg.env.K = 10;
  cfg.budget = {eps, 0.1, 0.1};
  cfg.is_private = true;
  cfg.plan = plan_noise(cfg.budget, T, std::nullopt, std::nullopt, cfg.env.L,
                        d, M);
  cfg.D = theorem_default_D(cfg.plan, cfg.env);
  cfg.checkpoint_every = std::max<long long>(T / 100, 1);
  return cfg;
}

// 1. Zero-noise oracle equivalence: with the privatizer noise forced to
// zero and synchronization every round, every agent's regressor matches a
// from-scratch pooled ridge solve at every trial.
Outcome criterion1() {
  ProtocolConfig cfg = base_private(5, 4, 5000, 1.0);
  cfg.zero_noise = true;
  cfg.D = 0.0;
  cfg.audit_elliptical = true;

  const double ridge = cfg.env.M * cfg.plan.psd_shift + cfg.plan.rho_min;
  SymMatrix pooled(5);
  Vec pooled_u(5, 0.0);
  std::vector<std::pair<Vec, double>> trial_obs;
  long long seen_t = 0;
  double max_err = 0.0;

  TrialHook hook = [&](const TrialObs& obs) {
    if (obs.t != seen_t) {
      for (auto& [x, y] : trial_obs) {
        pooled.add_outer(x);
        axpy(y, x, pooled_u);
      }
      trial_obs.clear();
      seen_t = obs.t;
    }
    SymMatrix v = pooled;
    v.add_scaled_identity(ridge);
    const Vec expect = oracle::gauss_solve(v, pooled_u);
    double scale = std::max(1.0, norm2(expect));
    for (int i = 0; i < 5; ++i)
      max_err = std::max(max_err,
                         std::abs(expect[i] - obs.theta_bar[i]) / scale);
    trial_obs.emplace_back(Vec(obs.x.begin(), obs.x.end()), obs.y);
  };

  const RunRecord rec = run_centralized(cfg, 1001, 0, hook);
  g_potential.push_back({rec.meta.elliptic_sum, rec.meta.elliptic_bound});

  Outcome out;
  out.pass = max_err < 1e-8;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "max |theta - oracle| = %.3g (tol 1e-8), T=5000, M=4",
                max_err);
  out.detail = buf;
  return out;
}

// 2. Communication rounds stay below the analytical bound for every run in
// a threshold sweep around the default.
Outcome criterion2() {
  Outcome out;
  out.pass = true;
  long long worst_n = 0;
  double worst_bound = 0.0;
  for (double fac : {1.0, 0.1, 10.0}) {
    ProtocolConfig cfg = base_private(5, 4, 20000, 1.0);
    cfg.D = fac * theorem_default_D(cfg.plan, cfg.env);
    cfg.audit_elliptical = true;
    const double bound = comm_bound(cfg.plan, cfg.env, cfg.D);
    for (int r = 0; r < 5; ++r) {
      const RunRecord rec =
          run_centralized(cfg, mix_seed({2000, std::uint64_t(r)}), r);
      g_potential.push_back({rec.meta.elliptic_sum, rec.meta.elliptic_bound});
      if (double(rec.meta.n_total) > bound) out.pass = false;
      if (rec.meta.n_total > worst_n) {
        worst_n = rec.meta.n_total;
        worst_bound = bound;
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "max observed n = %lld vs bound %.2f over D sweep x 5 seeds",
                worst_n, worst_bound);
  out.detail = buf;
  return out;
}

// 3. The confidence radius covers the estimation error on all but an alpha
// fraction of (checkpoint, agent) pairs across 100 seeded private runs.
Outcome criterion3() {
  ProtocolConfig cfg = base_private(5, 4, 10000, 1.0);
  cfg.checkpoint_every = 100;
  cfg.audit_elliptical = true;
  long long total = 0, violations = 0;
  for (int r = 0; r < 100; ++r) {
    const RunRecord rec =
        run_centralized(cfg, mix_seed({3000, std::uint64_t(r)}), r);
    g_potential.push_back({rec.meta.elliptic_sum, rec.meta.elliptic_bound});
    for (const auto& row : rec.rows) {
      ++total;
      if (row.err_v > row.beta) ++violations;
    }
  }
  const double frac = double(violations) / double(total);
  Outcome out;
  out.pass = frac <= cfg.budget.alpha;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "coverage violations %lld / %lld = %.4f (alpha 0.1)",
                violations, total, frac);
  out.detail = buf;
  return out;
}

// 4. Tree mechanism: exact prefix sums at zero noise, dyadic node counts,
// and per-node noise distribution.
Outcome criterion4() {
  Outcome out;
  out.pass = true;
  std::string why;

  PrivacyBudget budget{1.0, 0.1, 0.1};
  auto plan = plan_noise(budget, 64, 64, std::nullopt, 1.0, 5, 4);
  auto zplan = plan;
  zplan.sigma_n = 0.0;
  NoiseTree tree(zplan, 5, 404);
  Rng rng(405);
  SymMatrix prefix(6);
  StagedBlock staged(5);
  Vec x(5);
  double worst = 0.0;
  for (int i = 0; i < 64; ++i) {
    staged.clear();
    for (int r = 0; r < 3; ++r) {
      for (auto& v : x) v = 0.4 * rng.normal();
      staged.add_observation(x, rng.uniform());
    }
    prefix.add(staged.q);
    tree.insert(staged.q);
    const SymMatrix got = tree.query();
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        worst = std::max(worst, std::abs(got(a, b) - prefix(a, b)));
  }
  if (worst >= 1e-9) {
    out.pass = false;
    why += "prefix mismatch " + std::to_string(worst) + "; ";
  }

  for (long long k = 1; k <= 64; ++k) {
    const auto nodes = NoiseTree::dyadic_nodes(k);
    if (int(nodes.size()) != std::popcount(std::uint64_t(k)) ||
        int(nodes.size()) > plan.m || nodes != oracle::dyadic_decomposition(k)) {
      out.pass = false;
      why += "dyadic nodes wrong at k=" + std::to_string(k) + "; ";
      break;
    }
  }

  std::vector<double> samples;
  samples.reserve(10000);
  for (int s = 0; s < 10000; ++s) {
    const NoiseTree t2(plan, 5, std::uint64_t(s) * 131 + 17);
    samples.push_back(t2.node_noise(2, 1)(0, 1));
  }
  const double dstat = oracle::ks_statistic(samples, plan.sigma_n);
  const double crit = 1.628 / std::sqrt(10000.0);
  if (dstat >= crit) {
    out.pass = false;
    why += "KS stat too large; ";
  }

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "prefix err %.2g, node counts = popcount, KS %.4f < %.4f %s",
                worst, dstat, crit, why.c_str());
  out.detail = buf;
  return out;
}

// 5. Released Gram deviation spectrum lands in [lambda, 3 lambda] at the
// planned confidence level.
Outcome criterion5() {
  const int d = 5;
  PrivacyBudget budget{1.0, 0.1, 0.1};
  const auto plan = plan_noise(budget, 1000, 16, std::nullopt, 1.0, d, 4);
  const int trials = 1000;
  int ok = 0;
  Rng data_rng(505);
  Vec x(d);
  for (int s = 0; s < trials; ++s) {
    NoiseTree tree(plan, d, std::uint64_t(s) + 50000);
    SymMatrix exact(d + 1);
    StagedBlock staged(d);
    for (int i = 0; i < 8; ++i) {
      staged.clear();
      for (int r = 0; r < 3; ++r) {
        for (auto& v : x) v = 0.4 * data_rng.normal();
        staged.add_observation(x, data_rng.uniform());
      }
      exact.add(staged.q);
      tree.insert(staged.q);
    }
    const auto [u_hat, u_vec] = privatize_output(tree, plan, d);
    SymMatrix dev = u_hat;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) dev.add_at(i, j, -exact(i, j));
    const double lo = min_eigenvalue(dev);
    if (lo >= plan.lambda * (1.0 - 1e-6) &&
        lo <= 3.0 * plan.lambda * (1.0 + 1e-6))
      ++ok;
  }
  const double need = trials * (1.0 - budget.alpha / (16.0 * 4.0));
  Outcome out;
  out.pass = double(ok) >= need;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d / %d in [lambda, 3 lambda] (need %.1f)",
                ok, trials, need);
  out.detail = buf;
  return out;
}

ExperimentConfig trend_config(double eps, int repeats, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.mode = "centralized";
  cfg.env.d = 5;
  cfg.env.M = 10;
  cfg.env.T = 100000;
  cfg.env.K = 10;
  cfg.budget = {eps, 0.1, 0.1};
  cfg.is_private = true;
  cfg.d_choice.kind = DChoice::Kind::kTheoremDefault;
  cfg.n_fixed = 16;
  cfg.repeats = repeats;
  cfg.checkpoint_every = 20000;
  cfg.seed = seed;
  return cfg;
}

std::vector<double> per_agent_finals(const std::vector<RunRecord>& records) {
  std::vector<double> finals;
  for (const auto& rec : records) {
    int agents = 0;
    for (const auto& row : rec.rows) agents = std::max(agents, row.agent + 1);
    finals.push_back(rec.meta.final_group_regret / std::max(agents, 1));
  }
  return finals;
}

double pooled_se(const SeriesStat& a, const SeriesStat& b) {
  return std::sqrt(a.stddev * a.stddev / a.count +
                   b.stddev * b.stddev / b.count);
}

// 6. Smaller privacy budgets cost more regret, with gaps that clear one
// pooled standard error.
Outcome criterion6() {
  const int repeats = 20;
  std::map<double, SeriesStat> stats;
  for (double eps : {0.1, 1.0, 10.0}) {
    const auto records = run_experiment(trend_config(eps, repeats, 6006));
    stats[eps] = mean_std(per_agent_finals(records));
  }
  const auto& lo = stats[0.1];
  const auto& mid = stats[1.0];
  const auto& hi = stats[10.0];
  const double gap_a = lo.mean - mid.mean;
  const double gap_b = mid.mean - hi.mean;
  Outcome out;
  out.pass = gap_a > pooled_se(lo, mid) && gap_b > pooled_se(mid, hi);
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "mean regret eps=0.1: %.0f, eps=1: %.0f, eps=10: %.0f; gaps "
                "%.0f>%.0f(se), %.0f>%.0f(se)",
                lo.mean, mid.mean, hi.mean, gap_a, pooled_se(lo, mid), gap_b,
                pooled_se(mid, hi));
  out.detail = buf;
  return out;
}

// 7. More communication means less regret, in private and non-private runs.
Outcome criterion7() {
  const int repeats = 20;
  std::map<std::string, double> means;
  for (bool priv : {true, false}) {
    for (auto kind : {DChoice::Kind::kEveryRound,
                      DChoice::Kind::kTheoremDefault, DChoice::Kind::kNever}) {
      ExperimentConfig cfg = trend_config(1.0, repeats, 7007);
      cfg.is_private = priv;
      cfg.n_fixed.reset();  // one shared worst-case mechanism per curve set
      cfg.d_choice = DChoice{kind, 0.0};
      const auto records = run_experiment(cfg);
      means[cfg.d_choice.label() + (priv ? ":p" : ":np")] =
          mean_std(per_agent_finals(records)).mean;
    }
  }
  const bool priv_ok = means["every_round:p"] <= means["theorem_default:p"] &&
                       means["theorem_default:p"] <= means["never:p"];
  const bool np_ok = means["every_round:np"] <= means["theorem_default:np"] &&
                     means["theorem_default:np"] <= means["never:np"];
  Outcome out;
  out.pass = priv_ok && np_ok;
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "private %.0f <= %.0f <= %.0f; non-private %.0f <= %.0f <= "
                "%.0f",
                means["every_round:p"], means["theorem_default:p"],
                means["never:p"], means["every_round:np"],
                means["theorem_default:np"], means["never:np"]);
  out.detail = buf;
  return out;
}

// 8. Single-agent non-private regret is sublinear: the per-trial rate drops
// by 20% from half to full horizon and stays under half the gap line.
Outcome criterion8() {
  Outcome out;
  out.pass = true;
  double worst_ratio = 0.0, worst_final = 0.0;
  for (int r = 0; r < 5; ++r) {
    ProtocolConfig cfg;
    cfg.env.d = 5;
    cfg.env.M = 1;
    cfg.env.T = 20000;
    cfg.env.K = 10;
    cfg.budget = {1.0, 0.1, 0.1};
    cfg.is_private = false;
    cfg.plan = plan_nonprivate(1.0, 1, cfg.env.T, std::nullopt, std::nullopt);
    cfg.D = 0.0;
    cfg.checkpoint_every = cfg.env.T / 2;
    const RunRecord rec =
        run_centralized(cfg, mix_seed({8008, std::uint64_t(r)}), r);
    double r_half = 0.0, r_full = 0.0;
    for (const auto& row : rec.rows) {
      if (row.t == cfg.env.T / 2) r_half = row.cum_regret;
      if (row.t == cfg.env.T) r_full = row.cum_regret;
    }
    const double rate_ratio =
        (r_full / double(cfg.env.T)) /
        (r_half / double(cfg.env.T / 2));
    worst_ratio = std::max(worst_ratio, rate_ratio);
    worst_final = std::max(worst_final, r_full);
    if (rate_ratio > 0.8 || r_full > 0.5 * cfg.env.gap * double(cfg.env.T))
      out.pass = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "worst rate ratio %.3f (<= 0.8), worst R(T) %.0f (<= 1000), "
                "5 seeds",
                worst_ratio, worst_final);
  out.detail = buf;
  return out;
}

// 9. Decentralized structure: cover size, the 2-gamma synchronization
// window, and parity with the centralized learner on a complete graph.
Outcome criterion9() {
  Outcome out;
  out.pass = true;
  std::string why;

  const Network line = make_network(graph_line(6), 2);
  if (line.cliques.size() != 2) {
    out.pass = false;
    why += "cover size != 2; ";
  }

  long long violations = 0, broadcasts = 0;
  for (int r = 0; r < 10; ++r) {
    ProtocolConfig cfg;
    cfg.env.d = 5;
    cfg.env.M = 6;
    cfg.env.T = 20000;
    cfg.env.K = 10;
    cfg.budget = {1.0, 0.1, 0.1};
    cfg.is_private = true;
    cfg.plan = plan_noise(cfg.budget, cfg.env.T, std::nullopt, 2, cfg.env.L,
                          cfg.env.d, cfg.env.M);
    cfg.D = theorem_default_D(cfg.plan, cfg.env);
    cfg.checkpoint_every = cfg.env.T;
    const RunRecord rec = run_decentralized(
        cfg, line, mix_seed({9009, std::uint64_t(r)}), r);
    violations += rec.meta.two_gamma_violations;
    broadcasts += rec.meta.n_total;
  }
  if (violations != 0) {
    out.pass = false;
    why += "2-gamma violations; ";
  }

  const Network k6 = make_network(graph_complete(6), 1);
  double worst_rel = 0.0;
  for (int r = 0; r < 5; ++r) {
    ProtocolConfig cfg;
    cfg.env.d = 5;
    cfg.env.M = 6;
    cfg.env.T = 20000;
    cfg.env.K = 10;
    cfg.budget = {1.0, 0.1, 0.1};
    cfg.is_private = false;
    cfg.plan = plan_nonprivate(1.0, 6, cfg.env.T, std::nullopt, 1);
    cfg.D = 0.0;
    cfg.checkpoint_every = cfg.env.T;
    const std::uint64_t seed = mix_seed({9119, std::uint64_t(r)});
    const RunRecord dec = run_decentralized(cfg, k6, seed, r);
    const RunRecord cent = run_centralized(cfg, seed, r);
    const double rel = std::abs(dec.meta.final_group_regret -
                                cent.meta.final_group_regret) /
                       cent.meta.final_group_regret;
    worst_rel = std::max(worst_rel, rel);
  }
  if (worst_rel > 0.15) {
    out.pass = false;
    why += "paired regret gap too large; ";
  }

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "cover=%zu, 2g violations=%lld over %lld broadcasts, paired "
                "gap %.2g%% %s",
                line.cliques.size(), violations, broadcasts,
                100.0 * worst_rel, why.c_str());
  out.detail = buf;
  return out;
}

// 10. Elliptical potential audit over every criterion 1-3 run.
Outcome criterion10() {
  Outcome out;
  out.pass = !g_potential.empty();
  double worst_margin = 0.0;
  for (const auto& p : g_potential) {
    if (p.sum > p.bound) out.pass = false;
    worst_margin = std::max(worst_margin, p.sum / p.bound);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%zu runs audited, max potential/bound = %.3f (<= 1)",
                g_potential.size(), worst_margin);
  out.detail = buf;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using CriterionFn = Outcome (*)();
  const std::pair<const char*, CriterionFn> criteria[] = {
      {"zero-noise oracle equivalence", criterion1},
      {"communication bound", criterion2},
      {"beta coverage", criterion3},
      {"tree mechanism", criterion4},
      {"PSD/spectral bounds", criterion5},
      {"privacy-budget trend", criterion6},
      {"communication trend", criterion7},
      {"sublinearity sanity", criterion8},
      {"decentralized structure", criterion9},
      {"elliptical potential", criterion10},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (int i = 0; i < 10; ++i) {
    if (!selected.empty() && !selected.count(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    const Outcome out = criteria[i].second();
    std::printf("%s criterion %2d: %s — %s [%.1fs]\n",
                out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                out.detail.c_str(), elapsed_s(start));
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "fedban/environment.hpp"
#include "fedban/errors.hpp"
#include "fedban/matrix.hpp"
#include "fedban/privatizer.hpp"
#include "fedban/record.hpp"
#include "fedban/rng.hpp"

namespace fedban {

struct ProtocolConfig {
  EnvConfig env;
  PrivacyBudget budget;
  NoisePlan plan;
  double D = 0.0;  // log-det sync threshold; 0 = every round, inf = never
  bool is_private = true;
  bool zero_noise = false;     // keep shifts/bounds, drop the sampled noise
  long long checkpoint_every = 0;  // 0 means final checkpoint only

  // Audits are cheap bookkeeping except the elliptical potential, which adds
  // a factorization per agent-trial; enable it on test-scale runs.
  bool audit_elliptical = false;
  bool audit_psd = false;
};

// Per-agent state: synced group parameters (S, s), local deltas since the
// last synchronization (U, u_bar), the staged block feeding the privatizer,
// and the elapsed-trials counter driving the sync threshold.
struct AgentState {
  SymMatrix S;
  Vec s;
  SymMatrix U;
  Vec u_bar;
  StagedBlock staged;
  long long dt = 0;
  NoiseTree tree;
  double logdet_s = 0.0;  // cached; refreshed at init and at each sync
  // trace accounting
  double cum_regret = 0.0;
  long long sync_count = 0;
  long long messages_sent = 0;
  double last_beta = 0.0;
};

struct ComposedParams {
  SymMatrix V;
  Vec u_tilde;
  Vec theta_bar;
  Cholesky chol;
  double beta = 0.0;
};

inline AgentState init_agent(const ProtocolConfig& cfg, std::uint64_t tree_seed) {
  AgentState st;
  const int d = cfg.env.d;
  NoisePlan plan = cfg.plan;
  if (cfg.zero_noise) plan.sigma_n = 0.0;
  st.S = SymMatrix::identity(d, cfg.env.M * cfg.plan.rho_min);
  st.s.assign(d, 0.0);
  st.U = SymMatrix(d);
  st.u_bar.assign(d, 0.0);
  st.staged = StagedBlock(d);
  st.tree = NoiseTree(plan, d, tree_seed);
  st.logdet_s = logdet(st.S);
  return st;
}

inline void compose_core(const SymMatrix& S, const Vec& s, const SymMatrix& U,
                         const Vec& u_bar, ComposedParams& cp) {
  cp.V = S;
  cp.V.add(U);
  cp.u_tilde = s;
  for (std::size_t i = 0; i < cp.u_tilde.size(); ++i)
    cp.u_tilde[i] += u_bar[i];
  if (!cp.chol.factor(cp.V))
    throw NotPositiveDefinite("compose: V = S + U is not positive definite");
  cp.chol.solve(cp.u_tilde, cp.theta_bar);
}

inline void compose_into(const AgentState& st, ComposedParams& cp) {
  compose_core(st.S, st.s, st.U, st.u_bar, cp);
}

inline ComposedParams compose(const AgentState& st) {
  ComposedParams cp;
  compose_into(st, cp);
  return cp;
}

// Confidence radius (noise term + regularizer term + reward-perturbation
// term); in the non-private plan this degrades to the usual OFUL radius.
inline double compute_beta(const ComposedParams& cp,
                           const ProtocolConfig& cfg) {
  const auto& env = cfg.env;
  const auto& plan = cfg.plan;
  const double under =
      2.0 * std::log(2.0 / cfg.budget.alpha) + cp.chol.log_det() -
      env.d * std::log(env.M * plan.rho_min);
  return env.sigma * std::sqrt(std::max(under, 0.0)) +
         env.M * env.S * std::sqrt(plan.rho_max) + env.M * plan.kappa;
}

// Optimistic action: argmax <x, theta_bar> + beta * ||x||_{V^-1};
// ties break toward the lowest action index.
inline int select_action(const ComposedParams& cp, const DecisionSet& ds) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < ds.K; ++k) {
    auto x = ds.action(k);
    const double score =
        dot(x, cp.theta_bar) + cp.beta * std::sqrt(cp.chol.inv_quad(x));
    if (score > best_score) {
      best_score = score;
      best = k;
    }
  }
  return best;
}

inline void local_update(AgentState& st, std::span<const double> x, double y,
                         const EnvConfig& env) {
  if (std::abs(y) > env.B + 1e-9)
    throw BoundViolation("local_update: |y| exceeds reward bound");
  if (norm2(x) > env.L + 1e-9)
    throw BoundViolation("local_update: ||x|| exceeds action bound");
  st.U.add_outer(x);
  axpy(y, x, st.u_bar);
  st.staged.add_observation(x, y);
}

// True iff logdet(V + x x^T + M (rho_max - rho_min) I) - logdet(S) has grown
// past D / max(dt, 1).
inline bool sync_check(const AgentState& st, const ComposedParams& cp,
                       std::span<const double> x, const ProtocolConfig& cfg) {
  if (cfg.D == 0.0) return true;
  if (std::isinf(cfg.D)) return false;
  SymMatrix w = cp.V;
  w.add_outer(x);
  w.add_scaled_identity(cfg.env.M * (cfg.plan.rho_max - cfg.plan.rho_min));
  Cholesky c;
  if (!c.factor(w))
    throw NotPositiveDefinite("sync_check: grown Gram not positive definite");
  const double gap = c.log_det() - st.logdet_s;
  return gap >= cfg.D / double(std::max<long long>(st.dt, 1));
}

inline bool sync_check(const AgentState& st, std::span<const double> x,
                       const ProtocolConfig& cfg) {
  ComposedParams cp;
  compose_into(st, cp);
  return sync_check(st, cp, x, cfg);
}

// One synchronization round: every agent feeds its staged block through the
// privatizer, the controller sums the releases in fixed agent order, and all
// agents adopt the sums. Local deltas reset to the rho_min ridge.
inline void synchronize_all(std::vector<AgentState>& agents,
                            const ProtocolConfig& cfg) {
  const int d = cfg.env.d;
  SymMatrix s_new(d);
  Vec s_vec(d, 0.0);
  for (auto& ag : agents) {
    ag.tree.insert(ag.staged.q);
    auto [u_hat, u_vec] = privatize_output(ag.tree, cfg.plan, d);
    s_new.add(u_hat);
    for (int i = 0; i < d; ++i) s_vec[i] += u_vec[i];
    ag.staged.clear();
  }
  Cholesky c;
  if (!c.factor(s_new))
    throw NotPositiveDefinite("synchronize: summed release not PD");
  const double ld = c.log_det();
  for (auto& ag : agents) {
    ag.S = s_new;
    ag.s = s_vec;
    ag.U = SymMatrix::identity(d, cfg.plan.rho_min);
    ag.u_bar.assign(d, 0.0);
    ag.dt = 0;
    ag.logdet_s = ld;
    ag.sync_count += 1;
    ag.messages_sent += 2;  // release up to the controller, sums back down
  }
}

// Default threshold from the regret analysis, and the matching bound on the
// number of communication rounds it implies.
inline double comm_log_term(const NoisePlan& plan, const EnvConfig& env) {
  return std::log(plan.rho_max / plan.rho_min +
                  double(env.T) * env.L * env.L / (env.d * plan.rho_min));
}

inline double theorem_default_D(const NoisePlan& plan, const EnvConfig& env) {
  return 2.0 * double(env.T) * env.d / (comm_log_term(plan, env) + 1.0);
}

inline double comm_bound(const NoisePlan& plan, const EnvConfig& env,
                         double D) {
  if (D == 0.0) return std::numeric_limits<double>::infinity();
  if (std::isinf(D)) return 4.0;
  return 2.0 * std::sqrt(double(env.d) * double(env.T) / D *
                         comm_log_term(plan, env)) +
         4.0;
}

// Per-trial observation passed to an optional hook (test instrumentation).
struct TrialObs {
  long long t;
  int agent;
  const Vec& theta_bar;
  const SymMatrix& V;
  double beta;
  std::span<const double> x;
  double y;
  double regret;
};

using TrialHook = std::function<void(const TrialObs&)>;

inline RunRecord run_centralized(const ProtocolConfig& cfg,
                                 std::uint64_t run_seed, int run_id,
                                 const TrialHook& hook = {}) {
  const auto& env = cfg.env;
  const int d = env.d;
  const int M = env.M;

  RunRecord rec;
  rec.meta.run_id = run_id;
  rec.meta.seed = run_seed;
  rec.meta.mode = "centralized";
  rec.meta.is_private = cfg.is_private;
  rec.meta.epsilon = cfg.budget.epsilon;
  rec.meta.d = d;

  Rng theta_rng = make_stream(run_seed, StreamTag::kTheta);
  const GroundTruth gt = gen_theta(env, theta_rng);

  std::vector<AgentState> agents;
  agents.reserve(M);
  for (int i = 0; i < M; ++i)
    agents.push_back(
        init_agent(cfg, mix_seed({run_seed, std::uint64_t(StreamTag::kTree),
                                  std::uint64_t(i)})));

  // Single-pot elliptical potential audit over the interleaved action stream.
  SymMatrix pot;
  Cholesky pot_chol;
  double pot_sum = 0.0;
  if (cfg.audit_elliptical) pot = SymMatrix::identity(d, M * cfg.plan.rho_min);
  if (cfg.audit_psd) rec.meta.psd_violations = 0;

  const long long ce = cfg.checkpoint_every > 0 ? cfg.checkpoint_every : env.T;
  long long n_total = 0;
  ComposedParams cp;
  DecisionSet ds;
  Vec diff(d);

  for (long long t = 1; t <= env.T; ++t) {
    bool fire = false;
    for (int i = 0; i < M; ++i) {
      AgentState& ag = agents[i];
      compose_into(ag, cp);
      cp.beta = compute_beta(cp, cfg);
      ag.last_beta = cp.beta;
      if (cfg.audit_psd &&
          min_eigenvalue(cp.V) < M * cfg.plan.rho_min * (1.0 - 1e-10))
        rec.meta.psd_violations += 1;

      Rng env_rng = make_stream(run_seed, StreamTag::kDecision,
                                std::uint64_t(i), std::uint64_t(t));
      gen_decision_set_into(ds, gt, env, env_rng);
      const int k = select_action(cp, ds);
      auto x = ds.action(k);
      const double y = sample_reward(x, gt, env_rng);
      const double r = regret_by_index(ds, k, gt);
      ag.cum_regret += r;

      if (cfg.audit_elliptical) {
        if (!pot_chol.factor(pot))
          throw NotPositiveDefinite("elliptical audit: pot not PD");
        pot_sum += pot_chol.inv_quad(x);
        pot.add_outer(x);
      }
      if (hook) hook(TrialObs{t, i, cp.theta_bar, cp.V, cp.beta, x, y, r});

      local_update(ag, x, y, env);
      if (sync_check(ag, cp, x, cfg)) fire = true;
    }

    if (fire) {
      synchronize_all(agents, cfg);
      ++n_total;
    } else {
      for (auto& ag : agents) ++ag.dt;
    }

    if (t % ce == 0 || t == env.T) {
      for (int i = 0; i < M; ++i) {
        AgentState& ag = agents[i];
        compose_into(ag, cp);
        for (int j = 0; j < d; ++j)
          diff[j] = cp.theta_bar[j] - gt.theta_star[j];
        CheckpointRow row;
        row.run_id = run_id;
        row.t = t;
        row.agent = i;
        row.cum_regret = ag.cum_regret;
        row.sync_count = ag.sync_count;
        row.messages_sent = ag.messages_sent;
        row.beta = ag.last_beta;
        row.err_v = ellipsoid_norm(diff, cp.V);
        rec.rows.push_back(row);
      }
    }
  }

  rec.meta.n_total = n_total;
  for (const auto& ag : agents) {
    rec.meta.final_group_regret += ag.cum_regret;
    rec.meta.total_messages += ag.messages_sent;
  }
  if (cfg.audit_elliptical) {
    rec.meta.elliptic_sum = pot_sum;
    rec.meta.elliptic_bound =
        2.0 * d *
        std::log(1.0 + double(env.T) * env.L * env.L / (d * cfg.plan.rho_min));
  }
  return rec;
}

}  // namespace fedban

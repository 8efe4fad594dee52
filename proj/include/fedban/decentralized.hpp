#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "fedban/centralized.hpp"
#include "fedban/network.hpp"

namespace fedban {

struct Message {
  enum class Kind { kSyncRequest, kParamBroadcast };
  Kind kind = Kind::kSyncRequest;
  int origin = 0;
  int g = 0;
  long long t_sent = 0;
  SymMatrix u_hat;  // ParamBroadcast payload
  Vec u_vec;
};

struct Delivery {
  int agent = 0;
  Message msg;
};

// Synchronous discrete-time flood simulator. A message broadcast during
// trial t is forwarded one hop per trial, so an agent at graph distance k
// from the origin receives it at t + k iff k <= gamma, and each agent
// receives a given message at most once. The origin's own release is
// delivered back to it one trial later, which keeps the application schedule
// uniform across a clique.
class NetworkSim {
 public:
  explicit NetworkSim(const Network& net)
      : net_(&net), mark_(net.M, 0), per_origin_tx_(net.M, 0) {}

  void broadcast(Message msg, long long t) {
    InFlight f;
    f.msg = std::move(msg);
    f.frontier = {f.msg.origin};
    f.visited.assign(net_->M, 0);
    f.visited[f.msg.origin] = 1;
    f.hops_remaining = net_->gamma;
    f.self_due = t + 1;
    in_flight_.push_back(std::move(f));
  }

  std::vector<Delivery> step(long long t) {
    std::vector<Delivery> out;
    for (auto& f : in_flight_) {
      if (f.self_due == t) {
        out.push_back({f.msg.origin, f.msg});
        f.self_due = -1;
      }
      if (f.hops_remaining <= 0 || f.frontier.empty()) continue;
      std::vector<int> next;
      for (int v : f.frontier) {
        for (int u : net_->neighbors[v]) {
          if (f.visited[u]) continue;
          ++transmissions_;
          ++per_origin_tx_[f.msg.origin];
          if (!mark_[u]) {
            mark_[u] = 1;
            next.push_back(u);
          }
        }
      }
      for (int u : next) {
        mark_[u] = 0;
        f.visited[u] = 1;
        out.push_back({u, f.msg});
      }
      f.frontier = std::move(next);
      --f.hops_remaining;
    }
    std::erase_if(in_flight_, [](const InFlight& f) {
      return f.self_due < 0 && (f.hops_remaining <= 0 || f.frontier.empty());
    });
    std::stable_sort(
        out.begin(), out.end(), [](const Delivery& a, const Delivery& b) {
          if (a.msg.t_sent != b.msg.t_sent) return a.msg.t_sent < b.msg.t_sent;
          if (a.msg.origin != b.msg.origin) return a.msg.origin < b.msg.origin;
          if (a.msg.g != b.msg.g) return a.msg.g < b.msg.g;
          if (a.msg.kind != b.msg.kind)
            return int(a.msg.kind) < int(b.msg.kind);
          return a.agent < b.agent;
        });
    return out;
  }

  long long transmissions() const { return transmissions_; }
  long long transmissions_from(int origin) const {
    return per_origin_tx_[origin];
  }

 private:
  struct InFlight {
    Message msg;
    std::vector<int> frontier;
    std::vector<std::uint8_t> visited;
    int hops_remaining = 0;
    long long self_due = -1;
  };

  const Network* net_;
  std::vector<InFlight> in_flight_;
  std::vector<std::uint8_t> mark_;
  std::vector<long long> per_origin_tx_;
  long long transmissions_ = 0;
};

// One of the gamma round-robin parameter sets an agent maintains. Group
// state (S_g, s_g) is kept as per-peer contributions and re-summed in fixed
// peer order whenever one changes, so clique members that have applied the
// same releases hold bit-identical sums.
struct GSlice {
  SymMatrix S;
  Vec s;
  SymMatrix U;
  Vec u_bar;
  StagedBlock staged;
  long long dt = 0;
  NoiseTree tree;
  double logdet_s = 0.0;
  long long last_response_trial = -1;
  bool responded_this_trial = false;
  std::vector<SymMatrix> contrib_mat;
  std::vector<Vec> contrib_vec;
};

struct DecAgent {
  std::vector<GSlice> slices;
  double cum_regret = 0.0;
  long long sync_count = 0;
  double last_beta = 0.0;
};

// Test instrumentation: every slice mutation, delivery and release.
struct DecAuditLog {
  struct Response {
    int agent;
    int g;
    long long trial;
    long long included_through;  // g-trials up to here are in the release
  };
  struct DeliveryEvent {
    int origin;
    int receiver;
    int g;
    long long t_sent;
    long long t_recv;
    int kind;
  };
  struct SliceWrite {
    int agent;
    int g;
    long long trial;
    int reason;  // 0 = local action, 1 = message apply, 2 = response reset
  };
  struct Apply {
    int receiver;
    int origin;
    int g;
    long long trial;
  };
  std::vector<Response> responses;
  std::vector<DeliveryEvent> deliveries;
  std::vector<SliceWrite> writes;
  std::vector<Apply> applies;
};

inline bool dec_sync_check(const GSlice& sl, const ComposedParams& cp,
                           std::span<const double> x,
                           const ProtocolConfig& cfg) {
  if (cfg.D == 0.0) return true;
  if (std::isinf(cfg.D)) return false;
  SymMatrix w = cp.V;
  w.add_outer(x);
  w.add_scaled_identity(cfg.env.M * (cfg.plan.rho_max - cfg.plan.rho_min));
  Cholesky c;
  if (!c.factor(w))
    throw NotPositiveDefinite("dec_sync_check: grown Gram not PD");
  const double gap = c.log_det() - sl.logdet_s;
  const double scale = double(sl.dt + 1) * (1.0 + cfg.env.L * cfg.env.L);
  return gap >= cfg.D / scale;
}

inline bool dec_sync_check(const GSlice& sl, std::span<const double> x,
                           const ProtocolConfig& cfg) {
  ComposedParams cp;
  compose_core(sl.S, sl.s, sl.U, sl.u_bar, cp);
  return dec_sync_check(sl, cp, x, cfg);
}

namespace detail {

inline void resum_group(GSlice& sl) {
  sl.S.zero();
  std::fill(sl.s.begin(), sl.s.end(), 0.0);
  for (std::size_t j = 0; j < sl.contrib_mat.size(); ++j) {
    sl.S.add(sl.contrib_mat[j]);
    for (std::size_t i = 0; i < sl.s.size(); ++i)
      sl.s[i] += sl.contrib_vec[j][i];
  }
  Cholesky c;
  if (!c.factor(sl.S))
    throw NotPositiveDefinite("decentralized: group Gram not PD");
  sl.logdet_s = c.log_det();
}

}  // namespace detail

inline RunRecord run_decentralized(const ProtocolConfig& cfg,
                                   const Network& net, std::uint64_t run_seed,
                                   int run_id, DecAuditLog* audit = nullptr,
                                   bool audit_two_gamma = true,
                                   const TrialHook& hook = {},
                                   std::vector<DecAgent>* final_agents =
                                       nullptr) {
  const auto& env = cfg.env;
  const int d = env.d;
  const int M = env.M;
  const int gamma = net.gamma;
  if (net.M != M)
    throw ValidationError({"network size does not match env.M"});

  RunRecord rec;
  rec.meta.run_id = run_id;
  rec.meta.seed = run_seed;
  rec.meta.mode = "decentralized";
  rec.meta.is_private = cfg.is_private;
  rec.meta.epsilon = cfg.budget.epsilon;
  rec.meta.d = d;
  rec.meta.cover_size = int(net.cliques.size());
  if (audit_two_gamma) rec.meta.two_gamma_violations = 0;

  Rng theta_rng = make_stream(run_seed, StreamTag::kTheta);
  const GroundTruth gt = gen_theta(env, theta_rng);

  NoisePlan tree_plan = cfg.plan;
  if (cfg.zero_noise) tree_plan.sigma_n = 0.0;

  std::vector<DecAgent> agents(M);
  for (int i = 0; i < M; ++i) {
    agents[i].slices.resize(gamma);
    for (int g = 0; g < gamma; ++g) {
      GSlice& sl = agents[i].slices[g];
      sl.U = SymMatrix(d);
      sl.u_bar.assign(d, 0.0);
      sl.staged = StagedBlock(d);
      sl.tree = NoiseTree(
          tree_plan, d,
          mix_seed({run_seed, std::uint64_t(StreamTag::kTree),
                    std::uint64_t(i), std::uint64_t(g)}));
      sl.contrib_mat.assign(M, SymMatrix::identity(d, cfg.plan.rho_min));
      sl.contrib_vec.assign(M, Vec(d, 0.0));
      // Same bits as the centralized init, not the contribution re-sum:
      // ulp differences here would flip tie-breaks on fresh states.
      sl.S = SymMatrix::identity(d, M * cfg.plan.rho_min);
      sl.s.assign(d, 0.0);
      sl.logdet_s = logdet(sl.S);
    }
  }

  NetworkSim sim(net);
  long long n_total = 0;

  struct FireEvent {
    int g;
    long long t;
    int clique;
  };
  std::vector<FireEvent> fires;

  auto respond = [&](int i, int g, long long t, long long included_through) {
    GSlice& sl = agents[i].slices[g];
    sl.tree.insert(sl.staged.q);
    auto [u_hat, u_vec] = privatize_output(sl.tree, cfg.plan, d);
    sl.staged.clear();
    sl.U = SymMatrix::identity(d, cfg.plan.rho_min);
    sl.u_bar.assign(d, 0.0);
    sl.dt = 0;
    sl.last_response_trial = t;
    sl.responded_this_trial = true;
    Message pb;
    pb.kind = Message::Kind::kParamBroadcast;
    pb.origin = i;
    pb.g = g;
    pb.t_sent = t;
    pb.u_hat = std::move(u_hat);
    pb.u_vec = std::move(u_vec);
    sim.broadcast(std::move(pb), t);
    agents[i].sync_count += 1;
    ++n_total;
    if (audit) {
      audit->responses.push_back({i, g, t, included_through});
      audit->writes.push_back({i, g, t, 2});
    }
  };

  const long long ce = cfg.checkpoint_every > 0 ? cfg.checkpoint_every : env.T;
  ComposedParams cp;
  DecisionSet ds;
  Vec diff(d);

  for (long long t = 1; t <= env.T; ++t) {
    for (auto& ag : agents)
      for (auto& sl : ag.slices) sl.responded_this_trial = false;

    const auto deliveries = sim.step(t);

    // Apply parameter releases first, then answer synchronization requests.
    for (const auto& dv : deliveries) {
      if (dv.msg.kind != Message::Kind::kParamBroadcast) continue;
      if (audit)
        audit->deliveries.push_back({dv.msg.origin, dv.agent, dv.msg.g,
                                     dv.msg.t_sent, t, 1});
      if (net.clique_id[dv.msg.origin] != net.clique_id[dv.agent]) continue;
      if (dv.msg.t_sent < t - gamma) continue;  // stale-message window
      GSlice& sl = agents[dv.agent].slices[dv.msg.g];
      sl.contrib_mat[dv.msg.origin] = dv.msg.u_hat;
      sl.contrib_vec[dv.msg.origin] = dv.msg.u_vec;
      detail::resum_group(sl);
      if (audit) {
        audit->applies.push_back({dv.agent, dv.msg.origin, dv.msg.g, t});
        audit->writes.push_back({dv.agent, dv.msg.g, t, 1});
      }
    }
    for (const auto& dv : deliveries) {
      if (dv.msg.kind != Message::Kind::kSyncRequest) continue;
      if (audit)
        audit->deliveries.push_back({dv.msg.origin, dv.agent, dv.msg.g,
                                     dv.msg.t_sent, t, 0});
      if (net.clique_id[dv.msg.origin] != net.clique_id[dv.agent]) continue;
      if (dv.msg.t_sent < t - gamma) continue;
      GSlice& sl = agents[dv.agent].slices[dv.msg.g];
      if (sl.responded_this_trial || dv.msg.t_sent <= sl.last_response_trial)
        continue;
      respond(dv.agent, dv.msg.g, t, t - 1);
    }

    // Every agent acts on its trial-start slice state.
    const int g = subsample_index(t, gamma);
    for (int i = 0; i < M; ++i) {
      GSlice& sl = agents[i].slices[g];
      compose_core(sl.S, sl.s, sl.U, sl.u_bar, cp);
      cp.beta = compute_beta(cp, cfg);
      agents[i].last_beta = cp.beta;

      Rng env_rng = make_stream(run_seed, StreamTag::kDecision,
                                std::uint64_t(i), std::uint64_t(t));
      gen_decision_set_into(ds, gt, env, env_rng);
      const int k = select_action(cp, ds);
      auto x = ds.action(k);
      const double y = sample_reward(x, gt, env_rng);
      const double r = regret_by_index(ds, k, gt);
      agents[i].cum_regret += r;
      if (hook) hook(TrialObs{t, i, cp.theta_bar, cp.V, cp.beta, x, y, r});

      sl.U.add_outer(x);
      axpy(y, x, sl.u_bar);
      sl.staged.add_observation(x, y);
      if (audit) audit->writes.push_back({i, g, t, 0});

      if (dec_sync_check(sl, cp, x, cfg) && !sl.responded_this_trial &&
          t > sl.last_response_trial) {
        Message rq;
        rq.kind = Message::Kind::kSyncRequest;
        rq.origin = i;
        rq.g = g;
        rq.t_sent = t;
        sim.broadcast(std::move(rq), t);
        respond(i, g, t, t);
        fires.push_back({g, t, net.clique_id[i]});
      }
    }
    for (int i = 0; i < M; ++i) {
      GSlice& sl = agents[i].slices[g];
      if (!sl.responded_this_trial) ++sl.dt;
    }

    // Everyone in the firing clique must agree on (S_g, s_g) 2*gamma trials
    // after a synchronization request went out.
    if (audit_two_gamma) {
      for (const auto& f : fires) {
        if (f.t + 2 * gamma != t) continue;
        const auto& members = net.cliques[f.clique];
        const GSlice& ref = agents[members.front()].slices[f.g];
        for (int m : members) {
          const GSlice& sl = agents[m].slices[f.g];
          if (!(sl.S == ref.S) || sl.s != ref.s)
            rec.meta.two_gamma_violations += 1;
        }
      }
      std::erase_if(fires,
                    [&](const FireEvent& f) { return f.t + 2 * gamma <= t; });
    }

    if (t % ce == 0 || t == env.T) {
      for (int i = 0; i < M; ++i) {
        GSlice& sl = agents[i].slices[g];
        compose_core(sl.S, sl.s, sl.U, sl.u_bar, cp);
        for (int j = 0; j < d; ++j)
          diff[j] = cp.theta_bar[j] - gt.theta_star[j];
        CheckpointRow row;
        row.run_id = run_id;
        row.t = t;
        row.agent = i;
        row.cum_regret = agents[i].cum_regret;
        row.sync_count = agents[i].sync_count;
        row.messages_sent = sim.transmissions_from(i);
        row.beta = agents[i].last_beta;
        row.err_v = ellipsoid_norm(diff, cp.V);
        rec.rows.push_back(row);
      }
    }
  }

  rec.meta.n_total = n_total;
  rec.meta.total_messages = sim.transmissions();
  for (const auto& ag : agents) rec.meta.final_group_regret += ag.cum_regret;
  if (final_agents) *final_agents = std::move(agents);
  return rec;
}

}  // namespace fedban

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fedban/centralized.hpp"
#include "fedban/decentralized.hpp"
#include "fedban/errors.hpp"
#include "fedban/network.hpp"
#include "fedban/record.hpp"

namespace fedban {

using nlohmann::json;

struct DChoice {
  enum class Kind { kEveryRound, kTheoremDefault, kNever, kValue };
  Kind kind = Kind::kTheoremDefault;
  double value = 0.0;

  std::string label() const {
    switch (kind) {
      case Kind::kEveryRound: return "every_round";
      case Kind::kTheoremDefault: return "theorem_default";
      case Kind::kNever: return "never";
      case Kind::kValue: break;
    }
    std::ostringstream os;
    os << "D=" << value;
    return os.str();
  }
};

struct NetworkSpec {
  std::string type;  // complete | line | ring | star | random_regular | file
  int M = 0;
  int degree = 0;
  std::uint64_t seed = 0;
  std::string path;
  int gamma = 1;
};

struct ExperimentConfig {
  std::string mode = "centralized";
  EnvConfig env;
  PrivacyBudget budget;
  bool is_private = true;
  bool zero_noise = false;
  DChoice d_choice;
  std::optional<long long> n_fixed;
  std::optional<NetworkSpec> network;
  int repeats = 1;
  long long checkpoint_every = 0;  // 0 -> env.T / 100
  std::uint64_t seed = 0;
  std::vector<double> sweep_epsilon{0.1, 1.0, 10.0};
  std::vector<int> sweep_dimension{5, 10, 20};
};

namespace detail {

inline void check_keys(const json& j,
                       std::initializer_list<const char*> allowed,
                       const std::string& scope,
                       std::vector<std::string>& issues) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (key == k) {
        ok = true;
        break;
      }
    if (!ok) issues.push_back(scope + ": unknown key \"" + key + "\"");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out,
                std::vector<std::string>& issues, const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    issues.push_back(scope + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  std::vector<std::string> issues;
  ExperimentConfig cfg;
  detail::check_keys(j,
                     {"mode", "env", "budget", "private", "zero_noise", "D",
                      "n_fixed", "network", "repeats", "checkpoint_every",
                      "seed", "sweep_epsilon", "sweep_dimension"},
                     "config", issues);

  detail::read_field(j, "mode", cfg.mode, issues, "config");
  if (cfg.mode != "centralized" && cfg.mode != "decentralized")
    issues.push_back("mode: must be \"centralized\" or \"decentralized\"");

  if (j.contains("env")) {
    const json& je = j.at("env");
    detail::check_keys(je,
                       {"d", "M", "T", "K", "L", "S", "sigma", "B", "gap",
                        "master_seed"},
                       "env", issues);
    detail::read_field(je, "d", cfg.env.d, issues, "env");
    detail::read_field(je, "M", cfg.env.M, issues, "env");
    detail::read_field(je, "T", cfg.env.T, issues, "env");
    detail::read_field(je, "K", cfg.env.K, issues, "env");
    detail::read_field(je, "L", cfg.env.L, issues, "env");
    detail::read_field(je, "S", cfg.env.S, issues, "env");
    detail::read_field(je, "sigma", cfg.env.sigma, issues, "env");
    detail::read_field(je, "B", cfg.env.B, issues, "env");
    detail::read_field(je, "gap", cfg.env.gap, issues, "env");
    detail::read_field(je, "master_seed", cfg.env.master_seed, issues, "env");
  }
  if (j.contains("budget")) {
    const json& jb = j.at("budget");
    detail::check_keys(jb, {"epsilon", "delta", "alpha"}, "budget", issues);
    detail::read_field(jb, "epsilon", cfg.budget.epsilon, issues, "budget");
    detail::read_field(jb, "delta", cfg.budget.delta, issues, "budget");
    detail::read_field(jb, "alpha", cfg.budget.alpha, issues, "budget");
  }
  detail::read_field(j, "private", cfg.is_private, issues, "config");
  detail::read_field(j, "zero_noise", cfg.zero_noise, issues, "config");

  if (j.contains("D")) {
    const json& jd = j.at("D");
    if (jd.is_string()) {
      const std::string s = jd.get<std::string>();
      if (s == "every_round")
        cfg.d_choice.kind = DChoice::Kind::kEveryRound;
      else if (s == "theorem_default")
        cfg.d_choice.kind = DChoice::Kind::kTheoremDefault;
      else if (s == "never")
        cfg.d_choice.kind = DChoice::Kind::kNever;
      else
        issues.push_back("D: unknown symbolic value \"" + s + "\"");
    } else if (jd.is_number()) {
      cfg.d_choice.kind = DChoice::Kind::kValue;
      cfg.d_choice.value = jd.get<double>();
      if (cfg.d_choice.value < 0) issues.push_back("D: must be >= 0");
    } else {
      issues.push_back("D: must be a number or a regime name");
    }
  }
  if (j.contains("n_fixed")) {
    long long n = 0;
    detail::read_field(j, "n_fixed", n, issues, "config");
    if (n < 1)
      issues.push_back("n_fixed: must be >= 1");
    else
      cfg.n_fixed = n;
  }
  if (j.contains("network")) {
    NetworkSpec spec;
    const json& jn = j.at("network");
    detail::check_keys(jn, {"type", "M", "degree", "seed", "path", "gamma"},
                       "network", issues);
    detail::read_field(jn, "type", spec.type, issues, "network");
    detail::read_field(jn, "M", spec.M, issues, "network");
    detail::read_field(jn, "degree", spec.degree, issues, "network");
    detail::read_field(jn, "seed", spec.seed, issues, "network");
    detail::read_field(jn, "path", spec.path, issues, "network");
    detail::read_field(jn, "gamma", spec.gamma, issues, "network");
    if (spec.type.empty()) issues.push_back("network.type: required");
    cfg.network = spec;
  }
  detail::read_field(j, "repeats", cfg.repeats, issues, "config");
  detail::read_field(j, "checkpoint_every", cfg.checkpoint_every, issues,
                     "config");
  detail::read_field(j, "seed", cfg.seed, issues, "config");
  detail::read_field(j, "sweep_epsilon", cfg.sweep_epsilon, issues, "config");
  detail::read_field(j, "sweep_dimension", cfg.sweep_dimension, issues,
                     "config");

  for (const auto& e : cfg.env.validate()) issues.push_back(e);
  for (const auto& e : cfg.budget.validate()) issues.push_back(e);
  if (cfg.repeats < 1) issues.push_back("repeats: must be >= 1");
  if (cfg.checkpoint_every < 0)
    issues.push_back("checkpoint_every: must be >= 0");
  if (cfg.mode == "decentralized" && !cfg.network)
    issues.push_back("network: required in decentralized mode");
  if (cfg.network) {
    const auto& spec = *cfg.network;
    const bool named = spec.type == "complete" || spec.type == "line" ||
                       spec.type == "ring" || spec.type == "star";
    const bool regular =
        spec.type == "random_regular" || spec.type == "random-regular";
    if (!named && !regular && spec.type != "file")
      issues.push_back("network.type: unknown generator \"" + spec.type +
                       "\"");
    if ((named || regular) && spec.M < 1)
      issues.push_back("network.M: must be >= 1");
    if (spec.type == "file" && spec.path.empty())
      issues.push_back("network.path: required for file topology");
    if (spec.gamma < 1) issues.push_back("network.gamma: must be >= 1");
  }

  if (!issues.empty()) throw ValidationError(issues);
  return cfg;
}

inline json to_json(const ExperimentConfig& cfg) {
  json j;
  j["mode"] = cfg.mode;
  j["env"] = {{"d", cfg.env.d},         {"M", cfg.env.M},
              {"T", cfg.env.T},         {"K", cfg.env.K},
              {"L", cfg.env.L},         {"S", cfg.env.S},
              {"sigma", cfg.env.sigma}, {"B", cfg.env.B},
              {"gap", cfg.env.gap},     {"master_seed", cfg.env.master_seed}};
  j["budget"] = {{"epsilon", cfg.budget.epsilon},
                 {"delta", cfg.budget.delta},
                 {"alpha", cfg.budget.alpha}};
  j["private"] = cfg.is_private;
  j["zero_noise"] = cfg.zero_noise;
  if (cfg.d_choice.kind == DChoice::Kind::kValue)
    j["D"] = cfg.d_choice.value;
  else
    j["D"] = cfg.d_choice.label();
  if (cfg.n_fixed) j["n_fixed"] = *cfg.n_fixed;
  if (cfg.network) {
    json jn;
    jn["type"] = cfg.network->type;
    jn["gamma"] = cfg.network->gamma;
    if (cfg.network->M > 0) jn["M"] = cfg.network->M;
    if (cfg.network->degree > 0) jn["degree"] = cfg.network->degree;
    if (cfg.network->seed != 0) jn["seed"] = cfg.network->seed;
    if (!cfg.network->path.empty()) jn["path"] = cfg.network->path;
    j["network"] = jn;
  }
  j["repeats"] = cfg.repeats;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["seed"] = cfg.seed;
  j["sweep_epsilon"] = cfg.sweep_epsilon;
  j["sweep_dimension"] = cfg.sweep_dimension;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  const std::string dump = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

struct ResolvedRun {
  ProtocolConfig proto;
  std::optional<Network> net;
};

inline Network build_network(const NetworkSpec& spec) {
  Adjacency adj;
  if (spec.type == "complete")
    adj = graph_complete(spec.M);
  else if (spec.type == "line")
    adj = graph_line(spec.M);
  else if (spec.type == "ring")
    adj = graph_ring(spec.M);
  else if (spec.type == "star")
    adj = graph_star(spec.M);
  else if (spec.type == "random_regular" || spec.type == "random-regular")
    adj = graph_random_regular(spec.M, spec.degree, spec.seed);
  else if (spec.type == "file")
    adj = load_edge_list(spec.path);
  else
    throw ValidationError({"network.type: unknown generator"});
  return make_network(std::move(adj), spec.gamma);
}

inline ResolvedRun resolve(const ExperimentConfig& cfg) {
  ResolvedRun rr;
  rr.proto.env = cfg.env;
  rr.proto.budget = cfg.budget;
  rr.proto.is_private = cfg.is_private;
  rr.proto.zero_noise = cfg.zero_noise;
  rr.proto.checkpoint_every = cfg.checkpoint_every > 0
                                  ? cfg.checkpoint_every
                                  : std::max<long long>(cfg.env.T / 100, 1);

  std::optional<int> gamma;
  if (cfg.mode == "decentralized") {
    rr.net = build_network(*cfg.network);
    if (rr.net->M != cfg.env.M)
      throw ValidationError({"network: size differs from env.M"});
    gamma = rr.net->gamma;
  }
  rr.proto.plan =
      cfg.is_private
          ? plan_noise(cfg.budget, cfg.env.T, cfg.n_fixed, gamma, cfg.env.L,
                       cfg.env.d, cfg.env.M)
          : plan_nonprivate(1.0, cfg.env.M, cfg.env.T, cfg.n_fixed, gamma);

  switch (cfg.d_choice.kind) {
    case DChoice::Kind::kEveryRound:
      rr.proto.D = 0.0;
      break;
    case DChoice::Kind::kTheoremDefault:
      rr.proto.D = theorem_default_D(rr.proto.plan, cfg.env);
      break;
    case DChoice::Kind::kNever:
      rr.proto.D = std::numeric_limits<double>::infinity();
      break;
    case DChoice::Kind::kValue:
      rr.proto.D = cfg.d_choice.value;
      break;
  }
  return rr;
}

inline int thread_budget(int repeats) {
  int n = int(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("FEDBAN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = cap;
  }
  return std::min(n, repeats);
}

// `repeats` independently seeded runs; records are tagged with the config
// hash and the swept quantities so plot emission can group them.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  const ResolvedRun rr = resolve(cfg);
  const std::string hash = config_hash(cfg);
  std::vector<RunRecord> records(cfg.repeats);

  auto one = [&](int r) {
    const std::uint64_t run_seed =
        mix_seed({cfg.seed, std::uint64_t(StreamTag::kRun), std::uint64_t(r)});
    RunRecord rec =
        cfg.mode == "centralized"
            ? run_centralized(rr.proto, run_seed, r)
            : run_decentralized(rr.proto, *rr.net, run_seed, r);
    rec.meta.config_hash = hash;
    rec.meta.d_label = cfg.d_choice.label();
    records[r] = std::move(rec);
  };

  const int workers = thread_budget(cfg.repeats);
  if (workers <= 1) {
    for (int r = 0; r < cfg.repeats; ++r) one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < cfg.repeats;
             r = next.fetch_add(1))
          one(r);
      });
    for (auto& th : pool) th.join();
  }
  return records;
}

struct SeriesStat {
  double mean = 0.0;
  double stddev = 0.0;
  int count = 0;
};

inline SeriesStat mean_std(const std::vector<double>& xs) {
  SeriesStat st;
  st.count = int(xs.size());
  if (xs.empty()) return st;
  for (double x : xs) st.mean += x;
  st.mean /= double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - st.mean) * (x - st.mean);
    st.stddev = std::sqrt(ss / double(xs.size() - 1));
  }
  return st;
}

// Tidy long-format CSV {axis_value, T, mean_per_agent_regret, std} grouping
// the records by the swept axis.
inline void emit_plot_data(const std::vector<RunRecord>& records,
                           const std::string& axis, const std::string& path) {
  auto key_of = [&](const RunMeta& meta) -> std::string {
    if (axis == "epsilon") {
      std::ostringstream os;
      os << meta.epsilon;
      return os.str();
    }
    if (axis == "communication")
      return meta.d_label + (meta.is_private ? ":private" : ":nonprivate");
    if (axis == "dimension") return std::to_string(meta.d);
    throw MissingAxis("emit_plot_data: unknown axis \"" + axis + "\"");
  };

  // (axis key, t) -> group regret per run, divided by M later via agent count.
  std::map<std::string, std::map<long long, std::map<int, double>>> grouped;
  std::map<std::string, std::map<long long, std::map<int, int>>> agents;
  for (const auto& rec : records) {
    const std::string key = key_of(rec.meta);
    for (const auto& row : rec.rows) {
      grouped[key][row.t][row.run_id] += row.cum_regret;
      agents[key][row.t][row.run_id] += 1;
    }
  }
  if (grouped.size() < 2)
    throw MissingAxis("emit_plot_data: records do not cover axis \"" + axis +
                      "\"");

  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("emit_plot_data: cannot open " + path);
  std::fputs("axis_value,T,mean_per_agent_regret,std\n", f);
  for (const auto& [key, by_t] : grouped) {
    for (const auto& [t, by_run] : by_t) {
      std::vector<double> per_agent;
      for (const auto& [run, total] : by_run)
        per_agent.push_back(total / double(agents[key][t][run]));
      const SeriesStat st = mean_std(per_agent);
      std::fprintf(f, "%s,%lld,%.9g,%.9g\n", key.c_str(), t, st.mean,
                   st.stddev);
    }
  }
  if (std::fclose(f) != 0) throw IoError("emit_plot_data: close failed");
}

// Runs the experiment once per axis value and writes one runs CSV per value
// plus the tidy plot CSV.
inline std::vector<RunRecord> sweep_axis(const ExperimentConfig& base,
                                         const std::string& axis,
                                         const std::string& out_dir) {
  std::vector<ExperimentConfig> variants;
  std::vector<std::string> names;
  if (axis == "epsilon") {
    for (double eps : base.sweep_epsilon) {
      ExperimentConfig c = base;
      c.is_private = true;
      c.budget.epsilon = eps;
      variants.push_back(c);
      std::ostringstream os;
      os << "epsilon_" << eps;
      names.push_back(os.str());
    }
  } else if (axis == "communication") {
    for (bool priv : {true, false}) {
      for (const auto kind :
           {DChoice::Kind::kEveryRound, DChoice::Kind::kTheoremDefault,
            DChoice::Kind::kNever}) {
        ExperimentConfig c = base;
        c.is_private = priv;
        c.d_choice = DChoice{kind, 0.0};
        variants.push_back(c);
        names.push_back(c.d_choice.label() +
                        (priv ? "_private" : "_nonprivate"));
      }
    }
  } else if (axis == "dimension") {
    for (int d : base.sweep_dimension) {
      ExperimentConfig c = base;
      c.env.d = d;
      if (c.env.K > d * d) c.env.K = d * d;
      variants.push_back(c);
      names.push_back("dimension_" + std::to_string(d));
    }
  } else {
    throw MissingAxis("sweep: unknown axis \"" + axis + "\"");
  }

  std::vector<RunRecord> all;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    auto records = run_experiment(variants[i]);
    write_csv(records, out_dir + "/runs_" + names[i] + ".csv");
    for (auto& r : records) all.push_back(std::move(r));
  }
  emit_plot_data(all, axis, out_dir + "/plot_" + axis + ".csv");
  return all;
}

}  // namespace fedban

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "fedban/errors.hpp"

namespace fedban {

struct CheckpointRow {
  int run_id = 0;
  long long t = 0;
  int agent = 0;
  double cum_regret = 0.0;
  long long sync_count = 0;
  long long messages_sent = 0;
  // Diagnostics kept in memory only; the CSV schema is pinned above.
  double beta = 0.0;
  double err_v = 0.0;  // || theta_bar - theta* ||_V at the checkpoint
};

struct RunMeta {
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string mode;  // "centralized" | "decentralized"
  bool is_private = true;
  double epsilon = 0.0;
  int d = 0;
  std::string d_label;        // "every_round" | "theorem_default" | "never" | "D=..."
  int cover_size = 0;         // decentralized clique cover size
  long long n_total = 0;      // communication rounds (centralized) / releases
  long long total_messages = 0;
  double final_group_regret = 0.0;
  double elliptic_sum = -1.0;    // single-pot potential audit, -1 if off
  double elliptic_bound = -1.0;
  long long two_gamma_violations = -1;  // -1 when not audited
  long long psd_violations = -1;
};

struct RunRecord {
  RunMeta meta;
  std::vector<CheckpointRow> rows;
};

// Pinned schema: run_id,t,agent,cum_regret,sync_count,messages_sent with the
// float column printed at 9 significant digits, rows sorted (run_id, t, agent).
inline void write_csv(const std::vector<RunRecord>& records,
                      const std::string& path) {
  if (records.empty())
    throw IoError("write_csv: no records to write");
  std::vector<const CheckpointRow*> rows;
  for (const auto& r : records)
    for (const auto& row : r.rows) rows.push_back(&row);
  std::sort(rows.begin(), rows.end(),
            [](const CheckpointRow* a, const CheckpointRow* b) {
              if (a->run_id != b->run_id) return a->run_id < b->run_id;
              if (a->t != b->t) return a->t < b->t;
              return a->agent < b->agent;
            });
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("write_csv: cannot open " + path);
  std::fputs("run_id,t,agent,cum_regret,sync_count,messages_sent\n", f);
  for (const auto* row : rows)
    std::fprintf(f, "%d,%lld,%d,%.9g,%lld,%lld\n", row->run_id, row->t,
                 row->agent, row->cum_regret, row->sync_count,
                 row->messages_sent);
  if (std::fclose(f) != 0) throw IoError("write_csv: close failed " + path);
}

}  // namespace fedban

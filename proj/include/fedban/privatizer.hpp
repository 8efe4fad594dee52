#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fedban/errors.hpp"
#include "fedban/matrix.hpp"
#include "fedban/rng.hpp"

namespace fedban {

struct PrivacyBudget {
  double epsilon = 1.0;
  double delta = 0.1;
  double alpha = 0.1;  // failure probability for the accuracy bounds

  std::vector<std::string> validate() const {
    std::vector<std::string> issues;
    if (!(epsilon > 0.0)) issues.push_back("budget.epsilon: must be > 0");
    if (!(delta > 0.0 && delta < 1.0))
      issues.push_back("budget.delta: must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 1.0))
      issues.push_back("budget.alpha: must lie in (0, 1)");
    return issues;
  }
};

// Privacy budget mapped to tree depth, per-node noise scale and the spectral
// bounds that drive the exploration radius. psd_shift is what each released
// Gram matrix gets added to its diagonal.
struct NoisePlan {
  int m = 1;             // tree depth
  double sigma_n = 0.0;  // per-node noise std
  double lambda = 0.0;   // operator-norm bound on the top-left noise block
  double rho_min = 0.0;
  double rho_max = 0.0;
  double kappa = 0.0;
  double psd_shift = 0.0;
  long long n_planned = 0;  // planned communication rounds, 0 if unknown

  long long leaf_capacity() const { return 1LL << (m - 1); }
};

namespace detail {
inline int ceil_log2(long long x) {
  if (x <= 1) return 0;
  return std::bit_width(std::uint64_t(x - 1));
}
}  // namespace detail

// Depth uses the planned round count if fixed in advance, otherwise the
// worst case: one release per trial (or per trial of each round-robin set).
inline NoisePlan plan_noise(const PrivacyBudget& budget, long long T,
                            std::optional<long long> n_fixed,
                            std::optional<int> gamma, double L, int d, int M) {
  auto issues = budget.validate();
  if (!issues.empty()) throw InvalidBudget(ValidationError(issues).what());
  const long long horizon = std::max<long long>(T, 1);
  const long long per_set =
      gamma ? (horizon + *gamma - 1) / *gamma : horizon;
  const long long n = n_fixed ? std::max<long long>(*n_fixed, 1)
                              : std::max<long long>(per_set, 1);

  NoisePlan plan;
  plan.m = 1 + detail::ceil_log2(n);
  plan.n_planned = n_fixed ? *n_fixed : 0;
  const double l2 = L * L + 1.0;
  const double log2d = std::log(2.0 / budget.delta);
  plan.sigma_n = std::sqrt(16.0 * plan.m * l2 * l2 * log2d * log2d /
                           (budget.epsilon * budget.epsilon));
  const double tail = 2.0 * std::log(2.0 * double(n) * M / budget.alpha);
  plan.lambda = std::sqrt(32.0) * plan.m * l2 * std::log(4.0 / budget.delta) *
                (4.0 * std::sqrt(double(d)) + tail) / budget.epsilon;
  plan.kappa = std::sqrt(plan.m * l2 * (std::sqrt(double(d)) + tail) /
                         (std::sqrt(2.0) * budget.epsilon));
  plan.rho_min = plan.lambda;
  plan.rho_max = 3.0 * plan.lambda;
  plan.psd_shift = 2.0 * plan.lambda;
  return plan;
}

// Noise-free plan for the non-private baseline: releases carry a fixed
// (lambda_reg / M) ridge so the synced Gram totals lambda_reg * I.
inline NoisePlan plan_nonprivate(double lambda_reg, int M, long long T,
                                 std::optional<long long> n_fixed,
                                 std::optional<int> gamma) {
  const long long horizon = std::max<long long>(T, 1);
  const long long per_set =
      gamma ? (horizon + *gamma - 1) / *gamma : horizon;
  const long long n = n_fixed ? std::max<long long>(*n_fixed, 1)
                              : std::max<long long>(per_set, 1);
  NoisePlan plan;
  plan.m = 1 + detail::ceil_log2(n);
  plan.n_planned = n_fixed ? *n_fixed : 0;
  plan.sigma_n = 0.0;
  plan.lambda = 0.0;
  plan.kappa = 0.0;
  plan.rho_min = lambda_reg / M;
  plan.rho_max = lambda_reg / M;
  plan.psd_shift = lambda_reg / M;
  return plan;
}

// Accumulates sum of [x^T y]^T [x^T y] blocks between synchronizations.
struct StagedBlock {
  SymMatrix q;

  StagedBlock() = default;
  explicit StagedBlock(int d) : q(d + 1), row_(std::size_t(d) + 1) {}

  void add_observation(std::span<const double> x, double y) {
    for (std::size_t i = 0; i < x.size(); ++i) row_[i] = x[i];
    row_[x.size()] = y;
    q.add_outer(row_);
  }

  void clear() { q.zero(); }

 private:
  Vec row_;
};

// Binary counting tree over (d+1)x(d+1) blocks with symmetric Gaussian node
// noise. Only the dyadic partial sums of the insertion prefix are kept: the
// occupied level j block is exactly the tree node covering the most recent
// complete 2^j leaves, and a prefix query sums those nodes plus their noise.
// Node noise is a pure function of (tree seed, level, offset), generated when
// the node's block completes, so it is sampled once and never resampled.
class NoiseTree {
 public:
  NoiseTree() = default;

  NoiseTree(const NoisePlan& plan, int d, std::uint64_t seed)
      : m_(plan.m),
        dim_(d + 1),
        sigma_(plan.sigma_n),
        seed_(seed),
        occupied_(plan.m, false),
        sums_(plan.m, SymMatrix(d + 1)),
        noise_(plan.m, SymMatrix(d + 1)) {}

  int depth() const { return m_; }
  int block_dim() const { return dim_; }
  long long leaf_count() const { return leaf_count_; }
  long long capacity() const { return 1LL << (m_ - 1); }

  void insert(const SymMatrix& block) {
    if (leaf_count_ >= capacity())
      throw TreeFull("noise tree: more synchronization rounds than planned");
    block.require_same_dim(dim_);
    carry_ = block;
    int level = 0;
    while (occupied_[level]) {
      carry_.add(sums_[level]);
      occupied_[level] = false;
      ++level;
    }
    ++leaf_count_;
    sums_[level] = carry_;
    noise_[level] = node_noise(level, (leaf_count_ >> level) - 1);
    occupied_[level] = true;
  }

  // Noisy prefix sum over everything inserted so far: the exact sum plus the
  // noise of the <= m nodes on the dyadic decomposition of [1, leaf_count].
  SymMatrix query() const {
    if (leaf_count_ == 0) throw EmptyTree("noise tree: nothing inserted");
    SymMatrix out(dim_);
    for (int level = m_ - 1; level >= 0; --level) {
      if (!occupied_[level]) continue;
      out.add(sums_[level]);
      out.add(noise_[level]);
    }
    return out;
  }

  SymMatrix exact_sum() const {
    if (leaf_count_ == 0) throw EmptyTree("noise tree: nothing inserted");
    SymMatrix out(dim_);
    for (int level = m_ - 1; level >= 0; --level)
      if (occupied_[level]) out.add(sums_[level]);
    return out;
  }

  // (level, offset) of each node a query at this leaf count touches.
  static std::vector<std::pair<int, long long>> dyadic_nodes(
      long long leaf_count) {
    std::vector<std::pair<int, long long>> nodes;
    for (int level = 62; level >= 0; --level)
      if (leaf_count & (1LL << level))
        nodes.emplace_back(level, (leaf_count >> (level + 1)) * 2);
    return nodes;
  }

  std::vector<std::pair<int, long long>> contributing_nodes() const {
    return dyadic_nodes(leaf_count_);
  }

  // Symmetrized iid N(0, sigma_n^2) node noise, deterministic per node.
  SymMatrix node_noise(int level, long long offset) const {
    if (sigma_ == 0.0) return SymMatrix(dim_);
    Rng rng = make_stream(seed_, StreamTag::kTreeNode, std::uint64_t(level),
                          std::uint64_t(offset));
    std::vector<double> raw(std::size_t(dim_) * dim_);
    for (auto& v : raw) v = sigma_ * rng.normal();
    return symmetrize(raw, dim_);
  }

 private:
  int m_ = 1;
  int dim_ = 0;
  double sigma_ = 0.0;
  std::uint64_t seed_ = 0;
  long long leaf_count_ = 0;
  std::vector<bool> occupied_;
  std::vector<SymMatrix> sums_;
  std::vector<SymMatrix> noise_;
  SymMatrix carry_;
};

inline NoiseTree tree_init(const NoisePlan& plan, int d, std::uint64_t seed) {
  return NoiseTree(plan, d, seed);
}

// Splits the noisy (d+1) block into the PSD-shifted Gram release and the
// reward-vector release.
inline std::pair<SymMatrix, Vec> privatize_output(const NoiseTree& tree,
                                                  const NoisePlan& plan,
                                                  int d) {
  const SymMatrix q = tree.query();
  SymMatrix u_hat(d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) u_hat.set(i, j, q(i, j));
  u_hat.add_scaled_identity(plan.psd_shift);
  Vec u_vec(d);
  for (int i = 0; i < d; ++i) u_vec[i] = q(i, d);
  return {std::move(u_hat), std::move(u_vec)};
}

}  // namespace fedban

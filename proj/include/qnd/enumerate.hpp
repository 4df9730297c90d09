#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "qnd/kernel.hpp"

// Brute-force unrolling of the outcome tree to a fixed depth: every positive-
// probability outcome sequence with its exact path weight and terminal simplex
// point. Instantiated with double for cheap checks and with Rational
// (rational.hpp) when the martingale identity is to hold exactly.

namespace qnd {

template <class Scalar>
struct OutcomeLeaf {
  std::vector<std::int32_t> path;
  Scalar weight;
  VectorX<Scalar> q;
};

template <class Scalar>
struct OutcomeTree {
  int depth = 0;
  std::vector<OutcomeLeaf<Scalar>> leaves;

  Scalar total_weight() const {
    Scalar w(0);
    for (const auto& leaf : leaves) w += leaf.weight;
    return w;
  }
};

struct EnumerateOptions {
  std::int64_t path_cap = 10'000'000;
  std::int64_t memory_budget_bytes = 2'000'000'000;
};

namespace detail {

inline std::int64_t checked_pow(std::int64_t base, int exp, std::int64_t cap) {
  std::int64_t v = 1;
  for (int e = 0; e < exp; ++e) {
    if (v > cap / base) return cap + 1;
    v *= base;
  }
  return v;
}

}  // namespace detail

// Enumerates against a per-step cycle of kernels (a single kernel is a cycle
// of length one). Zero-probability branches are pruned; the retained weights
// still sum to 1.
template <class Scalar>
OutcomeTree<Scalar> enumerate_tree(const std::vector<KernelT<Scalar>>& cycle,
                                   const VectorX<Scalar>& q0, int depth,
                                   const EnumerateOptions& opts = {}) {
  if (cycle.empty()) throw ValidationError("enumeration needs at least one kernel");
  for (const auto& k : cycle)
    if (k.n_pointers() != q0.size())
      throw IndexMismatchError("initial state / kernel size mismatch");
  if (depth < 0) throw ValidationError("enumeration depth must be >= 0");

  const std::int64_t n_outcomes = cycle.front().n_outcomes();
  const std::int64_t upper = detail::checked_pow(n_outcomes, depth, opts.path_cap);
  if (upper > opts.path_cap)
    throw TreeTooLargeError("outcome tree would exceed the path cap (" +
                            std::to_string(opts.path_cap) + " paths)");
  const std::int64_t bytes_per_leaf =
      static_cast<std::int64_t>(sizeof(OutcomeLeaf<Scalar>)) + 4LL * depth +
      static_cast<std::int64_t>(sizeof(Scalar) + 48) * (q0.size() + 1);
  if (upper > opts.memory_budget_bytes / std::max<std::int64_t>(bytes_per_leaf, 1))
    throw TreeTooLargeError("outcome tree would exceed the memory budget");

  OutcomeTree<Scalar> tree;
  tree.depth = depth;
  tree.leaves.reserve(static_cast<std::size_t>(upper));

  std::vector<std::int32_t> path;
  path.reserve(static_cast<std::size_t>(depth));
  const std::function<void(const VectorX<Scalar>&, const Scalar&, int)> descend =
      [&](const VectorX<Scalar>& q, const Scalar& weight, int level) {
        if (level == depth) {
          tree.leaves.push_back({path, weight, q});
          return;
        }
        const KernelT<Scalar>& k = cycle[static_cast<std::size_t>(level) % cycle.size()];
        const VectorX<Scalar> pi = outcome_distribution<Scalar>(k, q);
        for (Index i = 0; i < k.n_outcomes(); ++i) {
          bool prune;
          if constexpr (ScalarTraits<Scalar>::is_exact) {
            prune = (pi(i) == Scalar(0));
          } else {
            prune = !(ScalarTraits<Scalar>::to_double(pi(i)) > kUnderflowThreshold);
          }
          if (prune) continue;
          path.push_back(static_cast<std::int32_t>(i));
          descend(bayes_step<Scalar>(k, q, i), Scalar(weight * pi(i)), level + 1);
          path.pop_back();
        }
      };
  descend(q0, Scalar(1), 0);
  return tree;
}

template <class Scalar>
OutcomeTree<Scalar> enumerate_tree(const KernelT<Scalar>& k, const VectorX<Scalar>& q0,
                                   int depth, const EnumerateOptions& opts = {}) {
  return enumerate_tree<Scalar>(std::vector<KernelT<Scalar>>{k}, q0, depth, opts);
}

inline OutcomeTree<double> enumerate_tree(const KernelSchedule& s, const Eigen::VectorXd& q0,
                                          int depth, const EnumerateOptions& opts = {}) {
  return enumerate_tree<double>(s.kernels(), q0, depth, opts);
}

// E[q_n(alpha)] over the tree; the martingale identity makes this q0(alpha),
// exactly so in rational arithmetic.
template <class Scalar>
Scalar exact_expectation(const OutcomeTree<Scalar>& tree, Index alpha) {
  Scalar acc(0);
  for (const auto& leaf : tree.leaves) acc += leaf.weight * leaf.q(alpha);
  return acc;
}

// Total weight of paths whose terminal state satisfies the predicate.
template <class Scalar>
Scalar exact_event_probability(const OutcomeTree<Scalar>& tree,
                               const std::function<bool(const VectorX<Scalar>&)>& predicate) {
  Scalar acc(0);
  for (const auto& leaf : tree.leaves)
    if (predicate(leaf.q)) acc += leaf.weight;
  return acc;
}

}  // namespace qnd

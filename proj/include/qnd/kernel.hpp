#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qnd/errors.hpp"

// Measurement kernel p(i|alpha) and the Bayes recursion on the probability
// simplex over pointer states. The arithmetic core is templated on the scalar
// type: double for simulation, exact rationals (rational.hpp) for the
// enumeration oracle.

namespace qnd {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

inline constexpr double kNormalizationTol = 1e-12;
inline constexpr double kDegeneracyTol = 1e-10;
// Below this an outcome probability is treated as zero and must not be
// conditioned on.
inline constexpr double kUnderflowThreshold = 1e-300;

template <class Scalar>
struct ScalarTraits {
  static constexpr bool is_exact = false;
  static double to_double(const Scalar& x) { return static_cast<double>(x); }
};

template <class Scalar>
Scalar scalar_abs(const Scalar& x) {
  return x < Scalar(0) ? Scalar(-x) : x;
}

// Probe-outcome probabilities: rows are outcomes i, columns are pointer
// states alpha. Column-major storage keeps each pointer's distribution
// contiguous; the outcome-distribution inner product walks columns.
template <class Scalar>
struct KernelT {
  MatrixX<Scalar> probs;
  std::vector<std::string> outcome_labels;
  std::vector<std::string> pointer_labels;
  bool nondegenerate = false;
  std::vector<std::pair<Index, Index>> degenerate_pairs;
  double degeneracy_tol = kDegeneracyTol;

  Index n_outcomes() const { return probs.rows(); }
  Index n_pointers() const { return probs.cols(); }
};

using MeasurementKernel = KernelT<double>;

namespace detail {

inline std::vector<std::string> default_labels(Index n) {
  std::vector<std::string> out(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = std::to_string(k);
  return out;
}

}  // namespace detail

// All pointer pairs whose outcome columns coincide entrywise (within tol for
// floating scalars, exactly for exact scalars).
template <class Scalar>
std::vector<std::pair<Index, Index>> degenerate_pairs_of(const MatrixX<Scalar>& probs,
                                                         double tol) {
  std::vector<std::pair<Index, Index>> pairs;
  for (Index a = 0; a < probs.cols(); ++a) {
    for (Index b = a + 1; b < probs.cols(); ++b) {
      bool same = true;
      for (Index i = 0; i < probs.rows() && same; ++i) {
        const Scalar d = scalar_abs<Scalar>(Scalar(probs(i, a) - probs(i, b)));
        if constexpr (ScalarTraits<Scalar>::is_exact) {
          same = (d == Scalar(0));
        } else {
          same = ScalarTraits<Scalar>::to_double(d) <= tol;
        }
      }
      if (same) pairs.emplace_back(a, b);
    }
  }
  return pairs;
}

template <class Scalar>
std::vector<std::pair<Index, Index>> check_nondegeneracy(const KernelT<Scalar>& k,
                                                         double tol = kDegeneracyTol) {
  return degenerate_pairs_of<Scalar>(k.probs, tol);
}

template <class Scalar>
KernelT<Scalar> validate_kernel(MatrixX<Scalar> probs,
                                std::vector<std::string> outcome_labels = {},
                                std::vector<std::string> pointer_labels = {},
                                double degeneracy_tol = kDegeneracyTol) {
  if (probs.rows() == 0 || probs.cols() == 0) throw ValidationError("kernel matrix is empty");
  if (!outcome_labels.empty() &&
      static_cast<Index>(outcome_labels.size()) != probs.rows())
    throw ValidationError("outcome label count does not match kernel rows");
  if (!pointer_labels.empty() &&
      static_cast<Index>(pointer_labels.size()) != probs.cols())
    throw ValidationError("pointer label count does not match kernel columns");
  for (Index a = 0; a < probs.cols(); ++a) {
    Scalar sum(0);
    for (Index i = 0; i < probs.rows(); ++i) {
      if (probs(i, a) < Scalar(0)) throw NegativeEntryError(i, a);
      sum += probs(i, a);
    }
    if constexpr (ScalarTraits<Scalar>::is_exact) {
      if (sum != Scalar(1))
        throw RowNotNormalizedError(a, ScalarTraits<Scalar>::to_double(Scalar(sum - Scalar(1))));
    } else {
      const double dev = std::abs(ScalarTraits<Scalar>::to_double(sum) - 1.0);
      if (dev > kNormalizationTol) throw RowNotNormalizedError(a, dev);
    }
  }
  KernelT<Scalar> k;
  k.probs = std::move(probs);
  k.outcome_labels = outcome_labels.empty() ? detail::default_labels(k.probs.rows())
                                            : std::move(outcome_labels);
  k.pointer_labels = pointer_labels.empty() ? detail::default_labels(k.probs.cols())
                                            : std::move(pointer_labels);
  k.degeneracy_tol = degeneracy_tol;
  k.degenerate_pairs = degenerate_pairs_of<Scalar>(k.probs, degeneracy_tol);
  k.nondegenerate = k.degenerate_pairs.empty();
  return k;
}

// pi(i) = sum_beta q(beta) p(i|beta).
template <class Scalar>
VectorX<Scalar> outcome_distribution(const KernelT<Scalar>& k, const VectorX<Scalar>& q) {
  if (q.size() != k.n_pointers())
    throw IndexMismatchError("state has " + std::to_string(q.size()) +
                             " components, kernel has " + std::to_string(k.n_pointers()) +
                             " pointers");
  VectorX<Scalar> pi(k.n_outcomes());
  for (Index i = 0; i < k.n_outcomes(); ++i) pi(i) = Scalar(0);
  for (Index b = 0; b < k.n_pointers(); ++b) {
    if (q(b) == Scalar(0)) continue;
    for (Index i = 0; i < k.n_outcomes(); ++i) pi(i) += k.probs(i, b) * q(b);
  }
  return pi;
}

template <class Scalar>
Scalar outcome_probability(const KernelT<Scalar>& k, const VectorX<Scalar>& q, Index i) {
  if (q.size() != k.n_pointers()) throw IndexMismatchError("state/kernel size mismatch");
  if (i < 0 || i >= k.n_outcomes()) throw IndexMismatchError("outcome index out of range");
  Scalar pi(0);
  for (Index b = 0; b < k.n_pointers(); ++b) pi += k.probs(i, b) * q(b);
  return pi;
}

// One step of the posterior recursion q'(a) = q(a) p(i|a) / pi(i).
// Exact scalars stay exact; floating scalars renormalize afterwards so
// rounding drift cannot compound over long chains.
template <class Scalar>
VectorX<Scalar> bayes_step(const KernelT<Scalar>& k, const VectorX<Scalar>& q, Index i) {
  const Scalar pi = outcome_probability(k, q, i);
  bool zero;
  if constexpr (ScalarTraits<Scalar>::is_exact) {
    zero = (pi == Scalar(0));
  } else {
    zero = !(ScalarTraits<Scalar>::to_double(pi) > kUnderflowThreshold);
  }
  if (zero) throw ZeroProbabilityOutcomeError(i);
  VectorX<Scalar> out(q.size());
  for (Index a = 0; a < q.size(); ++a) out(a) = Scalar(q(a) * k.probs(i, a)) / pi;
  if constexpr (!ScalarTraits<Scalar>::is_exact) {
    Scalar sum(0);
    for (Index a = 0; a < q.size(); ++a) sum += out(a);
    for (Index a = 0; a < q.size(); ++a) out(a) = Scalar(out(a) / sum);
  }
  return out;
}

// Simplex point q_n with a log-domain shadow: logq keeps decaying linearly
// after q underflows, which is what decay-rate fits read. -inf marks a
// structural zero and is absorbing.
struct SimplexState {
  Eigen::VectorXd q;
  Eigen::VectorXd logq;
  std::int64_t step = 0;
};

SimplexState make_simplex_state(Eigen::VectorXd q, std::int64_t step = 0);
SimplexState bayes_update(const MeasurementKernel& k, const SimplexState& s, Index i);

Eigen::VectorXd uniform_simplex(Index n);
Eigen::VectorXd one_hot(Index n, Index at);

// Per-step kernel source. Every mode materializes to a finite cycle: per-step
// variation in this artifact is a parameter schedule over a fixed outcome set.
class KernelSchedule {
 public:
  enum class Mode { Fixed, Cyclic, Generator };

  static KernelSchedule fixed(MeasurementKernel k);
  static KernelSchedule cyclic(std::vector<MeasurementKernel> kernels);
  static KernelSchedule from_generator(
      const std::function<MeasurementKernel(std::int64_t)>& generate, std::int64_t period);

  const MeasurementKernel& at(std::int64_t step) const {
    return kernels_[static_cast<std::size_t>(step % length())];
  }
  std::int64_t length() const { return static_cast<std::int64_t>(kernels_.size()); }
  Mode mode() const { return mode_; }
  const MeasurementKernel& front() const { return kernels_.front(); }
  const std::vector<MeasurementKernel>& kernels() const { return kernels_; }
  Index n_outcomes() const { return kernels_.front().n_outcomes(); }
  Index n_pointers() const { return kernels_.front().n_pointers(); }

 private:
  KernelSchedule(Mode mode, std::vector<MeasurementKernel> kernels);

  Mode mode_;
  std::vector<MeasurementKernel> kernels_;
};

// Degeneracy of the whole cycle: two pointers are distinguishable if any
// phase separates them, so columns are compared across the stacked
// per-phase kernels.
std::vector<std::pair<Index, Index>> schedule_degenerate_pairs(const KernelSchedule& s,
                                                               double tol = kDegeneracyTol);

}  // namespace qnd

#include "qnd/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace qnd {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

SimplexState make_simplex_state(Eigen::VectorXd q, std::int64_t step) {
  if (q.size() == 0) throw ValidationError("simplex state is empty");
  double sum = 0.0;
  for (Index a = 0; a < q.size(); ++a) {
    if (q(a) < 0.0) throw ValidationError("simplex state has a negative component");
    sum += q(a);
  }
  if (std::abs(sum - 1.0) > kNormalizationTol)
    throw ValidationError("simplex state not normalized, deviation " +
                          std::to_string(sum - 1.0));
  q /= sum;
  SimplexState s;
  s.logq.resize(q.size());
  for (Index a = 0; a < q.size(); ++a) s.logq(a) = q(a) > 0.0 ? std::log(q(a)) : kNegInf;
  s.q = std::move(q);
  s.step = step;
  return s;
}

SimplexState bayes_update(const MeasurementKernel& k, const SimplexState& s, Index i) {
  if (s.q.size() != k.n_pointers()) throw IndexMismatchError("state/kernel size mismatch");
  if (i < 0 || i >= k.n_outcomes()) throw IndexMismatchError("outcome index out of range");
  const double pii = outcome_probability<double>(k, s.q, i);
  if (!(pii > kUnderflowThreshold)) throw ZeroProbabilityOutcomeError(i);
  const double log_pii = std::log(pii);

  SimplexState out;
  out.q.resize(s.q.size());
  out.logq.resize(s.q.size());
  for (Index a = 0; a < s.q.size(); ++a) {
    const double p = k.probs(i, a);
    out.q(a) = s.q(a) * p / pii;
    out.logq(a) = p > 0.0 ? s.logq(a) + std::log(p) - log_pii : kNegInf;
  }
  // Rounding drift compounds over 1e3-1e4 steps; renormalize both tracks.
  const double sum = out.q.sum();
  out.q /= sum;
  const double lsum = std::log(sum);
  for (Index a = 0; a < out.logq.size(); ++a)
    if (out.logq(a) != kNegInf) out.logq(a) -= lsum;
  out.step = s.step + 1;
  return out;
}

Eigen::VectorXd uniform_simplex(Index n) {
  return Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
}

Eigen::VectorXd one_hot(Index n, Index at) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
  q(at) = 1.0;
  return q;
}

KernelSchedule::KernelSchedule(Mode mode, std::vector<MeasurementKernel> kernels)
    : mode_(mode), kernels_(std::move(kernels)) {
  if (kernels_.empty()) throw ValidationError("kernel schedule is empty");
  const MeasurementKernel& first = kernels_.front();
  for (const MeasurementKernel& k : kernels_) {
    if (k.n_outcomes() != first.n_outcomes() || k.n_pointers() != first.n_pointers())
      throw ValidationError("kernels in a schedule must share outcome and pointer sets");
    if (k.outcome_labels != first.outcome_labels || k.pointer_labels != first.pointer_labels)
      throw ValidationError("kernels in a schedule must share outcome and pointer labels");
  }
}

KernelSchedule KernelSchedule::fixed(MeasurementKernel k) {
  std::vector<MeasurementKernel> ks;
  ks.push_back(std::move(k));
  return KernelSchedule(Mode::Fixed, std::move(ks));
}

KernelSchedule KernelSchedule::cyclic(std::vector<MeasurementKernel> kernels) {
  return KernelSchedule(Mode::Cyclic, std::move(kernels));
}

KernelSchedule KernelSchedule::from_generator(
    const std::function<MeasurementKernel(std::int64_t)>& generate, std::int64_t period) {
  if (period < 1) throw ValidationError("generator period must be >= 1");
  std::vector<MeasurementKernel> ks;
  ks.reserve(static_cast<std::size_t>(period));
  for (std::int64_t t = 0; t < period; ++t) ks.push_back(generate(t));
  return KernelSchedule(Mode::Generator, std::move(ks));
}

std::vector<std::pair<Index, Index>> schedule_degenerate_pairs(const KernelSchedule& s,
                                                               double tol) {
  const Index rows = s.n_outcomes() * s.length();
  Eigen::MatrixXd stacked(rows, s.n_pointers());
  for (std::int64_t l = 0; l < s.length(); ++l)
    stacked.middleRows(l * s.n_outcomes(), s.n_outcomes()) = s.kernels()[static_cast<std::size_t>(l)].probs;
  return degenerate_pairs_of<double>(stacked, tol);
}

}  // namespace qnd

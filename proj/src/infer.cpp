#include "qnd/infer.hpp"

#include <cmath>
#include <limits>

namespace qnd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// D(f || p) with f the empirical distribution of the histogram, weighted by
// the histogram's share of the total sample.
double weighted_divergence(const FrequencyHistogram& h, const Eigen::MatrixXd& probs,
                           Index column, std::int64_t grand_total) {
  if (h.total == 0 || grand_total == 0) return 0.0;
  const double share = static_cast<double>(h.total) / static_cast<double>(grand_total);
  double d = 0.0;
  for (Index i = 0; i < h.counts.size(); ++i) {
    if (h.counts(i) == 0) continue;
    const double f = static_cast<double>(h.counts(i)) / static_cast<double>(h.total);
    const double p = probs(i, column);
    if (p <= 0.0) return kInf;
    d += f * std::log(f / p);
  }
  return share * std::max(d, 0.0);
}

IdentifyResult pick_best(Eigen::VectorXd divergence) {
  IdentifyResult r;
  Index best = 0;
  for (Index g = 1; g < divergence.size(); ++g)
    if (divergence(g) < divergence(best)) best = g;
  double second = kInf;
  for (Index g = 0; g < divergence.size(); ++g) {
    if (g == best) continue;
    second = std::min(second, divergence(g));
  }
  r.pointer = best;
  r.tie = !(second > divergence(best));
  r.margin = r.tie ? 0.0 : second - divergence(best);
  r.divergence = std::move(divergence);
  return r;
}

}  // namespace

FrequencyHistogram make_histogram(std::span<const int> outcomes, Index n_outcomes) {
  FrequencyHistogram h;
  h.counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(n_outcomes);
  for (int i : outcomes) {
    if (i < 0 || i >= n_outcomes) throw IndexMismatchError("outcome index out of range");
    h.counts(i) += 1;
  }
  h.total = static_cast<std::int64_t>(outcomes.size());
  return h;
}

std::vector<FrequencyHistogram> phase_histograms(std::span<const int> outcomes,
                                                 Index n_outcomes, std::int64_t n_phases) {
  if (n_phases < 1) throw ValidationError("phase count must be >= 1");
  std::vector<FrequencyHistogram> hs(static_cast<std::size_t>(n_phases));
  for (auto& h : hs) {
    h.counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(n_outcomes);
    h.total = 0;
  }
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const int i = outcomes[k];
    if (i < 0 || i >= n_outcomes) throw IndexMismatchError("outcome index out of range");
    auto& h = hs[k % static_cast<std::size_t>(n_phases)];
    h.counts(i) += 1;
    h.total += 1;
  }
  return hs;
}

IdentifyResult identify_pointer(const FrequencyHistogram& h, const MeasurementKernel& k) {
  if (h.counts.size() != k.n_outcomes())
    throw IndexMismatchError("histogram / kernel outcome count mismatch");
  if (!k.nondegenerate)
    throw DegenerateKernelError("kernel has indistinguishable pointer pairs");
  Eigen::VectorXd d(k.n_pointers());
  for (Index g = 0; g < k.n_pointers(); ++g)
    d(g) = weighted_divergence(h, k.probs, g, h.total);
  return pick_best(std::move(d));
}

IdentifyResult identify_pointer(std::span<const int> outcomes, const KernelSchedule& schedule) {
  if (!schedule_degenerate_pairs(schedule).empty())
    throw DegenerateKernelError("schedule has indistinguishable pointer pairs");
  const std::vector<FrequencyHistogram> hs =
      phase_histograms(outcomes, schedule.n_outcomes(), schedule.length());
  const std::int64_t total = static_cast<std::int64_t>(outcomes.size());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(schedule.n_pointers());
  for (Index g = 0; g < schedule.n_pointers(); ++g)
    for (std::int64_t l = 0; l < schedule.length(); ++l)
      d(g) += weighted_divergence(hs[static_cast<std::size_t>(l)],
                                  schedule.kernels()[static_cast<std::size_t>(l)].probs, g,
                                  total);
  return pick_best(std::move(d));
}

std::vector<SimplexState> replay_posterior(std::span<const int> outcomes,
                                           const KernelSchedule& schedule,
                                           const Eigen::VectorXd& q_prior) {
  std::vector<SimplexState> states;
  states.reserve(outcomes.size() + 1);
  states.push_back(make_simplex_state(q_prior));
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const MeasurementKernel& kernel = schedule.at(static_cast<std::int64_t>(k));
    states.push_back(bayes_update(kernel, states.back(), outcomes[k]));
  }
  return states;
}

ReconstructionResult reconstruct_q0(std::span<const Index> identified, Index n_pointers,
                                    double z) {
  if (identified.empty()) throw ValidationError("reconstruction needs at least one run");
  ReconstructionResult r;
  r.n_runs = static_cast<std::int64_t>(identified.size());
  r.z = z;
  r.counts.assign(static_cast<std::size_t>(n_pointers), 0);
  for (Index g : identified) {
    if (g < 0 || g >= n_pointers) throw IndexMismatchError("pointer index out of range");
    r.counts[static_cast<std::size_t>(g)] += 1;
  }
  r.q_hat.resize(n_pointers);
  r.ci_lo.resize(n_pointers);
  r.ci_hi.resize(n_pointers);
  const double n = static_cast<double>(r.n_runs);
  const double z2 = z * z;
  for (Index a = 0; a < n_pointers; ++a) {
    const double p = static_cast<double>(r.counts[static_cast<std::size_t>(a)]) / n;
    r.q_hat(a) = p;
    // Wilson score interval: stays informative at p = 0 or 1 (a single run
    // yields a one-hot estimate with maximal width).
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    r.ci_lo(a) = std::max(0.0, center - half);
    r.ci_hi(a) = std::min(1.0, center + half);
  }
  return r;
}

ReconstructionResult reconstruct_q0(const std::vector<IdentifyResult>& runs, Index n_pointers,
                                    double z) {
  std::vector<Index> ids;
  ids.reserve(runs.size());
  for (const IdentifyResult& r : runs) ids.push_back(r.pointer);
  return reconstruct_q0(std::span<const Index>(ids), n_pointers, z);
}

}  // namespace qnd

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "qnd/kernel.hpp"

// Reading the limit pointer state off the outcome record: empirical outcome
// frequencies converge to p(.|gamma), so the minimum-relative-entropy column
// identifies gamma (maximum likelihood for multinomial counts). Repeating over
// independent runs reconstructs q0 from the collapse frequencies.

namespace qnd {

struct FrequencyHistogram {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts;
  std::int64_t total = 0;
};

FrequencyHistogram make_histogram(std::span<const int> outcomes, Index n_outcomes);

// One histogram per schedule phase; outcome k belongs to phase k mod n_phases.
std::vector<FrequencyHistogram> phase_histograms(std::span<const int> outcomes,
                                                 Index n_outcomes, std::int64_t n_phases);

struct IdentifyResult {
  Index pointer = 0;
  double margin = 0.0;  // divergence gap to the second-best pointer
  bool tie = false;     // broken deterministically by pointer order
  Eigen::VectorXd divergence;
};

IdentifyResult identify_pointer(const FrequencyHistogram& h, const MeasurementKernel& k);

// Cyclic schedules are compared phase by phase: pooled frequencies would mix
// the per-phase distributions and lose discrimination.
IdentifyResult identify_pointer(std::span<const int> outcomes, const KernelSchedule& schedule);

// Replays the Bayes recursion over a recorded outcome sequence; returns
// q_0..q_n including the prior. Identical arithmetic to the sampler, so a
// trajectory's snapshots are reproduced bit-exactly from its outcomes.
std::vector<SimplexState> replay_posterior(std::span<const int> outcomes,
                                           const KernelSchedule& schedule,
                                           const Eigen::VectorXd& q_prior);

struct ReconstructionResult {
  std::vector<std::int64_t> counts;
  Eigen::VectorXd q_hat;
  Eigen::VectorXd ci_lo;  // Wilson score interval at z
  Eigen::VectorXd ci_hi;
  std::int64_t n_runs = 0;
  double z = 3.0;
};

ReconstructionResult reconstruct_q0(std::span<const Index> identified, Index n_pointers,
                                    double z = 3.0);
ReconstructionResult reconstruct_q0(const std::vector<IdentifyResult>& runs, Index n_pointers,
                                    double z = 3.0);

}  // namespace qnd

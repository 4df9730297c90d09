#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "qnd/kernel.hpp"
#include "qnd/rng.hpp"

// Trajectory sampler and ensemble runner. Per-trajectory RNG streams are pure
// functions of (seed, index), aggregation is a sequential reduction in index
// order, so ensemble output is bit-identical for any worker count.

namespace qnd {

// Entry level into the linear-decay regime; decay-rate fit windows start at
// the first step where q(gamma) reaches this.
inline constexpr double kRateFitBasinEntry = 0.9;

struct SimConfig {
  KernelSchedule schedule = KernelSchedule::fixed(
      validate_kernel<double>(Eigen::MatrixXd::Identity(2, 2)));
  Eigen::VectorXd q0;
  std::int64_t max_steps = 1000;
  double collapse_threshold = 1.0 - 1e-6;
  std::int64_t record_every = 1;
  std::uint64_t seed = 0;
  std::int64_t n_trajectories = 1;
  // When false the chain keeps evolving to max_steps after crossing the
  // collapse threshold; required for long post-collapse decay-rate windows.
  bool stop_on_collapse = true;
  double escape_basin = 0.95;
};

void validate_config(const SimConfig& c);

enum class StopReason { Collapsed, MaxSteps, Failed };

std::string to_string(StopReason r);

struct Trajectory {
  std::vector<int> outcomes;            // outcome drawn at step n produces q_{n+1}
  std::vector<SimplexState> snapshots;  // step 0, every record_every, and the final state
  StopReason stop_reason = StopReason::MaxSteps;
  Index collapse_target = -1;           // pointer collapsed to, or argmax assignment
  bool assigned_by_argmax = false;      // true when target is the argmax at the horizon
  std::int64_t collapse_step = -1;      // first step max q >= threshold, -1 if never
  std::uint64_t stream_seed = 0;
  std::int64_t step_count = 0;
  std::string failure;
};

// Inverse-CDF draw over the fixed outcome order; entries at or below the
// underflow threshold are never drawn.
Index sample_outcome(const Eigen::VectorXd& pi, RngStream& rng);

Trajectory run_trajectory(const SimConfig& c, std::int64_t idx);

struct FitResult {
  double slope = 0.0;
  double stderr_slope = 0.0;
  std::int64_t n_points = 0;
};

// Least-squares slope of logq_n(alpha) against n over snapshot steps in
// [window_begin, window_end]; only finite logq points count. Throws
// InsufficientWindowError below 3 points.
FitResult fit_decay_rate(const Trajectory& t, Index gamma, Index alpha,
                         std::int64_t window_begin, std::int64_t window_end);

// First snapshot step with q(gamma) >= level, or -1.
std::int64_t basin_entry_step(const Trajectory& t, Index gamma,
                              double level = kRateFitBasinEntry);

struct EscapeEvent {
  std::int64_t enter_step = 0;
  std::int64_t exit_step = 0;
  Index pointer = -1;
};

// Intervals where the trajectory entered some pointer's basin
// (q >= basin_threshold) and fell back out before the run ended.
std::vector<EscapeEvent> detect_escapes(const Trajectory& t, double basin_threshold);

struct BornRow {
  Index pointer = -1;
  double q0 = 0.0;
  std::int64_t count = 0;
  double freq = 0.0;
  double sigma = 0.0;  // sqrt(q0 (1-q0) / n_assigned)
};

struct RateFitRow {
  Index collapsed_to = -1;
  Index component = -1;
  std::int64_t n_trajectories = 0;
  double mean_slope = 0.0;
  double stderr_mean = 0.0;
  double expected_rate = 0.0;  // -(cycle mean of S(gamma|alpha))
};

struct EscapeRecord {
  std::int64_t trajectory = 0;
  EscapeEvent event;
};

struct EnsembleReport {
  std::uint64_t seed = 0;
  double collapse_threshold = 0.0;
  double escape_basin = 0.0;
  std::int64_t n_trajectories = 0;
  std::int64_t n_collapsed = 0;
  std::int64_t n_max_steps = 0;
  std::int64_t n_failed = 0;
  std::vector<std::int64_t> collapse_counts;  // strict collapses per pointer
  std::vector<std::int64_t> assigned_counts;  // including argmax assignments
  std::vector<BornRow> born;
  // Ensemble martingale check: mean and sample std of q_n(alpha) over all
  // assigned trajectories, frozen at their final state once stopped.
  std::vector<std::int64_t> recorded_steps;
  Eigen::MatrixXd mean_q;  // recorded step x pointer
  Eigen::MatrixXd std_q;
  std::vector<RateFitRow> rate_fits;
  // Per-trajectory outcome counts by schedule phase: row = trajectory,
  // column = phase * n_outcomes + outcome.
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> phase_outcome_counts;
  std::vector<EscapeRecord> escapes;
  std::int64_t schedule_length = 1;
  std::int64_t n_outcomes = 0;
  std::vector<std::string> pointer_labels;
  std::vector<std::string> outcome_labels;
};

EnsembleReport run_ensemble(const SimConfig& c, int n_threads = 1);

}  // namespace qnd

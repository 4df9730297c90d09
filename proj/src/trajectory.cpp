#include "qnd/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include "qnd/rates.hpp"

namespace qnd {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TrajectorySummary {
  Index assigned = -1;
  bool collapsed = false;
  bool argmax_assigned = false;
  bool failed = false;
  std::int64_t collapse_step = -1;
  std::int64_t steps = 0;
  Eigen::MatrixXd q_grid;  // recorded grid x pointers, frozen past the end
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> phase_counts;
  std::vector<std::optional<double>> slopes;  // per component, for assigned pointer
  std::vector<EscapeEvent> escapes;
};

std::vector<std::int64_t> recording_grid(const SimConfig& c) {
  std::vector<std::int64_t> grid;
  for (std::int64_t s = 0; s <= c.max_steps; s += c.record_every) grid.push_back(s);
  if (grid.back() != c.max_steps) grid.push_back(c.max_steps);
  return grid;
}

TrajectorySummary summarize(const Trajectory& t, const SimConfig& c,
                            const std::vector<std::int64_t>& grid) {
  const Index n_pointers = c.schedule.n_pointers();
  const Index n_outcomes = c.schedule.n_outcomes();
  const std::int64_t phases = c.schedule.length();

  TrajectorySummary s;
  s.failed = t.stop_reason == StopReason::Failed;
  s.collapsed = t.stop_reason == StopReason::Collapsed;
  s.argmax_assigned = t.assigned_by_argmax;
  s.assigned = t.collapse_target;
  s.collapse_step = t.collapse_step;
  s.steps = t.step_count;

  s.q_grid.resize(static_cast<Index>(grid.size()), n_pointers);
  std::size_t si = 0;
  Eigen::RowVectorXd last = t.snapshots.front().q.transpose();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    while (si < t.snapshots.size() && t.snapshots[si].step <= grid[g]) {
      last = t.snapshots[si].q.transpose();
      ++si;
    }
    s.q_grid.row(static_cast<Index>(g)) = last;
  }

  s.phase_counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>::Zero(phases * n_outcomes);
  for (std::size_t n = 0; n < t.outcomes.size(); ++n) {
    const std::int64_t phase = static_cast<std::int64_t>(n) % phases;
    s.phase_counts(phase * n_outcomes + t.outcomes[n]) += 1;
  }

  s.slopes.assign(static_cast<std::size_t>(n_pointers), std::nullopt);
  if (s.collapsed && s.assigned >= 0) {
    const std::int64_t entry = basin_entry_step(t, s.assigned);
    if (entry >= 0) {
      for (Index a = 0; a < n_pointers; ++a) {
        if (a == s.assigned) continue;
        try {
          const FitResult f = fit_decay_rate(t, s.assigned, a, entry, t.step_count);
          s.slopes[static_cast<std::size_t>(a)] = f.slope;
        } catch (const InsufficientWindowError&) {
        }
      }
    }
  }

  if (!s.failed) s.escapes = detect_escapes(t, c.escape_basin);
  return s;
}

}  // namespace

void validate_config(const SimConfig& c) {
  if (c.q0.size() != c.schedule.n_pointers())
    throw ValidationError("q0 size does not match the schedule's pointer count");
  make_simplex_state(c.q0);  // throws if off the simplex
  if (!(c.collapse_threshold > 0.5 && c.collapse_threshold < 1.0))
    throw ValidationError("collapse threshold must lie in (0.5, 1)");
  if (!(c.escape_basin > 0.5 && c.escape_basin < 1.0))
    throw ValidationError("escape basin threshold must lie in (0.5, 1)");
  if (c.max_steps < 0) throw ValidationError("max_steps must be >= 0");
  if (c.record_every < 1) throw ValidationError("record_every must be >= 1");
  if (c.n_trajectories < 0) throw ValidationError("n_trajectories must be >= 0");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Collapsed: return "collapsed";
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::Failed: return "failed";
  }
  return "unknown";
}

Index sample_outcome(const Eigen::VectorXd& pi, RngStream& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  Index last = -1;
  for (Index i = 0; i < pi.size(); ++i) {
    if (!(pi(i) > kUnderflowThreshold)) continue;
    last = i;
    cum += pi(i);
    if (u < cum) return i;
  }
  if (last < 0) throw ZeroProbabilityOutcomeError(-1);
  return last;  // u fell into the trailing rounding gap
}

Trajectory run_trajectory(const SimConfig& c, std::int64_t idx) {
  validate_config(c);
  Trajectory t;
  t.stream_seed = derive_stream_seed(c.seed, static_cast<std::uint64_t>(idx));
  RngStream rng(t.stream_seed);

  SimplexState s = make_simplex_state(c.q0);
  t.snapshots.push_back(s);
  t.outcomes.reserve(static_cast<std::size_t>(std::min<std::int64_t>(c.max_steps, 1 << 20)));

  auto crossed = [&](const SimplexState& state) {
    return state.q.maxCoeff() >= c.collapse_threshold;
  };
  if (crossed(s)) t.collapse_step = 0;

  bool failed = false;
  while (s.step < c.max_steps && !(c.stop_on_collapse && t.collapse_step >= 0)) {
    const MeasurementKernel& k = c.schedule.at(s.step);
    const Eigen::VectorXd pi = outcome_distribution<double>(k, s.q);
    const Index i = sample_outcome(pi, rng);
    try {
      s = bayes_update(k, s, i);
    } catch (const ZeroProbabilityOutcomeError& e) {
      failed = true;
      t.failure = e.what();
      break;
    }
    t.outcomes.push_back(static_cast<int>(i));
    if (s.step % c.record_every == 0) t.snapshots.push_back(s);
    if (t.collapse_step < 0 && crossed(s)) t.collapse_step = s.step;
  }
  if (t.snapshots.back().step != s.step) t.snapshots.push_back(s);
  t.step_count = s.step;

  Index argmax = 0;
  s.q.maxCoeff(&argmax);
  if (failed) {
    t.stop_reason = StopReason::Failed;
  } else if (crossed(s)) {
    t.stop_reason = StopReason::Collapsed;
    t.collapse_target = argmax;
  } else {
    t.stop_reason = StopReason::MaxSteps;
    t.collapse_target = argmax;
    t.assigned_by_argmax = true;
  }
  return t;
}

FitResult fit_decay_rate(const Trajectory& t, Index gamma, Index alpha,
                         std::int64_t window_begin, std::int64_t window_end) {
  (void)gamma;
  std::vector<std::pair<double, double>> pts;
  for (const SimplexState& s : t.snapshots) {
    if (s.step < window_begin || s.step > window_end) continue;
    const double l = s.logq(alpha);
    if (!std::isfinite(l)) continue;
    pts.emplace_back(static_cast<double>(s.step), l);
  }
  if (pts.size() < 3)
    throw InsufficientWindowError("decay-rate fit needs at least 3 finite points, got " +
                                  std::to_string(pts.size()));
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  FitResult f;
  f.n_points = static_cast<std::int64_t>(pts.size());
  f.slope = sxy / sxx;
  double ssr = 0;
  for (const auto& [x, y] : pts) {
    const double r = y - my - f.slope * (x - mx);
    ssr += r * r;
  }
  f.stderr_slope = pts.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  return f;
}

std::int64_t basin_entry_step(const Trajectory& t, Index gamma, double level) {
  for (const SimplexState& s : t.snapshots)
    if (s.q(gamma) >= level) return s.step;
  return -1;
}

std::vector<EscapeEvent> detect_escapes(const Trajectory& t, double basin_threshold) {
  if (!(basin_threshold > 0.5 && basin_threshold < 1.0))
    throw ValidationError("basin threshold must lie in (0.5, 1)");
  std::vector<EscapeEvent> events;
  Index current = -1;
  std::int64_t enter = -1;
  for (const SimplexState& s : t.snapshots) {
    Index argmax = 0;
    const double mx = s.q.maxCoeff(&argmax);
    const Index basin = mx >= basin_threshold ? argmax : -1;
    if (basin != current) {
      if (current >= 0) events.push_back({enter, s.step, current});
      current = basin;
      enter = s.step;
    }
  }
  // Still inside a basin at the end: that is the collapse, not an escape.
  return events;
}

EnsembleReport run_ensemble(const SimConfig& c, int n_threads) {
  validate_config(c);
  if (n_threads < 1) throw ValidationError("thread count must be >= 1");
  const std::int64_t n = c.n_trajectories;
  const Index n_pointers = c.schedule.n_pointers();
  const Index n_outcomes = c.schedule.n_outcomes();
  const std::int64_t phases = c.schedule.length();
  const std::vector<std::int64_t> grid = recording_grid(c);

  std::vector<TrajectorySummary> summaries(static_cast<std::size_t>(n));
  auto work = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t idx = begin; idx < end; ++idx)
      summaries[static_cast<std::size_t>(idx)] = summarize(run_trajectory(c, idx), c, grid);
  };
  if (n_threads == 1 || n < 2) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::int64_t chunk = (n + n_threads - 1) / n_threads;
    for (int w = 0; w < n_threads; ++w) {
      const std::int64_t begin = w * chunk;
      const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  EnsembleReport r;
  r.seed = c.seed;
  r.collapse_threshold = c.collapse_threshold;
  r.escape_basin = c.escape_basin;
  r.n_trajectories = n;
  r.schedule_length = phases;
  r.n_outcomes = n_outcomes;
  r.pointer_labels = c.schedule.front().pointer_labels;
  r.outcome_labels = c.schedule.front().outcome_labels;
  r.collapse_counts.assign(static_cast<std::size_t>(n_pointers), 0);
  r.assigned_counts.assign(static_cast<std::size_t>(n_pointers), 0);
  r.recorded_steps = grid;
  r.mean_q = Eigen::MatrixXd::Zero(static_cast<Index>(grid.size()), n_pointers);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(static_cast<Index>(grid.size()), n_pointers);
  r.phase_outcome_counts.resize(n, phases * n_outcomes);

  struct SlopeAcc {
    std::int64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::vector<SlopeAcc> slope_acc(static_cast<std::size_t>(n_pointers * n_pointers));

  // Sequential reduction in index order keeps the report bit-identical for
  // any worker count.
  std::int64_t n_assigned = 0;
  for (std::int64_t idx = 0; idx < n; ++idx) {
    const TrajectorySummary& s = summaries[static_cast<std::size_t>(idx)];
    r.phase_outcome_counts.row(idx) = s.phase_counts.transpose();
    for (const EscapeEvent& e : s.escapes) r.escapes.push_back({idx, e});
    if (s.failed) {
      r.n_failed += 1;
      continue;
    }
    if (s.collapsed) {
      r.n_collapsed += 1;
      r.collapse_counts[static_cast<std::size_t>(s.assigned)] += 1;
    } else {
      r.n_max_steps += 1;
    }
    r.assigned_counts[static_cast<std::size_t>(s.assigned)] += 1;
    n_assigned += 1;
    const double inv = 1.0 / static_cast<double>(n_assigned);
    for (Index g = 0; g < static_cast<Index>(grid.size()); ++g) {
      for (Index a = 0; a < n_pointers; ++a) {
        const double delta = s.q_grid(g, a) - r.mean_q(g, a);
        r.mean_q(g, a) += delta * inv;
        m2(g, a) += delta * (s.q_grid(g, a) - r.mean_q(g, a));
      }
    }
    if (s.collapsed) {
      for (Index a = 0; a < n_pointers; ++a) {
        const auto& slope = s.slopes[static_cast<std::size_t>(a)];
        if (!slope) continue;
        SlopeAcc& acc = slope_acc[static_cast<std::size_t>(s.assigned * n_pointers + a)];
        acc.n += 1;
        const double delta = *slope - acc.mean;
        acc.mean += delta / static_cast<double>(acc.n);
        acc.m2 += delta * (*slope - acc.mean);
      }
    }
  }

  if (n_assigned > 1)
    r.std_q = (m2 / static_cast<double>(n_assigned - 1)).array().sqrt();
  else
    r.std_q = Eigen::MatrixXd::Zero(static_cast<Index>(grid.size()), n_pointers);

  for (Index a = 0; a < n_pointers; ++a) {
    BornRow row;
    row.pointer = a;
    row.q0 = c.q0(a);
    row.count = r.assigned_counts[static_cast<std::size_t>(a)];
    row.freq = n_assigned > 0 ? static_cast<double>(row.count) / static_cast<double>(n_assigned) : 0.0;
    row.sigma = n_assigned > 0
                    ? std::sqrt(row.q0 * (1.0 - row.q0) / static_cast<double>(n_assigned))
                    : 0.0;
    r.born.push_back(row);
  }

  for (Index g = 0; g < n_pointers; ++g) {
    for (Index a = 0; a < n_pointers; ++a) {
      const SlopeAcc& acc = slope_acc[static_cast<std::size_t>(g * n_pointers + a)];
      if (acc.n == 0) continue;
      RateFitRow row;
      row.collapsed_to = g;
      row.component = a;
      row.n_trajectories = acc.n;
      row.mean_slope = acc.mean;
      row.stderr_mean =
          acc.n > 1 ? std::sqrt(acc.m2 / static_cast<double>(acc.n - 1) / static_cast<double>(acc.n))
                    : 0.0;
      row.expected_rate = -schedule_mean_relative_entropy(c.schedule, g, a);
      r.rate_fits.push_back(row);
    }
  }
  return r;
}

}  // namespace qnd

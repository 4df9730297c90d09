// qnd: simulate and verify the collapse statistics of repeated indirect
// quantum non-demolition measurements.
//
// Exit codes: 0 success, 2 validation/input failure, 3 runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "qnd/enumerate.hpp"
#include "qnd/infer.hpp"
#include "qnd/io.hpp"
#include "qnd/rational.hpp"
#include "qnd/rates.hpp"
#include "qnd/trajectory.hpp"
#include "qnd/version.hpp"

namespace fs = std::filesystem;
using namespace qnd;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::optional<int> n_max;
  std::optional<double> theta;
  std::string phi_schedule;  // comma-separated radians
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trajectories;
  std::optional<std::int64_t> max_steps;
  std::string q0_csv;
  int threads = 1;
  std::string out_dir = "qnd_out";
};

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ParseError("cannot parse '" + cell + "' as a number");
    }
  }
  if (out.empty()) throw ParseError("expected a comma-separated list of numbers");
  return out;
}

// Resolve a run spec from --config and/or preset flags, flag overrides last.
io::RunSpec resolve_spec(const CommonOpts& o) {
  nlohmann::json j;
  if (!o.config_path.empty()) {
    j = nlohmann::json::parse(io::read_text(o.config_path));
  } else if (!o.preset_name.empty()) {
    if (o.preset_name != "cavity") throw ParseError("unknown preset '" + o.preset_name + "'");
    j["source"]["preset"]["type"] = "cavity";
  } else {
    throw ParseError("either --config or --preset is required");
  }
  if (j.contains("source") && j["source"].contains("preset")) {
    auto& pj = j["source"]["preset"];
    if (o.n_max) pj["n_max"] = *o.n_max;
    if (o.theta) pj["theta"] = *o.theta;
    if (!o.phi_schedule.empty()) pj["phi_schedule"] = parse_double_list(o.phi_schedule);
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.trajectories) j["trajectories"] = *o.trajectories;
  if (o.max_steps) j["max_steps"] = *o.max_steps;
  if (!o.q0_csv.empty()) {
    if (o.q0_csv == "uniform")
      j["q0"] = "uniform";
    else
      j["q0"] = parse_double_list(o.q0_csv);
  }
  const fs::path base =
      o.config_path.empty() ? fs::path{} : fs::path(o.config_path).parent_path();
  return io::run_spec_from_json(j, base);
}

void print_rate_summary(const KernelSchedule& schedule) {
  double s_min = std::numeric_limits<double>::infinity(), s_max_seen = 0.0;
  double l_min = 1.0, l_max = 0.0;
  const Index n = schedule.n_pointers();
  for (Index g = 0; g < n; ++g) {
    for (Index a = 0; a < n; ++a) {
      if (g == a) continue;
      const double s = schedule_mean_relative_entropy(schedule, g, a);
      s_min = std::min(s_min, s);
      if (std::isfinite(s)) s_max_seen = std::max(s_max_seen, s);
      const ChernoffResult c = chernoff_exponent(schedule.front(), g, a);
      l_min = std::min(l_min, c.lambda_star);
      l_max = std::max(l_max, c.lambda_star);
    }
  }
  std::cout << "rates: cycle-mean S in [" << io::format_double(s_min) << ", "
            << io::format_double(s_max_seen) << "] nats/step"
            << (std::isinf(s_min) ? " (all infinite)" : "") << "\n"
            << "rates: phase-0 lambda* in [" << io::format_double(l_min) << ", "
            << io::format_double(l_max) << "]\n";
}

int cmd_validate(const CommonOpts& o) {
  const io::RunSpec spec = resolve_spec(o);
  const KernelSchedule& schedule = spec.sim.schedule;
  std::cout << "config digest: " << io::config_digest(spec.effective) << "\n";
  std::cout << "pointers: " << schedule.n_pointers() << ", outcomes: " << schedule.n_outcomes()
            << ", schedule length: " << schedule.length() << "\n";
  const auto pairs = schedule_degenerate_pairs(schedule);
  if (pairs.empty()) {
    std::cout << "degeneracy: none (all pointer pairs distinguishable)\n";
  } else {
    std::cout << "WARNING: degenerate pointer pairs (no outcome separates them):";
    const auto& labels = schedule.front().pointer_labels;
    for (const auto& [a, b] : pairs)
      std::cout << " (" << labels[static_cast<std::size_t>(a)] << ","
                << labels[static_cast<std::size_t>(b)] << ")";
    std::cout << "\n";
  }
  print_rate_summary(schedule);
  std::cout << "OK\n";
  return 0;
}

int cmd_simulate(const CommonOpts& o, std::int64_t save_trajectories) {
  const io::RunSpec spec = resolve_spec(o);
  const std::string digest = io::config_digest(spec.effective);
  fs::create_directories(o.out_dir);
  const fs::path dir(o.out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  const EnsembleReport report = run_ensemble(spec.sim, o.threads);
  const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<io::ManifestEntry> outputs;
  auto emit = [&](const std::string& name, const std::string& text) {
    io::write_text(dir / name, text);
    outputs.push_back({name, io::fnv1a64(text)});
  };

  emit("ensemble_report.json", io::report_to_json(report).dump(2) + "\n");
  emit("outcome_frequencies.csv", io::outcome_frequencies_csv(report));
  {
    std::string rates_csv;
    io::write_rate_tables_csv(dir / "rate_table.csv", spec.sim.schedule);
    rates_csv = io::read_text(dir / "rate_table.csv");
    outputs.push_back({"rate_table.csv", io::fnv1a64(rates_csv)});
  }

  const auto& labels = spec.sim.schedule.front();
  const std::int64_t n_save = std::min<std::int64_t>(save_trajectories, spec.sim.n_trajectories);
  for (std::int64_t idx = 0; idx < n_save; ++idx) {
    const Trajectory t = run_trajectory(spec.sim, idx);
    char name[40];
    std::snprintf(name, sizeof(name), "trajectory_%03lld.csv", static_cast<long long>(idx));
    io::write_trajectory_csv(dir / name, t, labels.pointer_labels, labels.outcome_labels);
    outputs.push_back({name, io::fnv1a64(io::read_text(dir / name))});
  }
  if (spec.sim.n_trajectories > 0) {
    // Full-resolution replay of trajectory 0 for collapse plots; the stream
    // seed depends only on (seed, index), so this is the same path.
    SimConfig plot_cfg = spec.sim;
    plot_cfg.record_every = 1;
    const Trajectory t = run_trajectory(plot_cfg, 0);
    io::write_trajectory_csv(dir / "plot_data.csv", t, labels.pointer_labels,
                             labels.outcome_labels);
    outputs.push_back({"plot_data.csv", io::fnv1a64(io::read_text(dir / "plot_data.csv"))});
  }
  io::write_manifest(dir / "manifest.json", digest, spec.sim.seed, outputs);

  std::cout << "simulated " << report.n_trajectories << " trajectories in "
            << io::format_double(dt) << " s (" << report.n_collapsed << " collapsed, "
            << report.n_max_steps << " hit max steps, " << report.n_failed << " failed)\n";
  std::cout << "outputs in " << dir.string() << " (digest " << digest << ")\n";
  return 0;
}

int cmd_rates(const CommonOpts& o) {
  const io::RunSpec spec = resolve_spec(o);
  fs::create_directories(o.out_dir);
  const fs::path path = fs::path(o.out_dir) / "rate_table.csv";
  io::write_rate_tables_csv(path, spec.sim.schedule);
  print_rate_summary(spec.sim.schedule);
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_enumerate(const CommonOpts& o, int depth, bool rational, std::int64_t path_cap) {
  const io::RunSpec spec = resolve_spec(o);
  fs::create_directories(o.out_dir);
  EnumerateOptions opts;
  if (path_cap > 0) opts.path_cap = path_cap;

  bool pass = true;
  std::string csv;
  if (rational) {
    if (!spec.effective["source"].contains("kernel"))
      throw ParseError("--rational needs an inline rational kernel source");
    const RationalKernel k = io::rational_kernel_from_json(spec.effective["source"]["kernel"]);
    VectorX<Rational> q0(k.n_pointers());
    if (spec.effective["q0"].is_string()) {
      for (Index a = 0; a < q0.size(); ++a) q0(a) = Rational(1, static_cast<long>(q0.size()));
    } else {
      q0 = io::rational_vector_from_json(spec.effective["q0"]);
    }
    const auto tree = enumerate_tree<Rational>(k, q0, depth, opts);
    std::cout << "paths: " << tree.leaves.size() << "\n";
    const Rational total = tree.total_weight();
    std::cout << "total weight == 1: " << (total == 1 ? "yes" : "NO") << "\n";
    for (Index a = 0; a < q0.size(); ++a) {
      const Rational e = exact_expectation(tree, a);
      const bool ok = e == q0(a);
      pass = pass && ok;
      std::cout << "E[q_" << depth << "(" << k.pointer_labels[static_cast<std::size_t>(a)]
                << ")] == q0: " << (ok ? "exact" : "VIOLATED") << "\n";
    }
    pass = pass && total == 1;
    csv = io::enumeration_csv(tree, k.pointer_labels, k.outcome_labels);
  } else {
    const auto tree = enumerate_tree(spec.sim.schedule, spec.sim.q0, depth, opts);
    std::cout << "paths: " << tree.leaves.size() << "\n";
    double max_dev = 0.0;
    for (Index a = 0; a < spec.sim.q0.size(); ++a)
      max_dev = std::max(max_dev, std::abs(exact_expectation(tree, a) - spec.sim.q0(a)));
    std::cout << "max |E[q_n] - q0| = " << io::format_double(max_dev) << "\n";
    pass = max_dev < 1e-10;
    const auto& labels = spec.sim.schedule.front();
    csv = io::enumeration_csv(tree, labels.pointer_labels, labels.outcome_labels);
  }
  const fs::path path = fs::path(o.out_dir) / "enumeration.csv";
  io::write_text(path, csv);
  std::cout << "wrote " << path.string() << "\n";
  std::cout << "martingale check: " << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? 0 : 3;
}

int cmd_identify(const CommonOpts& o, const std::string& outcomes_path,
                 const std::string& prior_csv, bool replay) {
  const io::RunSpec spec = resolve_spec(o);
  const KernelSchedule& schedule = spec.sim.schedule;
  const std::vector<int> outcomes =
      io::load_outcomes_file(outcomes_path, schedule.front().outcome_labels);
  if (outcomes.empty()) throw ParseError("no outcomes found in " + outcomes_path);

  const IdentifyResult id = identify_pointer(outcomes, schedule);
  const auto& plabels = schedule.front().pointer_labels;
  std::cout << "outcomes: " << outcomes.size() << "\n";
  std::cout << "identified pointer: " << plabels[static_cast<std::size_t>(id.pointer)]
            << " (margin " << io::format_double(id.margin) << (id.tie ? ", TIE" : "") << ")\n";

  if (replay) {
    Eigen::VectorXd prior = prior_csv.empty() || prior_csv == "uniform"
                                ? uniform_simplex(schedule.n_pointers())
                                : [&] {
                                    const auto v = parse_double_list(prior_csv);
                                    return Eigen::Map<const Eigen::VectorXd>(
                                               v.data(), static_cast<Index>(v.size()))
                                        .eval();
                                  }();
    if (prior(id.pointer) == 0.0)
      std::cout << "WARNING: identified pointer has zero prior mass; the replayed "
                   "posterior can never reach it\n";
    const std::vector<SimplexState> states = replay_posterior(outcomes, schedule, prior);
    Trajectory t;
    t.snapshots = states;
    for (int i : outcomes) t.outcomes.push_back(i);
    t.step_count = static_cast<std::int64_t>(outcomes.size());
    fs::create_directories(o.out_dir);
    const fs::path path = fs::path(o.out_dir) / "replay_posterior.csv";
    io::write_trajectory_csv(path, t, plabels, schedule.front().outcome_labels);
    std::cout << "replayed posterior -> " << path.string() << " (final argmax "
              << plabels[static_cast<std::size_t>([&] {
                   Index am = 0;
                   states.back().q.maxCoeff(&am);
                   return am;
                 }())]
              << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repeated indirect QND measurement simulator"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOpts o;
  auto add_common = [&](CLI::App* cmd, bool with_sim_flags) {
    cmd->add_option("--config", o.config_path, "run configuration JSON")
        ->envname("QND_CONFIG");
    cmd->add_option("--preset", o.preset_name, "built-in preset (cavity)")
        ->envname("QND_PRESET");
    cmd->add_option("--n-max", o.n_max, "cavity photon truncation")->envname("QND_N_MAX");
    cmd->add_option("--theta", o.theta, "cavity per-photon rotation (rad)")
        ->envname("QND_THETA");
    cmd->add_option("--phi-schedule", o.phi_schedule,
                    "comma-separated detection angles (rad)")
        ->envname("QND_PHI_SCHEDULE");
    cmd->add_option("--out-dir", o.out_dir, "output directory")->envname("QND_OUT_DIR");
    cmd->add_option("--q0", o.q0_csv, "initial distribution ('uniform' or comma list)")
        ->envname("QND_Q0");
    if (with_sim_flags) {
      cmd->add_option("--seed", o.seed, "ensemble seed")->envname("QND_SEED");
      cmd->add_option("--trajectories", o.trajectories, "trajectory count")
          ->envname("QND_TRAJECTORIES");
      cmd->add_option("--max-steps", o.max_steps, "steps per trajectory")
          ->envname("QND_MAX_STEPS");
      cmd->add_option("--threads", o.threads, "worker threads (does not affect results)")
          ->envname("QND_THREADS");
    }
  };

  CLI::App* validate = app.add_subcommand("validate", "validate a configuration");
  add_common(validate, false);

  CLI::App* simulate = app.add_subcommand("simulate", "run trajectories / an ensemble");
  add_common(simulate, true);
  std::int64_t save_trajectories = 5;
  simulate->add_option("--save-trajectories", save_trajectories,
                       "how many per-trajectory CSVs to write");

  CLI::App* rates = app.add_subcommand("rates", "export relative-entropy / Chernoff tables");
  add_common(rates, false);

  CLI::App* enumerate = app.add_subcommand("enumerate", "exact outcome-tree enumeration");
  add_common(enumerate, false);
  int depth = 8;
  bool rational = false;
  std::int64_t path_cap = 0;
  enumerate->add_option("--depth", depth, "tree depth");
  enumerate->add_flag("--rational", rational, "exact rational arithmetic");
  enumerate->add_option("--path-cap", path_cap, "override the path cap");

  CLI::App* identify = app.add_subcommand("identify", "infer the limit pointer state");
  add_common(identify, false);
  std::string outcomes_path, prior_csv;
  bool replay = false;
  identify->add_option("--outcomes", outcomes_path, "recorded outcomes (CSV)")->required();
  identify->add_option("--prior", prior_csv, "replay prior ('uniform' or comma list)");
  identify->add_flag("--replay", replay, "write the replayed posterior trace");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(o);
    if (simulate->parsed()) return cmd_simulate(o, save_trajectories);
    if (rates->parsed()) return cmd_rates(o);
    if (enumerate->parsed()) return cmd_enumerate(o, depth, rational, path_cap);
    if (identify->parsed()) return cmd_identify(o, outcomes_path, prior_csv, replay);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

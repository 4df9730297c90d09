#include "qnd/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "qnd/version.hpp"

namespace qnd::io {

namespace {

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<std::string> string_list(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (v.is_string())
      out.push_back(v.get<std::string>());
    else
      out.push_back(v.dump());
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trimmed(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.erase(s.begin());
  while (!s.empty() && is_space(s.back())) s.pop_back();
  return s;
}

Eigen::MatrixXcd complex_matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ParseError(what + " must be a non-empty array");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j.at(0).size());
  Eigen::MatrixXcd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Index>(row.size()) != cols) throw ParseError(what + " is ragged");
    for (Index c = 0; c < cols; ++c) {
      const auto& cell = row.at(static_cast<std::size_t>(c));
      if (!cell.is_array() || cell.size() != 2)
        throw ParseError(what + " entries must be [re, im] pairs");
      m(r, c) = std::complex<double>(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  return m;
}

Rational rational_from_json_value(const nlohmann::json& v) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (v.is_number_float()) {
    Rational r(v.get<double>());  // exact binary expansion of the double
    r.canonicalize();
    return r;
  }
  throw ParseError("expected a rational value, got " + v.dump());
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MeasurementKernel kernel_from_json(const nlohmann::json& j) {
  if (!j.contains("probs")) throw ParseError("kernel JSON needs a 'probs' matrix");
  const auto& pj = j.at("probs");
  if (!pj.is_array() || pj.empty()) throw ParseError("'probs' must be a non-empty array of rows");
  const Index rows = static_cast<Index>(pj.size());
  const Index cols = static_cast<Index>(pj.at(0).size());
  Eigen::MatrixXd probs(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = pj.at(static_cast<std::size_t>(r));
    if (static_cast<Index>(row.size()) != cols) throw ParseError("'probs' is ragged");
    for (Index c = 0; c < cols; ++c) probs(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  std::vector<std::string> outcomes, pointers;
  if (j.contains("outcomes")) outcomes = string_list(j.at("outcomes"), "'outcomes'");
  if (j.contains("pointers")) pointers = string_list(j.at("pointers"), "'pointers'");
  const double tol = j.value("degeneracy_tol", kDegeneracyTol);
  return validate_kernel<double>(std::move(probs), std::move(outcomes), std::move(pointers), tol);
}

nlohmann::ordered_json kernel_to_json(const MeasurementKernel& k) {
  json j;
  j["outcomes"] = k.outcome_labels;
  j["pointers"] = k.pointer_labels;
  json rows = json::array();
  for (Index i = 0; i < k.n_outcomes(); ++i) {
    json row = json::array();
    for (Index a = 0; a < k.n_pointers(); ++a) row.push_back(k.probs(i, a));
    rows.push_back(row);
  }
  j["probs"] = rows;
  return j;
}

MeasurementKernel load_kernel_file(const std::filesystem::path& path) {
  if (path.extension() == ".json") return kernel_from_json(parse_json_file(path));
  // CSV: header is `outcome,<pointer labels...>`, each row `label,<values...>`.
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty kernel file");
  const std::vector<std::string> header = split_csv_line(trimmed(line));
  if (header.size() < 2) throw ParseError(path.string() + ": kernel header needs pointer labels");
  std::vector<std::string> pointers(header.begin() + 1, header.end());
  std::vector<std::string> outcomes;
  std::vector<std::vector<double>> rows;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trimmed(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": wrong cell count");
    outcomes.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      try {
        row.push_back(std::stod(cells[c]));
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": cannot parse '" + cells[c] + "' as a number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": kernel has no outcome rows");
  Eigen::MatrixXd probs(static_cast<Index>(rows.size()), static_cast<Index>(pointers.size()));
  for (Index r = 0; r < probs.rows(); ++r)
    for (Index c = 0; c < probs.cols(); ++c)
      probs(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return validate_kernel<double>(std::move(probs), std::move(outcomes), std::move(pointers));
}

RationalKernel rational_kernel_from_json(const nlohmann::json& j) {
  if (!j.contains("probs")) throw ParseError("kernel JSON needs a 'probs' matrix");
  const auto& pj = j.at("probs");
  if (!pj.is_array() || pj.empty()) throw ParseError("'probs' must be a non-empty array of rows");
  const Index rows = static_cast<Index>(pj.size());
  const Index cols = static_cast<Index>(pj.at(0).size());
  MatrixX<Rational> probs(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = pj.at(static_cast<std::size_t>(r));
    if (static_cast<Index>(row.size()) != cols) throw ParseError("'probs' is ragged");
    for (Index c = 0; c < cols; ++c)
      probs(r, c) = rational_from_json_value(row.at(static_cast<std::size_t>(c)));
  }
  std::vector<std::string> outcomes, pointers;
  if (j.contains("outcomes")) outcomes = string_list(j.at("outcomes"), "'outcomes'");
  if (j.contains("pointers")) pointers = string_list(j.at("pointers"), "'pointers'");
  return validate_kernel<Rational>(std::move(probs), std::move(outcomes), std::move(pointers));
}

VectorX<Rational> rational_vector_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("expected a non-empty array of rationals");
  VectorX<Rational> v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i)
    v(i) = rational_from_json_value(j.at(static_cast<std::size_t>(i)));
  return v;
}

ProbeModel model_from_json(const nlohmann::json& j) {
  ProbeModel m;
  if (!j.contains("psi") || !j.contains("unitaries"))
    throw ParseError("probe model JSON needs 'psi' and 'unitaries'");
  {
    const auto& pj = j.at("psi");
    if (!pj.is_array() || pj.empty()) throw ParseError("'psi' must be a non-empty array");
    m.psi.resize(static_cast<Index>(pj.size()));
    for (Index i = 0; i < m.psi.size(); ++i) {
      const auto& cell = pj.at(static_cast<std::size_t>(i));
      if (!cell.is_array() || cell.size() != 2)
        throw ParseError("'psi' entries must be [re, im] pairs");
      m.psi(i) = std::complex<double>(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  for (const auto& uj : j.at("unitaries"))
    m.unitaries.push_back(complex_matrix_from_json(uj, "'unitaries' entry"));
  if (j.contains("basis")) m.basis = complex_matrix_from_json(j.at("basis"), "'basis'");
  if (j.contains("outcomes")) m.outcome_labels = string_list(j.at("outcomes"), "'outcomes'");
  if (j.contains("pointers")) m.pointer_labels = string_list(j.at("pointers"), "'pointers'");
  validate_model(m);
  return m;
}

RunSpec run_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  const int version = j.value("version", 1);
  if (version != 1) throw ParseError("unsupported config version " + std::to_string(version));
  if (!j.contains("source")) throw ParseError("config needs a 'source' object");
  const auto& src = j.at("source");

  RunSpec spec;
  json eff;
  eff["version"] = 1;

  if (src.contains("preset")) {
    const auto& pj = src.at("preset");
    if (pj.value("type", "cavity") != "cavity")
      throw ParseError("unknown preset type '" + pj.value("type", "") + "'");
    CavityPreset preset;
    preset.n_max = pj.value("n_max", preset.n_max);
    preset.theta = pj.value("theta", preset.theta);
    if (pj.contains("phi_schedule"))
      preset.phi_schedule = pj.at("phi_schedule").get<std::vector<double>>();
    validate_preset(preset);
    spec.preset = preset;
    spec.sim.schedule = cavity_schedule(preset);
    json pe;
    pe["type"] = "cavity";
    pe["n_max"] = preset.n_max;
    pe["theta"] = preset.theta;
    pe["phi_schedule"] = preset.phi_schedule;
    eff["source"]["preset"] = pe;
  } else if (src.contains("model") || src.contains("model_path")) {
    const nlohmann::json mj = src.contains("model")
                                  ? src.at("model")
                                  : parse_json_file(base_dir / src.at("model_path").get<std::string>());
    spec.model = model_from_json(mj);
    spec.sim.schedule = KernelSchedule::fixed(kernel_from_model(*spec.model));
    eff["source"]["model"] = nlohmann::ordered_json(mj);
  } else if (src.contains("kernel") || src.contains("kernel_path")) {
    const nlohmann::json kj = src.contains("kernel")
                                  ? src.at("kernel")
                                  : parse_json_file(base_dir / src.at("kernel_path").get<std::string>());
    spec.kernel_source = kj;
    spec.sim.schedule = KernelSchedule::fixed(kernel_from_json(kj));
    eff["source"]["kernel"] = nlohmann::ordered_json(kj);
  } else if (src.contains("kernels")) {
    std::vector<MeasurementKernel> ks;
    for (const auto& kj : src.at("kernels")) ks.push_back(kernel_from_json(kj));
    spec.sim.schedule = KernelSchedule::cyclic(std::move(ks));
    eff["source"]["kernels"] = nlohmann::ordered_json(src.at("kernels"));
  } else {
    throw ParseError("config 'source' needs one of: preset, kernel, kernel_path, kernels, "
                     "model, model_path");
  }

  const Index n_pointers = spec.sim.schedule.n_pointers();
  if (!j.contains("q0") || (j.at("q0").is_string() && j.at("q0") == "uniform")) {
    spec.sim.q0 = uniform_simplex(n_pointers);
    eff["q0"] = "uniform";
  } else {
    const auto q = j.at("q0").get<std::vector<double>>();
    spec.sim.q0 = Eigen::Map<const Eigen::VectorXd>(q.data(), static_cast<Index>(q.size()));
    eff["q0"] = q;
  }

  spec.sim.seed = j.value("seed", std::uint64_t{0});
  spec.sim.n_trajectories = j.value("trajectories", std::int64_t{1});
  spec.sim.max_steps = j.value("max_steps", std::int64_t{1000});
  spec.sim.collapse_threshold = j.value("collapse_threshold", 1.0 - 1e-6);
  spec.sim.record_every = j.value("record_every", std::int64_t{1});
  spec.sim.stop_on_collapse = j.value("stop_on_collapse", true);
  spec.sim.escape_basin = j.value("escape_basin", 0.95);
  validate_config(spec.sim);

  eff["seed"] = spec.sim.seed;
  eff["trajectories"] = spec.sim.n_trajectories;
  eff["max_steps"] = spec.sim.max_steps;
  eff["collapse_threshold"] = spec.sim.collapse_threshold;
  eff["record_every"] = spec.sim.record_every;
  eff["stop_on_collapse"] = spec.sim.stop_on_collapse;
  eff["escape_basin"] = spec.sim.escape_basin;
  spec.effective = std::move(eff);
  return spec;
}

RunSpec load_run_spec(const std::filesystem::path& path) {
  return run_spec_from_json(parse_json_file(path), path.parent_path());
}

std::string config_digest(const json& effective) {
  // Canonicalize through the key-sorting json type before hashing.
  const std::string canonical = nlohmann::json(effective).dump();
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t,
                          const std::vector<std::string>& pointer_labels,
                          const std::vector<std::string>& outcome_labels) {
  std::string out = "step";
  for (const std::string& l : pointer_labels) out += ",q_" + l;
  out += ",outcome\n";
  for (const SimplexState& s : t.snapshots) {
    out += std::to_string(s.step);
    for (Index a = 0; a < s.q.size(); ++a) out += ',' + format_double(s.q(a));
    // The outcome drawn at this step (it produced the next state).
    const std::size_t n = static_cast<std::size_t>(s.step);
    out += ',';
    if (n < t.outcomes.size())
      out += outcome_labels[static_cast<std::size_t>(t.outcomes[n])];
    out += '\n';
  }
  write_text(path, out);
}

void write_rate_tables_csv(const std::filesystem::path& path, const KernelSchedule& schedule) {
  std::string out = "phase,gamma,alpha,S,lambda_star,s_star,boundary,degenerate\n";
  const auto& labels = schedule.front().pointer_labels;
  for (std::int64_t l = 0; l < schedule.length(); ++l) {
    const RateTable t = rate_table(schedule.kernels()[static_cast<std::size_t>(l)]);
    for (Index g = 0; g < t.S.rows(); ++g) {
      for (Index a = 0; a < t.S.cols(); ++a) {
        if (g == a) continue;
        out += std::to_string(l) + ',' + labels[static_cast<std::size_t>(g)] + ',' +
               labels[static_cast<std::size_t>(a)] + ',' + format_double(t.S(g, a)) + ',' +
               format_double(t.lambda_star(g, a)) + ',' + format_double(t.s_star(g, a)) + ',' +
               (t.boundary(g, a) ? "1" : "0") + ',' + (t.degenerate(g, a) ? "1" : "0") + '\n';
      }
    }
  }
  for (Index g = 0; g < schedule.n_pointers(); ++g)
    for (Index a = 0; a < schedule.n_pointers(); ++a) {
      if (g == a) continue;
      out += "mean," + labels[static_cast<std::size_t>(g)] + ',' +
             labels[static_cast<std::size_t>(a)] + ',' +
             format_double(schedule_mean_relative_entropy(schedule, g, a)) + ",,,,\n";
    }
  write_text(path, out);
}

json report_to_json(const EnsembleReport& r) {
  json j;
  j["seed"] = r.seed;
  j["n_trajectories"] = r.n_trajectories;
  j["collapse_threshold"] = format_double(r.collapse_threshold);
  j["escape_basin"] = format_double(r.escape_basin);
  j["n_collapsed"] = r.n_collapsed;
  j["n_max_steps"] = r.n_max_steps;
  j["n_failed"] = r.n_failed;
  j["pointers"] = r.pointer_labels;
  j["outcomes"] = r.outcome_labels;
  j["collapse_counts"] = r.collapse_counts;
  j["assigned_counts"] = r.assigned_counts;

  json born = json::array();
  for (const BornRow& b : r.born) {
    json row;
    row["pointer"] = r.pointer_labels[static_cast<std::size_t>(b.pointer)];
    row["q0"] = format_double(b.q0);
    row["count"] = b.count;
    row["freq"] = format_double(b.freq);
    row["sigma"] = format_double(b.sigma);
    born.push_back(row);
  }
  j["born"] = born;

  json mart;
  mart["steps"] = r.recorded_steps;
  json means = json::array(), stds = json::array();
  for (Index g = 0; g < r.mean_q.rows(); ++g) {
    json mrow = json::array(), srow = json::array();
    for (Index a = 0; a < r.mean_q.cols(); ++a) {
      mrow.push_back(format_double(r.mean_q(g, a)));
      srow.push_back(format_double(r.std_q(g, a)));
    }
    means.push_back(mrow);
    stds.push_back(srow);
  }
  mart["mean_q"] = means;
  mart["std_q"] = stds;
  j["martingale"] = mart;

  json fits = json::array();
  for (const RateFitRow& f : r.rate_fits) {
    json row;
    row["collapsed_to"] = r.pointer_labels[static_cast<std::size_t>(f.collapsed_to)];
    row["component"] = r.pointer_labels[static_cast<std::size_t>(f.component)];
    row["n_trajectories"] = f.n_trajectories;
    row["mean_slope"] = format_double(f.mean_slope);
    row["stderr_mean"] = format_double(f.stderr_mean);
    row["expected_rate"] = format_double(f.expected_rate);
    fits.push_back(row);
  }
  j["rate_fits"] = fits;

  json escapes = json::array();
  for (const EscapeRecord& e : r.escapes) {
    json row;
    row["trajectory"] = e.trajectory;
    row["enter_step"] = e.event.enter_step;
    row["exit_step"] = e.event.exit_step;
    row["pointer"] = r.pointer_labels[static_cast<std::size_t>(e.event.pointer)];
    escapes.push_back(row);
  }
  j["escapes"] = escapes;
  return j;
}

void write_report_json(const std::filesystem::path& path, const EnsembleReport& r) {
  write_text(path, report_to_json(r).dump(2) + "\n");
}

std::string outcome_frequencies_csv(const EnsembleReport& r) {
  std::string out = "trajectory";
  for (std::int64_t l = 0; l < r.schedule_length; ++l)
    for (Index i = 0; i < r.n_outcomes; ++i)
      out += ",phase" + std::to_string(l) + "_" + r.outcome_labels[static_cast<std::size_t>(i)];
  out += "\n";
  for (Index t = 0; t < r.phase_outcome_counts.rows(); ++t) {
    out += std::to_string(t);
    for (Index c = 0; c < r.phase_outcome_counts.cols(); ++c)
      out += ',' + std::to_string(r.phase_outcome_counts(t, c));
    out += '\n';
  }
  return out;
}

std::vector<int> load_outcomes_file(const std::filesystem::path& path,
                                    const std::vector<std::string>& outcome_labels) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  auto label_index = [&](const std::string& cell) -> int {
    for (std::size_t i = 0; i < outcome_labels.size(); ++i)
      if (outcome_labels[i] == cell) return static_cast<int>(i);
    try {
      const int v = std::stoi(cell);
      if (v >= 0 && v < static_cast<int>(outcome_labels.size())) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("unknown outcome label '" + cell + "' in " + path.string());
  };

  std::string line;
  std::vector<int> outcomes;
  std::int64_t outcome_col = -1;
  bool first = true;
  while (std::getline(in, line)) {
    line = trimmed(line);
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (first) {
      first = false;
      for (std::size_t c = 0; c < cells.size(); ++c)
        if (cells[c] == "outcome") outcome_col = static_cast<std::int64_t>(c);
      if (outcome_col >= 0) continue;  // header row of a trajectory CSV
    }
    if (outcome_col >= 0) {
      if (static_cast<std::int64_t>(cells.size()) <= outcome_col) continue;
      const std::string cell = trimmed(cells[static_cast<std::size_t>(outcome_col)]);
      if (cell.empty()) continue;  // final snapshot row has no outcome
      outcomes.push_back(label_index(cell));
    } else {
      outcomes.push_back(label_index(trimmed(cells[0])));
    }
  }
  return outcomes;
}

void write_manifest(const std::filesystem::path& path, const std::string& config_digest,
                    std::uint64_t seed, const std::vector<ManifestEntry>& outputs) {
  json j;
  j["artifact_version"] = kVersion;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["created_utc"] = stamp;
  json files = json::array();
  for (const ManifestEntry& e : outputs) {
    json row;
    row["path"] = e.path;
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(e.fnv));
    row["fnv1a64"] = buf;
    files.push_back(row);
  }
  j["outputs"] = files;
  write_text(path, j.dump(2) + "\n");
}

}  // namespace qnd::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnd/enumerate.hpp"
#include "qnd/probe.hpp"
#include "qnd/rates.hpp"
#include "qnd/rational.hpp"
#include "qnd/trajectory.hpp"

// File formats: JSON for configs, kernels, models and reports; CSV for
// tabular outputs. Field names are documented in docs/formats.md. All writers
// format doubles with format_double so outputs are byte-stable.

namespace qnd::io {

using json = nlohmann::ordered_json;

// Shortest-width fixed formatting that round-trips any double ("%.17g").
std::string format_double(double x);

std::uint64_t fnv1a64(std::string_view bytes);

// ---- kernels ----

MeasurementKernel kernel_from_json(const nlohmann::json& j);
nlohmann::ordered_json kernel_to_json(const MeasurementKernel& k);
MeasurementKernel load_kernel_file(const std::filesystem::path& path);

// Rational entries accept "3/4" strings, integers, and doubles (converted via
// their exact binary expansion).
RationalKernel rational_kernel_from_json(const nlohmann::json& j);
VectorX<Rational> rational_vector_from_json(const nlohmann::json& j);

// ---- probe models ----

ProbeModel model_from_json(const nlohmann::json& j);

// ---- run configuration ----

struct RunSpec {
  SimConfig sim;
  std::optional<CavityPreset> preset;
  std::optional<ProbeModel> model;
  std::optional<nlohmann::json> kernel_source;  // raw kernel JSON when given inline
  json effective;                               // fully resolved config, digest input
};

RunSpec run_spec_from_json(const nlohmann::json& j,
                           const std::filesystem::path& base_dir = {});
RunSpec load_run_spec(const std::filesystem::path& path);

std::string config_digest(const json& effective);

// ---- tabular writers ----

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t,
                          const std::vector<std::string>& pointer_labels,
                          const std::vector<std::string>& outcome_labels);

// Per-phase rate tables plus cycle-mean relative entropies.
void write_rate_tables_csv(const std::filesystem::path& path, const KernelSchedule& schedule);

template <class Scalar>
std::string enumeration_csv(const OutcomeTree<Scalar>& tree,
                            const std::vector<std::string>& pointer_labels,
                            const std::vector<std::string>& outcome_labels);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// ---- ensemble report ----

json report_to_json(const EnsembleReport& r);
void write_report_json(const std::filesystem::path& path, const EnsembleReport& r);

// Per-trajectory outcome counts by phase, one row per trajectory.
std::string outcome_frequencies_csv(const EnsembleReport& r);

// ---- outcome records ----

// Accepts a trajectory CSV (uses its `outcome` column) or a bare one-label-
// per-line file. Labels are matched against outcome_labels; bare integer
// indices are accepted too.
std::vector<int> load_outcomes_file(const std::filesystem::path& path,
                                    const std::vector<std::string>& outcome_labels);

// ---- manifest ----

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::uint64_t fnv = 0;
};

void write_manifest(const std::filesystem::path& path, const std::string& config_digest,
                    std::uint64_t seed, const std::vector<ManifestEntry>& outputs);

// ---- template definitions ----

template <class Scalar>
std::string enumeration_csv(const OutcomeTree<Scalar>& tree,
                            const std::vector<std::string>& pointer_labels,
                            const std::vector<std::string>& outcome_labels) {
  std::string out = "path,weight";
  for (const std::string& l : pointer_labels) out += ",q_" + l;
  out += "\n";
  for (const auto& leaf : tree.leaves) {
    std::string path;
    for (std::int32_t i : leaf.path) {
      if (!path.empty()) path += '|';
      path += outcome_labels[static_cast<std::size_t>(i)];
    }
    out += path.empty() ? "-" : path;
    out += ',' + format_double(ScalarTraits<Scalar>::to_double(leaf.weight));
    for (Index a = 0; a < leaf.q.size(); ++a)
      out += ',' + format_double(ScalarTraits<Scalar>::to_double(leaf.q(a)));
    out += '\n';
  }
  return out;
}

}  // namespace qnd::io

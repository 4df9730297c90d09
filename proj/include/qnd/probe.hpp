#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "qnd/kernel.hpp"

// Quantum layer: builds measurement kernels from an explicit probe model
// (probe state, one unitary per pointer, measurement basis) and tracks the
// complex pointer amplitudes alongside the simplex track.

namespace qnd {

inline constexpr double kUnitarityTol = 1e-10;

struct ProbeModel {
  Eigen::VectorXcd psi;                     // probe initial state, unit norm
  std::vector<Eigen::MatrixXcd> unitaries;  // one d x d operator per pointer
  // Measurement basis as columns; empty means the coordinate basis.
  Eigen::MatrixXcd basis;
  std::vector<std::string> outcome_labels;
  std::vector<std::string> pointer_labels;

  Index dim() const { return psi.size(); }
  Index n_pointers() const { return static_cast<Index>(unitaries.size()); }
};

void validate_model(const ProbeModel& m);

// Probe amplitudes <i|U_alpha|psi> for one pointer, expressed in the
// measurement basis.
Eigen::VectorXcd measured_amplitudes(const ProbeModel& m, Index alpha);

// p(i|alpha) = |<i|U_alpha|psi>|^2. Columns sum to 1 up to float error
// because U_alpha is unitary; no renormalization is applied.
MeasurementKernel kernel_from_model(const ProbeModel& m);

struct AmplitudeState {
  Eigen::VectorXcd amps;  // <alpha|phi_n>, unit norm
  std::int64_t step = 0;
};

AmplitudeState make_amplitude_state(Eigen::VectorXcd amps, std::int64_t step = 0);
AmplitudeState amplitude_update(const ProbeModel& m, const AmplitudeState& a, Index i);

// Dispersive cavity readout: a two-state probe rotates about z by n*theta
// (n photons in the cavity) and is measured along the equatorial direction
// at angle phi, cycled per step from phi_schedule.
struct CavityPreset {
  int n_max = 7;
  double theta = 0.7;
  std::vector<double> phi_schedule = {0.0, std::numbers::pi / 4, std::numbers::pi / 2,
                                      3 * std::numbers::pi / 4};
};

void validate_preset(const CavityPreset& c);

// 2-outcome kernel with p(+|n) = cos^2((n*theta - phi)/2).
MeasurementKernel cavity_kernel(const CavityPreset& c, std::int64_t step);

// The same step as an explicit two-level probe model (basis-changed spin
// rotation), so the amplitude track can be run against the simplex track.
ProbeModel cavity_probe_model(const CavityPreset& c, std::int64_t step);

KernelSchedule cavity_schedule(const CavityPreset& c);

}  // namespace qnd

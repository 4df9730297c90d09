#include "qnd/probe.hpp"

#include <cmath>

namespace qnd {

namespace {

using Complex = std::complex<double>;

double max_abs_dev_from_identity(const Eigen::MatrixXcd& m) {
  double dev = 0.0;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      dev = std::max(dev, std::abs(m(r, c) - (r == c ? Complex(1.0) : Complex(0.0))));
  return dev;
}

}  // namespace

void validate_model(const ProbeModel& m) {
  const Index d = m.dim();
  if (d < 2) throw ValidationError("probe dimension must be >= 2");
  if (m.n_pointers() < 1) throw ValidationError("probe model has no pointer operators");
  if (std::abs(m.psi.norm() - 1.0) > kNormalizationTol)
    throw ValidationError("probe state is not normalized, deviation " +
                          std::to_string(m.psi.norm() - 1.0));
  for (Index a = 0; a < m.n_pointers(); ++a) {
    const Eigen::MatrixXcd& u = m.unitaries[static_cast<std::size_t>(a)];
    if (u.rows() != d || u.cols() != d)
      throw ValidationError("operator for pointer " + std::to_string(a) +
                            " has wrong dimensions");
    const double dev = max_abs_dev_from_identity(u.adjoint() * u);
    if (dev >= kUnitarityTol) throw NonUnitaryError(a, dev);
  }
  if (m.basis.size() != 0) {
    if (m.basis.rows() != d || m.basis.cols() != d)
      throw ValidationError("measurement basis has wrong dimensions");
    const double dev = max_abs_dev_from_identity(m.basis.adjoint() * m.basis);
    if (dev >= kUnitarityTol) throw ValidationError("measurement basis is not unitary");
  }
  if (!m.outcome_labels.empty() && static_cast<Index>(m.outcome_labels.size()) != d)
    throw ValidationError("outcome label count does not match probe dimension");
  if (!m.pointer_labels.empty() &&
      static_cast<Index>(m.pointer_labels.size()) != m.n_pointers())
    throw ValidationError("pointer label count does not match operator count");
}

Eigen::VectorXcd measured_amplitudes(const ProbeModel& m, Index alpha) {
  Eigen::VectorXcd v = m.unitaries[static_cast<std::size_t>(alpha)] * m.psi;
  if (m.basis.size() != 0) v = m.basis.adjoint() * v;
  return v;
}

MeasurementKernel kernel_from_model(const ProbeModel& m) {
  validate_model(m);
  Eigen::MatrixXd probs(m.dim(), m.n_pointers());
  for (Index a = 0; a < m.n_pointers(); ++a) {
    const Eigen::VectorXcd v = measured_amplitudes(m, a);
    for (Index i = 0; i < m.dim(); ++i) probs(i, a) = std::norm(v(i));
  }
  return validate_kernel<double>(std::move(probs), m.outcome_labels, m.pointer_labels);
}

AmplitudeState make_amplitude_state(Eigen::VectorXcd amps, std::int64_t step) {
  if (amps.size() == 0) throw ValidationError("amplitude state is empty");
  const double n = amps.norm();
  if (std::abs(n - 1.0) > kNormalizationTol)
    throw ValidationError("amplitude state is not normalized, deviation " +
                          std::to_string(n - 1.0));
  AmplitudeState a;
  a.amps = std::move(amps) / n;
  a.step = step;
  return a;
}

AmplitudeState amplitude_update(const ProbeModel& m, const AmplitudeState& a, Index i) {
  if (a.amps.size() != m.n_pointers())
    throw IndexMismatchError("amplitude state / model size mismatch");
  if (i < 0 || i >= m.dim()) throw IndexMismatchError("outcome index out of range");
  Eigen::VectorXcd c(m.n_pointers());
  double denom = 0.0;
  for (Index alpha = 0; alpha < m.n_pointers(); ++alpha) {
    c(alpha) = measured_amplitudes(m, alpha)(i);
    denom += std::norm(c(alpha)) * std::norm(a.amps(alpha));
  }
  if (!(denom > kUnderflowThreshold)) throw ZeroProbabilityOutcomeError(i);
  AmplitudeState out;
  out.amps.resize(a.amps.size());
  const double scale = 1.0 / std::sqrt(denom);
  for (Index alpha = 0; alpha < m.n_pointers(); ++alpha)
    out.amps(alpha) = c(alpha) * a.amps(alpha) * scale;
  out.amps /= out.amps.norm();
  out.step = a.step + 1;
  return out;
}

void validate_preset(const CavityPreset& c) {
  if (c.n_max < 1) throw ValidationError("cavity preset requires n_max >= 1");
  if (c.phi_schedule.empty()) throw ValidationError("cavity preset has an empty phi schedule");
  if (!std::isfinite(c.theta)) throw ValidationError("cavity preset theta is not finite");
  for (double phi : c.phi_schedule)
    if (!std::isfinite(phi)) throw ValidationError("cavity preset phi is not finite");
}

MeasurementKernel cavity_kernel(const CavityPreset& c, std::int64_t step) {
  validate_preset(c);
  const double phi =
      c.phi_schedule[static_cast<std::size_t>(step % static_cast<std::int64_t>(c.phi_schedule.size()))];
  Eigen::MatrixXd probs(2, c.n_max + 1);
  for (int n = 0; n <= c.n_max; ++n) {
    const double amp = std::cos(0.5 * (n * c.theta - phi));
    probs(0, n) = amp * amp;
    probs(1, n) = 1.0 - probs(0, n);
  }
  return validate_kernel<double>(std::move(probs), {"+", "-"},
                                 detail::default_labels(c.n_max + 1));
}

ProbeModel cavity_probe_model(const CavityPreset& c, std::int64_t step) {
  validate_preset(c);
  const double phi =
      c.phi_schedule[static_cast<std::size_t>(step % static_cast<std::int64_t>(c.phi_schedule.size()))];
  const Complex im(0.0, 1.0);
  const double r = 1.0 / std::sqrt(2.0);

  Eigen::MatrixXcd h(2, 2);  // |0> -> equatorial +x state
  h << r, r, r, -r;
  Eigen::MatrixXcd vdag(2, 2);  // rows are the +/- detection states at angle phi
  vdag << r, r * std::exp(-im * phi), r, -r * std::exp(-im * phi);

  ProbeModel m;
  m.psi = Eigen::VectorXcd::Zero(2);
  m.psi(0) = 1.0;
  m.unitaries.reserve(static_cast<std::size_t>(c.n_max) + 1);
  for (int n = 0; n <= c.n_max; ++n) {
    Eigen::MatrixXcd rz = Eigen::MatrixXcd::Zero(2, 2);
    rz(0, 0) = std::exp(-im * (0.5 * n * c.theta));
    rz(1, 1) = std::exp(im * (0.5 * n * c.theta));
    m.unitaries.push_back(vdag * rz * h);
  }
  m.outcome_labels = {"+", "-"};
  m.pointer_labels = detail::default_labels(c.n_max + 1);
  validate_model(m);
  return m;
}

KernelSchedule cavity_schedule(const CavityPreset& c) {
  validate_preset(c);
  std::vector<MeasurementKernel> ks;
  ks.reserve(c.phi_schedule.size());
  for (std::size_t l = 0; l < c.phi_schedule.size(); ++l)
    ks.push_back(cavity_kernel(c, static_cast<std::int64_t>(l)));
  return KernelSchedule::cyclic(std::move(ks));
}

}  // namespace qnd

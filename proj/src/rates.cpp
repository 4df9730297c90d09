#include "qnd/rates.hpp"

#include <cmath>
#include <stdexcept>

namespace qnd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const MeasurementKernel& k, Index gamma, Index alpha) {
  if (gamma < 0 || gamma >= k.n_pointers() || alpha < 0 || alpha >= k.n_pointers())
    throw IndexMismatchError("pointer index out of range");
}

template <class F>
std::pair<double, double> golden_min(F&& f, double lo, double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

bool pair_degenerate(const MeasurementKernel& k, Index gamma, Index alpha) {
  for (Index i = 0; i < k.n_outcomes(); ++i)
    if (std::abs(k.probs(i, gamma) - k.probs(i, alpha)) > k.degeneracy_tol) return false;
  return true;
}

}  // namespace

double relative_entropy(const MeasurementKernel& k, Index gamma, Index alpha) {
  check_pair(k, gamma, alpha);
  double s = 0.0;
  for (Index i = 0; i < k.n_outcomes(); ++i) {
    const double pg = k.probs(i, gamma);
    if (pg <= 0.0) continue;
    const double pa = k.probs(i, alpha);
    if (pa <= 0.0) return kInf;
    s += pg * std::log(pg / pa);
  }
  // Gibbs: the exact sum is >= 0; rounding may leave a tiny negative.
  return s < 0.0 ? 0.0 : s;
}

double chernoff_lambda(const MeasurementKernel& k, Index gamma, Index alpha, double s) {
  check_pair(k, gamma, alpha);
  if (!(s > 0.0)) throw std::invalid_argument("chernoff_lambda requires s > 0");
  double sum = 0.0;
  for (Index i = 0; i < k.n_outcomes(); ++i) {
    const double pg = k.probs(i, gamma);
    if (pg <= 0.0) continue;
    sum += pg * std::pow(k.probs(i, alpha) / pg, s);
  }
  return sum;
}

ChernoffResult chernoff_exponent(const MeasurementKernel& k, Index gamma, Index alpha,
                                 double s_max) {
  check_pair(k, gamma, alpha);
  ChernoffResult r;
  if (pair_degenerate(k, gamma, alpha)) {
    r.degenerate = true;
    r.lambda_star = 1.0;
    return r;
  }
  auto lam = [&](double s) { return chernoff_lambda(k, gamma, alpha, s); };
  auto [s_best, l_best] = golden_min(lam, 1e-9, 1.0);
  if (s_best > 1.0 - 1e-7 && s_max > 1.0) {
    // lambda still decreasing at 1; the minimum sits beyond the default domain.
    std::tie(s_best, l_best) = golden_min(lam, 1.0, s_max);
    if (s_best > s_max * (1.0 - 1e-7)) {
      r.boundary = true;
      s_best = s_max;
      l_best = lam(s_max);
    }
  }
  r.lambda_star = l_best;
  r.s_star = s_best;
  return r;
}

RateTable rate_table(const MeasurementKernel& k, double s_max) {
  const Index n = k.n_pointers();
  RateTable t;
  t.S = Eigen::MatrixXd::Zero(n, n);
  t.lambda_star = Eigen::MatrixXd::Ones(n, n);
  t.s_star = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  t.boundary = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  t.degenerate = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  for (Index g = 0; g < n; ++g) {
    for (Index a = 0; a < n; ++a) {
      if (g == a) continue;
      t.S(g, a) = relative_entropy(k, g, a);
      const ChernoffResult c = chernoff_exponent(k, g, a, s_max);
      t.lambda_star(g, a) = c.lambda_star;
      t.s_star(g, a) = c.s_star;
      t.boundary(g, a) = c.boundary;
      t.degenerate(g, a) = c.degenerate;
    }
  }
  return t;
}

double schedule_mean_relative_entropy(const KernelSchedule& s, Index gamma, Index alpha) {
  double acc = 0.0;
  for (const MeasurementKernel& k : s.kernels()) {
    const double v = relative_entropy(k, gamma, alpha);
    if (v == kInf) return kInf;
    acc += v;
  }
  return acc / static_cast<double>(s.length());
}

}  // namespace qnd

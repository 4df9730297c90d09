#pragma once

#include <Eigen/Core>

#include "qnd/kernel.hpp"

// Information metrics governing convergence: the relative entropy S(gamma|alpha)
// (exponential decay rate of q_n(alpha) on trajectories collapsing to gamma)
// and the Chernoff exponent lambda* bounding basin-escape probabilities.

namespace qnd {

// S(gamma|alpha) = sum_i p(i|gamma) log[p(i|gamma)/p(i|alpha)] in nats,
// with 0 log 0 = 0. Returns +inf when alpha misses support that gamma has.
double relative_entropy(const MeasurementKernel& k, Index gamma, Index alpha);

// lambda(s) = sum_i p(i|gamma) (p(i|alpha)/p(i|gamma))^s, terms with
// p(i|gamma) = 0 contributing 0. Requires s > 0.
double chernoff_lambda(const MeasurementKernel& k, Index gamma, Index alpha, double s);

struct ChernoffResult {
  double lambda_star = 1.0;
  double s_star = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  // columns coincide; lambda(s) == 1 for all s
  bool boundary = false;    // infimum approached at s_max, not an interior minimum
};

// Minimizes the convex lambda(s). The search starts on (0, 1] (both ends
// equal 1 for full-support columns) and extends to s_max when the minimum is
// pushed against s = 1 from the left.
ChernoffResult chernoff_exponent(const MeasurementKernel& k, Index gamma, Index alpha,
                                 double s_max = 50.0);

struct RateTable {
  Eigen::MatrixXd S;            // S(gamma|alpha); rows gamma, cols alpha; zero diagonal
  Eigen::MatrixXd lambda_star;  // 1 on the diagonal and for degenerate pairs
  Eigen::MatrixXd s_star;       // NaN where undefined
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> boundary;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> degenerate;
};

RateTable rate_table(const MeasurementKernel& k, double s_max = 50.0);

// Cycle mean of the per-phase relative entropies; the decay rate observed on
// trajectories driven by a cyclic schedule.
double schedule_mean_relative_entropy(const KernelSchedule& s, Index gamma, Index alpha);

}  // namespace qnd

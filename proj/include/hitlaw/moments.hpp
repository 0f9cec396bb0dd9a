#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "hitlaw/pointprocess.hpp"
#include "hitlaw/subsystem.hpp"
#include "hitlaw/types.hpp"

namespace hitlaw {

/// Continuous, nonnegative, piecewise-linear function on [0, support()], zero at both ends.
class TestFunction {
 public:
  /// Knots must start at 0, increase strictly, and carry finite nonnegative values with
  /// values.front() == values.back() == 0. Throws InvalidTestFunction.
  TestFunction(std::vector<double> knots, std::vector<double> values);

  static TestFunction tent();     // peak 1 at 1/2 on [0, 1]
  static TestFunction plateau();  // 0 -> 1 on [0, 1/4], flat to 7/4, back to 0 at 2
  static TestFunction zero(double support = 1.0);

  double operator()(double t) const noexcept;
  double support() const noexcept { return knots_.back(); }
  /// Exact integral of g^p over the support.
  double integral_power(unsigned p) const;

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Adaptive Simpson quadrature to absolute tolerance. Throws QuadratureFailure when the
/// recursion depth is exhausted or the integrand is not finite.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tolerance = 1e-10, int max_depth = 48);

struct ClusterSequence {
  double c = 1.0;      // C_1
  double theta = 1.0;  // C_m = c theta^{m-1}
};

/// nu_0..nu_kMax from the z-expansion of exp(sum_m C_m int (e^{zg} - 1)^m dt), with the
/// segment integrals int g^p computed by adaptive Simpson. kMax <= 4.
Vector analytic_moments(const ClusterSequence& constants, const TestFunction& g, std::size_t k_max);

/// The same moments from exp(lambda sum_j pi_j int (e^{zjg} - 1) dt).
Vector analytic_moments_marked(const MarkedPoissonParams& params, const TestFunction& g,
                               std::size_t k_max);

/// Cumulants kappa_1..kappa_kMax of the cluster expansion (index 0 unused).
Vector cluster_cumulants(const ClusterSequence& constants, const TestFunction& g, std::size_t k_max);

/// Moments from cumulants; kappa[0] is ignored.
Vector moments_from_cumulants(std::span<const double> kappa);

/// lambda = c / (1 + theta), pi_j = theta^{j-1} / (1 + theta)^j.
MarkedPoissonParams identify_params(double c, double theta, std::size_t terms = 64);

struct ClusterFit {
  double c = 0.0;
  double theta = 0.0;
  double residual = 0.0;  // max |log C_m - fitted|
};

/// Least squares of log C_m on m. Needs three or more values; throws NonPositiveEstimate.
ClusterFit fit_cluster_constants(std::span<const std::pair<std::size_t, double>> estimates);

struct MomentEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;  // number of windows
};

/// Average of X_n(g)^k over disjoint windows of ceil(T_g / c_n) + n steps taken along each
/// sample, X_n(g) = sum over hits j in the window of g((j - start) c_n). k in {1, 2}.
MomentEstimate empirical_moment(std::span<const PointProcessSample> samples, const TestFunction& g,
                                unsigned k);

/// X_n(g) for every window of every sample, in sample order.
Vector window_statistics(std::span<const PointProcessSample> samples, const TestFunction& g);

}  // namespace hitlaw

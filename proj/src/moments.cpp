#include "hitlaw/moments.hpp"

#include <algorithm>
#include <cmath>

#include "hitlaw/error.hpp"
#include "hitlaw/stats.hpp"

namespace hitlaw {

TestFunction::TestFunction(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() < 2 || knots_.size() != values_.size()) {
    throw Error(ErrorCode::InvalidTestFunction, "need matching knot and value lists of size >= 2");
  }
  if (knots_.front() != 0.0) throw Error(ErrorCode::InvalidTestFunction, "first knot must be 0");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw Error(ErrorCode::InvalidTestFunction, "knots and values must be finite, values >= 0");
    }
    if (i > 0 && !(knots_[i] > knots_[i - 1])) {
      throw Error(ErrorCode::InvalidTestFunction, "knots must increase strictly");
    }
  }
  if (values_.front() != 0.0 || values_.back() != 0.0) {
    throw Error(ErrorCode::InvalidTestFunction, "g must vanish at both ends of its support");
  }
}

TestFunction TestFunction::tent() { return TestFunction({0.0, 0.5, 1.0}, {0.0, 1.0, 0.0}); }

TestFunction TestFunction::plateau() {
  return TestFunction({0.0, 0.25, 1.75, 2.0}, {0.0, 1.0, 1.0, 0.0});
}

TestFunction TestFunction::zero(double support) { return TestFunction({0.0, support}, {0.0, 0.0}); }

double TestFunction::operator()(double t) const noexcept {
  if (!(t > 0.0) || t >= knots_.back()) return 0.0;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const double u = (t - knots_[i]) / (knots_[i + 1] - knots_[i]);
  return values_[i] + u * (values_[i + 1] - values_[i]);
}

double TestFunction::integral_power(unsigned p) const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    const double h = knots_[i + 1] - knots_[i];
    const double a = values_[i];
    const double b = values_[i + 1];
    if (a == b) {
      total += h * std::pow(a, p);
    } else {
      total += h * (std::pow(b, p + 1) - std::pow(a, p + 1)) / ((p + 1.0) * (b - a));
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tolerance, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  if (!std::isfinite(flm) || !std::isfinite(frm)) {
    throw Error(ErrorCode::QuadratureFailure, "integrand is not finite");
  }
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tolerance) return left + right + delta / 15.0;
  if (depth <= 0) throw Error(ErrorCode::QuadratureFailure, "adaptive Simpson depth exhausted");
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tolerance, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tolerance, depth - 1);
}

double stirling2(std::size_t k, std::size_t m) {
  std::vector<std::vector<double>> s(k + 1, std::vector<double>(k + 1, 0.0));
  s[0][0] = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    for (std::size_t j = 1; j <= i; ++j) s[i][j] = static_cast<double>(j) * s[i - 1][j] + s[i - 1][j - 1];
  }
  return m <= k ? s[k][m] : 0.0;
}

double factorial(std::size_t m) {
  double f = 1.0;
  for (std::size_t i = 2; i <= m; ++i) f *= static_cast<double>(i);
  return f;
}

double binomial(std::size_t n, std::size_t k) {
  double b = 1.0;
  for (std::size_t i = 1; i <= k; ++i) b = b * static_cast<double>(n - k + i) / static_cast<double>(i);
  return b;
}

void check_order(std::size_t k_max) {
  if (k_max > 4) throw Error(ErrorCode::InvalidArgument, "analytic moments are limited to k <= 4");
}

// int g^p by quadrature, one Simpson run per linear segment so the kinks sit on panel ends.
double power_integral(const TestFunction& g, unsigned p) {
  double total = 0.0;
  const auto& knots = g.knots();
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    total += integrate([&](double t) { return std::pow(g(t), p); }, knots[i], knots[i + 1], 1e-12);
  }
  return total;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tolerance,
                 int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
    throw Error(ErrorCode::QuadratureFailure, "integrand is not finite");
  }
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tolerance, max_depth);
}

Vector cluster_cumulants(const ClusterSequence& constants, const TestFunction& g, std::size_t k_max) {
  check_order(k_max);
  Vector kappa(k_max + 1, 0.0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    double coefficient = 0.0;
    for (std::size_t m = 1; m <= k; ++m) {
      const double c_m = constants.c * std::pow(constants.theta, static_cast<double>(m - 1));
      coefficient += c_m * factorial(m) * stirling2(k, m);
    }
    kappa[k] = coefficient * power_integral(g, static_cast<unsigned>(k));
  }
  return kappa;
}

Vector moments_from_cumulants(std::span<const double> kappa) {
  const std::size_t k_max = kappa.empty() ? 0 : kappa.size() - 1;
  Vector nu(k_max + 1, 0.0);
  nu[0] = 1.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    for (std::size_t j = 1; j <= k; ++j) nu[k] += binomial(k - 1, j - 1) * kappa[j] * nu[k - j];
  }
  return nu;
}

Vector analytic_moments(const ClusterSequence& constants, const TestFunction& g, std::size_t k_max) {
  return moments_from_cumulants(cluster_cumulants(constants, g, k_max));
}

Vector analytic_moments_marked(const MarkedPoissonParams& params, const TestFunction& g,
                               std::size_t k_max) {
  check_order(k_max);
  Vector kappa(k_max + 1, 0.0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    // sum_j pi_j j^k, summed until the geometric tail is negligible
    double mark_moment = 0.0;
    for (std::size_t j = 1; j < 100000; ++j) {
      const double term = params.pi_at(j) * std::pow(static_cast<double>(j), static_cast<double>(k));
      mark_moment += term;
      if (j > 8 && term < 1e-18 * mark_moment) break;
    }
    kappa[k] = params.lambda * mark_moment * power_integral(g, static_cast<unsigned>(k));
  }
  return moments_from_cumulants(kappa);
}

MarkedPoissonParams identify_params(double c, double theta, std::size_t terms) {
  if (!(c > 0.0) || !(theta > 0.0)) throw Error(ErrorCode::InvalidArgument, "c and theta must be positive");
  MarkedPoissonParams params;
  params.lambda = c / (1.0 + theta);
  params.ratio = theta / (1.0 + theta);
  params.theta = theta;
  params.pi.resize(terms);
  for (std::size_t j = 1; j <= terms; ++j) {
    params.pi[j - 1] = std::pow(theta, static_cast<double>(j - 1)) / std::pow(1.0 + theta, static_cast<double>(j));
  }
  return params;
}

ClusterFit fit_cluster_constants(std::span<const std::pair<std::size_t, double>> estimates) {
  if (estimates.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least three values of m");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [m, value] : estimates) {
    if (!(value > 0.0)) throw Error(ErrorCode::NonPositiveEstimate, "cluster constants must be positive");
    const double x = static_cast<double>(m) - 1.0;
    const double y = std::log(value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(estimates.size());
  const double denom = k * sxx - sx * sx;
  if (denom == 0.0) throw Error(ErrorCode::InvalidArgument, "need distinct values of m");
  const double slope = (k * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / k;
  ClusterFit fit{std::exp(intercept), std::exp(slope), 0.0};
  for (const auto& [m, value] : estimates) {
    const double predicted = intercept + slope * (static_cast<double>(m) - 1.0);
    fit.residual = std::max(fit.residual, std::abs(std::log(value) - predicted));
  }
  return fit;
}

// ---------------------------------------------------------------------------

Vector window_statistics(std::span<const PointProcessSample> samples, const TestFunction& g) {
  Vector out;
  for (const auto& s : samples) {
    const double c_n = s.config.c_n;
    const auto length = static_cast<std::uint64_t>(std::ceil(g.support() / c_n)) + s.config.n;
    if (s.orbit_length <= s.config.n) continue;
    const std::uint64_t usable = s.orbit_length - s.config.n;
    const std::uint64_t windows = usable / length;
    auto it = s.hits.begin();
    for (std::uint64_t w = 0; w < windows; ++w) {
      const std::uint64_t start = w * length;
      double x = 0.0;
      while (it != s.hits.end() && *it <= start) ++it;
      for (; it != s.hits.end() && *it <= start + length; ++it) {
        x += g(static_cast<double>(*it - start) * c_n);
      }
      out.push_back(x);
    }
  }
  return out;
}

MomentEstimate empirical_moment(std::span<const PointProcessSample> samples, const TestFunction& g,
                                unsigned k) {
  if (k < 1 || k > 2) throw Error(ErrorCode::InvalidArgument, "empirical moments cover k = 1, 2");
  Vector x = window_statistics(samples, g);
  for (double& v : x) v = std::pow(v, k);
  const auto estimate = stats::mean_and_se(x);
  return {estimate.mean, estimate.se, estimate.count};
}

}  // namespace hitlaw

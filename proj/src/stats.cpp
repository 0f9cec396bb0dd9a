#include "hitlaw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "hitlaw/error.hpp"

namespace hitlaw::stats {

double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.18) {
    // 1 - sqrt(2 pi)/x sum exp(-(2k-1)^2 pi^2 / (8 x^2))
    const double c = -std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double j = 2.0 * k - 1.0;
      cdf += std::exp(c * j * j);
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / x;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double tail = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    tail += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(tail, 0.0, 1.0);
}

TestResult ks_exponential(std::span<const double> sample, double rate) {
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "rate must be positive");
  TestResult result;
  result.count = sample.size();
  if (sample.empty()) return result;
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = -std::expm1(-rate * sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  result.statistic = d;
  // Stephens' small-sample correction.
  const double root = std::sqrt(n);
  result.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
  return result;
}

double chi_square_survival(double statistic, double dof) {
  if (!(dof > 0.0)) return 1.0;
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_marks(std::span<const std::size_t> counts, std::span<const double> probs) {
  ChiSquareResult result;
  std::size_t total = 0;
  for (std::size_t c : counts) total += c;
  result.count = total;
  if (total == 0) return result;
  const double n = static_cast<double>(total);

  std::size_t cells = 0;  // leading cells kept separate
  double kept_mass = 0.0;
  while (cells < probs.size() && probs[cells] * n >= 5.0) {
    kept_mass += probs[cells];
    ++cells;
  }
  std::vector<double> observed, expected;
  std::size_t kept_count = 0;
  for (std::size_t j = 0; j < cells; ++j) {
    const std::size_t c = j < counts.size() ? counts[j] : 0;
    kept_count += c;
    observed.push_back(static_cast<double>(c));
    expected.push_back(probs[j] * n);
  }
  const double tail_expected = std::max(0.0, 1.0 - kept_mass) * n;
  const double tail_observed = static_cast<double>(total - kept_count);
  if (tail_expected >= 5.0 || observed.empty()) {
    observed.push_back(tail_observed);
    expected.push_back(tail_expected);
  } else {
    observed.back() += tail_observed;
    expected.back() += tail_expected;
  }
  double stat = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    if (expected[j] > 0.0) {
      stat += (observed[j] - expected[j]) * (observed[j] - expected[j]) / expected[j];
    }
  }
  const std::size_t bins = observed.size();
  result.statistic = stat;
  result.bins = bins;
  result.dof = bins > 1 ? static_cast<double>(bins - 1) : 0.0;
  result.p_value = chi_square_survival(stat, result.dof);
  return result;
}

MeanEstimate mean_and_se(std::span<const double> values) {
  MeanEstimate out;
  out.count = values.size();
  if (values.empty()) return out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  out.mean = mean;
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  out.se = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

}  // namespace hitlaw::stats

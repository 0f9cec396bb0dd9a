#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hitlaw/types.hpp"

namespace hitlaw::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t count = 0;
};

/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

/// One-sample KS test of `sample` against Exp(rate). The sample is copied and sorted.
TestResult ks_exponential(std::span<const double> sample, double rate);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_survival(double statistic, double dof);

struct ChiSquareResult : TestResult {
  std::size_t bins = 0;
  double dof = 0.0;
};

/// Pearson test of counts[j] (mark j + 1) against probabilities probs[j]. Trailing cells with
/// expected count < 5 are pooled together with the remaining mass 1 - sum(probs).
ChiSquareResult chi_square_marks(std::span<const std::size_t> counts, std::span<const double> probs);

struct MeanEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_and_se(std::span<const double> values);

}  // namespace hitlaw::stats

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace forge::stats {

enum class CorrelationKind { Spearman, Pearson };

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  CorrelationKind kind = CorrelationKind::Pearson;
};

/// Fractional ranks, 1-based; ties get the average of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Product-moment correlation with a two-sided p-value from
/// t = r * sqrt((n-2)/(1-r^2)) against Student-t(n-2). p = 1 when n = 2.
/// Throws LengthMismatch, TooFewSamples (n < 2) or ConstantInput.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

/// Pearson on fractional ranks; same p-value approximation.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

struct L1FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double objective = 0.0;  // sum of absolute residuals
};

/// Exact least-absolute-deviations line fit.
///
/// Through the origin the optimum is one of the ratios y_i/x_i (x_i != 0); every
/// candidate is evaluated and the smallest objective wins, ties going to the
/// smaller slope. With an intercept, the optimal line passes through two data
/// points; each point is tried as a pivot and the best slope through it is a
/// weighted median of the pairwise slopes.
L1FitResult l1_slope(std::span<const double> x, std::span<const double> y, bool through_origin = true);

/// Sum of |y_i - (intercept + slope*x_i)|.
double l1_objective(std::span<const double> x, std::span<const double> y, double slope, double intercept = 0.0);

/// Two-sided pooled two-proportion z-test. Identical degenerate groups (pooled
/// proportion 0 or 1) give p = 1.
double two_proportion_test(long successes_a, long n_a, long successes_b, long n_b);

struct AccuracySummary {
  double mean = 0.0;
  double standard_error = 0.0;  // sample sd of per-run accuracies / sqrt(runs); 0 for one run
};

AccuracySummary accuracy_with_stderr(std::span<const long> correct_per_run, long n);

}  // namespace forge::stats

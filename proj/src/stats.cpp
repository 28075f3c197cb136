#include "forge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "forge/error.hpp"

namespace forge::stats {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "x has " + std::to_string(x.size()) + " values, y has " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 samples");
}

double t_test_p_value(double r, std::size_t n) {
  if (n <= 2) return 1.0;
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return std::clamp(p, 0.0, 1.0);
}

double product_moment(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::ConstantInput, "correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  CorrelationResult r;
  r.kind = CorrelationKind::Pearson;
  r.n = x.size();
  r.rho = product_moment(x, y);
  r.p_value = t_test_p_value(r.rho, r.n);
  return r;
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  const auto rx = fractional_ranks(x);
  const auto ry = fractional_ranks(y);
  CorrelationResult r;
  r.kind = CorrelationKind::Spearman;
  r.n = x.size();
  r.rho = product_moment(rx, ry);
  r.p_value = t_test_p_value(r.rho, r.n);
  return r;
}

double l1_objective(std::span<const double> x, std::span<const double> y, double slope, double intercept) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(y[i] - (intercept + slope * x[i]));
  return total;
}

namespace {

// Strictly better objective, or equal up to rounding with a smaller slope (then intercept).
bool improves(const L1FitResult& cand, const L1FitResult& best) {
  const double tol = 1e-12 * std::max(1.0, std::abs(best.objective));
  if (cand.objective < best.objective - tol) return true;
  if (cand.objective > best.objective + tol) return false;
  if (cand.slope != best.slope) return cand.slope < best.slope;
  return cand.intercept < best.intercept;
}

}  // namespace

L1FitResult l1_slope(std::span<const double> x, std::span<const double> y, bool through_origin) {
  check_pair(x, y);
  L1FitResult best;
  best.objective = std::numeric_limits<double>::infinity();
  bool found = false;

  if (through_origin) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) continue;
      L1FitResult cand;
      cand.slope = y[i] / x[i];
      cand.objective = l1_objective(x, y, cand.slope);
      if (!found || improves(cand, best)) best = cand;
      found = true;
    }
    if (!found) throw Error(ErrorCode::DegenerateInput, "through-origin fit needs at least one x != 0");
    return best;
  }

  struct Candidate {
    double slope;
    double weight;
  };
  std::vector<Candidate> slopes;
  for (std::size_t i = 0; i < x.size(); ++i) {
    slopes.clear();
    double total_weight = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double dx = x[j] - x[i];
      if (dx == 0.0) continue;
      slopes.push_back({(y[j] - y[i]) / dx, std::abs(dx)});
      total_weight += std::abs(dx);
    }
    if (slopes.empty()) continue;
    std::sort(slopes.begin(), slopes.end(), [](const Candidate& a, const Candidate& b) { return a.slope < b.slope; });
    // smallest weighted median of the slopes through pivot i
    double cumulative = 0.0;
    double median = slopes.back().slope;
    for (const auto& c : slopes) {
      cumulative += c.weight;
      if (cumulative >= total_weight / 2.0) {
        median = c.slope;
        break;
      }
    }
    L1FitResult cand;
    cand.slope = median;
    cand.intercept = y[i] - median * x[i];
    cand.objective = l1_objective(x, y, cand.slope, cand.intercept);
    if (!found || improves(cand, best)) best = cand;
    found = true;
  }
  if (!found) throw Error(ErrorCode::DegenerateInput, "all x values are equal");
  return best;
}

double two_proportion_test(long successes_a, long n_a, long successes_b, long n_b) {
  if (n_a < 1 || n_b < 1 || successes_a < 0 || successes_b < 0 || successes_a > n_a || successes_b > n_b) {
    throw Error(ErrorCode::InvalidCounts, "need n >= 1 and 0 <= successes <= n");
  }
  const double na = static_cast<double>(n_a);
  const double nb = static_cast<double>(n_b);
  const double pa = static_cast<double>(successes_a) / na;
  const double pb = static_cast<double>(successes_b) / nb;
  const double pooled = static_cast<double>(successes_a + successes_b) / (na + nb);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb));
  if (se == 0.0) return 1.0;
  const double z = std::abs(pa - pb) / se;
  const boost::math::normal standard;
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(standard, z)), 0.0, 1.0);
}

AccuracySummary accuracy_with_stderr(std::span<const long> correct_per_run, long n) {
  if (correct_per_run.empty() || n < 1) throw Error(ErrorCode::InvalidCounts, "need >= 1 run and n >= 1");
  std::vector<double> acc;
  for (long c : correct_per_run) {
    if (c < 0 || c > n) throw Error(ErrorCode::InvalidCounts, "correct count outside [0, n]");
    acc.push_back(static_cast<double>(c) / static_cast<double>(n));
  }
  AccuracySummary s;
  const double runs = static_cast<double>(acc.size());
  s.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / runs;
  if (acc.size() > 1) {
    double ss = 0.0;
    for (double a : acc) ss += (a - s.mean) * (a - s.mean);
    s.standard_error = std::sqrt(ss / (runs - 1.0)) / std::sqrt(runs);
  }
  return s;
}

}  // namespace forge::stats

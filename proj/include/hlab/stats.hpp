#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hlab/errors.hpp"
#include "hlab/strategies.hpp"

namespace hlab {

inline constexpr double kZ99 = 2.576;

struct MCEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  Index n = 0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;

  bool contains(double x) const { return ci_lo <= x && x <= ci_hi; }
};

template <class Derived>
MCEstimate mc_estimate(const Eigen::DenseBase<Derived>& samples) {
  const Index n = samples.size();
  if (n < 2) throw InvalidParameter("mc_estimate needs at least two samples");
  Array x(n);
  for (Index i = 0; i < n; ++i) x[i] = static_cast<double>(samples.derived().coeff(i));
  MCEstimate est;
  est.n = n;
  est.mean = x.mean();
  const double var = (x - est.mean).square().sum() / static_cast<double>(n - 1);
  est.std_err = std::sqrt(var / static_cast<double>(n));
  est.ci_lo = est.mean - kZ99 * est.std_err;
  est.ci_hi = est.mean + kZ99 * est.std_err;
  return est;
}

MCEstimate mc_estimate(const std::vector<double>& samples);

struct MartingaleTestReport {
  std::vector<double> checkpoints;
  std::vector<MCEstimate> increment_means;
  std::vector<double> z_scores;
  std::vector<Index> skipped;
  double family_alpha = 0.01;
  double critical = 0.0;
  bool passed = false;
};

// values(path, k) = X at checkpoint k. Each consecutive increment gets a
// mean-zero z-test, Bonferroni-corrected to the family-wise level.
MartingaleTestReport martingale_increment_test(
    const Eigen::MatrixXd& values, std::vector<double> checkpoints = {},
    double family_alpha = 0.01);

enum class Verdict { kNone, kNAViolation, kFirstKind };
std::string to_string(Verdict v);

struct ArbitrageReport {
  double min_terminal = 0.0;
  double frac_negative = 0.0;
  MCEstimate p_positive;
  MCEstimate mean;
  bool admissible = false;
  bool zero_admissible = false;
  Verdict verdict = Verdict::kNone;
};

// First kind is reported when an NA violation is also 0-admissible: the
// same weights then dominate its terminal gain from any endowment x > 0.
ArbitrageReport arbitrage_detect(std::span<const WealthLedger> ledgers,
                                 double bound, double tol);

struct FirstKindVerdict {
  bool passed = false;
  bool rejected_input = false;
  std::vector<double> min_slack;
  std::vector<bool> admissible;
};

// ledgers_per_x[k][j] is path j started from xs[k]. Passes iff every ledger
// is xs[k]-admissible and ends above xi[j] - bias[j] - tol.
FirstKindVerdict first_kind_verify(
    const std::vector<double>& xs,
    const std::vector<std::vector<WealthLedger>>& ledgers_per_x,
    const Array& xi, const Array& bias, double tol);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
  bool passed = false;
};

KsResult ks_uniform(Array samples, double alpha = 0.01);

// Kolmogorov limit survival function.
double kolmogorov_sf(double lambda);

double median(Array samples);

double bootstrap_median_se(const Array& samples, int resamples,
                           std::uint64_t seed);

}  // namespace hlab

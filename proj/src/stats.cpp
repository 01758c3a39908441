#include "hlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "hlab/rng.hpp"

namespace hlab {

MCEstimate mc_estimate(const std::vector<double>& samples) {
  return mc_estimate(Eigen::Map<const Array>(
      samples.data(), static_cast<Index>(samples.size())));
}

MartingaleTestReport martingale_increment_test(
    const Eigen::MatrixXd& values, std::vector<double> checkpoints,
    double family_alpha) {
  const Index k = values.cols();
  if (k < 2) throw InvalidParameter("martingale test needs two checkpoints");
  if (values.rows() < 1000) {
    throw InvalidParameter("martingale test needs at least 1000 paths");
  }
  if (checkpoints.empty()) {
    for (Index c = 0; c < k; ++c) checkpoints.push_back(static_cast<double>(c));
  }
  if (static_cast<Index>(checkpoints.size()) != k) {
    throw GridMismatch("checkpoint labels and columns differ");
  }
  MartingaleTestReport rep;
  rep.checkpoints = std::move(checkpoints);
  rep.family_alpha = family_alpha;
  std::vector<Index> tested;
  for (Index c = 0; c + 1 < k; ++c) {
    const MCEstimate est =
        mc_estimate((values.col(c + 1) - values.col(c)).array());
    rep.increment_means.push_back(est);
    if (est.std_err == 0.0) {
      rep.z_scores.push_back(est.mean == 0.0 ? 0.0
                                             : std::copysign(INFINITY, est.mean));
      if (est.mean == 0.0) {
        rep.skipped.push_back(c);
        continue;
      }
    } else {
      rep.z_scores.push_back(est.mean / est.std_err);
    }
    tested.push_back(c);
  }
  const double m = static_cast<double>(std::max<std::size_t>(1, tested.size()));
  rep.critical = inverse_normal_cdf(1.0 - family_alpha / (2.0 * m));
  rep.passed = true;
  for (Index c : tested) {
    if (!(std::fabs(rep.z_scores[c]) < rep.critical)) rep.passed = false;
  }
  return rep;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kNone:
      return "none";
    case Verdict::kNAViolation:
      return "NA-violation";
    case Verdict::kFirstKind:
      return "first-kind";
  }
  return "none";
}

ArbitrageReport arbitrage_detect(std::span<const WealthLedger> ledgers,
                                 double bound, double tol) {
  const Index n = static_cast<Index>(ledgers.size());
  if (n < 2) throw InvalidParameter("arbitrage_detect needs two ledgers");
  Array terminal(n), positive(n);
  ArbitrageReport rep;
  rep.admissible = true;
  rep.zero_admissible = true;
  Index negative = 0;
  for (Index j = 0; j < n; ++j) {
    const WealthLedger& l = ledgers[j];
    const double gain = l.v_terminal - l.x0;
    terminal[j] = gain;
    positive[j] = gain > tol ? 1.0 : 0.0;
    if (gain < -tol) ++negative;
    rep.admissible = rep.admissible && check_admissible(l, bound, tol).admissible;
    rep.zero_admissible =
        rep.zero_admissible && check_admissible(l, 0.0, tol).admissible;
  }
  rep.min_terminal = terminal.minCoeff();
  rep.frac_negative = static_cast<double>(negative) / static_cast<double>(n);
  rep.p_positive = mc_estimate(positive);
  rep.mean = mc_estimate(terminal);
  const bool na = negative == 0 && rep.p_positive.ci_lo > 0.0 && rep.admissible;
  if (na) {
    rep.verdict = rep.zero_admissible ? Verdict::kFirstKind
                                      : Verdict::kNAViolation;
  }
  return rep;
}

FirstKindVerdict first_kind_verify(
    const std::vector<double>& xs,
    const std::vector<std::vector<WealthLedger>>& ledgers_per_x,
    const Array& xi, const Array& bias, double tol) {
  if (xs.size() != ledgers_per_x.size()) {
    throw InvalidParameter("one ledger set per endowment is required");
  }
  if (bias.size() != xi.size()) throw GridMismatch("bias and xi differ");
  FirstKindVerdict out;
  if (!(xi > tol).any()) {
    out.rejected_input = true;
    return out;
  }
  out.passed = true;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto& ledgers = ledgers_per_x[k];
    if (!(xs[k] > 0.0)) throw InvalidParameter("endowments must be positive");
    if (static_cast<Index>(ledgers.size()) != xi.size()) {
      throw GridMismatch("ledger count and xi differ");
    }
    double slack = INFINITY;
    bool adm = true;
    for (Index j = 0; j < xi.size(); ++j) {
      const WealthLedger& l = ledgers[j];
      slack = std::min(slack, l.v_terminal - (xi[j] - bias[j]));
      adm = adm && check_admissible(l, xs[k], tol).admissible;
    }
    out.min_slack.push_back(slack);
    out.admissible.push_back(adm);
    out.passed = out.passed && adm && slack >= -tol;
  }
  return out;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_uniform(Array x, double alpha) {
  const Index n = x.size();
  if (n < 1) throw InvalidParameter("ks test needs samples");
  std::sort(x.data(), x.data() + n);
  double d = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double u = std::clamp(x[i], 0.0, 1.0);
    d = std::max({d, (i + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(static_cast<double>(n));
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
  r.passed = r.p_value > alpha;
  return r;
}

double median(Array x) {
  const Index n = x.size();
  if (n < 1) throw InvalidParameter("median of empty sample");
  double* mid = x.data() + n / 2;
  std::nth_element(x.data(), mid, x.data() + n);
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(x.data(), mid);
  return 0.5 * (lo + hi);
}

double bootstrap_median_se(const Array& x, int resamples,
                           std::uint64_t seed) {
  const Index n = x.size();
  if (n < 2 || resamples < 2) {
    throw InvalidParameter("bootstrap needs two samples and two resamples");
  }
  Array meds(resamples);
  Array draw(n);
  for (int b = 0; b < resamples; ++b) {
    const CounterRng rng(seed, static_cast<std::uint64_t>(b), Stream::kBootstrap);
    for (Index i = 0; i < n; ++i) {
      const auto j = static_cast<Index>(rng.uniform(static_cast<std::uint64_t>(i)) *
                                        static_cast<double>(n));
      draw[i] = x[std::min(j, n - 1)];
    }
    meds[b] = median(draw);
  }
  return std::sqrt((meds - meds.mean()).square().sum() / (resamples - 1));
}

}  // namespace hlab

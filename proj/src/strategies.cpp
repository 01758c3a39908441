#include "hlab/strategies.hpp"

#include <cmath>

#include "hlab/errors.hpp"

namespace hlab {

WealthLedger integrate(const StrategyPath& theta, const Array& s, double x0) {
  if (theta.theta.size() != s.size()) {
    throw GridMismatch("strategy '" + theta.label +
                       "' and path lengths differ");
  }
  WealthLedger out;
  out.x0 = x0;
  out.v = x0 + stochastic_integral(theta.theta, s);
  out.v_min = out.v.minCoeff();
  out.v_terminal = out.v[out.v.size() - 1];
  return out;
}

WealthLedger integrate(const StrategyPath& theta, const PathBundle& path,
                       double x0) {
  return integrate(theta, path.s, x0);
}

StrategyPath strat_attau(const ReplicationIntegrand& phi,
                         const HonestTimeSample& tau) {
  StrategyPath out{Array::Zero(phi.phi.size()), "attau", 1.0};
  out.theta.head(tau.tau_index) = phi.phi.head(tau.tau_index);
  return out;
}

StrategyPath strat_arb_first_kind(const ReplicationIntegrand& phi,
                                  const HonestTimeSample& tau) {
  const Index n = phi.phi.size();
  StrategyPath out{Array::Zero(n), "arb1", 0.0};
  out.theta.tail(n - tau.tau_index) = -phi.phi.tail(n - tau.tau_index);
  return out;
}

Index shift_index(const HonestTimeSample& tau, double eps,
                  const TimeGrid& grid) {
  if (!(eps > 0.0)) throw InvalidParameter("shift must be positive");
  return tau.tau_index +
         static_cast<Index>(std::ceil(eps / grid.dt - 1e-9));
}

StrategyPath strat_shifted(const ReplicationIntegrand& phi,
                           const HonestTimeSample& tau, Index rho_index,
                           double n_star_tau) {
  if (rho_index <= tau.tau_index) {
    throw InvalidParameter("shift index must lie after tau");
  }
  if (!(n_star_tau > 0.0)) throw InvalidParameter("N*_tau must be positive");
  const Index n = phi.phi.size();
  StrategyPath out{Array::Zero(n), "shifted", 1.0};
  if (rho_index < n) {
    out.theta.tail(n - rho_index) = -phi.phi.tail(n - rho_index) / n_star_tau;
  }
  return out;
}

StrategyPath strat_buyhold_levels(const PathBundle& path, double b,
                                  const HonestTimeSample& tau) {
  StrategyPath out{Array::Zero(path.size()), "buyhold_levels", b};
  Index start = tau.tau_index;
  for (Index i = 0; i < tau.tau_index; ++i) {
    if (path.s[i] <= b) {
      start = i;
      break;
    }
  }
  out.theta.segment(start, tau.tau_index - start).setOnes();
  return out;
}

StrategyPath strat_buyhold_sigma_tau(const PathBundle& path,
                                     const StoppingRule& sigma,
                                     const HonestTimeSample& tau) {
  StrategyPath out{Array::Zero(path.size()), "buyhold_sigma_tau", 1.0};
  const Index end = std::min(sigma.first_index(path).value_or(path.size()),
                             tau.tau_index);
  out.theta.head(end).setOnes();
  return out;
}

StrategyPath strat_zero(Index size) {
  return {Array::Zero(size), "zero", 0.0};
}

StrategyPath strat_naive_short(const PathBundle& path,
                               const HonestTimeSample& tau) {
  StrategyPath out{Array::Zero(path.size()), "naive_short", 0.0};
  out.theta.head(tau.tau_index).setConstant(-1.0);
  return out;
}

AdmissibilityVerdict check_admissible(const WealthLedger& ledger,
                                      double bound, double tol) {
  const double worst = ledger.v_min - ledger.x0;
  return {worst >= -bound - tol, worst};
}

bool uip_check(const WealthLedger& ledger, double tol) {
  for (Index i = 0; i + 1 < ledger.v.size(); ++i) {
    if (ledger.v[i + 1] < ledger.v[i] - tol) return false;
  }
  return ledger.v_terminal - ledger.x0 > tol;
}

}  // namespace hlab

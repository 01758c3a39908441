#pragma once

#include <string>

#include "hlab/honest.hpp"

namespace hlab {

// theta[i] is the position held over step i -> i+1.
struct StrategyPath {
  Array theta;
  std::string label;
  double bound = 0.0;
};

struct WealthLedger {
  Array v;
  double x0 = 0.0;
  double v_min = 0.0;
  double v_terminal = 0.0;
};

inline constexpr double kAdmissibleSlack = 1e-9;

WealthLedger integrate(const StrategyPath& theta, const PathBundle& path,
                       double x0);
WealthLedger integrate(const StrategyPath& theta, const Array& s, double x0);

// phi on [0, tau].
StrategyPath strat_attau(const ReplicationIntegrand& phi,
                         const HonestTimeSample& tau);
// -phi after tau.
StrategyPath strat_arb_first_kind(const ReplicationIntegrand& phi,
                                  const HonestTimeSample& tau);

// Grid index of tau + eps, rounded up.
Index shift_index(const HonestTimeSample& tau, double eps,
                  const TimeGrid& grid);

// -phi / N*_tau from rho = tau + eps on. Before rho the weights vanish, so
// integrating against S equals integrating against the shifted asset.
StrategyPath strat_shifted(const ReplicationIntegrand& phi,
                           const HonestTimeSample& tau, Index rho_index,
                           double n_star_tau);

// Long one unit between the first visit below b (or tau, if earlier) and tau.
StrategyPath strat_buyhold_levels(const PathBundle& path, double b,
                                  const HonestTimeSample& tau);

// Long one unit on [0, sigma ^ tau].
StrategyPath strat_buyhold_sigma_tau(const PathBundle& path,
                                     const StoppingRule& sigma,
                                     const HonestTimeSample& tau);

StrategyPath strat_zero(Index size);

// Short one unit on [0, tau].
StrategyPath strat_naive_short(const PathBundle& path,
                               const HonestTimeSample& tau);

struct AdmissibilityVerdict {
  bool admissible = false;
  double worst_gain = 0.0;
};

// Gains V - x0 must stay above -bound - tol.
AdmissibilityVerdict check_admissible(const WealthLedger& ledger,
                                      double bound, double tol);

// True for nondecreasing ledgers (within tol per step) that end above tol.
bool uip_check(const WealthLedger& ledger, double tol);

}  // namespace hlab

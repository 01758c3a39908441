#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hlab/enlarge.hpp"
#include "hlab/stats.hpp"

namespace hlab {

struct KSpec {
  enum class Kind { kConstant, kFunction };

  Kind kind = Kind::kConstant;
  double value = 0.0;
  std::function<double(double t, double n_star)> fn;

  double at(double t, double n_star) const {
    return kind == Kind::kConstant ? value : fn(t, n_star);
  }
};

struct EtaSpec {
  enum class Kind { kZero, kSymmetricCoin };

  Kind kind = Kind::kZero;
  double h = 0.0;
};

struct DeflatorSpec {
  KSpec k;
  EtaSpec eta;

  void validate() const;
};

struct DeflatorPath {
  Array l;
};

// L_i = 1 / N_{i ^ tau}.
DeflatorPath deflator_basic(const AzemaPaths& azema,
                            const HonestTimeSample& tau);

// max_i |1/N_{i^tau} - (1 - sum_{j < i^tau} phi_j / N_j^2 dS~_j)|
double deflator_ito_consistency(const AzemaPaths& azema,
                                const HonestTimeSample& tau,
                                const ReplicationIntegrand& phi,
                                const GDecomposition& g);

// +1 or -1 from the auxiliary coin of this path.
double coin_sign(const PathBundle& path);

// exp(-int_0^{i} k / N* dN*) on the grid; closed form for constant k, left
// Stieltjes sums otherwise.
Array k_discount(const PathBundle& path, const AzemaPaths& azema,
                 const KSpec& k);
// Left Stieltjes sum of k / N* dN* up to `end`, regardless of the kind of k.
double k_stieltjes_sum(const PathBundle& path, const AzemaPaths& azema,
                       const KSpec& k, Index end);

// The family deflator stopped at sigma ^ tau and frozen afterwards.
DeflatorPath deflator_family(const PathBundle& path, const AzemaPaths& azema,
                             const HonestTimeSample& tau,
                             const DeflatorSpec& spec,
                             const StoppingRule& sigma);

struct CompTerms {
  double lhs = 0.0;
  double rhs = 0.0;
  double integral = 0.0;
  bool tau_le_sigma = false;
  bool nu_le_sigma = false;
};

// Per-path terms of E[L_{sigma^tau}] = E[1 - exp(-int_0^tau (1+k)/N* dN*)
// 1{nu <= sigma}]. A sigma that never fires within the horizon of an
// infinite-nu path is read as sigma = infinity.
CompTerms comp_identity_terms(const HonestTimeKind& kind,
                              const PathBundle& path, const AzemaPaths& azema,
                              const HonestTimeSample& tau,
                              const DeflatorSpec& spec,
                              const StoppingRule& sigma);

struct CompIdentityResult {
  MCEstimate lhs;
  MCEstimate rhs;
  double combined_se = 0.0;
  double min_integral = 0.0;
  double frac_integral_positive = 0.0;
};

CompIdentityResult comp_identity_test(std::span<const CompTerms> terms);

struct AfterRho {
  DeflatorPath l;
  Array shifted_s;
};

// rhoL_i = (N*_inf - N_rho) / (N*_inf - N_{rho v i}) for the asset
// S_{rho v i} - S_rho.
AfterRho deflator_after(const PathBundle& path, const AzemaPaths& azema,
                        const HonestTimeSample& tau, Index rho_index,
                        double threshold = 1e-6);

// 1/(1 - Z_{tau+h}) per offset (in steps); NaN beyond the path.
Array no_global_deflator_witness(const AzemaPaths& azema,
                                 const HonestTimeSample& tau,
                                 const std::vector<Index>& offsets);

struct DivergenceTable {
  std::vector<double> mean;
  std::vector<Index> defined;
  Index complete_rows = 0;
  double monotone_fraction = 0.0;
  double frac_above_bound = 0.0;
};

// Rows are witness outputs for offsets listed largest first; a row is
// monotone when its values strictly increase along the list.
DivergenceTable divergence_table(const std::vector<Array>& rows,
                                 double bound = 1e6);

}  // namespace hlab

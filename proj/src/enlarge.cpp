#include "hlab/enlarge.hpp"

#include "hlab/errors.hpp"

namespace hlab {

InformationDrift information_drift(const AzemaPaths& az,
                                   const HonestTimeSample& tau,
                                   const ReplicationIntegrand& phi,
                                   double eps_excl) {
  const Index n = az.n.size();
  if (phi.phi.size() != n) throw GridMismatch("phi and N lengths differ");
  if (tau.tau_index >= n) throw GridMismatch("tau beyond the path");
  const double n_inf = az.n_star[n - 1];
  InformationDrift out{Array::Zero(n), {}};
  for (Index i = 0; i <= tau.tau_index; ++i) {
    if (!(az.n[i] > 0.0)) {
      throw ConsistencyError("N vanishes before the honest time");
    }
    out.alpha[i] = phi.phi[i] / az.n[i];
  }
  for (Index i = tau.tau_index + 1; i < n; ++i) {
    const double gap = n_inf - az.n[i];
    if (gap < eps_excl * n_inf) {
      out.excluded_window.push_back(i);
      continue;
    }
    out.alpha[i] = -phi.phi[i] / gap;
  }
  return out;
}

GDecomposition g_decompose(const PathBundle& p, const InformationDrift& d) {
  const Index n = p.size();
  if (d.alpha.size() != n) throw GridMismatch("drift and path lengths differ");
  GDecomposition out{Array(n), Array(n)};
  out.a_tilde[0] = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    out.a_tilde[i + 1] = out.a_tilde[i] + d.alpha[i] * (p.qv[i + 1] - p.qv[i]);
  }
  out.s_tilde = p.s - out.a_tilde;
  return out;
}

}  // namespace hlab

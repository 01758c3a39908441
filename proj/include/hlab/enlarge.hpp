#pragma once

#include <vector>

#include "hlab/honest.hpp"

namespace hlab {

struct InformationDrift {
  Array alpha;
  std::vector<Index> excluded_window;
};

struct GDecomposition {
  Array s_tilde;
  Array a_tilde;
};

// alpha_i = phi_i / N_i up to tau and -phi_i / (N*_inf - N_i) after it.
// Indices after tau with N*_inf - N_i < eps_excl * N*_inf are excluded and
// carry alpha = 0.
InformationDrift information_drift(const AzemaPaths& azema,
                                   const HonestTimeSample& tau,
                                   const ReplicationIntegrand& phi,
                                   double eps_excl = 1e-6);

// A-tilde accumulates alpha against realized quadratic variation.
GDecomposition g_decompose(const PathBundle& path,
                           const InformationDrift& drift);

}  // namespace hlab

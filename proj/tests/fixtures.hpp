#pragma once

#include <cmath>
#include <vector>

#include "hlab/honest.hpp"

namespace fixtures {

// A bundle whose prices are exactly `prices`, obtained by inverting the
// lognormal step.
inline hlab::PathBundle from_prices(const std::vector<double>& prices,
                                    double sigma = 0.3, double dt = 0.01) {
  hlab::Array dw(static_cast<hlab::Index>(prices.size()) - 1);
  for (hlab::Index i = 0; i < dw.size(); ++i) {
    dw[i] = (std::log(prices[i + 1] / prices[i]) + 0.5 * sigma * sigma * dt) /
            sigma;
  }
  return hlab::gbm_from_increments(prices.front(), sigma, dt, dw);
}

inline hlab::PathBundle zero_noise(double s0, double sigma, double dt,
                                   hlab::Index n) {
  return hlab::gbm_from_increments(s0, sigma, dt, hlab::Array::Zero(n));
}

}  // namespace fixtures

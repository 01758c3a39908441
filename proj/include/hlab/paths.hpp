#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

#include "hlab/rng.hpp"

namespace hlab {

using Index = Eigen::Index;
using Array = Eigen::ArrayXd;

struct TimeGrid {
  TimeGrid(double dt, Index n_steps);

  double dt;
  Index n_steps;

  double t(Index i) const { return static_cast<double>(i) * dt; }
  double horizon() const { return t(n_steps); }
};

// One price path. `w` holds the n_steps Brownian increments, the other
// arrays hold n_steps + 1 grid values. S = s0 * exp(log_ret).
struct PathBundle {
  TimeGrid grid;
  Array s;
  Array w;
  Array log_ret;
  Array s_star;
  Array qv;
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;

  Index size() const { return s.size(); }
  Index last() const { return s.size() - 1; }
};

struct LocalTimePath {
  double level;
  Array l;
};

using VolFn = std::function<double(double)>;

struct TwoFactorPath {
  PathBundle s;
  Array w1;  // levels of the first driver, same length as s.s
};

// Brownian increments sqrt(dt) Z_i for steps [begin, begin + count).
Array brownian_increments(std::uint64_t seed, std::uint64_t path_index,
                          Stream stream, Index begin, Index count, double dt);

PathBundle simulate_gbm(double s0, double sigma, const TimeGrid& grid,
                        std::uint64_t seed, std::uint64_t path_index);

// Exact lognormal scheme driven by caller-supplied increments.
PathBundle gbm_from_increments(double s0, double sigma, double dt,
                               const Array& dw);

// Continues a simulate_gbm path with the noise it would have drawn had the
// grid been longer from the start.
void extend_gbm(PathBundle& path, double sigma, Index extra_steps);

PathBundle simulate_vol_fn(double s0, const VolFn& vol, const TimeGrid& grid,
                           std::uint64_t seed, std::uint64_t path_index);

TwoFactorPath simulate_two_factor(double s0, const VolFn& f,
                                  const TimeGrid& grid, std::uint64_t seed,
                                  std::uint64_t path_index);

// Sums consecutive groups of `factor` increments.
Array coarsen_increments(const Array& dw, Index factor);

LocalTimePath local_time_tanaka(const PathBundle& path, double a);

// (1/2eps) * sum of squared increments taken while |S - a| <= eps.
Array occupation_local_time(const PathBundle& path, double a, double eps);

Array stochastic_integral(const Array& theta, const Array& s);

inline double log_step(double vol, double dw, double dt) {
  return vol * dw - 0.5 * vol * vol * dt;
}

}  // namespace hlab

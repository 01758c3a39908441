#include "hlab/paths.hpp"

#include <algorithm>
#include <cmath>

#include "hlab/errors.hpp"

namespace hlab {

namespace {

void fill_derived(PathBundle& p, Index from) {
  const Index n = p.s.size();
  if (from == 0) {
    p.s_star[0] = p.s[0];
    p.qv[0] = 0.0;
    from = 1;
  }
  for (Index i = from; i < n; ++i) {
    p.s_star[i] = std::max(p.s_star[i - 1], p.s[i]);
    const double ds = p.s[i] - p.s[i - 1];
    p.qv[i] = p.qv[i - 1] + ds * ds;
  }
}

void check_market(double s0, double sigma) {
  if (!(s0 > 0.0)) throw InvalidParameter("s0 must be positive");
  if (sigma == 0.0 || !std::isfinite(sigma)) {
    throw InvalidParameter("sigma must be nonzero and finite");
  }
}

PathBundle allocate(const TimeGrid& grid) {
  const Index n = grid.n_steps + 1;
  PathBundle p{grid, Array(n), Array(grid.n_steps), Array(n), Array(n),
               Array(n)};
  return p;
}

// Prices from log-returns on [from, size).
void fill_prices(PathBundle& p, double s0, Index from) {
  const Index n = p.s.size();
  for (Index i = std::max<Index>(from, 1); i < n; ++i) {
    p.s[i] = s0 * std::exp(p.log_ret[i]);
  }
  p.s[0] = s0;
}

}  // namespace

TimeGrid::TimeGrid(double dt_, Index n_steps_) : dt(dt_), n_steps(n_steps_) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidParameter("time step must be positive");
  }
  if (n_steps < 1) throw InvalidParameter("grid needs at least one step");
}

Array brownian_increments(std::uint64_t seed, std::uint64_t path_index,
                          Stream stream, Index begin, Index count, double dt) {
  const CounterRng rng(seed, path_index, stream);
  const double sq = std::sqrt(dt);
  Array out(count);
  Index k = 0;
  Index i = begin;
  if (count > 0 && (i & 1)) {
    out[k++] = sq * rng.normal_pair(static_cast<std::uint64_t>(i) >> 1)[1];
    ++i;
  }
  for (; k + 1 < count; k += 2, i += 2) {
    const auto z = rng.normal_pair(static_cast<std::uint64_t>(i) >> 1);
    out[k] = sq * z[0];
    out[k + 1] = sq * z[1];
  }
  if (k < count) {
    out[k] = sq * rng.normal_pair(static_cast<std::uint64_t>(i) >> 1)[0];
  }
  return out;
}

PathBundle gbm_from_increments(double s0, double sigma, double dt,
                               const Array& dw) {
  check_market(s0, sigma);
  PathBundle p = allocate(TimeGrid(dt, dw.size()));
  p.w = dw;
  p.log_ret[0] = 0.0;
  for (Index i = 0; i < dw.size(); ++i) {
    p.log_ret[i + 1] = p.log_ret[i] + log_step(sigma, dw[i], dt);
  }
  fill_prices(p, s0, 0);
  fill_derived(p, 0);
  return p;
}

PathBundle simulate_gbm(double s0, double sigma, const TimeGrid& grid,
                        std::uint64_t seed, std::uint64_t path_index) {
  const Array dw = brownian_increments(seed, path_index, Stream::kMain, 0,
                                       grid.n_steps, grid.dt);
  PathBundle p = gbm_from_increments(s0, sigma, grid.dt, dw);
  p.seed = seed;
  p.path_index = path_index;
  return p;
}

void extend_gbm(PathBundle& p, double sigma, Index extra) {
  if (extra <= 0) return;
  const Index n_old = p.grid.n_steps;
  const Array dw = brownian_increments(p.seed, p.path_index, Stream::kMain,
                                       n_old, extra, p.grid.dt);
  const Index n_new = n_old + extra;
  p.w.conservativeResize(n_new);
  p.log_ret.conservativeResize(n_new + 1);
  p.s.conservativeResize(n_new + 1);
  p.s_star.conservativeResize(n_new + 1);
  p.qv.conservativeResize(n_new + 1);
  p.w.tail(extra) = dw;
  for (Index i = n_old; i < n_new; ++i) {
    p.log_ret[i + 1] = p.log_ret[i] + log_step(sigma, p.w[i], p.grid.dt);
  }
  p.grid.n_steps = n_new;
  fill_prices(p, p.s[0], n_old + 1);
  fill_derived(p, n_old + 1);
}

PathBundle simulate_vol_fn(double s0, const VolFn& vol, const TimeGrid& grid,
                           std::uint64_t seed, std::uint64_t path_index) {
  if (!(s0 > 0.0)) throw InvalidParameter("s0 must be positive");
  PathBundle p = allocate(grid);
  p.seed = seed;
  p.path_index = path_index;
  p.w = brownian_increments(seed, path_index, Stream::kMain, 0, grid.n_steps,
                            grid.dt);
  p.log_ret[0] = 0.0;
  double s = s0;
  for (Index i = 0; i < grid.n_steps; ++i) {
    const double v = vol(s);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidParameter("volatility function must be positive");
    }
    p.log_ret[i + 1] = p.log_ret[i] + log_step(v, p.w[i], grid.dt);
    s = s0 * std::exp(p.log_ret[i + 1]);
  }
  fill_prices(p, s0, 0);
  fill_derived(p, 0);
  return p;
}

TwoFactorPath simulate_two_factor(double s0, const VolFn& f,
                                  const TimeGrid& grid, std::uint64_t seed,
                                  std::uint64_t path_index) {
  if (!(s0 > 0.0)) throw InvalidParameter("s0 must be positive");
  const Array dw1 = brownian_increments(seed, path_index, Stream::kMain, 0,
                                        grid.n_steps, grid.dt);
  TwoFactorPath out{allocate(grid), Array(grid.n_steps + 1)};
  PathBundle& p = out.s;
  p.seed = seed;
  p.path_index = path_index;
  p.w = brownian_increments(seed, path_index, Stream::kDriver2, 0,
                            grid.n_steps, grid.dt);
  p.log_ret[0] = 0.0;
  out.w1[0] = 0.0;
  for (Index i = 0; i < grid.n_steps; ++i) {
    const double v = f(out.w1[i]);
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidParameter("volatility function must be positive");
    }
    p.log_ret[i + 1] = p.log_ret[i] + log_step(v, p.w[i], grid.dt);
    out.w1[i + 1] = out.w1[i] + dw1[i];
  }
  fill_prices(p, s0, 0);
  fill_derived(p, 0);
  return out;
}

Array coarsen_increments(const Array& dw, Index factor) {
  if (factor < 1 || dw.size() % factor != 0) {
    throw GridMismatch("increment count not divisible by coarsening factor");
  }
  const Index m = dw.size() / factor;
  Array out(m);
  for (Index j = 0; j < m; ++j) out[j] = dw.segment(j * factor, factor).sum();
  return out;
}

LocalTimePath local_time_tanaka(const PathBundle& p, double a) {
  if (!(a > 0.0)) throw InvalidParameter("local time level must be positive");
  const Index n = p.size();
  LocalTimePath lt{a, Array(n)};
  lt.l[0] = 0.0;
  // Each step contributes |S'-a| - |S-a| - sgn(S-a)(S'-S) >= 0, so the
  // running max below only guards against rounding.
  double raw = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    const double x = p.s[i] - a;
    const double y = p.s[i + 1] - a;
    const double sgn = x >= 0.0 ? 1.0 : -1.0;
    raw += std::fabs(y) - std::fabs(x) - sgn * (y - x);
    lt.l[i + 1] = std::max({lt.l[i], raw, 0.0});
  }
  return lt;
}

Array occupation_local_time(const PathBundle& p, double a, double eps) {
  if (!(eps > 0.0)) throw InvalidParameter("band width must be positive");
  const Index n = p.size();
  Array l(n);
  l[0] = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    const double dq = p.qv[i + 1] - p.qv[i];
    l[i + 1] = l[i] + (std::fabs(p.s[i] - a) <= eps ? dq / (2.0 * eps) : 0.0);
  }
  return l;
}

Array stochastic_integral(const Array& theta, const Array& s) {
  if (theta.size() != s.size()) {
    throw GridMismatch("integrand and integrator lengths differ");
  }
  const Index n = s.size();
  Array v(n);
  v[0] = 0.0;
  for (Index i = 0; i + 1 < n; ++i) v[i + 1] = v[i] + theta[i] * (s[i + 1] - s[i]);
  return v;
}

}  // namespace hlab

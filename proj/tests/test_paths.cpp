#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "hlab/errors.hpp"
#include "hlab/paths.hpp"
#include "hlab/stats.hpp"

using namespace hlab;

namespace {

void check_invariants(const PathBundle& p) {
  REQUIRE(p.s.size() == p.grid.n_steps + 1);
  REQUIRE(p.w.size() == p.grid.n_steps);
  CHECK(p.qv[0] == 0.0);
  double run = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    run = std::max(run, p.s[i]);
    CHECK(p.s[i] > 0.0);
    CHECK(p.s_star[i] == run);
    if (i > 0) CHECK(p.qv[i] >= p.qv[i - 1]);
  }
}

}  // namespace

TEST_SUITE("paths") {
  TEST_CASE("grid validation") {
    CHECK_THROWS_AS(TimeGrid(0.0, 10), InvalidParameter);
    CHECK_THROWS_AS(TimeGrid(-1e-3, 10), InvalidParameter);
    CHECK_THROWS_AS(TimeGrid(1e-3, 0), InvalidParameter);
    CHECK(TimeGrid(0.25, 8).horizon() == 2.0);
  }

  TEST_CASE("zero noise gives the deterministic drift-corrected path") {
    const double sigma = 0.3, dt = 0.01;
    const PathBundle p = fixtures::zero_noise(1.0, sigma, dt, 500);
    for (Index i = 0; i < p.size(); ++i) {
      CHECK(p.s[i] == doctest::Approx(std::exp(-0.5 * sigma * sigma * p.grid.t(i))).epsilon(1e-13));
    }
    CHECK(p.s_star.maxCoeff() == 1.0);
  }

  TEST_CASE("exact scheme is a martingale with positive paths") {
    const TimeGrid grid(0.1, 10);
    const Index n = 100000;
    Array terminal(n);
    for (Index j = 0; j < n; ++j) {
      const PathBundle p = simulate_gbm(1.0, 0.3, grid, 3, static_cast<std::uint64_t>(j));
      if (j < 50) check_invariants(p);
      CHECK(p.s[0] == 1.0);
      terminal[j] = p.s[p.last()];
    }
    const MCEstimate e = mc_estimate(terminal);
    CHECK(std::fabs(e.mean - 1.0) <= 3.0 * e.std_err);
  }

  TEST_CASE("terminal log-return has the lognormal law") {
    const double sigma = 0.4;
    const TimeGrid grid(0.05, 20);
    const Index n = 5000;
    Array u(n);
    for (Index j = 0; j < n; ++j) {
      const PathBundle p = simulate_gbm(1.0, sigma, grid, 4, static_cast<std::uint64_t>(j));
      const double x = std::log(p.s[p.last()]) + 0.5 * sigma * sigma * grid.horizon();
      u[j] = normal_cdf(x / (sigma * std::sqrt(grid.horizon())));
    }
    CHECK(ks_uniform(u).passed);
  }

  TEST_CASE("determinism and path independence") {
    const TimeGrid grid(0.01, 100);
    const PathBundle a = simulate_gbm(1.0, 0.3, grid, 9, 2);
    const PathBundle b = simulate_gbm(1.0, 0.3, grid, 9, 2);
    const PathBundle c = simulate_gbm(1.0, 0.3, grid, 9, 3);
    CHECK((a.s == b.s).all());
    CHECK((a.w == b.w).all());
    CHECK(!(a.s == c.s).all());
  }

  TEST_CASE("extending a path reproduces the longer simulation") {
    PathBundle p = simulate_gbm(1.0, 0.3, TimeGrid(0.01, 300), 5, 1);
    extend_gbm(p, 0.3, 700);
    const PathBundle q = simulate_gbm(1.0, 0.3, TimeGrid(0.01, 1000), 5, 1);
    REQUIRE(p.size() == q.size());
    CHECK((p.w == q.w).all());
    CHECK((p.s == q.s).all());
    CHECK((p.s_star == q.s_star).all());
    CHECK(p.qv[p.last()] == doctest::Approx(q.qv[q.last()]).epsilon(1e-14));
    check_invariants(p);
  }

  TEST_CASE("coarsened increments drive the subsampled path") {
    const Array fine = brownian_increments(2, 0, Stream::kMain, 0, 64, 0.001);
    const Array coarse = coarsen_increments(fine, 4);
    REQUIRE(coarse.size() == 16);
    const PathBundle pf = gbm_from_increments(1.0, 0.3, 0.001, fine);
    const PathBundle pc = gbm_from_increments(1.0, 0.3, 0.004, coarse);
    for (Index i = 0; i < pc.size(); ++i) {
      CHECK(pc.s[i] == doctest::Approx(pf.s[4 * i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(coarsen_increments(fine, 5), GridMismatch);
  }

  TEST_CASE("constant volatility function reduces to GBM exactly") {
    const TimeGrid grid(0.01, 400);
    const PathBundle g = simulate_gbm(1.0, 0.3, grid, 6, 4);
    const PathBundle v = simulate_vol_fn(1.0, [](double) { return 0.3; }, grid, 6, 4);
    CHECK((g.s == v.s).all());
    const double s1 = 1.0 * std::exp(0.3 * v.w[0] - 0.5 * 0.09 * 0.01);
    CHECK(v.s[1] == doctest::Approx(s1).epsilon(1e-15));
  }

  TEST_CASE("state-dependent volatility keeps paths positive") {
    const VolFn vol = [](double x) { return 0.2 + 0.1 * std::min(x, 1.0); };
    for (double dt : {0.1, 0.01}) {
      for (std::uint64_t j = 0; j < 100; ++j) {
        const PathBundle p = simulate_vol_fn(1.0, vol, TimeGrid(dt, 2000), 8, j);
        CHECK(p.s.minCoeff() > 0.0);
      }
    }
  }

  TEST_CASE("two-factor market") {
    const double sigma_bar = 0.35;
    const TimeGrid grid(0.02, 50);
    const Index n = 4000;
    Array u(n), cross(n);
    for (Index j = 0; j < n; ++j) {
      const auto tf = simulate_two_factor(1.0, [&](double) { return sigma_bar; }, grid, 12,
                                          static_cast<std::uint64_t>(j));
      const double t = grid.horizon();
      const double x = std::log(tf.s.s[tf.s.last()]) + 0.5 * sigma_bar * sigma_bar * t;
      u[j] = normal_cdf(x / (sigma_bar * std::sqrt(t)));
      const double dn = std::exp(tf.w1[1] - 0.5 * grid.dt) - 1.0;
      cross[j] = (tf.s.s[1] - tf.s.s[0]) * dn;
    }
    CHECK(ks_uniform(u).passed);
    CHECK(mc_estimate(cross).contains(0.0));
  }

  TEST_CASE("local time") {
    SUBCASE("no crossings") {
      const PathBundle p = simulate_gbm(1.0, 0.3, TimeGrid(1e-3, 1000), 1, 0);
      const double a = 10.0;
      const LocalTimePath lt = local_time_tanaka(p, a);
      CHECK(lt.l.abs().maxCoeff() <= 10.0 * std::sqrt(1e-3) * a);
    }
    SUBCASE("zero noise") {
      const PathBundle p = fixtures::zero_noise(1.0, 0.3, 0.01, 2000);
      CHECK(local_time_tanaka(p, 0.8).l.abs().maxCoeff() <= 10.0 * std::sqrt(0.01) * 0.8);
      CHECK(local_time_tanaka(p, 1.5).l.abs().maxCoeff() == 0.0);
    }
    SUBCASE("monotone projection") {
      const PathBundle p = simulate_gbm(1.0, 0.3, TimeGrid(1e-3, 5000), 2, 0);
      const LocalTimePath lt = local_time_tanaka(p, 0.95);
      CHECK(lt.l[0] == 0.0);
      for (Index i = 1; i < lt.l.size(); ++i) CHECK(lt.l[i] >= lt.l[i - 1]);
    }
    SUBCASE("Tanaka agrees with the occupation estimator") {
      const double dt = 1e-4, sigma = 0.3, a = 0.8;
      const double eps = std::sqrt(sigma * sigma * a * a * dt);
      const TimeGrid grid(dt, 40000);
      double tanaka = 0.0, occupation = 0.0;
      for (std::uint64_t j = 0; j < 100; ++j) {
        const PathBundle p = simulate_gbm(1.0, sigma, grid, 13, j);
        tanaka += local_time_tanaka(p, a).l[p.last()];
        occupation += occupation_local_time(p, a, eps)[p.last()];
      }
      REQUIRE(tanaka > 0.0);
      CHECK(std::fabs(occupation - tanaka) / tanaka <= 0.15);
    }
  }

  TEST_CASE("left-point stochastic integral") {
    const PathBundle p = simulate_gbm(1.0, 0.3, TimeGrid(0.01, 200), 3, 0);
    const Array v = stochastic_integral(Array::Ones(p.size()), p.s);
    for (Index i = 0; i < p.size(); ++i) {
      CHECK(v[i] == doctest::Approx(p.s[i] - p.s[0]).epsilon(1e-12));
    }
    CHECK(stochastic_integral(Array::Zero(p.size()), p.s).abs().maxCoeff() == 0.0);
  }
}

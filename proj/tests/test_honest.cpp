#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "hlab/errors.hpp"
#include "hlab/honest.hpp"
#include "hlab/stats.hpp"

using namespace hlab;

namespace {

const Market kMarket{1.0, 0.3};
const HorizonPolicy kPolicy{};

struct Run {
  PathBundle p;
  AzemaPaths az;
  HonestTimeSample tau;
};

Run run(const HonestTimeKind& kind, std::uint64_t j, double dt = 4e-3) {
  PathBundle p = simulate_to_horizon(kind, kMarket, dt, kPolicy, 21, j);
  AzemaPaths az = azema_decomposition(kind, p);
  HonestTimeSample tau = detect_tau(kind, az, kPolicy.delta);
  return {std::move(p), std::move(az), tau};
}

}  // namespace

TEST_SUITE("honest") {
  TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(validate(LastPassage{1.2}, kMarket), InvalidParameter);
    CHECK_THROWS_AS(validate(LastPassage{0.0}, kMarket), InvalidParameter);
    CHECK_THROWS_AS(validate(Drawdown{-0.1}, kMarket), InvalidParameter);
    CHECK_THROWS_AS(validate(truncated_last_supremum(1.5), kMarket), InvalidParameter);
    const HonestTimeKind above =
        TruncatedBy{std::make_shared<const HonestTimeKind>(LastSupremum{}),
                    StoppingRule::hit_above(1.5)};
    CHECK_THROWS_AS(validate(above, kMarket), InvalidParameter);
    CHECK_NOTHROW(validate(Drawdown{0.5}, kMarket));
  }

  TEST_CASE("stopping rules") {
    const PathBundle p = fixtures::from_prices({1.0, 1.2, 1.6, 0.9, 0.4}, 0.3, 0.5);
    CHECK(StoppingRule::hit_above(1.5).first_index(p) == Index{2});
    CHECK(StoppingRule::hit_below(0.5).first_index(p) == Index{4});
    CHECK(StoppingRule::fixed_time(1.0).first_index(p) == Index{2});
    CHECK(!StoppingRule::fixed_time(3.0).first_index(p));
    CHECK(!StoppingRule::never().first_index(p));
  }

  TEST_CASE("normalization at time zero and multiplicative decomposition") {
    const std::vector<HonestTimeKind> kinds = {LastSupremum{}, LastPassage{0.8},
                                               Drawdown{0.5},
                                               truncated_last_supremum(0.5)};
    for (const auto& k : kinds) {
      for (std::uint64_t j = 0; j < 20; ++j) {
        const Run r = run(k, j);
        CHECK(r.az.z[0] == 1.0);
        CHECK(r.az.n[0] == 1.0);
        CHECK(r.az.n_star[0] == 1.0);
        CHECK(verify_mult_decomposition(r.az) <= 1e-12);
        for (Index i = 1; i < r.az.n_star.size(); ++i) {
          INFO("kind ", k.index(), " path ", j, " index ", i, " of ", r.p.size());
          REQUIRE(r.az.n_star[i] >= r.az.n_star[i - 1]);
        }
      }
    }
  }

  TEST_CASE("last supremum: Z = S/S*, phi = 1/s0, exact replication") {
    for (std::uint64_t j = 0; j < 20; ++j) {
      const Run r = run(LastSupremum{}, j);
      for (Index i = 0; i < r.p.size(); ++i) {
        REQUIRE(r.az.z[i] == r.p.s[i] / r.p.s_star[i]);
      }
      const ReplicationIntegrand phi = replication_integrand(LastSupremum{}, r.p, r.az);
      CHECK((phi.phi == 1.0).all());
      CHECK(replication_residual(r.p, r.az, phi) <= 1e-12);
      // Horizon certificate, and tau is the argmax of the path.
      CHECK(r.az.z[r.p.last()] <= kPolicy.delta);
      Index argmax = 0;
      for (Index i = 0; i < r.p.size(); ++i) {
        if (r.p.s[i] >= r.p.s[argmax]) argmax = i;
      }
      CHECK(r.tau.tau_index == argmax);
      CHECK(!r.tau.nu_index);
    }
  }

  TEST_CASE("decreasing path has its supremum at the start") {
    const PathBundle p = fixtures::zero_noise(1.0, 0.3, 0.1, 2000);
    CHECK(detect_tau(LastSupremum{}, p, 1e-3).tau_index == 0);
  }

  TEST_CASE("last passage: tau is the last visit above a, phi vanishes above a") {
    const double a = 0.8;
    for (std::uint64_t j = 0; j < 20; ++j) {
      const Run r = run(LastPassage{a}, j);
      Index last_above = 0;
      for (Index i = 0; i < r.p.size(); ++i) {
        if (r.p.s[i] >= a) last_above = i;
      }
      CHECK(r.tau.tau_index == last_above);
      const ReplicationIntegrand phi = replication_integrand(LastPassage{a}, r.p, r.az);
      for (Index i = 0; i < r.p.size(); ++i) {
        if (r.p.s[i] >= a) REQUIRE(phi.phi[i] == 0.0);
      }
    }
  }

  TEST_CASE("drawdown: nu is the drawdown hit, tau the last maximum before it") {
    const double K = 0.5;
    for (std::uint64_t j = 0; j < 30; ++j) {
      const Run r = run(Drawdown{K}, j);
      Index nu = -1;
      for (Index i = 0; i < r.p.size() && nu < 0; ++i) {
        if (r.p.s_star[i] - r.p.s[i] >= K) nu = i;
      }
      REQUIRE(nu >= 0);
      REQUIRE(r.tau.nu_index);
      CHECK(*r.tau.nu_index == nu);
      Index tau = 0;
      for (Index i = 0; i < nu; ++i) {
        if (r.p.s[i] == r.p.s_star[i]) tau = i;
      }
      CHECK(r.tau.tau_index == tau);
      for (Index i = nu; i < r.p.size(); ++i) {
        CHECK(r.az.z[i] == 0.0);
        CHECK(r.az.n[i] == 0.0);
      }
      const ReplicationIntegrand phi = replication_integrand(Drawdown{K}, r.p, r.az);
      CHECK(phi.phi.size() == r.p.size());
    }
  }

  TEST_CASE("a path too short for its certificate is reported") {
    HorizonPolicy tight;
    tight.block_steps = 16;
    tight.max_steps = 64;
    const PathBundle capped = simulate_to_horizon(LastSupremum{}, kMarket, 1e-3, tight, 1, 0);
    CHECK(capped.grid.n_steps == 64);
    try {
      detect_tau(LastSupremum{}, capped, 1e-3);
      FAIL("expected an incomplete path");
    } catch (const IncompletePath& e) {
      CHECK(e.ratio() > 1e-3);
    }
    const PathBundle p = simulate_gbm(1.0, 0.3, TimeGrid(1e-3, 100), 1, 0);
    CHECK_THROWS_AS(detect_tau(LastSupremum{}, p, 1e-3), IncompletePath);
    CHECK_THROWS_AS(detect_tau(Drawdown{0.5}, p, 1e-3), IncompletePath);
  }

  TEST_CASE("last attainment on a window") {
    const PathBundle p = fixtures::from_prices({1.0, 1.3, 1.1, 1.3, 0.9});
    const AzemaPaths az = azema_decomposition(LastSupremum{}, p);
    CHECK(last_attainment_index(az, 4) == 3);
    CHECK(last_attainment_index(az, 2) == 1);
  }

  TEST_CASE("replication error shrinks under refinement for last passage") {
    const double a = 0.8;
    const Index fine_steps = 8 * 2000;
    double coarse = 0.0, fine = 0.0;
    for (std::uint64_t j = 0; j < 200; ++j) {
      const Array dw = brownian_increments(3, j, Stream::kMain, 0, fine_steps, 1e-3);
      for (Index f : {Index{8}, Index{1}}) {
        const PathBundle p = gbm_from_increments(1.0, 0.3, 1e-3 * f, coarsen_increments(dw, f));
        const AzemaPaths az = azema_decomposition(LastPassage{a}, p);
        const double r = replication_residual(p, az, replication_integrand(LastPassage{a}, p, az));
        (f == 8 ? coarse : fine) += r;
      }
    }
    // Three halvings at a sqrt(dt) rate or faster.
    CHECK(coarse / fine >= std::pow(1.2, 3));
  }

  TEST_CASE("bridge sampler reproduces b/a") {
    const double a = 0.8, b = 0.4;
    const Index n = 4000;
    Array ev(n);
    for (Index j = 0; j < n; ++j) {
      ev[j] = sample_passage_event(kMarket, a, b, 1e-3, kPolicy, 17,
                                   static_cast<std::uint64_t>(j))
                      .event
                  ? 1.0
                  : 0.0;
    }
    CHECK(std::fabs(ev.mean() - b / a) <= 3.0 * std::sqrt(0.25 / n));
    const PassageEvent e1 = sample_passage_event(kMarket, a, b, 1e-3, kPolicy, 17, 5);
    const PassageEvent e2 = sample_passage_event(kMarket, a, b, 1e-3, kPolicy, 17, 5);
    CHECK(e1.event == e2.event);
    CHECK(e1.stop_index == e2.stop_index);
    CHECK(e1.hit_b_index == e2.hit_b_index);
    CHECK_THROWS_AS(sample_passage_event(kMarket, 0.4, 0.8, 1e-3, kPolicy, 1, 0),
                    InvalidParameter);
  }

  TEST_CASE("bridge sampler and the full grid share the event law") {
    // Same fine-grid law, different noise construction: compare
    // frequencies on a coarse grid where direct simulation is cheap.
    const double a = 0.8, b = 0.4, dt = 4e-3;
    const Index n = 1500;
    Array direct(n), bridge(n);
    for (Index j = 0; j < n; ++j) {
      const Run r = run(LastPassage{a}, static_cast<std::uint64_t>(j), dt);
      bool hit = false;
      for (Index i = 0; i < r.tau.tau_index && !hit; ++i) hit = r.p.s[i] <= b;
      direct[j] = hit ? 1.0 : 0.0;
      bridge[j] = sample_passage_event(kMarket, a, b, dt, kPolicy, 99,
                                       static_cast<std::uint64_t>(j)).event
                      ? 1.0
                      : 0.0;
    }
    const MCEstimate d = mc_estimate(direct), g = mc_estimate(bridge);
    CHECK(std::fabs(d.mean - g.mean) <= 3.0 * std::hypot(d.std_err, g.std_err));
  }

  TEST_CASE("uniform law of 1/N*_inf") {
    const Index n = 1500;
    Array u(n);
    for (Index j = 0; j < n; ++j) {
      const Run r = run(LastSupremum{}, static_cast<std::uint64_t>(j));
      u[j] = 1.0 / r.az.n_star[r.p.last()];
    }
    CHECK(ks_uniform(u).passed);
  }
}

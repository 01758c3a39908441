#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "hlab/enlarge.hpp"
#include "hlab/errors.hpp"
#include "hlab/stats.hpp"

using namespace hlab;

namespace {

struct Run {
  PathBundle p;
  AzemaPaths az;
  HonestTimeSample tau;
  ReplicationIntegrand phi;
};

Run run(const HonestTimeKind& kind, std::uint64_t j, double dt = 4e-3) {
  PathBundle p = simulate_to_horizon(kind, Market{}, dt, HorizonPolicy{}, 31, j);
  AzemaPaths az = azema_decomposition(kind, p);
  HonestTimeSample tau = detect_tau(kind, az, 1e-3);
  ReplicationIntegrand phi = replication_integrand(kind, p, az);
  return {std::move(p), std::move(az), tau, std::move(phi)};
}

}  // namespace

TEST_SUITE("enlarge") {
  TEST_CASE("last supremum: alpha = 1/S before tau and negative after") {
    for (std::uint64_t j = 0; j < 20; ++j) {
      const Run r = run(LastSupremum{}, j);
      const InformationDrift d = information_drift(r.az, r.tau, r.phi);
      for (Index i = 0; i <= r.tau.tau_index; ++i) {
        REQUIRE(d.alpha[i] == doctest::Approx(1.0 / r.p.s[i]).epsilon(1e-13));
      }
      if (r.tau.tau_index + 1 < r.p.size()) CHECK(d.alpha[r.tau.tau_index + 1] < 0.0);
    }
  }

  TEST_CASE("last passage: alpha vanishes above a and flips sign after tau") {
    const double a = 0.8;
    for (std::uint64_t j = 0; j < 20; ++j) {
      const Run r = run(LastPassage{a}, j);
      const InformationDrift d = information_drift(r.az, r.tau, r.phi);
      for (Index i = 0; i < r.p.size(); ++i) {
        if (r.phi.phi[i] == 0.0) REQUIRE(d.alpha[i] == 0.0);
      }
      const Index next = r.tau.tau_index + 1;
      REQUIRE(r.phi.phi[next] > 0.0);
      CHECK(d.alpha[next] < 0.0);
    }
  }

  TEST_CASE("decomposition adds back up to S") {
    const Run r = run(Drawdown{0.5}, 3);
    const GDecomposition g = g_decompose(r.p, information_drift(r.az, r.tau, r.phi));
    CHECK(((g.s_tilde + g.a_tilde) - r.p.s).abs().maxCoeff() <= 1e-12);
    CHECK(g.a_tilde[0] == 0.0);
  }

  TEST_CASE("zero drift leaves S unchanged") {
    const Run r = run(LastSupremum{}, 4);
    const ReplicationIntegrand zero{Array::Zero(r.p.size())};
    const GDecomposition g = g_decompose(r.p, information_drift(r.az, r.tau, zero));
    CHECK((g.s_tilde == r.p.s).all());
  }

  TEST_CASE("excluded window near the terminal supremum") {
    const Run r = run(LastSupremum{}, 5);
    const InformationDrift d = information_drift(r.az, r.tau, r.phi, 1e-6);
    for (Index i : d.excluded_window) {
      CHECK(i > r.tau.tau_index);
      CHECK(d.alpha[i] == 0.0);
    }
  }

  TEST_CASE("N vanishing before tau is inconsistent") {
    const PathBundle p = fixtures::from_prices({1.0, 1.1, 1.2});
    AzemaPaths az = azema_decomposition(LastSupremum{}, p);
    az.n[1] = 0.0;
    HonestTimeSample tau;
    tau.tau_index = 2;
    CHECK_THROWS_AS(information_drift(az, tau, ReplicationIntegrand{Array::Ones(3)}),
                    ConsistencyError);
  }

  TEST_CASE("martingale parts before tau and after tau + eps") {
    const Index n = 1500;
    const double dt = 4e-3;
    const Index gap = 1.0 / 0.09 / 5.0 / dt;
    Eigen::MatrixXd pre(n, 6), post(n, 6);
    for (Index j = 0; j < n; ++j) {
      const Run r = run(LastSupremum{}, static_cast<std::uint64_t>(j), dt);
      const GDecomposition g = g_decompose(r.p, information_drift(r.az, r.tau, r.phi));
      const Index rho = r.tau.tau_index + static_cast<Index>(0.5 / dt);
      for (int k = 0; k < 6; ++k) {
        pre(j, k) = g.s_tilde[std::min<Index>(k * gap, r.tau.tau_index)];
        const Index i = std::min<Index>(rho + k * gap, r.p.last());
        post(j, k) = g.s_tilde[i] - g.s_tilde[std::min(rho, r.p.last())];
      }
    }
    CHECK(martingale_increment_test(pre).passed);
    CHECK(martingale_increment_test(post).passed);
  }
}

#include "hlab/honest.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hlab/errors.hpp"

namespace hlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kSupTolerance = 1e-12;

// Level c of a supported truncation.
double truncation_level(const TruncatedBy& t) {
  if (!t.inner || !std::holds_alternative<LastSupremum>(t.inner->base())) {
    throw InvalidParameter("truncation supports a last-supremum inner time");
  }
  if (t.stop.type != StoppingRule::Type::kHitBelow) {
    throw InvalidParameter("truncation requires a downward hitting time");
  }
  return t.stop.value;
}

// First index at which N is absorbed at 0, for finite-nu kinds.
std::optional<Index> absorption_index(const HonestTimeKind& kind,
                                      const PathBundle& p) {
  return std::visit(
      Overloaded{
          [](const LastSupremum&) -> std::optional<Index> {
            return std::nullopt;
          },
          [](const LastPassage&) -> std::optional<Index> {
            return std::nullopt;
          },
          [&](const Drawdown& d) -> std::optional<Index> {
            for (Index i = 0; i < p.size(); ++i) {
              if (p.s_star[i] - p.s[i] >= d.K) return i;
            }
            return std::nullopt;
          },
          [&](const TruncatedBy& t) -> std::optional<Index> {
            return t.stop.first_index(p);
          }},
      kind.base());
}

}  // namespace

std::optional<Index> StoppingRule::first_index(const PathBundle& p) const {
  switch (type) {
    case Type::kNever:
      return std::nullopt;
    case Type::kFixedTime: {
      const auto i = static_cast<Index>(std::ceil(value / p.grid.dt - 1e-9));
      if (i <= p.last()) return std::max<Index>(i, 0);
      return std::nullopt;
    }
    case Type::kHitAbove:
      for (Index i = 0; i < p.size(); ++i) {
        if (p.s[i] >= value) return i;
      }
      return std::nullopt;
    case Type::kHitBelow:
      for (Index i = 0; i < p.size(); ++i) {
        if (p.s[i] <= value) return i;
      }
      return std::nullopt;
  }
  return std::nullopt;
}

HonestTimeKind truncated_last_supremum(double c) {
  return TruncatedBy{std::make_shared<const HonestTimeKind>(LastSupremum{}),
                     StoppingRule::hit_below(c)};
}

void validate(const HonestTimeKind& kind, const Market& m) {
  if (!(m.s0 > 0.0)) throw InvalidParameter("s0 must be positive");
  std::visit(Overloaded{[](const LastSupremum&) {},
                        [&](const LastPassage& k) {
                          if (!(k.a > 0.0 && k.a < m.s0)) {
                            throw InvalidParameter("level a must lie in (0, s0)");
                          }
                        },
                        [&](const Drawdown& k) {
                          if (!(k.K > 0.0 && k.K < m.s0)) {
                            throw InvalidParameter("K must lie in (0, s0)");
                          }
                        },
                        [&](const TruncatedBy& k) {
                          const double c = truncation_level(k);
                          if (!(c > 0.0 && c < m.s0)) {
                            throw InvalidParameter(
                                "truncation level must lie in (0, s0)");
                          }
                        }},
             kind.base());
}

bool has_finite_nu(const HonestTimeKind& kind) {
  return std::holds_alternative<Drawdown>(kind.base()) ||
         std::holds_alternative<TruncatedBy>(kind.base());
}

double z_value(const HonestTimeKind& kind, double s, double s_star) {
  return std::visit(
      Overloaded{[&](const LastSupremum&) { return s / s_star; },
                 [&](const LastPassage& k) { return std::min(s / k.a, 1.0); },
                 [&](const Drawdown& k) {
                   return std::max(0.0, (k.K - (s_star - s)) / k.K);
                 },
                 [&](const TruncatedBy& k) {
                   const double c = truncation_level(k);
                   return std::max(0.0, (s - c) / (s_star - c));
                 }},
      kind.base());
}

PathBundle simulate_to_horizon(const HonestTimeKind& kind, const Market& m,
                               double dt, const HorizonPolicy& policy,
                               std::uint64_t seed, std::uint64_t path_index) {
  validate(kind, m);
  if (!(policy.delta > 0.0 && policy.delta < 1.0)) {
    throw InvalidParameter("delta must lie in (0,1)");
  }
  const bool finite = has_finite_nu(kind);
  const Index block = std::max<Index>(1, policy.block_steps);
  PathBundle p = simulate_gbm(m.s0, m.sigma, TimeGrid(dt, block), seed,
                              path_index);
  Index scanned = 1;
  while (true) {
    for (Index i = scanned; i < p.size(); ++i) {
      const double z = z_value(kind, p.s[i], p.s_star[i]);
      const bool stop = finite ? z <= 0.0 : z <= policy.delta;
      if (stop) {
        p.s.conservativeResize(i + 1);
        p.s_star.conservativeResize(i + 1);
        p.log_ret.conservativeResize(i + 1);
        p.qv.conservativeResize(i + 1);
        p.w.conservativeResize(i);
        p.grid.n_steps = i;
        return p;
      }
    }
    scanned = p.size();
    if (p.grid.n_steps >= policy.max_steps) return p;
    extend_gbm(p, m.sigma,
               std::min(block, policy.max_steps - p.grid.n_steps));
  }
}

AzemaPaths azema_decomposition(const HonestTimeKind& kind,
                               const PathBundle& p) {
  const double s0 = p.s[0];
  validate(kind, Market{s0, 1.0});
  const Index n = p.size();
  AzemaPaths az{Array(n), Array(n), Array(n)};
  std::visit(
      Overloaded{
          [&](const LastSupremum&) {
            az.z = p.s / p.s_star;
            az.n = p.s / s0;
            az.n_star = p.s_star / s0;
          },
          [&](const LastPassage& k) {
            const LocalTimePath lt = local_time_tanaka(p, k.a);
            az.z = (p.s / k.a).min(1.0);
            az.n_star = lt.l.unaryExpr(
                [&](double l) { return std::exp(l / (2.0 * k.a)); });
            az.n = az.z * az.n_star;
          },
          [&](const Drawdown& k) {
            const Index nu = absorption_index(kind, p).value_or(n);
            for (Index i = 0; i < n; ++i) {
              if (i < nu) {
                az.z[i] = (k.K - (p.s_star[i] - p.s[i])) / k.K;
                az.n_star[i] = std::exp((p.s_star[i] - s0) / k.K);
                az.n[i] = az.z[i] * az.n_star[i];
              } else {
                az.z[i] = 0.0;
                az.n[i] = 0.0;
                az.n_star[i] = std::exp((p.s_star[nu] - s0) / k.K);
              }
            }
          },
          [&](const TruncatedBy& k) {
            const double c = truncation_level(k);
            const Index nu = absorption_index(kind, p).value_or(n);
            for (Index i = 0; i < n; ++i) {
              const Index j = std::min(i, nu);
              az.n_star[i] = (p.s_star[j] - c) / (s0 - c);
              if (i < nu) {
                az.n[i] = (p.s[i] - c) / (s0 - c);
                az.z[i] = az.n[i] / az.n_star[i];
              } else {
                az.n[i] = 0.0;
                az.z[i] = 0.0;
              }
            }
          }},
      kind.base());
  return az;
}

Index last_attainment_index(const AzemaPaths& az, Index end) {
  for (Index i = std::min<Index>(end, az.n.size() - 1); i >= 0; --i) {
    if (std::fabs(az.n[i] - az.n_star[i]) <= kSupTolerance * az.n_star[i]) {
      return i;
    }
  }
  return 0;
}

HonestTimeSample detect_tau(const HonestTimeKind& kind,
                            const AzemaPaths& az, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw InvalidParameter("delta must lie in (0,1)");
  }
  const Index last = az.n.size() - 1;
  HonestTimeSample out;
  Index end = last;
  if (has_finite_nu(kind)) {
    for (Index i = 0; i <= last; ++i) {
      if (az.n[i] <= 0.0) {
        out.nu_index = i;
        break;
      }
    }
    if (!out.nu_index) {
      throw IncompletePath("path ends before N is absorbed at zero",
                           az.z[last]);
    }
    end = *out.nu_index;
    out.certificate_delta = 0.0;
  } else {
    const double ratio = az.n[last] / az.n_star[last];
    if (ratio > delta) {
      throw IncompletePath("horizon certificate N_T/N*_T = " +
                               std::to_string(ratio) + " exceeds delta",
                           ratio);
    }
    out.certificate_delta = ratio;
  }
  out.tau_index = last_attainment_index(az, end);
  return out;
}

HonestTimeSample detect_tau(const HonestTimeKind& kind, const PathBundle& p,
                            double delta) {
  return detect_tau(kind, azema_decomposition(kind, p), delta);
}

ReplicationIntegrand replication_integrand(const HonestTimeKind& kind,
                                           const PathBundle& p,
                                           const AzemaPaths& az) {
  const double s0 = p.s[0];
  const Index n = p.size();
  ReplicationIntegrand out{Array(n)};
  std::visit(
      Overloaded{
          [&](const LastSupremum&) { out.phi.setConstant(1.0 / s0); },
          [&](const LastPassage& k) {
            out.phi = (p.s < k.a).cast<double>() * az.n_star / k.a;
          },
          [&](const Drawdown& k) {
            const Index nu = absorption_index(kind, p).value_or(n);
            for (Index i = 0; i < n; ++i) {
              out.phi[i] = i < nu ? az.n_star[i] / k.K : 0.0;
            }
          },
          [&](const TruncatedBy& k) {
            const double c = truncation_level(k);
            const Index nu = absorption_index(kind, p).value_or(n);
            for (Index i = 0; i < n; ++i) {
              out.phi[i] = i < nu ? 1.0 / (s0 - c) : 0.0;
            }
          }},
      kind.base());
  return out;
}

double verify_mult_decomposition(const AzemaPaths& az) {
  double worst = 0.0;
  for (Index i = 0; i < az.z.size(); ++i) {
    if (az.n_star[i] > 0.0) {
      worst = std::max(worst, std::fabs(az.z[i] - az.n[i] / az.n_star[i]));
    }
  }
  return worst;
}

double replication_residual(const PathBundle& p, const AzemaPaths& az,
                            const ReplicationIntegrand& phi) {
  const Array v = stochastic_integral(phi.phi, p.s);
  return (1.0 + v - az.n).abs().maxCoeff();
}

PassageEvent sample_passage_event(const Market& m, double a, double b,
                                  double dt, const HorizonPolicy& policy,
                                  std::uint64_t seed, std::uint64_t path_index,
                                  const BridgeSamplerOptions& opts) {
  if (!(b > 0.0 && b < a && a < m.s0)) {
    throw InvalidParameter("levels must satisfy 0 < b < a < s0");
  }
  if (!(dt > 0.0)) throw InvalidParameter("time step must be positive");
  if (!(policy.delta > 0.0 && policy.delta * a < b)) {
    throw InvalidParameter("delta * a must lie below b");
  }
  if (opts.block_log2 < 1 || opts.block_log2 > 30) {
    throw InvalidParameter("block_log2 out of range");
  }
  const CounterRng rng(seed, path_index, Stream::kBridge);
  const double sig = std::fabs(m.sigma);
  const double drift = -0.5 * sig * sig * dt;
  const double la = std::log(a);
  const double lb = std::log(b);
  const double ld = std::log(policy.delta * a);
  const Index block = Index{1} << opts.block_log2;

  PassageEvent out;
  int phase = 0;

  auto check = [&](Index i, double x) {
    if (phase == 0) {
      if (x > lb) return false;
      phase = 1;
      out.hit_b = true;
      out.hit_b_index = i;
    }
    if (x >= la) {
      out.event = true;
    } else if (x > ld) {
      return false;
    }
    out.stop_index = i;
    return true;
  };

  auto safe = [&](double xl, double xr, double band) {
    const double lo = std::min(xl, xr);
    if (phase == 0) return lo - lb >= band;
    return lo - ld >= band && la - std::max(xl, xr) >= band;
  };

  // Visits interior points of (l, r) in time order; true once stopped.
  auto refine = [&](auto&& self, Index l, Index r, double xl,
                    double xr) -> bool {
    if (r - l < 2) return false;
    const double span = static_cast<double>(r - l) * dt;
    if (safe(xl, xr, opts.safety * sig * std::sqrt(span))) return false;
    const Index mid = l + (r - l) / 2;
    const double xm = 0.5 * (xl + xr) +
                      sig * std::sqrt(0.25 * span) *
                          rng.normal(static_cast<std::uint64_t>(mid));
    ++out.nodes;
    if (self(self, l, mid, xl, xm)) return true;
    if (check(mid, xm)) return true;
    return self(self, mid, r, xm, xr);
  };

  double x = std::log(m.s0);
  for (Index l = 0;; l += block) {
    if (l >= policy.max_steps) {
      throw IncompletePath("passage sampler reached the step cap",
                           std::exp(x) / a);
    }
    const Index r = l + block;
    const double xr = x + drift * static_cast<double>(block) +
                      sig * std::sqrt(static_cast<double>(block) * dt) *
                          rng.normal(static_cast<std::uint64_t>(r));
    ++out.nodes;
    if (refine(refine, l, r, x, xr)) return out;
    if (check(r, xr)) return out;
    x = xr;
  }
}

}  // namespace hlab

#include "hlab/deflators.hpp"

#include <cmath>

#include "hlab/errors.hpp"

namespace hlab {

void DeflatorSpec::validate() const {
  if (k.kind == KSpec::Kind::kConstant && !(k.value > -1.0)) {
    throw InvalidSpec("constant k must exceed -1");
  }
  if (k.kind == KSpec::Kind::kFunction && !k.fn) {
    throw InvalidSpec("function k is empty");
  }
  if (eta.kind == EtaSpec::Kind::kSymmetricCoin && !(eta.h >= 0.0)) {
    throw InvalidSpec("coin size must be nonnegative");
  }
}

DeflatorPath deflator_basic(const AzemaPaths& az, const HonestTimeSample& tau) {
  const Index n = az.n.size();
  DeflatorPath out{Array(n)};
  for (Index i = 0; i < n; ++i) {
    const double v = az.n[std::min(i, tau.tau_index)];
    if (!(v > 0.0)) throw ConsistencyError("N vanishes before tau");
    out.l[i] = 1.0 / v;
  }
  return out;
}

double deflator_ito_consistency(const AzemaPaths& az,
                                const HonestTimeSample& tau,
                                const ReplicationIntegrand& phi,
                                const GDecomposition& g) {
  const Index n = az.n.size();
  double integral = 0.0;
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Index j = std::min(i, tau.tau_index);
    if (i > 0 && i <= tau.tau_index) {
      const Index p = i - 1;
      integral += phi.phi[p] / (az.n[p] * az.n[p]) *
                  (g.s_tilde[p + 1] - g.s_tilde[p]);
    }
    worst = std::max(worst, std::fabs(1.0 / az.n[j] - (1.0 - integral)));
  }
  return worst;
}

double coin_sign(const PathBundle& path) {
  const CounterRng rng(path.seed, path.path_index, Stream::kCoin);
  return rng.uniform(0) < 0.5 ? -1.0 : 1.0;
}

double k_stieltjes_sum(const PathBundle& path, const AzemaPaths& az,
                       const KSpec& k, Index end) {
  double sum = 0.0;
  for (Index j = 0; j < end; ++j) {
    const double dn = az.n_star[j + 1] - az.n_star[j];
    if (dn != 0.0) {
      sum += k.at(path.grid.t(j), az.n_star[j]) * dn / az.n_star[j];
    }
  }
  return sum;
}

Array k_discount(const PathBundle& path, const AzemaPaths& az,
                 const KSpec& k) {
  const Index n = az.n_star.size();
  if (k.kind == KSpec::Kind::kConstant) {
    return az.n_star.unaryExpr(
        [&](double m) { return std::exp(-k.value * std::log(m)); });
  }
  Array out(n);
  double sum = 0.0;
  out[0] = 1.0;
  for (Index j = 0; j + 1 < n; ++j) {
    const double dn = az.n_star[j + 1] - az.n_star[j];
    if (dn != 0.0) sum += k.at(path.grid.t(j), az.n_star[j]) * dn / az.n_star[j];
    out[j + 1] = std::exp(-sum);
  }
  return out;
}

namespace {

struct StopInfo {
  Index stop;
  bool tau_le_sigma;
  std::optional<Index> sigma_index;
};

StopInfo stop_info(const PathBundle& path, const HonestTimeSample& tau,
                   const StoppingRule& sigma) {
  const auto s = sigma.first_index(path);
  const bool tau_first = !s || tau.tau_index <= *s;
  return {tau_first ? tau.tau_index : *s, tau_first, s};
}

double jump_factor(const PathBundle& path, const AzemaPaths& az,
                   const HonestTimeSample& tau, const DeflatorSpec& spec) {
  const double k_tau =
      spec.k.at(path.grid.t(tau.tau_index), az.n_star[tau.tau_index]);
  const double eta = spec.eta.kind == EtaSpec::Kind::kSymmetricCoin
                         ? spec.eta.h * coin_sign(path)
                         : 0.0;
  const double f = 1.0 + k_tau + eta;
  if (!(f > 0.0)) throw InvalidSpec("1 + k_tau + eta must be positive");
  return f;
}

}  // namespace

DeflatorPath deflator_family(const PathBundle& path, const AzemaPaths& az,
                             const HonestTimeSample& tau,
                             const DeflatorSpec& spec,
                             const StoppingRule& sigma) {
  spec.validate();
  const StopInfo info = stop_info(path, tau, sigma);
  const Array disc = k_discount(path, az, spec.k);
  const Index n = az.n.size();
  DeflatorPath out{Array(n)};
  for (Index i = 0; i <= info.stop; ++i) {
    if (!(az.n[i] > 0.0)) throw ConsistencyError("N vanishes before tau");
    out.l[i] = disc[i] / az.n[i];
  }
  if (info.tau_le_sigma) {
    out.l[info.stop] *= jump_factor(path, az, tau, spec);
  }
  out.l.tail(n - info.stop - 1).setConstant(out.l[info.stop]);
  return out;
}

CompTerms comp_identity_terms(const HonestTimeKind& kind,
                              const PathBundle& path, const AzemaPaths& az,
                              const HonestTimeSample& tau,
                              const DeflatorSpec& spec,
                              const StoppingRule& sigma) {
  const DeflatorPath l = deflator_family(path, az, tau, spec, sigma);
  const StopInfo info = stop_info(path, tau, sigma);
  CompTerms t;
  t.lhs = l.l[l.l.size() - 1];
  t.tau_le_sigma = info.tau_le_sigma;
  const double n_tau = az.n_star[tau.tau_index];
  if (spec.k.kind == KSpec::Kind::kConstant) {
    t.integral = (1.0 + spec.k.value) * std::log(n_tau);
  } else {
    t.integral = std::log(n_tau) +
                 k_stieltjes_sum(path, az, spec.k, tau.tau_index);
  }
  if (has_finite_nu(kind)) {
    t.nu_le_sigma = !info.sigma_index || *tau.nu_index <= *info.sigma_index;
  } else {
    t.nu_le_sigma = !info.sigma_index && !sigma.surely_finite();
  }
  t.rhs = 1.0 - (t.nu_le_sigma ? std::exp(-t.integral) : 0.0);
  return t;
}

CompIdentityResult comp_identity_test(std::span<const CompTerms> terms) {
  const Index n = static_cast<Index>(terms.size());
  Array lhs(n), rhs(n), integral(n);
  for (Index j = 0; j < n; ++j) {
    lhs[j] = terms[j].lhs;
    rhs[j] = terms[j].rhs;
    integral[j] = terms[j].integral;
  }
  CompIdentityResult r;
  r.lhs = mc_estimate(lhs);
  r.rhs = mc_estimate(rhs);
  r.combined_se = std::hypot(r.lhs.std_err, r.rhs.std_err);
  r.min_integral = integral.minCoeff();
  r.frac_integral_positive = (integral > 0.0).cast<double>().mean();
  return r;
}

AfterRho deflator_after(const PathBundle& path, const AzemaPaths& az,
                        const HonestTimeSample& tau, Index rho_index,
                        double threshold) {
  const Index n = az.n.size();
  if (rho_index <= tau.tau_index) {
    throw InvalidParameter("rho must lie after tau");
  }
  if (rho_index >= n) throw InvalidParameter("rho beyond the path");
  const double m = az.n_star[n - 1];
  const double num = m - az.n[rho_index];
  if (!(num > threshold * m)) {
    throw SingularityError("N*_inf - N_rho below threshold");
  }
  AfterRho out{DeflatorPath{Array::Ones(n)}, Array::Zero(n)};
  for (Index i = rho_index + 1; i < n; ++i) {
    const double den = m - az.n[i];
    if (!(den > 0.0)) throw SingularityError("N reaches N*_inf after rho");
    out.l.l[i] = num / den;
    out.shifted_s[i] = path.s[i] - path.s[rho_index];
  }
  return out;
}

Array no_global_deflator_witness(const AzemaPaths& az,
                                 const HonestTimeSample& tau,
                                 const std::vector<Index>& offsets) {
  const Index n = az.z.size();
  Array out(static_cast<Index>(offsets.size()));
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const Index i = tau.tau_index + offsets[k];
    out[k] = (offsets[k] > 0 && i < n) ? 1.0 / (1.0 - az.z[i]) : NAN;
  }
  return out;
}

DivergenceTable divergence_table(const std::vector<Array>& rows,
                                 double bound) {
  DivergenceTable t;
  if (rows.empty()) return t;
  const Index k = rows.front().size();
  t.mean.assign(k, 0.0);
  t.defined.assign(k, 0);
  Index monotone = 0, above = 0;
  for (const Array& r : rows) {
    bool complete = true;
    for (Index c = 0; c < k; ++c) {
      if (std::isfinite(r[c])) {
        t.mean[c] += r[c];
        ++t.defined[c];
      } else {
        complete = false;
      }
    }
    if (!complete) continue;
    ++t.complete_rows;
    bool inc = true;
    for (Index c = 0; c + 1 < k; ++c) inc = inc && r[c + 1] > r[c];
    if (inc) ++monotone;
    if (r[k - 1] > bound) ++above;
  }
  for (Index c = 0; c < k; ++c) {
    if (t.defined[c] > 0) t.mean[c] /= static_cast<double>(t.defined[c]);
  }
  if (t.complete_rows > 0) {
    t.monotone_fraction =
        static_cast<double>(monotone) / static_cast<double>(t.complete_rows);
    t.frac_above_bound =
        static_cast<double>(above) / static_cast<double>(t.complete_rows);
  }
  return t;
}

}  // namespace hlab

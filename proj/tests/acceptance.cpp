// Acceptance criteria at default experiment parameters. One PASS/FAIL line
// per criterion; exit status 0 iff every selected criterion passes.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hlab/experiments.hpp"

using hlab::ExperimentResult;
using hlab::Json;

namespace {

constexpr double kDoobTarget = 0.5;
constexpr double kDoobPaths = 1e5;
constexpr double kDoobRuntimeSeconds = 60.0;
constexpr double kPositiveLowerBound = 0.9;
constexpr double kHalf = 0.5;
constexpr double kWealthFloor = -1e-9;
constexpr double kRateLo = 1.2;
constexpr double kRateHi = 1.8;
constexpr double kMonotoneFraction = 0.95;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::ostringstream failures;

  void need(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      failures << " [failed: " << what << "]";
    }
  }
};

std::map<std::string, ExperimentResult>& cache() {
  static std::map<std::string, ExperimentResult> c;
  return c;
}

const ExperimentResult& run(const std::string& id) {
  auto it = cache().find(id);
  if (it == cache().end()) {
    hlab::ExperimentConfig cfg;
    cfg.experiment = id;
    it = cache().emplace(id, hlab::run_experiment(cfg)).first;
  }
  return it->second;
}

const Json& detail(const ExperimentResult& r, const std::string& check) {
  static const Json empty = Json::object();
  const hlab::Check* c = r.find(check);
  return c ? c->detail : empty;
}

bool passed(const ExperimentResult& r, const std::string& check) {
  const hlab::Check* c = r.find(check);
  return c && c->passed;
}

double ci_lo(const Json& est) { return est["ci99"][0].get<double>(); }
double ci_hi(const Json& est) { return est["ci99"][1].get<double>(); }
bool contains(const Json& est, double v) { return ci_lo(est) <= v && v <= ci_hi(est); }

void c1(Outcome& o) {
  const ExperimentResult& r = run("E2");
  const double p = r.values["p_hat"].get<double>();
  const double n = r.params["n_paths"].get<double>();
  const double tol = 3.0 * std::sqrt(kDoobTarget * (1.0 - kDoobTarget) / kDoobPaths);
  o.detail << "p_hat=" << p << " tol=" << tol << " paths=" << n
           << " runtime=" << r.runtime_seconds << "s";
  o.need(n >= kDoobPaths, "paths >= 1e5");
  o.need(std::fabs(p - kDoobTarget) <= tol, "|p_hat - 0.5| <= 3 sqrt(0.25/1e5)");
  o.need(r.runtime_seconds < kDoobRuntimeSeconds, "runtime < 60 s");
}

void c2(Outcome& o) {
  const ExperimentResult& r = run("E1");
  const Json& id = detail(r, "terminal_equals_n_tau_minus_one");
  const Json& neg = detail(r, "no_negative_terminal");
  const Json& pp = detail(r, "p_positive_lower_bound_above_0.9")["p_positive"];
  const Json& med = detail(r, "median_within_3_bootstrap_se_of_1");
  o.detail << "identity " << id["paths_within_tolerance"] << "/" << id["paths"]
           << " negative=" << neg["negative"] << " p_pos_lo=" << ci_lo(pp)
           << " median=" << med["median"] << " se=" << med["bootstrap_se"];
  o.need(id["paths_within_tolerance"] == id["paths"], "V = N_tau - 1 within 5 sqrt(dt) N*");
  o.need(neg["negative"] == 0, "no negative terminal");
  o.need(ci_lo(pp) > kPositiveLowerBound, "P(terminal > 0) lower bound > 0.9");
  o.need(std::fabs(med["median"].get<double>() - 1.0) <=
             3.0 * med["bootstrap_se"].get<double>(),
         "median within 3 bootstrap SE of 1");
}

void c3(Outcome& o) {
  const ExperimentResult& r = run("E3");
  const Json& cps = detail(r, "deflator_mean_one_at_5_checkpoints")["checkpoints"];
  int inside = 0;
  for (const Json& c : cps) inside += contains(c["estimate"], 1.0);
  const Json& inv = detail(r, "mean_inverse_n_tau_contains_half")["estimate"];
  o.detail << "checkpoints containing 1: " << inside << "/" << cps.size()
           << " E[1/N_tau]=" << inv["mean"] << " ci99=[" << ci_lo(inv) << ","
           << ci_hi(inv) << "]";
  o.need(cps.size() == 5 && inside == 5, "E[1/N_{t^tau}] CI contains 1 at 5 checkpoints");
  o.need(contains(inv, kHalf), "E[1/N_tau] CI contains 0.5");
  o.need(ci_hi(inv) < 1.0, "upper bound of E[1/N_tau] below 1");
}

void c4(Outcome& o) {
  const ExperimentResult& r = run("E4");
  int combos = 0, ok = 0;
  double worst = 0.0;
  for (const hlab::Check& c : r.checks) {
    if (c.name.rfind("comp_identity[", 0) != 0) continue;
    ++combos;
    const double gap = std::fabs(c.detail["lhs"]["mean"].get<double>() -
                                 c.detail["rhs"]["mean"].get<double>());
    const double se = std::hypot(c.detail["lhs"]["std_err"].get<double>(),
                                 c.detail["rhs"]["std_err"].get<double>());
    worst = std::max(worst, gap / se);
    ok += gap <= 3.0 * se;
  }
  double min_frac = 1.0;
  for (const Json& c : detail(r, "integral_positive_on_every_path")["cases"]) {
    min_frac = std::min(min_frac, c["fraction_positive"].get<double>());
  }
  o.detail << "identity " << ok << "/" << combos << " (worst gap " << worst
           << " SE) min positive fraction=" << min_frac;
  o.need(combos == 8 && ok == combos, "|lhs - rhs| <= 3 combined SE for all 8 cases");
  o.need(min_frac == 1.0, "integral > 0 on 100% of paths");
}

void c5(Outcome& o) {
  const ExperimentResult& r = run("E5");
  for (const char* kind : {"last_supremum", "drawdown(K=0.5)"}) {
    const std::string k(kind);
    const Json& fk = detail(r, "first_kind_verify[" + k + "]");
    const Json& w = detail(r, "wealth_nonnegative[" + k + "]");
    const Json& z = detail(r, "wealth_zero_before_tau[" + k + "]");
    o.detail << k << ": min_wealth=" << w["min_wealth"] << " trunc_ratio="
             << fk["max_truncation_ratio"] << " pre_tau=" << z["max_abs_wealth_up_to_tau"]
             << "; ";
    o.need(passed(r, "first_kind_verify[" + k + "]"), "first_kind_verify " + k);
    o.need(fk["max_truncation_ratio"].get<double>() <= fk["delta"].get<double>(),
           "truncation bias <= delta N*");
    o.need(w["min_wealth"].get<double>() >= kWealthFloor, "wealth >= -1e-9 " + k);
    o.need(z["max_abs_wealth_up_to_tau"] == 0.0, "wealth 0 before tau " + k);
  }
}

void c6(Outcome& o) {
  const ExperimentResult& r = run("E6");
  const Json& term = detail(r, "shifted_terminal_nonnegative");
  const Json& pp = detail(r, "shifted_p_positive_lower_bound_above_0")["p_positive"];
  const Json& raw = r.values["after_rho_deflator_unlocalized"];
  o.detail << "localized rhoL z=" << detail(r, "after_rho_deflator_localized_martingale_test")["z_scores"]
           << " rhoS.rhoL z="
           << detail(r, "after_rho_deflated_asset_localized_martingale_test")["z_scores"]
           << " unlocalized rhoL z=" << raw["z_scores"] << " min_terminal="
           << term["min_terminal"] << " p_pos_lo=" << ci_lo(pp);
  o.need(passed(r, "after_rho_deflator_localized_martingale_test"), "rhoL martingale test");
  o.need(passed(r, "after_rho_deflated_asset_localized_martingale_test"),
         "rhoS rhoL martingale test");
  o.need(term["min_terminal"].get<double>() >= kWealthFloor, "terminal >= 0");
  o.need(ci_lo(pp) > 0.0, "P(terminal > 0) lower bound > 0");
}

void c7(Outcome& o) {
  const ExperimentResult& r = run("E7");
  const Json& a = detail(r, "branch_a_mean_pnl_ci_contains_0")["mean_pnl"];
  const Json& ad = detail(r, "branch_a_deflated_mean_pnl_ci_contains_0")["deflated_mean_pnl"];
  const Json& b = detail(r, "branch_b_verdict_na_violation");
  o.detail << "branch A mean P&L=" << a["mean"] << " ci99=[" << ci_lo(a) << "," << ci_hi(a)
           << "] deflated ci99=[" << ci_lo(ad) << "," << ci_hi(ad) << "]; branch B verdict="
           << b["verdict"];
  o.need(contains(a, 0.0), "branch A mean P&L CI contains 0");
  o.need(b["verdict"] == "NA-violation", "branch B verdict NA-violation");
}

void c8(Outcome& o) {
  const ExperimentResult& r = run("E8");
  for (const Json& rep : r.reports) {
    o.detail << rep["strategy"].get<std::string>() << ": mean=" << rep["mean"]
             << " verdict=" << rep["verdict"].get<std::string>() << "; ";
    o.need(contains(rep, 0.0), "mean P&L CI contains 0");
    o.need(rep["verdict"] == "none", "verdict none");
  }
  o.detail << "martingale z="
           << detail(r, "price_martingale_test_at_enlarged_checkpoints")["z_scores"];
  o.need(r.reports.size() == 2, "two insider strategies");
  o.need(passed(r, "price_martingale_test_at_enlarged_checkpoints"), "S martingale test");
}

void c9(Outcome& o) {
  const ExperimentResult& r = run("E9");
  for (const char* name : {"deflator_ito_consistency_sqrt_dt_rate",
                           "replication_residual_sqrt_dt_rate"}) {
    const Json& ratios = detail(r, name)["ratios"];
    o.detail << name << " ratios=" << ratios << " ";
    o.need(ratios.size() == 3, "3 refinement levels");
    for (const Json& x : ratios) {
      const double v = x.get<double>();
      o.need(v >= kRateLo && v <= kRateHi, std::string(name) + " ratio in [1.2, 1.8]");
    }
  }
}

void c10(Outcome& o) {
  const ExperimentResult& r = run("E10");
  const Json& d = detail(r, "witness_strictly_increasing_on_95_percent");
  const double f = d["monotone_fraction"].get<double>();
  o.detail << "monotone fraction=" << f << " of " << d["complete_rows"]
           << " rows, means=" << d["mean_by_offset"];
  o.need(f >= kMonotoneFraction, "strictly increasing on >= 95% of paths");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

const std::vector<Criterion> kCriteria = {
    {1, "doob-identity", c1},       {2, "arbitrage-at-tau", c2},
    {3, "deflator-martingale", c3}, {4, "comp-identity", c4},
    {5, "first-kind-arbitrage", c5}, {6, "shifted-market", c6},
    {7, "before-tau-dichotomy", c7}, {8, "counterexample-control", c8},
    {9, "ito-refinement", c9},      {10, "no-global-deflator", c10},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion,-c", selected, "Criterion numbers (default: all)");
  CLI11_PARSE(app, argc, argv);
  bool all = true;
  for (const Criterion& c : kCriteria) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name
              << "): " << o.detail.str() << o.failures.str() << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}

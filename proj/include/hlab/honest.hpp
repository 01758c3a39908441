#pragma once

#include <memory>
#include <optional>
#include <variant>

#include "hlab/paths.hpp"

namespace hlab {

struct Market {
  double s0 = 1.0;
  double sigma = 0.3;
};

// Stopping times of the base filtration, evaluated on the price path.
struct StoppingRule {
  enum class Type { kNever, kFixedTime, kHitAbove, kHitBelow };

  Type type = Type::kNever;
  double value = 0.0;

  static StoppingRule never() { return {}; }
  static StoppingRule fixed_time(double t) { return {Type::kFixedTime, t}; }
  static StoppingRule hit_above(double level) {
    return {Type::kHitAbove, level};
  }
  static StoppingRule hit_below(double level) {
    return {Type::kHitBelow, level};
  }

  // First grid index at which the rule fires, if it fires on this path.
  std::optional<Index> first_index(const PathBundle& path) const;
  bool surely_finite() const { return type == Type::kFixedTime; }
};

struct HonestTimeKind;

struct LastSupremum {};
struct LastPassage {
  double a;
};
struct Drawdown {
  double K;
};
// The inner honest time restricted to [0, stop]. Supported: LastSupremum
// with a downward hitting time below s0.
struct TruncatedBy {
  std::shared_ptr<const HonestTimeKind> inner;
  StoppingRule stop;
};

struct HonestTimeKind
    : std::variant<LastSupremum, LastPassage, Drawdown, TruncatedBy> {
  using variant::variant;
  const variant& base() const { return *this; }
};

HonestTimeKind truncated_last_supremum(double c);

void validate(const HonestTimeKind& kind, const Market& market);
bool has_finite_nu(const HonestTimeKind& kind);

struct HonestTimeSample {
  Index tau_index = 0;
  std::optional<Index> nu_index;
  double certificate_delta = 0.0;
};

struct AzemaPaths {
  Array z;
  Array n;
  Array n_star;
};

struct ReplicationIntegrand {
  Array phi;
};

struct HorizonPolicy {
  double delta = 1e-3;
  Index block_steps = Index{1} << 14;
  Index max_steps = Index{1} << 26;
};

// Z as a function of the current price and running maximum.
double z_value(const HonestTimeKind& kind, double s, double s_star);

// Simulates GBM in blocks until the horizon policy of `kind` is met (or the
// step cap is hit) and trims the path to the stopping index.
PathBundle simulate_to_horizon(const HonestTimeKind& kind,
                               const Market& market, double dt,
                               const HorizonPolicy& policy,
                               std::uint64_t seed, std::uint64_t path_index);

AzemaPaths azema_decomposition(const HonestTimeKind& kind,
                               const PathBundle& path);

// Last index in [0, end] where N attains its running maximum.
Index last_attainment_index(const AzemaPaths& azema, Index end);

HonestTimeSample detect_tau(const HonestTimeKind& kind,
                            const AzemaPaths& azema, double delta);
HonestTimeSample detect_tau(const HonestTimeKind& kind,
                            const PathBundle& path, double delta);

ReplicationIntegrand replication_integrand(const HonestTimeKind& kind,
                                           const PathBundle& path,
                                           const AzemaPaths& azema);

double verify_mult_decomposition(const AzemaPaths& azema);

// max_i |1 + (phi . S)_i - N_i|
double replication_residual(const PathBundle& path, const AzemaPaths& azema,
                            const ReplicationIntegrand& phi);

// Outcome of the event {tau_b < tau} for the last passage time at a on the
// uniform grid of step dt. Grid values are only materialized near the
// barriers, by dyadic Brownian-bridge refinement of long blocks.
struct PassageEvent {
  bool hit_b = false;
  bool event = false;
  Index hit_b_index = -1;
  Index stop_index = 0;
  Index nodes = 0;
};

struct BridgeSamplerOptions {
  int block_log2 = 12;
  double safety = 6.0;
};

PassageEvent sample_passage_event(const Market& market, double a, double b,
                                  double dt, const HorizonPolicy& policy,
                                  std::uint64_t seed, std::uint64_t path_index,
                                  const BridgeSamplerOptions& opts = {});

}  // namespace hlab

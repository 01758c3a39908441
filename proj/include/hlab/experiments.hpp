#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlab/paths.hpp"

namespace hlab {

using Json = nlohmann::json;

struct ExperimentConfig {
  std::string experiment;
  double s0 = 1.0;
  double sigma = 0.3;
  // Unset controls take the per-experiment defaults of the registry.
  std::optional<double> dt;
  std::optional<double> delta;
  std::optional<Index> n_paths;
  std::uint64_t seed = 7;
  std::optional<std::string> kind;
  std::optional<double> a;
  std::optional<double> K;
  std::optional<double> b;
  std::optional<double> eps;
  std::optional<std::string> sigma_def;
  std::optional<std::string> k_kind;
  std::optional<double> k_value;
  std::optional<std::string> eta_kind;
  std::optional<double> eta_h;
  std::vector<double> x_list;
  std::string out_dir;
  std::string format = "json";
  bool dump_paths = false;

  void validate() const;
};

// Reads the keys of a JSON config object into `cfg`; unknown keys throw.
void apply_config_json(const Json& j, ExperimentConfig& cfg);

struct Check {
  std::string name;
  bool passed = false;
  Json detail;
};

struct ExperimentResult {
  std::string id;
  std::string name;
  std::string claim;
  Json params;
  std::vector<Check> checks;
  std::vector<Json> reports;
  Json values = Json::object();
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;

  bool all_passed() const;
  const Check* find(const std::string& check_name) const;
};

struct ExperimentInfo {
  std::string id;
  std::string name;
  std::string claim;
  double default_dt;
  Index default_paths;
};

const std::vector<ExperimentInfo>& registry();

// Accepts an id ("E3") or a registered name ("deflator-martingale").
const ExperimentInfo& lookup_experiment(const std::string& key);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Deterministic summary: no timestamps or runtimes.
Json summary_json(const ExperimentResult& r);

// Writes summary (json or csv) and metadata.json into cfg.out_dir.
void write_artifacts(const ExperimentResult& r, const ExperimentConfig& cfg);

}  // namespace hlab

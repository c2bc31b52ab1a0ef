#pragma once

// Experiment configs and run reports. A config is a JSON document; see
// README.md for the grammar. Reports are JSON with full-precision numbers.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "loocmi/bounds.hpp"
#include "loocmi/core.hpp"
#include "loocmi/infotheory.hpp"

namespace loocmi {

using Json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

/// Name of the environment variable holding the default term budget.
inline constexpr const char* kBudgetEnv = "LOOCMI_BUDGET";

enum class Mode { exact, mc };

struct ExperimentConfig {
  Json canonical;  // validated document, used for fingerprinting
  std::string fingerprint;
  std::string name;

  DomainPtr domain;
  std::shared_ptr<const HypothesisClass> cls;
  ThresholdConvention convention = ThresholdConvention::upper;
  std::shared_ptr<const FiniteDistribution> distribution;
  SupersampleLaw law = SupersampleLaw::iid;

  std::string learner;
  Json learner_params = Json::object();

  std::size_t n = 0;
  LossFunction loss{};
  Mode mode = Mode::exact;
  std::uint64_t samples = 0;
  std::optional<std::uint64_t> seed;
  double budget = kDefaultBudget;

  std::vector<std::string> measures;
  std::vector<std::string> theorems;
};

/// Budget from LOOCMI_BUDGET, else the library default.
double default_budget();

/// Validates everything and reports every problem at once (ConfigError).
ExperimentConfig parse_config(const Json& doc, std::optional<double> fallback_budget = {});
ExperimentConfig parse_config_text(std::string_view text,
                                   std::optional<double> fallback_budget = {});
ExperimentConfig load_config(const std::string& path, std::optional<double> fallback_budget = {});

/// 16 hex digits of FNV-1a over the key-sorted serialization.
std::string fingerprint(const Json& doc);

std::unique_ptr<Learner> make_learner(const ExperimentConfig& config);

const std::vector<std::string>& known_measures();
const std::vector<std::string>& known_theorems();

struct RunOptions {
  Exec exec = Exec::parallel;
  bool bits = false;    // information measures in bits instead of nats
  bool timing = false;  // include wall-clock (breaks byte-identical reruns)
};

struct RunResult {
  Json report;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::size_t skipped = 0;
};

RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

Json to_json(const BoundReport& r);

/// Sets a dotted path ("domain.size") inside a config document.
void set_path(Json& doc, std::string_view dotted, const Json& value);

/// One CSV row per grid cell; cells in grid order (first key slowest).
/// Failed cells fill the error column and the sweep continues.
struct SweepResult {
  std::string csv;
  std::size_t cells = 0;
  std::size_t cell_errors = 0;
  std::size_t failures = 0;
};

SweepResult sweep(const Json& template_doc, const Json& grid, const RunOptions& options = {});

/// RFC 4180 quoting when needed.
std::string csv_field(std::string_view text);

}  // namespace loocmi

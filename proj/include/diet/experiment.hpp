#pragma once

// Experiment orchestration: parse a JSON config, run R replicates of
// (generator -> test -> p-value) or a full variable-selection pipeline,
// aggregate power (and FDP for selection runs) per nominal level, and emit
// the rows as CSV or JSON.
//
// Determinism: every replicate r derives its data from
// substream(substream({seed, 0}, 1), r) and every method from
// substream(substream({seed, 0}, 2 + method_index), r), where method_index
// is the method's position in the canonical list {diet, diet_oracle, d0, dI,
// hrt} — not its position in the config.  Results are therefore identical
// for any worker-thread count and any method ordering; wall_time_s is the
// one field that reflects the actual machine unless a caller injects a
// clock.

#include "diet/dgp.hpp"
#include "diet/multiple_testing.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace diet {

/// A malformed or inconsistent experiment config.  Messages carry the JSON
/// path of the offending field ("config error at /dgp/variant: ...").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The five runnable method names, in canonical order: "diet" (MDN residual
/// test), "diet_oracle" (residual test with the generator's exact CDFs),
/// "d0", "dI", and "hrt".
const std::vector<std::string>& experiment_methods();

/// True when the variant exposes both closed-form conditional CDFs, which
/// "diet_oracle" requires.
bool variant_has_oracle_cdfs(const std::string& variant);

struct CvsSettings {
  std::vector<double> fdr_alphas;  // nominal FDR grid for the selection rows
  std::string sampler = "oracle";  // "oracle" (exact conditionals) or "mdn"
};

struct ExperimentConfig {
  DgpSpec dgp;
  std::vector<std::string> methods;
  Index replicates = 100;
  Index num_nulls = 100;          // M null draws per test
  std::vector<double> alphas;     // rejection thresholds (single-hypothesis mode)
  std::uint64_t seed = 0;
  std::string output;             // result path; empty means stdout
  std::string format = "csv";     // "csv" or "json"
  Index dependence_bins = 10;     // residual discretization for the AMI statistic
  MdnOptions mdn;                 // conditional-CDF models and estimated samplers
  NetRegressorOptions hrt_regressor;
  std::optional<CvsSettings> cvs;  // present -> variable-selection mode

  void validate() const;  // throws ConfigError
};

/// Build a config from parsed JSON, applying defaults and validating.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Read, parse, and validate a config file.
ExperimentConfig config_from_file(const std::string& path);

struct ResultRow {
  std::string method;
  double alpha = 0.0;
  double power = 0.0;
  std::optional<double> fdp_mean;  // selection runs only
  Index replicates = 0;
  double wall_time_s = 0.0;
};

/// Monotone seconds counter; injectable so tests can pin wall_time_s.
using Clock = std::function<double()>;

/// Run every replicate and aggregate one row per (method, alpha).
/// Single-hypothesis mode: power at alpha is the exact fraction of
/// replicates with p <= alpha.  Selection mode: each replicate runs the
/// per-coordinate tests once, then BH at every alpha in fdr_alphas; power
/// and fdp_mean are averages of the per-replicate metrics.
/// Any replicate failure aborts with a message carrying the replicate index.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, Index threads = 1,
                                      Clock clock = {});

/// CSV columns, exactly: method,alpha,power,fdp_mean,replicates,wall_time_s.
/// fdp_mean is empty for single-hypothesis rows.
void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);

/// The same rows as a JSON array of objects (fdp_mean null when absent).
void write_json(const std::vector<ResultRow>& rows, std::ostream& out);

/// Inverse of write_json, for round-tripping results.
std::vector<ResultRow> rows_from_json(const nlohmann::json& j);

}  // namespace diet

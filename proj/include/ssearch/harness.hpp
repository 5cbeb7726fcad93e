#pragma once

#include "ssearch/metrics.hpp"
#include "ssearch/objectives.hpp"
#include "ssearch/search.hpp"
#include "ssearch/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ssearch {

struct ObjectiveSpec {
  std::string kind = "planted_quadratic";  // or "lqr"
  Index dim = 1000;
  Index effective_dim = 10;
  std::vector<double> spectrum{-1.0};
  /// Fixed instance seed; when unset each run seed gets its own instance.
  std::optional<std::uint64_t> seed;
  double noise_std = 0.0;
  /// "auto" shifts returns so the initial parameters score 0; otherwise a number.
  std::string offset = "0";
  LqrSpec lqr;
};

struct ExperimentConfig {
  ObjectiveSpec objective;
  SearchConfig search;
  Method method = Method::full;
  std::string surrogate = "idw";  // idw, ridge, oracle, remote
  std::string surrogate_transport;  // for remote: stdio:<cmd> or tcp:<host>:<port>
  double ridge_lambda = 1e-6;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::uint64_t budget = 200000;  // local steps per run
  double step_size = 0.01;
  double init_scale = 0.0;        // theta0 ~ init_scale * N(0, I / D)
  std::filesystem::path out = "runs";
  std::size_t rankcheck_pool = 64;
  std::size_t jobs = 1;

  void validate() const;
};

/// Parses flat `key = value` text; `#` starts a comment, lists are comma separated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies one key/value pair, as found in a config file.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Everything needed to run one seed, built from the config.
struct RunSetup {
  std::shared_ptr<const Objective> objective;
  std::unique_ptr<Surrogate> surrogate;  // null for local_only / random_search
  Vector theta0;
};

RunSetup make_run_setup(const ExperimentConfig& cfg, std::uint64_t seed);
std::unique_ptr<Surrogate> make_surrogate(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective);

struct RunRecord {
  Method method = Method::full;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> curve;
  std::vector<RoundTrace> rounds;
  std::uint64_t evaluations = 0;
  std::uint64_t local_evaluations = 0;
  std::uint64_t round_evaluations = 0;
  std::string error;  // non-empty when the run failed
};

/// Runs one seed, streaming JSON-lines events to `events` if given.
RunRecord run_seed(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream* events,
                   const PoolObserver& observer = {});

std::string run_file_stem(Method method, std::uint64_t seed);

/// Runs every seed and writes <out>/<method>-seed<N>.{jsonl,csv}. A failure
/// (including I/O) affects only its seed and is reported in the record.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);

void write_curve_csv(const RunRecord& record, std::ostream& out);

struct MethodSummary {
  std::string method;
  std::size_t seeds = 0;
  double mean_final = 0.0;
  double std_percent = 0.0;   // population std of finals as % of |mean|
  double steps_percent = 0.0;  // mean steps_to_fraction(0.9) as % of the local budget
};

struct LoadedCurve {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<StepValue> points;
};

MethodSummary summarize_method(const std::string& method, const std::vector<std::vector<StepValue>>& curves);

/// Reads every <method>-seed<N>.csv in `dir`, sorted by method then seed.
std::vector<LoadedCurve> load_curves(const std::filesystem::path& dir);

/// Summary rows, one per method in name order. Writes summary.csv and
/// curves-<method>.csv (step, mean, std) into `dir`.
std::vector<MethodSummary> summarize_directory(const std::filesystem::path& dir);

std::string format_summary_table(const std::vector<MethodSummary>& rows);

/// Shortest round-trip decimal text for a double.
std::string format_number(double v);

struct RankcheckRow {
  std::uint64_t seed = 0;
  std::size_t round = 0;
  std::size_t iteration = 0;
  RankReport report;
};

/// Runs the full method with pools of `rankcheck_pool` candidates and scores
/// every screened pool against its noiseless true returns (these extra
/// evaluations are not counted). Writes <out>/rankcheck.csv.
std::vector<RankcheckRow> rankcheck(const ExperimentConfig& cfg);

struct ProtocolCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Drives a remote surrogate through ping, fit, predict and the error paths.
/// With `compare_ridge`, predictions must match the built-in ridge within 1e-6.
std::vector<ProtocolCheck> protocol_test(const std::string& transport_spec, bool compare_ridge);

}  // namespace ssearch

// Command-line front end: run, summarize, rankcheck, protocol-test.

#include "ssearch/error.hpp"
#include "ssearch/harness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <numeric>

namespace {

struct Overrides {
  std::vector<std::uint64_t> seeds;
  std::string method;
  std::string surrogate;
  std::string out;
  std::vector<std::string> settings;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seeds, "Run only these seeds (repeatable)");
  cmd->add_option("--method", o.method, "full, one_shot, random_search or local_only");
  cmd->add_option("--surrogate", o.surrogate, "idw, ridge, remote or oracle");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--set", o.settings, "Extra key=value config setting (repeatable)");
}

ssearch::ExperimentConfig resolve(const std::string& path, const Overrides& o) {
  auto cfg = ssearch::load_config(path);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ssearch::ConfigError("--set expects key=value, got '" + kv + "'");
    ssearch::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.method.empty()) cfg.method = ssearch::parse_method(o.method);
  if (!o.surrogate.empty()) cfg.surrogate = o.surrogate;
  if (!o.out.empty()) cfg.out = o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace search with surrogate screening: experiments and diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_flags;
  auto* run = app.add_subcommand("run", "Run an experiment described by a config file");
  run->add_option("config", config_path, "Config file (key = value lines)")->required();
  add_override_flags(run, run_flags);

  std::string summary_dir;
  auto* summarize = app.add_subcommand("summarize", "Summarize run curves in a directory");
  summarize->add_option("dir", summary_dir, "Directory with <method>-seed<N>.csv files")->required();

  std::string rank_config;
  Overrides rank_flags;
  auto* rank = app.add_subcommand("rankcheck", "Score surrogate rankings against brute-force pool returns");
  rank->add_option("config", rank_config, "Config file")->required();
  add_override_flags(rank, rank_flags);

  std::string transport;
  bool compare_ridge = false;
  auto* proto = app.add_subcommand("protocol-test", "Exercise a remote surrogate over the wire protocol");
  proto->add_option("transport", transport, "stdio:<command> or tcp:<host>:<port>")->required();
  proto->add_flag("--compare-ridge", compare_ridge, "Require agreement with the built-in ridge within 1e-6");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = resolve(config_path, run_flags);
      const auto records = ssearch::run_experiment(cfg);
      int failures = 0;
      for (const auto& r : records) {
        if (!r.error.empty()) {
          ++failures;
          std::cerr << "seed " << r.seed << " failed: " << r.error << '\n';
          continue;
        }
        std::cout << ssearch::run_file_stem(r.method, r.seed) << ": " << r.evaluations << " evaluations ("
                  << r.local_evaluations << " local, " << r.round_evaluations << " in " << r.rounds.size()
                  << " rounds), final value " << ssearch::format_number(r.curve.empty() ? 0.0 : r.curve.back().value)
                  << '\n';
      }
      std::cout << "wrote " << cfg.out.string() << '\n';
      return failures == 0 ? 0 : 1;
    }
    if (summarize->parsed()) {
      const auto rows = ssearch::summarize_directory(summary_dir);
      std::cout << ssearch::format_summary_table(rows);
      return 0;
    }
    if (rank->parsed()) {
      const auto cfg = resolve(rank_config, rank_flags);
      const auto rows = ssearch::rankcheck(cfg);
      if (rows.empty()) {
        std::cout << "no pools were screened (no rounds ran)\n";
        return 0;
      }
      double rho = 0.0;
      std::size_t top = 0;
      std::size_t scored = 0;
      for (const auto& r : rows) {
        if (!r.report.degenerate) {
          rho += r.report.spearman;
          ++scored;
        }
        if (r.report.top1_percentile < 20.0) ++top;
      }
      std::printf("pools %zu  mean spearman %.4f (%zu non-degenerate)  top-1 in top 20%%: %.1f%%\n", rows.size(),
                  scored ? rho / static_cast<double>(scored) : 0.0, scored,
                  100.0 * static_cast<double>(top) / static_cast<double>(rows.size()));
      std::cout << "wrote " << (cfg.out / "rankcheck.csv").string() << '\n';
      return 0;
    }
    if (proto->parsed()) {
      const auto checks = ssearch::protocol_test(transport, compare_ridge);
      bool all = true;
      for (const auto& c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
        all = all && c.passed;
      }
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

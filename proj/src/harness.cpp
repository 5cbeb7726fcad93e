#include "ssearch/harness.hpp"

#include "ssearch/error.hpp"
#include "ssearch/wire.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <regex>
#include <sstream>

namespace ssearch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "': expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("'" + key + "': expected a finite number, got '" + v + "'");
  }
  return out;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  auto u = [&] { return to_u64(key, value); };
  auto d = [&] { return to_double(key, value); };
  auto idx = [&] { return static_cast<Index>(to_u64(key, value)); };
  auto sz = [&] { return static_cast<std::size_t>(to_u64(key, value)); };

  if (key == "method") cfg.method = parse_method(value);
  else if (key == "surrogate") cfg.surrogate = value;
  else if (key == "surrogate.transport") cfg.surrogate_transport = value;
  else if (key == "surrogate.ridge_lambda") cfg.ridge_lambda = d();
  else if (key == "seeds") {
    cfg.seeds.clear();
    for (const auto& s : split_list(value)) cfg.seeds.push_back(to_u64(key, s));
  } else if (key == "budget") cfg.budget = u();
  else if (key == "local.step_size") cfg.step_size = d();
  else if (key == "init.scale") cfg.init_scale = d();
  else if (key == "out") cfg.out = value;
  else if (key == "rankcheck.pool") cfg.rankcheck_pool = sz();
  else if (key == "jobs") cfg.jobs = sz();
  else if (key == "objective") cfg.objective.kind = value;
  else if (key == "objective.dim") cfg.objective.dim = idx();
  else if (key == "objective.effective_dim") cfg.objective.effective_dim = idx();
  else if (key == "objective.spectrum") {
    cfg.objective.spectrum.clear();
    for (const auto& s : split_list(value)) cfg.objective.spectrum.push_back(to_double(key, s));
  } else if (key == "objective.seed") cfg.objective.seed = u();
  else if (key == "objective.noise_std") cfg.objective.noise_std = d();
  else if (key == "objective.offset") {
    if (value != "auto") to_double(key, value);
    cfg.objective.offset = value;
  } else if (key == "lqr.state_dim") cfg.objective.lqr.state_dim = idx();
  else if (key == "lqr.action_dim") cfg.objective.lqr.action_dim = idx();
  else if (key == "lqr.horizon") cfg.objective.lqr.horizon = static_cast<int>(u());
  else if (key == "lqr.initial_states") cfg.objective.lqr.initial_states = static_cast<int>(u());
  else if (key == "lqr.spectral_radius") cfg.objective.lqr.spectral_radius = d();
  else if (key == "lqr.action_weight") cfg.objective.lqr.action_weight = d();
  else if (key == "search.r") cfg.search.rank = idx();
  else if (key == "search.T") cfg.search.inner_iterations = sz();
  else if (key == "search.K") cfg.search.initial_context = sz();
  else if (key == "search.N") cfg.search.candidates = sz();
  else if (key == "search.r_local") cfg.search.radius = d();
  else if (key == "search.sigma") cfg.search.sigma = d();
  else if (key == "search.M_start") cfg.search.warmup = u();
  else if (key == "search.M") cfg.search.period = u();
  else if (key == "search.Q") cfg.search.window = sz();
  else if (key == "search.rank_tolerance") cfg.search.rank_tolerance = d();
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void ExperimentConfig::validate() const {
  search.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (method != Method::local_only && budget < search.warmup) {
    throw ConfigError("budget " + std::to_string(budget) + " is below M_start " + std::to_string(search.warmup));
  }
  if (!(step_size >= 0.0)) throw ConfigError("local.step_size must be >= 0");
  if (!(init_scale >= 0.0)) throw ConfigError("init.scale must be >= 0");
  if (surrogate != "idw" && surrogate != "ridge" && surrogate != "oracle" && surrogate != "remote") {
    throw ConfigError("unknown surrogate '" + surrogate + "' (expected idw, ridge, oracle or remote)");
  }
  if (surrogate == "remote" && surrogate_transport.empty()) {
    throw ConfigError("surrogate 'remote' needs surrogate.transport");
  }
  if (objective.kind != "planted_quadratic" && objective.kind != "lqr") {
    throw ConfigError("unknown objective '" + objective.kind + "'");
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (rankcheck_pool < 1) throw ConfigError("rankcheck.pool must be >= 1");
}

std::unique_ptr<Surrogate> make_surrogate(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective) {
  if (cfg.surrogate == "idw") return std::make_unique<IdwSurrogate>();
  if (cfg.surrogate == "ridge") return std::make_unique<RidgeSurrogate>(cfg.ridge_lambda);
  if (cfg.surrogate == "oracle") {
    return std::make_unique<OracleSurrogate>([objective](const Vector& theta) { return objective->value(theta); });
  }
  if (cfg.surrogate == "remote") {
    auto client = std::make_shared<WireClient>(open_transport(cfg.surrogate_transport));
    client->ping();
    return std::make_unique<RemoteSurrogate>(std::move(client));
  }
  throw ConfigError("unknown surrogate '" + cfg.surrogate + "'");
}

RunSetup make_run_setup(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& spec = cfg.objective;
  const std::uint64_t instance_seed = spec.seed.value_or(derive_seed(seed, 3));
  std::shared_ptr<const Objective> objective;
  if (spec.kind == "planted_quadratic") {
    objective = std::make_shared<PlantedQuadratic>(
        make_planted_quadratic(spec.dim, spec.effective_dim, spec.spectrum, instance_seed, spec.noise_std));
  } else if (spec.kind == "lqr") {
    LqrSpec lqr = spec.lqr;
    lqr.seed = instance_seed;
    lqr.noise_std = spec.noise_std;
    objective = std::make_shared<LqrRollout>(make_lqr(lqr));
  } else {
    throw ConfigError("unknown objective '" + spec.kind + "'");
  }

  RunSetup setup;
  const Index dim = objective->dim();
  setup.theta0 = Vector::Zero(dim);
  if (cfg.init_scale > 0.0) {
    Rng rng(derive_seed(seed, 4));
    const double scale = cfg.init_scale / std::sqrt(static_cast<double>(dim));
    for (Index i = 0; i < dim; ++i) setup.theta0[i] = scale * rng.normal();
  }

  const double offset = spec.offset == "auto" ? -objective->value(setup.theta0) : to_double("objective.offset", spec.offset);
  if (offset != 0.0) objective = std::make_shared<ShiftedObjective>(objective, offset);
  setup.objective = objective;
  if (cfg.method == Method::full || cfg.method == Method::one_shot) setup.surrogate = make_surrogate(cfg, objective);
  return setup;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
  return nlohmann::json(v).dump();
}

std::string run_file_stem(Method method, std::uint64_t seed) {
  return std::string(to_string(method)) + "-seed" + std::to_string(seed);
}

namespace {

ordered_json round_event(std::uint64_t step, const RoundTrace& trace) {
  ordered_json e;
  e["event"] = "round";
  e["step"] = step;
  e["kind"] = to_string(trace.kind);
  e["skipped"] = trace.skipped;
  if (!trace.note.empty()) e["note"] = trace.note;
  e["rank"] = trace.rank;
  e["rollouts"] = trace.rollout_count;
  if (!trace.skipped) {
    if (trace.kind != RoundKind::random_search) e["anchor_value"] = trace.anchor_value;
    e["initial_best"] = trace.initial_best;
    e["y_best"] = trace.y_best;
    ordered_json iterations = ordered_json::array();
    for (const auto& it : trace.iterations) {
      ordered_json r;
      r["predicted"] = it.predicted;
      r["value"] = it.value;
      r["delta"] = it.delta;
      r["pool_index"] = it.pool_index;
      r["fallback"] = it.fallback;
      if (it.non_finite) r["non_finite"] = it.non_finite;
      if (it.duplicates_merged) r["duplicates_merged"] = it.duplicates_merged;
      iterations.push_back(std::move(r));
    }
    e["iterations"] = std::move(iterations);
  }
  return e;
}

RunRecord run_with_setup(const ExperimentConfig& cfg, std::uint64_t seed, RunSetup& setup, std::ostream* events,
                         const PoolObserver& observer) {
  RunRecord record;
  record.method = cfg.method;
  record.seed = seed;

  auto emit = [&](const ordered_json& e) {
    if (events) *events << e.dump() << '\n';
  };

  ordered_json header;
  header["event"] = "run";
  header["method"] = to_string(cfg.method);
  header["seed"] = seed;
  header["objective"] = setup.objective->name();
  header["dim"] = setup.objective->dim();
  header["surrogate"] = setup.surrogate ? setup.surrogate->name() : "none";
  header["local_steps"] = cfg.budget;
  header["round_budget"] = cfg.method == Method::one_shot ? cfg.search.initial_context + 1 : cfg.search.round_budget();
  emit(header);

  std::uint64_t local_done = 0;
  Evaluator evaluate(*setup.objective, derive_seed(seed, 1), [&](const EvaluationEvent& ev) {
    ordered_json e;
    e["event"] = "eval";
    e["eval"] = ev.index;
    e["step"] = local_done;
    e["phase"] = to_string(ev.phase);
    e["value"] = ev.value;
    emit(e);
    if (ev.phase == Phase::local) {
      ++local_done;
      ++record.local_evaluations;
    } else {
      ++record.round_evaluations;
    }
  });

  Rng rng(derive_seed(seed, 2));
  GradientAscent optimizer(cfg.step_size);
  const InterleaveConfig icfg{cfg.search, cfg.method, cfg.budget};
  auto trace = interleave(icfg, setup.theta0, evaluate, optimizer, setup.surrogate.get(), rng,
                          [&](std::uint64_t step, const RoundTrace& t) { emit(round_event(step, t)); }, observer);

  record.curve = std::move(trace.curve);
  record.rounds = std::move(trace.rounds);
  record.evaluations = trace.evaluations;

  ordered_json end;
  end["event"] = "end";
  end["evaluations"] = record.evaluations;
  end["local_evaluations"] = record.local_evaluations;
  end["round_evaluations"] = record.round_evaluations;
  end["rounds"] = record.rounds.size();
  end["final_value"] = record.curve.empty() ? 0.0 : record.curve.back().value;
  emit(end);
  return record;
}

}  // namespace

RunRecord run_seed(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream* events,
                   const PoolObserver& observer) {
  cfg.validate();
  RunSetup setup = make_run_setup(cfg, seed);
  return run_with_setup(cfg, seed, setup, events, observer);
}

void write_curve_csv(const RunRecord& record, std::ostream& out) {
  out << "step,evaluation,value\n";
  for (const auto& p : record.curve) {
    out << p.step << ',' << p.evaluation << ',' << format_number(p.value) << '\n';
  }
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out);

  auto run_one = [&cfg](std::uint64_t seed) {
    const std::string stem = run_file_stem(cfg.method, seed);
    try {
      std::ofstream events(cfg.out / (stem + ".jsonl"), std::ios::binary | std::ios::trunc);
      if (!events) throw Error("cannot open " + (cfg.out / (stem + ".jsonl")).string());
      RunRecord record = run_seed(cfg, seed, &events);
      events.flush();
      if (!events) throw Error("failed writing " + (cfg.out / (stem + ".jsonl")).string());
      std::ofstream csv(cfg.out / (stem + ".csv"), std::ios::binary | std::ios::trunc);
      write_curve_csv(record, csv);
      csv.flush();
      if (!csv) throw Error("failed writing " + (cfg.out / (stem + ".csv")).string());
      return record;
    } catch (const std::exception& e) {
      RunRecord failed;
      failed.method = cfg.method;
      failed.seed = seed;
      failed.error = e.what();
      return failed;
    }
  };

  std::vector<RunRecord> records(cfg.seeds.size());
  for (std::size_t begin = 0; begin < cfg.seeds.size(); begin += cfg.jobs) {
    const std::size_t end = std::min(cfg.seeds.size(), begin + cfg.jobs);
    std::vector<std::future<RunRecord>> pending;
    for (std::size_t i = begin; i < end; ++i) pending.push_back(std::async(std::launch::async, run_one, cfg.seeds[i]));
    for (std::size_t i = begin; i < end; ++i) records[i] = pending[i - begin].get();
  }
  return records;
}

MethodSummary summarize_method(const std::string& method, const std::vector<std::vector<StepValue>>& curves) {
  MethodSummary row;
  row.method = method;
  row.seeds = curves.size();
  if (curves.empty()) return row;
  std::vector<double> finals;
  double steps = 0.0;
  for (const auto& c : curves) {
    if (c.empty()) throw Error("summarize: empty curve for method " + method);
    finals.push_back(c.back().value);
    steps += 100.0 * steps_to_fraction(c, 0.9) / static_cast<double>(c.size());
  }
  const double n = static_cast<double>(finals.size());
  double mean = 0.0;
  for (double f : finals) mean += f;
  mean /= n;
  double var = 0.0;
  for (double f : finals) var += (f - mean) * (f - mean);
  const double sd = std::sqrt(var / n);
  row.mean_final = mean;
  row.std_percent = sd == 0.0 ? 0.0 : (mean == 0.0 ? INFINITY : 100.0 * sd / std::abs(mean));
  row.steps_percent = steps / n;
  return row;
}

std::vector<LoadedCurve> load_curves(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  static const std::regex pattern(R"(^(.+)-seed([0-9]+)\.csv$)");
  std::vector<LoadedCurve> curves;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!entry.is_regular_file() || !std::regex_match(name, m, pattern)) continue;
    LoadedCurve curve;
    curve.method = m[1];
    curve.seed = to_u64("seed", m[2]);
    std::ifstream in(entry.path());
    std::string line;
    std::getline(in, line);
    if (trim(line) != "step,evaluation,value") throw Error(name + ": unexpected header");
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const auto fields = split_list(line);
      if (fields.size() != 3) throw Error(name + ": malformed row '" + line + "'");
      curve.points.push_back({to_double("step", fields[0]), to_double("value", fields[2])});
    }
    curves.push_back(std::move(curve));
  }
  std::sort(curves.begin(), curves.end(), [](const LoadedCurve& a, const LoadedCurve& b) {
    return a.method != b.method ? a.method < b.method : a.seed < b.seed;
  });
  return curves;
}

std::vector<MethodSummary> summarize_directory(const fs::path& dir) {
  const auto curves = load_curves(dir);
  if (curves.empty()) throw Error("no run curves (<method>-seed<N>.csv) in " + dir.string());
  std::map<std::string, std::vector<std::vector<StepValue>>> grouped;
  for (const auto& c : curves) grouped[c.method].push_back(c.points);

  std::vector<MethodSummary> rows;
  std::ofstream summary(dir / "summary.csv", std::ios::binary | std::ios::trunc);
  summary << "method,seeds,mean_final,std_percent,steps_percent\n";
  for (const auto& [method, group] : grouped) {
    rows.push_back(summarize_method(method, group));
    const auto& r = rows.back();
    summary << r.method << ',' << r.seeds << ',' << format_number(r.mean_final) << ','
            << format_number(r.std_percent) << ',' << format_number(r.steps_percent) << '\n';

    std::size_t length = group.front().size();
    for (const auto& c : group) length = std::min(length, c.size());
    std::ofstream band(dir / ("curves-" + method + ".csv"), std::ios::binary | std::ios::trunc);
    band << "step,mean,std\n";
    for (std::size_t i = 0; i < length; ++i) {
      double mean = 0.0;
      for (const auto& c : group) mean += c[i].value;
      mean /= static_cast<double>(group.size());
      double var = 0.0;
      for (const auto& c : group) var += (c[i].value - mean) * (c[i].value - mean);
      band << format_number(group.front()[i].step) << ',' << format_number(mean) << ','
           << format_number(std::sqrt(var / static_cast<double>(group.size()))) << '\n';
    }
  }
  return rows;
}

std::string format_summary_table(const std::vector<MethodSummary>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s %16s %10s %10s\n", "method", "seeds", "mean", "std(%)", "steps(%)");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %6zu %16.8g %10.2f %10.2f\n", r.method.c_str(), r.seeds, r.mean_final,
                  r.std_percent, r.steps_percent);
    out += line;
  }
  return out;
}

std::vector<RankcheckRow> rankcheck(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.method = Method::full;
  cfg.search.candidates = cfg.rankcheck_pool;
  cfg.validate();

  std::vector<RankcheckRow> rows;
  for (const auto seed : cfg.seeds) {
    RunSetup setup = make_run_setup(cfg, seed);
    const auto objective = setup.objective;
    std::size_t pools = 0;
    const std::size_t per_round = std::max<std::size_t>(cfg.search.inner_iterations, 1);
    PoolObserver observer = [&](std::span<const Vector> pool, std::span<const double> predicted, std::size_t,
                                const SubspaceBasis& basis) {
      std::vector<double> truth;
      truth.reserve(pool.size());
      for (const auto& z : pool) truth.push_back(objective->value(lift(basis, z)));
      RankcheckRow row;
      row.seed = seed;
      row.round = pools / per_round;
      row.iteration = pools % per_round;
      row.report = pool.size() >= 2 ? rank_report(predicted, truth)
                                    : RankReport{0.0, true, top1_percentile(predicted, truth), pool.size()};
      rows.push_back(row);
      ++pools;
    };
    run_with_setup(cfg, seed, setup, nullptr, observer);
  }

  fs::create_directories(cfg.out);
  std::ofstream csv(cfg.out / "rankcheck.csv", std::ios::binary | std::ios::trunc);
  csv << "seed,round,iteration,spearman,degenerate,top1_percentile,pool_size\n";
  for (const auto& r : rows) {
    csv << r.seed << ',' << r.round << ',' << r.iteration << ',' << format_number(r.report.spearman) << ','
        << (r.report.degenerate ? 1 : 0) << ',' << format_number(r.report.top1_percentile) << ','
        << r.report.pool_size << '\n';
  }
  if (!csv) throw Error("failed writing " + (cfg.out / "rankcheck.csv").string());
  return rows;
}

std::vector<ProtocolCheck> protocol_test(const std::string& transport_spec, bool compare_ridge) {
  std::vector<ProtocolCheck> checks;
  std::unique_ptr<LineTransport> transport;
  try {
    transport = open_transport(transport_spec, 10000);
  } catch (const std::exception& e) {
    checks.push_back({"connect", false, e.what()});
    return checks;
  }
  checks.push_back({"connect", true, transport->describe()});

  auto send = [&](const std::string& line) -> nlohmann::json {
    transport->write_line(line);
    return nlohmann::json::parse(transport->read_line());
  };
  auto check = [&](const std::string& name, auto&& body) {
    try {
      std::string detail;
      const bool ok = body(detail);
      checks.push_back({name, ok, detail});
    } catch (const std::exception& e) {
      checks.push_back({name, false, e.what()});
    }
  };
  auto ok_with_id = [](const nlohmann::json& r, std::uint64_t id) {
    return r.is_object() && r.value("ok", false) && r.contains("id") && r["id"] == id;
  };
  auto is_error = [](const nlohmann::json& r) {
    return r.is_object() && r.contains("ok") && r["ok"] == false && r.contains("error") && r["error"].is_string();
  };

  // y = 2 z1 - z2 + 0.5, exactly linear.
  std::vector<Vector> xs;
  std::vector<double> ys;
  for (int i = 0; i < 8; ++i) {
    Vector z(2);
    z << 0.1 * i - 0.3, 0.05 * ((i * 3) % 8) - 0.2;
    xs.push_back(z);
    ys.push_back(2.0 * z[0] - z[1] + 0.5);
  }
  std::vector<Vector> queries;
  for (double q : {-0.25, 0.0, 0.4}) {
    Vector z(2);
    z << q, 0.5 * q + 0.1;
    queries.push_back(z);
  }

  check("ping", [&](std::string& detail) {
    const auto r = send(wire::encode_ping(1));
    detail = r.dump();
    return ok_with_id(r, 1);
  });
  check("predict-before-fit rejected", [&](std::string& detail) {
    const auto r = send(wire::encode_predict(2, queries));
    detail = r.dump();
    return is_error(r);
  });
  check("malformed message rejected", [&](std::string& detail) {
    const auto r = send("{\"op\":\"fit\",\"xs\":[[1,2]");
    detail = r.dump();
    return is_error(r);
  });
  check("fit", [&](std::string& detail) {
    const auto r = send(wire::encode_fit(3, xs, ys));
    detail = r.dump();
    return ok_with_id(r, 3);
  });
  std::vector<double> remote;
  check("predict", [&](std::string& detail) {
    const auto r = send(wire::encode_predict(4, queries));
    detail = r.dump();
    if (!ok_with_id(r, 4) || !r.contains("yhat") || !r["yhat"].is_array() || r["yhat"].size() != queries.size()) {
      return false;
    }
    for (const auto& v : r["yhat"]) {
      if (!v.is_number()) return false;
      remote.push_back(v.get<double>());
    }
    return true;
  });
  if (compare_ridge) {
    check("ridge agreement within 1e-6", [&](std::string& detail) {
      if (remote.size() != queries.size()) {
        detail = "no predictions to compare";
        return false;
      }
      std::vector<ContextEntry> entries;
      for (std::size_t i = 0; i < xs.size(); ++i) entries.push_back({xs[i], ys[i]});
      const auto model = RidgeSurrogate(1e-6).fit(ContextSet(std::move(entries)), SubspaceBasis{});
      const auto local = model->predict(queries).values;
      double worst = 0.0;
      for (std::size_t i = 0; i < local.size(); ++i) worst = std::max(worst, std::abs(local[i] - remote[i]));
      detail = "max deviation " + format_number(worst);
      return worst <= 1e-6;
    });
  }
  check("out-of-order id rejected", [&](std::string& detail) {
    const auto r = send(wire::encode_ping(4));
    detail = r.dump();
    return is_error(r);
  });
  check("connection alive after errors", [&](std::string& detail) {
    const auto r = send(wire::encode_ping(5));
    detail = r.dump();
    return ok_with_id(r, 5);
  });
  return checks;
}

}  // namespace ssearch

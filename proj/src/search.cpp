#include "ssearch/search.hpp"

#include "ssearch/error.hpp"
#include "ssearch/sampler.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace ssearch {

void SearchConfig::validate() const {
  if (rank < 1) throw ConfigError("search rank r must be >= 1");
  if (initial_context < 1) throw ConfigError("initial context size K must be >= 1");
  if (candidates < 1) throw ConfigError("candidate pool size N must be >= 1");
  if (window < 1) throw ConfigError("gradient window Q must be >= 1");
  if (period < 1) throw ConfigError("search period M must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("r_local must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be >= 0");
  if (!(rank_tolerance > 0.0 && rank_tolerance < 1.0)) throw ConfigError("rank tolerance must lie in (0, 1)");
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::local: return "local";
    case Phase::round_init: return "round-init";
    case Phase::round_inner: return "round-inner";
    case Phase::round_random: return "round-random";
  }
  return "unknown";
}

std::string_view to_string(RoundKind kind) {
  switch (kind) {
    case RoundKind::full: return "full";
    case RoundKind::one_shot: return "one_shot";
    case RoundKind::random_search: return "random_search";
  }
  return "unknown";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::full: return "full";
    case Method::one_shot: return "one_shot";
    case Method::random_search: return "random_search";
    case Method::local_only: return "local_only";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "full") return Method::full;
  if (text == "one_shot") return Method::one_shot;
  if (text == "random_search") return Method::random_search;
  if (text == "local_only") return Method::local_only;
  throw ConfigError("unknown method '" + std::string(text) +
                    "' (expected full, one_shot, random_search or local_only)");
}

Evaluator::Evaluator(const Objective& objective, std::uint64_t seed, Listener listener)
    : objective_(objective), seed_(seed), listener_(std::move(listener)) {}

double Evaluator::operator()(const Vector& theta, Phase phase, std::size_t candidate) {
  const std::uint64_t index = count_;
  double value = 0.0;
  try {
    value = objective_.evaluate(theta, derive_seed(seed_, index));
    if (!std::isfinite(value)) throw NonFiniteError("objective returned a non-finite value");
  } catch (const std::exception& e) {
    throw EvaluationError("evaluation " + std::to_string(index) + " (" + std::string(to_string(phase)) +
                          ", candidate " + std::to_string(candidate) + ") failed: " + e.what());
  }
  ++count_;
  if (listener_) listener_({index, phase, value});
  return value;
}

ContextSet init_context(const SubspaceBasis& basis, Evaluator& evaluate, const SearchConfig& cfg, Rng& rng) {
  if (cfg.initial_context < 1) throw ConfigError("initial context size K must be >= 1");
  const Vector origin = Vector::Zero(basis.rank);
  ContextSet context;
  context.append(origin, evaluate(basis.anchor, Phase::round_init, 0));
  const auto draws = gaussian_sample({origin, cfg.radius, cfg.sigma}, cfg.initial_context - 1, rng);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    context.append(draws[i], evaluate(lift(basis, draws[i]), Phase::round_init, i + 1));
  }
  return context;
}

namespace {

const IdwSurrogate& fallback_surrogate() {
  static const IdwSurrogate idw;
  return idw;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

IterationRecord inner_iteration(ContextSet& context, const SubspaceBasis& basis, Evaluator& evaluate,
                                const SearchConfig& cfg, const Surrogate& surrogate, Rng& rng,
                                const PoolObserver& observer) {
  if (context.empty()) throw Error("inner iteration requires a non-empty context");
  IterationRecord record;

  std::unique_ptr<Predictor> predictor;
  try {
    predictor = surrogate.fit(context, basis);
  } catch (const std::exception& e) {
    record.fallback = true;
    record.fallback_reason = e.what();
  }

  const Vector center = context.best().z;
  const auto pool = gaussian_sample({center, cfg.radius, cfg.sigma}, cfg.candidates, rng);

  Predictions predictions;
  if (predictor) {
    try {
      predictions = predictor->predict(pool);
    } catch (const std::exception& e) {
      record.fallback = true;
      record.fallback_reason = e.what();
    }
  }
  if (record.fallback) {
    predictor = fallback_surrogate().fit(context, basis);
    predictions = predictor->predict(pool);
  }
  record.non_finite = predictions.non_finite;
  record.duplicates_merged = predictor->duplicates_merged();

  const std::size_t chosen = argmax_lowest(predictions.values);
  if (observer) observer(pool, predictions.values, chosen, basis);

  record.z = pool[chosen];
  record.pool_index = chosen;
  record.predicted = predictions.values[chosen];
  record.value = evaluate(lift(basis, record.z), Phase::round_inner, chosen);
  context.append(record.z, record.value);
  return record;
}

namespace {

std::optional<SubspaceBasis> try_basis(const Vector& theta_base, const GradientWindow& window,
                                       const SearchConfig& cfg, RoundTrace& trace) {
  try {
    return build_basis(window, theta_base, cfg.rank, cfg.rank_tolerance);
  } catch (const DegenerateHistory& e) {
    trace.skipped = true;
    trace.note = e.what();
    return std::nullopt;
  }
}

RoundResult guided_round(RoundKind kind, const Vector& theta_base, const GradientWindow& window,
                         Evaluator& evaluate, const SearchConfig& cfg, const Surrogate& surrogate, Rng& rng,
                         const PoolObserver& observer) {
  cfg.validate();
  RoundResult result{theta_base, {}};
  RoundTrace& trace = result.trace;
  trace.kind = kind;
  const auto basis = try_basis(theta_base, window, cfg, trace);
  if (!basis) return result;
  trace.rank = basis->rank;

  const std::uint64_t start = evaluate.count();
  ContextSet context = init_context(*basis, evaluate, cfg, rng);
  trace.anchor_value = context[0].y;
  trace.initial_best = context.best().y;

  for (std::size_t n = 0; n < cfg.inner_iterations; ++n) {
    IterationRecord record = inner_iteration(context, *basis, evaluate, cfg, surrogate, rng, observer);
    record.delta = record.value - trace.initial_best;
    trace.iterations.push_back(std::move(record));
  }

  const ContextEntry& best = context.best();
  trace.z_best = best.z;
  trace.y_best = best.y;
  trace.rollout_count = static_cast<std::size_t>(evaluate.count() - start);
  result.theta = lift(*basis, best.z);
  return result;
}

}  // namespace

RoundResult run_round(const Vector& theta_base, const GradientWindow& window, Evaluator& evaluate,
                      const SearchConfig& cfg, const Surrogate& surrogate, Rng& rng, const PoolObserver& observer) {
  return guided_round(RoundKind::full, theta_base, window, evaluate, cfg, surrogate, rng, observer);
}

RoundResult baseline_one_shot_round(const Vector& theta_base, const GradientWindow& window, Evaluator& evaluate,
                                    const SearchConfig& cfg, const Surrogate& surrogate, Rng& rng,
                                    const PoolObserver& observer) {
  SearchConfig one_shot = cfg;
  one_shot.inner_iterations = 1;
  return guided_round(RoundKind::one_shot, theta_base, window, evaluate, one_shot, surrogate, rng, observer);
}

RoundResult baseline_random_round(const Vector& theta_base, const GradientWindow& window, Evaluator& evaluate,
                                  const SearchConfig& cfg, Rng& rng) {
  cfg.validate();
  RoundResult result{theta_base, {}};
  RoundTrace& trace = result.trace;
  trace.kind = RoundKind::random_search;
  const auto basis = try_basis(theta_base, window, cfg, trace);
  if (!basis) return result;
  trace.rank = basis->rank;

  const std::uint64_t start = evaluate.count();
  const auto draws = gaussian_sample({Vector::Zero(basis->rank), cfg.radius, cfg.sigma}, cfg.round_budget(), rng);
  ContextSet context;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    context.append(draws[i], evaluate(lift(*basis, draws[i]), Phase::round_random, i));
  }
  const ContextEntry& best = context.best();
  trace.initial_best = best.y;
  trace.z_best = best.z;
  trace.y_best = best.y;
  trace.rollout_count = static_cast<std::size_t>(evaluate.count() - start);
  result.theta = lift(*basis, best.z);
  return result;
}

bool round_due(std::uint64_t step, std::uint64_t warmup, std::uint64_t period) {
  return step >= warmup && (step - warmup) % period == 0;
}

TrainingTrace interleave(const InterleaveConfig& cfg, const Vector& theta0, Evaluator& evaluate,
                         LocalOptimizer& optimizer, const Surrogate* surrogate, Rng& rng,
                         const RoundListener& on_round, const PoolObserver& observer) {
  cfg.search.validate();
  const Objective& objective = evaluate.objective();
  if (!objective.has_gradient()) throw Error("interleave requires an objective with gradients");
  const bool guided = cfg.method == Method::full || cfg.method == Method::one_shot;
  if (guided && !surrogate) throw ConfigError("method '" + std::string(to_string(cfg.method)) + "' needs a surrogate");

  TrainingTrace trace;
  GradientWindow window(cfg.search.window, objective.dim());
  Vector theta = theta0;

  for (std::uint64_t step = 1; step <= cfg.local_steps; ++step) {
    const double value = evaluate(theta, Phase::local);
    trace.curve.push_back({step - 1, evaluate.count() - 1, value});
    const Vector g = objective.gradient(theta);
    window.push(g);
    theta = optimizer.step(theta, g);

    if (cfg.method == Method::local_only || !round_due(step, cfg.search.warmup, cfg.search.period)) continue;

    RoundResult round;
    const std::uint64_t before = evaluate.count();
    try {
      switch (cfg.method) {
        case Method::full:
          round = run_round(theta, window, evaluate, cfg.search, *surrogate, rng, observer);
          break;
        case Method::one_shot:
          round = baseline_one_shot_round(theta, window, evaluate, cfg.search, *surrogate, rng, observer);
          break;
        case Method::random_search:
          round = baseline_random_round(theta, window, evaluate, cfg.search, rng);
          break;
        case Method::local_only:
          break;
      }
    } catch (const std::exception& e) {
      round.theta = theta;
      round.trace = RoundTrace{};
      round.trace.kind = cfg.method == Method::one_shot        ? RoundKind::one_shot
                         : cfg.method == Method::random_search ? RoundKind::random_search
                                                               : RoundKind::full;
      round.trace.skipped = true;
      round.trace.note = e.what();
      round.trace.rollout_count = static_cast<std::size_t>(evaluate.count() - before);
    }
    theta = round.theta;
    trace.rounds.push_back(std::move(round.trace));
    trace.round_steps.push_back(step);
    if (on_round) on_round(step, trace.rounds.back());
  }
  trace.final_theta = theta;
  trace.evaluations = evaluate.count();
  return trace;
}

}  // namespace ssearch

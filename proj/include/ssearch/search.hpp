#pragma once

#include "ssearch/objectives.hpp"
#include "ssearch/rng.hpp"
#include "ssearch/subspace.hpp"
#include "ssearch/surrogate.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssearch {

struct SearchConfig {
  Index rank = 15;                     // r
  std::size_t inner_iterations = 16;   // T (0 allowed: context only)
  std::size_t initial_context = 16;    // K, includes the anchor
  std::size_t candidates = 256;        // N, screened per inner iteration
  double radius = 0.01;                // r_local
  double sigma = 0.005;
  std::uint64_t warmup = 150000;       // M_start, in local evaluations
  std::uint64_t period = 10000;        // M
  std::size_t window = 32;             // Q
  double rank_tolerance = kDefaultRankTolerance;

  void validate() const;
  /// True evaluations consumed by one full round: K + T.
  std::size_t round_budget() const noexcept { return initial_context + inner_iterations; }
};

enum class Phase { local, round_init, round_inner, round_random };
std::string_view to_string(Phase phase);

struct EvaluationEvent {
  std::uint64_t index = 0;  // 0-based position on the unified evaluation axis
  Phase phase = Phase::local;
  double value = 0.0;
};

/// Counts every true objective call and derives its noise seed from
/// (run seed, evaluation index), so results do not depend on call sites.
class Evaluator {
 public:
  using Listener = std::function<void(const EvaluationEvent&)>;

  Evaluator(const Objective& objective, std::uint64_t seed, Listener listener = {});

  /// One counted evaluation. Failures are rethrown as EvaluationError naming
  /// the phase and candidate index.
  double operator()(const Vector& theta, Phase phase, std::size_t candidate = 0);

  std::uint64_t count() const noexcept { return count_; }
  const Objective& objective() const noexcept { return objective_; }

 private:
  const Objective& objective_;
  std::uint64_t seed_;
  std::uint64_t count_ = 0;
  Listener listener_;
};

struct IterationRecord {
  Vector z;                 // chosen coordinates z*
  double predicted = 0.0;   // surrogate prediction for z*
  double value = 0.0;       // true return y*
  double delta = 0.0;       // y* - best initial-context return
  std::size_t pool_index = 0;
  bool fallback = false;    // surrogate failed; IDW was used instead
  std::string fallback_reason;
  std::size_t non_finite = 0;
  std::size_t duplicates_merged = 0;
};

enum class RoundKind { full, one_shot, random_search };
std::string_view to_string(RoundKind kind);

struct RoundTrace {
  RoundKind kind = RoundKind::full;
  bool skipped = false;
  std::string note;
  Index rank = 0;
  double anchor_value = 0.0;   // stored evaluation of z = 0 (not re-evaluated)
  double initial_best = 0.0;   // y0: best return in the initial context
  std::vector<IterationRecord> iterations;
  Vector z_best;
  double y_best = 0.0;
  std::size_t rollout_count = 0;
};

struct RoundResult {
  Vector theta;
  RoundTrace trace;
};

/// Sees every screened pool before selection: candidates, their predictions,
/// the chosen index and the round's basis.
using PoolObserver = std::function<void(std::span<const Vector> pool, std::span<const double> predictions,
                                        std::size_t chosen, const SubspaceBasis& basis)>;

/// Anchor (z = 0) plus K - 1 draws around it, each truly evaluated.
ContextSet init_context(const SubspaceBasis& basis, Evaluator& evaluate, const SearchConfig& cfg, Rng& rng);

/// Fit, sample N around the incumbent, screen, evaluate the top candidate and
/// append it. Consumes exactly one evaluation. `delta` is left at 0.
IterationRecord inner_iteration(ContextSet& context, const SubspaceBasis& basis, Evaluator& evaluate,
                                const SearchConfig& cfg, const Surrogate& surrogate, Rng& rng,
                                const PoolObserver& observer = {});

/// Surrogate-guided round: K + T evaluations, returns the best evaluated point.
/// A degenerate history skips the round and returns theta_base.
RoundResult run_round(const Vector& theta_base, const GradientWindow& window, Evaluator& evaluate,
                      const SearchConfig& cfg, const Surrogate& surrogate, Rng& rng,
                      const PoolObserver& observer = {});

/// run_round with T = 1: K + 1 evaluations.
RoundResult baseline_one_shot_round(const Vector& theta_base, const GradientWindow& window, Evaluator& evaluate,
                                    const SearchConfig& cfg, const Surrogate& surrogate, Rng& rng,
                                    const PoolObserver& observer = {});

/// K + T Gaussian draws around z = 0, all truly evaluated; returns the best.
RoundResult baseline_random_round(const Vector& theta_base, const GradientWindow& window, Evaluator& evaluate,
                                  const SearchConfig& cfg, Rng& rng);

enum class Method { full, one_shot, random_search, local_only };
std::string_view to_string(Method method);
Method parse_method(std::string_view text);

class LocalOptimizer {
 public:
  virtual ~LocalOptimizer() = default;
  /// Parameters after one ascent step from `theta` with gradient `gradient`.
  virtual Vector step(const Vector& theta, const Vector& gradient) = 0;
};

class GradientAscent final : public LocalOptimizer {
 public:
  explicit GradientAscent(double step_size) : step_size_(step_size) {}
  Vector step(const Vector& theta, const Vector& gradient) override { return theta + step_size_ * gradient; }

 private:
  double step_size_;
};

/// True after local step `step` (1-based) when a round is due:
/// step >= warmup and (step - warmup) mod period == 0.
bool round_due(std::uint64_t step, std::uint64_t warmup, std::uint64_t period);

struct InterleaveConfig {
  SearchConfig search;
  Method method = Method::full;
  std::uint64_t local_steps = 0;  // length of the local loop
};

struct CurvePoint {
  std::uint64_t step = 0;        // local updates completed before this evaluation
  std::uint64_t evaluation = 0;  // unified evaluation index
  double value = 0.0;
};

struct TrainingTrace {
  std::vector<CurvePoint> curve;
  std::vector<RoundTrace> rounds;
  std::vector<std::uint64_t> round_steps;
  Vector final_theta;
  std::uint64_t evaluations = 0;
};

using RoundListener = std::function<void(std::uint64_t step, const RoundTrace& trace)>;

/// Local gradient ascent with periodic subspace rounds.
///
/// Local step m evaluates the current parameters (one evaluation, recorded on
/// the curve at step m - 1), pushes the raw gradient into the window and
/// applies the optimizer. When round_due(m) holds, the configured round runs
/// from the updated parameters and its result replaces them. A round that
/// throws is recorded as skipped and training continues.
TrainingTrace interleave(const InterleaveConfig& cfg, const Vector& theta0, Evaluator& evaluate,
                         LocalOptimizer& optimizer, const Surrogate* surrogate, Rng& rng,
                         const RoundListener& on_round = {}, const PoolObserver& observer = {});

}  // namespace ssearch

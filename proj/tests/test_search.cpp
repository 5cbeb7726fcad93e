#include "ssearch/error.hpp"
#include "ssearch/objectives.hpp"
#include "ssearch/search.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

using namespace ssearch;

namespace {

struct Fixture {
  PlantedQuadratic objective;
  GradientWindow window;
  Vector theta;

  explicit Fixture(std::uint64_t seed, Index dim = 50, Index d_eff = 5, double noise = 0.0)
      : objective(make_planted_quadratic(dim, d_eff, {-1.0}, seed, noise)), window(32, dim) {
    Rng rng(seed + 100);
    theta = Vector(dim);
    for (Index i = 0; i < dim; ++i) theta[i] = rng.normal();
    // A short gradient-ascent history fills the window.
    Vector t = theta;
    for (int k = 0; k < 32; ++k) {
      const Vector g = objective.gradient(t);
      window.push(g);
      t += 0.01 * g;
    }
    theta = t;
  }
};

SearchConfig small_config() {
  SearchConfig cfg;
  cfg.rank = 5;
  cfg.radius = 0.5;
  cfg.sigma = 0.25;
  return cfg;
}

}  // namespace

TEST_CASE("init_context holds the anchor plus K-1 draws") {
  Fixture fx(1);
  auto cfg = small_config();
  const auto basis = build_basis(fx.window, fx.theta, cfg.rank);
  for (std::size_t k : {1u, 16u}) {
    cfg.initial_context = k;
    Evaluator eval(fx.objective, 0);
    Rng rng(2);
    const auto ctx = init_context(basis, eval, cfg, rng);
    REQUIRE(ctx.size() == k);
    CHECK(eval.count() == k);
    CHECK(ctx[0].z.isZero(0.0));
    CHECK(ctx[0].y == fx.objective.value(fx.theta));
  }
}

TEST_CASE("init_context with sigma 0 evaluates the anchor K times") {
  Fixture fx(2);
  auto cfg = small_config();
  cfg.sigma = 0.0;
  const auto basis = build_basis(fx.window, fx.theta, cfg.rank);
  Evaluator eval(fx.objective, 0);
  Rng rng(3);
  const auto ctx = init_context(basis, eval, cfg, rng);
  for (const auto& e : ctx) {
    CHECK(e.z.isZero(0.0));
    CHECK(e.y == ctx[0].y);
  }
}

TEST_CASE("inner_iteration consumes one evaluation and appends it") {
  Fixture fx(3);
  const auto cfg = small_config();
  const auto basis = build_basis(fx.window, fx.theta, cfg.rank);
  Evaluator eval(fx.objective, 0);
  Rng rng(4);
  auto ctx = init_context(basis, eval, cfg, rng);
  const auto before = eval.count();
  const IdwSurrogate idw;
  const auto record = inner_iteration(ctx, basis, eval, cfg, idw, rng);
  CHECK(eval.count() == before + 1);
  CHECK(ctx.size() == cfg.initial_context + 1);
  CHECK(ctx.entries().back().z == record.z);
  CHECK(record.value == fx.objective.value(lift(basis, record.z)));
  CHECK_FALSE(record.fallback);
}

TEST_CASE("inner_iteration with sigma 0 re-evaluates the incumbent") {
  Fixture fx(4);
  auto cfg = small_config();
  cfg.sigma = 0.0;
  const auto basis = build_basis(fx.window, fx.theta, cfg.rank);
  Evaluator eval(fx.objective, 0);
  Rng rng(5);
  ContextSet ctx;
  Vector z = Vector::Zero(basis.rank);
  z[0] = 0.1;
  ctx.append(Vector::Zero(basis.rank), -5.0);
  ctx.append(z, 7.0);
  const IdwSurrogate idw;
  const auto record = inner_iteration(ctx, basis, eval, cfg, idw, rng);
  CHECK(record.z == z);
}

TEST_CASE("the oracle surrogate picks the truly best pool member") {
  Fixture fx(5);
  const auto cfg = small_config();
  const auto basis = build_basis(fx.window, fx.theta, cfg.rank);
  const auto& f = fx.objective;
  const OracleSurrogate oracle([&f](const Vector& t) { return f.value(t); });
  Evaluator eval(f, 0);
  Rng rng(6);
  auto ctx = init_context(basis, eval, cfg, rng);
  double best_true = -INFINITY;
  const PoolObserver watch = [&](std::span<const Vector> pool, std::span<const double>, std::size_t,
                                 const SubspaceBasis& b) {
    best_true = -INFINITY;
    for (const auto& z : pool) best_true = std::max(best_true, f.value(lift(b, z)));
  };
  for (int n = 0; n < 8; ++n) {
    const auto record = inner_iteration(ctx, basis, eval, cfg, oracle, rng, watch);
    CHECK(record.value == best_true);
  }
}

TEST_CASE("run_round consumes K + T evaluations and never loses the anchor") {
  Fixture fx(6);
  const auto cfg = small_config();
  Evaluator eval(fx.objective, 0);
  Rng rng(7);
  const IdwSurrogate idw;
  const auto result = run_round(fx.theta, fx.window, eval, cfg, idw, rng);
  CHECK(eval.count() == 32);
  CHECK(result.trace.rollout_count == 32);
  CHECK(result.trace.iterations.size() == 16);
  CHECK_FALSE(result.trace.skipped);
  CHECK(result.trace.y_best >= result.trace.anchor_value);
  CHECK(result.trace.y_best >= result.trace.initial_best);
  const auto basis = build_basis(fx.window, fx.theta, cfg.rank);
  CHECK((result.theta - lift(basis, result.trace.z_best)).norm() == 0.0);
  CHECK(fx.objective.value(result.theta) == result.trace.y_best);
}

TEST_CASE("run_round with T = 0 keeps the best initial draw") {
  Fixture fx(7);
  auto cfg = small_config();
  cfg.inner_iterations = 0;
  Evaluator eval(fx.objective, 0);
  Rng rng(8);
  const IdwSurrogate idw;
  const auto result = run_round(fx.theta, fx.window, eval, cfg, idw, rng);
  CHECK(eval.count() == 16);
  CHECK(result.trace.iterations.empty());
  CHECK(result.trace.y_best == result.trace.initial_best);
}

TEST_CASE("improvement deltas are measured against the initial best") {
  Fixture fx(8);
  const auto cfg = small_config();
  Evaluator eval(fx.objective, 0);
  Rng rng(9);
  const IdwSurrogate idw;
  const auto result = run_round(fx.theta, fx.window, eval, cfg, idw, rng);
  for (const auto& it : result.trace.iterations) CHECK(it.delta == it.value - result.trace.initial_best);
}

TEST_CASE("random baseline evaluates K + T draws around the base") {
  Fixture fx(9);
  auto cfg = small_config();
  Evaluator eval(fx.objective, 0);
  Rng rng(10);
  const auto result = baseline_random_round(fx.theta, fx.window, eval, cfg, rng);
  CHECK(eval.count() == 32);
  CHECK(result.trace.rollout_count == 32);

  cfg.sigma = 0.0;
  Evaluator eval0(fx.objective, 0);
  const auto still = baseline_random_round(fx.theta, fx.window, eval0, cfg, rng);
  const auto basis = build_basis(fx.window, fx.theta, cfg.rank);
  CHECK(still.theta == lift(basis, Vector::Zero(basis.rank)));
  CHECK((still.theta - fx.theta).norm() == 0.0);
}

TEST_CASE("one-shot baseline is run_round with T = 1") {
  Fixture fx(10);
  auto cfg = small_config();
  const IdwSurrogate idw;
  Evaluator e1(fx.objective, 0), e2(fx.objective, 0);
  Rng r1(11), r2(11);
  const auto a = baseline_one_shot_round(fx.theta, fx.window, e1, cfg, idw, r1);
  cfg.inner_iterations = 1;
  const auto b = run_round(fx.theta, fx.window, e2, cfg, idw, r2);
  CHECK(e1.count() == 17);
  CHECK(a.trace.rollout_count == 17);
  CHECK(a.theta == b.theta);
  CHECK(a.trace.y_best == b.trace.y_best);
  CHECK(a.trace.kind == RoundKind::one_shot);
}

TEST_CASE("an all-zero gradient window skips the round") {
  Fixture fx(11);
  GradientWindow zeros(4, fx.objective.dim());
  zeros.push(Vector::Zero(fx.objective.dim()));
  Evaluator eval(fx.objective, 0);
  Rng rng(12);
  const IdwSurrogate idw;
  const auto result = run_round(fx.theta, zeros, eval, small_config(), idw, rng);
  CHECK(result.trace.skipped);
  CHECK(eval.count() == 0);
  CHECK(result.theta == fx.theta);
  const auto random = baseline_random_round(fx.theta, GradientWindow(4, fx.objective.dim()), eval, small_config(), rng);
  CHECK(random.trace.skipped);
}

TEST_CASE("round_due schedule") {
  CHECK_FALSE(round_due(9, 10, 5));
  CHECK(round_due(10, 10, 5));
  CHECK_FALSE(round_due(11, 10, 5));
  CHECK(round_due(15, 10, 5));
  int due = 0;
  for (std::uint64_t m = 1; m <= 150000 + 2 * 10000 + 1; ++m) due += round_due(m, 150000, 10000);
  CHECK(due == 3);
}

TEST_CASE("interleave accounting: budget counts local steps, rounds add K + T") {
  Fixture fx(12);
  InterleaveConfig cfg;
  cfg.search = small_config();
  cfg.search.warmup = 20;
  cfg.search.period = 10;
  cfg.local_steps = 41;
  const IdwSurrogate idw;
  GradientAscent opt(0.01);

  for (Method method : {Method::full, Method::one_shot, Method::random_search, Method::local_only}) {
    cfg.method = method;
    Evaluator eval(fx.objective, 0);
    Rng rng(13);
    const auto trace = interleave(cfg, fx.theta, eval, opt, &idw, rng);
    CHECK(trace.curve.size() == 41);
    const std::size_t per = method == Method::one_shot ? 17 : 32;
    const std::size_t rounds = method == Method::local_only ? 0 : 3;
    CHECK(trace.rounds.size() == rounds);
    CHECK(trace.evaluations == 41 + rounds * per);
    if (rounds) CHECK(trace.round_steps == std::vector<std::uint64_t>{20, 30, 40});
  }
}

TEST_CASE("no rounds when warmup exceeds the budget") {
  Fixture fx(13);
  InterleaveConfig cfg;
  cfg.search = small_config();
  cfg.search.warmup = 100;
  cfg.local_steps = 50;
  const IdwSurrogate idw;
  GradientAscent opt(0.01);
  Evaluator eval(fx.objective, 0);
  Rng rng(14);
  const auto trace = interleave(cfg, fx.theta, eval, opt, &idw, rng);
  CHECK(trace.rounds.empty());
  CHECK(trace.evaluations == 50);
}

TEST_CASE("local training resumes from the round result") {
  Fixture fx(14);
  InterleaveConfig cfg;
  cfg.search = small_config();
  cfg.search.warmup = 5;
  cfg.search.period = 1000;
  cfg.local_steps = 6;
  const IdwSurrogate idw;
  GradientAscent opt(0.01);
  Evaluator eval(fx.objective, 0);
  Rng rng(15);
  double round_best = 0;
  const auto trace = interleave(cfg, fx.theta, eval, opt, &idw, rng,
                                [&](std::uint64_t, const RoundTrace& t) { round_best = t.y_best; });
  REQUIRE(trace.rounds.size() == 1);
  CHECK(trace.curve.back().value == round_best);
  CHECK(trace.curve.back().evaluation == 5 + 32);
}

TEST_CASE("selection is invariant to increasing transforms of the predictions") {
  Fixture fx(15);
  const auto cfg = small_config();
  const auto& f = fx.objective;
  const OracleSurrogate plain([&f](const Vector& t) { return f.value(t); });
  const OracleSurrogate warped([&f](const Vector& t) { return std::exp(0.3 * f.value(t)) * 5 - 2; });
  Evaluator e1(f, 0), e2(f, 0);
  Rng r1(16), r2(16);
  const auto a = run_round(fx.theta, fx.window, e1, cfg, plain, r1);
  const auto b = run_round(fx.theta, fx.window, e2, cfg, warped, r2);
  REQUIRE(a.trace.iterations.size() == b.trace.iterations.size());
  for (std::size_t i = 0; i < a.trace.iterations.size(); ++i) {
    CHECK(a.trace.iterations[i].pool_index == b.trace.iterations[i].pool_index);
  }
  CHECK(a.theta == b.theta);
}

TEST_CASE("rounds are deterministic under noise") {
  Fixture fx(16, 50, 5, 0.3);
  const auto cfg = small_config();
  const IdwSurrogate idw;
  Evaluator e1(fx.objective, 77), e2(fx.objective, 77);
  Rng r1(17), r2(17);
  const auto a = run_round(fx.theta, fx.window, e1, cfg, idw, r1);
  const auto b = run_round(fx.theta, fx.window, e2, cfg, idw, r2);
  CHECK(a.theta == b.theta);
  CHECK(a.trace.y_best == b.trace.y_best);
}

TEST_CASE("a throwing surrogate falls back to IDW for that iteration") {
  struct Broken final : Surrogate {
    std::unique_ptr<Predictor> fit(const ContextSet&, const SubspaceBasis&) const override {
      throw Error("broken on purpose");
    }
    std::string name() const override { return "broken"; }
  };
  Fixture fx(17);
  Evaluator eval(fx.objective, 0);
  Rng rng(18);
  const auto result = run_round(fx.theta, fx.window, eval, small_config(), Broken{}, rng);
  CHECK(eval.count() == 32);
  for (const auto& it : result.trace.iterations) {
    CHECK(it.fallback);
    CHECK(it.fallback_reason.find("broken on purpose") != std::string::npos);
  }
}

TEST_CASE("objective failures surface as EvaluationError") {
  struct Exploding final : Objective {
    Index dim() const override { return 3; }
    double value(const Vector&) const override { return NAN; }
    std::string name() const override { return "exploding"; }
  };
  Exploding f;
  Evaluator eval(f, 0);
  CHECK_THROWS_AS(eval(Vector::Zero(3), Phase::local), EvaluationError);
  CHECK(eval.count() == 0);
}

TEST_CASE("search config validation") {
  SearchConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.initial_context = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.radius = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.sigma = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_method("one_shot") == Method::one_shot);
  CHECK_THROWS_AS(parse_method("annealing"), ConfigError);
}

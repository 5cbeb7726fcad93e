#include "ssearch/metrics.hpp"

#include "ssearch/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ssearch {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 (0-based) share rank mean(i+1..j)
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DimensionError("spearman: lengths differ (" + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw DimensionError("spearman: need at least two observations");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

double top1_percentile(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size()) throw DimensionError("top1_percentile: lengths differ");
  if (predicted.empty()) throw DimensionError("top1_percentile: empty pool");
  std::size_t chosen = 0;
  for (std::size_t i = 1; i < predicted.size(); ++i) {
    if (predicted[i] > predicted[chosen]) chosen = i;
  }
  const auto better = std::count_if(truth.begin(), truth.end(), [&](double t) { return t > truth[chosen]; });
  return 100.0 * static_cast<double>(better) / static_cast<double>(truth.size());
}

RankReport rank_report(std::span<const double> predicted, std::span<const double> truth) {
  const auto rho = spearman(predicted, truth);
  return {rho.rho, rho.degenerate, top1_percentile(predicted, truth), truth.size()};
}

ImprovementSeries improvement_series(const RoundTrace& trace) {
  ImprovementSeries out;
  out.deltas.reserve(trace.iterations.size());
  for (const auto& it : trace.iterations) out.deltas.push_back(it.value - trace.initial_best);
  if (!out.deltas.empty()) out.best = *std::max_element(out.deltas.begin(), out.deltas.end());
  return out;
}

double steps_to_fraction(std::span<const StepValue> curve, double fraction) {
  if (curve.empty()) throw Error("steps_to_fraction: empty curve");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("steps_to_fraction: fraction must lie in (0, 1]");
  const double target = fraction * curve.back().value;
  for (const auto& p : curve) {
    if (p.value >= target) return p.step;
  }
  return curve.back().step;
}

}  // namespace ssearch

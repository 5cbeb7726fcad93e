#pragma once

#include "ssearch/search.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ssearch {

struct SpearmanResult {
  double rho = 0.0;
  /// One input has zero rank variance; rho is reported as 0.
  bool degenerate = false;
};

/// Ranks 1..n with ties given the average of the positions they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of tie-averaged ranks. Throws DimensionError unless the
/// inputs have equal length >= 2.
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

/// 100 * |{j : truth_j > truth_i*}| / N where i* is the argmax of `predicted`
/// (lowest index on ties). 0 means the selected candidate is truly the best.
double top1_percentile(std::span<const double> predicted, std::span<const double> truth);

struct RankReport {
  double spearman = 0.0;
  bool degenerate = false;
  double top1_percentile = 0.0;
  std::size_t pool_size = 0;
};

RankReport rank_report(std::span<const double> predicted, std::span<const double> truth);

struct ImprovementSeries {
  std::vector<double> deltas;  // y*_n - y0, one per inner iteration
  double best = 0.0;           // max over deltas (0 when there are none)
};

ImprovementSeries improvement_series(const RoundTrace& trace);

struct StepValue {
  double step = 0.0;
  double value = 0.0;
};

/// First step whose value reaches fraction * (last value). Comparison uses the
/// signed target as-is; if no point qualifies the last step is returned.
double steps_to_fraction(std::span<const StepValue> curve, double fraction);

}  // namespace ssearch

#pragma once

#include "ssearch/subspace.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ssearch {

struct ContextEntry {
  Vector z;
  double y = 0.0;
};

/// Truly evaluated (z, y) pairs of one search round, in insertion order.
class ContextSet {
 public:
  ContextSet() = default;
  explicit ContextSet(std::vector<ContextEntry> entries);

  /// Appends an entry. The first entry fixes the coordinate dimension.
  void append(Vector z, double y);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  Index dim() const noexcept { return entries_.empty() ? 0 : entries_.front().z.size(); }

  const ContextEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<ContextEntry>& entries() const noexcept { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Index of the largest y; the earliest inserted wins ties.
  std::size_t best_index() const;
  const ContextEntry& best() const { return entries_[best_index()]; }

 private:
  std::vector<ContextEntry> entries_;
};

struct TargetStats {
  double mean = 0.0;
  double scale = 1.0;

  double normalize(double y) const { return (y - mean) / scale; }
  double denormalize(double y) const { return y * scale + mean; }
};

inline constexpr double kMinTargetScale = 1e-12;

/// Standardizes targets: y' = (y - mean) / max(population std, 1e-12).
std::pair<ContextSet, TargetStats> normalize_targets(const ContextSet& context);

/// Collapses entries with bitwise-identical z into one entry with the mean y,
/// keeping first-occurrence order. `merged` receives the number of dropped rows.
ContextSet merge_duplicates(const ContextSet& context, std::size_t* merged = nullptr);

struct Predictions {
  std::vector<double> values;
  /// Count of raw predictions that were NaN/Inf and were replaced by -inf.
  std::size_t non_finite = 0;
};

/// A fitted surrogate. Immutable; predict may be called concurrently.
class Predictor {
 public:
  virtual ~Predictor() = default;

  /// One prediction per query, in order. Non-finite outputs become -inf so the
  /// candidate can never win an argmax.
  Predictions predict(std::span<const Vector> queries) const;

  std::size_t duplicates_merged() const noexcept { return duplicates_merged_; }

 protected:
  virtual std::vector<double> predict_raw(std::span<const Vector> queries) const = 0;

  std::size_t duplicates_merged_ = 0;
  Index dim_ = 0;
};

/// Fit recipe. `fit` is called once per inner iteration with that round's
/// context; `basis` is the round's manifold, used only by surrogates that
/// evaluate the objective directly.
class Surrogate {
 public:
  virtual ~Surrogate() = default;
  virtual std::unique_ptr<Predictor> fit(const ContextSet& context, const SubspaceBasis& basis) const = 0;
  virtual std::string name() const = 0;
};

/// Inverse-distance weighting with weights 1 / max(d, floor)^power.
class IdwSurrogate final : public Surrogate {
 public:
  explicit IdwSurrogate(double power = 2.0, double distance_floor = 1e-12)
      : power_(power), floor_(distance_floor) {}
  std::unique_ptr<Predictor> fit(const ContextSet& context, const SubspaceBasis& basis) const override;
  std::string name() const override { return "idw"; }

 private:
  double power_;
  double floor_;
};

/// Affine ridge regression y = w.z + b with an unpenalized intercept.
class RidgeSurrogate final : public Surrogate {
 public:
  explicit RidgeSurrogate(double lambda = 1e-6) : lambda_(lambda) {}
  std::unique_ptr<Predictor> fit(const ContextSet& context, const SubspaceBasis& basis) const override;
  std::string name() const override { return "ridge"; }

 private:
  double lambda_;
};

/// Ridge predictor with its coefficients exposed in original target units.
class RidgePredictor final : public Predictor {
 public:
  RidgePredictor(Vector weights, double intercept, std::size_t merged);
  const Vector& weights() const noexcept { return weights_; }
  double intercept() const noexcept { return intercept_; }

 protected:
  std::vector<double> predict_raw(std::span<const Vector> queries) const override;

 private:
  Vector weights_;
  double intercept_;
};

/// Predicts with an arbitrary function of the lifted parameters. With the
/// noiseless objective this is the perfect-information surrogate.
class OracleSurrogate final : public Surrogate {
 public:
  using Function = std::function<double(const Vector& theta)>;
  explicit OracleSurrogate(Function f) : f_(std::move(f)) {}
  std::unique_ptr<Predictor> fit(const ContextSet& context, const SubspaceBasis& basis) const override;
  std::string name() const override { return "oracle"; }

 private:
  Function f_;
};

class WireClient;

/// Delegates fit/predict to a remote process over the line protocol.
/// Targets are normalized before sending and predictions denormalized.
class RemoteSurrogate final : public Surrogate {
 public:
  explicit RemoteSurrogate(std::shared_ptr<WireClient> client) : client_(std::move(client)) {}
  std::unique_ptr<Predictor> fit(const ContextSet& context, const SubspaceBasis& basis) const override;
  std::string name() const override { return "remote"; }

 private:
  std::shared_ptr<WireClient> client_;
};

}  // namespace ssearch

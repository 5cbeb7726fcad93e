#include "ssearch/surrogate.hpp"

#include "ssearch/error.hpp"
#include "ssearch/wire.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <string>

namespace ssearch {

ContextSet::ContextSet(std::vector<ContextEntry> entries) {
  for (auto& e : entries) append(std::move(e.z), e.y);
}

void ContextSet::append(Vector z, double y) {
  if (!entries_.empty() && z.size() != dim()) {
    throw DimensionError("context entry has dimension " + std::to_string(z.size()) + ", expected " +
                         std::to_string(dim()));
  }
  require_finite(z, "context coordinate");
  if (!std::isfinite(y)) throw NonFiniteError("context target is not finite");
  entries_.push_back({std::move(z), y});
}

std::size_t ContextSet::best_index() const {
  if (entries_.empty()) throw Error("best_index on an empty context");
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].y > entries_[best].y) best = i;
  }
  return best;
}

std::pair<ContextSet, TargetStats> normalize_targets(const ContextSet& context) {
  if (context.empty()) throw Error("cannot normalize an empty context");
  const double n = static_cast<double>(context.size());
  double mean = 0.0;
  for (const auto& e : context) mean += e.y;
  mean /= n;
  double var = 0.0;
  for (const auto& e : context) var += (e.y - mean) * (e.y - mean);
  var /= n;
  const TargetStats stats{mean, std::max(std::sqrt(var), kMinTargetScale)};

  std::vector<ContextEntry> out;
  out.reserve(context.size());
  for (const auto& e : context) out.push_back({e.z, stats.normalize(e.y)});
  return {ContextSet(std::move(out)), stats};
}

namespace {

struct BitwiseLess {
  bool operator()(const Vector& a, const Vector& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size(),
                                        [](double x, double y) {
                                          std::uint64_t bx, by;
                                          std::memcpy(&bx, &x, sizeof bx);
                                          std::memcpy(&by, &y, sizeof by);
                                          return bx < by;
                                        });
  }
};

}  // namespace

ContextSet merge_duplicates(const ContextSet& context, std::size_t* merged) {
  std::map<Vector, std::size_t, BitwiseLess> slot;
  std::vector<Vector> zs;
  std::vector<double> sums;
  std::vector<double> counts;
  for (const auto& e : context) {
    auto [it, inserted] = slot.try_emplace(e.z, zs.size());
    if (inserted) {
      zs.push_back(e.z);
      sums.push_back(e.y);
      counts.push_back(1.0);
    } else {
      sums[it->second] += e.y;
      counts[it->second] += 1.0;
    }
  }
  if (merged) *merged = context.size() - zs.size();
  std::vector<ContextEntry> out;
  out.reserve(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) out.push_back({std::move(zs[i]), sums[i] / counts[i]});
  return ContextSet(std::move(out));
}

Predictions Predictor::predict(std::span<const Vector> queries) const {
  for (const auto& q : queries) {
    if (q.size() != dim_) {
      throw DimensionError("query has dimension " + std::to_string(q.size()) + ", surrogate expects " +
                           std::to_string(dim_));
    }
  }
  Predictions out;
  if (queries.empty()) return out;
  out.values = predict_raw(queries);
  if (out.values.size() != queries.size()) {
    throw Error("surrogate returned " + std::to_string(out.values.size()) + " predictions for " +
                std::to_string(queries.size()) + " queries");
  }
  for (double& v : out.values) {
    if (!std::isfinite(v)) {
      v = -std::numeric_limits<double>::infinity();
      ++out.non_finite;
    }
  }
  return out;
}

namespace {

void require_fit_input(const ContextSet& context) {
  if (context.empty()) throw Error("cannot fit a surrogate on an empty context");
}

class IdwPredictor final : public Predictor {
 public:
  IdwPredictor(ContextSet data, TargetStats stats, double power, double floor, std::size_t merged)
      : data_(std::move(data)), stats_(stats), power_(power), floor_(floor) {
    duplicates_merged_ = merged;
    dim_ = data_.dim();
  }

 protected:
  std::vector<double> predict_raw(std::span<const Vector> queries) const override {
    std::vector<double> out;
    out.reserve(queries.size());
    for (const auto& q : queries) {
      double num = 0.0;
      double den = 0.0;
      for (const auto& e : data_) {
        const double d = std::max((q - e.z).norm(), floor_);
        const double w = power_ == 2.0 ? 1.0 / (d * d) : std::pow(d, -power_);
        num += w * e.y;
        den += w;
      }
      out.push_back(stats_.denormalize(num / den));
    }
    return out;
  }

 private:
  ContextSet data_;
  TargetStats stats_;
  double power_;
  double floor_;
};

}  // namespace

std::unique_ptr<Predictor> IdwSurrogate::fit(const ContextSet& context, const SubspaceBasis&) const {
  require_fit_input(context);
  std::size_t merged = 0;
  auto unique = merge_duplicates(context, &merged);
  auto [normalized, stats] = normalize_targets(unique);
  return std::make_unique<IdwPredictor>(std::move(normalized), stats, power_, floor_, merged);
}

RidgePredictor::RidgePredictor(Vector weights, double intercept, std::size_t merged)
    : weights_(std::move(weights)), intercept_(intercept) {
  duplicates_merged_ = merged;
  dim_ = weights_.size();
}

std::vector<double> RidgePredictor::predict_raw(std::span<const Vector> queries) const {
  std::vector<double> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(weights_.dot(q) + intercept_);
  return out;
}

std::unique_ptr<Predictor> RidgeSurrogate::fit(const ContextSet& context, const SubspaceBasis&) const {
  require_fit_input(context);
  std::size_t merged = 0;
  auto unique = merge_duplicates(context, &merged);
  auto [normalized, stats] = normalize_targets(unique);

  const Index n = static_cast<Index>(normalized.size());
  const Index d = normalized.dim();
  Matrix z(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    z.row(i) = normalized[static_cast<std::size_t>(i)].z.transpose();
    y[i] = normalized[static_cast<std::size_t>(i)].y;
  }
  const Eigen::RowVectorXd z_mean = z.colwise().mean();
  const double y_mean = y.mean();
  const Matrix zc = z.rowwise() - z_mean;
  const Vector yc = y.array() - y_mean;

  Matrix gram = zc.transpose() * zc;
  gram.diagonal().array() += lambda_;
  const Vector w = gram.ldlt().solve(zc.transpose() * yc);
  const double b = y_mean - z_mean.dot(w);

  return std::make_unique<RidgePredictor>(w * stats.scale, b * stats.scale + stats.mean, merged);
}

namespace {

class OraclePredictor final : public Predictor {
 public:
  OraclePredictor(const OracleSurrogate::Function& f, SubspaceBasis basis, Index dim)
      : f_(f), basis_(std::move(basis)) {
    dim_ = dim;
  }

 protected:
  std::vector<double> predict_raw(std::span<const Vector> queries) const override {
    std::vector<double> out;
    out.reserve(queries.size());
    for (const auto& q : queries) out.push_back(f_(lift(basis_, q)));
    return out;
  }

 private:
  OracleSurrogate::Function f_;
  SubspaceBasis basis_;
};

class RemotePredictor final : public Predictor {
 public:
  RemotePredictor(std::shared_ptr<WireClient> client, TargetStats stats, Index dim, std::size_t merged)
      : client_(std::move(client)), stats_(stats) {
    dim_ = dim;
    duplicates_merged_ = merged;
  }

 protected:
  std::vector<double> predict_raw(std::span<const Vector> queries) const override {
    auto raw = client_->predict(queries);
    for (double& v : raw) v = stats_.denormalize(v);
    return raw;
  }

 private:
  std::shared_ptr<WireClient> client_;
  TargetStats stats_;
};

}  // namespace

std::unique_ptr<Predictor> OracleSurrogate::fit(const ContextSet& context, const SubspaceBasis& basis) const {
  require_fit_input(context);
  return std::make_unique<OraclePredictor>(f_, basis, context.dim());
}

std::unique_ptr<Predictor> RemoteSurrogate::fit(const ContextSet& context, const SubspaceBasis&) const {
  require_fit_input(context);
  std::size_t merged = 0;
  auto unique = merge_duplicates(context, &merged);
  auto [normalized, stats] = normalize_targets(unique);
  std::vector<Vector> xs;
  std::vector<double> ys;
  xs.reserve(normalized.size());
  ys.reserve(normalized.size());
  for (const auto& e : normalized) {
    xs.push_back(e.z);
    ys.push_back(e.y);
  }
  client_->fit(xs, ys);
  return std::make_unique<RemotePredictor>(client_, stats, normalized.dim(), merged);
}

}  // namespace ssearch

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>

namespace ssearch {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Throws NonFiniteError if any entry is NaN or Inf.
void require_finite(const Vector& v, const char* what);

/// Fixed-capacity history of the most recent gradient snapshots, oldest first.
class GradientWindow {
 public:
  GradientWindow(std::size_t capacity, Index dim);

  /// Appends `g` as the newest snapshot, evicting the oldest when full.
  /// Throws DimensionError on a length mismatch and NonFiniteError on NaN/Inf.
  void push(const Vector& g);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return snapshots_.size(); }
  bool empty() const noexcept { return snapshots_.empty(); }
  bool full() const noexcept { return snapshots_.size() == capacity_; }
  Index dim() const noexcept { return dim_; }

  const Vector& operator[](std::size_t i) const { return snapshots_[i]; }
  const Vector& newest() const { return snapshots_.back(); }

  /// Snapshots as columns of a dim() x size() matrix, oldest first.
  Matrix matrix() const;

  void clear() { snapshots_.clear(); }

 private:
  std::size_t capacity_;
  Index dim_;
  std::deque<Vector> snapshots_;
};

/// Affine search manifold: theta = anchor + directions * z.
///
/// `directions` is D x r with orthonormal leading `rank` columns; columns past
/// `rank` are zero. Search coordinates live in R^rank.
struct SubspaceBasis {
  Matrix directions;
  Vector anchor;
  Index rank = 0;
  /// Singular values of the history matrix for the retained directions.
  Vector singular_values;

  Index ambient_dim() const noexcept { return directions.rows(); }
  Index requested_rank() const noexcept { return directions.cols(); }
  auto active() const { return directions.leftCols(rank); }
};

/// Relative cutoff for numerical rank: sigma_i > tol * sigma_max.
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Top-`r` left singular vectors of the window's matrix, anchored at `anchor`.
///
/// Computed from a thin factorization of the D x Q history (QR followed by a
/// Q x Q Jacobi SVD); no D x D product is ever formed. Each column is signed so
/// that its largest-magnitude entry is non-negative (lowest index on ties).
/// Throws DegenerateHistory if the window is empty or all zero.
SubspaceBasis build_basis(const GradientWindow& window, const Vector& anchor, Index r,
                          double rank_tolerance = kDefaultRankTolerance);

/// anchor + directions * z. `z` may have length rank() or requested_rank().
Vector lift(const SubspaceBasis& basis, const Vector& z);

}  // namespace ssearch

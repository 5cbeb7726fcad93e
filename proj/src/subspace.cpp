#include "ssearch/subspace.hpp"

#include "ssearch/error.hpp"

#include <cmath>
#include <string>

namespace ssearch {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteError(std::string(what) + " contains non-finite entries");
}

GradientWindow::GradientWindow(std::size_t capacity, Index dim) : capacity_(capacity), dim_(dim) {
  if (capacity == 0) throw Error("gradient window capacity must be at least 1");
  if (dim < 1) throw DimensionError("gradient window dimension must be at least 1");
}

void GradientWindow::push(const Vector& g) {
  if (g.size() != dim_) {
    throw DimensionError("gradient has length " + std::to_string(g.size()) + ", window expects " +
                         std::to_string(dim_));
  }
  require_finite(g, "gradient");
  if (snapshots_.size() == capacity_) snapshots_.pop_front();
  snapshots_.push_back(g);
}

Matrix GradientWindow::matrix() const {
  Matrix g(dim_, static_cast<Index>(snapshots_.size()));
  for (std::size_t j = 0; j < snapshots_.size(); ++j) g.col(static_cast<Index>(j)) = snapshots_[j];
  return g;
}

namespace {

void canonicalize_sign(Eigen::Ref<Vector> column) {
  Index pivot = 0;
  double best = -1.0;
  for (Index i = 0; i < column.size(); ++i) {
    const double a = std::abs(column[i]);
    if (a > best) {
      best = a;
      pivot = i;
    }
  }
  if (column[pivot] < 0.0) column = -column;
}

}  // namespace

SubspaceBasis build_basis(const GradientWindow& window, const Vector& anchor, Index r,
                          double rank_tolerance) {
  if (r < 1) throw Error("subspace rank must be at least 1");
  if (window.empty()) throw DegenerateHistory("degenerate gradient history: window is empty");
  if (anchor.size() != window.dim()) {
    throw DimensionError("anchor has length " + std::to_string(anchor.size()) + ", window expects " +
                         std::to_string(window.dim()));
  }
  require_finite(anchor, "anchor");

  const Matrix g = window.matrix();
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(g, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  if (sigma.size() == 0 || !(sigma[0] > 0.0)) {
    throw DegenerateHistory("degenerate gradient history: all snapshots are zero");
  }

  const double cutoff = sigma[0] * rank_tolerance;
  Index numerical_rank = 0;
  while (numerical_rank < sigma.size() && sigma[numerical_rank] > cutoff) ++numerical_rank;

  SubspaceBasis basis;
  basis.rank = std::min(r, numerical_rank);
  basis.anchor = anchor;
  basis.directions = Matrix::Zero(window.dim(), r);
  basis.directions.leftCols(basis.rank) = svd.matrixU().leftCols(basis.rank);
  for (Index j = 0; j < basis.rank; ++j) canonicalize_sign(basis.directions.col(j));
  basis.singular_values = sigma.head(basis.rank);
  return basis;
}

Vector lift(const SubspaceBasis& basis, const Vector& z) {
  require_finite(z, "subspace coordinate");
  if (z.size() == basis.rank) return basis.anchor + basis.active() * z;
  if (z.size() == basis.requested_rank()) return basis.anchor + basis.directions * z;
  throw DimensionError("subspace coordinate has length " + std::to_string(z.size()) +
                       ", basis has rank " + std::to_string(basis.rank));
}

}  // namespace ssearch

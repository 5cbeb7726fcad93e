#include "ssearch/objectives.hpp"

#include "ssearch/error.hpp"
#include "ssearch/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace ssearch {

Objective::Objective(double noise_std, double step_cost) : noise_std_(noise_std), step_cost_(step_cost) {
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw Error("noise_std must be finite and >= 0");
  if (!(step_cost > 0.0)) throw Error("step_cost must be positive");
}

Vector Objective::gradient(const Vector&) const {
  throw Error("objective '" + name() + "' does not provide gradients");
}

void Objective::check_input(const Vector& theta) const {
  if (theta.size() != dim()) {
    throw DimensionError("parameters have length " + std::to_string(theta.size()) + ", objective expects " +
                         std::to_string(dim()));
  }
  require_finite(theta, "parameters");
}

double Objective::evaluate(const Vector& theta, std::uint64_t eval_seed) const {
  check_input(theta);
  const double mean = value(theta);
  if (noise_std_ == 0.0) return mean;
  Rng rng(eval_seed);
  return mean + noise_std_ * rng.normal();
}

PlantedQuadratic::PlantedQuadratic(Matrix basis, Vector curvature, Vector optimum, double noise_std)
    : Objective(noise_std), basis_(std::move(basis)), curvature_(std::move(curvature)),
      optimum_(std::move(optimum)) {
  if (basis_.cols() != curvature_.size()) throw DimensionError("one curvature per basis direction required");
  if (optimum_.size() != basis_.rows()) throw DimensionError("optimum length must equal dimension");
  if ((curvature_.array() >= 0.0).any()) throw Error("planted quadratic curvatures must be negative");
}

double PlantedQuadratic::value(const Vector& theta) const {
  check_input(theta);
  const Vector proj = basis_.transpose() * (theta - optimum_);
  return (curvature_.array() * proj.array().square()).sum();
}

Vector PlantedQuadratic::gradient(const Vector& theta) const {
  check_input(theta);
  const Vector proj = basis_.transpose() * (theta - optimum_);
  return 2.0 * (basis_ * (curvature_.array() * proj.array()).matrix());
}

PlantedQuadratic make_planted_quadratic(Index dim, Index effective_dim, const std::vector<double>& spectrum,
                                        std::uint64_t seed, double noise_std) {
  if (dim < 1 || effective_dim < 1) throw DimensionError("planted quadratic needs D >= 1 and d_eff >= 1");
  if (effective_dim > dim) {
    throw DimensionError("effective dimension " + std::to_string(effective_dim) + " exceeds D = " +
                         std::to_string(dim));
  }
  Vector curvature(effective_dim);
  if (spectrum.size() == 1) {
    curvature.setConstant(spectrum.front());
  } else if (static_cast<Index>(spectrum.size()) == effective_dim) {
    for (Index i = 0; i < effective_dim; ++i) curvature[i] = spectrum[static_cast<std::size_t>(i)];
  } else {
    throw DimensionError("spectrum must have 1 or d_eff entries");
  }

  Rng rng(seed);
  Matrix gaussian(dim, effective_dim);
  for (Index j = 0; j < effective_dim; ++j)
    for (Index i = 0; i < dim; ++i) gaussian(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(gaussian);
  Matrix basis = qr.householderQ() * Matrix::Identity(dim, effective_dim);

  Vector optimum(dim);
  for (Index i = 0; i < dim; ++i) optimum[i] = rng.normal();
  optimum.normalize();
  return PlantedQuadratic(std::move(basis), std::move(curvature), std::move(optimum), noise_std);
}

LqrRollout::LqrRollout(Matrix dynamics, Matrix input, Matrix state_cost, Matrix action_cost, int horizon,
                       std::vector<Vector> initial_states, double noise_std)
    : Objective(noise_std), dynamics_(std::move(dynamics)), input_(std::move(input)),
      state_cost_(std::move(state_cost)), action_cost_(std::move(action_cost)), horizon_(horizon),
      initial_states_(std::move(initial_states)) {
  const Index nx = dynamics_.rows();
  const Index nu = input_.cols();
  if (dynamics_.cols() != nx || input_.rows() != nx) throw DimensionError("LQR: A must be n_x x n_x, B n_x x n_u");
  if (state_cost_.rows() != nx || state_cost_.cols() != nx) throw DimensionError("LQR: S must be n_x x n_x");
  if (action_cost_.rows() != nu || action_cost_.cols() != nu) throw DimensionError("LQR: R must be n_u x n_u");
  if (horizon_ < 1) throw Error("LQR: horizon must be at least 1");
  if (initial_states_.empty()) throw Error("LQR: at least one initial state required");
  for (const auto& x0 : initial_states_) {
    if (x0.size() != nx) throw DimensionError("LQR: initial state has wrong length");
  }
}

Matrix LqrRollout::gain(const Vector& theta) const {
  // Row-major n_u x n_x.
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      theta.data(), action_dim(), state_dim());
}

double LqrRollout::value(const Vector& theta) const {
  check_input(theta);
  const Matrix k = gain(theta);
  double total = 0.0;
  for (const auto& x0 : initial_states_) {
    Vector x = x0;
    for (int t = 0; t < horizon_; ++t) {
      const Vector u = k * x;
      total += x.dot(state_cost_ * x) + u.dot(action_cost_ * u);
      x = dynamics_ * x + input_ * u;
    }
  }
  return -total / static_cast<double>(initial_states_.size());
}

Vector LqrRollout::gradient(const Vector& theta) const {
  check_input(theta);
  const Matrix k = gain(theta);
  const Matrix closed_loop = dynamics_ + input_ * k;
  const Matrix s_sym = state_cost_ + state_cost_.transpose();
  const Matrix r_sym = action_cost_ + action_cost_.transpose();
  Matrix dcost = Matrix::Zero(action_dim(), state_dim());
  std::vector<Vector> xs(static_cast<std::size_t>(horizon_));
  for (const auto& x0 : initial_states_) {
    xs[0] = x0;
    for (int t = 1; t < horizon_; ++t) xs[t] = closed_loop * xs[t - 1];
    // adjoint = d(cost from t onward) / d x_t
    Vector adjoint = Vector::Zero(state_dim());
    for (int t = horizon_ - 1; t >= 0; --t) {
      const Vector& x = xs[static_cast<std::size_t>(t)];
      const Vector u_grad = r_sym * (k * x) + input_.transpose() * adjoint;
      dcost += u_grad * x.transpose();
      adjoint = s_sym * x + k.transpose() * (r_sym * (k * x)) + closed_loop.transpose() * adjoint;
    }
  }
  dcost /= static_cast<double>(initial_states_.size());
  Vector g(dim());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(g.data(), action_dim(),
                                                                                      state_dim()) = -dcost;
  return g;
}

LqrRollout make_lqr(const LqrSpec& spec) {
  if (spec.state_dim < 1 || spec.action_dim < 1) throw DimensionError("LQR dimensions must be >= 1");
  if (spec.initial_states < 1) throw Error("LQR needs at least one initial state");
  Rng rng(spec.seed);
  const Index nx = spec.state_dim;
  const Index nu = spec.action_dim;
  Matrix a(nx, nx);
  for (Index j = 0; j < nx; ++j)
    for (Index i = 0; i < nx; ++i) a(i, j) = rng.normal();
  const double radius = Eigen::EigenSolver<Matrix>(a, false).eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0.0) a *= spec.spectral_radius / radius;
  Matrix b(nx, nu);
  for (Index j = 0; j < nu; ++j)
    for (Index i = 0; i < nx; ++i) b(i, j) = rng.normal() / std::sqrt(static_cast<double>(nx));
  std::vector<Vector> starts;
  for (int s = 0; s < spec.initial_states; ++s) {
    Vector x0(nx);
    for (Index i = 0; i < nx; ++i) x0[i] = rng.normal();
    starts.push_back(std::move(x0));
  }
  return LqrRollout(std::move(a), std::move(b), Matrix::Identity(nx, nx), spec.action_weight * Matrix::Identity(nu, nu),
                    spec.horizon, std::move(starts), spec.noise_std);
}

ShiftedObjective::ShiftedObjective(std::shared_ptr<const Objective> inner, double offset)
    : Objective(inner ? inner->noise_std() : 0.0, inner ? inner->step_cost() : 1.0), inner_(std::move(inner)),
      offset_(offset) {
  if (!inner_) throw Error("shifted objective requires an inner objective");
  if (!std::isfinite(offset_)) throw NonFiniteError("objective offset must be finite");
}

}  // namespace ssearch

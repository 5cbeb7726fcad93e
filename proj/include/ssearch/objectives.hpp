#pragma once

#include "ssearch/subspace.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace ssearch {

/// A return to maximize. `evaluate` is the counted, possibly noisy "rollout";
/// `value` is the noiseless mean used by oracles and diagnostics.
class Objective {
 public:
  explicit Objective(double noise_std = 0.0, double step_cost = 1.0);
  virtual ~Objective() = default;

  virtual Index dim() const = 0;
  virtual double value(const Vector& theta) const = 0;
  virtual bool has_gradient() const { return false; }
  /// Throws Error when has_gradient() is false.
  virtual Vector gradient(const Vector& theta) const;
  virtual std::string name() const = 0;

  /// value(theta) plus N(0, noise_std^2) noise drawn from `eval_seed`.
  /// Deterministic in (theta, eval_seed). Rejects wrong lengths and NaN/Inf.
  double evaluate(const Vector& theta, std::uint64_t eval_seed) const;

  double noise_std() const noexcept { return noise_std_; }
  /// Environment steps represented by one evaluation.
  double step_cost() const noexcept { return step_cost_; }

 protected:
  void check_input(const Vector& theta) const;

 private:
  double noise_std_;
  double step_cost_;
};

/// J(theta) = sum_i lambda_i * ((theta - optimum) . b_i)^2 with orthonormal b_i
/// and lambda_i < 0: a concave bowl that only varies inside a hidden
/// d_eff-dimensional subspace of R^D. Maximum 0 at `optimum`.
class PlantedQuadratic final : public Objective {
 public:
  PlantedQuadratic(Matrix basis, Vector curvature, Vector optimum, double noise_std = 0.0);

  Index dim() const override { return basis_.rows(); }
  double value(const Vector& theta) const override;
  bool has_gradient() const override { return true; }
  Vector gradient(const Vector& theta) const override;
  std::string name() const override { return "planted_quadratic"; }

  const Matrix& basis() const noexcept { return basis_; }
  const Vector& curvature() const noexcept { return curvature_; }
  const Vector& optimum() const noexcept { return optimum_; }
  Index effective_dim() const noexcept { return basis_.cols(); }

 private:
  Matrix basis_;
  Vector curvature_;
  Vector optimum_;
};

/// Seeded instance: basis is an orthonormalized Gaussian D x d_eff matrix and
/// the optimum a Gaussian direction of unit norm. `spectrum` holds d_eff
/// negative curvatures, or a single value applied to every direction.
PlantedQuadratic make_planted_quadratic(Index dim, Index effective_dim, const std::vector<double>& spectrum,
                                        std::uint64_t seed, double noise_std = 0.0);

/// Finite-horizon linear system driven by a linear state-feedback policy.
///
/// theta is the n_u x n_x gain K in row-major order, u_t = K x_t,
/// x_{t+1} = A x_t + B u_t, and the return is
/// -sum_{t<H} (x_t' S x_t + u_t' R u_t), averaged over the initial states.
class LqrRollout final : public Objective {
 public:
  LqrRollout(Matrix dynamics, Matrix input, Matrix state_cost, Matrix action_cost, int horizon,
             std::vector<Vector> initial_states, double noise_std = 0.0);

  Index dim() const override { return input_.cols() * dynamics_.rows(); }
  double value(const Vector& theta) const override;
  bool has_gradient() const override { return true; }
  /// Exact gradient by backpropagation through the trajectory.
  Vector gradient(const Vector& theta) const override;
  std::string name() const override { return "lqr"; }

  Index state_dim() const noexcept { return dynamics_.rows(); }
  Index action_dim() const noexcept { return input_.cols(); }
  int horizon() const noexcept { return horizon_; }
  const Matrix& dynamics() const noexcept { return dynamics_; }

  /// Gain matrix encoded by theta.
  Matrix gain(const Vector& theta) const;

 private:
  Matrix dynamics_;
  Matrix input_;
  Matrix state_cost_;
  Matrix action_cost_;
  int horizon_;
  std::vector<Vector> initial_states_;
};

struct LqrSpec {
  Index state_dim = 6;
  Index action_dim = 3;
  int horizon = 50;
  int initial_states = 1;
  double spectral_radius = 0.95;
  double action_weight = 0.1;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
};

/// Random stable system: Gaussian A rescaled to `spectral_radius`, Gaussian B,
/// S = I, R = action_weight * I, initial states ~ N(0, I).
LqrRollout make_lqr(const LqrSpec& spec);

/// J(theta) + offset. Used to express returns relative to a reference point.
class ShiftedObjective final : public Objective {
 public:
  ShiftedObjective(std::shared_ptr<const Objective> inner, double offset);

  Index dim() const override { return inner_->dim(); }
  double value(const Vector& theta) const override { return inner_->value(theta) + offset_; }
  bool has_gradient() const override { return inner_->has_gradient(); }
  Vector gradient(const Vector& theta) const override { return inner_->gradient(theta); }
  std::string name() const override { return inner_->name(); }

  double offset() const noexcept { return offset_; }
  const Objective& inner() const noexcept { return *inner_; }

 private:
  std::shared_ptr<const Objective> inner_;
  double offset_;
};

}  // namespace ssearch

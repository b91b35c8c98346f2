#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "proxtr/inexact_prox.hpp"
#include "proxtr/trust_region.hpp"
#include "proxtr/weighted_space.hpp"

namespace proxtr::burgers {

/// Uniform mesh of [0, 1] with n intervals; the unknowns live on the n - 1
/// interior nodes.
struct Mesh1D {
  std::size_t n = 0;
  double h = 0.0;
  Vector nodes;

  static Mesh1D uniform(std::size_t intervals);
  std::size_t n_dof() const noexcept { return n - 1; }
  /// Coordinate of interior unknown i (node i + 1).
  double interior_node(std::size_t i) const { return nodes[i + 1]; }
};

/// -nu u'' + u u' = z + f on (0, 1), u(0) = u_left, u(1) = u_right, with
/// f = 2 (nu + x^3) and target w = -x^2.
struct BurgersConfig {
  double nu = 0.08;
  double alpha = 1e-4;
  double beta = 1e-2;
  double u_left = 0.0;
  double u_right = -1.0;

  double forcing(double x) const { return 2.0 * (nu + x * x * x); }
  double target(double x) const { return -x * x; }
  void validate() const;
};

/// General (nonsymmetric) tridiagonal matrix; lower[i] = A(i+1, i),
/// upper[i] = A(i, i+1).
struct Tridiagonal {
  Vector lower;
  Vector diag;
  Vector upper;

  std::size_t size() const noexcept { return diag.size(); }
  Vector apply(std::span<const double> v) const;
  Vector solve(std::span<const double> rhs) const;
  Vector solve_transposed(std::span<const double> rhs) const;
};

struct StateSolution {
  Vector u;
  std::size_t newton_iters = 0;
  std::size_t linear_solves = 0;
  double final_rel_residual = 0.0;
};

class NewtonNotConverged : public std::runtime_error {
 public:
  NewtonNotConverged(const char* why, StateSolution best);
  const StateSolution& best() const noexcept { return best_; }

 private:
  StateSolution best_;
};

/// Relative residual used by the "exact" solves: 1e-4 * sqrt(machine epsilon).
double exact_pde_tolerance();

/// Nodal interpolant of the target on the interior nodes.
Vector target_state(const Mesh1D& mesh, const BurgersConfig& config);

/// Discrete residual of the P1 weak form at interior state u and control z.
Vector state_residual(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u,
                      std::span<const double> z);

/// Derivative of state_residual with respect to u.
Tridiagonal state_jacobian(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u);

/// Damped Newton. Stops once ||R(u, z)||_2 <= rel_tol * ||R(0, z)||_2.
StateSolution newton_solve(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                           double rel_tol, std::span<const double> u0 = {});

/// (u - w)^T M (u - w) + (alpha / 2) z^T M z for a given state.
double objective_at_state(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                          std::span<const double> u);

struct ObjectiveValue {
  double value = 0.0;
  StateSolution state;
};

/// Smooth objective with the state solved to `pde_rel_tol`.
ObjectiveValue objective(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                         double pde_rel_tol);

/// Solves J^T lambda = -2 M (u - w).
Vector adjoint(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u);

struct GradientValue {
  Vector g;  ///< M-Riesz gradient alpha z - lambda
  Vector lambda;
  StateSolution state;
};

GradientValue gradient(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                       double pde_rel_tol);

/// Second-order adjoint Hessian-vector product at (z, u, lambda), M-Riesz
/// convention. Uses two tridiagonal solves.
Vector hessvec(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u,
               std::span<const double> lambda, std::span<const double> v);

/// Convenience overload: solves state and adjoint at z exactly first.
Vector hessvec(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
               std::span<const double> v);

enum class PdeMode { exact, adaptive };

struct LinearSolveCounts {
  std::size_t state = 0;  ///< Newton linear solves
  std::size_t adjoint = 0;
  std::size_t hessian = 0;
  std::size_t total() const noexcept { return state + adjoint + hessian; }
};

/// The control problem as a SmoothProblem over the interior nodal controls,
/// with M the consistent mass matrix, D its lumped diagonal and
/// phi = beta * sum_i d_i |z_i|.
class BurgersProblem final : public SmoothProblem {
 public:
  BurgersProblem(Mesh1D mesh, BurgersConfig config, PdeMode mode, std::uint64_t seed = 7);

  const WeightedSpace& space() const override { return space_; }
  const WeightedL1& phi() const override { return phi_; }

  Evaluation value(std::span<const double> z, double tol) override;
  GradientEvaluation gradient(std::span<const double> z, double tol) override;
  Vector hessvec(std::span<const double> z, std::span<const double> v) override;

  /// Fits the error constants c_val, c_grad at z by comparing solves at
  /// relative residual 1e-2 and 1e-10. Clears caches and counters.
  void calibrate(std::span<const double> z);

  /// PDE relative tolerance used for an objective (or gradient) tolerance.
  double pde_tolerance_for(double tol, double c) const;

  const Mesh1D& mesh() const noexcept { return mesh_; }
  const BurgersConfig& config() const noexcept { return config_; }
  PdeMode mode() const noexcept { return mode_; }
  double value_constant() const noexcept { return c_val_; }
  double gradient_constant() const noexcept { return c_grad_; }
  const LinearSolveCounts& linear_solves() const noexcept { return solves_; }
  /// Relative tolerances handed to every Newton solve since the last reset.
  const std::vector<double>& requested_pde_tolerances() const noexcept { return requested_; }
  void reset_counters();

  /// Smooth objective with an exact solve; does not touch counters or caches.
  double exact_value(std::span<const double> z) const;

 private:
  struct StateEntry {
    Vector z;
    Vector u;
    double rel = 0.0;
  };
  struct AdjointEntry {
    Vector z;
    Vector u;
    Vector lambda;
  };

  const StateEntry& ensure_state(std::span<const double> z, double rel_tol);

  Mesh1D mesh_;
  BurgersConfig config_;
  PdeMode mode_;
  WeightedSpace space_;
  WeightedL1 phi_;
  double c_val_ = 1.0;
  double c_grad_ = 1.0;
  std::vector<StateEntry> states_;  ///< most recent last
  std::optional<AdjointEntry> adjoint_;
  LinearSolveCounts solves_;
  std::vector<double> requested_;
};

/// Problem adapter calibrated at z = ones.
BurgersProblem make_problem(const Mesh1D& mesh, const BurgersConfig& config, PdeMode mode,
                            std::uint64_t seed = 7);

}  // namespace proxtr::burgers

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxtr/inexact_prox.hpp"
#include "proxtr/weighted_space.hpp"

namespace proxtr {

struct Evaluation {
  double value = 0.0;
  double error_bound = 0.0;  ///< |value - f(x)| <= error_bound
};

struct GradientEvaluation {
  Vector g;  ///< Riesz representer in the M inner product
  double error_bound = 0.0;  ///< ||g - grad f(x)||_M <= error_bound
};

/// Smooth part f of F = f + phi, evaluated to a requested accuracy.
/// Implementations may cache between calls and are not required to be
/// thread-safe.
class SmoothProblem {
 public:
  virtual ~SmoothProblem() = default;

  virtual const WeightedSpace& space() const = 0;
  virtual const WeightedL1& phi() const = 0;

  virtual Evaluation value(std::span<const double> x, double tol) = 0;
  virtual GradientEvaluation gradient(std::span<const double> x, double tol) = 0;
  /// Hessian (or model Hessian) at x applied to v, M-Riesz convention.
  virtual Vector hessvec(std::span<const double> x, std::span<const double> v) = 0;
};

struct TrConfig {
  double delta1 = 10.0;
  double eta1 = 0.05;
  double eta2 = 0.9;
  double gamma1 = 0.25;
  double gamma2 = 0.5;
  double gamma3 = 2.5;
  double kappa_rad = 1.0;
  double kappa_fcd = 1e-4;
  double kappa_dec = 0.5;
  double kappa_grad = 1.0;
  double kappa_obj = 1.0;
  double eta = 0.02;
  double zeta = 1.5;
  double theta_scale = 10.0;  ///< theta_k = theta_scale / k^2
  double r0 = 1.0;
  double gtol = 1e-8;
  std::size_t max_iter = 200;

  /// Sufficient model decrease along the Cauchy path:
  /// m(x + p) - m(x) <= mu_cauchy * Q(p).
  double mu_cauchy = 1e-4;
  std::size_t max_cauchy_halvings = 60;
  std::size_t refine_max_iters = 20;
  /// Refinement stops once ||s_{j+1} - s_j||_M / t <= refine_rtol * h_tilde.
  double refine_rtol = 1e-3;
  std::size_t gradient_max_rounds = 30;
  std::size_t prox_max_iters = kDefaultProxMaxIters;

  double theta(std::size_t k) const { return theta_scale / (static_cast<double>(k) * static_cast<double>(k)); }

  /// Throws std::invalid_argument if an ordering constraint is violated.
  void validate() const;
};

struct EvalCounts {
  std::size_t obj = 0;
  std::size_t grad = 0;
  std::size_t hess = 0;
  std::size_t prox = 0;
  std::size_t prox_iters = 0;  ///< sum of inner iterations over all prox calls

  double average_prox_iters() const {
    return prox == 0 ? 0.0 : static_cast<double>(prox_iters) / static_cast<double>(prox);
  }
};

struct IterateRecord {
  std::size_t k = 0;
  Vector x;  ///< iterate at the start of the iteration
  double delta_k = 0.0;
  double h_tilde = 0.0;
  double delta_prox = 0.0;
  double gradient_error = 0.0;
  double rho = 0.0;
  bool accepted = false;
  double pred = 0.0;
  double cred = 0.0;
  double omega = 0.0;
  double step_norm = 0.0;
  double cauchy_r = 0.0;
  double objective_tol = 0.0;
  bool fcd_holds = false;
  EvalCounts counts;  ///< cumulative at the end of the iteration
};

struct RunReport {
  std::vector<IterateRecord> records;
  bool converged = false;
  std::size_t iterations = 0;
  Vector x;
  double h_tilde = 0.0;
  EvalCounts counts;
  std::string message;
};

/// Thrown when an inner component cannot meet its accuracy contract.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// <g, u - x>_M + phi(u) - phi(x).
double q_tilde(const WeightedSpace& space, const WeightedL1& phi, std::span<const double> g,
               std::span<const double> x, std::span<const double> u);

/// Model m(x+s) - m(x) for the quadratic model with Hs = H s.
double model_change(const WeightedSpace& space, const WeightedL1& phi, std::span<const double> g,
                    std::span<const double> x, std::span<const double> s, std::span<const double> hs);

struct StationarityResult {
  double h_tilde = 0.0;
  Vector u;
  double delta_used = 0.0;
  double epsilon = 0.0;  ///< inner tolerance of the accepted solve
  double error_estimate = 0.0;  ///< computable bound on |h - h_tilde|
  bool underflow = false;  ///< epsilon hit the floor; only allowed when h_tilde <= gtol
  std::size_t solves = 0;
};

/// h_tilde = ||u - x||_M / r0 with u an inexact prox of x - r0 g. The inner
/// tolerance is tightened until prox_error_bound(step, alpha1) / r0 <=
/// kappa_grad * min(h_tilde, Delta).
StationarityResult stationarity(const SmoothProblem& problem, std::span<const double> x,
                                std::span<const double> g, double r0, double Delta, double kappa_grad,
                                double gtol, EvalCounts* counts = nullptr,
                                std::size_t prox_max_iters = kDefaultProxMaxIters);

struct GradientControlResult {
  Vector g;
  double gradient_error = 0.0;
  StationarityResult stat;
  std::vector<double> tolerances;  ///< requested gradient tolerance per round
};

/// Evaluates g and h_tilde together until
/// ||g - grad f||_M <= kappa_grad min(h_tilde, Delta) and the prox surrogate
/// bound holds. `initial_tol` <= 0 means start from kappa_grad * Delta.
GradientControlResult gradient_with_control(SmoothProblem& problem, std::span<const double> x, double Delta,
                                            const TrConfig& config, EvalCounts* counts = nullptr,
                                            double initial_tol = 0.0);

struct CauchyResult {
  Vector step;
  Vector hstep;  ///< H * step
  double r = 0.0;
  double q = 0.0;
  double omega = 0.0;
  double model_decrease = 0.0;  ///< m(x) - m(x + step)
  double delta_used = 0.0;
  std::size_t trials = 0;
};

/// Backtracking search along the inexact proximal gradient path. `eps_cap`
/// (if positive) caps the inner tolerance from above.
CauchyResult cauchy_point(SmoothProblem& problem, std::span<const double> x, std::span<const double> g,
                          double h_tilde, double Delta, double r_init, const TrConfig& config,
                          EvalCounts* counts = nullptr, double eps_cap = 0.0);

struct RefineResult {
  Vector step;
  Vector hstep;
  double model_decrease = 0.0;
  std::size_t iterations = 0;
  bool improved = false;  ///< false means the Cauchy step was returned
};

/// Spectral proximal gradient on the quadratic model inside the trust region,
/// started from the Cauchy step. Never returns a step with less model decrease
/// than the Cauchy step.
RefineResult subproblem_refine(SmoothProblem& problem, std::span<const double> x, std::span<const double> g,
                               const CauchyResult& cauchy, double h_tilde, double Delta,
                               const TrConfig& config, EvalCounts* counts = nullptr, double prox_eps = 0.0);

struct CredResult {
  double cred = 0.0;
  double tol_used = 0.0;  ///< per-point objective tolerance
  double f_x = 0.0;
  double f_plus = 0.0;
};

/// Per-point tolerance kappa_obj [eta min(pred, theta_k)]^zeta / 2.
double objective_tolerance(double pred, double theta_k, const TrConfig& config);

CredResult compute_cred(SmoothProblem& problem, std::span<const double> x, std::span<const double> x_plus,
                        double pred, double theta_k, const TrConfig& config, EvalCounts* counts = nullptr);

struct RadiusUpdate {
  bool accepted = false;
  double delta_next = 0.0;
};

RadiusUpdate accept_and_update(double rho, double Delta, const TrConfig& config);

/// Inexact proximal trust-region method for min f + phi started at x1.
RunReport solve(SmoothProblem& problem, const TrConfig& config, std::span<const double> x1);

/// One row per iteration.
void write_iterations_csv(const RunReport& report, std::ostream& os);

}  // namespace proxtr

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "proxtr/weighted_space.hpp"

namespace proxtr {

/// phi(z) = beta * sum_i w_i |z_i|.
class WeightedL1 {
 public:
  WeightedL1(Vector weights, double beta);

  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double beta() const noexcept { return beta_; }

 private:
  Vector weights_;
  double beta_;
};

double phi_eval(const WeightedL1& phi, std::span<const double> z);

/// Exact prox of r*phi under the diagonal metric d: componentwise soft
/// thresholding with threshold r * beta * w_i / d_i.
Vector prox_d(const WeightedL1& phi, std::span<const double> d, std::span<const double> x, double r);

struct ProxResult {
  Vector u;
  std::size_t iterations = 0;
  double last_step_a_norm = 0.0;
  double epsilon = 0.0;
  double delta_certified = 0.0;
};

/// Thrown when the weighted proximal gradient loop hits its cap. Carries the
/// last iterate so the caller can decide how to continue.
class ProxNotConverged : public std::runtime_error {
 public:
  ProxNotConverged(ProxResult best);
  const ProxResult& best() const noexcept { return best_; }

 private:
  ProxResult best_;
};

inline constexpr std::size_t kDefaultProxMaxIters = 10000;

/// Metric actually used by the inner solver: if alpha1 falls outside
/// (1/sqrt(2), sqrt(2)] the diagonal is rescaled by 1/alpha1. M is untouched,
/// so the M-metric prox being approximated does not change.
WeightedSpace prox_metric(const WeightedSpace& space);

/// Weighted proximal gradient: u_0 = Prox^D(x), then
/// u_{l+1} = Prox^D(u_l - D^{-1} M (u_l - x)) until ||u_l - u_{l+1}||_D <= epsilon.
/// Returns u_{l+1}; `iterations` is l at exit. The D-norm and the certified
/// delta refer to prox_metric(space).
ProxResult weighted_prox_gradient(const WeightedSpace& space, const WeightedL1& phi,
                                  std::span<const double> x, double r, double epsilon,
                                  std::size_t max_iters = kDefaultProxMaxIters);

/// Inner tolerance that certifies membership in the delta-prox set:
/// r * delta * sqrt(alpha1) / (1 + alpha2).
double epsilon_for_delta(double r, double delta, double alpha1, double alpha2);

/// The delta certified by a given inner tolerance (inverse of epsilon_for_delta).
double delta_for_epsilon(double r, double epsilon, double alpha1, double alpha2);

/// M-norm distance bound alpha1^{-1/2} (1 - alpha1^{-2}/2)^{-1} epsilon between
/// an exit iterate and the exact prox. Requires alpha1 in (1/sqrt(2), sqrt(2)].
double prox_error_bound(double epsilon, double alpha1);

struct DeltaProxCheck {
  bool holds = true;
  double worst_violation = 0.0;  ///< max over tested z of lhs - rhs
  std::size_t points_tested = 0;
};

/// Samples the delta-prox inequality
///   (1/2r)||u-x||_M^2 + phi(u) <= (1/2r)||z-x||_M^2 + phi(z) + delta ||z-u||_M
/// at a tight prox solve, x, 0, coordinate perturbations of u and random points.
DeltaProxCheck check_delta_prox(const WeightedSpace& space, const WeightedL1& phi,
                                std::span<const double> x, double r, double delta,
                                std::span<const double> u, std::size_t sample_count = 64,
                                std::uint64_t seed = 1);

/// Distance of M s, s = (1/r)(A - I)(u_prev - u) - (1/r)(u - x), from the
/// Euclidean subdifferential of phi at u (max over components). Zero when the
/// subgradient inclusion for consecutive inner iterates holds exactly.
double subgradient_certificate(const WeightedSpace& space, const WeightedL1& phi,
                               std::span<const double> x, double r,
                               std::span<const double> u_prev, std::span<const double> u);

}  // namespace proxtr

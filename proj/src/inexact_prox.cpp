#include "proxtr/inexact_prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace proxtr {

namespace {

std::string not_converged_message(const ProxResult& r) {
  std::ostringstream os;
  os << "weighted_prox_gradient: no convergence after " << r.iterations
     << " iterations (last step " << r.last_step_a_norm << ", epsilon " << r.epsilon << ")";
  return os.str();
}

// Objective of the M-metric prox problem.
double prox_objective(const WeightedSpace& space, const WeightedL1& phi, std::span<const double> x,
                      double r, std::span<const double> z) {
  Vector diff(z.begin(), z.end());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= x[i];
  return inner_m(space, diff, diff) / (2.0 * r) + phi_eval(phi, z);
}

double m_distance(const WeightedSpace& space, std::span<const double> a, std::span<const double> b) {
  Vector diff(a.begin(), a.end());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= b[i];
  return norm_m(space, diff);
}

}  // namespace

WeightedL1::WeightedL1(Vector weights, double beta) : weights_(std::move(weights)), beta_(beta) {
  if (!(beta_ >= 0.0) || !std::isfinite(beta_)) throw std::invalid_argument("WeightedL1: beta must be >= 0");
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("WeightedL1: weights must be >= 0");
  }
}

double phi_eval(const WeightedL1& phi, std::span<const double> z) {
  detail::check_size(z.size(), phi.size(), "phi_eval");
  const auto w = phi.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += w[i] * std::abs(z[i]);
  return phi.beta() * s;
}

Vector prox_d(const WeightedL1& phi, std::span<const double> d, std::span<const double> x, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("prox_d: stepsize must be positive");
  detail::check_size(d.size(), phi.size(), "prox_d");
  detail::check_size(x.size(), phi.size(), "prox_d");
  const auto w = phi.weights();
  Vector p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(d[i] > 0.0)) throw std::invalid_argument("prox_d: metric weights must be positive");
    const double t = r * phi.beta() * w[i] / d[i];
    const double mag = std::abs(x[i]) - t;
    p[i] = mag > 0.0 ? std::copysign(mag, x[i]) : 0.0;
  }
  return p;
}

ProxNotConverged::ProxNotConverged(ProxResult best)
    : std::runtime_error(not_converged_message(best)), best_(std::move(best)) {}

WeightedSpace prox_metric(const WeightedSpace& space) {
  const double a1 = space.alpha1();
  if (a1 > 1.0 / std::sqrt(2.0) && a1 <= std::sqrt(2.0)) return space;
  return space.with_scaled_diagonal(1.0 / a1);
}

ProxResult weighted_prox_gradient(const WeightedSpace& space, const WeightedL1& phi,
                                  std::span<const double> x, double r, double epsilon,
                                  std::size_t max_iters) {
  if (!(r > 0.0)) throw std::invalid_argument("weighted_prox_gradient: stepsize must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("weighted_prox_gradient: epsilon must be positive");
  detail::check_size(x.size(), space.size(), "weighted_prox_gradient");

  const WeightedSpace metric = prox_metric(space);
  const auto d = metric.d();
  const std::size_t n = x.size();

  ProxResult res;
  res.epsilon = epsilon;
  res.delta_certified = delta_for_epsilon(r, epsilon, metric.alpha1(), metric.alpha2());

  Vector u = prox_d(phi, d, x, r);
  Vector residual(n);
  Vector step(n);
  for (std::size_t l = 0;; ++l) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = u[i] - x[i];
    Vector forward = apply_a_inverse(metric, residual);
    for (std::size_t i = 0; i < n; ++i) forward[i] = u[i] - forward[i];
    Vector u_next = prox_d(phi, d, forward, r);
    for (std::size_t i = 0; i < n; ++i) step[i] = u[i] - u_next[i];

    res.iterations = l;
    res.last_step_a_norm = norm_d(metric, step);
    u = std::move(u_next);
    if (res.last_step_a_norm <= epsilon) break;
    if (l >= max_iters) {
      res.u = std::move(u);
      throw ProxNotConverged(std::move(res));
    }
  }
  res.u = std::move(u);
  return res;
}

double epsilon_for_delta(double r, double delta, double alpha1, double alpha2) {
  if (!(r > 0.0)) throw std::invalid_argument("epsilon_for_delta: r must be positive");
  if (!(delta >= 0.0)) throw std::invalid_argument("epsilon_for_delta: delta must be nonnegative");
  if (!(alpha1 > 0.0) || !(alpha1 <= alpha2)) {
    throw std::invalid_argument("epsilon_for_delta: need 0 < alpha1 <= alpha2");
  }
  return r * delta * std::sqrt(alpha1) / (1.0 + alpha2);
}

double delta_for_epsilon(double r, double epsilon, double alpha1, double alpha2) {
  if (!(r > 0.0)) throw std::invalid_argument("delta_for_epsilon: r must be positive");
  if (!(alpha1 > 0.0) || !(alpha1 <= alpha2)) {
    throw std::invalid_argument("delta_for_epsilon: need 0 < alpha1 <= alpha2");
  }
  return epsilon * (1.0 + alpha2) / (r * std::sqrt(alpha1));
}

double prox_error_bound(double epsilon, double alpha1) {
  if (!(alpha1 > 1.0 / std::sqrt(2.0)) || !(alpha1 <= std::sqrt(2.0))) {
    throw std::invalid_argument("prox_error_bound: alpha1 must lie in (1/sqrt(2), sqrt(2)]");
  }
  return epsilon / (std::sqrt(alpha1) * (1.0 - 0.5 / (alpha1 * alpha1)));
}

DeltaProxCheck check_delta_prox(const WeightedSpace& space, const WeightedL1& phi,
                                std::span<const double> x, double r, double delta,
                                std::span<const double> u, std::size_t sample_count,
                                std::uint64_t seed) {
  const std::size_t n = space.size();
  detail::check_size(x.size(), n, "check_delta_prox");
  detail::check_size(u.size(), n, "check_delta_prox");

  const double lhs = prox_objective(space, phi, x, r, u);
  const double slack = 1e-12 * std::max(1.0, std::abs(lhs));

  DeltaProxCheck out;
  out.worst_violation = -std::numeric_limits<double>::infinity();
  auto test = [&](std::span<const double> z) {
    const double rhs = prox_objective(space, phi, x, r, z) + delta * m_distance(space, z, u);
    const double v = lhs - rhs;
    out.worst_violation = std::max(out.worst_violation, v);
    if (v > slack) out.holds = false;
    ++out.points_tested;
  };

  Vector tight;
  try {
    tight = weighted_prox_gradient(space, phi, x, r, 1e-14, 100000).u;
  } catch (const ProxNotConverged& e) {
    tight = e.best().u;
  }
  test(tight);
  test(x);
  test(Vector(n, 0.0));

  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, std::abs(u[i]), std::abs(x[i])});
  scale = std::max(scale, 1e-3);
  Vector z(u.begin(), u.end());
  for (double eps : {1e-1 * scale, 1e-4 * scale, 1e-8 * scale}) {
    for (std::size_t i = 0; i < n; ++i) {
      for (double sign : {1.0, -1.0}) {
        z[i] = u[i] + sign * eps;
        test(z);
        z[i] = u[i];
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t s = 0; s < sample_count; ++s) {
    // Alternate between points near u and points on the scale of the data.
    const double radius = (s % 2 == 0) ? 1e-3 * scale : scale;
    for (std::size_t i = 0; i < n; ++i) z[i] = u[i] + radius * normal(rng);
    test(z);
  }
  return out;
}

double subgradient_certificate(const WeightedSpace& space, const WeightedL1& phi,
                               std::span<const double> x, double r,
                               std::span<const double> u_prev, std::span<const double> u) {
  const std::size_t n = space.size();
  detail::check_size(x.size(), n, "subgradient_certificate");
  detail::check_size(u_prev.size(), n, "subgradient_certificate");
  detail::check_size(u.size(), n, "subgradient_certificate");
  if (!(r > 0.0)) throw std::invalid_argument("subgradient_certificate: r must be positive");

  // M s = (1/r) [ (D - M)(u_prev - u) - M (u - x) ]
  Vector diff(n), ux(n);
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = u_prev[i] - u[i];
    ux[i] = u[i] - x[i];
  }
  const Vector m_diff = proxtr::apply(space.m(), diff);
  const Vector m_ux = proxtr::apply(space.m(), ux);
  const WeightedSpace metric = prox_metric(space);
  const auto d = metric.d();
  const auto w = phi.weights();

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = (d[i] * diff[i] - m_diff[i] - m_ux[i]) / r;
    const double bound = phi.beta() * w[i];
    double dist;
    if (u[i] > 0.0) {
      dist = std::abs(s - bound);
    } else if (u[i] < 0.0) {
      dist = std::abs(s + bound);
    } else {
      dist = std::max(0.0, std::abs(s) - bound);
    }
    worst = std::max(worst, dist);
  }
  return worst;
}

}  // namespace proxtr

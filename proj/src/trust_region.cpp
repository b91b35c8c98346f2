#include "proxtr/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace proxtr {

namespace {

constexpr double kEpsilonFloor = 1e-15;
// Relative slack for comparisons that hold with equality in exact arithmetic.
constexpr double kRoundoffSlack = 1e-12;
// Reductions within this many ulps of |F| are indistinguishable from noise.
constexpr double kNoiseUlps = 10.0;

// phi(u) - phi(x) summed per component. Where the sign does not change the
// difference is sign * (u_i - x_i), so tiny steps are not lost to cancellation.
double phi_change(const WeightedL1& phi, std::span<const double> x, std::span<const double> u) {
  detail::check_size(x.size(), phi.size(), "phi_change");
  detail::check_size(u.size(), phi.size(), "phi_change");
  const auto w = phi.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double diff;
    if (x[i] > 0.0 && u[i] >= 0.0) {
      diff = u[i] - x[i];
    } else if (x[i] < 0.0 && u[i] <= 0.0) {
      diff = x[i] - u[i];
    } else {
      diff = std::abs(u[i]) - std::abs(x[i]);
    }
    s += w[i] * diff;
  }
  return phi.beta() * s;
}

bool sufficient_decrease(double q, double kappa_dec, double r, double p_norm) {
  const double bound = kappa_dec / r * p_norm * p_norm;
  return q <= -bound + kRoundoffSlack * (std::abs(q) + bound);
}

Vector add(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Vector sub(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

// a - t * b
Vector axpy(std::span<const double> a, double t, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= t * b[i];
  return out;
}

void scale(Vector& v, double t) {
  for (double& vi : v) vi *= t;
}

ProxResult counted_prox(const SmoothProblem& problem, std::span<const double> y, double r, double eps,
                        std::size_t max_iters, EvalCounts* counts) {
  ProxResult res = weighted_prox_gradient(problem.space(), problem.phi(), y, r, eps, max_iters);
  if (counts != nullptr) {
    ++counts->prox;
    counts->prox_iters += res.iterations;
  }
  return res;
}

Vector counted_hessvec(SmoothProblem& problem, std::span<const double> x, std::span<const double> v,
                       EvalCounts* counts) {
  if (counts != nullptr) ++counts->hess;
  return problem.hessvec(x, v);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("TrConfig: ") + what);
}

}  // namespace

void TrConfig::validate() const {
  require(delta1 > 0.0, "delta1 must be positive");
  require(0.0 < eta1 && eta1 < eta2 && eta2 < 1.0, "need 0 < eta1 < eta2 < 1");
  require(0.0 < gamma1 && gamma1 <= gamma2 && gamma2 <= 1.0 && 1.0 <= gamma3,
          "need 0 < gamma1 <= gamma2 <= 1 <= gamma3");
  require(kappa_rad > 0.0 && kappa_fcd > 0.0 && kappa_dec > 0.0 && kappa_grad > 0.0 && kappa_obj > 0.0,
          "kappa constants must be positive");
  require(zeta > 1.0, "zeta must exceed 1");
  require(eta > 0.0 && eta < std::min(eta1, 1.0 - eta2), "need 0 < eta < min(eta1, 1 - eta2)");
  require(theta_scale > 0.0, "theta_scale must be positive");
  require(r0 > 0.0, "r0 must be positive");
  require(gtol >= 0.0, "gtol must be nonnegative");
  require(mu_cauchy > 0.0 && mu_cauchy < 1.0, "mu_cauchy must lie in (0, 1)");
  require(refine_rtol >= 0.0, "refine_rtol must be nonnegative");
}

double q_tilde(const WeightedSpace& space, const WeightedL1& phi, std::span<const double> g,
               std::span<const double> x, std::span<const double> u) {
  const Vector p = sub(u, x);
  return inner_m(space, g, p) + phi_change(phi, x, u);
}

double model_change(const WeightedSpace& space, const WeightedL1& phi, std::span<const double> g,
                    std::span<const double> x, std::span<const double> s, std::span<const double> hs) {
  const Vector xs = add(x, s);
  return inner_m(space, g, s) + 0.5 * inner_m(space, hs, s) + phi_change(phi, x, xs);
}

StationarityResult stationarity(const SmoothProblem& problem, std::span<const double> x,
                                std::span<const double> g, double r0, double Delta, double kappa_grad,
                                double gtol, EvalCounts* counts, std::size_t prox_max_iters) {
  if (!(r0 > 0.0)) throw std::invalid_argument("stationarity: r0 must be positive");
  if (!(Delta > 0.0)) throw std::invalid_argument("stationarity: Delta must be positive");
  const WeightedSpace& space = problem.space();
  const double alpha1 = prox_metric(space).alpha1();
  // prox_error_bound is linear in epsilon.
  const double bound_per_eps = prox_error_bound(1.0, alpha1);

  const Vector y = axpy(x, r0, g);
  StationarityResult out;
  double eps = std::max(kEpsilonFloor, kappa_grad * Delta * r0 / bound_per_eps);
  for (;;) {
    ProxResult res = counted_prox(problem, y, r0, eps, prox_max_iters, counts);
    ++out.solves;
    out.u = std::move(res.u);
    out.h_tilde = norm_m(space, sub(out.u, x)) / r0;
    out.epsilon = eps;
    out.delta_used = res.delta_certified;
    out.error_estimate = bound_per_eps * res.last_step_a_norm / r0;

    const double target = kappa_grad * std::min(out.h_tilde, Delta);
    if (out.error_estimate <= target) return out;

    const double eps_next = std::min(0.5 * eps, 0.5 * target * r0 / bound_per_eps);
    if (eps_next < kEpsilonFloor) {
      if (out.h_tilde <= gtol) {
        out.underflow = true;
        return out;
      }
      std::ostringstream os;
      os << "stationarity: inner tolerance underflow with h_tilde = " << out.h_tilde
         << " and error estimate " << out.error_estimate;
      throw SolverError(os.str());
    }
    eps = eps_next;
  }
}

GradientControlResult gradient_with_control(SmoothProblem& problem, std::span<const double> x, double Delta,
                                            const TrConfig& config, EvalCounts* counts, double initial_tol) {
  if (!(Delta > 0.0)) throw std::invalid_argument("gradient_with_control: Delta must be positive");
  GradientControlResult out;
  double tol = initial_tol > 0.0 ? initial_tol : config.kappa_grad * Delta;
  for (std::size_t round = 0; round < config.gradient_max_rounds; ++round) {
    out.tolerances.push_back(tol);
    GradientEvaluation ge = problem.gradient(x, tol);
    if (counts != nullptr) ++counts->grad;
    out.g = std::move(ge.g);
    out.gradient_error = ge.error_bound;
    out.stat = stationarity(problem, x, out.g, config.r0, Delta, config.kappa_grad, config.gtol, counts,
                            config.prox_max_iters);
    const double target = config.kappa_grad * std::min(out.stat.h_tilde, Delta);
    if (out.gradient_error <= target || out.stat.h_tilde == 0.0) return out;
    tol = 0.5 * target;
  }
  if (out.stat.h_tilde <= config.gtol) return out;
  throw SolverError("gradient_with_control: gradient accuracy loop did not settle");
}

CauchyResult cauchy_point(SmoothProblem& problem, std::span<const double> x, std::span<const double> g,
                          double h_tilde, double Delta, double r_init, const TrConfig& config,
                          EvalCounts* counts, double eps_cap) {
  if (!(h_tilde > 0.0)) throw std::invalid_argument("cauchy_point: requires h_tilde > 0");
  if (!(r_init > 0.0)) throw std::invalid_argument("cauchy_point: r_init must be positive");
  const WeightedSpace& space = problem.space();
  const WeightedL1& phi = problem.phi();
  const WeightedSpace metric = prox_metric(space);
  const double a1 = metric.alpha1();
  const double a2 = metric.alpha2();

  auto tolerance_for = [&](double r, double p_norm) {
    const double delta = config.kappa_dec * p_norm / (4.0 * r);
    double eps = epsilon_for_delta(r, delta, a1, a2);
    if (eps_cap > 0.0) eps = std::min(eps, eps_cap);
    return std::max(eps, kEpsilonFloor);
  };

  CauchyResult out;
  double r = r_init;
  for (std::size_t trial = 0; trial <= config.max_cauchy_halvings; ++trial, r *= 0.5) {
    out.trials = trial + 1;
    const Vector y = axpy(x, r, g);
    double eps = tolerance_for(r, r * h_tilde);
    ProxResult res = counted_prox(problem, y, r, eps, config.prox_max_iters, counts);
    Vector p = sub(res.u, x);
    double p_norm = norm_m(space, p);
    double q = q_tilde(space, phi, g, x, res.u);
    bool decrease = sufficient_decrease(q, config.kappa_dec, r, p_norm);
    if (!decrease && p_norm > 0.0) {
      // One tightening pass with the tolerance implied by the realized step.
      const double eps_needed = tolerance_for(r, p_norm);
      if (eps_needed < eps) {
        res = counted_prox(problem, y, r, eps_needed, config.prox_max_iters, counts);
        p = sub(res.u, x);
        p_norm = norm_m(space, p);
        q = q_tilde(space, phi, g, x, res.u);
        decrease = sufficient_decrease(q, config.kappa_dec, r, p_norm);
      }
    }
    if (p_norm == 0.0 || !decrease || p_norm > config.kappa_rad * Delta) continue;

    Vector hp = counted_hessvec(problem, x, p, counts);
    const double curv = inner_m(space, hp, p);
    const double change = q + 0.5 * curv;
    if (change > config.mu_cauchy * q) continue;

    out.step = std::move(p);
    out.hstep = std::move(hp);
    out.r = r;
    out.q = q;
    out.omega = std::abs(curv) / (p_norm * p_norm);
    out.model_decrease = -change;
    out.delta_used = res.delta_certified;
    return out;
  }
  std::ostringstream os;
  os << "cauchy_point: no acceptable proximal gradient step after " << config.max_cauchy_halvings
     << " halvings (h_tilde = " << h_tilde << ", Delta = " << Delta << ")";
  throw SolverError(os.str());
}

RefineResult subproblem_refine(SmoothProblem& problem, std::span<const double> x, std::span<const double> g,
                               const CauchyResult& cauchy, double h_tilde, double Delta,
                               const TrConfig& config, EvalCounts* counts, double prox_eps) {
  const WeightedSpace& space = problem.space();
  const WeightedL1& phi = problem.phi();

  RefineResult best;
  best.step = cauchy.step;
  best.hstep = cauchy.hstep;
  best.model_decrease = cauchy.model_decrease;
  if (config.refine_max_iters == 0) return best;

  const double radius = config.kappa_rad * Delta;
  constexpr double kMinStep = 1e-12;
  constexpr double kMaxStep = 1e12;

  Vector s = cauchy.step;
  Vector hs = cauchy.hstep;
  double t = cauchy.r > 0.0 ? cauchy.r : config.r0;
  for (std::size_t j = 0; j < config.refine_max_iters; ++j) {
    best.iterations = j + 1;
    const Vector model_grad = add(g, hs);
    const Vector y = axpy(add(x, s), t, model_grad);
    const double eps = prox_eps > 0.0 ? prox_eps : std::max(kEpsilonFloor, 1e-3 * h_tilde * t);
    ProxResult res = counted_prox(problem, y, t, eps, config.prox_max_iters, counts);
    Vector s_next = sub(res.u, x);
    const double s_norm = norm_m(space, s_next);
    if (s_norm > radius) scale(s_next, radius / s_norm);

    Vector hs_next = counted_hessvec(problem, x, s_next, counts);
    const double decrease = -model_change(space, phi, g, x, s_next, hs_next);
    if (decrease > best.model_decrease) {
      best.step = s_next;
      best.hstep = hs_next;
      best.model_decrease = decrease;
      best.improved = true;
    }

    const Vector ds = sub(s_next, s);
    const Vector dy = sub(hs_next, hs);
    const double ss = inner_m(space, ds, ds);
    const double sy = inner_m(space, ds, dy);
    const double t_used = t;
    s = std::move(s_next);
    hs = std::move(hs_next);
    if (std::sqrt(ss) / t_used <= config.refine_rtol * h_tilde) break;
    t = sy > 0.0 ? std::clamp(ss / sy, kMinStep, kMaxStep) : kMaxStep;
  }
  return best;
}

double objective_tolerance(double pred, double theta_k, const TrConfig& config) {
  return config.kappa_obj * std::pow(config.eta * std::min(pred, theta_k), config.zeta) / 2.0;
}

CredResult compute_cred(SmoothProblem& problem, std::span<const double> x, std::span<const double> x_plus,
                        double pred, double theta_k, const TrConfig& config, EvalCounts* counts) {
  if (!(pred > 0.0)) throw std::invalid_argument("compute_cred: pred must be positive");
  if (!(theta_k > 0.0)) throw std::invalid_argument("compute_cred: theta_k must be positive");
  CredResult out;
  out.tol_used = objective_tolerance(pred, theta_k, config);
  const Evaluation fx = problem.value(x, out.tol_used);
  const Evaluation fp = problem.value(x_plus, out.tol_used);
  if (counts != nullptr) counts->obj += 2;
  const WeightedL1& phi = problem.phi();
  out.f_x = fx.value + phi_eval(phi, x);
  out.f_plus = fp.value + phi_eval(phi, x_plus);
  out.cred = out.f_x - out.f_plus;
  return out;
}

RadiusUpdate accept_and_update(double rho, double Delta, const TrConfig& config) {
  if (!(Delta > 0.0)) throw std::invalid_argument("accept_and_update: Delta must be positive");
  if (rho < config.eta1) return {false, config.gamma1 * Delta};
  if (rho < config.eta2) return {true, Delta};
  return {true, config.gamma3 * Delta};
}

RunReport solve(SmoothProblem& problem, const TrConfig& config, std::span<const double> x1) {
  config.validate();
  const WeightedSpace& space = problem.space();
  detail::check_size(x1.size(), space.size(), "solve");

  RunReport report;
  Vector x(x1.begin(), x1.end());
  double Delta = config.delta1;
  EvalCounts& counts = report.counts;

  GradientControlResult gc;
  bool have_gradient = false;
  for (std::size_t k = 1;; ++k) {
    try {
      if (have_gradient) {
        // Rejected step: x is unchanged, re-tighten only if the smaller radius demands it.
        const double target = config.kappa_grad * std::min(gc.stat.h_tilde, Delta);
        if (gc.gradient_error > target || gc.stat.error_estimate > target) {
          gc = gradient_with_control(problem, x, Delta, config, &counts, std::min(target, gc.gradient_error));
        }
      } else {
        gc = gradient_with_control(problem, x, Delta, config, &counts);
        have_gradient = true;
      }
      report.h_tilde = gc.stat.h_tilde;
      if (gc.stat.h_tilde <= config.gtol) {
        report.converged = true;
        break;
      }
      if (k > config.max_iter) {
        report.message = "iteration limit reached";
        break;
      }

      IterateRecord rec;
      rec.k = k;
      rec.x = x;
      rec.delta_k = Delta;
      rec.h_tilde = gc.stat.h_tilde;
      rec.delta_prox = gc.stat.delta_used;
      rec.gradient_error = gc.gradient_error;

      const CauchyResult cp =
          cauchy_point(problem, x, gc.g, gc.stat.h_tilde, Delta, config.r0, config, &counts, gc.stat.epsilon);
      const RefineResult step =
          subproblem_refine(problem, x, gc.g, cp, gc.stat.h_tilde, Delta, config, &counts, gc.stat.epsilon);
      const Vector x_plus = add(x, step.step);

      rec.pred = step.model_decrease;
      rec.cauchy_r = cp.r;
      rec.step_norm = norm_m(space, step.step);
      rec.omega = rec.step_norm > 0.0 ? std::abs(inner_m(space, step.hstep, step.step)) /
                                            (rec.step_norm * rec.step_norm)
                                      : 0.0;
      rec.fcd_holds = rec.step_norm <= config.kappa_rad * Delta * (1.0 + 1e-12) &&
                      rec.pred >= config.kappa_fcd * rec.h_tilde *
                                      std::min(rec.h_tilde / (1.0 + rec.omega), Delta);

      const CredResult cr = compute_cred(problem, x, x_plus, rec.pred, config.theta(k), config, &counts);
      rec.cred = cr.cred;
      rec.objective_tol = cr.tol_used;
      rec.rho = cr.cred / rec.pred;
      const double noise = kNoiseUlps * std::numeric_limits<double>::epsilon() *
                           std::max({1.0, std::abs(cr.f_x), std::abs(cr.f_plus)});
      if (std::abs(cr.cred - rec.pred) <= noise) rec.rho = 1.0;

      const RadiusUpdate upd = accept_and_update(rec.rho, Delta, config);
      rec.accepted = upd.accepted;
      if (upd.accepted) {
        x = x_plus;
        have_gradient = false;
      }
      Delta = upd.delta_next;
      rec.counts = counts;
      report.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "iteration " << k << ": " << e.what();
      throw SolverError(os.str());
    }
  }
  report.iterations = report.records.size();
  report.x = std::move(x);
  if (report.converged) report.message = "converged";
  return report;
}

void write_iterations_csv(const RunReport& report, std::ostream& os) {
  os << "k,h_tilde,delta_k,rho,accepted,pred,cred,omega,delta_prox,obj,grad,hess,prox,prox_iters\n";
  const auto old_precision = os.precision(17);
  for (const IterateRecord& r : report.records) {
    os << r.k << ',' << r.h_tilde << ',' << r.delta_k << ',' << r.rho << ',' << (r.accepted ? 1 : 0) << ','
       << r.pred << ',' << r.cred << ',' << r.omega << ',' << r.delta_prox << ',' << r.counts.obj << ','
       << r.counts.grad << ',' << r.counts.hess << ',' << r.counts.prox << ',' << r.counts.prox_iters << '\n';
  }
  os.precision(old_precision);
}

}  // namespace proxtr

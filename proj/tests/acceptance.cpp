// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "oracles.hpp"
#include "proxtr/bench.hpp"
#include "proxtr/burgers.hpp"
#include "proxtr/inexact_prox.hpp"
#include "proxtr/trust_region.hpp"
#include "quadratic_problem.hpp"

using namespace proxtr;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

Vector axpy(std::span<const double> x, double t, std::span<const double> v) {
  Vector out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += t * v[i];
  return out;
}

Vector minus(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_nodal_error(std::size_t n) {
  const burgers::Mesh1D mesh = burgers::Mesh1D::uniform(n);
  const burgers::BurgersConfig cfg;
  const auto s = burgers::newton_solve(mesh, cfg, Vector(mesh.n_dof(), 0.0), burgers::exact_pde_tolerance());
  double e = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i) e = std::max(e, std::abs(s.u[i] + std::pow(mesh.interior_node(i), 2)));
  return e;
}

Outcome manufactured_solution() {
  Outcome o;
  const double e512 = max_nodal_error(512);
  o.ok = e512 <= 1e-4;
  double prev = 0.0, worst_rate = std::numeric_limits<double>::infinity();
  for (std::size_t n : {32u, 64u, 128u, 256u}) {
    const double e = max_nodal_error(n);
    if (prev > 0.0) worst_rate = std::min(worst_rate, std::log2(prev / e));
    prev = e;
  }
  o.ok = o.ok && worst_rate >= 1.8;
  o.detail = fmt("max error %.3e at n=512", e512) + fmt(", min observed order %.3f", worst_rate);
  return o;
}

Outcome adjoint_correctness() {
  Outcome o;
  const burgers::BurgersConfig cfg;
  const burgers::Mesh1D mesh = burgers::Mesh1D::uniform(64);
  const std::size_t n = mesh.n_dof();
  const TridiagMatrix m = assemble_mass(n, mesh.h);
  const WeightedSpace space(m, lump(m), 1.0, 3.0);
  const double tol = burgers::exact_pde_tolerance();
  std::mt19937_64 rng(2024);
  const Vector z = oracle::random_vector(n, rng);
  const auto gv = burgers::gradient(mesh, cfg, z, tol);
  double grad_err = 0.0, hess_err = 0.0, sym_err = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector v = oracle::random_vector(n, rng);
    const Vector w = oracle::random_vector(n, rng);
    const double t = 1e-5;
    const double fd = (burgers::objective(mesh, cfg, axpy(z, t, v), tol).value -
                       burgers::objective(mesh, cfg, axpy(z, -t, v), tol).value) /
                      (2.0 * t);
    const double an = inner_m(space, gv.g, v);
    grad_err = std::max(grad_err, std::abs(fd - an) / std::abs(an));

    const Vector gp = burgers::gradient(mesh, cfg, axpy(z, t, v), tol).g;
    const Vector gm = burgers::gradient(mesh, cfg, axpy(z, -t, v), tol).g;
    Vector hfd(n);
    for (std::size_t i = 0; i < n; ++i) hfd[i] = (gp[i] - gm[i]) / (2.0 * t);
    const Vector hv = burgers::hessvec(mesh, cfg, gv.state.u, gv.lambda, v);
    const Vector hw = burgers::hessvec(mesh, cfg, gv.state.u, gv.lambda, w);
    hess_err = std::max(hess_err, norm_m(space, minus(hv, hfd)) / norm_m(space, hv));
    const double a = inner_m(space, hv, w), b = inner_m(space, v, hw);
    sym_err = std::max(sym_err, std::abs(a - b) / std::max(std::abs(a), 1e-300));
  }
  o.ok = grad_err <= 1e-5 && hess_err <= 1e-4 && sym_err <= 1e-8;
  o.detail = fmt("gradient rel err %.2e", grad_err) + fmt(", hessvec rel err %.2e", hess_err) +
             fmt(", symmetry %.2e", sym_err);
  return o;
}

Outcome prox_certification() {
  Outcome o;
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<std::size_t> nd(1, 8);
  std::uniform_real_distribution<double> logr(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> logdelta(std::log(1e-4), std::log(1e-1));
  std::uniform_real_distribution<double> betad(0.05, 1.0);
  std::size_t delta_failures = 0, bound_failures = 0;
  double worst = -std::numeric_limits<double>::infinity();
  double worst_ratio = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = nd(rng);
    TridiagMatrix m = oracle::random_lumpable(n, rng);
    Vector d = lump(m);
    const WeightedL1 phi(d, betad(rng));
    const WeightedSpace space = WeightedSpace::with_estimated_bounds(std::move(m), std::move(d));
    const Vector x = oracle::random_vector(n, rng, 3.0);
    const double r = std::exp(logr(rng));
    const double delta = std::exp(logdelta(rng));
    const double eps = epsilon_for_delta(r, delta, space.alpha1(), space.alpha2());
    const ProxResult res = weighted_prox_gradient(space, phi, x, r, eps);

    const DeltaProxCheck chk = check_delta_prox(space, phi, x, r, delta, res.u, 64, 1000 + t);
    worst = std::max(worst, chk.worst_violation);
    if (chk.worst_violation > 1e-12) ++delta_failures;

    const Vector ref = oracle::m_prox(space.m(), phi.weights(), phi.beta(), x, r);
    const double dist = norm_m(space, minus(res.u, ref));
    const double bound = prox_error_bound(eps, prox_metric(space).alpha1());
    worst_ratio = std::max(worst_ratio, dist / bound);
    if (dist > bound + 1e-12) ++bound_failures;
  }
  o.ok = delta_failures == 0 && bound_failures == 0;
  o.detail = "delta-prox violations " + std::to_string(delta_failures) + fmt(" (worst %.2e)", worst) +
             ", error-bound violations " + std::to_string(bound_failures) + fmt(" (max dist/bound %.3f)", worst_ratio);
  return o;
}

Outcome spectral_constants() {
  Outcome o;
  const burgers::Mesh1D mesh = burgers::Mesh1D::uniform(512);
  const TridiagMatrix m = assemble_mass(mesh.n_dof(), mesh.h);
  const SpectralBounds b = estimate_spectral_bounds(m, lump(m));
  o.ok = b.alpha1 >= 0.98 && b.alpha1 <= 1.02 && b.alpha2 >= 2.9 && b.alpha2 <= 3.02;
  o.detail = fmt("alpha1 %.5f", b.alpha1) + fmt(", alpha2 %.5f", b.alpha2);
  return o;
}

Outcome prox_gradient_decrease() {
  Outcome o;
  std::mt19937_64 rng(4242);
  std::size_t monotone_failures = 0, bound_failures = 0;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + t % 7;
    testing_support::QuadraticProblem p = testing_support::random_lasso(n, rng);
    const Vector x = oracle::random_vector(static_cast<std::size_t>(n), rng, 2.0);
    const Vector g = p.gradient(x, 0.0).g;
    const auto d = p.space().d();
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 20; ++k) {
      const double r = std::pow(10.0, -3.0 + 5.0 * k / 19.0);
      const Vector u = prox_d(p.phi(), d, axpy(x, -r, g), r);
      const Vector step = minus(u, x);
      const double q = q_tilde(p.space(), p.phi(), g, x, u);
      const double slack = 1e-12 * (1.0 + std::abs(q));
      if (q > prev + slack) ++monotone_failures;
      if (q > -inner_m(p.space(), step, step) / r + slack) ++bound_failures;
      prev = q;
    }
  }
  o.ok = monotone_failures == 0 && bound_failures == 0;
  o.detail = "monotonicity violations " + std::to_string(monotone_failures) + ", decrease-bound violations " +
             std::to_string(bound_failures) + " over 50 x 20 points";
  return o;
}

Outcome sweep_trend() {
  Outcome o;
  const bench::BenchConfig cfg = bench::parse_config_text("");
  const auto rows = bench::run_sweep(cfg);
  bool all = rows.size() == 7;
  std::size_t max_iter = 0;
  double max_obj = 0.0;
  for (const auto& r : rows) {
    all = all && r.converged && r.error.empty() && r.h_tilde <= cfg.tr.gtol && r.iter <= 40 &&
          r.final_objective <= 1e-6;
    max_iter = std::max(max_iter, r.iter);
    max_obj = std::max(max_obj, r.final_objective);
  }
  double ratio = 0.0;
  if (rows.size() == 7 && rows.front().av_piter > 0.0) ratio = rows.back().av_piter / rows.front().av_piter;
  o.ok = all && ratio >= 4.0;
  o.detail = std::string(all ? "all rows converged" : "some row failed") + ", max iter " + std::to_string(max_iter) +
             fmt(", max objective %.3e", max_obj) +
             (rows.size() == 7 ? fmt(", av_piter %.3f", rows.front().av_piter) +
                                     fmt(" -> %.3f", rows.back().av_piter) + fmt(" (ratio %.1f)", ratio)
                               : std::string());
  return o;
}

Outcome pde_benefit() {
  Outcome o;
  const bench::BenchConfig cfg = bench::parse_config_text("");
  const bench::PdeComparison c = bench::run_pde_comparison(cfg);
  const double gap = std::abs(c.exact.final_objective - c.adaptive.final_objective);
  o.ok = c.exact.converged && c.adaptive.converged && c.adaptive_solves_per_iter < c.exact_solves_per_iter &&
         gap <= 1e-6;
  o.detail = fmt("solves/iter adaptive %.4f", c.adaptive_solves_per_iter) +
             fmt(" vs exact %.4f", c.exact_solves_per_iter) + fmt(", objective gap %.2e", gap);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 rng(8);
  testing_support::QuadraticProblem p = testing_support::random_lasso(6, rng);
  TrConfig c;
  c.gtol = 1e-11;
  const RunReport rep = solve(p, c, Vector(6, 0.0));
  const double dist = norm_m(p.space(), minus(rep.x, p.minimizer()));
  o.ok = rep.converged && dist <= 1e-8;
  o.detail = fmt("||x - x*||_M = %.2e", dist) + ", iterations " + std::to_string(rep.iterations);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "manufactured PDE solution", 1.0, manufactured_solution},
      {2, "adjoint gradient and Hessian", 5.0, adjoint_correctness},
      {3, "inexact prox certification", 10.0, prox_certification},
      {4, "spectral constants", 1.0, spectral_constants},
      {5, "prox-gradient decrease properties", 5.0, prox_gradient_decrease},
      {6, "kappa_grad sweep trend", 60.0, sweep_trend},
      {7, "inexact PDE solves", 60.0, pde_benefit},
      {8, "solver vs closed-form minimizer", 1.0, oracle_equivalence},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.ok && in_time;
    if (!pass) ++failures;
    std::printf("%s %d %s: %s; %.3f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : " TIMEOUT");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

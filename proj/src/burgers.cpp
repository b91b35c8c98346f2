#include "proxtr/burgers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace proxtr::burgers {

namespace {

constexpr std::size_t kMaxNewtonIters = 50;
constexpr std::size_t kMaxLineSearchHalvings = 30;
constexpr double kArmijo = 1e-4;
// Below this relative residual the Euclidean residual is at rounding level.
constexpr double kResidualFloor = 1e-14;

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double vi : v) s += vi * vi;
  return std::sqrt(s);
}

// Interior values padded with the boundary values: index j is node j.
Vector with_boundary(std::span<const double> interior, double left, double right) {
  Vector out(interior.size() + 2);
  out.front() = left;
  out.back() = right;
  std::copy(interior.begin(), interior.end(), out.begin() + 1);
  return out;
}

void check_mesh_vector(const Mesh1D& mesh, std::span<const double> v, const char* what) {
  detail::check_size(v.size(), mesh.n_dof(), what);
}

bool same_point(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

Mesh1D Mesh1D::uniform(std::size_t intervals) {
  if (intervals < 2) throw std::invalid_argument("Mesh1D: need at least two intervals");
  Mesh1D mesh;
  mesh.n = intervals;
  mesh.h = 1.0 / static_cast<double>(intervals);
  mesh.nodes.resize(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) mesh.nodes[j] = static_cast<double>(j) * mesh.h;
  mesh.nodes.back() = 1.0;
  return mesh;
}

void BurgersConfig::validate() const {
  if (!(nu > 0.0)) throw std::invalid_argument("BurgersConfig: nu must be positive");
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("BurgersConfig: penalties must be >= 0");
}

Vector Tridiagonal::apply(std::span<const double> v) const {
  const std::size_t n = size();
  detail::check_size(v.size(), n, "Tridiagonal::apply");
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += lower[i - 1] * v[i - 1];
    if (i + 1 < n) s += upper[i] * v[i + 1];
    out[i] = s;
  }
  return out;
}

namespace {

// Thomas algorithm without pivoting for a general tridiagonal system with
// sub-diagonal `lo` and super-diagonal `up`.
Vector thomas_general(std::span<const double> lo, std::span<const double> di, std::span<const double> up,
                      std::span<const double> rhs) {
  const std::size_t n = di.size();
  detail::check_size(rhs.size(), n, "Tridiagonal::solve");
  Vector c(n, 0.0);
  Vector x(rhs.begin(), rhs.end());
  double pivot = di[0];
  if (pivot == 0.0 || !std::isfinite(pivot)) throw std::runtime_error("Tridiagonal::solve: zero pivot");
  if (n > 1) c[0] = up[0] / pivot;
  x[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = di[i] - lo[i - 1] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw std::runtime_error("Tridiagonal::solve: zero pivot");
    if (i + 1 < n) c[i] = up[i] / pivot;
    x[i] = (x[i] - lo[i - 1] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace

Vector Tridiagonal::solve(std::span<const double> rhs) const { return thomas_general(lower, diag, upper, rhs); }

Vector Tridiagonal::solve_transposed(std::span<const double> rhs) const {
  return thomas_general(upper, diag, lower, rhs);
}

NewtonNotConverged::NewtonNotConverged(const char* why, StateSolution best)
    : std::runtime_error(std::string("newton_solve: ") + why), best_(std::move(best)) {}

double exact_pde_tolerance() { return 1e-4 * std::sqrt(std::numeric_limits<double>::epsilon()); }

Vector target_state(const Mesh1D& mesh, const BurgersConfig& config) {
  Vector w(mesh.n_dof());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = config.target(mesh.interior_node(i));
  return w;
}

Vector state_residual(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u,
                      std::span<const double> z) {
  check_mesh_vector(mesh, u, "state_residual");
  check_mesh_vector(mesh, z, "state_residual");
  const double h = mesh.h;
  const double nu_h = config.nu / h;
  const Vector uf = with_boundary(u, config.u_left, config.u_right);
  const Vector zf = with_boundary(z, 0.0, 0.0);
  Vector ff(mesh.n + 1);
  for (std::size_t j = 0; j <= mesh.n; ++j) ff[j] = config.forcing(mesh.nodes[j]);

  Vector r(mesh.n_dof());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const std::size_t j = i + 1;
    const double a = uf[j - 1], b = uf[j], c = uf[j + 1];
    const double diffusion = nu_h * (-a + 2.0 * b - c);
    // Exact integral of u u' against the hat function at node j.
    const double convection = (c - a) * (a + b + c) / 6.0;
    const double load = h / 6.0 * ((zf[j - 1] + ff[j - 1]) + 4.0 * (zf[j] + ff[j]) + (zf[j + 1] + ff[j + 1]));
    r[i] = diffusion + convection - load;
  }
  return r;
}

Tridiagonal state_jacobian(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u) {
  check_mesh_vector(mesh, u, "state_jacobian");
  const std::size_t n = mesh.n_dof();
  const double nu_h = config.nu / mesh.h;
  const Vector uf = with_boundary(u, config.u_left, config.u_right);
  Tridiagonal jac{Vector(n - 1 > 0 ? n - 1 : 0), Vector(n), Vector(n - 1 > 0 ? n - 1 : 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + 1;
    const double a = uf[j - 1], b = uf[j], c = uf[j + 1];
    jac.diag[i] = 2.0 * nu_h + (c - a) / 6.0;
    if (i > 0) jac.lower[i - 1] = -nu_h + (-2.0 * a - b) / 6.0;  // d R_i / d u_{i-1}
    if (i + 1 < n) jac.upper[i] = -nu_h + (b + 2.0 * c) / 6.0;   // d R_i / d u_{i+1}
  }
  return jac;
}

StateSolution newton_solve(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                           double rel_tol, std::span<const double> u0) {
  if (!(rel_tol > 0.0) || !(rel_tol < 1.0)) throw std::invalid_argument("newton_solve: rel_tol must lie in (0, 1)");
  check_mesh_vector(mesh, z, "newton_solve");
  const std::size_t n = mesh.n_dof();

  StateSolution sol;
  sol.u = u0.empty() ? Vector(n, 0.0) : Vector(u0.begin(), u0.end());
  check_mesh_vector(mesh, sol.u, "newton_solve initial state");

  double reference = norm2(state_residual(mesh, config, Vector(n, 0.0), z));
  if (reference == 0.0) reference = 1.0;
  const double target = std::max(rel_tol, kResidualFloor) * reference;

  Vector r = state_residual(mesh, config, sol.u, z);
  double rnorm = norm2(r);
  sol.final_rel_residual = rnorm / reference;
  while (rnorm > target) {
    if (sol.newton_iters >= kMaxNewtonIters) throw NewtonNotConverged("iteration limit reached", std::move(sol));
    const Tridiagonal jac = state_jacobian(mesh, config, sol.u);
    Vector du = jac.solve(r);
    ++sol.linear_solves;
    ++sol.newton_iters;

    double t = 1.0;
    bool decreased = false;
    Vector trial(n);
    for (std::size_t k = 0; k <= kMaxLineSearchHalvings; ++k, t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = sol.u[i] - t * du[i];
      Vector r_trial = state_residual(mesh, config, trial, z);
      const double rn_trial = norm2(r_trial);
      if (rn_trial <= (1.0 - kArmijo * t) * rnorm) {
        sol.u = trial;
        r = std::move(r_trial);
        rnorm = rn_trial;
        decreased = true;
        break;
      }
    }
    sol.final_rel_residual = rnorm / reference;
    if (!decreased) throw NewtonNotConverged("line search stagnated", std::move(sol));
  }
  return sol;
}

double objective_at_state(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                          std::span<const double> u) {
  check_mesh_vector(mesh, z, "objective");
  check_mesh_vector(mesh, u, "objective");
  const TridiagMatrix mass = assemble_mass(mesh.n_dof(), mesh.h);
  const Vector w = target_state(mesh, config);
  Vector e(u.begin(), u.end());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] -= w[i];
  const Vector me = proxtr::apply(mass, e);
  const Vector mz = proxtr::apply(mass, z);
  double misfit = 0.0, control = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    misfit += e[i] * me[i];
    control += z[i] * mz[i];
  }
  return misfit + 0.5 * config.alpha * control;
}

ObjectiveValue objective(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                         double pde_rel_tol) {
  ObjectiveValue out;
  out.state = newton_solve(mesh, config, z, pde_rel_tol);
  out.value = objective_at_state(mesh, config, z, out.state.u);
  return out;
}

Vector adjoint(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u) {
  const TridiagMatrix mass = assemble_mass(mesh.n_dof(), mesh.h);
  const Vector w = target_state(mesh, config);
  Vector e(u.begin(), u.end());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] -= w[i];
  Vector rhs = proxtr::apply(mass, e);
  for (double& v : rhs) v *= -2.0;
  return state_jacobian(mesh, config, u).solve_transposed(rhs);
}

GradientValue gradient(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
                       double pde_rel_tol) {
  GradientValue out;
  out.state = newton_solve(mesh, config, z, pde_rel_tol);
  out.lambda = adjoint(mesh, config, out.state.u);
  out.g.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.g[i] = config.alpha * z[i] - out.lambda[i];
  return out;
}

Vector hessvec(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> u,
               std::span<const double> lambda, std::span<const double> v) {
  check_mesh_vector(mesh, u, "hessvec");
  check_mesh_vector(mesh, lambda, "hessvec");
  check_mesh_vector(mesh, v, "hessvec");
  const std::size_t n = mesh.n_dof();
  const TridiagMatrix mass = assemble_mass(n, mesh.h);
  const Tridiagonal jac = state_jacobian(mesh, config, u);

  const Vector du = jac.solve(proxtr::apply(mass, v));

  // lambda-weighted second derivative of the convection term applied to du.
  // Per row i the local Hessian in (u_{i-1}, u_i, u_{i+1}) is
  // (1/6) [[-2, -1, 0], [-1, 0, 1], [0, 1, 2]].
  Vector curvature(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool has_left = i > 0;
    const bool has_right = i + 1 < n;
    const double a = has_left ? du[i - 1] : 0.0;
    const double b = du[i];
    const double c = has_right ? du[i + 1] : 0.0;
    const double li = lambda[i] / 6.0;
    if (has_left) curvature[i - 1] += li * (-2.0 * a - b);
    curvature[i] += li * (-a + c);
    if (has_right) curvature[i + 1] += li * (b + 2.0 * c);
  }

  Vector rhs = proxtr::apply(mass, du);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = -2.0 * rhs[i] - curvature[i];
  const Vector dlambda = jac.solve_transposed(rhs);

  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = config.alpha * v[i] - dlambda[i];
  return out;
}

Vector hessvec(const Mesh1D& mesh, const BurgersConfig& config, std::span<const double> z,
               std::span<const double> v) {
  const StateSolution st = newton_solve(mesh, config, z, exact_pde_tolerance());
  const Vector lambda = adjoint(mesh, config, st.u);
  return hessvec(mesh, config, st.u, lambda, v);
}

// ---------------------------------------------------------------------------

namespace {

WeightedSpace control_space(const Mesh1D& mesh, std::uint64_t seed) {
  TridiagMatrix mass = assemble_mass(mesh.n_dof(), mesh.h);
  Vector d = lump(mass);
  return WeightedSpace::with_estimated_bounds(std::move(mass), std::move(d), seed);
}

}  // namespace

BurgersProblem::BurgersProblem(Mesh1D mesh, BurgersConfig config, PdeMode mode, std::uint64_t seed)
    : mesh_(std::move(mesh)),
      config_(config),
      mode_(mode),
      space_(control_space(mesh_, seed)),
      phi_(Vector(space_.d().begin(), space_.d().end()), config.beta) {
  config_.validate();
}

double BurgersProblem::pde_tolerance_for(double tol, double c) const {
  if (mode_ == PdeMode::exact) return exact_pde_tolerance();
  return std::min(1e-2, std::max(exact_pde_tolerance(), tol / c));
}

const BurgersProblem::StateEntry& BurgersProblem::ensure_state(std::span<const double> z, double rel_tol) {
  requested_.push_back(rel_tol);
  auto hit = std::find_if(states_.begin(), states_.end(), [&](const StateEntry& e) { return same_point(e.z, z); });
  if (hit != states_.end() && hit->rel <= rel_tol) return *hit;

  Vector warm;
  if (hit != states_.end()) {
    warm = hit->u;
  } else if (!states_.empty()) {
    warm = states_.back().u;
  }
  StateSolution sol;
  try {
    sol = newton_solve(mesh_, config_, z, rel_tol, warm);
  } catch (const NewtonNotConverged& e) {
    // A distant warm start can stall the damped iteration; retry from zero.
    if (warm.empty()) throw;
    solves_.state += e.best().linear_solves;
    sol = newton_solve(mesh_, config_, z, rel_tol);
  }
  solves_.state += sol.linear_solves;

  if (hit != states_.end()) states_.erase(hit);
  states_.push_back(StateEntry{Vector(z.begin(), z.end()), std::move(sol.u), sol.final_rel_residual});
  if (states_.size() > 3) states_.erase(states_.begin());
  return states_.back();
}

Evaluation BurgersProblem::value(std::span<const double> z, double tol) {
  const StateEntry& st = ensure_state(z, pde_tolerance_for(tol, c_val_));
  return Evaluation{objective_at_state(mesh_, config_, z, st.u), c_val_ * st.rel};
}

GradientEvaluation BurgersProblem::gradient(std::span<const double> z, double tol) {
  const StateEntry& st = ensure_state(z, pde_tolerance_for(tol, c_grad_));
  Vector lambda = adjoint(mesh_, config_, st.u);
  ++solves_.adjoint;
  GradientEvaluation out;
  out.g.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.g[i] = config_.alpha * z[i] - lambda[i];
  out.error_bound = c_grad_ * st.rel;
  adjoint_ = AdjointEntry{Vector(z.begin(), z.end()), st.u, std::move(lambda)};
  return out;
}

Vector BurgersProblem::hessvec(std::span<const double> z, std::span<const double> v) {
  if (!adjoint_ || !same_point(adjoint_->z, z)) {
    const StateEntry& st = ensure_state(z, pde_tolerance_for(0.0, c_grad_));
    Vector lambda = adjoint(mesh_, config_, st.u);
    ++solves_.adjoint;
    adjoint_ = AdjointEntry{Vector(z.begin(), z.end()), st.u, std::move(lambda)};
  }
  solves_.hessian += 2;
  return burgers::hessvec(mesh_, config_, adjoint_->u, adjoint_->lambda, v);
}

void BurgersProblem::calibrate(std::span<const double> z) {
  detail::check_size(z.size(), mesh_.n_dof(), "calibrate");
  const GradientValue loose = burgers::gradient(mesh_, config_, z, 1e-2);
  const GradientValue tight = burgers::gradient(mesh_, config_, z, 1e-10);
  const double rel = std::max(loose.state.final_rel_residual, 1e-16);

  const double f_loose = objective_at_state(mesh_, config_, z, loose.state.u);
  const double f_tight = objective_at_state(mesh_, config_, z, tight.state.u);
  Vector dg(z.size());
  for (std::size_t i = 0; i < dg.size(); ++i) dg[i] = loose.g[i] - tight.g[i];

  // Floors keep the reported bounds meaningful if the loose solve happens to
  // land on the tight value.
  c_val_ = std::max(std::abs(f_loose - f_tight) / rel, 1e-8 * (1.0 + std::abs(f_tight)));
  c_grad_ = std::max(norm_m(space_, dg) / rel, 1e-8 * (1.0 + norm_m(space_, tight.g)));

  states_.clear();
  adjoint_.reset();
  reset_counters();
}

void BurgersProblem::reset_counters() {
  solves_ = LinearSolveCounts{};
  requested_.clear();
}

double BurgersProblem::exact_value(std::span<const double> z) const {
  return objective(mesh_, config_, z, exact_pde_tolerance()).value;
}

BurgersProblem make_problem(const Mesh1D& mesh, const BurgersConfig& config, PdeMode mode, std::uint64_t seed) {
  BurgersProblem problem(mesh, config, mode, seed);
  problem.calibrate(Vector(mesh.n_dof(), 1.0));
  return problem;
}

}  // namespace proxtr::burgers

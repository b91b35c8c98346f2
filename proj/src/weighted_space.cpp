#include "proxtr/weighted_space.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace proxtr {

namespace detail {
void check_size(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected) {
    std::ostringstream os;
    os << what << ": dimension mismatch (got " << got << ", expected " << expected << ")";
    throw std::invalid_argument(os.str());
  }
}
}  // namespace detail

namespace {

std::string pivot_message(std::size_t row, double pivot) {
  std::ostringstream os;
  os << "tridiagonal matrix is not positive definite: pivot " << pivot << " at row " << row;
  return os.str();
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

}  // namespace

NotPositiveDefinite::NotPositiveDefinite(std::size_t row, double pivot)
    : std::runtime_error(pivot_message(row, pivot)), row_(row), pivot_(pivot) {}

TridiagMatrix::TridiagMatrix(Vector diag, Vector off) : diag_(std::move(diag)), off_(std::move(off)) {
  if (diag_.empty()) throw std::invalid_argument("TridiagMatrix: dimension must be at least 1");
  detail::check_size(off_.size(), diag_.size() - 1, "TridiagMatrix off-diagonal");
}

TridiagMatrix TridiagMatrix::identity(std::size_t n) {
  if (n == 0) throw std::invalid_argument("TridiagMatrix: dimension must be at least 1");
  return TridiagMatrix(Vector(n, 1.0), Vector(n - 1, 0.0));
}

TridiagMatrix assemble_mass(std::size_t n_dof, double h) {
  if (n_dof == 0) throw std::invalid_argument("assemble_mass: n_dof must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("assemble_mass: mesh width must be positive");
  return TridiagMatrix(Vector(n_dof, 4.0 * h / 6.0), Vector(n_dof - 1, h / 6.0));
}

Vector lump(const TridiagMatrix& m) {
  Vector ones(m.size(), 1.0);
  Vector d = proxtr::apply(m, ones);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) {
      std::ostringstream os;
      os << "lump: row " << i << " sums to " << d[i] << ", lumped metric must be positive";
      throw std::invalid_argument(os.str());
    }
  }
  return d;
}

Vector apply(const TridiagMatrix& m, std::span<const double> v) {
  const std::size_t n = m.size();
  detail::check_size(v.size(), n, "apply");
  const auto diag = m.diag();
  const auto off = m.off();
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * v[i];
    if (i > 0) s += off[i - 1] * v[i - 1];
    if (i + 1 < n) s += off[i] * v[i + 1];
    out[i] = s;
  }
  return out;
}

Vector thomas_solve(const TridiagMatrix& m, std::span<const double> rhs) {
  const std::size_t n = m.size();
  detail::check_size(rhs.size(), n, "thomas_solve");
  const auto diag = m.diag();
  const auto off = m.off();

  // Forward elimination; c holds the normalized super-diagonal.
  Vector c(n, 0.0);
  Vector x(rhs.begin(), rhs.end());
  double pivot = diag[0];
  if (!(pivot > 0.0)) throw NotPositiveDefinite(0, pivot);
  if (n > 1) c[0] = off[0] / pivot;
  x[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - off[i - 1] * c[i - 1];
    if (!(pivot > 0.0)) throw NotPositiveDefinite(i, pivot);
    if (i + 1 < n) c[i] = off[i] / pivot;
    x[i] = (x[i] - off[i - 1] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

WeightedSpace::WeightedSpace(TridiagMatrix m, Vector d, double alpha1, double alpha2)
    : m_(std::move(m)), d_(std::move(d)), alpha1_(alpha1), alpha2_(alpha2) {
  detail::check_size(d_.size(), m_.size(), "WeightedSpace diagonal");
  for (double di : d_) {
    if (!(di > 0.0)) throw std::invalid_argument("WeightedSpace: diagonal weights must be positive");
  }
  if (!(alpha1_ > 0.0) || !(alpha1_ <= alpha2_) || !std::isfinite(alpha2_)) {
    throw std::invalid_argument("WeightedSpace: need 0 < alpha1 <= alpha2 < inf");
  }
}

WeightedSpace WeightedSpace::with_estimated_bounds(TridiagMatrix m, Vector d, std::uint64_t seed) {
  const SpectralBounds b = estimate_spectral_bounds(m, d, 50000, seed);
  return WeightedSpace(std::move(m), std::move(d), b.alpha1, b.alpha2);
}

WeightedSpace WeightedSpace::with_scaled_diagonal(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("with_scaled_diagonal: factor must be positive");
  Vector d = d_;
  for (double& di : d) di *= factor;
  return WeightedSpace(m_, std::move(d), alpha1_ * factor, alpha2_ * factor);
}

double inner_m(const WeightedSpace& space, std::span<const double> x, std::span<const double> y) {
  detail::check_size(x.size(), space.size(), "inner_m");
  detail::check_size(y.size(), space.size(), "inner_m");
  // Symmetric evaluation so inner_m(x, y) == inner_m(y, x) bit for bit.
  const auto diag = space.m().diag();
  const auto off = space.m().off();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += diag[i] * (x[i] * y[i]);
    if (i + 1 < x.size()) s += off[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
  }
  return s;
}

double inner_d(const WeightedSpace& space, std::span<const double> x, std::span<const double> y) {
  detail::check_size(x.size(), space.size(), "inner_d");
  detail::check_size(y.size(), space.size(), "inner_d");
  const auto d = space.d();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += d[i] * (x[i] * y[i]);
  return s;
}

double norm_m(const WeightedSpace& space, std::span<const double> x) {
  return std::sqrt(std::max(0.0, inner_m(space, x, x)));
}

double norm_d(const WeightedSpace& space, std::span<const double> x) {
  return std::sqrt(inner_d(space, x, x));
}

Vector apply_a_inverse(const WeightedSpace& space, std::span<const double> v) {
  Vector out = proxtr::apply(space.m(), v);
  const auto d = space.d();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= d[i];
  return out;
}

Vector apply_a(const WeightedSpace& space, std::span<const double> v) {
  detail::check_size(v.size(), space.size(), "apply_a");
  const auto d = space.d();
  Vector dv(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dv[i] = d[i] * v[i];
  return thomas_solve(space.m(), dv);
}

SpectralBounds estimate_spectral_bounds(const TridiagMatrix& m, std::span<const double> d,
                                        std::size_t max_iters, std::uint64_t seed, double rel_tol) {
  const std::size_t n = m.size();
  detail::check_size(d.size(), n, "estimate_spectral_bounds");
  for (double di : d) {
    if (!(di > 0.0)) throw std::invalid_argument("estimate_spectral_bounds: diagonal must be positive");
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vector start(n);
  for (double& s : start) s = 1.0 + 0.5 * unif(rng);

  auto quotient = [&](std::span<const double> x) {
    double xdx = 0.0;
    for (std::size_t i = 0; i < n; ++i) xdx += d[i] * x[i] * x[i];
    return xdx / dot(x, proxtr::apply(m, x));
  };
  auto normalize = [&](Vector& x) {
    double s = std::sqrt(dot(x, x));
    for (double& xi : x) xi /= s;
  };

  SpectralBounds out;

  // Largest quotient: power iteration on M^{-1} D.
  {
    Vector x = start;
    for (std::size_t i = 0; i < n; ++i) x[i] *= (i % 2 == 0 ? 1.0 : -1.0);
    normalize(x);
    double q = quotient(x);
    bool converged = n == 1;
    for (std::size_t it = 0; it < max_iters && !converged; ++it) {
      Vector dx(n);
      for (std::size_t i = 0; i < n; ++i) dx[i] = d[i] * x[i];
      x = thomas_solve(m, dx);
      normalize(x);
      const double q_next = quotient(x);
      ++out.iterations;
      converged = std::abs(q_next - q) <= rel_tol * std::abs(q_next);
      q = q_next;
    }
    if (!converged) throw std::runtime_error("estimate_spectral_bounds: power iteration did not converge");
    out.max_quotient = q;
  }

  // Smallest quotient: power iteration on D^{-1} M.
  {
    Vector x = start;
    normalize(x);
    double q = quotient(x);
    bool converged = n == 1;
    for (std::size_t it = 0; it < max_iters && !converged; ++it) {
      x = proxtr::apply(m, x);
      for (std::size_t i = 0; i < n; ++i) x[i] /= d[i];
      normalize(x);
      const double q_next = quotient(x);
      ++out.iterations;
      converged = std::abs(q_next - q) <= rel_tol * std::abs(q_next);
      q = q_next;
    }
    if (!converged) throw std::runtime_error("estimate_spectral_bounds: inverse iteration did not converge");
    out.min_quotient = q;
  }

  out.alpha1 = out.min_quotient * (1.0 - kSpectralSafetyMargin);
  out.alpha2 = out.max_quotient * (1.0 + kSpectralSafetyMargin);
  return out;
}

}  // namespace proxtr

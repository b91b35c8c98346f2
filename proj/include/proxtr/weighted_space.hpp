#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace proxtr {

using Vector = std::vector<double>;

/// Raised by the Thomas factorization when a pivot is not strictly positive,
/// i.e. the matrix handed in as SPD is not.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(std::size_t row, double pivot);

  std::size_t row() const noexcept { return row_; }
  double pivot() const noexcept { return pivot_; }

 private:
  std::size_t row_;
  double pivot_;
};

/// Symmetric tridiagonal matrix. `off[i]` couples rows i and i+1.
class TridiagMatrix {
 public:
  TridiagMatrix(Vector diag, Vector off);

  static TridiagMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return diag_.size(); }
  std::span<const double> diag() const noexcept { return diag_; }
  std::span<const double> off() const noexcept { return off_; }

 private:
  Vector diag_;
  Vector off_;
};

/// P1 consistent mass matrix on the interior nodes of a uniform mesh:
/// (h/6) tridiag(1, 4, 1).
TridiagMatrix assemble_mass(std::size_t n_dof, double h);

/// Row-sum lumping. Throws if a row sum is not strictly positive.
Vector lump(const TridiagMatrix& m);

Vector apply(const TridiagMatrix& m, std::span<const double> v);

/// Solves m x = rhs with the symmetric Thomas algorithm in O(n).
Vector thomas_solve(const TridiagMatrix& m, std::span<const double> rhs);

/// R^n with the primary metric <x,y>_M = x^T M y and the diagonal surrogate
/// a(x,y) = <x,y>_D = x^T D y, plus equivalence constants
/// alpha1 <x,x>_M <= <x,x>_D <= alpha2 <x,x>_M.
class WeightedSpace {
 public:
  WeightedSpace(TridiagMatrix m, Vector d, double alpha1, double alpha2);

  /// Builds the space and estimates alpha1/alpha2 numerically.
  static WeightedSpace with_estimated_bounds(TridiagMatrix m, Vector d,
                                             std::uint64_t seed = 7);

  std::size_t size() const noexcept { return m_.size(); }
  const TridiagMatrix& m() const noexcept { return m_; }
  std::span<const double> d() const noexcept { return d_; }
  double alpha1() const noexcept { return alpha1_; }
  double alpha2() const noexcept { return alpha2_; }

  /// Same M, diagonal multiplied by `factor`; the constants scale with it.
  WeightedSpace with_scaled_diagonal(double factor) const;

 private:
  TridiagMatrix m_;
  Vector d_;
  double alpha1_;
  double alpha2_;
};

double inner_m(const WeightedSpace& space, std::span<const double> x,
               std::span<const double> y);
double inner_d(const WeightedSpace& space, std::span<const double> x,
               std::span<const double> y);
double norm_m(const WeightedSpace& space, std::span<const double> x);
double norm_d(const WeightedSpace& space, std::span<const double> x);

/// A^{-1} v = D^{-1} M v. No linear solve.
Vector apply_a_inverse(const WeightedSpace& space, std::span<const double> v);
/// A v = M^{-1} D v via a Thomas solve.
Vector apply_a(const WeightedSpace& space, std::span<const double> v);

struct SpectralBounds {
  double alpha1 = 0.0;  ///< lower constant after the safety margin
  double alpha2 = 0.0;  ///< upper constant after the safety margin
  double min_quotient = 0.0;  ///< smallest Rayleigh quotient x^T D x / x^T M x found
  double max_quotient = 0.0;  ///< largest Rayleigh quotient found
  std::size_t iterations = 0;  ///< power + inverse iteration steps
};

/// Relative margin applied to the estimated extreme Rayleigh quotients.
inline constexpr double kSpectralSafetyMargin = 0.005;

/// Extreme generalized eigenvalues of (D, M) by power iteration on M^{-1} D
/// (largest) and on D^{-1} M (reciprocal of the smallest). Stops when the
/// Rayleigh quotient changes by less than `rel_tol` relative.
SpectralBounds estimate_spectral_bounds(const TridiagMatrix& m,
                                        std::span<const double> d,
                                        std::size_t max_iters = 50000,
                                        std::uint64_t seed = 7,
                                        double rel_tol = 1e-6);

namespace detail {
void check_size(std::size_t got, std::size_t expected, const char* what);
}  // namespace detail

}  // namespace proxtr

#ifndef WLM_NUMERICS_HPP_
#define WLM_NUMERICS_HPP_

#include <cstdint>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "wlm/errors.hpp"

namespace wlm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

// Throws NumericalError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

// True when ||M - M^T||_max <= tol * max(1, ||M||_max).
bool is_symmetric(const Matrix& m, double rel_tol = 1e-10);

/// <v, M v> for a symmetric positive semidefinite weight M.
/// Throws ConfigError on a dimension mismatch or a non-symmetric M.
double weighted_norm_sq(const Vector& v, const Matrix& m);

/// Largest singular value of `m`.
///
/// Power iteration on M^T M started from the normalized all-ones vector,
/// stopping when the relative change of the estimate drops below 1e-10
/// (cap 1e4 iterations). A second pass from a fixed alternating-sign start
/// guards against the all-ones vector being orthogonal to the top singular
/// direction; the larger estimate wins.
double spectral_norm(const Matrix& m);

/// Cholesky factorization of an SPD matrix, computed once and reused.
class SpdSolver {
 public:
  SpdSolver() = default;
  /// Throws NotPositiveDefinite when the factorization breaks down.
  explicit SpdSolver(const Matrix& m);

  Vector solve(const Vector& rhs) const;
  Eigen::Index dim() const { return dim_; }

 private:
  Eigen::LLT<Matrix> llt_;
  Eigen::Index dim_ = 0;
};

/// One-shot solve of M y = rhs for SPD M.
Vector solve_spd(const Matrix& m, const Vector& rhs);

/// Seeded random stream. Every random draw in the library goes through an
/// instance of this class; there is no global generator state.
///
/// Uniforms come from the top 53 bits of std::mt19937_64 (whose output
/// sequence is fixed by the standard) and normals from the Marsaglia polar
/// method, so a seed reproduces the same stream on any conforming platform.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

  // Independent child stream; the parent is not advanced.
  SeededRng derive(std::uint64_t tag) const;

  double uniform();   // [0, 1)
  double normal();    // N(0, 1)
  Vector normal_vector(Eigen::Index n);
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

 private:
  std::uint64_t next_bits();

  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Zero-mean Gaussian with standard deviation bound/3, truncated to
/// [-bound, bound] by rejection. bound == 0 returns 0 without drawing.
double sample_truncated_gaussian(SeededRng& rng, double bound);

/// min(1, 2 exp(-2 t^2 / ((k+1) eps0^2))); returns 0 when eps0 == 0.
double hoeffding_tail(std::uint64_t k, double eps0, double t);

}  // namespace wlm

#endif  // WLM_NUMERICS_HPP_

#ifndef WLM_PROX_HPP_
#define WLM_PROX_HPP_

#include <string>
#include <variant>

#include "wlm/numerics.hpp"

namespace wlm {

// ||A x - b||_2^2
struct QuadraticLS {
  Matrix A;
  Vector b;
};

// weight * ||x||_1
struct L1 {
  double weight = 1.0;
};

// weight * ||A x - b||_1
struct L1Affine {
  Matrix A;
  Vector b;
  double weight = 0.5;
};

// (weight / 2) * (||x||_k^sp)^2, the squared k-support norm.
struct KSupportSq {
  int k = 1;
  double weight = 1.0;
};

/// One objective term g or h of the split problem.
struct ProxTerm {
  std::variant<QuadraticLS, L1, L1Affine, KSupportSq> kind;
  std::string name;

  double value(const Vector& x) const;

  // Throws ConfigError unless the term is well-formed for vectors of size `dim`.
  void validate(Eigen::Index dim) const;
};

ProxTerm make_quadratic_ls(Matrix A, Vector b);
ProxTerm make_l1(double weight);
ProxTerm make_l1_affine(Matrix A, Vector b, double weight);
ProxTerm make_ksupport_sq(int k, double weight);

struct ProxResult {
  Vector point;
  double reported_eps = 0.0;  // prox suboptimality in objective units
  long inner_iterations = 0;
};

/// term(p) + (scale/2) ||p - center||^2
double prox_objective(const ProxTerm& term, const Vector& p, const Vector& center, double scale);

/// argmin_x ||A x - b||^2 + (scale/2) ||x - y||^2, via the normal equations.
ProxResult prox_quadratic(const Matrix& A, const Vector& b, const Vector& y, double scale);

/// Soft-thresholding: argmin_z tau ||z||_1 + 1/2 ||z - y||^2.
ProxResult prox_l1(const Vector& y, double tau);

/// Approximate argmin_x weight ||A x - b||_1 + (scale/2) ||x - y||^2 by an
/// inner ADMM run to relative objective change `inner_tol`. The reported
/// eps is measured against a cold-started run at the reference tolerance.
ProxResult prox_l1_affine(const Matrix& A, const Vector& b, const Vector& y, double scale,
                          double inner_tol, double weight = 0.5);

/// k-support norm of v; k = 1 gives ||v||_1 and k = dim gives ||v||_2.
double ksupport_norm(const Vector& v, int k);

/// argmin_z (weight/2) (||z||_k^sp)^2 + 1/2 ||z - y||^2 by candidate search
/// over the split indices (r, l) of the sorted magnitudes. skip > 1 strides
/// both candidate loops (loop perforation); skip = 1 is exact.
ProxResult prox_ksupport_sq(const Vector& y, int k, double weight, int skip);

// Point returned by the candidate search, without the eps measurement.
Vector ksupport_prox_point(const Vector& y, int k, double weight, int skip);

/// |F(approx) - F(exact)| with F = prox_objective(term, ., center, scale).
/// Float-noise negatives (within 1e-12 relative to |F(exact)|) clamp to 0;
/// larger negatives throw NumericalError because the reference is not exact.
double measure_eps(const ProxTerm& term, const Vector& approx, const Vector& exact,
                   const Vector& center, double scale);

// Inner tolerance used for "exact" affine-l1 prox evaluations.
inline constexpr double kReferenceInnerTol = 1e-14;
inline constexpr long kInnerIterationCap = 100000;

/// Closed-form prox of ||A x - b||^2 with the normal-equation factor cached.
/// Immutable after construction.
class QuadraticProx {
 public:
  QuadraticProx(const Matrix& A, const Vector& b, double scale);
  Vector solve(const Vector& y) const;

 private:
  double scale_;
  Vector two_atb_;
  SpdSolver solver_;
};

/// Inner ADMM for the affine-l1 prox:
///   min weight ||w||_1 + (scale/2) ||x - y||^2  s.t.  A x - b = w.
/// The (x, w, u) state persists between calls so successive outer
/// iterations warm-start. Not thread-safe; one instance per run.
class L1AffineProx {
 public:
  L1AffineProx(Matrix A, Vector b, double weight, double scale);

  ProxResult solve(const Vector& center, double inner_tol);
  double objective(const Vector& x, const Vector& center) const;
  void reset() { warm_ = false; }

 private:
  Matrix A_;
  Vector b_;
  double weight_;
  double scale_;
  double sigma_;
  SpdSolver solver_;
  Vector w_;
  Vector u_;
  bool warm_ = false;
};

}  // namespace wlm

#endif  // WLM_PROX_HPP_

#include "wlm/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wlm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double power_iteration(const Matrix& m, Vector q) {
  constexpr int kMaxIter = 10000;
  constexpr double kRelTol = 1e-13;

  double estimate = 0.0;
  for (int it = 0; it < kMaxIter; ++it) {
    const Vector mq = m * q;
    const Vector w = m.transpose() * mq;
    const double norm_w = w.norm();
    if (norm_w == 0.0) return 0.0;
    // sqrt of the Rayleigh quotient of M^T M
    const double next = std::sqrt(q.dot(w));
    q = w / norm_w;
    if (it > 0 && std::abs(next - estimate) <= kRelTol * next) {
      estimate = next;
      break;
    }
    estimate = next;
  }
  return estimate;
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite entry");
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + ": non-finite entry");
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double weighted_norm_sq(const Vector& v, const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() != v.size()) {
    throw ConfigError("weighted_norm_sq: dimension mismatch (" + std::to_string(v.size()) +
                      " vs " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
  }
  if (!is_symmetric(m)) throw ConfigError("weighted_norm_sq: weight matrix is not symmetric");
  return v.dot(m * v);
}

double spectral_norm(const Matrix& m) {
  require_finite(m, "spectral_norm");
  if (m.size() == 0) return 0.0;
  const Eigen::Index n = m.cols();

  Vector ones = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  Vector alternating(n);
  for (Eigen::Index i = 0; i < n; ++i) alternating(i) = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.5 * static_cast<double>(i % 3));
  alternating.normalize();

  return std::max(power_iteration(m, ones), power_iteration(m, alternating));
}

SpdSolver::SpdSolver(const Matrix& m) : llt_(m), dim_(m.rows()) {
  if (m.rows() != m.cols()) throw ConfigError("SpdSolver: matrix is not square");
  require_finite(m, "SpdSolver");
  if (llt_.info() != Eigen::Success) {
    throw NotPositiveDefinite("SpdSolver: Cholesky breakdown, matrix is not positive definite");
  }
}

Vector SpdSolver::solve(const Vector& rhs) const {
  if (rhs.size() != dim_) throw ConfigError("SpdSolver::solve: dimension mismatch");
  return llt_.solve(rhs);
}

Vector solve_spd(const Matrix& m, const Vector& rhs) { return SpdSolver(m).solve(rhs); }

SeededRng::SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

SeededRng SeededRng::derive(std::uint64_t tag) const {
  return SeededRng(splitmix64(seed_ ^ splitmix64(tag + 0x632be59bd9b4e019ULL)));
}

std::uint64_t SeededRng::next_bits() {
  ++position_;
  return engine_();
}

double SeededRng::uniform() {
  return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
}

double SeededRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

Vector SeededRng::normal_vector(Eigen::Index n) {
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = normal();
  return out;
}

Matrix SeededRng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix out(rows, cols);
  // row-major fill so the draw order does not depend on storage order
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal();
  return out;
}

double sample_truncated_gaussian(SeededRng& rng, double bound) {
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw ConfigError("sample_truncated_gaussian: bound must be finite and >= 0");
  }
  if (bound == 0.0) return 0.0;
  const double sigma = bound / 3.0;
  for (;;) {
    const double s = sigma * rng.normal();
    if (std::abs(s) <= bound) return s;
  }
}

double hoeffding_tail(std::uint64_t k, double eps0, double t) {
  if (!(t > 0.0)) throw ConfigError("hoeffding_tail: t must be positive");
  if (!(eps0 >= 0.0)) throw ConfigError("hoeffding_tail: eps0 must be nonnegative");
  if (eps0 == 0.0) return 0.0;
  const double denom = static_cast<double>(k + 1) * eps0 * eps0;
  return std::min(1.0, 2.0 * std::exp(-2.0 * t * t / denom));
}

}  // namespace wlm

#ifndef WLM_TESTS_HELPERS_HPP_
#define WLM_TESTS_HELPERS_HPP_

#include <random>

#include <Eigen/SVD>

#include "wlm/engine.hpp"

namespace testing {

using wlm::Matrix;
using wlm::Vector;

// Test data comes from std::mt19937_64 directly so that it does not depend on
// the library's own RNG.
struct Gen {
  explicit Gen(std::uint64_t seed) : eng(seed) {}
  std::mt19937_64 eng;
  std::normal_distribution<double> normal{0.0, 1.0};

  double gauss() { return normal(eng); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  Vector vec(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = gauss();
    return v;
  }
  Matrix mat(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gauss();
    return m;
  }
};

inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

// minimize ||A x - b||^2 + ||z||_1 s.t. x - z = 0 with ||A|| = 1 / 1.05.
inline wlm::ProblemSpec small_lasso(Gen& g, Eigen::Index m, Eigen::Index n) {
  Matrix A = g.mat(m, n);
  Eigen::JacobiSVD<Matrix> svd(A);
  A /= svd.singularValues()(0) * 1.05;
  return {wlm::make_quadratic_ls(A, g.vec(m)), wlm::make_l1(1.0), Matrix::Identity(n, n), -Matrix::Identity(n, n),
          Vector::Zero(n)};
}

inline wlm::ProblemSpec small_ksupp(Gen& g, Eigen::Index m, Eigen::Index n, int k) {
  Matrix A = g.mat(m, n);
  Eigen::JacobiSVD<Matrix> svd(A);
  A /= svd.singularValues()(0) * 1.05;
  return {wlm::make_l1_affine(A, g.vec(m), 0.5), wlm::make_ksupport_sq(k, 1.0), Matrix::Identity(n, n),
          -Matrix::Identity(n, n), Vector::Zero(n)};
}

inline wlm::AdmmConfig unit_config(long iters, double lambda = 1.05) {
  wlm::AdmmConfig c;
  c.lambda = lambda;
  c.max_iter = iters;
  c.abstol = 0.0;
  c.reltol = 0.0;
  return c;
}

}  // namespace testing

#endif  // WLM_TESTS_HELPERS_HPP_

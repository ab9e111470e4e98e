#ifndef WLM_ENGINE_HPP_
#define WLM_ENGINE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wlm/numerics.hpp"
#include "wlm/perturb.hpp"
#include "wlm/prox.hpp"

namespace wlm {

/// minimize g(x) + h(z)  subject to  A x + B z = c.
struct ProblemSpec {
  ProxTerm g;
  ProxTerm h;
  Matrix A;
  Matrix B;
  Vector c;

  Eigen::Index n() const { return A.cols(); }  // dim x
  Eigen::Index m() const { return B.cols(); }  // dim z
  Eigen::Index p() const { return A.rows(); }  // number of constraints

  double objective(const Vector& x, const Vector& z) const { return g.value(x) + h.value(z); }
  void validate() const;
};

struct AdmmConfig {
  double lambda = 1.0;    // 1 / rho
  double lambda_x = 1.0;
  double lambda_z = 1.0;
  Matrix L;               // constraint weighting; empty means identity
  double abstol = 1e-6;
  double reltol = 1e-6;
  long max_iter = 3000;
  std::uint64_t seed = 1;
  // Accept lambda * lambda_x == ||A^T L A|| (singular Sigma), the plain
  // ADMM limit. P.3 asks for strict inequality.
  bool allow_psd_boundary = false;

  Matrix weight_matrix(Eigen::Index p) const;
};

/// Sigma1 = lambda_x I - (1/lambda) A^T L A, Sigma2 = lambda_z I - (1/lambda) B^T L B
/// (the proximal matrices M_x, M_z of the scheme), plus cached products.
struct PrecomputedOperators {
  Matrix Sigma1;
  Matrix Sigma2;
  Matrix AtL;   // A^T L
  Matrix BtL;   // B^T L
  Matrix AtLB;  // A^T L B, for the dual residual
  Matrix L;
  double lambda = 1.0;
  double lambda_x = 1.0;
  double lambda_z = 1.0;
  double norm_AtLA = 0.0;
  double norm_BtLB = 0.0;
  double sigma1_norm_sq = 0.0;  // lambda_max(Sigma1^T Sigma1)
};

/// Validates P.3 and builds the operators. Throws NumericalError carrying
/// the measured spectral norm when lambda * lambda_x <= ||A^T L A|| (or the
/// z counterpart), and NotPositiveDefinite when L is not SPD.
PrecomputedOperators precompute(const ProblemSpec& problem, const AdmmConfig& cfg);

enum class Mode { fast, shadow };

/// Per-step quantities measured against the exact prox at the same input.
struct ShadowMeasures {
  Vector r_x;  // exact x minus computed x
  Vector r_z;
  double eps_g = 0.0;
  double eps_h = 0.0;
  double rx_norm = 0.0;
  double sigma1_rx_norm = 0.0;
  double rz_norm = 0.0;
};

struct IterateState {
  Vector x;
  Vector z;
  Vector v;
};

/// Iterate k -> k+1. x, z, v, u hold the (k+1)-th values.
struct IterationRecord {
  long k = 0;
  Vector x;
  Vector z;
  Vector v;
  Vector u;  // v^{k+1} + B (z^k - z^{k+1})
  double f_value = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
  long inner_iterations_g = 0;
  long inner_iterations_h = 0;
  std::optional<ShadowMeasures> shadow;
};

struct Trace {
  IterateState initial;
  std::vector<IterationRecord> records;
  bool converged = false;
  Mode mode = Mode::fast;
};

/// The scaled proximal WLM-ADMM iteration with injected prox errors.
/// Owns the prox evaluators (and their warm-start state) and the noise
/// stream, so one instance drives exactly one run.
class WlmAdmm {
 public:
  WlmAdmm(ProblemSpec problem, AdmmConfig cfg, ErrorModelSpec errors, Mode mode);

  const ProblemSpec& problem() const { return problem_; }
  const AdmmConfig& config() const { return cfg_; }
  const PrecomputedOperators& operators() const { return ops_; }

  IterationRecord step(const IterateState& state, long k);

  // x0, z0 i.i.d. standard normal from the config seed, v0 = 0.
  IterateState initial_state() const;

  Trace run();
  Trace run_from(IterateState init);

 private:
  ProblemSpec problem_;
  AdmmConfig cfg_;
  ErrorModelSpec errors_;
  Mode mode_;
  PrecomputedOperators ops_;
  ProxEvaluator prox_x_;
  ProxEvaluator prox_z_;
  SeededRng noise_;
};

Trace run(const ProblemSpec& problem, const AdmmConfig& cfg, const ErrorModelSpec& errors, Mode mode);

struct ReferenceSolution {
  Vector x_star;
  Vector z_star;
  double f_star = 0.0;
  long iterations = 0;
  std::string provenance;
};

inline constexpr double kMachineEpsTolerance = 2.2204e-16;
inline constexpr long kReferenceMinIterations = 3000;

/// Error-free high-accuracy run: exact prox evaluations, abstol = reltol =
/// 2.2204e-16 and at least max(cfg.max_iter, min_iter) iterations, stopping
/// early only at a floating-point fixed point.
ReferenceSolution reference_solution(const ProblemSpec& problem, const AdmmConfig& cfg,
                                     long min_iter = 10000);

// Stream tags for SeededRng::derive.
inline constexpr std::uint64_t kInitStream = 2;
inline constexpr std::uint64_t kNoiseStream = 3;

}  // namespace wlm

#endif  // WLM_ENGINE_HPP_

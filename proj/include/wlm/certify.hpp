#ifndef WLM_CERTIFY_HPP_
#define WLM_CERTIFY_HPP_

#include <cmath>
#include <optional>
#include <vector>

#include "wlm/engine.hpp"

namespace wlm {

// nonconvex: residual products ||Sigma1 r_x|| ||x - x*|| + ||r_z|| ||z - z*||.
// convex: those products replaced by sqrt(2 lambda_max(Sigma1^T Sigma1) eps_g) ||x - x*||
//         + sqrt(2 eps_h) ||z - z*||.
enum class BoundMode { nonconvex, convex };

const char* mode_name(BoundMode mode);

using Series = std::vector<double>;

/// Everything the bound evaluators need about one finished run. The bounds
/// are stated for lambda_x = lambda_z = 1; the constructor refuses other
/// settings.
struct CertifyInput {
  CertifyInput(const Trace& trace, const ProblemSpec& problem, const PrecomputedOperators& ops,
               const ReferenceSolution& ref);

  const Trace& trace;
  const ProblemSpec& problem;
  const PrecomputedOperators& ops;
  const ReferenceSolution& ref;
};

/// f(x^{k+1}, z^{k+1}) - f* for every recorded iteration.
Series f_gap_series(const CertifyInput& in);

/// (1/(k+1)) sum_{i<=k} [f(x^{i+1}, z^{i+1}) - f*]
///   + (1/(k+1)) sum_{i<=k} <(1/lambda) L u^{i+1}, v^{i+1} - v^i>
Series lhs_running(const CertifyInput& in);

/// ||x0 - x*||^2_{Sigma1} + ||z0 - z*||^2
double initial_distance(const CertifyInput& in);

/// D0 / (2(k+1))
Series bound_free(const CertifyInput& in);

/// Deterministic bound on lhs_running. Needs a shadow-mode trace.
Series bound_deterministic(const CertifyInput& in, BoundMode mode);

struct ProbabilisticOptions {
  double gamma = 1.0;
  double eps0 = 0.0;
  BoundMode mode = BoundMode::nonconvex;
  // Known model means E[eps_g], E[eps_h]; the running sample means otherwise.
  std::optional<double> mean_eps_g;
  std::optional<double> mean_eps_h;
};

/// B(gamma, k) = E[eps_g] + E[eps_h] + [D0 + residual terms] / (2(k+1)) + gamma eps0 / sqrt(k+1),
/// holding with probability at least 1 - 4 exp(-gamma^2 / 2).
Series bound_probabilistic(const CertifyInput& in, const ProbabilisticOptions& opts);

/// Bound for an arbitrary feasible pair (A x + B z = c within 1e-8):
/// [||x0 - x||^2_{Sigma1} + ||z0 - z||^2] / (2(k+1))
///   + (1/(k+1)) [sum eps_g + sum eps_h + R_k]
/// where R_k = -<Sigma1 r_x^{k+1}, x^{k+1} - x> - <r_z^{k+1}, z^{k+1} - z> when `signed_terms`,
/// and the Cauchy-Schwarz majorant ||Sigma1 r_x|| ||x^{k+1} - x|| + ||r_z|| ||z^{k+1} - z|| otherwise.
Series bound_general(const CertifyInput& in, const Vector& x, const Vector& z, bool signed_terms = true);

/// Left-hand side matching bound_general for the pair (x, z).
Series lhs_general(const CertifyInput& in, const Vector& x, const Vector& z);

/// f(mean of x^{i+1}, mean of z^{i+1}) - f* over i <= k.
Series averaged_iterate_gap(const CertifyInput& in);

/// Running sample means of eps_g and eps_h.
Series running_mean_eps_g(const Trace& trace);
Series running_mean_eps_h(const Trace& trace);

struct VerificationReport {
  long n = 0;
  double gamma = 0.0;
  std::optional<double> p_empirical;  // empty when n == 0
  double p_lower_4 = 0.0;             // 1 - 4 exp(-gamma^2 / 2)
  double p_lower_2 = 0.0;             // 1 - 2 exp(-gamma^2 / 2)
  std::vector<bool> satisfied;
};

/// p = #{k : f_gap(k) < B(k)} / N.
VerificationReport empirical_probability(const Series& f_gap, const Series& bound, double gamma);

/// Additive Hoeffding slack gamma sqrt(k+1) eps0 / 2 on a sum of k+1 errors.
double hoeffding_sum_bound(long k, double eps0, double gamma);

inline double gamma_two_sqrt_log2() { return 2.0 * std::sqrt(std::log(2.0)); }
inline double gamma_twenty_sqrt_log2() { return 20.0 * std::sqrt(std::log(2.0)); }

}  // namespace wlm

#endif  // WLM_CERTIFY_HPP_

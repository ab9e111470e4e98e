#ifndef WLM_PERTURB_HPP_
#define WLM_PERTURB_HPP_

#include <optional>
#include <memory>
#include <variant>
#include <vector>

#include "wlm/numerics.hpp"
#include "wlm/prox.hpp"

namespace wlm {

struct NoError {};

// Each component i of the exact prox point p gets additive noise drawn from
// a truncated Gaussian on [-delta |p_i|, delta |p_i|].
struct InjectGaussian {
  double delta = 0.0;
};

// Loop perforation of the k-support candidate search.
struct Perforate {
  int skip = 1;
};

// Early termination of the affine-l1 inner loop.
struct InnerTol {
  double tol = kReferenceInnerTol;
};

using ErrorSource = std::variant<NoError, InjectGaussian, Perforate, InnerTol>;

/// Computational-error sources for the two prox subproblems, plus the
/// almost-sure bound eps0 on the induced prox errors.
struct ErrorModelSpec {
  ErrorSource g = NoError{};
  ErrorSource h = NoError{};
  // nullopt: estimate eps0 from the observed trace.
  std::optional<double> eps0;

  static ErrorModelSpec none() { return {}; }
  static ErrorModelSpec inject(double delta) { return {InjectGaussian{delta}, InjectGaussian{delta}, std::nullopt}; }
  // Inner tolerance on g (affine l1) and perforation on h (k-support).
  static ErrorModelSpec ksupport(int skip, double inner_tol) {
    return {InnerTol{inner_tol}, Perforate{skip}, std::nullopt};
  }

  void validate() const;
};

const char* source_name(const ErrorSource& source);

/// Exact and approximate prox evaluations for one term of the split problem:
///   argmin_p term(p) + (scale/2) ||p - center||^2.
///
/// Holds the term's caches (normal-equation factor, inner-loop warm starts).
/// The exact path and the approximate path keep separate warm-start state so
/// that computing the exact point never changes the approximate trajectory.
class ProxEvaluator {
 public:
  ProxEvaluator(ProxTerm term, double scale, ErrorSource source);
  ~ProxEvaluator();
  ProxEvaluator(ProxEvaluator&&) noexcept;
  ProxEvaluator& operator=(ProxEvaluator&&) noexcept;

  const ProxTerm& term() const { return term_; }
  double scale() const { return scale_; }
  const ErrorSource& source() const { return source_; }

  // True when the approximate path needs the exact point as input.
  bool needs_exact() const;

  Vector exact(const Vector& center);

  /// Applies the error source. `exact_point` may be null unless needs_exact();
  /// when null, Perforate measures eps against its own exact search and
  /// InnerTol reports NaN (not measured).
  ProxResult apply(const Vector& center, const Vector* exact_point, SeededRng& rng);

 private:
  struct Caches;

  ProxTerm term_;
  double scale_;
  ErrorSource source_;
  std::unique_ptr<Caches> caches_;
};

struct IterationRecord;

/// Configured eps0, or the maximum of max(eps_g, eps_h) over the trace when
/// the model leaves it empirical. Requires shadow measurements.
double eps0_estimate(const ErrorModelSpec& model, const std::vector<IterationRecord>& trace);

}  // namespace wlm

#endif  // WLM_PERTURB_HPP_

#include "wlm/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wlm/engine.hpp"

namespace wlm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_source(const ErrorSource& source) {
  std::visit(Overloaded{
                 [](const NoError&) {},
                 [](const InjectGaussian& s) {
                   if (!(s.delta >= 0.0) || !std::isfinite(s.delta))
                     throw ConfigError("InjectGaussian: delta must be finite and >= 0");
                 },
                 [](const Perforate& s) {
                   if (s.skip < 1) throw ConfigError("Perforate: skip must be >= 1");
                 },
                 [](const InnerTol& s) {
                   if (!(s.tol > 0.0)) throw ConfigError("InnerTol: tol must be positive");
                 },
             },
             source);
}

}  // namespace

void ErrorModelSpec::validate() const {
  validate_source(g);
  validate_source(h);
  if (eps0 && !(*eps0 >= 0.0)) throw ConfigError("ErrorModelSpec: eps0 must be >= 0");
}

const char* source_name(const ErrorSource& source) {
  return std::visit(Overloaded{
                        [](const NoError&) { return "none"; },
                        [](const InjectGaussian&) { return "inject_gaussian"; },
                        [](const Perforate&) { return "perforate"; },
                        [](const InnerTol&) { return "inner_tol"; },
                    },
                    source);
}

struct ProxEvaluator::Caches {
  std::optional<QuadraticProx> quadratic;
  std::optional<L1AffineProx> affine_exact;
  std::optional<L1AffineProx> affine_approx;
};

ProxEvaluator::ProxEvaluator(ProxTerm term, double scale, ErrorSource source)
    : term_(std::move(term)), scale_(scale), source_(source), caches_(std::make_unique<Caches>()) {
  if (!(scale_ > 0.0)) throw ConfigError("ProxEvaluator: scale must be positive");
  validate_source(source_);
  if (std::holds_alternative<Perforate>(source_) && !std::holds_alternative<KSupportSq>(term_.kind)) {
    throw ConfigError("loop perforation applies only to the k-support term, not " + term_.name);
  }
  if (std::holds_alternative<InnerTol>(source_) && !std::holds_alternative<L1Affine>(term_.kind)) {
    throw ConfigError("inner tolerance applies only to the affine-l1 term, not " + term_.name);
  }
  if (const auto* q = std::get_if<QuadraticLS>(&term_.kind)) {
    caches_->quadratic.emplace(q->A, q->b, scale_);
  } else if (const auto* a = std::get_if<L1Affine>(&term_.kind)) {
    caches_->affine_exact.emplace(a->A, a->b, a->weight, scale_);
    if (std::holds_alternative<InnerTol>(source_)) caches_->affine_approx.emplace(a->A, a->b, a->weight, scale_);
  }
}

ProxEvaluator::~ProxEvaluator() = default;
ProxEvaluator::ProxEvaluator(ProxEvaluator&&) noexcept = default;
ProxEvaluator& ProxEvaluator::operator=(ProxEvaluator&&) noexcept = default;

bool ProxEvaluator::needs_exact() const {
  return std::holds_alternative<NoError>(source_) || std::holds_alternative<InjectGaussian>(source_);
}

Vector ProxEvaluator::exact(const Vector& center) {
  return std::visit(Overloaded{
                        [&](const QuadraticLS&) { return caches_->quadratic->solve(center); },
                        [&](const L1& t) { return prox_l1(center, t.weight / scale_).point; },
                        [&](const L1Affine&) {
                          return caches_->affine_exact->solve(center, kReferenceInnerTol).point;
                        },
                        [&](const KSupportSq& t) {
                          return ksupport_prox_point(center, t.k, t.weight / scale_, 1);
                        },
                    },
                    term_.kind);
}

ProxResult ProxEvaluator::apply(const Vector& center, const Vector* exact_point, SeededRng& rng) {
  Vector local_exact;
  auto ensure_exact = [&]() -> const Vector& {
    if (exact_point == nullptr) {
      local_exact = exact(center);
      exact_point = &local_exact;
    }
    return *exact_point;
  };

  return std::visit(
      Overloaded{
          [&](const NoError&) { return ProxResult{ensure_exact(), 0.0, 0}; },
          [&](const InjectGaussian& s) {
            const Vector& e = ensure_exact();
            Vector p = e;
            for (Eigen::Index i = 0; i < p.size(); ++i) {
              p(i) += sample_truncated_gaussian(rng, s.delta * std::abs(e(i)));
            }
            const double eps = measure_eps(term_, p, e, center, scale_);
            return ProxResult{std::move(p), eps, 0};
          },
          [&](const Perforate& s) {
            const auto& t = std::get<KSupportSq>(term_.kind);
            Vector p = ksupport_prox_point(center, t.k, t.weight / scale_, s.skip);
            const double eps = measure_eps(term_, p, ensure_exact(), center, scale_);
            return ProxResult{std::move(p), eps, 0};
          },
          [&](const InnerTol& s) {
            ProxResult r = caches_->affine_approx->solve(center, s.tol);
            r.reported_eps = exact_point != nullptr ? measure_eps(term_, r.point, *exact_point, center, scale_)
                                                    : std::numeric_limits<double>::quiet_NaN();
            return r;
          },
      },
      source_);
}

double eps0_estimate(const ErrorModelSpec& model, const std::vector<IterationRecord>& trace) {
  if (model.eps0) return *model.eps0;
  double eps0 = 0.0;
  for (const IterationRecord& rec : trace) {
    if (!rec.shadow) throw ConfigError("eps0_estimate: empirical eps0 needs a shadow-mode trace");
    eps0 = std::max({eps0, rec.shadow->eps_g, rec.shadow->eps_h});
  }
  return eps0;
}

}  // namespace wlm

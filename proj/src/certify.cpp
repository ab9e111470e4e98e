#include "wlm/certify.hpp"

#include <cmath>
#include <limits>

namespace wlm {

namespace {

const ShadowMeasures& shadow_of(const IterationRecord& rec, const char* who) {
  if (!rec.shadow) throw ConfigError(std::string(who) + ": needs a shadow-mode trace");
  return *rec.shadow;
}

// Prefix sums of eps_g + eps_h.
Series cumulative_eps(const Trace& trace, const char* who) {
  Series out;
  out.reserve(trace.records.size());
  double acc = 0.0;
  for (const IterationRecord& rec : trace.records) {
    const ShadowMeasures& s = shadow_of(rec, who);
    acc += s.eps_g + s.eps_h;
    out.push_back(acc);
  }
  return out;
}

double residual_products(const CertifyInput& in, const IterationRecord& rec, BoundMode mode, const char* who) {
  const ShadowMeasures& s = shadow_of(rec, who);
  const double dx = (rec.x - in.ref.x_star).norm();
  const double dz = (rec.z - in.ref.z_star).norm();
  if (mode == BoundMode::nonconvex) return s.sigma1_rx_norm * dx + s.rz_norm * dz;
  return std::sqrt(2.0 * s.eps_h) * dz + std::sqrt(2.0 * in.ops.sigma1_norm_sq * s.eps_g) * dx;
}

void require_feasible(const CertifyInput& in, const Vector& x, const Vector& z) {
  if (x.size() != in.problem.n() || z.size() != in.problem.m()) {
    throw ConfigError("bound_general: pair dimensions do not match the problem");
  }
  const double infeas = (in.problem.A * x + in.problem.B * z - in.problem.c).norm();
  if (!(infeas <= 1e-8)) {
    throw ConfigError("bound_general: pair is not feasible, ||Ax + Bz - c|| = " + std::to_string(infeas));
  }
}

Series running_mean(const Trace& trace, bool g) {
  Series out;
  out.reserve(trace.records.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const ShadowMeasures& s = shadow_of(trace.records[i], "running mean of eps");
    acc += g ? s.eps_g : s.eps_h;
    out.push_back(acc / static_cast<double>(i + 1));
  }
  return out;
}

}  // namespace

const char* mode_name(BoundMode mode) { return mode == BoundMode::convex ? "convex" : "nonconvex"; }

CertifyInput::CertifyInput(const Trace& t, const ProblemSpec& p, const PrecomputedOperators& o,
                           const ReferenceSolution& r)
    : trace(t), problem(p), ops(o), ref(r) {
  if (ops.lambda_x != 1.0 || ops.lambda_z != 1.0) {
    throw ConfigError("certify: the bounds hold for lambda_x = lambda_z = 1 only");
  }
  if (ref.x_star.size() != problem.n() || ref.z_star.size() != problem.m()) {
    throw ConfigError("certify: reference solution dimensions do not match the problem");
  }
  if (trace.initial.x.size() != problem.n() || trace.initial.z.size() != problem.m() ||
      trace.initial.v.size() != problem.p()) {
    throw ConfigError("certify: trace initial state does not match the problem");
  }
}

Series f_gap_series(const CertifyInput& in) {
  Series out;
  out.reserve(in.trace.records.size());
  for (const IterationRecord& rec : in.trace.records) out.push_back(rec.f_value - in.ref.f_star);
  return out;
}

Series lhs_running(const CertifyInput& in) {
  Series out;
  out.reserve(in.trace.records.size());
  const Vector* v_prev = &in.trace.initial.v;
  double sum_f = 0.0;
  double sum_cross = 0.0;
  for (std::size_t i = 0; i < in.trace.records.size(); ++i) {
    const IterationRecord& rec = in.trace.records[i];
    if (rec.u.size() != in.problem.p()) throw ConfigError("lhs_running: trace record is missing u");
    sum_f += rec.f_value - in.ref.f_star;
    sum_cross += (in.ops.L * rec.u).dot(rec.v - *v_prev) / in.ops.lambda;
    v_prev = &rec.v;
    out.push_back((sum_f + sum_cross) / static_cast<double>(i + 1));
  }
  return out;
}

double initial_distance(const CertifyInput& in) {
  const Vector dx = in.trace.initial.x - in.ref.x_star;
  const Vector dz = in.trace.initial.z - in.ref.z_star;
  return dx.dot(in.ops.Sigma1 * dx) + dz.squaredNorm();
}

Series bound_free(const CertifyInput& in) {
  const double d0 = initial_distance(in);
  Series out(in.trace.records.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = d0 / (2.0 * static_cast<double>(k + 1));
  return out;
}

Series bound_deterministic(const CertifyInput& in, BoundMode mode) {
  const char* who = "bound_deterministic";
  if (in.trace.mode != Mode::shadow) throw ConfigError(std::string(who) + ": needs a shadow-mode trace");
  const double d0 = initial_distance(in);
  const Series cum = cumulative_eps(in.trace, who);
  Series out(cum.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double kp1 = static_cast<double>(k + 1);
    out[k] = d0 / (2.0 * kp1) + (cum[k] + residual_products(in, in.trace.records[k], mode, who)) / kp1;
  }
  return out;
}

Series bound_probabilistic(const CertifyInput& in, const ProbabilisticOptions& opts) {
  const char* who = "bound_probabilistic";
  if (!(opts.gamma > 0.0) || !std::isfinite(opts.gamma)) throw ConfigError("bound_probabilistic: gamma must be > 0");
  if (!(opts.eps0 >= 0.0)) throw ConfigError("bound_probabilistic: eps0 must be >= 0");
  if (in.trace.mode != Mode::shadow) throw ConfigError(std::string(who) + ": needs a shadow-mode trace");

  const double d0 = initial_distance(in);
  const Series mean_g = running_mean_eps_g(in.trace);
  const Series mean_h = running_mean_eps_h(in.trace);
  const double scale = opts.mode == BoundMode::convex ? 2.0 : 1.0;
  Series out(mean_g.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double kp1 = static_cast<double>(k + 1);
    const double eg = opts.mean_eps_g.value_or(mean_g[k]);
    const double eh = opts.mean_eps_h.value_or(mean_h[k]);
    const double residual = scale * residual_products(in, in.trace.records[k], opts.mode, who);
    out[k] = eg + eh + (d0 + residual) / (2.0 * kp1) + opts.gamma * opts.eps0 / std::sqrt(kp1);
  }
  return out;
}

Series bound_general(const CertifyInput& in, const Vector& x, const Vector& z, bool signed_terms) {
  const char* who = "bound_general";
  require_feasible(in, x, z);
  if (in.trace.mode != Mode::shadow) throw ConfigError(std::string(who) + ": needs a shadow-mode trace");

  const Vector dx0 = in.trace.initial.x - x;
  const Vector dz0 = in.trace.initial.z - z;
  const double d0 = dx0.dot(in.ops.Sigma1 * dx0) + dz0.squaredNorm();
  const Series cum = cumulative_eps(in.trace, who);
  Series out(cum.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const IterationRecord& rec = in.trace.records[k];
    const ShadowMeasures& s = *rec.shadow;
    const Vector ex = rec.x - x;
    const Vector ez = rec.z - z;
    double residual;
    if (signed_terms) {
      residual = -(in.ops.Sigma1 * s.r_x).dot(ex) - s.r_z.dot(ez);
    } else {
      residual = s.sigma1_rx_norm * ex.norm() + s.rz_norm * ez.norm();
    }
    const double kp1 = static_cast<double>(k + 1);
    out[k] = d0 / (2.0 * kp1) + (cum[k] + residual) / kp1;
  }
  return out;
}

Series lhs_general(const CertifyInput& in, const Vector& x, const Vector& z) {
  require_feasible(in, x, z);
  const double f_ref = in.problem.objective(x, z);
  const Vector target = in.problem.A * x + in.problem.B * z;
  Series out;
  out.reserve(in.trace.records.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < in.trace.records.size(); ++i) {
    const IterationRecord& rec = in.trace.records[i];
    if (rec.u.size() != in.problem.p()) throw ConfigError("lhs_general: trace record is missing u");
    const Vector gap = in.problem.A * rec.x + in.problem.B * rec.z - target;
    acc += rec.f_value - f_ref + (in.ops.L * rec.u).dot(gap) / in.ops.lambda;
    out.push_back(acc / static_cast<double>(i + 1));
  }
  return out;
}

Series averaged_iterate_gap(const CertifyInput& in) {
  Series out;
  out.reserve(in.trace.records.size());
  Vector sx = Vector::Zero(in.problem.n());
  Vector sz = Vector::Zero(in.problem.m());
  for (std::size_t i = 0; i < in.trace.records.size(); ++i) {
    sx += in.trace.records[i].x;
    sz += in.trace.records[i].z;
    const double w = 1.0 / static_cast<double>(i + 1);
    out.push_back(in.problem.objective(sx * w, sz * w) - in.ref.f_star);
  }
  return out;
}

Series running_mean_eps_g(const Trace& trace) { return running_mean(trace, true); }
Series running_mean_eps_h(const Trace& trace) { return running_mean(trace, false); }

VerificationReport empirical_probability(const Series& f_gap, const Series& bound, double gamma) {
  if (f_gap.size() != bound.size()) {
    throw ConfigError("empirical_probability: series lengths differ (" + std::to_string(f_gap.size()) + " vs " +
                      std::to_string(bound.size()) + ")");
  }
  VerificationReport rep;
  rep.n = static_cast<long>(f_gap.size());
  rep.gamma = gamma;
  rep.p_lower_4 = 1.0 - 4.0 * std::exp(-gamma * gamma / 2.0);
  rep.p_lower_2 = 1.0 - 2.0 * std::exp(-gamma * gamma / 2.0);
  rep.satisfied.reserve(f_gap.size());
  long count = 0;
  for (std::size_t k = 0; k < f_gap.size(); ++k) {
    const bool ok = f_gap[k] < bound[k];
    rep.satisfied.push_back(ok);
    count += ok ? 1 : 0;
  }
  if (rep.n > 0) rep.p_empirical = static_cast<double>(count) / static_cast<double>(rep.n);
  return rep;
}

double hoeffding_sum_bound(long k, double eps0, double gamma) {
  return gamma * std::sqrt(static_cast<double>(k + 1)) * eps0 / 2.0;
}

}  // namespace wlm

#include "wlm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wlm {

namespace {

std::string describe(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void check_p3(double lambda, double lambda_block, double norm, const char* block, bool allow_boundary) {
  const double lhs = lambda * lambda_block;
  const bool ok = allow_boundary ? lhs >= norm * (1.0 - 1e-12) : lhs > norm;
  if (!ok) {
    throw NumericalError(std::string("P.3 violated for the ") + block + " block: lambda*lambda_" + block +
                         " = " + describe(lhs) + " but ||" + (block[0] == 'x' ? "A" : "B") +
                         "^T L " + (block[0] == 'x' ? "A" : "B") + "|| = " + describe(norm));
  }
}

// Stopping rule with absolute and relative feasibility tolerances; strict
// comparisons so zero tolerances never stop the run.
bool residuals_below(const ProblemSpec& pb, const PrecomputedOperators& ops, const AdmmConfig& cfg,
                     const IterationRecord& rec) {
  const double sqrt_p = std::sqrt(static_cast<double>(pb.p()));
  const double sqrt_n = std::sqrt(static_cast<double>(pb.n()));
  const double eps_pri =
      sqrt_p * cfg.abstol + cfg.reltol * std::max({(pb.A * rec.x).norm(), (pb.B * rec.z).norm(), pb.c.norm()});
  const double eps_dual = sqrt_n * cfg.abstol + cfg.reltol * (ops.AtL * rec.v).norm() / ops.lambda;
  return rec.primal_res < eps_pri && rec.dual_res < eps_dual;
}

}  // namespace

void ProblemSpec::validate() const {
  if (A.rows() != B.rows() || A.rows() != c.size()) {
    throw ConfigError("ProblemSpec: A, B and c must have the same number of rows");
  }
  if (A.cols() == 0 || B.cols() == 0) throw ConfigError("ProblemSpec: empty variable block");
  require_finite(A, "ProblemSpec.A");
  require_finite(B, "ProblemSpec.B");
  require_finite(c, "ProblemSpec.c");
  g.validate(n());
  h.validate(m());
}

Matrix AdmmConfig::weight_matrix(Eigen::Index p) const {
  if (L.size() == 0) return Matrix::Identity(p, p);
  if (L.rows() != p || L.cols() != p) throw ConfigError("AdmmConfig: L must be p x p");
  return L;
}

PrecomputedOperators precompute(const ProblemSpec& problem, const AdmmConfig& cfg) {
  problem.validate();
  if (!(cfg.lambda > 0.0) || !(cfg.lambda_x > 0.0) || !(cfg.lambda_z > 0.0)) {
    throw ConfigError("AdmmConfig: lambda, lambda_x and lambda_z must be positive");
  }
  if (cfg.max_iter < 0) throw ConfigError("AdmmConfig: max_iter must be >= 0");
  if (!(cfg.abstol >= 0.0) || !(cfg.reltol >= 0.0)) throw ConfigError("AdmmConfig: tolerances must be >= 0");

  PrecomputedOperators ops;
  ops.L = cfg.weight_matrix(problem.p());
  if (!is_symmetric(ops.L)) throw ConfigError("AdmmConfig: L must be symmetric");
  SpdSolver check_l(ops.L);  // throws NotPositiveDefinite

  ops.lambda = cfg.lambda;
  ops.lambda_x = cfg.lambda_x;
  ops.lambda_z = cfg.lambda_z;
  ops.AtL = problem.A.transpose() * ops.L;
  ops.BtL = problem.B.transpose() * ops.L;
  ops.AtLB = ops.AtL * problem.B;
  const Matrix AtLA = ops.AtL * problem.A;
  const Matrix BtLB = ops.BtL * problem.B;
  ops.norm_AtLA = spectral_norm(AtLA);
  ops.norm_BtLB = spectral_norm(BtLB);
  check_p3(cfg.lambda, cfg.lambda_x, ops.norm_AtLA, "x", cfg.allow_psd_boundary);
  check_p3(cfg.lambda, cfg.lambda_z, ops.norm_BtLB, "z", cfg.allow_psd_boundary);

  ops.Sigma1 = -AtLA / cfg.lambda;
  ops.Sigma1.diagonal().array() += cfg.lambda_x;
  ops.Sigma2 = -BtLB / cfg.lambda;
  ops.Sigma2.diagonal().array() += cfg.lambda_z;
  if (!cfg.allow_psd_boundary) {
    SpdSolver check_s1(ops.Sigma1);
    SpdSolver check_s2(ops.Sigma2);
  }
  const double s1 = spectral_norm(ops.Sigma1);
  ops.sigma1_norm_sq = s1 * s1;
  return ops;
}

WlmAdmm::WlmAdmm(ProblemSpec problem, AdmmConfig cfg, ErrorModelSpec errors, Mode mode)
    : problem_(std::move(problem)),
      cfg_(std::move(cfg)),
      errors_(std::move(errors)),
      mode_(mode),
      ops_(precompute(problem_, cfg_)),
      prox_x_(problem_.g, cfg_.lambda_x, errors_.g),
      prox_z_(problem_.h, cfg_.lambda_z, errors_.h),
      noise_(SeededRng(cfg_.seed).derive(kNoiseStream)) {
  errors_.validate();
}

IterateState WlmAdmm::initial_state() const {
  SeededRng rng = SeededRng(cfg_.seed).derive(kInitStream);
  IterateState s;
  s.x = rng.normal_vector(problem_.n());
  s.z = rng.normal_vector(problem_.m());
  s.v = Vector::Zero(problem_.p());
  return s;
}

IterationRecord WlmAdmm::step(const IterateState& state, long k) {
  const ProblemSpec& pb = problem_;
  if (state.x.size() != pb.n() || state.z.size() != pb.m() || state.v.size() != pb.p()) {
    throw ConfigError("step: state dimensions do not match the problem");
  }
  const double inv_lambda = 1.0 / ops_.lambda;
  const bool shadow = mode_ == Mode::shadow;

  auto fail = [&](const std::string& what) {
    return NumericalError("iteration " + std::to_string(k) + ": " + what);
  };

  IterationRecord rec;
  rec.k = k;
  ShadowMeasures sm;
  try {
    // x-update
    const Vector gamma1 = ops_.Sigma1 * state.x - inv_lambda * (ops_.AtL * (pb.B * state.z - pb.c + state.v));
    const Vector center_x = gamma1 / ops_.lambda_x;
    Vector exact_x;
    if (shadow || prox_x_.needs_exact()) exact_x = prox_x_.exact(center_x);
    ProxResult rx = prox_x_.apply(center_x, exact_x.size() ? &exact_x : nullptr, noise_);
    rec.x = std::move(rx.point);
    rec.inner_iterations_g = rx.inner_iterations;
    if (!rec.x.allFinite()) throw fail("non-finite x iterate");

    // z-update
    const Vector Ax = pb.A * rec.x;
    const Vector gamma2 = ops_.Sigma2 * state.z - inv_lambda * (ops_.BtL * (Ax - pb.c + state.v));
    const Vector center_z = gamma2 / ops_.lambda_z;
    Vector exact_z;
    if (shadow || prox_z_.needs_exact()) exact_z = prox_z_.exact(center_z);
    ProxResult rz = prox_z_.apply(center_z, exact_z.size() ? &exact_z : nullptr, noise_);
    rec.z = std::move(rz.point);
    rec.inner_iterations_h = rz.inner_iterations;
    if (!rec.z.allFinite()) throw fail("non-finite z iterate");

    // dual update
    const Vector Bz = pb.B * rec.z;
    const Vector primal = Ax + Bz - pb.c;
    rec.v = state.v + primal;
    rec.u = rec.v + pb.B * (state.z - rec.z);
    if (!rec.v.allFinite()) throw fail("non-finite dual iterate");

    rec.f_value = pb.objective(rec.x, rec.z);
    rec.primal_res = primal.norm();
    rec.dual_res = inv_lambda * (ops_.AtLB * (rec.z - state.z)).norm();

    if (shadow) {
      sm.r_x = exact_x - rec.x;
      sm.r_z = exact_z - rec.z;
      sm.eps_g = rx.reported_eps;
      sm.eps_h = rz.reported_eps;
      sm.rx_norm = sm.r_x.norm();
      sm.sigma1_rx_norm = (ops_.Sigma1 * sm.r_x).norm();
      sm.rz_norm = sm.r_z.norm();
      rec.shadow = std::move(sm);
    }
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    if (msg.rfind("iteration ", 0) == 0) throw;
    throw fail(msg);
  }
  return rec;
}

Trace WlmAdmm::run() { return run_from(initial_state()); }

Trace WlmAdmm::run_from(IterateState init) {
  Trace trace;
  trace.mode = mode_;
  trace.initial = std::move(init);
  trace.records.reserve(static_cast<std::size_t>(std::max<long>(cfg_.max_iter, 0)));

  IterateState state = trace.initial;
  for (long k = 0; k < cfg_.max_iter; ++k) {
    IterationRecord rec = step(state, k);
    state.x = rec.x;
    state.z = rec.z;
    state.v = rec.v;

    const bool done = residuals_below(problem_, ops_, cfg_, rec);
    trace.records.push_back(std::move(rec));
    if (done) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

Trace run(const ProblemSpec& problem, const AdmmConfig& cfg, const ErrorModelSpec& errors, Mode mode) {
  return WlmAdmm(problem, cfg, errors, mode).run();
}

ReferenceSolution reference_solution(const ProblemSpec& problem, const AdmmConfig& cfg, long min_iter) {
  AdmmConfig ref_cfg = cfg;
  ref_cfg.abstol = kMachineEpsTolerance;
  ref_cfg.reltol = kMachineEpsTolerance;
  ref_cfg.max_iter = std::max({cfg.max_iter, min_iter, kReferenceMinIterations});

  WlmAdmm solver(problem, ref_cfg, ErrorModelSpec::none(), Mode::fast);
  IterateState state = solver.initial_state();
  long iterations = 0;
  for (long k = 0; k < ref_cfg.max_iter; ++k) {
    IterationRecord rec = solver.step(state, k);
    ++iterations;
    const bool fixed_point = rec.x == state.x && rec.z == state.z && rec.v == state.v;
    const bool tight = residuals_below(problem, solver.operators(), ref_cfg, rec);
    state.x = std::move(rec.x);
    state.z = std::move(rec.z);
    state.v = std::move(rec.v);
    if (fixed_point || tight) break;
  }

  ReferenceSolution ref;
  ref.x_star = state.x;
  ref.z_star = state.z;
  ref.f_star = problem.objective(ref.x_star, ref.z_star);
  ref.iterations = iterations;
  std::ostringstream os;
  os.precision(17);
  os << "exact WLM-ADMM, lambda=" << cfg.lambda << " lambda_x=" << cfg.lambda_x << " lambda_z=" << cfg.lambda_z
     << " seed=" << cfg.seed << " iterations=" << iterations;
  ref.provenance = os.str();
  return ref;
}

}  // namespace wlm

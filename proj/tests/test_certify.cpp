#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "wlm/certify.hpp"

using namespace wlm;
using testing::Gen;

namespace {

struct Fixture {
  ProblemSpec pb;
  AdmmConfig cfg;
  PrecomputedOperators ops;
  ReferenceSolution ref;
  Trace trace;
};

Fixture lasso_run(std::uint64_t seed, long iters, double delta, long m = 25, long n = 6) {
  Gen g(seed);
  Fixture f;
  f.pb = testing::small_lasso(g, m, n);
  f.cfg = testing::unit_config(iters);
  f.cfg.seed = seed;
  f.ops = precompute(f.pb, f.cfg);
  f.ref = reference_solution(f.pb, f.cfg);
  f.trace = run(f.pb, f.cfg, ErrorModelSpec::inject(delta), Mode::shadow);
  return f;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("lhs_running") {
  Fixture f = lasso_run(51, 10, 0.3, 12, 5);
  const CertifyInput in(f.trace, f.pb, f.ops, f.ref);
  const Series lhs = lhs_running(in);
  REQUIRE(lhs.size() == 10);

  // Straight-line recomputation from the stored trace.
  const Matrix& L = f.ops.L;
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i <= k; ++i) {
      const IterationRecord& r = f.trace.records[i];
      const Vector& v_prev = i == 0 ? f.trace.initial.v : f.trace.records[i - 1].v;
      const double fi = f.pb.g.value(r.x) + f.pb.h.value(r.z) - f.ref.f_star;
      acc += fi + (L * r.u).dot(r.v - v_prev) / f.cfg.lambda;
    }
    CHECK(rel_diff(lhs[k], acc / static_cast<double>(k + 1)) <= 1e-12);
  }
  const IterationRecord& r0 = f.trace.records[0];
  CHECK(lhs[0] == doctest::Approx(r0.f_value - f.ref.f_star + r0.u.dot(r0.v - f.trace.initial.v) / f.cfg.lambda)
                      .epsilon(1e-13));

  Trace broken = f.trace;
  broken.records[3].u.resize(0);
  CHECK_THROWS_AS(lhs_running(CertifyInput(broken, f.pb, f.ops, f.ref)), ConfigError);
}

TEST_CASE("lhs_running vanishes at a fixed point") {
  Gen g(52);
  const ProblemSpec pb = testing::small_lasso(g, 25, 6);
  AdmmConfig cfg = testing::unit_config(4000);
  const PrecomputedOperators ops = precompute(pb, cfg);
  WlmAdmm solver(pb, cfg, ErrorModelSpec::none(), Mode::shadow);
  const Trace warm = solver.run();
  const IterationRecord& last = warm.records.back();
  ReferenceSolution ref{last.x, last.z, pb.objective(last.x, last.z), 0, "fixed point"};

  cfg.max_iter = 50;
  WlmAdmm again(pb, cfg, ErrorModelSpec::none(), Mode::shadow);
  const Trace at_star = again.run_from({last.x, last.z, last.v});
  const CertifyInput in(at_star, pb, ops, ref);
  for (double v : lhs_running(in)) CHECK(std::abs(v) <= 1e-10);
  const Series det = bound_deterministic(in, BoundMode::nonconvex);
  for (double v : det) CHECK(std::abs(v) <= 1e-10);
}

TEST_CASE("zero-error collapse and the O(1/k) identity") {
  Fixture f = lasso_run(53, 300, 0.0);
  const CertifyInput in(f.trace, f.pb, f.ops, f.ref);
  const Series free = bound_free(in);
  const double d0 = initial_distance(in);
  const Vector dx = f.trace.initial.x - f.ref.x_star, dz = f.trace.initial.z - f.ref.z_star;
  CHECK(d0 == doctest::Approx(dx.dot(f.ops.Sigma1 * dx) + dz.squaredNorm()).epsilon(1e-14));
  for (std::size_t k = 0; k < free.size(); ++k) {
    CHECK(std::abs(static_cast<double>(k + 1) * free[k] - d0 / 2.0) <= 1e-12 * d0);
  }
  for (BoundMode mode : {BoundMode::nonconvex, BoundMode::convex}) {
    const Series det = bound_deterministic(in, mode);
    ProbabilisticOptions po;
    po.gamma = 3.0;
    po.mode = mode;
    const Series prob = bound_probabilistic(in, po);
    for (std::size_t k = 0; k < free.size(); ++k) {
      CHECK(det[k] == free[k]);
      CHECK(prob[k] == free[k]);
      if (k > 0) CHECK(prob[k] <= prob[k - 1]);
    }
  }
}

TEST_CASE("deterministic bound on shadow runs") {
  for (std::uint64_t seed = 60; seed < 70; ++seed) {
    Fixture f = lasso_run(seed, 200, seed % 2 ? 0.2 : 0.8);
    const CertifyInput in(f.trace, f.pb, f.ops, f.ref);
    const Series lhs = lhs_running(in);
    const Series nc = bound_deterministic(in, BoundMode::nonconvex);
    const Series cv = bound_deterministic(in, BoundMode::convex);
    const Series jensen = averaged_iterate_gap(in);
    const Series gap = f_gap_series(in);
    double run_avg = 0.0;
    for (std::size_t k = 0; k < lhs.size(); ++k) {
      CHECK(lhs[k] <= nc[k]);
      CHECK(cv[k] >= nc[k] - 1e-12 * std::abs(nc[k]));
      run_avg += gap[k];
      CHECK(jensen[k] <= run_avg / static_cast<double>(k + 1) + 1e-12 * (1.0 + std::abs(run_avg)));
    }
  }
}

TEST_CASE("bound preconditions") {
  Fixture f = lasso_run(54, 20, 0.2);
  Trace fast = run(f.pb, f.cfg, ErrorModelSpec::inject(0.2), Mode::fast);
  const CertifyInput fin(fast, f.pb, f.ops, f.ref);
  CHECK_THROWS_AS(bound_deterministic(fin, BoundMode::nonconvex), ConfigError);
  CHECK_THROWS_AS(bound_probabilistic(fin, ProbabilisticOptions{}), ConfigError);
  CHECK_NOTHROW(bound_free(fin));
  CHECK_NOTHROW(lhs_running(fin));

  const CertifyInput in(f.trace, f.pb, f.ops, f.ref);
  ProbabilisticOptions po;
  po.gamma = 0.0;
  CHECK_THROWS_AS(bound_probabilistic(in, po), ConfigError);
  po.gamma = -1.0;
  CHECK_THROWS_AS(bound_probabilistic(in, po), ConfigError);

  PrecomputedOperators scaled = f.ops;
  scaled.lambda_x = 2.0;
  CHECK_THROWS_AS(CertifyInput(f.trace, f.pb, scaled, f.ref), ConfigError);
}

TEST_CASE("probabilistic bound structure") {
  Fixture f = lasso_run(55, 200, 0.3);
  const CertifyInput in(f.trace, f.pb, f.ops, f.ref);
  ProbabilisticOptions a;
  a.gamma = 1.5;
  a.eps0 = eps0_estimate(ErrorModelSpec::inject(0.3), f.trace.records);
  ProbabilisticOptions b = a;
  b.gamma = 3.0;
  ProbabilisticOptions none = a;
  none.eps0 = 0.0;
  const Series pa = bound_probabilistic(in, a), pb = bound_probabilistic(in, b), p0 = bound_probabilistic(in, none);
  for (std::size_t k = 0; k < pa.size(); ++k) {
    const double term_a = pa[k] - p0[k], term_b = pb[k] - p0[k];
    CHECK(term_b == doctest::Approx(2.0 * term_a).epsilon(1e-9));
    CHECK(term_a == doctest::Approx(1.5 * a.eps0 / std::sqrt(static_cast<double>(k + 1))).epsilon(1e-9));
    CHECK(pb[k] >= pa[k]);
  }

  // Known means replace the running means.
  ProbabilisticOptions known = none;
  known.mean_eps_g = 0.0;
  known.mean_eps_h = 0.0;
  const Series pk = bound_probabilistic(in, known);
  const Series mg = running_mean_eps_g(f.trace), mh = running_mean_eps_h(f.trace);
  for (std::size_t k = 0; k < pk.size(); ++k) CHECK(p0[k] - pk[k] == doctest::Approx(mg[k] + mh[k]).epsilon(1e-9));

  // Convex mode doubles the residual terms.
  ProbabilisticOptions cv = none;
  cv.mode = BoundMode::convex;
  const Series pc = bound_probabilistic(in, cv);
  const Series dc = bound_deterministic(in, BoundMode::convex);
  const Series fr = bound_free(in);
  for (std::size_t k = 0; k < pc.size(); ++k) {
    const double kp1 = static_cast<double>(k + 1);
    const double residual_det = (dc[k] - fr[k]) * kp1 - (mg[k] + mh[k]) * kp1;
    CHECK(pc[k] - fr[k] - mg[k] - mh[k] == doctest::Approx(2.0 * residual_det / (2.0 * kp1)).epsilon(1e-8));
  }
}

TEST_CASE("general bound") {
  Fixture f = lasso_run(56, 150, 0.4);
  const CertifyInput in(f.trace, f.pb, f.ops, f.ref);

  const Series signed_star = bound_general(in, f.ref.x_star, f.ref.z_star, true);
  const Series cs_star = bound_general(in, f.ref.x_star, f.ref.z_star, false);
  const Series det = bound_deterministic(in, BoundMode::nonconvex);
  const double d0 = initial_distance(in);
  double cum = 0.0;
  for (std::size_t k = 0; k < det.size(); ++k) {
    const IterationRecord& r = f.trace.records[k];
    cum += r.shadow->eps_g + r.shadow->eps_h;
    const double inner = -(f.ops.Sigma1 * r.shadow->r_x).dot(r.x - f.ref.x_star) - r.shadow->r_z.dot(r.z - f.ref.z_star);
    const double kp1 = static_cast<double>(k + 1);
    CHECK(rel_diff(signed_star[k], d0 / (2.0 * kp1) + (cum + inner) / kp1) <= 1e-12);
    CHECK(rel_diff(cs_star[k], det[k]) <= 1e-12);
    CHECK(signed_star[k] <= cs_star[k] + 1e-12 * std::abs(cs_star[k]));
  }

  Vector off = f.ref.x_star;
  off(0) += 1e-3;
  CHECK_THROWS_AS(bound_general(in, off, f.ref.z_star), ConfigError);
  CHECK_THROWS_AS(lhs_general(in, off, f.ref.z_star), ConfigError);
}

TEST_CASE("general bound holds for random feasible pairs") {
  long violations = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Fixture f = lasso_run(1000 + seed, 40, 0.3, 12, 5);
    Gen g(seed);
    const Vector x = g.vec(5);
    const CertifyInput in(f.trace, f.pb, f.ops, f.ref);
    const Series lhs = lhs_general(in, x, x);
    const Series rhs = bound_general(in, x, x, true);
    for (std::size_t k = 0; k < lhs.size(); ++k) violations += lhs[k] > rhs[k] + 1e-12 * std::abs(rhs[k]);
  }
  CHECK(violations == 0);
}

TEST_CASE("probabilistic check over seeds") {
  const double gamma = 3.0;
  long above = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Fixture f = lasso_run(2000 + seed, 300, 0.2);
    const CertifyInput in(f.trace, f.pb, f.ops, f.ref);
    ProbabilisticOptions po;
    po.gamma = gamma;
    po.eps0 = eps0_estimate(ErrorModelSpec::inject(0.2), f.trace.records);
    const Series lhs = lhs_running(in);
    const Series prob = bound_probabilistic(in, po);
    for (std::size_t k = 0; k < lhs.size(); ++k) above += lhs[k] > prob[k];
    total += static_cast<long>(lhs.size());
  }
  CHECK(static_cast<double>(above) / total <= 4.0 * std::exp(-gamma * gamma / 2.0) + 0.02);
}

TEST_CASE("empirical_probability") {
  const Series gap{1.0, -2.0, 3.0, 0.5};
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(*empirical_probability(gap, Series(4, inf), 1.0).p_empirical == 1.0);
  CHECK(*empirical_probability(gap, Series(4, -inf), 1.0).p_empirical == 0.0);
  const VerificationReport r = empirical_probability(gap, Series{2.0, -2.0, 4.0, 0.0}, 2.0);
  CHECK(*r.p_empirical == 0.5);
  CHECK(r.n == 4);
  CHECK(r.satisfied == std::vector<bool>{true, false, true, false});
  CHECK(r.p_lower_4 == doctest::Approx(1.0 - 4.0 * std::exp(-2.0)));
  CHECK(r.p_lower_2 == doctest::Approx(1.0 - 2.0 * std::exp(-2.0)));
  CHECK_FALSE(empirical_probability({}, {}, 1.0).p_empirical.has_value());
  CHECK_THROWS_AS(empirical_probability(gap, Series(3, 0.0), 1.0), ConfigError);
  CHECK(gamma_two_sqrt_log2() == doctest::Approx(1.6651).epsilon(1e-4));
  CHECK(gamma_twenty_sqrt_log2() == doctest::Approx(16.651).epsilon(1e-4));
  CHECK(1.0 - 4.0 * std::exp(-std::pow(gamma_two_sqrt_log2(), 2) / 2.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hoeffding_sum_bound") {
  CHECK(hoeffding_sum_bound(10, 0.0, 2.0) == 0.0);
  CHECK(hoeffding_sum_bound(3, 1.0, 2.0) == doctest::Approx(2.0).epsilon(1e-15));

  // Monte-Carlo frequency of the one-sided excess.
  std::mt19937_64 eng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const long k = 49;
  const double eps0 = 1.0, mean = 0.5;
  for (double gamma : {1.0, 2.0, 3.0}) {
    long exceed = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
      double s = 0.0;
      for (long i = 0; i <= k; ++i) s += eps0 * u(eng);
      exceed += s > (k + 1) * mean + hoeffding_sum_bound(k, eps0, gamma);
    }
    CHECK(static_cast<double>(exceed) / trials <= 2.0 * std::exp(-gamma * gamma / 2.0) + 0.01);
  }
}

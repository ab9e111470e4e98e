#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "oracles.hpp"
#include "wlm/bench.hpp"

using namespace wlm;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small(Experiment e) {
  ExperimentConfig c = e == Experiment::lasso ? ExperimentConfig::lasso_defaults() : ExperimentConfig::ksupp_defaults();
  c.m = 40;
  c.n = 10;
  c.k_supp = 3;
  c.iters = 120;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "wlm_bench_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("defaults") {
  const ExperimentConfig l = ExperimentConfig::lasso_defaults();
  CHECK(l.m == 500);
  CHECK(l.n == 100);
  CHECK(l.iters == 3000);
  CHECK(l.gamma == doctest::Approx(16.651).epsilon(1e-4));
  CHECK(l.abstol == 1e-6);
  const ExperimentConfig k = ExperimentConfig::ksupp_defaults();
  CHECK(k.k_supp == 20);
  CHECK(k.lambda_reg == 1.0);
  CHECK(k.abstol == kMachineEpsTolerance);
  CHECK(k.reltol == kMachineEpsTolerance);
  CHECK(k.gamma == doctest::Approx(1.6651).epsilon(1e-4));
}

TEST_CASE("gen_lasso") {
  const ProblemSpec a = gen_lasso(50, 8, 3), b = gen_lasso(50, 8, 3), c = gen_lasso(50, 8, 4);
  CHECK((a.A - Matrix::Identity(8, 8)).norm() == 0.0);
  CHECK((a.B + Matrix::Identity(8, 8)).norm() == 0.0);
  CHECK(a.c.norm() == 0.0);
  const auto& qa = std::get<QuadraticLS>(a.g.kind);
  const auto& qb = std::get<QuadraticLS>(b.g.kind);
  CHECK((qa.A - qb.A).norm() == 0.0);
  CHECK((qa.b - qb.b).norm() == 0.0);
  CHECK((qa.A - std::get<QuadraticLS>(c.g.kind).A).norm() > 0.0);
  CHECK(oracle::spectral_norm_svd(qa.A) == doctest::Approx(1.0 / (1.0 + kDataScaleMargin)).epsilon(1e-8));
  CHECK(std::get<L1>(a.h.kind).weight == 1.0);

  ExperimentConfig cfg = small(Experiment::lasso);
  const ProblemSpec pb = build_problem(cfg);
  const AdmmConfig admm = build_admm_config(cfg, pb);
  CHECK(admm.lambda == doctest::Approx(1.05).epsilon(1e-9));
  CHECK_NOTHROW(precompute(pb, admm));
  cfg.rho = 1.2;
  CHECK_THROWS_AS(precompute(pb, build_admm_config(cfg, pb)), NumericalError);
  CHECK_THROWS_AS(gen_lasso(0, 3, 1), ConfigError);
}

TEST_CASE("gen_ksupp") {
  const ProblemSpec a = gen_ksupp(50, 8, 3, 1.0, 2), b = gen_ksupp(50, 8, 3, 1.0, 2);
  const auto& la = std::get<L1Affine>(a.g.kind);
  CHECK(la.weight == 0.5);
  CHECK((la.A - std::get<L1Affine>(b.g.kind).A).norm() == 0.0);
  CHECK(std::get<KSupportSq>(a.h.kind).k == 3);
  CHECK_THROWS_AS(gen_ksupp(50, 8, 0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(gen_ksupp(50, 8, 9, 1.0, 2), ConfigError);

  // k_supp = n: ridge term.
  const ProblemSpec r = gen_ksupp(20, 5, 5, 2.0, 1);
  testing::Gen g(3);
  const Vector z = g.vec(5);
  CHECK(r.h.value(z) == doctest::Approx(z.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("run_experiment report") {
  ExperimentConfig cfg = small(Experiment::lasso);
  const RunReport rep = run_experiment(cfg);
  REQUIRE(rep.rows.size() == static_cast<std::size_t>(rep.summary.n));
  CHECK(rep.summary.n == 120);
  CHECK(rep.summary.p_empirical == recompute_p(rep.rows));
  CHECK(rep.summary.lambda == doctest::Approx(1.05).epsilon(1e-9));
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    CHECK(rep.rows[k].k == static_cast<long>(k));
    CHECK(rep.rows[k].bound_prob >= rep.rows[k].bound_free);
  }

  cfg.rho = 1.2;
  try {
    run_experiment(cfg);
    FAIL("expected a P.3 failure");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).rfind("reference: P.3", 0) == 0);
  }
  cfg.rho.reset();
  cfg.k_supp = 0;
  cfg.experiment = Experiment::ksupp;
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("exact k-support regime: probabilistic and error-free bounds coincide") {
  ExperimentConfig cfg = small(Experiment::ksupp);
  cfg.skip = 1;
  cfg.inner_tol = kReferenceInnerTol;
  cfg.iters = 300;
  const RunReport rep = run_experiment(cfg);
  for (const ReportRow& r : rep.rows) {
    CHECK(std::abs(r.bound_prob - r.bound_free) <= 1e-10);
    CHECK(r.f_gap <= r.bound_det);
  }
}

TEST_CASE("reports: formats, round trip, determinism") {
  ExperimentConfig cfg = small(Experiment::ksupp);
  cfg.skip = 2;
  const RunReport a = run_experiment(cfg);
  const RunReport b = run_experiment(cfg);

  const auto files_a = write_report(a, scratch("a"), ReportFormat::both);
  const auto files_b = write_report(b, scratch("b"), ReportFormat::both);
  REQUIRE(files_a.size() == 2);
  CHECK(slurp(files_a[0]) == slurp(files_b[0]));
  CHECK(slurp(files_a[1]) == slurp(files_b[1]));

  const std::string csv = slurp(files_a[0]);
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  const auto rows = read_csv_rows(files_a[0]);
  REQUIRE(rows.size() == a.rows.size());
  CHECK(recompute_p(rows) == a.summary.p_empirical);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(rows[k].f_gap == a.rows[k].f_gap);
    CHECK(rows[k].bound_prob == a.rows[k].bound_prob);
    CHECK(rows[k].dual_res == a.rows[k].dual_res);
  }

  const auto doc = nlohmann::json::parse(slurp(files_a[1]));
  CHECK(doc.at("config").at("experiment") == "ksupp");
  CHECK(doc.at("config").at("skip") == 2);
  CHECK(doc.at("rows").size() == a.rows.size());
  CHECK(doc.at("summary").at("p_empirical").get<double>() == *a.summary.p_empirical);
  CHECK(doc.at("summary").at("N") == a.summary.n);

  CHECK_THROWS_AS(write_report(a, fs::path("/nonexistent-dir/x.csv"), ReportFormat::csv), ConfigError);
  CHECK_THROWS_AS(read_csv_rows(scratch("missing.csv")), ConfigError);
}

TEST_CASE("empty run") {
  ExperimentConfig cfg = small(Experiment::lasso);
  cfg.iters = 0;
  const RunReport rep = run_experiment(cfg);
  CHECK(rep.rows.empty());
  CHECK(rep.summary.n == 0);
  CHECK_FALSE(rep.summary.p_empirical.has_value());
  CHECK(format_csv(rep) == std::string(kCsvHeader) + "\n");
  const auto doc = nlohmann::json::parse(format_json(rep));
  CHECK(doc.at("summary").at("p_empirical").is_null());
  CHECK(doc.at("summary").at("N") == 0);
  const fs::path p = scratch("empty.csv");
  write_report(rep, p, ReportFormat::csv);
  CHECK(read_csv_rows(p).empty());
  CHECK_FALSE(recompute_p({}).has_value());
}

TEST_CASE("malformed CSV") {
  const fs::path p = scratch("bad.csv");
  {
    std::ofstream f(p);
    f << kCsvHeader << "\n0,1,2,3\n";
  }
  CHECK_THROWS_AS(read_csv_rows(p), ConfigError);
  {
    std::ofstream f(p);
    f << "k,f\n";
  }
  CHECK_THROWS_AS(read_csv_rows(p), ConfigError);
}

#include "wlm/bench.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace wlm {

namespace {

using json = nlohmann::ordered_json;

// Runs fn, prefixing any library error with the protocol stage it came from.
template <class Fn>
auto staged(const char* stage, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = std::string(stage) + ": ";
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(prefix + e.what());
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(prefix + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(prefix + e.what());
  }
}

Matrix scaled_gaussian(SeededRng& rng, long m, long n) {
  Matrix A = rng.normal_matrix(m, n);
  A /= spectral_norm(A) * (1.0 + kDataScaleMargin);
  return A;
}

void check_dims(long m, long n) {
  if (m < 1 || n < 1) throw ConfigError("dimensions m and n must be positive");
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
  out.append(buf, res.ptr);
}

double parse_number(std::string_view field, long line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ConfigError("CSV line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  }
  return v;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

const char* experiment_name(Experiment e) { return e == Experiment::ksupp ? "ksupp" : "lasso"; }

ExperimentConfig ExperimentConfig::lasso_defaults() {
  ExperimentConfig c;
  c.experiment = Experiment::lasso;
  c.gamma = gamma_twenty_sqrt_log2();
  return c;
}

ExperimentConfig ExperimentConfig::ksupp_defaults() {
  ExperimentConfig c;
  c.experiment = Experiment::ksupp;
  c.gamma = gamma_two_sqrt_log2();
  c.abstol = kMachineEpsTolerance;
  c.reltol = kMachineEpsTolerance;
  return c;
}

void ExperimentConfig::validate() const {
  check_dims(m, n);
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ConfigError("delta must be finite and >= 0");
  if (skip < 1) throw ConfigError("skip must be >= 1");
  if (!(inner_tol > 0.0)) throw ConfigError("inner_tol must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
  if (iters < 0) throw ConfigError("iters must be >= 0");
  if (!(abstol >= 0.0) || !(reltol >= 0.0)) throw ConfigError("abstol and reltol must be >= 0");
  if (experiment == Experiment::ksupp && (k_supp < 1 || k_supp > n)) {
    throw ConfigError("k_supp must lie in [1, n]");
  }
  if (!(lambda_reg > 0.0)) throw ConfigError("lambda_reg must be positive");
  if (rho && !(*rho > 0.0)) throw ConfigError("rho must be positive");
}

ProblemSpec gen_lasso(long m, long n, std::uint64_t seed) {
  check_dims(m, n);
  SeededRng rng = SeededRng(seed).derive(kDataStream);
  Matrix A = scaled_gaussian(rng, m, n);
  Vector b = rng.normal_vector(m);
  ProblemSpec pb{make_quadratic_ls(std::move(A), std::move(b)), make_l1(1.0), Matrix::Identity(n, n),
                 -Matrix::Identity(n, n), Vector::Zero(n)};
  pb.validate();
  return pb;
}

ProblemSpec gen_ksupp(long m, long n, int k_supp, double lambda_reg, std::uint64_t seed) {
  check_dims(m, n);
  if (k_supp < 1 || k_supp > n) throw ConfigError("k_supp must lie in [1, n]");
  SeededRng rng = SeededRng(seed).derive(kDataStream);
  Matrix A = scaled_gaussian(rng, m, n);
  Vector b = rng.normal_vector(m);
  ProblemSpec pb{make_l1_affine(std::move(A), std::move(b), 0.5), make_ksupport_sq(k_supp, lambda_reg),
                 Matrix::Identity(n, n), -Matrix::Identity(n, n), Vector::Zero(n)};
  pb.validate();
  return pb;
}

ProblemSpec build_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment == Experiment::lasso) return gen_lasso(cfg.m, cfg.n, cfg.seed);
  return gen_ksupp(cfg.m, cfg.n, cfg.k_supp, cfg.lambda_reg, cfg.seed);
}

ErrorModelSpec build_error_model(const ExperimentConfig& cfg) {
  if (cfg.experiment == Experiment::lasso) return ErrorModelSpec::inject(cfg.delta);
  return ErrorModelSpec::ksupport(cfg.skip, cfg.inner_tol);
}

AdmmConfig build_admm_config(const ExperimentConfig& cfg, const ProblemSpec& problem) {
  AdmmConfig a;
  a.lambda_x = 1.0;
  a.lambda_z = 1.0;
  a.abstol = cfg.abstol;
  a.reltol = cfg.reltol;
  a.max_iter = cfg.iters;
  a.seed = cfg.seed;
  if (cfg.rho) {
    a.lambda = 1.0 / *cfg.rho;
  } else {
    const double na = spectral_norm(problem.A.transpose() * problem.A);
    const double nb = spectral_norm(problem.B.transpose() * problem.B);
    a.lambda = (1.0 + kPenaltyMargin) * std::max(na, nb);
  }
  return a;
}

ReferenceSolution experiment_reference(const ExperimentConfig& cfg) {
  const ProblemSpec pb = staged("config", [&] { return build_problem(cfg); });
  const AdmmConfig admm = staged("config", [&] { return build_admm_config(cfg, pb); });
  return staged("reference", [&] { return reference_solution(pb, admm); });
}

RunReport run_experiment(const ExperimentConfig& cfg, const ReferenceSolution* reference, Trace* trace_out) {
  const ProblemSpec pb = staged("config", [&] { return build_problem(cfg); });
  const AdmmConfig admm = staged("config", [&] { return build_admm_config(cfg, pb); });
  const ErrorModelSpec errors = build_error_model(cfg);

  ReferenceSolution own_ref;
  if (reference == nullptr) {
    own_ref = staged("reference", [&] { return reference_solution(pb, admm); });
    reference = &own_ref;
  }

  WlmAdmm solver = staged("run", [&] { return WlmAdmm(pb, admm, errors, Mode::shadow); });
  Trace trace = staged("run", [&] { return solver.run(); });

  RunReport report;
  report.config = cfg;
  staged("certify", [&] {
    const CertifyInput in(trace, pb, solver.operators(), *reference);
    const Series gap = f_gap_series(in);
    const Series lhs = lhs_running(in);
    const Series free = bound_free(in);
    const Series det = bound_deterministic(in, cfg.bound_mode);
    ProbabilisticOptions po;
    po.gamma = cfg.gamma;
    po.eps0 = eps0_estimate(errors, trace.records);
    po.mode = cfg.bound_mode;
    const Series prob = bound_probabilistic(in, po);
    const VerificationReport vr = empirical_probability(gap, prob, cfg.gamma);

    report.rows.resize(trace.records.size());
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
      const IterationRecord& rec = trace.records[k];
      ReportRow& row = report.rows[k];
      row.k = rec.k;
      row.f_gap = gap[k];
      row.lhs_avg = lhs[k];
      row.bound_free = free[k];
      row.bound_det = det[k];
      row.bound_prob = prob[k];
      row.eps_g = rec.shadow->eps_g;
      row.eps_h = rec.shadow->eps_h;
      row.primal_res = rec.primal_res;
      row.dual_res = rec.dual_res;
    }
    ReportSummary& s = report.summary;
    s.n = vr.n;
    s.p_empirical = vr.p_empirical;
    s.p_lower_4 = vr.p_lower_4;
    s.p_lower_2 = vr.p_lower_2;
    s.eps0 = po.eps0;
    s.d0 = initial_distance(in);
    s.f_star = reference->f_star;
    s.lambda = admm.lambda;
    s.converged = trace.converged;
    s.reference_iterations = reference->iterations;
  });
  if (trace_out != nullptr) *trace_out = std::move(trace);
  return report;
}

std::string format_csv(const RunReport& report) {
  std::string out = kCsvHeader;
  out += '\n';
  out.reserve(report.rows.size() * 240);
  for (const ReportRow& r : report.rows) {
    out += std::to_string(r.k);
    for (double v : {r.f_gap, r.lhs_avg, r.bound_free, r.bound_det, r.bound_prob, r.eps_g, r.eps_h, r.primal_res,
                     r.dual_res}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

std::string format_json(const RunReport& report) {
  const ExperimentConfig& c = report.config;
  json config = {
      {"experiment", experiment_name(c.experiment)},
      {"m", c.m},
      {"n", c.n},
      {"delta", c.delta},
      {"skip", c.skip},
      {"inner_tol", c.inner_tol},
      {"gamma", c.gamma},
      {"iters", c.iters},
      {"seed", c.seed},
      {"abstol", c.abstol},
      {"reltol", c.reltol},
      {"k_supp", c.k_supp},
      {"lambda_reg", c.lambda_reg},
      {"rho", c.rho ? json(*c.rho) : json(nullptr)},
      {"lambda", report.summary.lambda},
      {"lambda_x", 1.0},
      {"lambda_z", 1.0},
      {"L", "identity"},
      {"bound_mode", mode_name(c.bound_mode)},
      {"data", "A ~ N(0,1) / (||A|| (1 + " + std::to_string(kDataScaleMargin) + ")), b ~ N(0,1)"},
  };

  json rows = json::array();
  for (const ReportRow& r : report.rows) {
    rows.push_back({{"k", r.k},
                    {"f_gap", number_or_null(r.f_gap)},
                    {"lhs_avg", number_or_null(r.lhs_avg)},
                    {"bound_free", number_or_null(r.bound_free)},
                    {"bound_det", number_or_null(r.bound_det)},
                    {"bound_prob", number_or_null(r.bound_prob)},
                    {"eps_g", number_or_null(r.eps_g)},
                    {"eps_h", number_or_null(r.eps_h)},
                    {"primal_res", number_or_null(r.primal_res)},
                    {"dual_res", number_or_null(r.dual_res)}});
  }

  const ReportSummary& s = report.summary;
  json summary = {
      {"N", s.n},
      {"p_empirical", s.p_empirical ? json(*s.p_empirical) : json(nullptr)},
      {"p_lower_4", s.p_lower_4},
      {"p_lower_2", s.p_lower_2},
      {"eps0", s.eps0},
      {"eps0_source", "empirical"},
      {"D0", s.d0},
      {"f_star", s.f_star},
      {"converged", s.converged},
      {"reference_iterations", s.reference_iterations},
  };

  json doc = {{"config", std::move(config)}, {"rows", std::move(rows)}, {"summary", std::move(summary)}};
  return doc.dump(1) + "\n";
}

std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& path,
                                                ReportFormat format) {
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + p.string() + " for writing");
    f << text;
    f.close();
    if (!f) throw ConfigError("failed writing " + p.string());
  };
  std::vector<std::filesystem::path> written;
  switch (format) {
    case ReportFormat::csv:
      write(path, format_csv(report));
      written.push_back(path);
      break;
    case ReportFormat::json:
      write(path, format_json(report));
      written.push_back(path);
      break;
    case ReportFormat::both: {
      std::filesystem::path csv = path, js = path;
      csv.replace_extension(".csv");
      js.replace_extension(".json");
      write(csv, format_csv(report));
      write(js, format_json(report));
      written = {csv, js};
      break;
    }
  }
  return written;
}

std::vector<ReportRow> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kCsvHeader) {
    throw ConfigError(path.string() + ": missing or unexpected CSV header");
  }
  std::vector<ReportRow> rows;
  long lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1)) {
      fields.push_back(rest.substr(0, pos));
    }
    fields.push_back(rest);
    if (fields.size() != 10) throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 10 fields");
    ReportRow r;
    r.k = static_cast<long>(parse_number(fields[0], lineno));
    r.f_gap = parse_number(fields[1], lineno);
    r.lhs_avg = parse_number(fields[2], lineno);
    r.bound_free = parse_number(fields[3], lineno);
    r.bound_det = parse_number(fields[4], lineno);
    r.bound_prob = parse_number(fields[5], lineno);
    r.eps_g = parse_number(fields[6], lineno);
    r.eps_h = parse_number(fields[7], lineno);
    r.primal_res = parse_number(fields[8], lineno);
    r.dual_res = parse_number(fields[9], lineno);
    rows.push_back(r);
  }
  return rows;
}

std::optional<double> recompute_p(const std::vector<ReportRow>& rows) {
  if (rows.empty()) return std::nullopt;
  long count = 0;
  for (const ReportRow& r : rows) count += r.f_gap < r.bound_prob ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(rows.size());
}

}  // namespace wlm

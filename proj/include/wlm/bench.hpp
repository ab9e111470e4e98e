#ifndef WLM_BENCH_HPP_
#define WLM_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wlm/certify.hpp"
#include "wlm/engine.hpp"

namespace wlm {

enum class Experiment { lasso, ksupp };

const char* experiment_name(Experiment e);

// Standard-normal data matrices are divided by ||A|| (1 + margin).
inline constexpr double kDataScaleMargin = 0.05;
// Automatic lambda = (1 + margin) max(||A^T L A||, ||B^T L B||) when no rho is given.
inline constexpr double kPenaltyMargin = 0.05;
inline constexpr std::uint64_t kDataStream = 1;

struct ExperimentConfig {
  Experiment experiment = Experiment::lasso;
  long m = 500;
  long n = 100;
  double delta = 0.2;       // lasso injection level
  int skip = 1;             // ksupp perforation stride
  double inner_tol = 1e-8;  // ksupp affine-l1 inner tolerance
  double gamma = 0.0;
  long iters = 3000;
  std::uint64_t seed = 1;
  double abstol = 1e-6;
  double reltol = 1e-6;
  int k_supp = 20;
  double lambda_reg = 1.0;
  std::optional<double> rho;  // lambda = 1 / rho; automatic when empty
  BoundMode bound_mode = BoundMode::nonconvex;

  static ExperimentConfig lasso_defaults();
  static ExperimentConfig ksupp_defaults();

  void validate() const;
};

/// minimize ||A x - b||^2 + ||z||_1  s.t.  x - z = 0.
ProblemSpec gen_lasso(long m, long n, std::uint64_t seed);

/// minimize 1/2 ||A x - b||_1 + (lambda_reg / 2) (||z||_k^sp)^2  s.t.  x - z = 0.
ProblemSpec gen_ksupp(long m, long n, int k_supp, double lambda_reg, std::uint64_t seed);

ProblemSpec build_problem(const ExperimentConfig& cfg);
ErrorModelSpec build_error_model(const ExperimentConfig& cfg);
AdmmConfig build_admm_config(const ExperimentConfig& cfg, const ProblemSpec& problem);

struct ReportRow {
  long k = 0;
  double f_gap = 0.0;
  double lhs_avg = 0.0;
  double bound_free = 0.0;
  double bound_det = 0.0;
  double bound_prob = 0.0;
  double eps_g = 0.0;
  double eps_h = 0.0;
  double primal_res = 0.0;
  double dual_res = 0.0;
};

struct ReportSummary {
  long n = 0;
  std::optional<double> p_empirical;
  double p_lower_4 = 0.0;
  double p_lower_2 = 0.0;
  double eps0 = 0.0;
  double d0 = 0.0;
  double f_star = 0.0;
  double lambda = 0.0;
  bool converged = false;
  long reference_iterations = 0;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  ReportSummary summary;
};

/// Full protocol: reference solution, shadow-mode run, bounds, empirical
/// probability. `reference` may be supplied to reuse one reference across
/// runs on the same instance. `trace_out`, if given, receives the shadow
/// trace. Errors carry a stage label.
RunReport run_experiment(const ExperimentConfig& cfg, const ReferenceSolution* reference = nullptr,
                         Trace* trace_out = nullptr);

/// The reference solution run_experiment would compute for `cfg`.
ReferenceSolution experiment_reference(const ExperimentConfig& cfg);

enum class ReportFormat { csv, json, both };

inline constexpr const char* kCsvHeader =
    "k,f_gap,lhs_avg,bound_free,bound_det,bound_prob,eps_g,eps_h,primal_res,dual_res";

std::string format_csv(const RunReport& report);
std::string format_json(const RunReport& report);

/// Writes `path` (csv or json); with `both`, writes path.csv and path.json.
/// Returns the files written.
std::vector<std::filesystem::path> write_report(const RunReport& report, const std::filesystem::path& path,
                                                ReportFormat format);

std::vector<ReportRow> read_csv_rows(const std::filesystem::path& path);

/// #{rows : f_gap < bound_prob} / rows, or nullopt for an empty report.
std::optional<double> recompute_p(const std::vector<ReportRow>& rows);

}  // namespace wlm

#endif  // WLM_BENCH_HPP_

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrw/cocycles.hpp"
#include "lrw/estimators.hpp"
#include "lrw/martcouple.hpp"
#include "lrw/parallel.hpp"

namespace lrw {

enum class ExperimentKind { simulate, lyapunov, sigma, clt_rate, asip, contraction, fiber, fuk_nagaev, cocycle_check };

ExperimentKind parse_experiment(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::lyapunov;
  std::string measure;     // measure file (walk experiments)
  std::string martingale;  // martingale file; empty means Rademacher
  CocycleKind cocycle = CocycleKind::norm_proj;
  std::vector<long> n{1000};
  long replicates = 100;
  std::uint64_t seed = 1;
  double p = 3.0;
  AsipMode mode = AsipMode::l1_item2;
  long burnin = 1000;
  std::string out = ".";
  int workers = 0;  // 0: OpenMP default; results do not depend on it
};

/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& c);
/// Canonical JSON of every field except `workers`.
std::string canonical_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const std::string& text, ExperimentConfig base = {});
/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

struct RunOutputs {
  std::string csv;
  std::string summary;
  std::string manifest;
  std::vector<std::string> extra;
};

/// Writes <exp>_<seed>.csv (first line "#schema=lrw.<exp>.v1"),
/// <exp>_<seed>.json and <exp>_<seed>.manifest.json into c.out. Every file
/// written so far is removed if the run throws.
RunOutputs run_experiment(const ExperimentConfig& c);

struct RateFit {
  double slope;
  double intercept;
  double r2;
  std::vector<std::pair<double, double>> points;  // (log x, log y)
};
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);
/// Reads a CSV written by run_experiment (lines starting with '#' skipped,
/// first remaining line is the header).
RateFit fit_rate_csv(const std::string& path, const std::string& xcol, const std::string& ycol);

// ---------------------------------------------------------------- kernels shared with tests

struct CltRatePoint {
  long n;
  double w1;
};
struct CltRateResult {
  std::vector<CltRatePoint> points;
  Vector lambda_hat;
  Matrix sigma_hat;
  RateFit fit;
  std::string method;  // "w1_1d_gaussian" or "w1_exact"
};
/// W1(n^{-1/2}(S_n - n lambda_hat), N(0, Sigma_hat)) over the grid. lambda_hat is the
/// pooled increment mean at the largest n; Sigma_hat comes from batch
/// means (16 batches per replicate) of the same replicates.
CltRateResult clt_rate(const AtomicMeasure& mu, CocycleKind kind, const std::vector<long>& grid, long replicates,
                       long burnin, std::uint64_t seed, Exec exec = Exec::parallel);

/// One ASIP coupling run per replicate; coupling streams for replicate r
/// are keyed by mix64(seed) + r.
std::vector<AsipDeviation> asip_runs(const DrivenMartingale& mart, long n, double p, AsipMode mode, long replicates,
                                     std::uint64_t seed, Exec exec = Exec::parallel);

/// gap[i][r] = max_j |sigma_iw(A_n, eta)_j - kappa(A_n)_j| at n = grid[i],
/// replicate r, eta the identity flag.
std::vector<std::vector<double>> iwasawa_cartan_gap(const AtomicMeasure& mu, const std::vector<long>& grid,
                                                    long replicates, std::uint64_t seed, Exec exec = Exec::parallel);

/// Running maxima of `replicates` martingale paths of length n.
std::vector<double> running_maxima(const DrivenMartingale& mart, long n, long replicates, std::uint64_t seed,
                                   Exec exec = Exec::parallel);

std::string format_double(double x);

}  // namespace lrw

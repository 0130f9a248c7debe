#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrw/cocycles.hpp"
#include "lrw/parallel.hpp"

namespace lrw {

/// Follows one left walk A_k = Y_k...Y_1 started at a point and returns the
/// cocycle increment sigma(Y_k, A_{k-1} x) at each step (kappa(A_k) -
/// kappa(A_{k-1}) for the Cartan kind, where the start point is ignored).
class CocycleWalker {
 public:
  /// Start at the base point: e_1 (norm) or the identity flag.
  CocycleWalker(CocycleKind kind, int d);
  CocycleWalker(CocycleKind kind, const Flag& start);

  Vector step(const Matrix& g);
  /// Output dimension: 1 for the norm cocycle, d otherwise.
  int out_dim() const { return kind_ == CocycleKind::norm_proj ? 1 : d_; }
  const FactoredProduct& product() const { return fp_; }

 private:
  CocycleKind kind_;
  int d_;
  FactoredProduct fp_;
  Vector x_;
  Vector prev_;
};

/// Start point for replicate r: base point when burnin == 0, else a uniform
/// point (stream (seed, 3, r)) pushed through `burnin` steps (stream
/// (seed, 4, r)). The main steps then come from RngStream(seed, r).
CocycleWalker make_walker(const AtomicMeasure& mu, CocycleKind kind, long burnin, std::uint64_t seed,
                          std::uint64_t replicate);

struct LyapunovEstimate {
  Vector lambda_hat;
  Vector stderr_;
  long n;
  long replicates;
  long burnin;
};
LyapunovEstimate lyapunov(const AtomicMeasure& mu, CocycleKind kind, long n, long replicates, long burnin,
                          std::uint64_t seed, Exec exec = Exec::parallel);

enum class CovMethod { series, batch_means };

struct CovarianceTerm {
  long k;        // 0 is the variance term
  Matrix value;  // C_k (not symmetrized)
  Matrix stderr_;
};

struct CovarianceEstimate {
  Matrix sigma_hat;
  Matrix stderr_;
  CovMethod method;
  long truncation;  // terms used (series) or batch count (batch means)
  bool clipped = false;
  std::vector<CovarianceTerm> terms;
  std::vector<std::string> warnings;
};

CovarianceEstimate sigma_series(const AtomicMeasure& mu, CocycleKind kind, long K, long trials, long burnin,
                                std::uint64_t seed, Exec exec = Exec::parallel);

/// Each path is a d x len matrix of increments. Batch means are centered at
/// the pooled mean, so uncentered input is accepted.
CovarianceEstimate sigma_batch_means(const std::vector<Matrix>& paths, long batch_len);

/// Same estimator from per-batch sums (each over batch_len steps).
CovarianceEstimate sigma_from_batch_sums(const std::vector<Vector>& sums, long batch_len);

/// Clips eigenvalues below -1e-8 to zero; returns true if anything changed.
bool clip_to_psd(Matrix& s);

struct ReducedCovariance {
  Matrix a;
  int m;
  Vector eigvals;  // nonincreasing
  bool zero;       // m == 0: nothing to reduce
};
ReducedCovariance covariance_reduction(const Matrix& sigma);

/// int_0^1 max(1, Phi^{-1}(1 - u/2))^{p-2} Q(u) du for the empirical
/// quantile function Q of |samples|, evaluated exactly per step.
double envelope_norm(const std::vector<double>& samples, double p);

/// Integral of the weight over [a, b] within [0, 1].
double envelope_weight_integral(double a, double b, double p);

}  // namespace lrw

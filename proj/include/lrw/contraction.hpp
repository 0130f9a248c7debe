#pragma once

#include <cstdint>
#include <vector>

#include "lrw/cocycles.hpp"
#include "lrw/parallel.hpp"

namespace lrw {

/// Pair of lines tracked under a left walk without losing the distance to
/// cancellation: the second vector is kept as c*q1 + exp(l)*q2 in an
/// orthonormal frame (q1, q2), both vectors unit.
class LinePairTracker {
 public:
  LinePairTracker(const Vector& x, const Vector& y);
  void apply(const Matrix& g);
  /// log of the sine distance; exact down to any magnitude.
  double log_dist() const { return log_beta_; }
  const Vector& first() const { return q1_; }

 private:
  Vector q1_, q2_;
  double c_;
  double log_beta_;
};

/// max over sampled close pairs of the mean (over `trials` draws of a
/// mu^{*n0} product) of log(d(gx, gy) / d(x, y)), single-pair log ratios
/// clipped at -700.
struct IndexEstimate {
  double index;
  long pairs_used;
  long pairs_skipped;  // d(x, y) < 1e-12
  bool clipped;
};
IndexEstimate contraction_index(const AtomicMeasure& mu, int n0, long pairs, long trials, std::uint64_t seed,
                                Exec exec = Exec::parallel);

struct DecayCurve {
  std::vector<double> median_log_dist;  // index k-1 holds step k
  double slope;
  double delta_hat;  // max(0, -slope)
  double p_value;    // one-sided permutation test of slope < 0
  bool saturated;    // some distance fell below 1e-300 (projective) or the fp floor (flags)
  long fit_from;     // first step of the fitted window
};
DecayCurve proximality_decay(const AtomicMeasure& mu, const ProjPoint& x, const ProjPoint& y, long n,
                             long replicates, std::uint64_t seed, Exec exec = Exec::parallel);
DecayCurve proximality_decay(const AtomicMeasure& mu, const Flag& x, const Flag& y, long n, long replicates,
                             std::uint64_t seed, Exec exec = Exec::parallel);

/// Least-squares slope of v against step index k = first+i, plus the
/// one-sided permutation p-value (999 permutations, fixed stream).
std::pair<double, double> slope_with_permutation_test(const std::vector<double>& v, long first,
                                                      std::uint64_t seed);

struct CouplingEstimate {
  double value;
  double stderr_;
  long pair_index;  // worst sampled pair
};
/// E|sigma(Y_k, A_{k-1}x) - sigma(Y_k, A_{k-1}y)|^q at the worst of
/// `candidate_pairs` sampled same-fiber pairs. Trials use common random
/// numbers across k.
CouplingEstimate coupling_coefficient(const AtomicMeasure& mu, CocycleKind kind, long k, double q, long trials,
                                      std::uint64_t seed, long candidate_pairs = 8, Exec exec = Exec::parallel);

struct FiberOccupation {
  double plus;
  double minus;
  long observations;
};
FiberOccupation fiber_occupation(const AtomicMeasure& mu, const Flag& x, long n, std::uint64_t seed);

}  // namespace lrw

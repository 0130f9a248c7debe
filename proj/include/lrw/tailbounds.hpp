#pragma once

#include <vector>

namespace lrw {

struct FukNagaevParams {
  long n;
  double sigma;
  double p;
  double c_p;
};

struct FukNagaevBound {
  double first;   // 7 2^(2p-1/2) (n s^2/x^2)^(p+1/2) exp(-x^2/(8 n s^2))
  double second;  // c_p n x^-p
  double raw;     // first + second
  double value;   // raw clamped to [0, 1]
};

void validate(const FukNagaevParams& params);
FukNagaevBound fuk_nagaev_bound(const FukNagaevParams& params, double x);

struct Wilson {
  double lo;
  double hi;
};
/// 95% Wilson score interval for k successes out of n.
Wilson wilson_interval(long k, long n);

struct TailEstimate {
  double fraction;
  long hits;
  long paths;
  Wilson ci;
};
/// Fraction of increment paths whose running maximum max_{k<=n} M_k reaches x.
TailEstimate maximal_tail_empirical(const std::vector<std::vector<double>>& increments, double x);
/// Same, from precomputed running maxima.
TailEstimate maximal_tail_from_maxima(const std::vector<double>& maxima, double x);

/// Smallest c_p making the bound at x0 reach the Wilson upper limit there
/// (floored at 1e-300 so the polynomial term stays present).
double calibrate_cp(FukNagaevParams params, double x0, double wilson_hi_at_x0);

}  // namespace lrw

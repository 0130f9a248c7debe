#include "lrw/tailbounds.hpp"

#include <algorithm>
#include <cmath>

#include "lrw/error.hpp"

namespace lrw {

void validate(const FukNagaevParams& params) {
  if (params.n < 1 || !(params.sigma > 0.0)) throw NonPositive("Fuk-Nagaev needs n >= 1 and sigma > 0");
  if (!(params.p > 2.0 && params.p <= 3.0)) throw BadExponent("p must lie in (2, 3]");
  if (!(params.c_p > 0.0)) throw NonPositive("c_p must be positive");
}

FukNagaevBound fuk_nagaev_bound(const FukNagaevParams& params, double x) {
  validate(params);
  if (!(x > 0.0)) throw NonPositive("x must be positive");
  const double p = params.p;
  const double v = static_cast<double>(params.n) * params.sigma * params.sigma;
  // log form keeps the first term finite for small x
  const double log_first = std::log(7.0) + (2.0 * p - 0.5) * std::log(2.0) + (p + 0.5) * std::log(v / (x * x)) -
                           x * x / (8.0 * v);
  FukNagaevBound b;
  b.first = std::exp(log_first);
  b.second = params.c_p * static_cast<double>(params.n) * std::pow(x, -p);
  b.raw = b.first + b.second;
  b.value = std::clamp(b.raw, 0.0, 1.0);
  return b;
}

Wilson wilson_interval(long k, long n) {
  if (n < 1 || k < 0 || k > n) throw ValidationError("wilson_interval needs 0 <= k <= n, n >= 1");
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(k) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (ph + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

TailEstimate maximal_tail_from_maxima(const std::vector<double>& maxima, double x) {
  if (maxima.empty()) throw ValidationError("no paths");
  long hits = 0;
  for (double m : maxima)
    if (m >= x) ++hits;
  const long n = static_cast<long>(maxima.size());
  return {static_cast<double>(hits) / static_cast<double>(n), hits, n, wilson_interval(hits, n)};
}

TailEstimate maximal_tail_empirical(const std::vector<std::vector<double>>& increments, double x) {
  std::vector<double> maxima;
  maxima.reserve(increments.size());
  for (const auto& path : increments) {
    if (path.empty()) throw ValidationError("empty martingale path");
    double m = 0.0, best = -INFINITY;
    for (double d : path) {
      m += d;
      best = std::max(best, m);
    }
    maxima.push_back(best);
  }
  return maximal_tail_from_maxima(maxima, x);
}

double calibrate_cp(FukNagaevParams params, double x0, double wilson_hi_at_x0) {
  params.c_p = 1.0;
  const FukNagaevBound b = fuk_nagaev_bound(params, x0);
  const double need = wilson_hi_at_x0 - b.first;
  return std::max(1e-300, need * std::pow(x0, params.p) / static_cast<double>(params.n));
}

}  // namespace lrw

#pragma once

#include <cstdint>
#include <vector>

#include "lrw/matgroup.hpp"

namespace lrw {

/// Equal-weight point cloud; column j of `points` is the j-th point.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(Matrix points);
  static EmpiricalMeasure from_scalars(const std::vector<double>& xs);

  int dim() const { return static_cast<int>(pts_.rows()); }
  long size() const { return static_cast<long>(pts_.cols()); }
  const Matrix& points() const { return pts_; }

 private:
  Matrix pts_;
};

/// Exact W1 in one dimension: sorted matching for equal counts, the
/// quantile-function integral otherwise.
double w1_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double w1_1d(std::vector<double> a, std::vector<double> b);

/// int_0^1 |Q_a(u) - sigma Phi^{-1}(u)| du in closed form on each quantile
/// step.
double w1_1d_gaussian(const EmpiricalMeasure& a, double sigma);
double w1_1d_gaussian(std::vector<double> a, double sigma);

/// Optimal assignment (Hungarian) with euclidean cost. Unequal counts are
/// replicated to their lcm; TooLarge beyond 1024 points per side, dim > 8.
double w1_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Minimum-cost perfect matching of a square cost matrix; returns the
/// column assigned to each row.
std::vector<int> hungarian(const Matrix& cost);

struct SlicedW1 {
  double value;
  double stderr_;
};
/// Mean of w1_1d over random unit directions from stream (seed, 0). In
/// dimension 1 the single direction +1 is used, so this equals w1_1d.
SlicedW1 w1_sliced_stats(const EmpiricalMeasure& a, const EmpiricalMeasure& b, long slices, std::uint64_t seed);
double w1_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, long slices, std::uint64_t seed);

}  // namespace lrw

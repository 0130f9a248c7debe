#include "lrw/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lrw/error.hpp"
#include "lrw/normal.hpp"
#include "lrw/rng.hpp"

namespace lrw {

EmpiricalMeasure::EmpiricalMeasure(Matrix points) : pts_(std::move(points)) {
  if (pts_.cols() < 1 || pts_.rows() < 1) throw ValidationError("empirical measure needs at least one point");
  if (!pts_.allFinite()) throw ValidationError("empirical measure has non-finite entries");
}

EmpiricalMeasure EmpiricalMeasure::from_scalars(const std::vector<double>& xs) {
  Matrix m(1, static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = xs[i];
  return EmpiricalMeasure(std::move(m));
}

namespace {

std::vector<double> row_of(const EmpiricalMeasure& a) {
  if (a.dim() != 1) throw DimMismatch("one-dimensional W1 needs dim 1");
  const auto& p = a.points();
  return std::vector<double>(p.data(), p.data() + p.size());
}

}  // namespace

double w1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ValidationError("W1 of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t na = a.size(), nb = b.size();
  if (na == nb) {
    double s = 0.0;
    for (std::size_t i = 0; i < na; ++i) s += std::fabs(a[i] - b[i]);
    return s / static_cast<double>(na);
  }
  // walk the merged breakpoints i/na and j/nb in integer units of 1/(na nb)
  double s = 0.0;
  std::size_t i = 0, j = 0;
  std::uint64_t pos = 0;
  const std::uint64_t total = static_cast<std::uint64_t>(na) * nb;
  while (pos < total) {
    const std::uint64_t next_a = (i + 1) * static_cast<std::uint64_t>(nb);
    const std::uint64_t next_b = (j + 1) * static_cast<std::uint64_t>(na);
    const std::uint64_t next = std::min(next_a, next_b);
    s += static_cast<double>(next - pos) * std::fabs(a[i] - b[j]);
    pos = next;
    if (next == next_a) ++i;
    if (next == next_b) ++j;
  }
  return s / static_cast<double>(total);
}

double w1_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b) { return w1_1d(row_of(a), row_of(b)); }

double w1_1d_gaussian(std::vector<double> a, double sigma) {
  if (a.empty()) throw ValidationError("W1 of an empty sample");
  if (!(sigma >= 0.0)) throw ValidationError("sigma must be nonnegative");
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  if (sigma == 0.0) {
    double s = 0.0;
    for (double x : a) s += std::fabs(x);
    return s / n;
  }
  // int_{z0}^{z1} (a - sigma z) phi(z) dz = a (u1 - u0) + sigma (phi(z1) - phi(z0))
  auto signed_part = [&](double v, double u0, double u1, double z0, double z1) {
    return v * (u1 - u0) + sigma * (normal_pdf(z1) - normal_pdf(z0));
  };
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u0 = static_cast<double>(i) / n;
    const double u1 = static_cast<double>(i + 1) / n;
    const double z0 = normal_quantile(u0);
    const double z1 = normal_quantile(u1);
    const double zs = a[i] / sigma;
    double piece;
    if (zs <= z0) {
      piece = -signed_part(a[i], u0, u1, z0, z1);
    } else if (zs >= z1) {
      piece = signed_part(a[i], u0, u1, z0, z1);
    } else {
      const double us = normal_cdf(zs);
      piece = signed_part(a[i], u0, us, z0, zs) - signed_part(a[i], us, u1, zs, z1);
    }
    total += std::max(0.0, piece);
  }
  return total;
}

double w1_1d_gaussian(const EmpiricalMeasure& a, double sigma) { return w1_1d_gaussian(row_of(a), sigma); }

std::vector<int> hungarian(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n != cost.cols()) throw DimMismatch("hungarian needs a square cost matrix");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // potentials u (rows) and v (columns), 1-based with a virtual column 0
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n);
  for (int j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double w1_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim() != b.dim()) throw DimMismatch("w1_exact");
  if (a.dim() > 8) throw TooLarge("w1_exact supports dim <= 8");
  const long na = a.size(), nb = b.size();
  const long l = std::lcm(na, nb);
  if (l > 1024) throw TooLarge("w1_exact supports up to 1024 points after replication");
  const long ra = l / na, rb = l / nb;
  Matrix cost(l, l);
  for (long i = 0; i < l; ++i)
    for (long j = 0; j < l; ++j) cost(i, j) = (a.points().col(i / ra) - b.points().col(j / rb)).norm();
  const std::vector<int> match = hungarian(cost);
  double s = 0.0;
  for (long i = 0; i < l; ++i) s += cost(i, match[static_cast<std::size_t>(i)]);
  return s / static_cast<double>(l);
}

SlicedW1 w1_sliced_stats(const EmpiricalMeasure& a, const EmpiricalMeasure& b, long slices, std::uint64_t seed) {
  if (a.dim() != b.dim()) throw DimMismatch("w1_sliced");
  if (slices < 1) throw ValidationError("w1_sliced needs slices >= 1");
  const int d = a.dim();
  if (d == 1) return {w1_1d(a, b), 0.0};
  RngStream rng(seed, 0);
  double sum = 0.0, sum2 = 0.0;
  for (long s = 0; s < slices; ++s) {
    Vector theta(d);
    for (int i = 0; i < d; ++i) theta(i) = rng.normal();
    theta.normalize();
    const Eigen::RowVectorXd pa = theta.transpose() * a.points();
    const Eigen::RowVectorXd pb = theta.transpose() * b.points();
    const double w = w1_1d(std::vector<double>(pa.data(), pa.data() + pa.size()),
                           std::vector<double>(pb.data(), pb.data() + pb.size()));
    sum += w;
    sum2 += w * w;
  }
  const double ns = static_cast<double>(slices);
  const double mean = sum / ns;
  const double var = slices > 1 ? std::max(0.0, (sum2 - ns * mean * mean) / (ns - 1.0)) : 0.0;
  return {mean, std::sqrt(var / ns)};
}

double w1_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, long slices, std::uint64_t seed) {
  return w1_sliced_stats(a, b, slices, seed).value;
}

}  // namespace lrw

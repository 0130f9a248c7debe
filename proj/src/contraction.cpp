#include "lrw/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lrw/error.hpp"

namespace lrw {

namespace {

constexpr double kClip = -700.0;
constexpr double kFlagFloor = 1e-13;
const double kLogSaturation = std::log(1e-300);

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<long>(n / 2));
  return 0.5 * (lo + hi);
}

}  // namespace

LinePairTracker::LinePairTracker(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimMismatch("LinePairTracker needs two vectors in d >= 2");
  q1_ = x.normalized();
  const Vector yn = y.normalized();
  c_ = q1_.dot(yn);
  Vector perp = yn - c_ * q1_;
  const double s = line_dist(x, y);
  if (!(s > 0.0)) throw ValidationError("pair of identical lines");
  q2_ = perp.normalized();
  log_beta_ = std::log(s);
}

void LinePairTracker::apply(const Matrix& g) {
  Matrix frame(q1_.size(), 2);
  frame.col(0) = g * q1_;
  frame.col(1) = g * q2_;
  const QRFactors f = qr_positive(frame);
  // unit second vector c q1 + e^l q2 maps to (c r11 + e^l r12) q1' + e^l r22 q2'
  const double beta = std::exp(log_beta_);
  double c = c_ * f.r(0, 0) + beta * f.r(0, 1);
  double lb = log_beta_ + std::log(f.r(1, 1));
  // renormalize both vectors to unit length
  const double nb = std::hypot(c, std::exp(lb));
  c /= nb;
  lb -= std::log(nb);
  q1_ = f.k.col(0);
  q2_ = f.k.col(1);
  c_ = c;
  log_beta_ = lb;
}

IndexEstimate contraction_index(const AtomicMeasure& mu, int n0, long pairs, long trials, std::uint64_t seed,
                                Exec exec) {
  if (n0 < 1 || pairs < 1 || trials < 1) throw ValidationError("contraction_index needs n0, pairs, trials >= 1");
  const int d = mu.dim();
  if (d < 2) return {0.0, 0, pairs, false};
  std::vector<double> means(static_cast<std::size_t>(pairs), -INFINITY);
  std::vector<char> skipped(static_cast<std::size_t>(pairs), 0), clipped(static_cast<std::size_t>(pairs), 0);
  for_each_index(static_cast<std::size_t>(pairs), exec, [&](std::size_t j) {
    RngStream prng(seed, {0, static_cast<std::uint64_t>(j)});
    const auto [x, y] = sample_close_proj_pair(prng, d);
    const double d0 = proj_dist(x, y);
    if (d0 < 1e-12) {
      skipped[j] = 1;
      return;
    }
    double acc = 0.0;
    for (long t = 0; t < trials; ++t) {
      RngStream srng(seed, {1, static_cast<std::uint64_t>(t)});
      LinePairTracker tr(x.vec(), y.vec());
      for (int s = 0; s < n0; ++s) tr.apply(sample_step(mu, srng).matrix());
      double r = tr.log_dist() - std::log(d0);
      if (r < kClip) {
        r = kClip;
        clipped[j] = 1;
      }
      acc += r;
    }
    means[j] = acc / static_cast<double>(trials);
  });
  IndexEstimate out{-INFINITY, 0, 0, false};
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (skipped[j]) {
      ++out.pairs_skipped;
      continue;
    }
    ++out.pairs_used;
    out.index = std::max(out.index, means[j]);
    out.clipped = out.clipped || clipped[j];
  }
  return out;
}

std::pair<double, double> slope_with_permutation_test(const std::vector<double>& v, long first,
                                                      std::uint64_t seed) {
  const std::size_t n = v.size();
  if (n < 3) throw TooFewPoints("slope fit needs at least 3 points");
  std::vector<double> k(n);
  std::iota(k.begin(), k.end(), static_cast<double>(first));
  const double kbar = std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  for (double ki : k) sxx += (ki - kbar) * (ki - kbar);
  auto slope_of = [&](const std::vector<double>& y) {
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) sxy += (k[i] - kbar) * y[i];
    return sxy / sxx;
  };
  const double slope = slope_of(v);
  RngStream rng(seed, {2});
  std::vector<double> perm = v;
  long at_most = 0;
  constexpr long kPerms = 999;
  for (long b = 0; b < kPerms; ++b) {
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
      std::swap(perm[i], perm[j]);
    }
    if (slope_of(perm) <= slope) ++at_most;
  }
  return {slope, static_cast<double>(1 + at_most) / static_cast<double>(kPerms + 1)};
}

namespace {

DecayCurve finish_curve(std::vector<std::vector<double>>& per_rep, long n, std::uint64_t seed, bool saturated) {
  DecayCurve out;
  out.saturated = saturated;
  out.median_log_dist.resize(static_cast<std::size_t>(n));
  std::vector<double> col(per_rep.size());
  for (long k = 0; k < n; ++k) {
    for (std::size_t r = 0; r < per_rep.size(); ++r) col[r] = per_rep[r][static_cast<std::size_t>(k)];
    out.median_log_dist[static_cast<std::size_t>(k)] = median(col);
  }
  out.fit_from = n / 2 + 1;
  const std::vector<double> tail(out.median_log_dist.begin() + (out.fit_from - 1), out.median_log_dist.end());
  if (tail.size() >= 3) {
    const auto [slope, p] = slope_with_permutation_test(tail, out.fit_from, seed);
    out.slope = slope;
    out.p_value = p;
  } else {
    out.slope = 0.0;
    out.p_value = 1.0;
  }
  out.delta_hat = std::max(0.0, -out.slope);
  return out;
}

}  // namespace

DecayCurve proximality_decay(const AtomicMeasure& mu, const ProjPoint& x, const ProjPoint& y, long n,
                             long replicates, std::uint64_t seed, Exec exec) {
  if (n < 1 || replicates < 1) throw ValidationError("proximality_decay needs n, replicates >= 1");
  if (x.dim() != mu.dim() || y.dim() != mu.dim()) throw DimMismatch("proximality_decay");
  if (!(proj_dist(x, y) > 0.0)) throw ValidationError("proximality_decay needs x != y");
  std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(replicates));
  std::vector<char> sat(static_cast<std::size_t>(replicates), 0);
  for_each_index(per_rep.size(), exec, [&](std::size_t r) {
    RngStream rng(seed, r);
    LinePairTracker tr(x.vec(), y.vec());
    auto& row = per_rep[r];
    row.resize(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) {
      tr.apply(sample_step(mu, rng).matrix());
      row[static_cast<std::size_t>(k)] = tr.log_dist();
      if (tr.log_dist() < kLogSaturation) sat[r] = 1;
    }
  });
  const bool saturated = std::any_of(sat.begin(), sat.end(), [](char c) { return c != 0; });
  return finish_curve(per_rep, n, seed, saturated);
}

DecayCurve proximality_decay(const AtomicMeasure& mu, const Flag& x, const Flag& y, long n, long replicates,
                             std::uint64_t seed, Exec exec) {
  if (n < 1 || replicates < 1) throw ValidationError("proximality_decay needs n, replicates >= 1");
  if (x.dim() != mu.dim() || y.dim() != mu.dim()) throw DimMismatch("proximality_decay");
  if (fiber(x) != fiber(y)) throw ValidationError("proximality_decay needs flags in a common fiber");
  if (!(flag_dist(x, y) > 0.0)) throw ValidationError("proximality_decay needs x != y");
  std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(replicates));
  std::vector<char> sat(static_cast<std::size_t>(replicates), 0);
  for_each_index(per_rep.size(), exec, [&](std::size_t r) {
    RngStream rng(seed, r);
    Matrix kx = x.k(), ky = y.k();
    auto& row = per_rep[r];
    row.resize(static_cast<std::size_t>(n));
    for (long k = 0; k < n; ++k) {
      const Matrix& g = sample_step(mu, rng).matrix();
      kx = qr_positive(Matrix(g * kx)).k;
      ky = qr_positive(Matrix(g * ky)).k;
      double dist = flag_dist(Flag(kx), Flag(ky));
      if (dist < kFlagFloor) {
        dist = kFlagFloor;
        sat[r] = 1;
      }
      row[static_cast<std::size_t>(k)] = std::log(dist);
    }
  });
  const bool saturated = std::any_of(sat.begin(), sat.end(), [](char c) { return c != 0; });
  return finish_curve(per_rep, n, seed, saturated);
}

CouplingEstimate coupling_coefficient(const AtomicMeasure& mu, CocycleKind kind, long k, double q, long trials,
                                      std::uint64_t seed, long candidate_pairs, Exec exec) {
  if (k < 1 || !(q > 0.0) || trials < 2 || candidate_pairs < 1)
    throw ValidationError("coupling_coefficient needs k >= 1, q > 0, trials >= 2");
  if (kind == CocycleKind::cartan_increment) throw InvalidKind("coupling coefficient is defined for cocycles");
  const int d = mu.dim();
  std::vector<double> values(static_cast<std::size_t>(candidate_pairs * trials));
  for_each_index(static_cast<std::size_t>(candidate_pairs), exec, [&](std::size_t j) {
    RngStream prng(seed, {0, static_cast<std::uint64_t>(j)});
    for (long t = 0; t < trials; ++t) {
      RngStream srng(seed, {1, static_cast<std::uint64_t>(t)});
      double diff = 0.0;
      if (kind == CocycleKind::norm_proj) {
        RngStream pr = prng;
        Vector x = random_proj_point(pr, d).vec();
        Vector y = random_proj_point(pr, d).vec();
        for (long s = 1; s < k; ++s) {
          const Matrix& g = sample_step(mu, srng).matrix();
          x = (g * x).normalized();
          y = (g * y).normalized();
        }
        const Matrix& g = sample_step(mu, srng).matrix();
        diff = std::fabs(norm_cocycle(g, x) - norm_cocycle(g, y));
      } else {
        RngStream pr = prng;
        Matrix kx = random_orthogonal(pr, d);
        Matrix ky = random_orthogonal(pr, d);
        if ((kx.determinant() > 0.0) != (ky.determinant() > 0.0)) ky.col(d - 1) *= -1.0;
        for (long s = 1; s < k; ++s) {
          const Matrix& g = sample_step(mu, srng).matrix();
          kx = qr_positive(Matrix(g * kx)).k;
          ky = qr_positive(Matrix(g * ky)).k;
        }
        const Matrix& g = sample_step(mu, srng).matrix();
        const Vector zx = qr_positive(Matrix(g * kx)).r.diagonal().array().log();
        const Vector zy = qr_positive(Matrix(g * ky)).r.diagonal().array().log();
        diff = (zx - zy).norm();
      }
      values[j * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)] = std::pow(diff, q);
    }
  });
  CouplingEstimate best{-1.0, 0.0, 0};
  for (long j = 0; j < candidate_pairs; ++j) {
    double sum = 0.0, sum2 = 0.0;
    for (long t = 0; t < trials; ++t) {
      const double v = values[static_cast<std::size_t>(j * trials + t)];
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / static_cast<double>(trials);
    const double var = std::max(0.0, (sum2 - sum * mean) / static_cast<double>(trials - 1));
    if (mean > best.value) best = {mean, std::sqrt(var / static_cast<double>(trials)), j};
  }
  return best;
}

FiberOccupation fiber_occupation(const AtomicMeasure& mu, const Flag& x, long n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("fiber_occupation needs n >= 1");
  std::vector<int> sign(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) sign[i] = mu.atoms()[i].g.matrix().determinant() > 0.0 ? 1 : -1;
  RngStream rng(seed, 0);
  int f = fiber(x);
  const long burn = n / 10;
  long plus = 0, obs = 0;
  for (long k = 1; k <= n; ++k) {
    f *= sign[mu.sample_index(rng)];
    if (k <= burn) continue;
    ++obs;
    if (f > 0) ++plus;
  }
  const double fp = static_cast<double>(plus) / static_cast<double>(obs);
  return {fp, 1.0 - fp, obs};
}

}  // namespace lrw

#include "lrw/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "lrw/error.hpp"
#include "lrw/normal.hpp"

namespace lrw {

// ---------------------------------------------------------------- walker

CocycleWalker::CocycleWalker(CocycleKind kind, int d) : CocycleWalker(kind, Flag::identity(d)) {}

CocycleWalker::CocycleWalker(CocycleKind kind, const Flag& start)
    : kind_(kind), d_(start.dim()), fp_(start), x_(start.k().col(0)), prev_(Vector::Zero(start.dim())) {}

Vector CocycleWalker::step(const Matrix& g) {
  switch (kind_) {
    case CocycleKind::norm_proj: {
      const Vector y = g * x_;
      const double n = y.norm();
      x_ = y / n;
      return Vector::Constant(1, std::log(n));
    }
    case CocycleKind::iwasawa: {
      fp_.left_multiply(g);
      Vector inc = fp_.log_diag() - prev_;
      prev_ = fp_.log_diag();
      return inc;
    }
    case CocycleKind::cartan_increment: {
      fp_.left_multiply(g);
      const Vector c = fp_.cartan();
      Vector inc = c - prev_;
      prev_ = c;
      return inc;
    }
  }
  throw InvalidKind("unknown cocycle");
}

CocycleWalker make_walker(const AtomicMeasure& mu, CocycleKind kind, long burnin, std::uint64_t seed,
                          std::uint64_t replicate) {
  if (burnin <= 0) return CocycleWalker(kind, mu.dim());
  RngStream start_rng(seed, {3, replicate});
  CocycleWalker w(kind, random_flag(start_rng, mu.dim()));
  RngStream burn_rng(seed, {4, replicate});
  for (long i = 0; i < burnin; ++i) w.step(sample_step(mu, burn_rng).matrix());
  return w;
}

// ---------------------------------------------------------------- lyapunov

LyapunovEstimate lyapunov(const AtomicMeasure& mu, CocycleKind kind, long n, long replicates, long burnin,
                          std::uint64_t seed, Exec exec) {
  if (n < 1 || replicates < 1) throw ValidationError("lyapunov needs n, replicates >= 1");
  const int od = kind == CocycleKind::norm_proj ? 1 : mu.dim();
  std::vector<Vector> per_rep(static_cast<std::size_t>(replicates));
  for_each_index(per_rep.size(), exec, [&](std::size_t r) {
    CocycleWalker w = make_walker(mu, kind, burnin, seed, r);
    RngStream rng(seed, r);
    Vector acc = Vector::Zero(od);
    for (long k = 0; k < n; ++k) acc += w.step(sample_step(mu, rng).matrix());
    per_rep[r] = acc / static_cast<double>(n);
  });
  Vector mean = Vector::Zero(od);
  for (const Vector& v : per_rep) mean += v;
  mean /= static_cast<double>(replicates);
  Vector se = Vector::Zero(od);
  if (replicates > 1) {
    for (const Vector& v : per_rep) se += (v - mean).cwiseAbs2();
    se = (se / static_cast<double>(replicates - 1) / static_cast<double>(replicates)).cwiseSqrt();
  }
  return {mean, se, n, replicates, burnin};
}

// ---------------------------------------------------------------- sigma

bool clip_to_psd(Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  Vector ev = es.eigenvalues();
  if (ev.minCoeff() >= -1e-8) return false;
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(0.0, ev(i));
  s = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  s = 0.5 * (s + s.transpose()).eval();
  return true;
}

CovarianceEstimate sigma_series(const AtomicMeasure& mu, CocycleKind kind, long K, long trials, long burnin,
                                std::uint64_t seed, Exec exec) {
  if (K < 1 || trials < 2) throw ValidationError("sigma_series needs K >= 1 and trials >= 2");
  const int od = kind == CocycleKind::norm_proj ? 1 : mu.dim();
  // increments X_1..X_K per trial, column k-1
  std::vector<Matrix> xs(static_cast<std::size_t>(trials));
  for_each_index(xs.size(), exec, [&](std::size_t t) {
    CocycleWalker w = make_walker(mu, kind, burnin, seed, t);
    RngStream rng(seed, t);
    Matrix& x = xs[t];
    x.resize(od, K);
    for (long k = 0; k < K; ++k) x.col(k) = w.step(sample_step(mu, rng).matrix());
  });

  Vector lambda = Vector::Zero(od);
  for (const Matrix& x : xs) lambda += x.rowwise().sum();
  lambda /= static_cast<double>(trials * K);

  const double nt = static_cast<double>(trials);
  CovarianceEstimate out;
  out.method = CovMethod::series;
  std::vector<Matrix> contrib(xs.size(), Matrix::Zero(od, od));
  long quiet_run = 0;
  long used = 0;
  for (long k = 0; k < K; ++k) {
    Matrix sum = Matrix::Zero(od, od), sum2 = Matrix::Zero(od, od);
    std::vector<Matrix> prods(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
      const Vector a = xs[t].col(0) - lambda;
      const Vector b = xs[t].col(k) - lambda;
      prods[t] = a * b.transpose();
      sum += prods[t];
      sum2 += prods[t].cwiseAbs2();
    }
    const Matrix mean = sum / nt;
    const Matrix se = ((sum2 / nt - mean.cwiseAbs2()).cwiseMax(0.0) / (nt - 1.0)).cwiseSqrt();
    out.terms.push_back({k, mean, se});
    for (std::size_t t = 0; t < xs.size(); ++t)
      contrib[t] += k == 0 ? prods[t] : Matrix(prods[t] + prods[t].transpose());
    used = k + 1;
    if (k > 0) {
      const bool quiet = (mean.cwiseAbs().array() < 2.0 * se.array()).all();
      quiet_run = quiet ? quiet_run + 1 : 0;
      if (quiet_run >= 3) break;
    }
  }
  out.truncation = used;

  Matrix sigma = Matrix::Zero(od, od);
  for (const Matrix& c : contrib) sigma += c;
  sigma /= nt;
  Matrix var = Matrix::Zero(od, od);
  for (const Matrix& c : contrib) var += (c - sigma).cwiseAbs2();
  out.stderr_ = (var / (nt - 1.0) / nt).cwiseSqrt();
  out.stderr_ = 0.5 * (out.stderr_ + out.stderr_.transpose()).eval();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  if (clip_to_psd(sigma)) {
    out.clipped = true;
    out.warnings.push_back("NonPSD: eigenvalues below -1e-8 clipped to 0");
  }
  out.sigma_hat = sigma;
  return out;
}

CovarianceEstimate sigma_from_batch_sums(const std::vector<Vector>& sums, long batch_len) {
  if (sums.size() < 2 || batch_len < 1) throw TooShort("batch means need at least two batches");
  const Eigen::Index d = sums.front().size();
  const double nb = static_cast<double>(sums.size());
  const double bl = static_cast<double>(batch_len);
  Vector grand = Vector::Zero(d);
  for (const Vector& s : sums) grand += s / bl;
  grand /= nb;
  Matrix s = Matrix::Zero(d, d);
  for (const Vector& sum : sums) {
    const Vector m = sum / bl - grand;
    s += m * m.transpose();
  }
  s *= bl / (nb - 1.0);
  s = 0.5 * (s + s.transpose()).eval();

  CovarianceEstimate out;
  out.method = CovMethod::batch_means;
  out.truncation = static_cast<long>(sums.size());
  // Wishart: Var(S_ij) = (S_ij^2 + S_ii S_jj) / (B - 1)
  out.stderr_.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      out.stderr_(i, j) = std::sqrt((s(i, j) * s(i, j) + s(i, i) * s(j, j)) / (nb - 1.0));
  out.sigma_hat = s;
  return out;
}

CovarianceEstimate sigma_batch_means(const std::vector<Matrix>& paths, long batch_len) {
  if (paths.empty() || batch_len < 1) throw ValidationError("sigma_batch_means needs paths and batch_len >= 1");
  const Eigen::Index d = paths.front().rows();
  std::vector<Vector> sums;
  for (const Matrix& p : paths) {
    if (p.rows() != d) throw DimMismatch("paths of different dimension");
    if (p.cols() < 10 * batch_len) throw TooShort("path length below 10 * batch_len");
    const long nb = static_cast<long>(p.cols()) / batch_len;
    for (long b = 0; b < nb; ++b) sums.push_back(p.middleCols(b * batch_len, batch_len).rowwise().sum());
  }
  return sigma_from_batch_sums(sums, batch_len);
}

// ---------------------------------------------------------------- reduction

ReducedCovariance covariance_reduction(const Matrix& sigma) {
  const Eigen::Index d = sigma.rows();
  if (d < 1 || sigma.cols() != d) throw DimMismatch("covariance_reduction needs a square matrix");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, sigma.cwiseAbs().maxCoeff()))
    throw ValidationError("covariance matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sigma + sigma.transpose()));
  const Vector ev = es.eigenvalues().reverse();
  Matrix p = es.eigenvectors().rowwise().reverse();
  if (ev(d - 1) < -1e-10 * std::max(1.0, std::fabs(ev(0)))) throw ValidationError("covariance has a negative eigenvalue");
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::fabs(p(i, j)) > 1e-14) {
        if (p(i, j) < 0.0) p.col(j) *= -1.0;
        break;
      }
    }
  }
  ReducedCovariance out{Matrix::Zero(d, d), 0, ev.cwiseMax(0.0), false};
  if (!(ev(0) > 0.0)) {
    out.zero = true;
    return out;
  }
  int m = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (ev(i) > 1e-10 * ev(0)) ++m;
  out.m = m;
  Vector gamma(d);
  for (Eigen::Index i = 0; i < d; ++i) gamma(i) = 1.0 / std::sqrt(ev(i < m ? i : m - 1));
  out.a = gamma.asDiagonal() * p.transpose();

  // Eigenvectors carry absolute error ~eps * ev(0), so the leading block is
  // off J_m by ~eps * ev(0) / ev(m-1). One re-whitening pass in extended
  // precision removes most of that; rows past m are then made conjugate to it.
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMatrix s = sigma.cast<long double>();
  LMatrix top = out.a.topRows(m).cast<long double>();
  const Eigen::LLT<LMatrix> llt(top * s * top.transpose());
  if (llt.info() == Eigen::Success) {
    top = llt.matrixL().solve(top);
    if (m < d) {
      LMatrix rest = out.a.bottomRows(d - m).cast<long double>();
      rest -= (rest * s * top.transpose()) * top;
      out.a.bottomRows(d - m) = rest.cast<double>();
    }
    out.a.topRows(m) = top.cast<double>();
  }
  return out;
}

// ---------------------------------------------------------------- envelope

namespace {

/// int_0^z t^q phi(t) dt
double moment_to(double z, double q) {
  const double a = 0.5 * (q + 1.0);
  const double scale = std::pow(2.0, 0.5 * q) * std::tgamma(a) / (2.0 * std::sqrt(std::numbers::pi));
  if (std::isinf(z)) return scale;
  return scale * boost::math::gamma_p(a, 0.5 * z * z);
}

/// z with 2 (1 - Phi(z)) = u
double envelope_z(double u) { return u <= 0.0 ? INFINITY : -normal_quantile(0.5 * u); }

}  // namespace

double envelope_weight_integral(double a, double b, double p) {
  a = std::clamp(a, 0.0, 1.0);
  b = std::clamp(b, 0.0, 1.0);
  if (!(b > a)) return 0.0;
  const double ustar = 2.0 * normal_sf(1.0);
  double total = 0.0;
  if (b > ustar) total += b - std::max(a, ustar);
  if (a < ustar) {
    const double q = p - 2.0;
    const double hi = std::min(b, ustar);
    total += 2.0 * (moment_to(envelope_z(a), q) - moment_to(envelope_z(hi), q));
  }
  return std::max(total, b - a);
}

double envelope_norm(const std::vector<double>& samples, double p) {
  if (!(p > 2.0)) throw BadExponent("envelope norm needs p > 2");
  if (samples.empty()) throw ValidationError("envelope norm of an empty sample");
  std::vector<double> q(samples.size());
  std::transform(samples.begin(), samples.end(), q.begin(), [](double x) { return std::fabs(x); });
  std::sort(q.begin(), q.end(), std::greater<>());
  const double n = static_cast<double>(q.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    total += q[i] * envelope_weight_integral(static_cast<double>(i) / n, static_cast<double>(i + 1) / n, p);
  }
  return total;
}

}  // namespace lrw

#include "lrw/cocycles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lrw/error.hpp"

namespace lrw {

CocycleKind parse_cocycle_kind(const std::string& name) {
  if (name == "norm" || name == "norm_proj") return CocycleKind::norm_proj;
  if (name == "iwasawa") return CocycleKind::iwasawa;
  if (name == "cartan" || name == "cartan_increment") return CocycleKind::cartan_increment;
  throw InvalidKind("unknown cocycle '" + name + "'");
}

std::string to_string(CocycleKind kind) {
  switch (kind) {
    case CocycleKind::norm_proj: return "norm";
    case CocycleKind::iwasawa: return "iwasawa";
    case CocycleKind::cartan_increment: return "cartan";
  }
  return "?";
}

double norm_cocycle(const Matrix& g, const Vector& x) { return std::log((g * x).norm() / x.norm()); }

double norm_cocycle(const GroupElement& g, const ProjPoint& x) {
  if (g.dim() != x.dim()) throw DimMismatch("norm_cocycle");
  return norm_cocycle(g.matrix(), x.vec());
}

Vector iwasawa_cocycle(const GroupElement& g, const Flag& eta) {
  if (g.dim() != eta.dim()) throw DimMismatch("iwasawa_cocycle");
  const QRFactors f = qr_positive(Matrix(g.matrix() * eta.k()));
  return f.r.diagonal().array().log();
}

Vector cartan_projection(const Matrix& g) { return svd(g).s.array().log(); }
Vector cartan_projection(const GroupElement& g) { return cartan_projection(g.matrix()); }

int fiber(const Flag& eta) { return eta.k().determinant() > 0.0 ? 1 : -1; }

double cocycle_identity_residual(CocycleKind kind, const GroupElement& g, const GroupElement& h,
                                 const ProjPoint& x) {
  if (kind != CocycleKind::norm_proj) throw InvalidKind("projective points carry only the norm cocycle");
  return std::fabs(norm_cocycle(g * h, x) - norm_cocycle(g, proj_act(h, x)) - norm_cocycle(h, x));
}

double cocycle_identity_residual(CocycleKind kind, const GroupElement& g, const GroupElement& h,
                                 const Flag& eta) {
  if (kind != CocycleKind::iwasawa) throw InvalidKind("flags carry only the Iwasawa cocycle");
  const Vector r = iwasawa_cocycle(g * h, eta) - iwasawa_cocycle(g, flag_act(h, eta)) - iwasawa_cocycle(h, eta);
  return r.cwiseAbs().maxCoeff();
}

namespace {

double pair_angle(RngStream& rng) { return 0.5 * std::numbers::pi * std::pow(10.0, -6.0 * rng.uniform()); }

}  // namespace

std::pair<ProjPoint, ProjPoint> sample_close_proj_pair(RngStream& rng, int d) {
  const ProjPoint x = random_proj_point(rng, d);
  Vector t(d);
  for (int i = 0; i < d; ++i) t(i) = rng.normal();
  t -= t.dot(x.vec()) * x.vec();
  const double theta = pair_angle(rng);
  if (d == 1 || t.norm() == 0.0) return {x, x};
  return {x, ProjPoint(std::cos(theta) * x.vec() + std::sin(theta) * t.normalized())};
}

std::pair<Flag, Flag> sample_close_flag_pair(RngStream& rng, int d) {
  const Flag x = random_flag(rng, d);
  Matrix s = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      s(i, j) = rng.normal();
      s(j, i) = -s(i, j);
    }
  const double theta = pair_angle(rng);
  if (d == 1) return {x, x};
  const double sn = s.norm();
  if (sn > 0.0) s *= std::tan(theta / 2.0) / sn;
  // Cayley transform: a rotation with det +1, so the fiber is preserved.
  const Matrix id = Matrix::Identity(d, d);
  const Matrix rot = (id - s).partialPivLu().solve(id + s);
  return {x, Flag(qr_positive(Matrix(x.k() * rot)).k)};
}

Kappa0Estimate kappa0_estimate(const AtomicMeasure& mu, CocycleKind kind, double p, long x_trials,
                               std::uint64_t seed) {
  if (!(p >= 1.0)) throw BadExponent("kappa0 moment needs p >= 1");
  if (kind == CocycleKind::cartan_increment) throw InvalidKind("kappa0 is defined for cocycles only");
  const int d = mu.dim();
  double moment = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const GroupElement& g = mu.atoms()[i].g;
    double sup = 0.0;
    double lip = 0.0;
    if (kind == CocycleKind::norm_proj) {
      const Vector s = svd(g).s;
      sup = std::max(std::log(s(0)), -std::log(s(d - 1)));
    }
    for (long t = 0; t < x_trials; ++t) {
      RngStream rng(seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t)});
      if (kind == CocycleKind::norm_proj) {
        const auto [x, y] = sample_close_proj_pair(rng, d);
        const double dist = proj_dist(x, y);
        if (dist < 1e-12) continue;
        lip = std::max(lip, std::fabs(norm_cocycle(g, x) - norm_cocycle(g, y)) / dist);
      } else {
        const auto [x, y] = sample_close_flag_pair(rng, d);
        const Vector sx = iwasawa_cocycle(g, x);
        const Vector sy = iwasawa_cocycle(g, y);
        sup = std::max({sup, sx.norm(), sy.norm()});
        const double dist = flag_dist(x, y);
        if (dist < 1e-12) continue;
        lip = std::max(lip, (sx - sy).norm() / dist);
      }
    }
    const double k0 = lip > 0.0 ? std::max(sup, std::log(lip)) : sup;
    moment += mu.atoms()[i].weight * std::pow(std::max(0.0, k0), p);
  }
  return {moment, x_trials, kind == CocycleKind::norm_proj};
}

}  // namespace lrw

#include "lrw/matgroup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lrw/error.hpp"

namespace lrw {

namespace {

constexpr double kPivotTol = 1e-12;
constexpr double kJacobiTarget = 1e-15;
constexpr double kJacobiFail = 1e-12;

bool all_finite(const Matrix& m) { return m.allFinite(); }

double op_norm_any(const Matrix& a) {
  if (a.rows() == a.cols()) return svd(a).s(0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// Largest singular value of the difference of two orthogonal projectors
/// of equal rank (the sine of the largest principal angle).
double projector_gap(const Matrix& qa, const Matrix& qb) {
  const Matrix diff = qa * qa.transpose() - qb * qb.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  return std::min(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
}

}  // namespace

// ---------------------------------------------------------------- elements

GroupElement::GroupElement(Matrix m) : m_(std::move(m)) {
  if (m_.rows() < 1 || m_.rows() != m_.cols()) throw ValidationError("group element must be square");
  if (!all_finite(m_)) throw ValidationError("group element has non-finite entries");
  const Vector s = svd(m_).s;
  if (!(s(0) > 0.0)) throw ValidationError("group element is the zero matrix");
  // |det| / |g|_op^d = prod(s_i / s_1)
  double log_ratio = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) log_ratio += std::log(s(i) / s(0));
  if (!(log_ratio > std::log(1e-12))) throw ValidationError("group element is singular");
}

GroupElement GroupElement::identity(int d) { return GroupElement(Matrix::Identity(d, d), Unchecked{}); }

GroupElement operator*(const GroupElement& a, const GroupElement& b) {
  if (a.dim() != b.dim()) throw DimMismatch("product of elements of different dimension");
  return GroupElement(a.m_ * b.m_, GroupElement::Unchecked{});
}

ProjPoint::ProjPoint(const Vector& v) {
  if (v.size() < 1 || !v.allFinite()) throw ValidationError("projective point needs finite entries");
  const double n = v.norm();
  if (!(n > 0.0)) throw ValidationError("projective point from the zero vector");
  v_ = v / n;
  for (Eigen::Index i = 0; i < v_.size(); ++i) {
    if (v_(i) != 0.0) {
      if (v_(i) < 0.0) v_ = -v_;
      break;
    }
  }
}

ProjPoint ProjPoint::basis(int d, int i) { return ProjPoint(Vector::Unit(d, i)); }

Flag::Flag(Matrix k) : k_(std::move(k)) {
  if (k_.rows() < 1 || k_.rows() != k_.cols()) throw ValidationError("flag matrix must be square");
  const Matrix gram = k_.transpose() * k_;
  if (!gram.allFinite() || (gram - Matrix::Identity(k_.rows(), k_.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw ValidationError("flag matrix is not orthogonal");
}

Flag Flag::identity(int d) { return Flag(Matrix::Identity(d, d)); }

// ---------------------------------------------------------------- QR / SVD

QRFactors qr_positive(const Matrix& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (n < 1 || m < n) throw DimMismatch("qr_positive needs a square or tall matrix");
  if (!a.allFinite()) throw SingularInput("non-finite input");

  Matrix r = a;
  std::vector<Vector> reflectors(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector v = r.col(j).tail(m - j);
    const double normx = v.norm();
    const double alpha = v(0) >= 0.0 ? -normx : normx;
    v(0) -= alpha;
    const double vnorm = v.norm();
    if (vnorm > 0.0) {
      v /= vnorm;
      auto block = r.bottomRightCorner(m - j, n - j);
      const Eigen::RowVectorXd w = v.transpose() * block;
      block.noalias() -= 2.0 * v * w;
    }
    reflectors[static_cast<std::size_t>(j)] = std::move(v);
  }

  Matrix q = Matrix::Identity(m, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const Vector& v = reflectors[static_cast<std::size_t>(j)];
    if (v.squaredNorm() == 0.0) continue;
    auto block = q.bottomRows(m - j);
    const Eigen::RowVectorXd w = v.transpose() * block;
    block.noalias() -= 2.0 * v * w;
  }

  Matrix rr = r.topRows(n).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (rr(j, j) < 0.0) {
      rr.row(j) *= -1.0;
      q.col(j) *= -1.0;
    }
  }

  const double min_pivot = rr.diagonal().minCoeff();
  if (!(min_pivot > 0.0)) throw SingularInput("zero pivot");
  if (!(min_pivot >= kPivotTol * a.norm())) {
    // Frobenius bounds the operator norm from above; only recompute when
    // the cheap test is inconclusive.
    if (!(min_pivot >= kPivotTol * op_norm_any(a))) throw SingularInput("pivot below 1e-12 * |g|_op");
  }
  return {std::move(q), std::move(rr)};
}

QRFactors qr_positive(const GroupElement& g) { return qr_positive(g.matrix()); }

SVDFactors svd(const Matrix& a) {
  const Eigen::Index n = a.cols();
  if (n < 1 || a.rows() != n) throw DimMismatch("svd needs a square matrix");
  if (!a.allFinite()) throw NoConvergence("non-finite input");

  Matrix w = a;
  Matrix v = Matrix::Identity(n, n);
  const int max_sweeps = n <= 16 ? 50 : 100;
  double off = 0.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    off = 0.0;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        if (alpha == 0.0 || beta == 0.0) continue;
        const double gamma = w.col(p).dot(w.col(q));
        const double rel = std::fabs(gamma) / std::sqrt(alpha) / std::sqrt(beta);
        off = std::max(off, rel);
        if (rel <= kJacobiTarget) continue;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::fabs(zeta) > 1e150
                             ? 0.5 / zeta
                             : std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (off <= kJacobiTarget) break;
  }
  if (off > kJacobiFail) throw NoConvergence("one-sided Jacobi did not reach 1e-12");

  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s(i) = w.col(i).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return s(x) > s(y); });

  SVDFactors out{Matrix(n, n), Matrix(n, n), Vector(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.s(i) = s(src);
    out.v.col(i) = v.col(src);
    if (s(src) > 0.0) {
      out.u.col(i) = w.col(src) / s(src);
    } else {
      // complete an orthonormal basis for a null column
      Vector e = Vector::Zero(n);
      for (Eigen::Index trial = 0; trial < n; ++trial) {
        e = Vector::Unit(n, trial);
        for (Eigen::Index j = 0; j < i; ++j) e -= out.u.col(j).dot(e) * out.u.col(j);
        if (e.norm() > 0.5) break;
      }
      out.u.col(i) = e.normalized();
    }
  }
  return out;
}

SVDFactors svd(const GroupElement& g) { return svd(g.matrix()); }

double op_norm(const Matrix& a) { return op_norm_any(a); }

// ---------------------------------------------------------------- actions

ProjPoint proj_act(const GroupElement& g, const ProjPoint& x) {
  if (g.dim() != x.dim()) throw DimMismatch("proj_act");
  return ProjPoint(g.matrix() * x.vec());
}

double line_dist(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw DimMismatch("line_dist");
  const Eigen::Index d = x.size();
  Vector wedge(d * (d - 1) / 2);
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) wedge(k++) = x(i) * y(j) - x(j) * y(i);
  // stableNorm: squares of tiny wedge components would underflow
  return std::min(1.0, wedge.stableNorm() / (x.stableNorm() * y.stableNorm()));
}

double proj_dist(const ProjPoint& x, const ProjPoint& y) {
  if (x.dim() != y.dim()) throw DimMismatch("proj_dist");
  return line_dist(x.vec(), y.vec());
}

Flag flag_act(const GroupElement& g, const Flag& eta) {
  if (g.dim() != eta.dim()) throw DimMismatch("flag_act");
  return Flag(qr_positive(g.matrix() * eta.k()).k);
}

double flag_dist(const Flag& a, const Flag& b) {
  if (a.dim() != b.dim()) throw DimMismatch("flag_dist");
  const int d = a.dim();
  if (d < 2) return 0.0;
  // nested spans of dimension 1 and d-1 are lines (the latter through the
  // orthogonal complement), where the wedge formula is accurate
  double best = line_dist(a.k().col(0), b.k().col(0));
  if (d > 2) best = std::max(best, line_dist(a.k().col(d - 1), b.k().col(d - 1)));
  for (int i = 2; i <= d - 2; ++i) best = std::max(best, projector_gap(a.k().leftCols(i), b.k().leftCols(i)));
  return best;
}

Matrix random_orthogonal(RngStream& rng, int d) {
  Matrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = rng.normal();
  return qr_positive(g).k;
}

ProjPoint random_proj_point(RngStream& rng, int d) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.normal();
  return ProjPoint(v);
}

Flag random_flag(RngStream& rng, int d) { return Flag(random_orthogonal(rng, d)); }

// ---------------------------------------------------------------- products

FactoredProduct::FactoredProduct(int d)
    : k_(Matrix::Identity(d, d)), z_(Vector::Zero(d)), u_(Matrix::Identity(d, d)) {}

FactoredProduct::FactoredProduct(const Flag& base)
    : k_(base.k()), z_(Vector::Zero(base.dim())), u_(Matrix::Identity(base.dim(), base.dim())) {}

void FactoredProduct::left_multiply(const Matrix& g) {
  const Eigen::Index d = z_.size();
  if (g.rows() != d || g.cols() != d) throw DimMismatch("FactoredProduct::left_multiply");
  QRFactors f = qr_positive(g * k_);
  // (D^{-1} U' D)_{ij} = U'_{ij} exp(z_j - z_i)
  Matrix c = Matrix::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double up = f.r(i, j) / f.r(i, i);
      if (up != 0.0) c(i, j) = up * std::exp(z_(j) - z_(i));
    }
  u_ = (c * u_).triangularView<Eigen::UnitUpper>();
  for (Eigen::Index i = 0; i < d; ++i) z_(i) += std::log(f.r(i, i));
  k_ = std::move(f.k);
  if (!u_.allFinite() || !z_.allFinite()) throw NumericalFailure("factored product overflowed");
}

Vector FactoredProduct::cartan() const { return log_singular_values_graded(z_, u_); }

std::pair<Matrix, double> FactoredProduct::normalized() const {
  const double zmax = z_.maxCoeff();
  const Vector scale = (z_.array() - zmax).exp();
  const Matrix m = k_ * scale.asDiagonal() * u_;
  const double n = op_norm(m);
  return {m / n, zmax + std::log(n)};
}

namespace {

struct Block {
  Eigen::Index lo, hi;  // inclusive
};

std::vector<Block> coupling_blocks(const Matrix& v, double tol) {
  const Eigen::Index d = v.rows();
  std::vector<Eigen::Index> reach(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    reach[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index j = i + 1; j < d; ++j)
      if (std::fabs(v(i, j)) > tol) reach[static_cast<std::size_t>(i)] = j;
  }
  std::vector<Block> blocks;
  Eigen::Index lo = 0, hi = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (i > hi) {
      blocks.push_back({lo, hi});
      lo = hi = i;
    }
    hi = std::max(hi, reach[static_cast<std::size_t>(i)]);
  }
  blocks.push_back({lo, hi});
  return blocks;
}

/// One step of M -> R(M^T) on M = diag(exp(w)) v, in log form.
void log_qr_step(Vector& w, Matrix& v) {
  const Eigen::Index d = w.size();
  const QRFactors f = qr_positive(Matrix(v.transpose()));
  Matrix nv = Matrix::Identity(d, d);
  Vector nw(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    nw(i) = w(i) + std::log(f.r(i, i));
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double rij = f.r(i, j) / f.r(i, i);
      if (rij != 0.0) nv(i, j) = rij * std::exp(w(j) - w(i));
    }
  }
  w = std::move(nw);
  v = std::move(nv);
}

}  // namespace

Vector log_singular_values_graded(Vector w, Matrix v) {
  constexpr double kCouple = 1e-17;
  constexpr double kSpread = 30.0;
  const Eigen::Index d = w.size();
  std::vector<Block> blocks;
  bool ready = false;
  for (int iter = 0; iter < 400; ++iter) {
    blocks = coupling_blocks(v, kCouple);
    ready = true;
    for (const Block& b : blocks) {
      const auto seg = w.segment(b.lo, b.hi - b.lo + 1);
      if (seg.maxCoeff() - seg.minCoeff() > kSpread) ready = false;
    }
    if (ready) break;
    log_qr_step(w, v);
    if (!w.allFinite() || !v.allFinite()) throw NumericalFailure("graded singular values overflowed");
  }
  if (!ready) throw NoConvergence("graded singular values: blocks did not separate");

  Vector out(d);
  for (const Block& b : blocks) {
    const Eigen::Index len = b.hi - b.lo + 1;
    const double wmax = w.segment(b.lo, len).maxCoeff();
    if (len == 1) {
      out(b.lo) = w(b.lo);
      continue;
    }
    Matrix m = v.block(b.lo, b.lo, len, len);
    for (Eigen::Index i = 0; i < len; ++i) m.row(i) *= std::exp(w(b.lo + i) - wmax);
    // Jacobi on the column-scaled transpose keeps small singular values
    // relatively accurate.
    const Vector s = svd(Matrix(m.transpose())).s;
    for (Eigen::Index i = 0; i < len; ++i) out(b.lo + i) = wmax + std::log(s(i));
  }
  std::sort(out.data(), out.data() + d, std::greater<>());
  return out;
}

}  // namespace lrw

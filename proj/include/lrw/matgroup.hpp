#pragma once

#include <Eigen/Dense>

#include "lrw/rng.hpp"

namespace lrw {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Invertible d x d real matrix. Construction checks finiteness and
/// |det g| > 1e-12 * |g|_op^d; products of valid elements are not rechecked.
class GroupElement {
 public:
  explicit GroupElement(Matrix m);
  static GroupElement identity(int d);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  GroupElement transpose() const { return GroupElement(m_.transpose(), Unchecked{}); }

  friend GroupElement operator*(const GroupElement& a, const GroupElement& b);

 private:
  struct Unchecked {};
  GroupElement(Matrix m, Unchecked) : m_(std::move(m)) {}
  Matrix m_;
};

/// Point of the projective space: a unit vector whose first nonzero
/// coordinate is positive.
class ProjPoint {
 public:
  explicit ProjPoint(const Vector& v);
  static ProjPoint basis(int d, int i = 0);

  int dim() const { return static_cast<int>(v_.size()); }
  const Vector& vec() const { return v_; }

 private:
  Vector v_;
};

/// Point of the full flag variety G/P_c, represented by an orthogonal k.
/// Two representatives k, k*diag(+-1) name the same point only up to the
/// sign of det (the fiber), see `fiber` in cocycles.
class Flag {
 public:
  explicit Flag(Matrix k);
  static Flag identity(int d);

  int dim() const { return static_cast<int>(k_.rows()); }
  const Matrix& k() const { return k_; }

 private:
  Matrix k_;
};

/// a = k * r with k having orthonormal columns and r upper triangular with
/// a strictly positive diagonal. For a tall m x n input, k is m x n.
struct QRFactors {
  Matrix k;
  Matrix r;
};

/// a = u * diag(s) * v^T, s nonincreasing.
struct SVDFactors {
  Matrix u;
  Matrix v;
  Vector s;
};

/// Householder QR followed by a sign fix of the diagonal. Accepts square or
/// tall full-column-rank input. Throws SingularInput when a pivot is below
/// 1e-12 * |a|_op.
QRFactors qr_positive(const Matrix& a);
QRFactors qr_positive(const GroupElement& g);

/// One-sided (Hestenes) Jacobi SVD of a square matrix. Sweeps until every
/// column pair is orthogonal to 1e-15 relative; throws NoConvergence if the
/// off-diagonal measure is still above 1e-12 after 50 sweeps (d <= 16) or
/// 100 sweeps (larger d).
SVDFactors svd(const Matrix& a);
SVDFactors svd(const GroupElement& g);

/// Largest singular value.
double op_norm(const Matrix& a);

ProjPoint proj_act(const GroupElement& g, const ProjPoint& x);
/// Sine of the angle between the two lines, computed from the wedge product
/// so that small distances keep full relative accuracy.
double proj_dist(const ProjPoint& x, const ProjPoint& y);

Flag flag_act(const GroupElement& g, const Flag& eta);
/// max over i < d of the largest principal-angle sine between the spans of
/// the first i columns.
double flag_dist(const Flag& a, const Flag& b);

/// Sine distance between the lines spanned by two nonzero vectors.
double line_dist(const Vector& x, const Vector& y);

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix).
Matrix random_orthogonal(RngStream& rng, int d);
ProjPoint random_proj_point(RngStream& rng, int d);
Flag random_flag(RngStream& rng, int d);

/// Left product kept in Iwasawa-factored form
///
///     A = k * diag(exp(z)) * u,   k orthogonal, u unit upper triangular.
///
/// This never overflows along a random walk: z carries the growth, and the
/// conjugation that updates u only multiplies by exp(z_j - z_i), which is
/// small once z is ordered (the generic situation for left walks).
/// When started at a flag k0, `z` equals the Iwasawa cocycle of A at k0 and
/// `k` the transported flag; the singular values of A are those of
/// diag(exp(z)) * u.
class FactoredProduct {
 public:
  explicit FactoredProduct(int d);
  explicit FactoredProduct(const Flag& base);

  int dim() const { return static_cast<int>(z_.size()); }
  /// A <- g * A. Throws NumericalFailure if the factors stop being finite.
  void left_multiply(const Matrix& g);

  const Matrix& k() const { return k_; }
  const Vector& log_diag() const { return z_; }
  const Matrix& unipotent() const { return u_; }

  /// log singular values of A (nonincreasing), computed without forming A.
  Vector cartan() const;
  /// A / |A|_op together with log |A|_op. Entries below ~1e-308 relative
  /// underflow to zero.
  std::pair<Matrix, double> normalized() const;

 private:
  Matrix k_;
  Vector z_;
  Matrix u_;
};

/// log singular values (nonincreasing) of diag(exp(w)) * v for unit upper
/// triangular v, without forming the product.
Vector log_singular_values_graded(Vector w, Matrix v);

}  // namespace lrw

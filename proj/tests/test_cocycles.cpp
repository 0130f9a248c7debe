#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>

#include "lrw/cocycles.hpp"
#include "lrw/error.hpp"

using namespace lrw;

namespace {

Matrix gaussian(RngStream& rng, int d) {
  Matrix m(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST(Cocycle, NormMatchesDefinition) {
  RngStream rng(1, 0);
  for (int d = 2; d <= 6; ++d) {
    const GroupElement g(gaussian(rng, d));
    const ProjPoint x = random_proj_point(rng, d);
    EXPECT_NEAR(norm_cocycle(g, x), std::log((g.matrix() * x.vec()).norm()), 1e-14);
  }
}

TEST(Cocycle, IwasawaOnDiagonalAndTriangular) {
  Matrix g(3, 3);
  g << 2, 5, -1, 0, 0.5, 3, 0, 0, 7;
  const Vector z = iwasawa_cocycle(GroupElement(g), Flag::identity(3));
  EXPECT_NEAR(z(0), std::log(2.0), 1e-15);
  EXPECT_NEAR(z(1), std::log(0.5), 1e-15);
  EXPECT_NEAR(z(2), std::log(7.0), 1e-15);
}

TEST(Cocycle, IdentityHoldsOnRandomTriples) {
  RngStream rng(2, 0);
  for (int d = 2; d <= 5; ++d)
    for (int t = 0; t < 200; ++t) {
      const GroupElement g(gaussian(rng, d)), h(gaussian(rng, d));
      EXPECT_LE(cocycle_identity_residual(CocycleKind::norm_proj, g, h, random_proj_point(rng, d)), 1e-12);
      EXPECT_LE(cocycle_identity_residual(CocycleKind::iwasawa, g, h, random_flag(rng, d)), 1e-10);
    }
}

TEST(Cocycle, IwasawaSumIsLogAbsDet) {
  RngStream rng(3, 0);
  for (int d = 2; d <= 8; ++d) {
    const GroupElement g(gaussian(rng, d));
    const Flag eta = random_flag(rng, d);
    EXPECT_NEAR(iwasawa_cocycle(g, eta).sum(), std::log(std::fabs(g.matrix().determinant())), 1e-12);
  }
}

TEST(Cocycle, WrongSpaceThrows) {
  const GroupElement g = GroupElement::identity(2);
  EXPECT_THROW(cocycle_identity_residual(CocycleKind::iwasawa, g, g, ProjPoint::basis(2)), InvalidKind);
  EXPECT_THROW(cocycle_identity_residual(CocycleKind::norm_proj, g, g, Flag::identity(2)), InvalidKind);
  EXPECT_THROW(parse_cocycle_kind("bogus"), InvalidKind);
  EXPECT_EQ(parse_cocycle_kind("cartan"), CocycleKind::cartan_increment);
}

TEST(Cartan, LogSingularValues) {
  RngStream rng(4, 0);
  const Matrix g = gaussian(rng, 4);
  const Eigen::JacobiSVD<Matrix> ref(g);
  const Vector expect = ref.singularValues().array().log();
  EXPECT_LE((cartan_projection(g) - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Fiber, FollowsDeterminantSign) {
  RngStream rng(5, 0);
  for (int t = 0; t < 50; ++t) {
    const GroupElement g(gaussian(rng, 3));
    const Flag eta = random_flag(rng, 3);
    const int s = g.matrix().determinant() > 0 ? 1 : -1;
    EXPECT_EQ(fiber(flag_act(g, eta)), s * fiber(eta));
  }
}

TEST(Kappa0, OrthogonalAtomsGiveZero) {
  RngStream rng(6, 0);
  const Matrix r = random_orthogonal(rng, 2);
  const AtomicMeasure mu(2, {{1.0, GroupElement(r)}});
  const Kappa0Estimate k = kappa0_estimate(mu, CocycleKind::norm_proj, 3.0, 200, 1);
  EXPECT_NEAR(k.moment, 0.0, 1e-18);
  EXPECT_TRUE(k.sup_exact);
}

TEST(Kappa0, DiagonalNormOracle) {
  // g = diag(a, b), a = e^2, b = e^-1. sigma_sup = 2. Along the circle,
  // x -> log|gx| has maximal slope (a^2 - b^2) / (2ab) = sinh 3, which the
  // sampled close pairs must reach from below.
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = std::exp(2.0);
  g(1, 1) = std::exp(-1.0);
  const AtomicMeasure mu(2, {{1.0, GroupElement(g)}});
  const Kappa0Estimate k = kappa0_estimate(mu, CocycleKind::norm_proj, 3.0, 2000, 1);
  EXPECT_GT(k.moment, 0.99 * std::pow(std::log(std::sinh(3.0)), 3));
  EXPECT_GT(k.moment, 8.0);
}

TEST(Kappa0, NondecreasingInTrials) {
  const AtomicMeasure mu = load_measure(std::string(LRW_DATA_DIR) + "/measures/sl2_zariski.json");
  double prev = 0.0;
  for (long t : {10, 100, 1000}) {
    const double m = kappa0_estimate(mu, CocycleKind::iwasawa, 3.0, t, 9).moment;
    EXPECT_GE(m, prev);
    prev = m;
  }
}

TEST(ClosePairs, DistanceRangeAndFiber) {
  RngStream rng(7, 0);
  for (int t = 0; t < 200; ++t) {
    const auto [x, y] = sample_close_proj_pair(rng, 3);
    const double d = proj_dist(x, y);
    EXPECT_GT(d, 1e-7);
    EXPECT_LE(d, 1.0 + 1e-15);
    const auto [a, b] = sample_close_flag_pair(rng, 3);
    EXPECT_EQ(fiber(a), fiber(b));
  }
}

#include "curtain/applications.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

namespace curtain {
namespace {

using testing::cols;
using testing::random_vector;

Simplex<double> symmetric_tetrahedron(double h = 0.5) {
  return Simplex<double>::create(cols({{1, 0, h}, {-1, 0, h}, {0, 1, -h}, {0, -1, -h}}));
}

WallCell<double> wall(const Eigen::Vector3d& apex, const Eigen::Vector3d& g1, const Eigen::Vector3d& g2) {
  Matrix g(3, 2);
  g.col(0) = g1;
  g.col(1) = g2;
  return WallCell<double>{0, 1, {apex, g}};
}

Curtain<double> single_wall(const WallCell<double>& w) {
  Curtain<double> c;
  c.apex = w.cone.apex;
  c.part = {0};
  c.complement = {1, 2, 3};
  c.walls = {w};
  return c;
}

double plane_residual(const SplinePiece& p, double t) {
  const Eigen::Vector3d x = lift_point(p.at(t));
  return std::abs(p.plane.head<3>().dot(x) - p.plane(3));
}

MassDistribution symmetric_cloud(CounterRng& rng, int pairs, const Eigen::Vector2d& shift) {
  Matrix pts(2, 2 * pairs);
  for (int k = 0; k < pairs; ++k) {
    const Eigen::Vector2d p = shift + Eigen::Vector2d(random_vector(rng, 2, -0.3, 0.3));
    pts.col(2 * k) = p;
    pts.col(2 * k + 1) = -p;
  }
  return MassDistribution::points(pts);
}

TEST(Lift, PointsAndMass) {
  const auto lifted = lift_measures({MassDistribution::points(cols({{1, 0}, {0.5, -2}}), Vector{{3, 0.25}})});
  const auto& c = lifted.front().cloud();
  EXPECT_EQ(Eigen::Vector3d(c.points.col(0)), Eigen::Vector3d(1, 0, 1));
  EXPECT_EQ(c.weights(0), 3.0);
  EXPECT_EQ(lifted.front().total(), 3.25);
}

TEST(Lift, DiscSamplesOnParaboloid) {
  const auto disc = MassDistribution::body(disc_polygon(Vector::Zero(2), 1.0, 48));
  const auto cloud = sample_distribution(disc, 5000, 4);
  const auto lifted = lift_measures({MassDistribution::points(cloud.points, cloud.weights)});
  const auto& c = lifted.front().cloud();
  for (Eigen::Index k = 0; k < c.points.cols(); ++k)
    EXPECT_EQ(c.points(2, k), c.points(0, k) * c.points(0, k) + c.points(1, k) * c.points(1, k));
  EXPECT_EQ(lifted.front().total(), cloud.weights.sum());
}

TEST(Lift, BodiesRejected) {
  try {
    lift_measures({MassDistribution::body(disc_polygon(Vector::Zero(2), 1.0, 8))});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedVariant);
  }
}

TEST(Spline, HorizontalPlaneGivesCenteredCircle) {
  const double h = 0.7;
  const auto w = wall({0, 0, h}, {1, 0, 0}, {0, 1, 0});
  const auto sp = curtain_to_spline(single_wall(w), Simplex<double>::regular(3));
  ASSERT_EQ(sp.pieces.size(), 1u);
  const auto& p = sp.pieces.front();
  EXPECT_EQ(p.kind, PieceKind::Arc);
  EXPECT_LT(p.center.norm(), 1e-15);
  EXPECT_NEAR(p.radius, std::sqrt(h), 1e-15);
  EXPECT_NEAR(p.t1 - p.t0, std::numbers::pi / 2, 1e-12);
}

TEST(Spline, TiltedPlaneCompletesTheSquare) {
  const auto w = wall({0, 0, 0}, {1, 0, 2}, {0, 1, 0});
  const auto sp = curtain_to_spline(single_wall(w), Simplex<double>::regular(3));
  ASSERT_EQ(sp.pieces.size(), 1u);
  const auto& p = sp.pieces.front();
  EXPECT_LT((p.center - Eigen::Vector2d(1, 0)).norm(), 1e-15);
  EXPECT_NEAR(p.radius, 1.0, 1e-15);
  EXPECT_NEAR(p.t1 - p.t0, std::numbers::pi, 1e-12);
  for (int k = 0; k <= 100; ++k) {
    const Eigen::Vector2d q = p.at(p.t0 + (p.t1 - p.t0) * k / 100.0);
    EXPECT_NEAR((q - Eigen::Vector2d(1, 0)).squaredNorm(), 1.0, 1e-12);
    EXPECT_GE(q.y(), -1e-12);
  }
}

TEST(Spline, VerticalPlaneGivesSegment) {
  const auto w = wall({0.5, 0, 0}, {0, 1, 0}, {0, 0, 1});
  const auto sp = curtain_to_spline(single_wall(w), Simplex<double>::regular(3));
  ASSERT_EQ(sp.pieces.size(), 1u);
  const auto& p = sp.pieces.front();
  EXPECT_EQ(p.kind, PieceKind::Segment);
  // lifted points (0.5, y, 0.25 + y^2) lie in the wedge for y >= 0
  for (double t : {0.0, 1.0, 10.0}) {
    if (t < p.t0 || t > p.t1) continue;
    EXPECT_NEAR(p.at(t).x(), 0.5, 1e-15);
  }
  EXPECT_NEAR(std::min(std::abs(p.at(p.t0).y()), std::abs(p.at(p.t1).y())), 0.0, 1e-12);
}

TEST(Spline, SingletonPartitionGivesThreeChainedArcs) {
  const auto s = Simplex<double>::regular(3);
  const auto c = curtain_from_partition(s, Vector{{0.1, 0.05, 1.0}}, {0});
  const auto sp = curtain_to_spline(c, s);
  ASSERT_EQ(sp.pieces.size(), 3u);
  EXPECT_EQ(sp.chain_starts.size(), 1u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(sp.pieces[k].kind, PieceKind::Arc);
    EXPECT_LT((sp.pieces[k].end() - sp.pieces[(k + 1) % 3].start()).norm(), 1e-9);
  }
}

TEST(Spline, PiecesSatisfyPlaneAndParaboloid) {
  CounterRng rng(81);
  const auto s = Simplex<double>::regular(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Vector apex = random_vector(rng, 3, -1, 1);
    for (const auto& a : vertex_bipartitions(3)) {
      std::vector<int> part;
      for (std::size_t i = 0; i < 4; ++i)
        if (a[i] == 1) part.push_back(static_cast<int>(i));
      const auto sp = curtain_to_spline(curtain_from_partition(s, apex, part), s);
      for (const auto& p : sp.pieces) {
        if (!p.bounded()) continue;
        for (int k = 0; k < 100; ++k) {
          const double t = p.t0 + (p.t1 - p.t0) * (k + 0.5) / 100;
          EXPECT_LE(plane_residual(p, t), 1e-9);
          if (p.kind == PieceKind::Arc) EXPECT_NEAR((p.at(t) - p.center).norm(), p.radius, 1e-9 * std::max(1.0, p.radius));
        }
      }
      for (std::size_t k = 0; k + 1 < sp.pieces.size(); ++k) {
        const bool chain_break = std::find(sp.chain_starts.begin(), sp.chain_starts.end(), k + 1) != sp.chain_starts.end();
        if (!chain_break) EXPECT_LT((sp.pieces[k].end() - sp.pieces[k + 1].start()).norm(), 1e-9);
      }
    }
  }
}

TEST(Spline, SideTestsAgree) {
  CounterRng rng(82);
  const auto s = Simplex<double>::regular(3);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Vector apex = random_vector(rng, 3, -1, 1);
    if (trial % 2 == 0) apex(2) = apex.head<2>().squaredNorm() + 0.5;  // above the paraboloid
    const auto a = vertex_bipartitions(3)[static_cast<std::size_t>(trial % 7)];
    std::vector<int> part;
    for (std::size_t i = 0; i < 4; ++i)
      if (a[i] == 1) part.push_back(static_cast<int>(i));
    const auto c = curtain_from_partition(s, apex, part);
    const auto sp = curtain_to_spline(c, s);
    for (int k = 0; k < 200; ++k) {
      const Eigen::Vector2d p = random_vector(rng, 2, -3, 3);
      if (distance_to_spline(sp, p) < 1e-6) continue;
      EXPECT_EQ(planar_side_2d(sp, p), planar_side_3d(c, s, p)) << "trial " << trial << " point " << p.transpose();
      ++checked;
    }
  }
  EXPECT_GT(checked, 7000);
}

TEST(Spline, SevenBipartitions) { EXPECT_EQ(vertex_bipartitions(3).size(), 7u); }

TEST(SolveSpline, SymmetricCloudsHaveAxisSolution) {
  CounterRng rng(83);
  const auto tet = symmetric_tetrahedron();
  std::vector<MassDistribution> clouds{symmetric_cloud(rng, 40, {0.5, 0.1}), symmetric_cloud(rng, 40, {-0.2, 0.6}),
                                       symmetric_cloud(rng, 40, {0.1, -0.3})};
  // oracle: any apex on the vertical axis with partition {0,2} | {1,3} bisects symmetric measures
  for (double z : {0.3, 1.0, 2.5}) {
    const auto c = curtain_from_partition(tet, Vector{{0, 0, z}}, {1, 3});
    for (const auto& m : clouds) {
      double side = 0;
      for (Eigen::Index k = 0; k < m.cloud().points.cols(); ++k) side += planar_side_3d(c, tet, m.cloud().points.col(k));
      EXPECT_EQ(side, m.total() / 2);
    }
  }
  const auto res = solve_circular_spline(clouds, tet);
  EXPECT_LE(res.residuals.maxCoeff(), 0.5 + 1e-9);
  EXPECT_LT((res.residuals - Vector{{0, 0, 0}}).maxCoeff(), 1.0);
  EXPECT_NE(res.solution.status, SolveStatus::BudgetExceeded);
}

TEST(SolveSpline, RepeatedMeasureHasEqualResiduals) {
  CounterRng rng(84);
  Matrix pts(2, 301);
  for (Eigen::Index k = 0; k < pts.cols(); ++k) pts.col(k) = random_vector(rng, 2);
  const auto m = MassDistribution::points(pts);
  const auto res = solve_circular_spline({m, m, m}, Simplex<double>::regular(3));
  EXPECT_EQ(res.residuals(0), res.residuals(1));
  EXPECT_EQ(res.residuals(1), res.residuals(2));
  EXPECT_LE(res.residuals(0), 0.5 + 1e-9);
}

TEST(SolveSpline, RandomCloudsReachFloor) {
  CounterRng rng(85);
  std::vector<MassDistribution> clouds;
  for (int i = 0; i < 3; ++i) {
    Matrix pts(2, 2000);
    const Eigen::Vector2d c = random_vector(rng, 2, -1, 1);
    for (Eigen::Index k = 0; k < pts.cols(); ++k) pts.col(k) = c + Eigen::Vector2d(random_vector(rng, 2, -0.6, 0.6));
    clouds.push_back(MassDistribution::points(pts));
  }
  const auto res = solve_circular_spline(clouds, Simplex<double>::regular(3));
  EXPECT_LE(res.residuals.maxCoeff(), 0.5 + 1e-9);
  EXPECT_NE(res.solution.status, SolveStatus::BudgetExceeded);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(res.residuals(static_cast<Eigen::Index>(i)), std::abs(res.solution.matrix.entries(static_cast<Eigen::Index>(i), 1) - 1000.0));
}

}  // namespace
}  // namespace curtain

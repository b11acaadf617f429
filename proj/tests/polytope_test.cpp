#include "curtain/polytope.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "curtain/geometry.hpp"
#include "curtain/measures.hpp"
#include "test_support.hpp"

namespace curtain {
namespace {

using testing::random_vector;

Polytope unit_cube(Eigen::Index d) {
  Matrix v(d, 1 << d);
  for (int mask = 0; mask < (1 << d); ++mask)
    for (Eigen::Index k = 0; k < d; ++k) v(k, mask) = (mask >> k) & 1;
  return Polytope::from_vertices(v);
}

Polytope corner_simplex(Eigen::Index d) {
  Matrix v = Matrix::Zero(d, d + 1);
  v.rightCols(d).setIdentity();
  return Polytope::from_vertices(v);
}

TEST(Polytope, UnitCubeVolume) {
  for (Eigen::Index d = 1; d <= 5; ++d) {
    const auto c = unit_cube(d);
    EXPECT_EQ(c.num_vertices(), 1 << d);
    EXPECT_EQ(static_cast<Eigen::Index>(c.halfspaces().size()), 2 * d);
    EXPECT_NEAR(polytope_volume(c), 1.0, 1e-12);
  }
}

TEST(Polytope, CornerSimplexVolume) {
  double fact = 1;
  for (Eigen::Index d = 1; d <= 5; ++d) {
    fact *= static_cast<double>(d);
    EXPECT_NEAR(polytope_volume(corner_simplex(d)), 1.0 / fact, 1e-13);
  }
}

TEST(Polytope, HexagonVolumeMatchesShoelace) {
  const auto z = build_zonotope(Simplex<double>::regular(2));
  EXPECT_NEAR(polytope_volume(z.polytope), testing::shoelace_area(z.vertices()), 1e-12);
}

TEST(Polytope, InteriorPointsAreNotVertices) {
  Matrix v(2, 5);
  v << 0, 1, 0, 1, 0.5, 0, 0, 1, 1, 0.5;
  EXPECT_EQ(Polytope::from_vertices(v).num_vertices(), 4);
}

TEST(Clip, SquareHalf) {
  const auto sq = unit_cube(2);
  const auto half = clip_polytope(sq, HalfSpace<double>{Vector{{-1, 0}}, -0.5});
  EXPECT_EQ(half.num_vertices(), 4);
  EXPECT_NEAR(polytope_volume(half), 0.5, 1e-15);
  EXPECT_NEAR(half.upper()(0), 0.5, 1e-15);
}

TEST(Clip, ContainingHalfSpaceLeavesVerticesUnchanged) {
  const auto s = corner_simplex(3);
  const auto out = clip_polytope(s, HalfSpace<double>{Vector{{1, 1, 1}}, -1});
  EXPECT_EQ(out.vertices(), s.vertices());
}

TEST(Clip, DisjointHalfSpaceGivesEmpty) {
  const auto out = clip_polytope(unit_cube(3), HalfSpace<double>{Vector{{1, 0, 0}}, 2});
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(polytope_volume(out), 0.0);
}

TEST(Clip, ComplementaryPartsAddUp) {
  CounterRng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index d = 2 + trial % 3;
    Matrix pts(d, 12);
    for (Eigen::Index j = 0; j < pts.cols(); ++j) pts.col(j) = random_vector(rng, d);
    const auto p = Polytope::from_vertices(pts);
    const HalfSpace<double> h{random_vector(rng, d), rng.uniform(-0.3, 0.3)};
    const double whole = polytope_volume(p);
    const double a = polytope_volume(clip_polytope(p, h));
    const double b = polytope_volume(clip_polytope(p, h.complement()));
    EXPECT_NEAR(a + b, whole, 1e-12 * std::max(1.0, whole));
  }
}

TEST(Clip, AgreesWithSamplingFraction) {
  CounterRng rng(18);
  const auto cube = unit_cube(3);
  const HalfSpace<double> h{Vector{{1, 2, -1}}, 0.4};
  const double exact = polytope_volume(clip_polytope(cube, h));
  int hits = 0;
  const int n = 200000;
  for (int k = 0; k < n; ++k)
    if (h.contains(random_vector(rng, 3, 0, 1))) ++hits;
  const double p = double(hits) / n;
  EXPECT_NEAR(exact, p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(Polytope, FromHalfspacesCube) {
  std::vector<HalfSpace<double>> hs;
  for (Eigen::Index k = 0; k < 3; ++k) {
    Vector e = Vector::Zero(3);
    e(k) = 1;
    hs.push_back({e, 0});
    hs.push_back({-e, -1});
  }
  hs.push_back({Vector{{1, 1, 1}}, -10});  // redundant
  const auto p = Polytope::from_halfspaces(hs, 3);
  EXPECT_EQ(p.num_vertices(), 8);
  EXPECT_EQ(p.halfspaces().size(), 6u);
  EXPECT_NEAR(p.volume(), 1.0, 1e-14);
}

TEST(Polytope, RepeatedClipsStayConsistent) {
  // Clip a rhombic dodecahedron by the three half-spaces of each fan cone;
  // the four pieces tile it.
  const auto s = Simplex<double>::regular(3);
  const auto z = build_zonotope(s);
  CounterRng rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    Vector x = random_vector(rng, 3, -0.5, 0.5);
    const auto fan = face_fan(s).translated_to(x);
    double sum = 0;
    for (Eigen::Index i = 0; i < 4; ++i) sum += z.polytope.clip(cone_halfspaces(fan.cone(i))).volume();
    EXPECT_NEAR(sum, z.volume, 1e-12 * z.volume);
  }
}

}  // namespace
}  // namespace curtain

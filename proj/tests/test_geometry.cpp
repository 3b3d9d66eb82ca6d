#include <gtest/gtest.h>

#include <cmath>

#include "sselab/geometry.hpp"

using namespace sselab;

namespace {

Domain interval(double x0) {
  Domain d;
  d.x0 = {x0, 0.0};
  return d;
}

Domain square(Point x0) {
  Domain d;
  d.dim = 2;
  d.upper = {1.0, 1.0};
  d.x0 = x0;
  return d;
}

}  // namespace

TEST(Geometry, IntervalNodesAndNormals) {
  const Mesh m = build_mesh(interval(-1.0), 8);
  EXPECT_DOUBLE_EQ(m.spacing()[0], 0.125);
  ASSERT_EQ(m.boundary().size(), 2u);
  EXPECT_EQ(m.boundary()[0].id, 0u);
  EXPECT_EQ(m.boundary()[1].id, 8u);
  EXPECT_EQ(m.boundary()[0].normal[0], -1.0);
  EXPECT_EQ(m.boundary()[1].normal[0], 1.0);
  EXPECT_EQ(m.interior_count(), 7u);
}

TEST(Geometry, Gamma0OnIntervalFollowsObserverSide) {
  auto left = gamma0_nodes(build_mesh(interval(-1.0), 8));
  ASSERT_EQ(left.size(), 1u);
  EXPECT_DOUBLE_EQ(left[0].position[0], 1.0);
  auto right = gamma0_nodes(build_mesh(interval(2.0), 8));
  ASSERT_EQ(right.size(), 1u);
  EXPECT_DOUBLE_EQ(right[0].position[0], 0.0);
}

TEST(Geometry, SquareBoundaryEnumeratedByHand) {
  const Mesh m = build_mesh(square({-1.0, -1.0}), 4);
  ASSERT_EQ(m.boundary().size(), 16u);
  int per_face[4] = {0, 0, 0, 0};
  int corners = 0;
  double perimeter = 0.0;
  for (const auto& b : m.boundary()) {
    ++per_face[b.face];
    corners += b.corner;
    perimeter += b.surface_weight;
    EXPECT_DOUBLE_EQ(std::hypot(b.normal[0], b.normal[1]), 1.0);
  }
  // corners belong to the x faces, which therefore carry 5 nodes each
  EXPECT_EQ(per_face[0], 5);
  EXPECT_EQ(per_face[1], 5);
  EXPECT_EQ(per_face[2], 3);
  EXPECT_EQ(per_face[3], 3);
  EXPECT_EQ(corners, 4);
  EXPECT_NEAR(perimeter, 4.0 - 4 * 0.125, 1e-15);  // corner weights h/2 on the x faces only
  EXPECT_EQ(m.interior_count(), 9u);
}

TEST(Geometry, SquareGamma0ByFaceSign) {
  const Mesh m = build_mesh(square({-1.0, 0.5}), 8);
  for (const auto& b : m.boundary()) {
    double dot = 0.0;
    for (int a = 0; a < 2; ++a) dot += (b.position[a] - m.domain().x0[a]) * b.normal[a];
    EXPECT_EQ(b.in_gamma0, dot > 0.0);
    if (b.face == 1) EXPECT_TRUE(b.in_gamma0);
    if (b.face == 0) EXPECT_FALSE(b.in_gamma0);
  }
  EXPECT_EQ(gamma0_nodes(m).size(), m.boundary().size() - 9u);
}

TEST(Geometry, Gamma0TiesAreExcluded) {
  // x0 level with the bottom face: (x - x0).nu = 0 there.
  const Mesh m = build_mesh(square({-1.0, 0.0}), 4);
  for (const auto& b : m.boundary())
    if (b.face == 2) EXPECT_FALSE(b.in_gamma0);
}

TEST(Geometry, NormalsPointAwayFromCentroid) {
  const Mesh m = build_mesh(square({-1.0, -1.0}), 6);
  for (const auto& b : m.boundary()) {
    const double dot = (b.position[0] - 0.5) * b.normal[0] + (b.position[1] - 0.5) * b.normal[1];
    EXPECT_GT(dot, 0.0);
  }
}

TEST(Geometry, BoundaryNormalLookup) {
  const Mesh m = build_mesh(square({-1.0, -1.0}), 4);
  EXPECT_EQ(boundary_normal(build_mesh(interval(-1.0), 8), 0)[0], -1.0);
  const Point top = boundary_normal(m, m.node_id(2, 4));
  EXPECT_EQ(top[0], 0.0);
  EXPECT_EQ(top[1], 1.0);
  EXPECT_THROW(boundary_normal(m, m.node_id(2, 2)), std::out_of_range);
}

namespace {

std::array<bool, 4> face_flags(const Mesh& m) {
  std::array<bool, 4> f{};
  for (const auto& b : m.boundary())
    if (!b.corner) f[b.face] = b.in_gamma0;
  return f;
}

Point along_ray(Point x0, double scale) { return {0.5 + scale * (x0[0] - 0.5), 0.5 + scale * (x0[1] - 0.5)}; }

}  // namespace

TEST(Geometry, Gamma0StableUnderRefinement) {
  for (Point x0 : {Point{-1.0, -0.5}, Point{2.0, 0.3}}) {
    const auto coarse = face_flags(build_mesh(square(x0), 4));
    for (int n : {8, 16, 32}) EXPECT_EQ(face_flags(build_mesh(square(x0), n)), coarse);
  }
}

// A face's flag depends on which side of the face's line x0 lies. Moving x0
// outward along a ray from the centroid keeps every flag when x0 already lies
// beyond the centroid in each coordinate; otherwise a flag can flip once.
TEST(Geometry, FartherObserverAlongRay) {
  const auto base = face_flags(build_mesh(square({-1.0, -0.5}), 8));
  for (double scale : {2.0, 4.0, 10.0}) EXPECT_EQ(face_flags(build_mesh(square(along_ray({-1.0, -0.5}, scale)), 8)), base);
  // (2, 0.3): y-coordinate below the centroid, the bottom face leaves Gamma0
  const auto near = face_flags(build_mesh(square({2.0, 0.3}), 8));
  const auto far = face_flags(build_mesh(square(along_ray({2.0, 0.3}, 3.0)), 8));
  EXPECT_TRUE(near[2]);
  EXPECT_FALSE(far[2]);
}

TEST(Geometry, RejectsObserverInsideAndCoarseMeshes) {
  try {
    build_mesh(square({0.5, 0.5}), 8);
    FAIL() << "expected rejection";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("signed distance"), std::string::npos);
  }
  EXPECT_THROW(build_mesh(square({0.0, 0.0}), 8), std::invalid_argument);  // on the closure
  EXPECT_THROW(build_mesh(interval(-1.0), 3), std::invalid_argument);
}

TEST(Geometry, SquaredDistanceRange) {
  const auto r = interval(-1.0).squared_distance_range();
  EXPECT_DOUBLE_EQ(r[0], 1.0);
  EXPECT_DOUBLE_EQ(r[1], 4.0);
}

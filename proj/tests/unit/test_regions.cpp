#include <cmath>

#include "conelab/regions.hpp"
#include "doctest.h"

using namespace conelab;

namespace {

CrackSet cone_crack(const MinimalCone& c, const Ball& b, double spacing = 0.04) {
  return CrackSet(mesh_cone(c, b, spacing), spacing / 2);
}

// Sampled check of Z ∩ B = Z' ∩ B plus the center contract.
bool locally_equal(const MinimalCone& a, const MinimalCone& b, const Vec3& o, double r,
                   CounterRng& rng) {
  const Ball ball(o, r);
  for (const auto& [x, y] : {std::pair{&a, &b}, std::pair{&b, &a}})
    for (const Vec3& p : sample_cone_points(*x, ball, 400, rng))
      if (y->distance(p) > 1e-9 * r) return false;
  return true;
}

}  // namespace

TEST_CASE("label_regions counts type + 1 for centered cones") {
  const Ball ball({}, 1.0);
  CHECK(label_regions(make_cone(ConeType::P, {}, Mat3{}), ball, 0.05, 80).count() == 2);
  CHECK(label_regions(make_cone(ConeType::Y, {}, Mat3{}), ball, 0.05, 80).count() == 3);
  CHECK(label_regions(make_cone(ConeType::T, {}, Mat3{}), ball, 0.05, 80).count() == 4);
}

TEST_CASE("label_regions with a far T center sees one sheet") {
  const auto& A = reference::kTetraVertices;
  const Vec3 c = normalized(A[0] + A[1]) * -3.0;  // ball center sits in wedge (A1, A2)
  const auto T = make_cone(ConeType::T, c, Mat3{});
  const Ball ball({}, 1.0);
  CHECK(T.distance(ball.center) < 1e-12);
  const int coarse = label_regions(T, ball, 0.05, 80).count();
  const int fine = label_regions(T, ball, 0.05, 128).count();
  CHECK(coarse == 2);
  CHECK(fine == 2);
}

TEST_CASE("label_regions preconditions") {
  const auto P = make_cone(ConeType::P, {}, Mat3{});
  CHECK_THROWS_AS(label_regions(P, Ball({}, 1.0), 0.2, 200), std::invalid_argument);
  CHECK_THROWS_AS(label_regions(P, Ball({}, 1.0), 0.05, 20), std::invalid_argument);
}

TEST_CASE("label_regions count is invariant under rigid motions") {
  CounterRng rng(21, "rigid");
  for (ConeType t : {ConeType::P, ConeType::Y, ConeType::T}) {
    const auto base = make_cone(t, {0.1, -0.05, 0.08}, Mat3{});
    const Ball ball({}, 1.0);
    const int ref = label_regions(base, ball, 0.05, 80).count();
    for (int trial = 0; trial < 3; ++trial) {
      const Mat3 R = random_rotation(rng);
      const Vec3 s = rng.in_ball({}, 2.0);
      const Ball moved(R * ball.center + s, ball.radius);
      CHECK(label_regions(base.transformed(R, s), moved, 0.05, 80).count() == ref);
    }
  }
}

TEST_CASE("is_separating examples") {
  const Ball ball({}, 1.0);
  const auto P = make_cone(ConeType::P, {}, Mat3{});
  const auto disk = mesh_cone(P, ball, 0.04);
  CHECK(is_separating(CrackSet(disk, 0.02), P, ball, 1e-5, 64));

  const auto holed = punch_hole(disk, Ball({}, 0.1));
  const CrackSet H(holed, 0.02);
  // independent witness: a straight path through the hole
  CHECK_FALSE(H.segment_crosses({0, -0.5, 0}, {0, 0.5, 0}));
  CHECK_FALSE(is_separating(H, P, ball, 1e-5, 64));

  const auto Y = make_cone(ConeType::Y, {}, Mat3{});
  CHECK(is_separating(cone_crack(Y, ball), Y, ball, 1e-5, 64));
  const auto T = make_cone(ConeType::T, {}, Mat3{});
  const auto rep = separation_report(cone_crack(T, ball), T, ball, 1e-5, 64);
  CHECK(rep.separating);
  CHECK(rep.regions == 4);

  const auto tilted = plane_cone({}, {0, 0.2, 1});
  CHECK_THROWS_AS(is_separating(CrackSet(disk, 0.02), tilted, ball, 1e-3, 64), ContainmentError);
}

TEST_CASE("orientation_map examples") {
  const Ball outer({}, 1.0);
  const auto P = make_cone(ConeType::P, {}, Mat3{});
  const CrackSet plane(mesh_cone(P, outer, 0.04), 0.02);
  const auto id = orientation_map(plane, Ball({}, 0.25), P, outer, P, 1e-5, 64);
  CHECK(id.map == std::vector<int>{1, 2});
  CHECK(id.radius_warning);

  const auto Y = make_cone(ConeType::Y, {}, Mat3{});
  const CrackSet ycrack = cone_crack(Y, outer);
  const Vec3 x{0.5, 0, 0.1};
  const auto local = recenter(Y, x, 0.2, 2.0);
  CHECK(local.cone.type() == ConeType::P);
  const auto m = orientation_map(ycrack, Ball(x, local.r1), local.cone, outer, Y, 1e-5, 64);
  REQUIRE(m.map.size() == 2);
  CHECK(m.map[0] != m.map[1]);
  for (int v : m.map) CHECK((v >= 1 && v <= 3));

  const CrackSet holed(punch_hole(mesh_cone(P, outer, 0.04), Ball({}, 0.1)), 0.02);
  CHECK_THROWS_AS(orientation_map(holed, Ball({}, 0.25), P, outer, P, 1e-5, 64), OrientationError);
}

TEST_CASE("orientation maps compose injectively along nested balls") {
  const Ball outer({}, 1.0);
  const auto Y = make_cone(ConeType::Y, {}, Mat3{});
  const CrackSet crack = cone_crack(Y, outer, 0.03);
  const Vec3 x{0.12, 0, -0.05};
  std::vector<Ball> balls;
  std::vector<MinimalCone> cones;
  for (double r : {0.05, 0.1, 0.2, 0.4}) {
    const auto rc = recenter(Y, x, r, 2.0);
    balls.emplace_back(x, rc.r1);
    cones.push_back(rc.cone);
  }
  balls.push_back(outer);
  cones.push_back(Y);
  std::vector<int> composed;
  for (std::size_t p = 0; p + 1 < balls.size(); ++p) {
    const auto m = orientation_map(crack, balls[p], cones[p], balls[p + 1], cones[p + 1], 1e-5, 64);
    if (p == 0) {
      composed = m.map;
    } else {
      for (int& v : composed) v = m.map[v - 1];
    }
    std::vector<int> s = composed;
    std::sort(s.begin(), s.end());
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  }
  const auto direct = orientation_map(crack, balls[0], cones[0], outer, Y, 1e-5, 64);
  CHECK(direct.map == composed);
}

TEST_CASE("recenter examples") {
  CounterRng rng(4, "recenter-ex");
  const auto P = plane_cone({0.3, 0.1, 0}, {0, 0, 1});
  const auto rp = recenter(P, {2, -1, 0}, 0.5, 3.0);
  CHECK(rp.r1 == 0.5);
  CHECK(rp.cone.type() == ConeType::P);
  CHECK(locally_equal(P, rp.cone, {2, -1, 0}, 0.5, rng));

  // spine at distance 0.5 r0: first admissible radius is V r0 with the same Y
  const double r0 = 0.1;
  const auto Y = make_cone(ConeType::Y, {-0.5 * r0, 0, 0}, Mat3{});
  const auto ry = recenter(Y, {0, 0, 0}, r0, 4.0);
  CHECK(ry.r1 == doctest::Approx(4.0 * r0));
  CHECK(ry.cone.type() == ConeType::Y);
  CHECK(locally_equal(Y, ry.cone, {}, ry.r1, rng));

  // spine far away: the local sheet as a plane
  const auto Yfar = make_cone(ConeType::Y, {-2.0 * r0, 0, 0}, Mat3{});
  const auto rf = recenter(Yfar, {}, r0, 4.0);
  CHECK(rf.r1 == r0);
  CHECK(rf.cone.type() == ConeType::P);
  CHECK(locally_equal(Yfar, rf.cone, {}, r0, rng));

  CHECK_THROWS_AS(recenter(Y, {0, 0.5, 0}, r0, 2.0), std::invalid_argument);
}

TEST_CASE("recenter contract on random configurations") {
  CounterRng rng(12, "recenter-prop");
  int throws = 0, total = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const ConeType t = trial % 3 == 0 ? ConeType::P : (trial % 3 == 1 ? ConeType::Y : ConeType::T);
    const auto cone = make_cone(t, rng.in_ball({}, 1.0), random_rotation(rng));
    const Vec3 origin = cone.closest_point(rng.in_ball({}, 0.5));
    const double r0 = rng.uniform(0.05, 0.6);
    const double V = rng.uniform(1.5, 4.0);
    ++total;
    try {
      const auto rc = recenter(cone, origin, r0, V);
      const bool radius_ok = rc.r1 == r0 || rc.r1 == V * r0 || rc.r1 == V * V * r0;
      CHECK(radius_ok);
      CHECK(dist(rc.cone.center(), origin) < rc.r1 / V);
      CHECK(rc.cone.distance(origin) <= 1e-9 * r0);
      CHECK(locally_equal(cone, rc.cone, origin, rc.r1, rng));
    } catch (const std::domain_error&) {
      ++throws;
      // brute force over every candidate at every radius
      CHECK(t == ConeType::T);
      CHECK(dist(cone.center(), origin) >= V * r0);
      for (double r1 : {r0, V * r0, V * V * r0}) {
        for (const Sector& s : cone.sectors())
          CHECK_FALSE(locally_equal(cone, plane_cone(origin, s.normal), origin, r1, rng));
        for (int j = 0; j < 4; ++j) {
          const Vec3 aj = cone.rotation() * reference::kTetraVertices[j];
          const Vec3 ak = cone.rotation() * reference::kTetraVertices[(j + 1) % 4];
          const Vec3 n = normalized(ak - aj * dot(ak, aj));
          const SpineComponent line{cone.center(), aj, true};
          const auto y = make_cone(ConeType::Y, line.closest_point(origin),
                                   orthonormalize(Mat3::from_columns(n, cross(aj, n), aj)));
          const bool centered = line.distance(origin) < r1 / V;
          CHECK_FALSE((centered && locally_equal(cone, y, origin, r1, rng)));
        }
      }
    }
  }
  MESSAGE("recenter gap cases: " << throws << " / " << total);
}

TEST_CASE("recenter reports the configuration no candidate can serve") {
  // Origin on wedge (A1, A2), 0.9 r0 off ray A1, a little over 2 r0 from the
  // center, with ray A2 just inside 2 r0; V = 2. The plane fails at every
  // radius (ray A1 is inside the ball), the Y along A1 fails at r0 (spine
  // not within r0/2) and at 2 r0 (ray A2 inside the ball), and the T fails
  // at 4 r0 (center not within 2 r0).
  const auto& A = reference::kTetraVertices;
  const Vec3 n = normalized(A[1] - A[0] * dot(A[1], A[0]));
  const double r0 = 0.1, V = 2.0;
  const auto T = make_cone(ConeType::T, {}, Mat3{});
  const Vec3 o = A[0] * (1.8 * r0) + n * (0.9 * r0);
  REQUIRE(T.distance(o) < 1e-15);
  REQUIRE(norm(o) > V * r0);
  const SpineComponent ray2{{}, A[1], false};
  REQUIRE(ray2.distance(o) < V * r0);
  CHECK_THROWS_AS(recenter(T, o, r0, V), std::domain_error);

  // exact oracle: some other sheet always enters B(o, r1), so no plane works
  const int own = T.nearest_sector(o);
  for (double r1 : {r0, V * r0, V * V * r0}) {
    double other = 1e300;
    const auto sec = T.sectors();
    for (int s = 0; s < static_cast<int>(sec.size()); ++s)
      if (s != own) other = std::min(other, sec[s].distance(o));
    CHECK(other < r1);
  }
}

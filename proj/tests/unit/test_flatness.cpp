#include <cmath>
#include <numbers>
#include <sstream>

#include "conelab/flatness.hpp"
#include "conelab/regions.hpp"
#include "doctest.h"

using namespace conelab;

namespace {

CrackSet cone_crack(const MinimalCone& c, const Ball& b, double spacing = 0.04) {
  return CrackSet(mesh_cone(c, b, spacing), spacing / 2);
}

std::vector<Vec3> samples_in(const CrackSet& E, const Ball& b) {
  std::vector<Vec3> out;
  for (int i : E.samples_in_ball(b)) out.push_back(E.samples()[i]);
  return out;
}

// min over a dense grid of normals near `axis` of max |(y - x).n| / r,
// refined twice around the best node.
double plane_grid_oracle(const std::vector<Vec3>& pts, const Vec3& x, double r, const Vec3& axis,
                         double cap) {
  const Vec3 u = any_orthogonal(axis), v = cross(axis, u);
  auto value = [&](double a, double b) {
    const Vec3 n = normalized(axis + u * a + v * b);
    double m = 0.0;
    for (const Vec3& p : pts) m = std::max(m, std::abs(dot(p - x, n)));
    return m / r;
  };
  double ca = 0, cb = 0, best = value(0, 0), span = cap;
  for (int round = 0; round < 3; ++round) {
    const int n = 40;
    double ba = ca, bb = cb;
    for (int i = -n; i <= n; ++i)
      for (int j = -n; j <= n; ++j) {
        const double a = ca + span * i / n, b = cb + span * j / n;
        const double f = value(a, b);
        if (f < best) best = f, ba = a, bb = b;
      }
    ca = ba, cb = bb;
    span *= 4.0 / n;
  }
  return best;
}

}  // namespace

TEST_CASE("one_sided_deviation examples") {
  const Ball ball({}, 1.0);
  const auto P = plane_cone({}, {0, 0, 1});
  const CrackSet E = cone_crack(P, ball);
  CHECK(one_sided_deviation(E, P, Ball({0.1, 0.2, 0}, 0.5)) < 1e-15);
  const double t = 0.03;
  CHECK(one_sided_deviation(E, plane_cone({0, 0, t}, {0, 0, 1}), Ball({}, 0.5)) ==
        doctest::Approx(t / 0.5).epsilon(1e-12));
  CHECK(one_sided_deviation(E, P, Ball({0, 0, 5}, 0.5)) == 0.0);
}

TEST_CASE("beta of exact cones") {
  const Ball ball({}, 1.0);
  const auto P = plane_cone({}, {0, 0, 1});
  const CrackSet plane = cone_crack(P, ball);
  CHECK(beta(plane, {0.1, -0.2, 0}, 0.5).value <= 1e-9);

  const auto Y = make_cone(ConeType::Y, {}, Mat3{});
  const CrackSet ycrack = cone_crack(Y, ball);
  const auto by = beta(ycrack, {0, 0, 0.1}, 0.5);
  CHECK(by.value <= 1e-6);
  CHECK(by.cone.type() == ConeType::Y);

  CHECK_THROWS_AS(beta(plane, {0, 0, 0.1}, 0.5), std::invalid_argument);
}

TEST_CASE("beta of a plane with a centered bump matches a plane-pose grid oracle") {
  const Ball ball({}, 1.0);
  const double r = 0.5, h = 0.03 * r;
  const auto tris = displace(mesh_cone(plane_cone({}, {0, 0, 1}), ball, 0.02),
                             [&](const Vec3& p) { return Vec3{0, 0, h * bump(norm(p) / (0.5 * r))}; });
  const CrackSet E(tris, 0.01);
  const Vec3 x{0, 0, h};
  BetaOptions po;
  po.ys = po.ts = false;
  const double bp = beta(E, x, r, po).value;
  const double oracle = plane_grid_oracle(samples_in(E, Ball(x, r)), x, r, {0, 0, 1}, 0.2);
  CHECK(oracle == doctest::Approx(0.03).epsilon(0.1));
  CHECK(bp == doctest::Approx(oracle).epsilon(0.1));
  CHECK(bp >= oracle * (1 - 1e-9));
  CHECK(beta(E, x, r).value <= bp);
}

TEST_CASE("hausdorff_distance_normalized examples") {
  const Ball ball({}, 1.0);
  const auto P = plane_cone({}, {0, 0, 1});
  const CrackSet E = cone_crack(P, ball);
  const Ball probe({}, 0.5);
  CHECK(hausdorff_distance_normalized(E, E, probe) < 1e-12);

  const double t = 0.02;
  const CrackSet F(mesh_cone(plane_cone({0, 0, t}, {0, 0, 1}), ball, 0.04), 0.02);
  CHECK(hausdorff_distance_normalized(E, F, probe) == doctest::Approx(t / 0.5).epsilon(0.05));

  const double hole = 0.15;
  const CrackSet H(punch_hole(mesh_cone(P, ball, 0.04), Ball({}, hole)), 0.02);
  const double d = hausdorff_distance_normalized(E, H, probe);
  CHECK(d == doctest::Approx(hausdorff_distance_normalized(H, E, probe)));
  CHECK(d >= 0.8 * hole / 0.5);
  CHECK(d <= 1.2 * hole / 0.5);
  CHECK(one_sided_deviation(H, P, probe) < 1e-15);

  const CrackSet far(mesh_cone(plane_cone({0, 0, 0.8}, {0, 0, 1}), ball, 0.04), 0.02);
  CHECK(std::isinf(hausdorff_distance_normalized(E, far, Ball({}, 0.3))));
}

TEST_CASE("hausdorff_distance_normalized is symmetric with a discrete triangle slack") {
  const Ball ball({}, 1.0);
  CounterRng rng(8, "hd-tri");
  std::vector<CrackSet> sets;
  for (int i = 0; i < 4; ++i) {
    const Vec3 n = normalized(Vec3{0, 0, 1} + rng.in_ball({}, 0.1));
    sets.emplace_back(mesh_cone(plane_cone(rng.in_ball({}, 0.02), n), ball, 0.04), 0.02);
  }
  const Ball probe({0.05, 0, 0}, 0.4);
  const double slack = 1 + sets[0].sample_spacing() / probe.radius;
  for (std::size_t a = 0; a < sets.size(); ++a)
    for (std::size_t b = 0; b < sets.size(); ++b) {
      const double ab = hausdorff_distance_normalized(sets[a], sets[b], probe);
      CHECK(ab == doctest::Approx(hausdorff_distance_normalized(sets[b], sets[a], probe)));
      for (std::size_t g = 0; g < sets.size(); ++g)
        CHECK(ab <= (hausdorff_distance_normalized(sets[a], sets[g], probe) +
                     hausdorff_distance_normalized(sets[g], sets[b], probe)) *
                            slack +
                        1e-12);
    }
}

TEST_CASE("plane deviation of the Y cone at its spine") {
  // The oracle scans every plane through the spine point on a fine
  // (polar, azimuth) grid and measures both one-sided distances against the
  // sampled sets.
  const Ball ball({}, 1.0);
  const auto Y = make_cone(ConeType::Y, {}, Mat3{});
  const CrackSet E = cone_crack(Y, ball, 0.03);
  const Vec3 x{0, 0, 0};
  const double r = 0.5;
  const auto pts = samples_in(E, Ball(x, r));
  CounterRng rng(3, "y-oracle");
  double oracle = 1e300;
  const int nt = 18, np = 36;
  for (int i = 0; i <= nt; ++i)
    for (int j = 0; j < np; ++j) {
      const double th = std::numbers::pi / 2 * i / nt, ph = 2 * std::numbers::pi * j / np;
      const Vec3 n{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
      const auto P = plane_cone(x, n);
      double m = 0.0;
      for (const Vec3& p : pts) m = std::max(m, P.distance(p));
      for (const Vec3& q : sample_cone_points(P, Ball(x, r), 300, rng))
        m = std::max(m, E.distance_capped(q, r));
      oracle = std::min(oracle, m / r);
    }
  const double golden = 0.86603;  // frozen from the oracle above
  CHECK(oracle == doctest::Approx(golden).epsilon(0.02));
  const double pf = plane_flatness(E, x, r).value;
  CHECK(pf == doctest::Approx(oracle).epsilon(0.05));

  SweepOptions so;
  so.n_centers = 2;
  so.n_radii = 1;
  const auto rep = check_reifenberg(E, Ball({}, 0.6), 0.5, so);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("check_reifenberg examples") {
  const Ball ball({}, 1.0);
  const auto P = plane_cone({}, {0, 0, 1});
  SweepOptions so;
  so.n_centers = 4;
  so.n_radii = 2;
  const auto flat = check_reifenberg(cone_crack(P, ball), ball, 1e-9, so);
  CHECK(flat.pass);
  CHECK(flat.worst_beta <= 1e-9);
  CHECK(flat.records.size() == 8);

  const auto wavy = displace(mesh_cone(P, ball, 0.02), [](const Vec3& p) {
    return Vec3{0, 0, 0.001 * std::sin(2 * std::numbers::pi * p.x / 0.25)};
  });
  const auto rep = check_reifenberg(CrackSet(wavy, 0.01), ball, 1e-2, so);
  CHECK(rep.pass);
  CHECK(rep.worst_beta > 0.0);
  for (const auto& rec : rep.records) CHECK(rec.pass == (rec.beta <= rep.threshold));
}

TEST_CASE("check_eps_minimal examples") {
  const Ball ball({}, 1.0);
  SweepOptions so;
  so.n_centers = 4;
  so.n_radii = 2;
  for (ConeType t : {ConeType::P, ConeType::Y, ConeType::T}) {
    const auto C = make_cone(t, {}, Mat3{});
    const auto rep = check_eps_minimal(cone_crack(C, ball), ball, 1e-5, so);
    CHECK(rep.pass);
  }

  const auto P = plane_cone({}, {0, 0, 1});
  const CrackSet holed(punch_hole(mesh_cone(P, ball, 0.04), Ball({0.2, 0, 0}, 0.15)), 0.02);
  CHECK(check_eps_minimal(holed, ball, 1e-5, so).pass);

  // spur: a vertical strip of height 0.1 r standing on the plane
  const double r = 0.5;
  auto tris = mesh_cone(P, ball, 0.04);
  const auto spur = mesh_cone(plane_cone({0.1, 0, 0}, {1, 0, 0}), Ball({0.1, 0, 0.025}, 0.05), 0.01);
  for (const auto& t : spur)
    if (t[0].z >= 0 && t[1].z >= 0 && t[2].z >= 0) tris.push_back(t);
  const CrackSet spiky(tris, 0.01);
  const auto b = beta(spiky, {0.1, 0, 0}, r);
  CHECK(b.value > 1e-5);
  SweepOptions one;
  one.n_centers = 6;
  one.n_radii = 1;
  CHECK_FALSE(check_eps_minimal(spiky, Ball({0.1, 0, 0}, 0.6), 1e-5, one).pass);
}

TEST_CASE("check_eps0_eps_minimal examples") {
  const Ball ball({}, 1.0);
  const auto Y = make_cone(ConeType::Y, {}, Mat3{});
  EpsMinimalOptions opt;
  opt.sweep.n_centers = 4;
  opt.sweep.n_radii = 2;

  const auto exact = check_eps0_eps_minimal(cone_crack(Y, ball), ball, 1e-5, 0.01, {}, Y, opt);
  CHECK(exact.pass);
  CHECK(exact.failed_clause.empty());

  const CrackSet holed(punch_hole(mesh_cone(Y, ball, 0.04), Ball({0.5, 0, 0}, 0.25)), 0.02);
  const auto h = check_eps0_eps_minimal(holed, ball, 1e-5, 0.01, {}, Y, opt);
  CHECK_FALSE(h.pass);
  CHECK(h.failed_clause == "v");

  // one wrinkle inside a bad ball of radius eps on sheet 1
  const double eps = 0.05;
  const Vec3 c{0.4, 0, 0.1};
  Wrinkle w;
  w.center = c;
  w.support = 0.8 * eps;
  w.amplitude = 0.1 * eps;
  w.direction = Y.sectors()[0].normal;
  w.wavenumber = 2 * std::numbers::pi / eps;
  w.phase_axis = {0, 0, 1};
  const CrackSet wr(displace(mesh_cone(Y, ball, 0.02), w), 0.01);
  const Vec3 xc = c + w(c);  // the displaced centre lies on the crack
  BadBallFamily bad;
  bad.balls.emplace_back(xc, eps);
  bad.overlap_constant = 1;
  // clause iv) oracle: the plane through xc parallel to the flat sheet. Its
  // deviation is the spread of the normal displacement over the displaced
  // points near xc, largest relative to r at the smallest tested radius.
  const Vec3 n = w.direction;
  const Vec3 along = normalized(cross(n, {0, 0, 1}));
  double spread = 0.0;
  for (int i = -200; i <= 200; ++i)
    for (int j = -200; j <= 200; ++j) {
      const Vec3 p = c + along * (1.2 * eps * i / 200) + Vec3{0, 0, 1.2 * eps * j / 200};
      if (dist(p + w(p), xc) < 1.01 * eps) spread = std::max(spread, std::abs(dot(w(p) - w(c), n)));
    }
  const double eps0 = 1.05 * spread / (1.01 * eps);
  MESSAGE("wrinkle clause iv oracle eps0 = " << eps0);
  const auto rep = check_eps0_eps_minimal(wr, ball, eps0, eps, bad, Y, opt);
  CHECK(rep.pass);
  CHECK_MESSAGE(rep.failed_clause.empty(), rep.detail);
  const auto tight = check_eps0_eps_minimal(wr, ball, 1e-5, eps, bad, Y, opt);
  CHECK_FALSE(tight.pass);
  CHECK(tight.failed_clause == "iv");

  BadBallFamily big;
  big.balls.emplace_back(xc, 2 * eps);
  CHECK(check_eps0_eps_minimal(wr, ball, eps0, eps, big, Y, opt).failed_clause == "i");
}

TEST_CASE("beta is bounded by every supplied cone through x") {
  CounterRng rng(31, "beta-bound");
  const Ball ball({}, 1.0);
  const auto Y = make_cone(ConeType::Y, {}, Mat3{});
  const CrackSet E(displace(mesh_cone(Y, ball, 0.04),
                            [](const Vec3& p) { return Vec3{0.01 * std::sin(7 * p.z), 0, 0}; }),
                   0.02);
  for (int trial = 0; trial < 6; ++trial) {
    const Vec3 x = E.samples()[rng.uniform_int(0, static_cast<int>(E.samples().size()) - 1)];
    if (norm(x) > 0.5) continue;
    const double r = 0.3;
    BetaOptions bo;
    bo.starts = 8;
    const double b = beta(E, x, r, bo).value;
    for (int k = 0; k < 5; ++k) {
      const auto c0 = make_cone(static_cast<ConeType>(1 + k % 3), rng.in_ball(x, 0.3), random_rotation(rng));
      const auto C = c0.transformed(Mat3{}, x - c0.closest_point(x));
      CHECK(b <= one_sided_deviation(E, C, Ball(x, r)) + 1e-12);
    }
    CHECK(b <= one_sided_deviation(E, Y.transformed(Mat3{}, x - Y.closest_point(x)), Ball(x, r)) + 1e-12);
  }
}

TEST_CASE("doubling the start count never raises beta") {
  const Ball ball({}, 1.0);
  const auto T = make_cone(ConeType::T, {}, Mat3{});
  const CrackSet E(displace(mesh_cone(T, ball, 0.04),
                            [](const Vec3& p) { return Vec3{0, 0.02 * std::cos(5 * p.x), 0}; }),
                   0.02);
  Vec3 x = E.samples().front();
  for (const Vec3& p : E.samples())
    if (dist(p, {0.2, 0.1, 0.1}) < dist(x, {0.2, 0.1, 0.1})) x = p;
  double prev = 1e300;
  for (int starts : {4, 8, 16, 32}) {
    BetaOptions bo;
    bo.starts = starts;
    bo.data_starts = false;
    const double b = beta(E, x, 0.3, bo).value;
    CHECK(b <= prev);
    prev = b;
  }
}

TEST_CASE("flatness CSV formats") {
  FlatnessReport rep;
  rep.threshold = 0.1;
  rep.add({{0.5, 0, 0}, 0.2, 0.05, make_cone(ConeType::Y, {}, Mat3{}), true});
  rep.add({{0.1, 0, 0}, 0.3, 0.2, make_cone(ConeType::P, {}, Mat3{}), false});
  rep.finalize();
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_beta == 0.2);
  CHECK(rep.records.front().x.x == 0.1);
  std::ostringstream os;
  rep.write_csv(os);
  CHECK(os.str().rfind("x,y,z,r,beta,type,pass\n", 0) == 0);

  BadBallFamily f;
  f.balls = {Ball({0, 0, 0}, 0.1), Ball({0.15, 0, 0}, 0.1), Ball({0.3, 0, 0}, 0.1)};
  CHECK(f.measured_overlap() == 3);
  std::ostringstream bo;
  f.write_csv(bo);
  std::istringstream bi(bo.str());
  const auto g = BadBallFamily::read_csv(bi);
  REQUIRE(g.balls.size() == 3);
  CHECK(g.balls[1].center == f.balls[1].center);
  std::istringstream badin("cx,cy,cz,r\n1,2\n");
  CHECK_THROWS(BadBallFamily::read_csv(badin));
}

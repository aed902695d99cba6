#include <cmath>
#include <sstream>
#include <string>

#include "conelab/whitney.hpp"
#include "doctest.h"

using namespace conelab;

namespace {

const Ball kUnit({}, 1.0);
const MinimalCone kPlane = plane_cone({}, {0, 1, 0});

CrackSet plane_crack(double spacing = 0.04) { return CrackSet(mesh_cone(kPlane, kUnit, spacing), spacing / 2); }

// Distance from x to the boundary of the tube of half-width h about the
// plane y = 0 cut to B(0, rho), for |x| small enough that the cut is unseen.
double tube_oracle(const Vec3& x, double h) { return std::abs(h - std::abs(x.y)); }

ScalarField field_from(std::shared_ptr<const CrackGraph> g, const std::function<double(std::size_t)>& f) {
  ScalarField u;
  u.graph = g;
  u.values.assign(g->grid.size(), 0.0);
  for (std::size_t i = 0; i < g->grid.size(); ++i)
    if (g->node[i]) u.values[i] = f(i);
  return u;
}

struct PlaneSetup {
  CrackSet crack = plane_crack();
  GeometricFunction delta = build_delta({}, 0.75, 0.25, kPlane);
  std::shared_ptr<const WhitneyCover> cover =
      std::make_shared<const WhitneyCover>(select_whitney_balls(crack, delta, 30.0, Ball({}, 0.75)));
  std::shared_ptr<const CrackGraph> graph =
      std::make_shared<const CrackGraph>(discretize(crack, 48, 3, kUnit));
};

const PlaneSetup& plane_setup() {
  static const PlaneSetup s;
  return s;
}

}  // namespace

TEST_CASE("build_delta examples") {
  const double h = 0.05;
  BadBallFamily one;
  one.balls.push_back(Ball({0.2, 0, 0.1}, 0.1));
  const auto d1 = build_delta(one, 0.75, h, kPlane);
  CHECK(d1({0.2, 0, 0.1}) >= 0.1);
  CHECK(d1({0.2, 0, 0.1}) == doctest::Approx(0.1).epsilon(1e-14));
  // halfway through the ramp of psi
  CHECK(d1.bump_sum({0.2, 0.15, 0.1}) == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(d1.bump_sum({0.2, 0.2, 0.1}) == 0.0);

  const auto d0 = build_delta({}, 0.75, 0.25, kPlane);
  for (const Vec3& x : {Vec3{0.1, 0.3, 0.2}, Vec3{-0.3, -0.1, 0.0}, Vec3{0.0, 0.25, 0.0}, Vec3{0.2, 0.0, -0.3}})
    CHECK(d0(x) == doctest::Approx(tube_oracle(x, 0.25)).epsilon(1e-14));

  BadBallFamily two;
  two.balls.push_back(Ball({0.1, 0, 0}, 0.08));
  two.balls.push_back(Ball({0.16, 0, 0}, 0.08));
  const auto d2 = build_delta(two, 0.75, h, kPlane);
  CHECK(d2({0.13, 0, 0}) >= 0.16 - 1e-15);
  CHECK(d2.lipschitz_bound == 2.0);
  CHECK(d2.lipschitz_constant <= d2.lipschitz_bound + 1e-9);
  CHECK(d2.lipschitz_constant >= 0.99);
}

TEST_CASE("build_delta invariants on random points") {
  CounterRng rng(3, "delta-test");
  BadBallFamily bad;
  for (int i = 0; i < 4; ++i) bad.balls.push_back(Ball(rng.in_ball({}, 0.5), rng.uniform(0.02, 0.2)));
  const auto d = build_delta(bad, 0.6, 0.1, make_cone(ConeType::T, {}, random_rotation(rng)));
  for (int p = 0; p < 2000; ++p) {
    const Vec3 x = rng.in_ball({}, 1.0);
    CHECK(d(x) >= 0.0);
    for (const Ball& b : bad.balls)
      if (b.contains(x)) CHECK(d(x) >= b.radius - 1e-15);
  }
}

TEST_CASE("build_delta rejects bad parameters") {
  CHECK_THROWS_AS(build_delta({}, 0.75, 0.3, kPlane), std::invalid_argument);
  CHECK_THROWS_AS(build_delta({}, 0.75, 0.0, kPlane), std::invalid_argument);
  BadBallFamily out;
  out.balls.push_back(Ball({0.9, 0, 0}, 0.2));
  CHECK_THROWS_AS(build_delta(out, 0.75, 0.1, kPlane), std::invalid_argument);
}

TEST_CASE("select_whitney_balls: U too small is rejected") {
  const auto& s = plane_setup();
  CHECK_THROWS_AS(select_whitney_balls(s.crack, s.delta, 29.0 * s.delta.lipschitz_constant, Ball({}, 0.75)),
                  std::invalid_argument);
}

TEST_CASE("select_whitney_balls: single crack point") {
  const auto& s = plane_setup();
  const Vec3 x = s.crack.samples()[s.crack.samples_in_ball(Ball({}, 0.05)).front()];
  const auto cover = select_whitney_balls(s.crack, s.delta, 40.0, Ball(x, 1e-9));
  REQUIRE(cover.balls.size() == 1);
  CHECK(cover.balls[0].radius == doctest::Approx(s.delta(x) / 40.0).epsilon(1e-14));
}

TEST_CASE("select_whitney_balls: flat patch packing") {
  // delta is h on the whole patch, so every radius is h / U and cores pack
  const auto& s = plane_setup();
  const auto& cover = *s.cover;
  const double r = 0.25 / 30.0;
  REQUIRE(!cover.balls.empty());
  for (const auto& b : cover.balls) {
    CHECK(b.radius == doctest::Approx(r).epsilon(1e-12));
    CHECK(b.cone.type() == ConeType::P);
  }
  int close = 0;
  for (std::size_t j = 0; j < cover.balls.size(); ++j)
    for (int i : cover.within(cover.balls[j].center, r / 25.0))
      if (static_cast<std::size_t>(i) != j) ++close;
  CHECK(close == 0);
  int uncovered = 0;
  for (int i : s.crack.samples_in_ball(cover.domain))
    if (cover.within(s.crack.samples()[i], r / 50.0).empty()) ++uncovered;
  CHECK(uncovered == 0);
}

TEST_CASE("whitney ramp") {
  CHECK(whitney_ramp(8.0) == 0.0);
  CHECK(whitney_ramp(0.0) == 0.0);
  CHECK(whitney_ramp(10.0) == 1.0);
  CHECK(whitney_ramp(50.0) == 1.0);
  CHECK(whitney_ramp(9.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(whitney_ramp_derivative(9.0) == doctest::Approx(15.0 / 16.0).epsilon(1e-15));
  double prev = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double t = 8.0 + i / 200.0;
    CHECK(whitney_ramp(t) >= prev);
    CHECK(whitney_ramp_derivative(t) <= 15.0 / 16.0 + 1e-15);
    const double fd = (whitney_ramp(t + 1e-6) - whitney_ramp(t - 1e-6)) / 2e-6;
    CHECK(fd == doctest::Approx(whitney_ramp_derivative(t)).epsilon(1e-6).scale(1.0));
    prev = whitney_ramp(t);
  }
}

TEST_CASE("evaluate_partition examples") {
  WhitneyCover cover;
  cover.balls.push_back({Vec3{0, 0, 0}, 0.01, 0.01, 1, kPlane});
  cover.balls.push_back({Vec3{0.15, 0, 0}, 0.01, 0.01, 1, kPlane});
  cover.domain = kUnit;
  cover.build_index();

  const auto far = evaluate_partition(cover, {0.5, 0.5, 0.5});
  CHECK(far.phi0 == 1.0);
  CHECK(far.weights.empty());

  const auto inner = evaluate_partition(cover, {0.05, 0, 0});
  CHECK(inner.phi0 == 0.0);
  REQUIRE(inner.weights.size() == 1);
  CHECK(inner.weights[0].first == 0);
  CHECK(inner.weights[0].second == 1.0);

  // both annuli: l = 0.5 from each ball
  const auto mid = evaluate_partition(cover, {0.075, 0.0, std::sqrt(0.09 * 0.09 - 0.075 * 0.075)});
  CHECK(mid.phi0 == doctest::Approx(0.25));
  CHECK(mid.total == doctest::Approx(1.25));
  REQUIRE(mid.weights.size() == 2);
  CHECK(mid.weights[0].second == doctest::Approx(0.4));

  // single ball gradient: l'(t) / r along the radius
  const Vec3 x{-0.09, 0, 0};
  const Vec3 g = phi0_gradient(cover, x, 1e-8);
  CHECK(norm(g) == doctest::Approx(whitney_ramp_derivative(9.0) / 0.01).epsilon(1e-5));
  CHECK(g.x < 0.0);
}

TEST_CASE("partition sums to one at 1e5 points") {
  const auto& s = plane_setup();
  CounterRng rng(5, "partition-sum");
  double worst = 0.0;
  int low = 0;
  for (int p = 0; p < 100000; ++p) {
    const Vec3 x = rng.in_ball({}, 0.75);
    const Vec3 y{x.x, x.y * 0.05, x.z};  // concentrate near the crack
    const auto pv = evaluate_partition(*s.cover, y);
    double sum = pv.theta0();
    for (const auto& w : pv.weights) sum += w.second;
    worst = std::max(worst, std::abs(sum - 1.0));
    if (pv.total < 1.0) ++low;
  }
  CHECK(worst <= 1e-10);
  CHECK(low == 0);
}

TEST_CASE("cover audit on the plane and on random instances") {
  const auto& s = plane_setup();
  const auto a = audit_cover(*s.cover, s.crack, s.delta, 500, 1);
  CHECK(a.pass(1000));
  CHECK(a.worst_ratio == doctest::Approx(1.0));

  CoverAudit all;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto in = random_whitney_instance(seed);
    CHECK(in.cover->U >= 30.0 * in.delta.lipschitz_constant);
    all.merge(audit_cover(*in.cover, in.crack, in.delta, 200, seed));
  }
  CHECK(all.instances == 25);
  CHECK(all.pass(1000));
  CHECK(all.worst_ratio <= 20.0);
  CHECK(all.worst_ratio > 1.0);
}

TEST_CASE("random instances are reproducible") {
  const auto a = random_whitney_instance(11);
  const auto b = random_whitney_instance(11);
  std::ostringstream ca, cb;
  a.cover->write_csv(ca);
  b.cover->write_csv(cb);
  CHECK(ca.str() == cb.str());
  CHECK(a.bad.balls.size() == b.bad.balls.size());
}

TEST_CASE("cover CSV") {
  const auto& s = plane_setup();
  std::ostringstream out;
  s.cover->write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,z,r,cone_type");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "P");
  }
  CHECK(rows == s.cover->balls.size());
}

TEST_CASE("extension of constants and step functions") {
  const auto& s = plane_setup();
  const auto& g = *s.graph;
  REQUIRE(g.components.count == 2);

  const auto c = field_from(s.graph, [](std::size_t) { return 3.5; });
  for (int k = 1; k <= 2; ++k) {
    const auto v = build_extension(c, s.cover, k, s.crack);
    for (std::size_t j = 0; j < v.mean.size(); ++j)
      if (v.active[j]) CHECK(v.mean[j] == 3.5);
    int checked = 0;
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
      if (!g.node[i]) continue;
      const double vi = v.value_at(i);
      if (std::isnan(vi)) continue;
      CHECK(vi == doctest::Approx(3.5).epsilon(1e-14));
      ++checked;
    }
    CHECK(checked > 0);
    const auto e = energy_comparison(c, v, s.crack, s.delta);
    CHECK(e.lhs <= 1e-20);
    CHECK(e.empirical_C == 0.0);
  }

  // u = 2 on component 1, -1 on component 2: v_k is u_k on Delta_k
  const auto step = field_from(s.graph, [&](std::size_t i) { return g.components.label[i] == 1 ? 2.0 : -1.0; });
  for (int k = 1; k <= 2; ++k) {
    const double expect = k == 1 ? 2.0 : -1.0;
    const auto v = build_extension(step, s.cover, k, s.crack);
    int other = 0;
    for (std::size_t i = 0; i < g.grid.size(); ++i) {
      if (!g.node[i]) continue;
      const Vec3 x = g.grid.center(i);
      if (norm(x) >= 0.75) continue;
      const double vi = v.value_at(i);
      if (std::isnan(vi)) continue;
      const bool own = g.components.label[i] == k;
      if (!own && evaluate_partition(*s.cover, x).phi0 > 0.0) continue;
      other += !own;
      CHECK(vi == doctest::Approx(expect).epsilon(1e-14));
    }
    CHECK(other > 0);
  }
}

TEST_CASE("extension locality and constant shift") {
  const auto& s = plane_setup();
  const auto& g = *s.graph;
  CounterRng rng(9, "extension-field");
  std::vector<double> noise(g.grid.size());
  for (double& x : noise) x = rng.uniform(-1.0, 1.0);
  const auto u = field_from(s.graph, [&](std::size_t i) { return noise[i]; });
  const auto w = field_from(s.graph, [&](std::size_t i) { return noise[i] + 0.625; });
  const auto vu = build_extension(u, s.cover, 1, s.crack);
  const auto vw = build_extension(w, s.cover, 1, s.crack);
  for (std::size_t j = 0; j < vu.mean.size(); ++j) {
    CHECK(vu.active[j] == vw.active[j]);
    if (vu.active[j]) CHECK(vw.mean[j] - vu.mean[j] == doctest::Approx(0.625).epsilon(1e-14));
  }
  int outside = 0;
  for (std::size_t i = 0; i < g.grid.size(); ++i) {
    if (!g.node[i]) continue;
    const Vec3 x = g.grid.center(i);
    const double a = vu.value_at(i);
    if (s.cover->containing(x, 10.0).empty()) {
      CHECK(a == u.values[i]);
      ++outside;
    }
    if (!std::isnan(a)) CHECK(vw.value_at(i) - a == doctest::Approx(0.625).epsilon(1e-12));
  }
  CHECK(outside > 0);
  CHECK(segment_clearance_violations(vu, s.crack) == 0);
}

TEST_CASE("energy comparison: plane crack and linear u") {
  const auto& s = plane_setup();
  const auto u = minimize_energy(s.graph, [](const Vec3& x) { return x.x + 0.5 * x.z; });
  for (int k = 1; k <= 2; ++k) {
    const auto v = build_extension(u, s.cover, k, s.crack);
    const auto e = energy_comparison(u, v, s.crack, s.delta);
    CHECK(e.nodes > 0);
    CHECK(e.lhs <= e.rhs_main);
    CHECK(e.empirical_C == 0.0);
  }
}

TEST_CASE("energy comparison argument checks") {
  const auto& s = plane_setup();
  const auto u = field_from(s.graph, [](std::size_t) { return 1.0; });
  const auto other = field_from(s.graph, [](std::size_t) { return 1.0; });
  const auto v = build_extension(u, s.cover, 1, s.crack);
  CHECK_THROWS_AS(energy_comparison(other, v, s.crack, s.delta), std::invalid_argument);
  CHECK_THROWS_AS(build_extension(u, s.cover, 3, s.crack), std::invalid_argument);
}

TEST_CASE("extension without an admissible anchor") {
  // parallel sheets 0.1 apart keep every annulus point within 0.05 of the crack
  std::vector<Triangle> tris;
  for (double y : {-0.2, -0.1, 0.0, 0.1, 0.2}) {
    const auto sheet = mesh_cone(plane_cone({0, y, 0}, {0, 1, 0}), kUnit, 0.05);
    tris.insert(tris.end(), sheet.begin(), sheet.end());
  }
  const CrackSet crack(tris, 0.025);
  auto cover = std::make_shared<WhitneyCover>();
  cover->balls.push_back({Vec3{0, 0, 0}, 0.09, 0.09, 1, kPlane});
  cover->domain = Ball({}, 0.95);
  cover->build_index();
  const auto graph = std::make_shared<const CrackGraph>(discretize(crack, 64, 3, kUnit));
  const auto u = field_from(graph, [](std::size_t) { return 0.0; });
  const long long cell = graph->grid.locate({0.5, 0.05, 0.5});
  REQUIRE(cell >= 0);
  const int k = graph->components.label[static_cast<std::size_t>(cell)];
  REQUIRE(k > 0);
  CHECK_THROWS_AS(build_extension(u, cover, k, crack), std::runtime_error);
}

TEST_CASE("c1 inflation") {
  CHECK(c1_inflation(30.0, 1.0) == doctest::Approx(2.0 + 1.0 / 3.0).epsilon(1e-15));
  CHECK(c1_inflation(90.0, 3.0) == doctest::Approx(2.0 + 1.0 / 3.0).epsilon(1e-15));
  CHECK(c1_inflation(1e12, 1.0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(c1_inflation(60.0, 1.0) == doctest::Approx(2.1666666666666667).epsilon(1e-15));
  BadBallFamily bad;
  bad.balls.push_back(Ball({0.1, 0.2, 0.3}, 0.05));
  const auto b = inflated_balls(bad, 60.0, 1.0);
  REQUIRE(b.size() == 1);
  CHECK(b[0].radius == doctest::Approx(0.05 * 2.1666666666666667));
  CHECK(b[0].center.z == 0.3);
}

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conelab/lab.hpp"
#include "doctest.h"

using namespace conelab;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string key_of(const std::string& text) {
  try {
    Scenario::parse(text);
  } catch (const ConfigError& e) {
    return e.key.empty() ? "<syntax>" : e.key;
  }
  return "";
}

Scenario small_decay() {
  Scenario s;
  s.kind = ScenarioKind::Decay;
  s.name = "small";
  s.resolution = 32;
  s.trials = 3;
  s.radii = {0.6, 0.9};
  return s;
}

}  // namespace

TEST_CASE("config round trip") {
  Scenario s;
  s.kind = ScenarioKind::Monotonicity;
  s.name = "y-mono.1";
  s.seed = 18446744073709551557ULL;
  s.trials = 7;
  s.cone = ConeType::T;
  s.resolution = 100;
  s.eps0 = 0.1 + 0.2;  // not a short decimal
  s.eps = 1.0 / 30.0;
  s.gamma = 0.7999999999999999;
  s.radii = {0.5, 0.7, 1.0 / 7.0};
  s.h = 0.025;
  s.bc = "dirichlet";
  s.magnitude = 2.5;
  s.overlap_bound = 77;
  s.output_dir = "results/y mono";
  const std::string text = s.serialize();
  const Scenario back = Scenario::parse(text);
  CHECK(back == s);
  CHECK(back.serialize() == text);

  // a sparse hand-written config reaches the same canonical form
  const auto sparse = Scenario::parse("; comment\n[scenario]\nkind=eigen\n\n[parameters]\ncone = T\nh=0.05\n");
  CHECK(sparse.kind == ScenarioKind::Eigen);
  CHECK(sparse.cone == ConeType::T);
  CHECK(sparse.h == 0.05);
  CHECK(sparse.radii == std::vector<double>{0.5});
  CHECK(Scenario::parse(sparse.serialize()) == sparse);
}

TEST_CASE("malformed configs name the offending key") {
  CHECK(key_of("[scenario]\nkind = decay\n") == "");
  CHECK(key_of("[scenario]\nkind = spiral\n") == "scenario.kind");
  CHECK(key_of("[parameters]\ncone = Y\n") == "scenario.kind");
  CHECK(key_of("[scenario]\nkind = decay\ncolour = red\n") == "scenario.colour");
  CHECK(key_of("[scenario]\nkind = decay\n[extras]\na = 1\n") == "extras");
  CHECK(key_of("[scenario]\nkind = decay\ntrials = 3x\n") == "scenario.trials");
  CHECK(key_of("[scenario]\nkind = decay\ntrials = 0\n") == "scenario.trials");
  CHECK(key_of("[scenario]\nkind = decay\n[parameters]\ncone = Q\n") == "parameters.cone");
  CHECK(key_of("[scenario]\nkind = decay\n[parameters]\nradii = 0.5, 1.5\n") == "parameters.radii");
  CHECK(key_of("[scenario]\nkind = decay\n[parameters]\nradii = 0.5,,0.7\n") == "parameters.radii");
  // r/2 = 0.05 is below four cells of 2/64
  CHECK(key_of("[scenario]\nkind = decay\n[parameters]\nradii = 0.1\n") == "parameters.radii");
  CHECK(key_of("[scenario]\nkind = eigen\n[parameters]\nbc = robin\n") == "parameters.bc");
  CHECK(key_of("[scenario]\nkind = counterexample\n[parameters]\neps = 0.02\nresolution = 64\n") ==
        "parameters.eps");
  CHECK(key_of("[scenario]\nkind = decay\n[parameters]\ngamma = 1.5\n") == "parameters.gamma");
  CHECK(key_of("[scenario]\nkind = decay\nkind = eigen\n") == "<syntax>");
  CHECK(key_of("[scenario\nkind = decay\n") == "<syntax>");
  CHECK_THROWS_AS(Scenario::load("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("decay run is deterministic and independent of the thread count") {
  const Scenario s = small_decay();
  const ResultStore a = run(s, 1);
  const ResultStore b = run(s, 1);
  const ResultStore c = run(s, 3);
  CHECK(a.tables == b.tables);
  CHECK(a.tables == c.tables);
  CHECK(a.run_id == c.run_id);
  CHECK(a.summary_json() == c.summary_json());
  REQUIRE(a.tables.count("ratios.csv") == 1);
  CHECK(a.tables.count("profile_2.csv") == 1);

  Scenario other = s;
  other.seed = 2;
  CHECK(run(other).tables.at("ratios.csv") != a.tables.at("ratios.csv"));
}

TEST_CASE("decay verdict on a Y crack") {
  Scenario s = small_decay();
  s.resolution = 48;
  s.radii = {0.5};
  s.gamma = 0.75;
  const ResultStore st = run(s);
  REQUIRE(st.verdicts.size() == 1);
  CHECK(st.pass());
  std::istringstream rows(st.tables.at("ratios.csv"));
  std::string line;
  std::getline(rows, line);
  int n = 0;
  while (std::getline(rows, line)) {
    ++n;
    CHECK(line.back() == '1');
  }
  CHECK(n == 3);
}

TEST_CASE("eigen scenario") {
  Scenario s;
  s.kind = ScenarioKind::Eigen;
  s.cone = ConeType::Y;
  s.h = 0.05;
  const ResultStore st = run(s);
  CHECK(st.pass());
  double lambda = 0.0;
  for (const auto& [k, v] : st.metrics)
    if (k == "extrapolated") lambda = v;
  CHECK(lambda == doctest::Approx(2.0).epsilon(0.01));

  // Dirichlet on both meridians: nu = pi / (2 pi / 3) = 3/2, lambda = nu (nu + 1)
  s.bc = "dirichlet";
  const ResultStore d = run(s);
  CHECK(d.pass());
  for (const auto& [k, v] : d.metrics)
    if (k == "extrapolated") CHECK(v == doctest::Approx(3.75).epsilon(0.01));
}

TEST_CASE("whitney and counterexample scenarios") {
  Scenario w;
  w.kind = ScenarioKind::Whitney;
  w.trials = 4;
  const ResultStore ws = run(w, 2);
  CHECK(ws.pass());
  CHECK(ws.tables.count("audit.csv") == 1);
  CHECK(ws.tables.at("cover_0.csv").rfind("x,y,z,r,cone_type\n", 0) == 0);

  Scenario t;
  t.kind = ScenarioKind::Counterexample;
  t.eps = 0.02;
  t.resolution = 400;
  const ResultStore ts = run(t);
  CHECK(ts.pass());
  CHECK(ts.plots.count("profile_0.svg") == 1);
}

TEST_CASE("module errors carry the scenario kind") {
  Scenario s;
  s.kind = ScenarioKind::Flatness;
  s.eps = 0.25;  // valid, but no wrinkle center fits at distance 4 eps from the spine
  try {
    run(s);
    FAIL("expected a ScenarioError");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).rfind("flatness", 0) == 0);
  }
}

TEST_CASE("result store on disk") {
  const ResultStore st = run(small_decay());
  const auto dir = std::filesystem::temp_directory_path() / "conelab_store_test";
  std::filesystem::remove_all(dir);
  st.write(dir);
  for (const char* f : {"config.ini", "summary.json", "metrics.csv", "verdicts.csv", "ratios.csv", "profile_0.svg"})
    CHECK(std::filesystem::exists(dir / f));
  CHECK(Scenario::parse(read_file(dir / "config.ini")) == small_decay());
  CHECK(read_file(dir / "ratios.csv") == st.tables.at("ratios.csv"));
  // every summary metric has a CSV row
  const std::string metrics = read_file(dir / "metrics.csv");
  for (const auto& [k, v] : st.metrics) CHECK(metrics.find("\n" + k + ",") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("log-log plot") {
  EnergyProfile p;
  for (int i = 1; i <= 8; ++i) {
    p.radii.push_back(0.1 * i);
    p.energy.push_back(0.0);
    p.omega2.push_back(0.1 * i);
  }
  const std::string svg = loglog_svg(p, "linear");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("slope 0.8") != std::string::npos);
  CHECK(svg.find("slope 1") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  std::istringstream empty("");
  CHECK_THROWS_AS(plot_profile_csv(empty, ""), std::invalid_argument);
  std::istringstream header_only("r,E,omega2\n");
  CHECK_THROWS_AS(plot_profile_csv(header_only, ""), std::invalid_argument);
  EnergyProfile zero;
  zero.radii = {0.5};
  zero.energy = {0.0};
  zero.omega2 = {0.0};
  CHECK_THROWS_AS(loglog_svg(zero), std::invalid_argument);
  std::istringstream ok("r,E,omega2\n0.2,0.1,0.5\n0.4,0.3,0.75\n");
  CHECK(plot_profile_csv(ok, "t").find("<polyline") != std::string::npos);
}

TEST_CASE("wrinkled cones keep their wrinkles inside the bad balls") {
  for (ConeType t : {ConeType::P, ConeType::Y, ConeType::T}) {
    const WrinkledCone w = wrinkled_cone(t, 4, 0.01);
    REQUIRE(w.bad.balls.size() == 3);
    int moved = 0;
    for (const Triangle& tri : w.crack.triangles())
      for (const Vec3& v : tri) {
        if (w.cone.distance(v) <= 1e-12) continue;
        ++moved;
        CHECK(std::any_of(w.bad.balls.begin(), w.bad.balls.end(), [&](const Ball& b) { return b.contains(v); }));
      }
    CHECK(moved > 0);
    for (const Ball& b : w.bad.balls) {
      CHECK(b.radius == 0.01);
      CHECK(w.cone.spine_distance(b.center) >= 0.03);
    }
  }
}

TEST_CASE("flatness scenario certifies wrinkled cones only with relaxed eps0") {
  Scenario s;
  s.kind = ScenarioKind::Flatness;
  s.cone = ConeType::P;
  s.eps = 0.01;
  s.eps0 = 0.133;
  const ResultStore ok = run(s);
  CHECK(ok.pass());
  CHECK(ok.tables.at("certificates.csv").find("\n0,1,-,") != std::string::npos);

  s.eps0 = 1e-5;
  const ResultStore strict = run(s);
  CHECK_FALSE(strict.pass());
  CHECK(strict.tables.at("certificates.csv").find("\n0,0,iv,") != std::string::npos);
}

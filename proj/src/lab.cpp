#include "conelab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "conelab/rng.hpp"
#include "conelab/spherical.hpp"
#include "conelab/whitney.hpp"
#include "json.hpp"

namespace conelab {

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key, "not a number: '" + text + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(key, trim(item)));
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

double cell_step(int resolution) { return 2.0 / resolution; }

// ---------------------------------------------------------------------------
// Trial execution: results are collected per index, so order never depends on
// the thread count.

template <class R>
std::vector<R> run_trials(int n, int jobs, const std::function<R(int)>& body) {
  std::vector<R> out(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < n; t = next++) {
      try {
        out[static_cast<std::size_t>(t)] = body(t);
      } catch (...) {
        errors[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, std::max(1, n));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (int t = 0; t < n; ++t) {
    if (!errors[static_cast<std::size_t>(t)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(t)]);
    } catch (const std::exception& e) {
      throw ScenarioError("trial " + std::to_string(t) + ": " + e.what());
    }
  }
  return out;
}

std::uint64_t trial_seed(const Scenario& s, int t) {
  return CounterRng(s.seed, "trial").at(static_cast<std::uint64_t>(t));
}

std::string profile_csv(const EnergyProfile& p) {
  std::ostringstream out;
  p.write_csv(out);
  return out.str();
}

MinimalCone reference_cone(ConeType t) { return make_cone(t, {}, Mat3::identity()); }

// ---------------------------------------------------------------------------

void run_decay(const Scenario& s, int jobs, ResultStore& st) {
  const CrackSet crack = standard_cone_crack(reference_cone(s.cone));
  const auto graph = std::make_shared<const CrackGraph>(discretize(crack, s.resolution, 3, Ball({}, 1.0)));
  const HarmonicSolver solver(graph);
  const double bound = std::pow(2.0, -s.gamma) * 1.05;
  const auto sweep = radius_sweep(0.15, 0.85, 64);

  struct Trial {
    EnergyProfile profile;
    std::vector<std::array<double, 3>> rows;  // r, omega(r/2), omega(r)
  };
  const auto trials = run_trials<Trial>(s.trials, jobs, [&](int t) {
    const ScalarField u = solver.solve(random_smooth_data(trial_seed(s, t), 3));
    Trial tr;
    tr.profile = energy_profile(u, sweep);
    for (double r : s.radii) tr.rows.push_back({r, normalized_energy(u, {}, r / 2), normalized_energy(u, {}, r)});
    return tr;
  });

  std::ostringstream csv;
  csv << "trial,r,omega2_half,omega2_r,ratio,bound,pass\n";
  double worst = 0.0;
  int failures = 0, vacuous = 0;
  for (int t = 0; t < s.trials; ++t) {
    const Trial& tr = trials[static_cast<std::size_t>(t)];
    for (const auto& [r, half, full] : tr.rows) {
      const bool empty = !(full > 0.0);
      const double ratio = empty ? 0.0 : half / full;
      const bool ok = !empty && ratio <= bound;
      vacuous += empty;
      failures += !ok;
      worst = std::max(worst, ratio);
      csv << t << ',' << num(r) << ',' << num(half) << ',' << num(full) << ',' << num(ratio) << ',' << num(bound)
          << ',' << (ok ? 1 : 0) << '\n';
    }
    st.tables["profile_" + std::to_string(t) + ".csv"] = profile_csv(tr.profile);
  }
  st.tables["ratios.csv"] = csv.str();
  st.plots["profile_0.svg"] = loglog_svg(trials[0].profile, s.name + ": omega2 against r");
  st.metrics = {{"worst_ratio", worst}, {"bound", bound}, {"failures", failures}};
  st.verdicts.push_back({"decay", failures == 0,
                         "max omega2(r/2)/omega2(r) = " + num(worst) + " against " + num(bound) +
                             (vacuous ? "; some data gave zero energy" : "")});
}

void run_monotonicity(const Scenario& s, int jobs, ResultStore& st) {
  const CrackSet crack = standard_cone_crack(reference_cone(s.cone));
  const auto graph = std::make_shared<const CrackGraph>(discretize(crack, s.resolution, 3, Ball({}, 1.0)));
  const HarmonicSolver solver(graph);
  const auto sweep = radius_sweep(0.15, 0.85, 64);

  struct Trial {
    EnergyProfile profile;
    DifferentialReport diff;
  };
  const auto trials = run_trials<Trial>(s.trials, jobs, [&](int t) {
    const ScalarField u = solver.solve(random_smooth_data(trial_seed(s, t), 3));
    return Trial{energy_profile(u, sweep), differential_inequality_check(u, sweep)};
  });

  std::ostringstream csv;
  csv << "trial,worst_drop,gamma_hat,max_e_over_rde,at_radius\n";
  double drop = 0.0, ratio = 0.0, gmin = std::numeric_limits<double>::infinity();
  for (int t = 0; t < s.trials; ++t) {
    const Trial& tr = trials[static_cast<std::size_t>(t)];
    drop = std::max(drop, tr.profile.worst_drop());
    ratio = std::max(ratio, tr.diff.max_ratio);
    gmin = std::min(gmin, tr.profile.gamma_hat);
    csv << t << ',' << num(tr.profile.worst_drop()) << ',' << num(tr.profile.gamma_hat) << ','
        << num(tr.diff.max_ratio) << ',' << num(tr.diff.at_radius) << '\n';
    st.tables["profile_" + std::to_string(t) + ".csv"] = profile_csv(tr.profile);
  }
  st.tables["monotonicity.csv"] = csv.str();
  st.plots["profile_0.svg"] = loglog_svg(trials[0].profile, s.name + ": omega2 against r");
  const double diff_bound = 1.0 / (2.0 * std::numbers::sqrt2) + 0.05;
  st.metrics = {{"worst_drop", drop}, {"max_e_over_rde", ratio}, {"min_gamma_hat", gmin}};
  st.verdicts.push_back({"monotone", drop <= 0.03, "largest relative drop of omega2 = " + num(drop)});
  st.verdicts.push_back(
      {"differential", ratio <= diff_bound, "max E/(r E') = " + num(ratio) + " against " + num(diff_bound)});
}

void run_eigen(const Scenario& s, ResultStore& st) {
  const MinimalCone cone = reference_cone(s.cone);
  const SphericalSeed seed = component_seed(cone, 0);
  std::vector<int> arcs;
  if (s.bc == "dirichlet")
    for (int a = 0; a < seed.arc_count; ++a) arcs.push_back(a);
  const SurfaceMesh mesh = mesh_domain(cone, 1.0, 0, s.h, arcs);
  const SpectralResult r = first_eigenvalue(mesh);

  std::ostringstream csv;
  csv << "domain,bc,h,lambda1,h_coarse,lambda_coarse,extrapolated\n";
  const std::string domain = s.cone == ConeType::P ? "hemisphere" : s.cone == ConeType::Y ? "lune" : "triangle";
  csv << domain << ',' << s.bc << ',' << num(r.h) << ',' << num(r.lambda1) << ',' << num(r.h_coarse) << ','
      << num(r.lambda_coarse) << ',' << num(r.extrapolated) << '\n';
  st.tables["eigen.csv"] = csv.str();
  st.metrics = {{"lambda1", r.lambda1}, {"h", r.h}, {"extrapolated", r.extrapolated}};
  const bool two_sided = s.bc == "neumann" && s.cone != ConeType::T;
  const bool ok = r.extrapolated >= 1.96 && (!two_sided || r.extrapolated <= 2.04);
  st.verdicts.push_back({"eigen", ok,
                         domain + " (" + s.bc + ") extrapolated lambda1 = " + num(r.extrapolated) +
                             (two_sided ? ", required in [1.96, 2.04]" : ", required >= 1.96")});
}

void run_whitney(const Scenario& s, int jobs, ResultStore& st) {
  const auto audits = run_trials<CoverAudit>(s.trials, jobs, [&](int t) {
    const std::uint64_t seed = s.seed + static_cast<std::uint64_t>(t);
    const WhitneyInstance in = random_whitney_instance(seed);
    return audit_cover(*in.cover, in.crack, in.delta, 200, seed);
  });
  std::ostringstream csv;
  csv << "instance,core,comparability,worst_ratio,overlap,maximality,phi0,sum,gradient,partition_error\n";
  CoverAudit all;
  for (int t = 0; t < s.trials; ++t) {
    const CoverAudit& a = audits[static_cast<std::size_t>(t)];
    all.merge(a);
    csv << s.seed + static_cast<std::uint64_t>(t) << ',' << a.core_violations << ',' << a.comparability_violations
        << ',' << num(a.worst_ratio) << ',' << a.overlap << ',' << a.maximality_violations << ','
        << a.phi0_violations << ',' << a.sum_violations << ',' << a.gradient_violations << ','
        << num(a.partition_error) << '\n';
  }
  st.tables["audit.csv"] = csv.str();
  std::ostringstream cover;
  random_whitney_instance(s.seed).cover->write_csv(cover);
  st.tables["cover_0.csv"] = cover.str();
  st.metrics = {{"instances", all.instances},
                {"violations", all.core_violations + all.comparability_violations + all.maximality_violations +
                                   all.phi0_violations + all.sum_violations + all.gradient_violations},
                {"worst_ratio", all.worst_ratio},
                {"overlap", all.overlap},
                {"partition_error", all.partition_error}};
  st.verdicts.push_back({"cover", all.pass(s.overlap_bound),
                         "overlap " + std::to_string(all.overlap) + " (bound " + std::to_string(s.overlap_bound) +
                             "), worst radius ratio " + num(all.worst_ratio)});
}

void run_flatness(const Scenario& s, int jobs, ResultStore& st) {
  const auto reports = run_trials<FlatnessReport>(s.trials, jobs, [&](int t) {
    const WrinkledCone w = wrinkled_cone(s.cone, trial_seed(s, t), s.eps);
    return check_eps0_eps_minimal(w.crack, Ball({}, 1.0), s.eps0, s.eps, w.bad, w.cone, certification_options());
  });
  std::ostringstream csv;
  csv << "trial,pass,failed_clause,worst_beta,worst_r\n";
  int passed = 0;
  double worst = 0.0;
  for (int t = 0; t < s.trials; ++t) {
    const FlatnessReport& r = reports[static_cast<std::size_t>(t)];
    passed += r.pass;
    worst = std::max(worst, r.worst_beta);
    csv << t << ',' << (r.pass ? 1 : 0) << ',' << (r.failed_clause.empty() ? "-" : r.failed_clause) << ','
        << num(r.worst_beta) << ',' << num(r.worst_r) << '\n';
    std::ostringstream rec;
    r.write_csv(rec);
    st.tables["records_" + std::to_string(t) + ".csv"] = rec.str();
  }
  st.tables["certificates.csv"] = csv.str();
  st.metrics = {{"certified", passed}, {"trials", s.trials}, {"worst_beta", worst}};
  st.verdicts.push_back({"certified", passed == s.trials,
                         std::to_string(passed) + " of " + std::to_string(s.trials) + " certified at eps0 = " +
                             num(s.eps0)});
}

void run_counterexample(const Scenario& s, ResultStore& st) {
  const TubeResult t = tube_counterexample(s.eps, s.magnitude, s.resolution);
  st.tables["profile_0.csv"] = profile_csv(t.profile);
  if (!t.profile.vacuous) st.plots["profile_0.svg"] = loglog_svg(t.profile, s.name + ": tube profile");
  st.metrics = {{"gamma_hat", t.profile.gamma_hat}, {"total_energy", t.total_energy}};
  const bool flat = !t.profile.vacuous && std::abs(t.profile.gamma_hat) <= 0.15;
  st.verdicts.push_back({"decay_fails", flat,
                         t.profile.vacuous ? "zero field: no profile"
                                           : "fitted exponent " + num(t.profile.gamma_hat) +
                                                 ", required in [-0.15, 0.15]"});
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Decay: return "decay";
    case ScenarioKind::Eigen: return "eigen";
    case ScenarioKind::Whitney: return "whitney";
    case ScenarioKind::Flatness: return "flatness";
    case ScenarioKind::Counterexample: return "counterexample";
    case ScenarioKind::Monotonicity: return "monotonicity";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  for (ScenarioKind k : {ScenarioKind::Decay, ScenarioKind::Eigen, ScenarioKind::Whitney, ScenarioKind::Flatness,
                         ScenarioKind::Counterexample, ScenarioKind::Monotonicity})
    if (to_string(k) == s) return k;
  throw ConfigError("scenario.kind", "unknown scenario kind '" + s + "'");
}

ConfigError::ConfigError(const std::string& k, const std::string& what)
    : std::runtime_error(k.empty() ? what : k + ": " + what), key(k) {}

void Scenario::validate() const {
  require(!name.empty() && std::all_of(name.begin(), name.end(),
                                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) ||
                                                           c == '-' || c == '_' || c == '.'; }),
          "scenario.name", "use letters, digits, '-', '_' or '.'");
  require(trials >= 1 && trials <= 10000, "scenario.trials", "must be in [1, 10000]");
  const bool volume = kind == ScenarioKind::Decay || kind == ScenarioKind::Monotonicity;
  if (volume) require(resolution >= 16 && resolution <= 256, "parameters.resolution", "must be in [16, 256]");
  if (kind == ScenarioKind::Counterexample)
    require(resolution >= 16 && resolution <= 2048, "parameters.resolution", "must be in [16, 2048]");
  require(eps0 > 0.0 && eps0 < 1.0, "parameters.eps0", "must be in (0, 1)");
  require(eps > 0.0 && eps <= 0.25, "parameters.eps", "must be in (0, 0.25]");
  require(gamma > 0.0 && gamma <= 1.0, "parameters.gamma", "must be in (0, 1]");
  require(!radii.empty(), "parameters.radii", "needs at least one radius");
  for (double r : radii) require(r > 0.0 && r <= 1.0, "parameters.radii", "each radius must be in (0, 1]");
  if (kind == ScenarioKind::Decay)
    for (double r : radii)
      require(r / 2 >= 4.0 * cell_step(resolution), "parameters.radii",
              "r/2 = " + num(r / 2) + " is below four cells at this resolution");
  if (kind == ScenarioKind::Counterexample)
    require(eps >= 4.0 * cell_step(resolution), "parameters.eps", "tube half-width is below four cells");
  require(h >= 0.005 && h <= 0.5, "parameters.h", "must be in [0.005, 0.5]");
  require(bc == "neumann" || bc == "dirichlet", "parameters.bc", "must be neumann or dirichlet");
  require(std::isfinite(magnitude) && magnitude >= 0.0, "parameters.magnitude", "must be finite and >= 0");
  require(overlap_bound >= 1, "parameters.overlap_bound", "must be positive");
  require(!output_dir.empty(), "output.dir", "must not be empty");
}

std::string Scenario::serialize() const {
  std::ostringstream o;
  o << "[scenario]\n"
    << "kind = " << to_string(kind) << '\n'
    << "name = " << name << '\n'
    << "seed = " << seed << '\n'
    << "trials = " << trials << '\n'
    << "\n[parameters]\n"
    << "cone = " << to_string(cone) << '\n'
    << "resolution = " << resolution << '\n'
    << "eps0 = " << num(eps0) << '\n'
    << "eps = " << num(eps) << '\n'
    << "gamma = " << num(gamma) << '\n'
    << "radii = ";
  for (std::size_t i = 0; i < radii.size(); ++i) o << (i ? ", " : "") << num(radii[i]);
  o << '\n'
    << "h = " << num(h) << '\n'
    << "bc = " << bc << '\n'
    << "magnitude = " << num(magnitude) << '\n'
    << "overlap_bound = " << overlap_bound << '\n'
    << "\n[output]\n"
    << "dir = " << output_dir << '\n';
  return o.str();
}

Scenario Scenario::parse(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", "line " + std::to_string(e.line()) + ": " + e.message());
  }

  Scenario s;
  bool has_kind = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside any section");
    if (section != "scenario" && section != "parameters" && section != "output")
      throw ConfigError(section, "unknown section");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const std::string v = trim(node.data());
      if (full == "scenario.kind") {
        s.kind = scenario_kind_from_string(v);
        has_kind = true;
      } else if (full == "scenario.name") {
        s.name = v;
      } else if (full == "scenario.seed") {
        s.seed = parse_number<std::uint64_t>(full, v);
      } else if (full == "scenario.trials") {
        s.trials = parse_number<int>(full, v);
      } else if (full == "parameters.cone") {
        try {
          s.cone = cone_type_from_string(v);
        } catch (const std::exception&) {
          throw ConfigError(full, "unknown cone type '" + v + "'");
        }
      } else if (full == "parameters.resolution") {
        s.resolution = parse_number<int>(full, v);
      } else if (full == "parameters.eps0") {
        s.eps0 = parse_number<double>(full, v);
      } else if (full == "parameters.eps") {
        s.eps = parse_number<double>(full, v);
      } else if (full == "parameters.gamma") {
        s.gamma = parse_number<double>(full, v);
      } else if (full == "parameters.radii") {
        s.radii = parse_list(full, v);
      } else if (full == "parameters.h") {
        s.h = parse_number<double>(full, v);
      } else if (full == "parameters.bc") {
        s.bc = v;
      } else if (full == "parameters.magnitude") {
        s.magnitude = parse_number<double>(full, v);
      } else if (full == "parameters.overlap_bound") {
        s.overlap_bound = parse_number<int>(full, v);
      } else if (full == "output.dir") {
        s.output_dir = v;
      } else {
        throw ConfigError(full, "unknown key");
      }
    }
  }
  if (!has_kind) throw ConfigError("scenario.kind", "missing");
  s.validate();
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

// ---------------------------------------------------------------------------

bool ResultStore::pass() const {
  return !verdicts.empty() &&
         std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

std::string ResultStore::summary_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["pass"] = pass();
  for (const auto& [k, v] : metrics) j["metrics"][k] = v;
  j["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) j["verdicts"].push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
  return j.dump(2);
}

void ResultStore::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << text;
  };
  put("config.ini", config);
  put("summary.json", summary_json() + "\n");
  std::ostringstream m;
  m << "metric,value\n";
  for (const auto& [k, v] : metrics) m << k << ',' << num(v) << '\n';
  put("metrics.csv", m.str());
  std::ostringstream v;
  v << "verdict,pass,detail\n";
  for (const auto& x : verdicts) v << x.name << ',' << (x.pass ? 1 : 0) << ",\"" << x.detail << "\"\n";
  put("verdicts.csv", v.str());
  for (const auto& [name, text] : tables) put(name, text);
  for (const auto& [name, text] : plots) put(name, text);
}

ResultStore run(const Scenario& s, int jobs) {
  s.validate();
  ResultStore st;
  st.config = s.serialize();
  char id[17];
  std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(mix64(hash_name(st.config))));
  st.run_id = id;
  try {
    switch (s.kind) {
      case ScenarioKind::Decay: run_decay(s, jobs, st); break;
      case ScenarioKind::Monotonicity: run_monotonicity(s, jobs, st); break;
      case ScenarioKind::Eigen: run_eigen(s, st); break;
      case ScenarioKind::Whitney: run_whitney(s, jobs, st); break;
      case ScenarioKind::Flatness: run_flatness(s, jobs, st); break;
      case ScenarioKind::Counterexample: run_counterexample(s, st); break;
    }
  } catch (const ScenarioError& e) {
    throw ScenarioError(to_string(s.kind) + " " + e.what());
  } catch (const std::exception& e) {
    throw ScenarioError(to_string(s.kind) + ": " + e.what());
  }
  return st;
}

ResultStore run_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed, int jobs) {
  Scenario s = Scenario::load(path);
  if (seed) s.seed = *seed;
  return run(s, jobs);
}

// ---------------------------------------------------------------------------

std::string loglog_svg(const EnergyProfile& p, const std::string& title) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < p.radii.size() && i < p.omega2.size(); ++i)
    if (p.radii[i] > 0.0 && p.omega2[i] > 0.0) pts.emplace_back(std::log10(p.radii[i]), std::log10(p.omega2[i]));
  if (pts.empty()) throw std::invalid_argument("loglog_svg: no positive (r, omega2) rows");

  double x0 = pts.front().first, x1 = pts.front().first, y0 = pts.front().second, y1 = pts.front().second;
  for (const auto& [x, y] : pts) {
    x0 = std::min(x0, x), x1 = std::max(x1, x);
    y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  // reference lines through the largest-radius point
  const auto anchor = *std::max_element(pts.begin(), pts.end());
  auto ref = [&](double slope, double x) { return anchor.second + slope * (x - anchor.first); };
  for (double slope : {0.8, 1.0}) y0 = std::min(y0, ref(slope, x0)), y1 = std::max(y1, ref(slope, x0));
  if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
  const double padx = 0.05 * (x1 - x0), pady = 0.05 * (y1 - y0);
  x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;

  const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o.precision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(std::ceil(x0)); e <= static_cast<int>(std::floor(x1)); ++e)
    for (int m = 1; m <= 9; ++m) {
      const double x = e + std::log10(m);
      if (x < x0 || x > x1) continue;
      o << "<line x1=\"" << sx(x) << "\" y1=\"" << H - B << "\" x2=\"" << sx(x) << "\" y2=\"" << H - B - (m == 1 ? 8 : 4)
        << "\" stroke=\"black\"/>\n";
    }
  for (int e = static_cast<int>(std::floor(x0)); e <= static_cast<int>(std::ceil(x1)); ++e)
    for (int m : {1, 2, 5})
      if (const double x = e + std::log10(m); x >= x0 && x <= x1)
        o << "<text x=\"" << sx(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(m * std::pow(10.0, e))
          << "</text>\n";
  for (int e = static_cast<int>(std::floor(y0)); e <= static_cast<int>(std::ceil(y1)); ++e)
    for (int m : {1, 2, 5})
      if (const double y = e + std::log10(m); y >= y0 && y <= y1)
        o << "<text x=\"" << L - 6 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << num(m * std::pow(10.0, e))
          << "</text>\n";
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">r</text>\n";
  o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
    << ")\" text-anchor=\"middle\">omega2(0, r)</text>\n";
  if (!title.empty()) o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n";

  const struct {
    double slope;
    const char* color;
    const char* label;
  } refs[] = {{0.8, "#d95f02", "slope 0.8"}, {1.0, "#7570b3", "slope 1"}};
  int row = 0;
  for (const auto& r : refs) {
    o << "<line x1=\"" << sx(x0) << "\" y1=\"" << sy(ref(r.slope, x0)) << "\" x2=\"" << sx(x1) << "\" y2=\""
      << sy(ref(r.slope, x1)) << "\" stroke=\"" << r.color << "\" stroke-dasharray=\"6 4\"/>\n";
    o << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16 * row++ << "\" fill=\"" << r.color << "\">" << r.label
      << "</text>\n";
  }
  o << "<polyline fill=\"none\" stroke=\"#1b9e77\" stroke-width=\"2\" points=\"";
  for (const auto& [x, y] : pts) o << sx(x) << ',' << sy(y) << ' ';
  o << "\"/>\n";
  o << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 16 * row << "\" fill=\"#1b9e77\">omega2</text>\n";
  o << "</svg>\n";
  return o.str();
}

std::string plot_profile_csv(std::istream& csv, const std::string& title) {
  EnergyProfile p;
  try {
    p = EnergyProfile::read_csv(csv);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("plot: ") + e.what());
  }
  if (p.radii.empty()) throw std::invalid_argument("plot: empty profile CSV");
  return loglog_svg(p, title);
}

// ---------------------------------------------------------------------------

CrackSet standard_cone_crack(const MinimalCone& cone) {
  return CrackSet(mesh_cone(cone, Ball({}, 1.0), 0.04), 0.02);
}

WrinkledCone wrinkled_cone(ConeType type, std::uint64_t seed, double eps, int count) {
  CounterRng rng(seed, "wrinkled-cone");
  WrinkledCone out;
  out.cone = make_cone(type, {}, Mat3::identity());
  const double spacing = 0.02;
  auto tris = mesh_cone(out.cone, Ball({}, 1.0), spacing);

  // wrinkle centers are mesh vertices, so the displaced center stays on the crack
  std::vector<Vec3> candidates;
  for (const Triangle& t : tris)
    for (const Vec3& v : t)
      if (norm(v) <= 0.7 && out.cone.spine_distance(v) >= 4.0 * eps) candidates.push_back(v);
  std::sort(candidates.begin(), candidates.end(), lex_less);
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) throw std::invalid_argument("wrinkled_cone: eps too large for the unit ball");

  std::vector<Wrinkle> wrinkles;
  for (int attempt = 0; static_cast<int>(wrinkles.size()) < count && attempt < 10000; ++attempt) {
    const Vec3 c = candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(candidates.size()) - 1))];
    if (std::any_of(wrinkles.begin(), wrinkles.end(), [&](const Wrinkle& o) { return dist(o.center, c) < 5.0 * eps; }))
      continue;
    const Sector sec = out.cone.sectors()[static_cast<std::size_t>(out.cone.nearest_sector(c))];
    Wrinkle w;
    w.center = c;
    w.support = 0.8 * eps;
    w.amplitude = 0.1 * eps;
    w.direction = sec.normal;
    w.wavenumber = 2.0 * std::numbers::pi / eps;
    const Vec3 t = std::abs(sec.normal.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    w.phase_axis = normalized(cross(sec.normal, t));
    wrinkles.push_back(w);
  }
  // refine around each wrinkle so the displaced patch stays inside its ball
  const double fine = 0.1 * eps;
  std::vector<Triangle> refined;
  std::vector<Triangle> todo = std::move(tris);
  while (!todo.empty()) {
    const Triangle t = todo.back();
    todo.pop_back();
    const Vec3 g = (t[0] + t[1] + t[2]) * (1.0 / 3.0);
    const double rad = std::max({dist(g, t[0]), dist(g, t[1]), dist(g, t[2])});
    const double edge = std::max({dist(t[0], t[1]), dist(t[1], t[2]), dist(t[2], t[0])});
    const bool near = std::any_of(wrinkles.begin(), wrinkles.end(),
                                  [&](const Wrinkle& w) { return dist(g, w.center) - rad < 1.5 * eps; });
    if (!near || edge <= fine) {
      refined.push_back(t);
      continue;
    }
    const Vec3 a = (t[0] + t[1]) * 0.5, b = (t[1] + t[2]) * 0.5, c = (t[2] + t[0]) * 0.5;
    todo.push_back({t[0], a, c});
    todo.push_back({a, t[1], b});
    todo.push_back({c, b, t[2]});
    todo.push_back({a, b, c});
  }
  tris = displace(std::move(refined), [&](const Vec3& x) {
    Vec3 g;
    for (const Wrinkle& w : wrinkles) g = g + w(x);
    return g;
  });
  out.crack = CrackSet(std::move(tris), spacing / 2);
  for (const Wrinkle& w : wrinkles) out.bad.balls.emplace_back(w.center + w(w.center), eps);
  out.bad.overlap_constant = 1;
  return out;
}

EpsMinimalOptions certification_options() {
  EpsMinimalOptions opt;
  opt.sweep.n_centers = 4;
  opt.sweep.n_radii = 2;
  return opt;
}

}  // namespace conelab

#include "ak4/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ak4/generators.hpp"
#include "ak4/hodge.hpp"
#include "ak4/projgeom.hpp"
#include "ak4/rng.hpp"

namespace ak4 {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + key + ": " + value);
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    size_t used = 0;
    const long long x = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": " + value);
}

// full-precision, locale-free float formatting for CSV rows
std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

}  // namespace

ScenarioConfig ScenarioConfig::parse(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section = "scenario";
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config: malformed section at line " +
                          std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "scenario" && section != "generator" &&
          section != "tolerances") {
        throw ConfigError("config: unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key = value at line " +
                        std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;

    if (full == "scenario.name") {
      cfg.name = value;
    } else if (full == "scenario.grid") {
      cfg.grid = static_cast<int>(parse_int(full, value));
    } else if (full == "scenario.seed") {
      cfg.seed = static_cast<std::uint64_t>(parse_int(full, value));
    } else if (full == "scenario.trials") {
      cfg.trials = static_cast<int>(parse_int(full, value));
    } else if (full == "scenario.out") {
      cfg.out_dir = value;
    } else if (full == "generator.mode") {
      cfg.mode = value;
    } else if (full == "generator.epsilon") {
      cfg.epsilon = parse_double(full, value);
    } else if (full == "generator.volume_preserving") {
      cfg.volume_preserving = parse_bool(full, value);
    } else if (full == "generator.f_mode") {
      cfg.f_mode = value;
    } else if (full == "generator.f_value") {
      cfg.f_value = parse_double(full, value);
    } else if (full == "generator.f_amplitude") {
      cfg.f_amplitude = parse_double(full, value);
    } else if (full == "tolerances.tol_solve") {
      cfg.tol_solve = parse_double(full, value);
    } else if (full == "tolerances.tol_ps") {
      cfg.tol_ps = parse_double(full, value);
    } else if (full == "tolerances.tol_claim") {
      cfg.tol_claim = parse_double(full, value);
    } else if (full == "tolerances.tol_cert") {
      cfg.tol_cert = parse_double(full, value);
    } else if (full == "tolerances.tol_bound") {
      cfg.tol_bound = parse_double(full, value);
    } else {
      throw ConfigError("config: unknown key " + full);
    }
  }
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void ScenarioConfig::validate() const {
  if (grid < 4) throw ConfigError("config: grid >= 4 required");
  if (epsilon < 0.0) throw ConfigError("config: epsilon >= 0 required");
  if (trials < 1) throw ConfigError("config: trials >= 1 required");
  if (tol_solve <= 0.0) throw ConfigError("config: tol_solve > 0 required");
}

namespace {

nlohmann::ordered_json config_echo(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["grid"] = cfg.grid;
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["mode"] = cfg.mode;
  j["epsilon"] = cfg.epsilon;
  j["volume_preserving"] = cfg.volume_preserving;
  j["f_mode"] = cfg.f_mode;
  j["f_value"] = cfg.f_value;
  j["f_amplitude"] = cfg.f_amplitude;
  j["tolerances"] = {{"tol_solve", cfg.tol_solve},
                     {"tol_ps", cfg.tol_ps},
                     {"tol_claim", cfg.tol_claim},
                     {"tol_cert", cfg.tol_cert},
                     {"tol_bound", cfg.tol_bound}};
  return j;
}

Report make_report(const ScenarioConfig& cfg, const std::string& name) {
  Report rep;
  rep.scenario = name;
  rep.json["scenario"] = name;
  rep.json["version"] = kVersion;
  rep.json["config"] = config_echo(cfg);
  return rep;
}

}  // namespace

void Report::write(const std::string& out_dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / (scenario + "-report.json"));
    if (!out) throw IoError("Report::write: cannot open report file");
    out << json.dump(2) << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / (scenario + "-trials.csv"));
    if (!out) throw IoError("Report::write: cannot open csv file");
    out << csv;
  }
}

// ---------------------------------------------------------------------------
// tau
// ---------------------------------------------------------------------------

namespace {

struct TauBundle {
  std::array<double, 6> periods;
  double max_abs_period;
  bool flag;
  double residual;
  double harmonic_sq;
};

TauBundle tau_bundle_from_form(const FormField& omega, const Grid4& grid,
                               const ScenarioConfig& cfg) {
  const HodgeSplit split = hodge_decompose(omega, grid, cfg.tol_solve);
  TauBundle b{};
  b.periods = periods_of(split.harmonic);
  b.max_abs_period = 0.0;
  for (double p : b.periods) b.max_abs_period = std::max(b.max_abs_period, std::abs(p));
  b.flag = b.max_abs_period > cfg.tol_ps;
  b.residual = split.residual;
  b.harmonic_sq = wedge_integral(split.harmonic, split.harmonic, grid);
  return b;
}

void append_tau_record(nlohmann::ordered_json& records, std::string& csv,
                       int trial, std::uint64_t seed, const std::string& mode,
                       const TauBundle& b, bool pass) {
  nlohmann::ordered_json r;
  r["trial"] = trial;
  r["seed"] = seed;
  r["mode"] = mode;
  r["periods"] = b.periods;
  r["max_abs_period"] = b.max_abs_period;
  r["pseudo_symplectic"] = b.flag;
  r["residual"] = b.residual;
  r["harmonic_square"] = b.harmonic_sq;
  r["pass"] = pass;
  records.push_back(std::move(r));
  std::ostringstream row;
  row << trial << "," << seed << "," << mode;
  for (double p : b.periods) row << "," << fmt(p);
  row << "," << fmt(b.max_abs_period) << "," << (b.flag ? 1 : 0) << ","
      << fmt(b.residual) << "," << fmt(b.harmonic_sq) << "," << (pass ? 1 : 0)
      << "\n";
  csv += row.str();
}

}  // namespace

Report run_tau_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Report rep = make_report(cfg, "tau");
  rep.csv =
      "trial,seed,mode,p01,p02,p03,p12,p13,p23,max_abs_period,"
      "pseudo_symplectic,residual,harmonic_square,pass\n";
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  bool all_pass = true;

  if (cfg.mode == "flat") {
    const TripleField field = standard_flat_field(cfg.grid);
    const TauBundle b =
        tau_bundle_from_form(field.assemble_omega(), field.grid(), cfg);
    // constant symplectic form: class (1,0,0,0,0,1), flag set
    bool pass = b.flag;
    pass = pass && std::abs(b.periods[0] - 1.0) < 1e-6 &&
           std::abs(b.periods[5] - 1.0) < 1e-6;
    for (int c : {1, 2, 3, 4}) pass = pass && std::abs(b.periods[c]) < 1e-6;
    append_tau_record(records, rep.csv, 0, cfg.seed, cfg.mode, b, pass);
    all_pass = pass;
  } else if (cfg.mode == "exact") {
    const Grid4 grid = flat_grid(cfg.grid);
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t seed = derive_seed(cfg.seed, t);
      const FormField eta = random_smooth_one_form(cfg.grid, 1.0, seed);
      const TauBundle b = tau_bundle_from_form(d(eta), grid, cfg);
      const bool pass = !b.flag;  // exact fields have trivial class
      append_tau_record(records, rep.csv, t, seed, cfg.mode, b, pass);
      all_pass = all_pass && pass;
    }
  } else if (cfg.mode == "perturbed") {
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t seed = derive_seed(cfg.seed, t);
      const TripleField field =
          perturbed_metric_field(cfg.grid, cfg.epsilon, seed);
      const TauBundle b =
          tau_bundle_from_form(field.assemble_omega(), field.grid(), cfg);
      const bool pass = b.flag;
      append_tau_record(records, rep.csv, t, seed, cfg.mode, b, pass);
      all_pass = all_pass && pass;
    }
  } else {
    throw ConfigError("tau: unknown generator mode " + cfg.mode);
  }

  rep.json["records"] = std::move(records);
  rep.json["summary"] = {{"pass", all_pass}};
  rep.passed = all_pass;
  return rep;
}

// ---------------------------------------------------------------------------
// norm invariance
// ---------------------------------------------------------------------------

Report run_norm_invariance(const ScenarioConfig& cfg) {
  cfg.validate();
  Report rep = make_report(cfg, "norm-invariance");
  rep.csv = "trial,seed,epsilon,norm_base,norm_deformed,gap,pass\n";
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  bool all_pass = true;

  const TripleField base = standard_flat_field(cfg.grid);
  const HarmonicNorm base_norm = harmonic_norm(base, cfg.tol_solve);

  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    const TripleField deformed = j_invariant_deformed_field(
        cfg.grid, cfg.epsilon, seed, cfg.volume_preserving);

    // cellwise volume forms must agree
    for (long v = 0; v < base.grid().vertex_count(); ++v) {
      const double v1 = base.grid().vertex_metric(v).volume_density();
      const double v2 = deformed.grid().vertex_metric(v).volume_density();
      if (std::abs(v1 - v2) > kTolAlg * std::max(v1, v2)) {
        throw VolumeMismatch("norm-invariance: cellwise volume forms differ");
      }
    }

    const HarmonicNorm def_norm = harmonic_norm(deformed, cfg.tol_solve);
    const double gap = std::abs(base_norm.norm - def_norm.norm) /
                       std::max({base_norm.norm, def_norm.norm, 1e-300});
    const bool pass = gap < cfg.tol_claim;
    all_pass = all_pass && pass;

    nlohmann::ordered_json r;
    r["trial"] = t;
    r["seed"] = seed;
    r["epsilon"] = cfg.epsilon;
    r["norm_base"] = base_norm.norm;
    r["norm_deformed"] = def_norm.norm;
    r["gap"] = gap;
    r["pass"] = pass;
    records.push_back(std::move(r));
    rep.csv += std::to_string(t) + "," + std::to_string(seed) + "," +
               fmt(cfg.epsilon) + "," + fmt(base_norm.norm) + "," +
               fmt(def_norm.norm) + "," + fmt(gap) + "," + (pass ? "1" : "0") +
               "\n";
  }

  rep.json["records"] = std::move(records);
  rep.json["summary"] = {{"pass", all_pass}, {"norm_base", base_norm.norm}};
  rep.passed = all_pass;
  return rep;
}

// ---------------------------------------------------------------------------
// conformal stability
// ---------------------------------------------------------------------------

Report run_conformal_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Report rep = make_report(cfg, "conformal");
  rep.csv = "trial,seed,f_mode,value,harmonic_square,min_pointwise,bound,pass\n";
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  bool all_pass = true;

  const TripleField base = cfg.epsilon > 0.0
                               ? perturbed_metric_field(cfg.grid, cfg.epsilon,
                                                        derive_seed(cfg.seed, 777))
                               : standard_flat_field(cfg.grid);

  const int trials = cfg.f_mode == "bump" ? cfg.trials : 1;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    FormField f(0, cfg.grid);
    if (cfg.f_mode == "zero") {
      // stays zero
    } else if (cfg.f_mode == "const") {
      f.values().setConstant(cfg.f_value);
    } else if (cfg.f_mode == "bump") {
      f = random_smooth_scalar(cfg.grid, cfg.f_amplitude, seed);
    } else {
      throw ConfigError("conformal: unknown f_mode " + cfg.f_mode);
    }

    const PositivityResult res = positivity_integral(base, f, cfg.tol_solve);
    const bool pass = res.value > 0.0 && res.value >= res.bound - cfg.tol_bound;
    all_pass = all_pass && pass;

    nlohmann::ordered_json r;
    r["trial"] = t;
    r["seed"] = seed;
    r["f_mode"] = cfg.f_mode;
    r["value"] = res.value;
    r["harmonic_square"] = res.harmonic_square;
    r["min_pointwise"] = res.min_pointwise;
    r["bound"] = res.bound;
    r["pass"] = pass;
    records.push_back(std::move(r));
    rep.csv += std::to_string(t) + "," + std::to_string(seed) + "," +
               cfg.f_mode + "," + fmt(res.value) + "," +
               fmt(res.harmonic_square) + "," + fmt(res.min_pointwise) + "," +
               fmt(res.bound) + "," + (pass ? "1" : "0") + "\n";
  }

  rep.json["records"] = std::move(records);
  rep.json["summary"] = {{"pass", all_pass}};
  rep.passed = all_pass;
  return rep;
}

// ---------------------------------------------------------------------------
// junction
// ---------------------------------------------------------------------------

Report run_junction_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Report rep = make_report(cfg, "junction");
  rep.csv = "trial,seed,outcome,attempts,residual,pass\n";
  nlohmann::ordered_json records = nlohmann::ordered_json::array();

  const Metric4 g_ref = Metric4::identity();
  int successes = 0;
  int degenerate = 0;
  int orientation_mismatch = 0;
  double worst_residual = 0.0;
  bool all_pass = true;

  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = derive_seed(cfg.seed, t);
    Rng rng(seed);
    const GeneratedPair p0 = random_compatible_pair_oriented(rng, +1);
    AlmostComplex4 J0 = p0.J;
    AlmostComplex4 J1 = p0.J;
    if (cfg.mode == "generic") {
      J1 = random_compatible_pair_oriented(rng, +1).J;
    } else if (cfg.mode == "identical") {
      // J1 stays J0
    } else if (cfg.mode == "opposite") {
      J1 = random_compatible_pair_oriented(rng, -1).J;
    } else {
      throw ConfigError("junction: unknown generator mode " + cfg.mode);
    }

    std::string outcome;
    int attempts = 0;
    double residual = 0.0;
    bool pass = false;
    try {
      const JunctionResult res = junction(J0, J1, g_ref, seed);
      attempts = res.attempts;
      // independent certificates: direct invariance checks of both metrics
      const auto cert = [](const Metric4& g, const AlmostComplex4& a,
                           const AlmostComplex4& b) {
        const Mat4& m = g.matrix();
        return std::max(
            rel_error(a.matrix().transpose() * m * a.matrix(), m),
            rel_error(b.matrix().transpose() * m * b.matrix(), m));
      };
      residual = std::max(cert(res.g_p, J0, res.J_junct),
                          cert(res.g_q, res.J_junct, J1));
      const bool spd = res.g_p.positive_definite() && res.g_q.positive_definite();
      outcome = "success";
      ++successes;
      worst_residual = std::max(worst_residual, residual);
      pass = spd && residual < cfg.tol_cert;
    } catch (const DegenerateConfiguration&) {
      outcome = "degenerate";
      ++degenerate;
      pass = true;  // flagged degeneracy is a valid outcome
    } catch (const IncompatibleOrientation&) {
      outcome = "orientation_mismatch";
      ++orientation_mismatch;
      pass = cfg.mode == "opposite";
    }
    all_pass = all_pass && pass;

    nlohmann::ordered_json r;
    r["trial"] = t;
    r["seed"] = seed;
    r["outcome"] = outcome;
    r["attempts"] = attempts;
    r["residual"] = residual;
    r["pass"] = pass;
    records.push_back(std::move(r));
    rep.csv += std::to_string(t) + "," + std::to_string(seed) + "," + outcome +
               "," + std::to_string(attempts) + "," + fmt(residual) + "," +
               (pass ? "1" : "0") + "\n";
  }

  if (cfg.mode == "opposite") {
    all_pass = all_pass && orientation_mismatch == cfg.trials;
  }

  rep.json["records"] = std::move(records);
  rep.json["summary"] = {
      {"pass", all_pass},
      {"successes", successes},
      {"degenerate", degenerate},
      {"orientation_mismatch", orientation_mismatch},
      {"degenerate_rate", double(degenerate) / double(cfg.trials)},
      {"worst_residual", worst_residual}};
  rep.passed = all_pass;
  return rep;
}

// ---------------------------------------------------------------------------
// closedness diagnostic
// ---------------------------------------------------------------------------

Report run_closedness_diagnostic(const ScenarioConfig& cfg) {
  cfg.validate();
  Report rep = make_report(cfg, "closedness");
  rep.csv = "label,n,d_norm,dstar_norm\n";
  nlohmann::ordered_json records = nlohmann::ordered_json::array();

  const std::array<int, 2> resolutions = {cfg.grid, 2 * cfg.grid};
  const double amplitude = cfg.f_amplitude;

  struct Row {
    std::string label;
    int n;
    double dn;
    double dsn;
  };
  std::vector<Row> rows;

  for (int n : resolutions) {
    // symplectic endpoint: constant form, flat metric
    {
      const TripleField field = standard_flat_field(n);
      const auto [dn, dsn] = dstar_omega_diagnostic(field);
      rows.push_back({"symplectic", n, dn, dsn});
    }
    // non-closed endpoint: conformally rescaled form, still a valid triple
    {
      const TripleField base = standard_flat_field(n);
      const FormField f = random_smooth_scalar(n, amplitude, cfg.seed);
      const TripleField rescaled = conformal_rescale(base, f);
      const auto [dn, dsn] = dstar_omega_diagnostic(rescaled);
      rows.push_back({"nonclosed", n, dn, dsn});
    }
    // smooth closed reference: discretization error must shrink at 2nd order
    {
      const Grid4 grid = flat_grid(n);
      FormField omega = smooth_closed_two_form(n, amplitude, cfg.seed);
      // add the constant symplectic form so the field is nondegenerate-ish
      const FormField constant = FormField::sample(
          2, n, [&](int c, const Vec4&) {
            return standard_symplectic_form().components()[c];
          });
      omega += constant;
      rows.push_back({"smooth_closed", n, norm(d(omega), grid),
                      norm(d_star(omega, grid), grid)});
    }
  }

  const auto find_row = [&](const std::string& label, int n) -> const Row& {
    for (const auto& r : rows) {
      if (r.label == label && r.n == n) return r;
    }
    throw Error("closedness: missing row");
  };

  const Row& sym_fine = find_row("symplectic", resolutions[1]);
  const Row& non_coarse = find_row("nonclosed", resolutions[0]);
  const Row& non_fine = find_row("nonclosed", resolutions[1]);
  const Row& closed_coarse = find_row("smooth_closed", resolutions[0]);
  const Row& closed_fine = find_row("smooth_closed", resolutions[1]);

  const double ratio_closed =
      closed_fine.dn > 0.0 ? closed_coarse.dn / closed_fine.dn : 0.0;
  const double ratio_nonclosed =
      non_fine.dsn > 0.0 ? non_coarse.dsn / non_fine.dsn : 0.0;

  const bool pass_symplectic = sym_fine.dn < 1e-8 && sym_fine.dsn < 1e-8;
  const bool pass_nonclosed = non_coarse.dsn > 1e-2 && non_fine.dsn > 1e-2;
  const bool all_pass = pass_symplectic && pass_nonclosed;

  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["label"] = r.label;
    j["n"] = r.n;
    j["d_norm"] = r.dn;
    j["dstar_norm"] = r.dsn;
    records.push_back(std::move(j));
    rep.csv += r.label + "," + std::to_string(r.n) + "," + fmt(r.dn) + "," +
               fmt(r.dsn) + "\n";
  }

  rep.json["records"] = std::move(records);
  rep.json["summary"] = {{"pass", all_pass},
                         {"pass_symplectic", pass_symplectic},
                         {"pass_nonclosed", pass_nonclosed},
                         {"smooth_closed_error_ratio", ratio_closed},
                         {"nonclosed_stability_ratio", ratio_nonclosed}};
  rep.passed = all_pass;
  return rep;
}

Report run_scenario(const ScenarioConfig& cfg) {
  if (cfg.name == "tau") return run_tau_scenario(cfg);
  if (cfg.name == "norm-invariance") return run_norm_invariance(cfg);
  if (cfg.name == "conformal") return run_conformal_scenario(cfg);
  if (cfg.name == "junction") return run_junction_scenario(cfg);
  if (cfg.name == "closedness") return run_closedness_diagnostic(cfg);
  throw ConfigError("unknown scenario: " + cfg.name);
}

}  // namespace ak4

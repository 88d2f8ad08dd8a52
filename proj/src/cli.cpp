#include "qlayer/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qlayer/errors.hpp"
#include "qlayer/layer.hpp"
#include "qlayer/parabolicity.hpp"

namespace qlayer {

using json = nlohmann::ordered_json;

// ---- config parsing -------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_at(int line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& text, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail_at(line, "expected a number, got '" + text + "'");
  }
  if (used != text.size()) fail_at(line, "expected a number, got '" + text + "'");
  if (!std::isfinite(v)) fail_at(line, "number must be finite");
  return v;
}

// drops a trailing comment outside of quotes
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

ConfigValue parse_value(const std::string& text, int line) {
  if (text.empty()) fail_at(line, "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') fail_at(line, "unterminated string");
    const std::string body = text.substr(1, text.size() - 2);
    if (body.find('"') != std::string::npos) fail_at(line, "stray quote in string");
    return body;
  }
  if (text == "true") return true;
  if (text == "false") return false;
  if (text.front() == '[') {
    if (text.back() != ']') fail_at(line, "unterminated array");
    std::vector<double> out;
    const std::string body = trim(text.substr(1, text.size() - 2));
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) fail_at(line, "empty array element");
      out.push_back(parse_number(item, line));
    }
    return out;
  }
  return parse_number(text, line);
}

const char* type_name(const ConfigValue& v) {
  switch (v.index()) {
    case 0: return "number";
    case 1: return "string";
    case 2: return "boolean";
    default: return "array";
  }
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::stringstream in(text);
  std::string raw, table;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail_at(line, "malformed table header");
      table = trim(s.substr(1, s.size() - 2));
      if (table.empty() || table.find_first_of(" .[]=\"") != std::string::npos)
        fail_at(line, "invalid table name '" + table + "'");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail_at(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty() || key.find_first_of(" .[]\"") != std::string::npos) fail_at(line, "invalid key '" + key + "'");
    const std::string full = table.empty() ? key : table + "." + key;
    if (cfg.entries_.count(full)) fail_at(line, "duplicate key '" + full + "'");
    cfg.entries_[full] = ConfigEntry{parse_value(trim(s.substr(eq + 1)), line), line};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ConfigEntry& ConfigFile::get(const std::string& key) const {
  read_[key] = true;
  return entries_.at(key);
}

int ConfigFile::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

double ConfigFile::number(const std::string& key, std::optional<double> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& e = get(key);
  if (const auto* v = std::get_if<double>(&e.value)) return *v;
  fail_at(e.line, "'" + key + "' must be a number, got " + type_name(e.value));
}

int ConfigFile::integer(const std::string& key, std::optional<int> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) fail_at(line_of(key), "'" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::string ConfigFile::string(const std::string& key, std::optional<std::string> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& e = get(key);
  if (const auto* v = std::get_if<std::string>(&e.value)) return *v;
  fail_at(e.line, "'" + key + "' must be a string, got " + type_name(e.value));
}

bool ConfigFile::boolean(const std::string& key, std::optional<bool> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& e = get(key);
  if (const auto* v = std::get_if<bool>(&e.value)) return *v;
  fail_at(e.line, "'" + key + "' must be true or false, got " + type_name(e.value));
}

std::vector<double> ConfigFile::numbers(const std::string& key, std::optional<std::vector<double>> fallback) const {
  if (!has(key)) {
    if (fallback) return *fallback;
    throw ConfigError("missing required key '" + key + "'");
  }
  const auto& e = get(key);
  if (const auto* v = std::get_if<std::vector<double>>(&e.value)) return *v;
  fail_at(e.line, "'" + key + "' must be an array of numbers, got " + type_name(e.value));
}

std::vector<std::string> ConfigFile::unread() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (!read_.count(k)) out.push_back(k);
  return out;
}

// ---- scenarios ------------------------------------------------------------------

namespace {

MeshSpec mesh_spec(const ConfigFile& cfg, const std::string& key, MeshSpec fallback) {
  if (!cfg.has(key)) return fallback;
  const auto v = cfg.numbers(key);
  const int line = cfg.line_of(key);
  if (v.size() != 3) fail_at(line, "'" + key + "' must list [nr, ntheta, nu]");
  for (double x : v)
    if (x != std::floor(x) || x < 4 || x > 4096) fail_at(line, "mesh node counts must be integers in [4, 4096]");
  return {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2])};
}

}  // namespace

Scenario parse_scenario(const ConfigFile& cfg) {
  Scenario s;
  const int version = cfg.integer("version");
  if (version != scenario_schema_version)
    fail_at(cfg.line_of("version"), "unsupported scenario version " + std::to_string(version));
  s.name = cfg.string("name", "");

  s.surface = cfg.string("surface.id");
  try {
    catalog_info(s.surface);
  } catch (const ConfigError& e) {
    fail_at(cfg.line_of("surface.id"), e.what());
  }
  s.params.height = cfg.number("surface.height", 1.0);
  s.params.coefficients = cfg.numbers("surface.coefficients", std::vector<double>{});

  s.a = cfg.number("layer.a");
  if (!(s.a > 0.0)) fail_at(cfg.line_of("layer.a"), "layer.a must be positive");
  s.C0 = cfg.number("layer.C0", 0.9);
  if (!(s.C0 > 0.0 && s.C0 < 1.0)) fail_at(cfg.line_of("layer.C0"), "layer.C0 must lie in (0, 1)");

  s.truncation = cfg.number("truncation.radius", 12.0);
  if (!(s.truncation > 1.0)) fail_at(cfg.line_of("truncation.radius"), "truncation.radius must exceed 1");

  s.eigensolver = cfg.boolean("mesh.enabled", true);
  s.mesh_fine = mesh_spec(cfg, "mesh.fine", s.mesh_fine);
  s.mesh_coarse = mesh_spec(cfg, "mesh.coarse", s.mesh_coarse);
  s.eigen_count = cfg.integer("mesh.count", s.eigen_count);
  if (s.eigen_count < 1 || s.eigen_count > 10) fail_at(cfg.line_of("mesh.count"), "mesh.count must lie in [1, 10]");
  s.eigen_tol = cfg.number("mesh.tol", s.eigen_tol);
  if (!(s.eigen_tol >= 1e-10 && s.eigen_tol < 1.0)) fail_at(cfg.line_of("mesh.tol"), "mesh.tol must lie in [1e-10, 1)");
  s.max_iterations = cfg.integer("mesh.max_iterations", s.max_iterations);
  if (s.max_iterations < 1) fail_at(cfg.line_of("mesh.max_iterations"), "mesh.max_iterations must be positive");
  const int seed = cfg.integer("mesh.seed", static_cast<int>(s.seed));
  if (seed < 0) fail_at(cfg.line_of("mesh.seed"), "mesh.seed must be nonnegative");
  s.seed = static_cast<std::uint64_t>(seed);
  const std::string pre = cfg.string("mesh.preconditioner", "factorized");
  if (pre == "factorized") s.preconditioner = Preconditioner::factorized;
  else if (pre == "diagonal") s.preconditioner = Preconditioner::diagonal;
  else fail_at(cfg.line_of("mesh.preconditioner"), "mesh.preconditioner must be \"factorized\" or \"diagonal\"");

  const std::string kind = cfg.string("family.kind", "auto");
  if (kind == "auto") s.family = FamilyChoice::automatic;
  else if (kind == "product") s.family = FamilyChoice::product;
  else if (kind == "perturbed") s.family = FamilyChoice::perturbed;
  else if (kind == "convex") s.family = FamilyChoice::convex;
  else fail_at(cfg.line_of("family.kind"), "family.kind must be auto, product, perturbed or convex");
  s.ladder = cfg.numbers("family.ladder", std::vector<double>{});
  for (double R : s.ladder)
    if (!(R > 2.0)) fail_at(cfg.line_of("family.ladder"), "ladder entries must exceed 2");
  const std::string chi1 = cfg.string("family.chi1", "sine");
  if (chi1 == "sine") s.chi1 = Chi1Kind::sine;
  else if (chi1 == "cubic") s.chi1 = Chi1Kind::cubic;
  else fail_at(cfg.line_of("family.chi1"), "family.chi1 must be \"sine\" or \"cubic\"");
  s.inner_radius = cfg.number("family.inner_radius", s.inner_radius);
  if (!(s.inner_radius > 1.0)) fail_at(cfg.line_of("family.inner_radius"), "family.inner_radius must exceed 1");
  s.j_radius = cfg.number("family.j_radius", s.j_radius);
  if (!(s.j_radius > 0.0)) fail_at(cfg.line_of("family.j_radius"), "family.j_radius must be positive");

  s.threshold_radii = cfg.numbers("threshold.radii", s.threshold_radii);
  for (double K : s.threshold_radii)
    if (!(K >= 0.0 && K <= s.truncation))
      fail_at(cfg.line_of("threshold.radii"), "threshold radii must lie in [0, truncation.radius]");
  std::sort(s.threshold_radii.begin(), s.threshold_radii.end());

  s.parabolicity_T = cfg.number("parabolicity.T", s.parabolicity_T);
  if (!(s.parabolicity_T > 10.0 * std::exp(1.0)))
    fail_at(cfg.line_of("parabolicity.T"), "parabolicity.T must exceed 10 e");

  const auto extra = cfg.unread();
  if (!extra.empty()) fail_at(cfg.line_of(extra.front()), "unknown key '" + extra.front() + "'");
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  Scenario s = parse_scenario(ConfigFile::load(path));
  if (s.name.empty()) s.name = path.stem().string();
  return s;
}

int exit_code(Outcome outcome) {
  switch (outcome) {
    case Outcome::granted: return 0;
    case Outcome::denied: return 3;
    case Outcome::error: return 1;
  }
  return 1;
}

// ---- pipeline -------------------------------------------------------------------

namespace {

json measured(double value, double tolerance) {
  json j;
  j["value"] = value;
  j["tolerance"] = tolerance;
  return j;
}

std::string to_string(FamilyChoice c) {
  switch (c) {
    case FamilyChoice::automatic: return "auto";
    case FamilyChoice::product: return "product";
    case FamilyChoice::perturbed: return "perturbed";
    case FamilyChoice::convex: return "convex";
  }
  return "auto";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json scenario_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["surface"] = {{"id", s.surface}, {"height", s.params.height}, {"coefficients", s.params.coefficients}};
  j["layer"] = {{"a", s.a}, {"C0", s.C0}};
  j["truncation_radius"] = s.truncation;
  j["mesh"] = {{"enabled", s.eigensolver},
               {"fine", {s.mesh_fine.nr, s.mesh_fine.ntheta, s.mesh_fine.nu}},
               {"coarse", {s.mesh_coarse.nr, s.mesh_coarse.ntheta, s.mesh_coarse.nu}},
               {"count", s.eigen_count},
               {"tol", s.eigen_tol},
               {"max_iterations", s.max_iterations},
               {"preconditioner", s.preconditioner == Preconditioner::factorized ? "factorized" : "diagonal"}};
  j["family"] = {{"kind", to_string(s.family)},
                 {"ladder", s.ladder},
                 {"chi1", s.chi1 == Chi1Kind::sine ? "sine" : "cubic"},
                 {"inner_radius", s.inner_radius},
                 {"j_radius", s.j_radius}};
  j["threshold_radii"] = s.threshold_radii;
  j["parabolicity_T"] = s.parabolicity_T;
  return j;
}

struct Variational {
  FamilyKind kind = FamilyKind::product;
  double R = 0.0;
  QuadFormReport q;
  TestFunctionFamily family;
  SurfaceChart chart;
  QuadGrid grid;
  double support = 0.0;     // chart radius outside which the trial vanishes
  bool negative = false;
  json detail;
};

bool form_negative(const QuadFormReport& q) { return !q.degenerate && q.Q_min < -q.quadrature_error; }

json form_json(const QuadFormReport& q) {
  json j;
  j["Q1"] = measured(q.Q1, q.quadrature_error);
  j["Q2"] = measured(q.Q2, q.q2_error);
  j["Q"] = measured(q.Q, q.quadrature_error);
  j["norm"] = measured(q.norm, q.quadrature_error);
  j["Q2_expansion"] = measured(q.Q2_expansion, q.q2_error);
  j["has_perturbation"] = q.has_perturbation;
  j["cross"] = measured(q.cross, q.cross_error);
  j["cross_identity"] = measured(q.cross_identity, q.cross_error);
  j["quad"] = measured(q.quad, q.quadrature_error);
  j["epsilon_star"] = q.epsilon_star;
  j["Q_min"] = measured(q.Q_min, q.quadrature_error);
  j["norm_min"] = measured(q.norm_min, q.quadrature_error);
  j["quadrature_error"] = q.quadrature_error;
  j["refinement_ratio"] = q.refinement_ratio;
  j["degenerate"] = q.degenerate;
  j["clamped"] = q.clamped;
  j["cells"] = q.cells;
  return j;
}

std::vector<double> default_ladder(FamilyKind k) {
  switch (k) {
    case FamilyKind::convex: return {4.0, 8.0, 16.0, 32.0};
    case FamilyKind::product: return {10.0, 100.0, 1000.0};
    case FamilyKind::perturbed: return {1e2, 1e4, 1e6};
  }
  return {};
}

FamilyKind resolve_family(const Scenario& s) {
  switch (s.family) {
    case FamilyChoice::product: return FamilyKind::product;
    case FamilyChoice::perturbed: return FamilyKind::perturbed;
    case FamilyChoice::convex: return FamilyKind::convex;
    case FamilyChoice::automatic: break;
  }
  if (s.surface == "s1xr2-logtube") return FamilyKind::product;
  try {
    const GraphFunction f = catalog_graph(s.surface, s.params);
    convex_delta(f);
    return FamilyKind::convex;
  } catch (const NotStrictlyConvexAtOrigin&) {
    return FamilyKind::perturbed;
  }
}

// Runs the ladder and returns the first negative attempt, or the last one.
Variational variational_path(const Scenario& s, const LayerConfig& config, const TransverseProfile& profile,
                             json& attempts, std::string& csv) {
  const FamilyKind kind = resolve_family(s);
  const auto ladder = s.ladder.empty() ? default_ladder(kind) : s.ladder;
  csv = "R,Q,Q_min,quadrature_error,negative\n";
  Variational out;
  for (double R : ladder) {
    Variational v;
    v.kind = kind;
    v.R = R;
    if (kind == FamilyKind::convex) {
      const GraphFunction f = catalog_graph(s.surface, s.params);
      ConvexOptions opts;
      const ConvexCertificate c = convex_certificate(f, config, R, s.chi1, opts);
      v.q = c.form;
      v.family = c.family;
      v.chart = c.chart;
      v.grid = c.grid;
      v.support = c.r_out;
      v.negative = c.negative;
      v.detail = {{"R", R},
                  {"delta", c.delta},
                  {"delta_H", c.delta_H},
                  {"sigma", c.sigma},
                  {"r1", c.r1},
                  {"r_out", c.r_out},
                  {"cutoff_energy", measured(c.cutoff_energy, c.form.quadrature_error)},
                  {"C1", c.C1},
                  {"C2", c.C2},
                  {"C3", c.C3},
                  {"C4", c.C4},
                  {"C5", c.C5},
                  {"coarea", c.coarea},
                  {"coarea_bound", c.coarea_bound},
                  {"Q_value", measured(c.Q_value, c.form.quadrature_error)},
                  {"negative", c.negative}};
    } else {
      v.chart = catalog_chart(s.surface, s.params, R);
      const CapacityProfile cap = capacity_profile(v.chart, s.inner_radius, R);
      v.family = kind == FamilyKind::product ? product_family(v.chart, cap)
                                             : perturbed_family(v.chart, cap, s.j_radius);
      v.grid = QuadGrid::radial(v.chart, R, {1.0, s.inner_radius});
      v.q = evaluate_Q(v.family, v.chart, config, profile, v.grid);
      v.support = R;
      v.negative = form_negative(v.q);
      v.detail = {{"R", R},
                  {"capacity_energy", cap.energy},
                  {"description", v.family.description},
                  {"Q_min", measured(v.q.Q_min, v.q.quadrature_error)},
                  {"negative", v.negative}};
    }
    attempts.push_back(v.detail);
    csv += fmt(R) + "," + fmt(v.q.Q) + "," + fmt(v.q.Q_min) + "," + fmt(v.q.quadrature_error) + "," +
           (v.negative ? "1" : "0") + "\n";
    out = std::move(v);
    if (out.negative) break;
  }
  return out;
}

json geometry_json(const Scenario& s, const SurfaceChart& chart) {
  json samples = json::array();
  // graphs are sampled in cartesian coordinates so that the apex is a regular point
  const bool graph = chart.radial.has_value();
  const SurfaceChart probe = graph ? catalog_chart(s.surface, s.params, s.truncation, ChartLayout::cartesian) : chart;
  for (double r : {0.0, 0.5, 1.0, 2.0, 5.0, s.truncation}) {
    const double rr = graph ? std::min(r, s.truncation) : std::clamp(r, 0.5, chart.max_radius());
    Vec x = Vec::Zero(probe.n);
    if (graph) {
      x[0] = rr;
    } else {
      x[probe.radius_axis] = rr;
    }
    const ShapeData sd = shape_data(fundamental_forms(probe, x));
    json p;
    p["radius"] = rr;
    p["principal"] = std::vector<double>(sd.principal.data(), sd.principal.data() + sd.principal.size());
    p["H"] = measured(sd.H, 1e-8 * std::max(1.0, std::abs(sd.H)));
    p["normA"] = measured(sd.normA, 1e-8 * std::max(1.0, sd.normA));
    if (sd.K_gauss) p["K"] = measured(*sd.K_gauss, 1e-8 * std::max(1.0, std::abs(*sd.K_gauss)));
    samples.push_back(p);
  }
  const auto& info = catalog_info(s.surface);
  json j;
  j["id"] = s.surface;
  j["n"] = chart.n;
  j["euler_char"] = info.euler_char ? json(*info.euler_char) : json(nullptr);
  j["end_count"] = info.end_count;
  j["note"] = info.note;
  j["samples"] = samples;
  return j;
}

}  // namespace

RunResult run_scenario(const Scenario& s) {
  RunResult res;
  json& rep = res.report;
  rep["tool"] = {{"name", "qlayer"}, {"version", tool_version}, {"scenario_version", scenario_schema_version}};
  rep["scenario"] = scenario_json(s);
  json provenance;
  provenance["seeds"] = {{"eigensolver", s.seed}};
  try {
    const LayerConfig config(s.a, s.C0);
    const auto& info = catalog_info(s.surface);
    if (info.sup_normA && s.a * *info.sup_normA >= s.C0) {
      std::ostringstream os;
      os << "a * sup||A|| = " << s.a * *info.sup_normA << " >= C0 = " << s.C0 << " for '" << s.surface << "'";
      throw ValidityError(os.str());
    }
    const SurfaceChart chart = catalog_chart(s.surface, s.params, s.truncation);
    rep["geometry"] = geometry_json(s, chart);

    const ValidityReport vr = validity_scan(chart, config, SampleGrid::uniform(chart, 48));
    rep["validity"] = {{"sup_normA", measured(vr.sup_normA, 1e-8 * std::max(1.0, vr.sup_normA))},
                       {"sup_a_normA", vr.sup_a_normA},
                       {"margin", vr.margin},
                       {"C0", s.C0},
                       {"samples", vr.samples},
                       {"tail_exponent", vr.tail_exponent ? json(*vr.tail_exponent) : json(nullptr)}};

    // parabolicity
    {
      json par;
      const double T = s.parabolicity_T;
      const SurfaceChart big = catalog_chart(s.surface, s.params, T);
      std::vector<double> radii;
      for (int k = 0; k <= 60; ++k) radii.push_back(std::pow(T, k / 60.0));
      const VolumeGrowthCurve curve = volume_growth(big, radii);
      const ParabolicityResult pr = parabolicity_integral(curve, T);
      par["T"] = T;
      par["volume_exponent"] = curve.exponent;
      par["partial_integral"] = measured(pr.partial, 1e-6 * std::abs(pr.partial));
      par["verdict"] = to_string(pr.verdict);
      par["tail_exponent"] = pr.tail_exponent;
      std::string vcsv = "radius,volume\n";
      for (std::size_t k = 0; k < curve.radii.size(); ++k)
        vcsv += fmt(curve.radii[k]) + "," + fmt(curve.volumes[k]) + "\n";
      res.csv["volume.csv"] = vcsv;
      if (big.n == 2 && big.radial) {
        const SurfaceChart hchart = catalog_chart(s.surface, s.params, std::max(50.0, s.truncation));
        const HartmanReport h = hartman(hchart);
        par["hartman"] = {{"total_curvature", h.total_curvature},
                          {"euler_char", h.euler_char},
                          {"lambda_sum", h.lambda_sum},
                          {"residual", measured(h.residual, 0.02)},
                          {"tail_fraction", h.tail_fraction}};
        json caps = json::array();
        std::string ccsv = "R,capacity_energy,log_cutoff_energy\n";
        for (double R : {10.0, 100.0, 1000.0}) {
          if (R > T) break;
          const CapacityProfile cp = capacity_profile(big, 1.0, R);
          const double le = log_cutoff_energy(R);
          caps.push_back({{"R", R}, {"energy", cp.energy}, {"log_cutoff_energy", le}});
          ccsv += fmt(R) + "," + fmt(cp.energy) + "," + fmt(le) + "\n";
        }
        par["capacity"] = caps;
        res.csv["capacity.csv"] = ccsv;
      }
      rep["parabolicity"] = par;
    }

    // variational path
    const TransverseProfile profile(s.a, s.chi1);
    json forms;
    forms["kappa1_sq"] = config.kappa1_sq();
    forms["sigma"] = measured(profile.sigma(), 1e-10);
    forms["mu"] = profile.mu();
    json attempts = json::array();
    std::string lcsv;
    const Variational var = variational_path(s, config, profile, attempts, lcsv);
    res.csv["ladder.csv"] = lcsv;
    forms["family"] = to_string(var.kind);
    forms["attempts"] = attempts;
    forms["selected_R"] = var.R;
    forms["support_radius"] = var.support;
    forms["report"] = form_json(var.q);
    forms["negative"] = var.negative;
    // dual-path consistencies
    json dual;
    dual["q2_expansion"] = {{"difference", std::abs(var.q.Q2 - var.q.Q2_expansion)},
                            {"tolerance", var.q.q2_error},
                            {"pass", std::abs(var.q.Q2 - var.q.Q2_expansion) <= var.q.q2_error}};
    if (var.q.has_perturbation && !var.q.degenerate) {
      dual["cross_identity"] = {{"difference", std::abs(var.q.cross - var.q.cross_identity)},
                                {"tolerance", var.q.cross_error},
                                {"pass", std::abs(var.q.cross - var.q.cross_identity) <= var.q.cross_error}};
      const TrialFunction combined = var.family.combined(profile, var.q.epsilon_star);
      const PairEvaluation direct =
          evaluate_pair(combined, nullptr, nullptr, nullptr, var.chart, config, profile, var.grid.refined());
      const double diff = std::abs(direct.phi_phi.Q() - var.q.Q_min);
      const double tol = var.q.quadrature_error + 1e-10 * std::max(1.0, std::abs(var.q.Q_min));
      dual["quadratic_exactness"] = {{"direct", direct.phi_phi.Q()}, {"difference", diff}, {"tolerance", tol},
                                     {"pass", diff <= tol}};
    }
    forms["consistency"] = dual;
    rep["forms"] = forms;
    provenance["quadrature_errors"] = {{"Q", var.q.quadrature_error},
                                       {"Q2", var.q.q2_error},
                                       {"cross", var.q.cross_error}};

    // spectral path
    json spectral;
    bool granted = false;
    json cert;
    if (s.eigensolver) {
      std::vector<ThresholdPoint> thresholds;
      json th = json::array();
      for (double K : s.threshold_radii) {
        const ThresholdPoint tp = essential_threshold_point(chart, config, K);
        thresholds.push_back(tp);
        th.push_back({{"K_radius", K}, {"epsilon", tp.epsilon}, {"bound", measured(tp.bound, 1e-3 * tp.bound)}});
      }
      spectral["thresholds"] = th;

      SolverOptions opts;
      opts.count = s.eigen_count;
      opts.tol = s.eigen_tol;
      opts.max_iterations = s.max_iterations;
      opts.seed = s.seed;
      opts.preconditioner = s.preconditioner;
      struct Level {
        TensorMesh mesh;
        DiscretePair pair;
        EigenReport eig;
      };
      std::vector<Level> levels;
      std::string ecsv = "mesh,index,eigenvalue,residual,relative_residual\n";
      json runs = json::array();
      for (const MeshSpec& ms : {s.mesh_coarse, s.mesh_fine}) {
        Level lv;
        lv.mesh = TensorMesh::polar(s.truncation, ms.nr, ms.ntheta, ms.nu, s.a);
        lv.pair = assemble(chart, config, lv.mesh);
        lv.eig = solve_lowest(lv.pair, config.kappa1_sq(), opts);
        json ev = json::array();
        for (std::size_t k = 0; k < lv.eig.eigenvalues.size(); ++k) {
          ev.push_back(measured(lv.eig.eigenvalues[k], lv.eig.residuals[k]));
          ecsv += lv.mesh.label() + "," + std::to_string(k) + "," + fmt(lv.eig.eigenvalues[k]) + "," +
                  fmt(lv.eig.residuals[k]) + "," + fmt(lv.eig.relative_residuals[k]) + "\n";
        }
        const double disc = discrete_transverse_threshold(lv.mesh.u);
        runs.push_back({{"mesh", lv.mesh.label()},
                        {"dofs", lv.eig.dofs},
                        {"volume", measured(lv.pair.volume, 1e-10 * lv.pair.volume)},
                        {"eigenvalues", ev},
                        {"iterations", lv.eig.iterations},
                        {"tol", lv.eig.tol},
                        {"shift", lv.eig.shift},
                        {"discrete_threshold", disc},
                        {"gap", measured(lv.eig.gap, lv.eig.tol * std::abs(lv.eig.eigenvalues.front()))}});
        levels.push_back(std::move(lv));
      }
      res.csv["eigenvalues.csv"] = ecsv;
      spectral["runs"] = runs;
      const Level& fine = levels.back();
      const Level& coarse = levels.front();
      const double change =
          std::abs(fine.eig.eigenvalues.front() - coarse.eig.eigenvalues.front()) / config.kappa1_sq();
      const bool stable = change < 0.01;
      spectral["mesh_change"] = measured(change, 0.01);
      spectral["mesh_stable"] = stable;

      // Rayleigh quotient of the variational trial sampled on both meshes
      const bool comparable = var.support <= s.truncation && chart.layout == ChartLayout::polar;
      spectral["comparable"] = comparable;
      if (comparable) {
        const TrialFunction trial = var.family.combined(profile, var.q.epsilon_star);
        const double forms_value = (var.q.Q_min + config.kappa1_sq() * var.q.norm_min) / var.q.norm_min;
        const double rf = rayleigh(fine.pair, sample_trial(chart, fine.mesh, fine.pair, trial));
        const double rc = rayleigh(coarse.pair, sample_trial(chart, coarse.mesh, coarse.pair, trial));
        const double tol = var.q.quadrature_error / var.q.norm_min + 2.0 * std::abs(rf - rc);
        spectral["rayleigh"] = {{"sampled", measured(rf, tol)},
                                {"sampled_coarse", rc},
                                {"forms_value", measured(forms_value, var.q.quadrature_error / var.q.norm_min)},
                                {"pass", std::abs(rf - forms_value) < tol}};
      }

      const double disc_tol = discrete_transverse_threshold(fine.mesh.u) - config.kappa1_sq();
      const CertificateFindings f =
          bound_state_certificate(fine.eig, var.q, thresholds, config.kappa1_sq(), disc_tol, comparable);
      granted = f.granted && stable;
      cert = {{"granted", granted},
              {"variational_negative", f.variational_negative},
              {"spectral_gap", f.spectral_gap},
              {"threshold_trend", f.threshold_trend},
              {"mesh_stable", stable},
              {"comparable", f.comparable},
              {"summary", f.summary + (stable ? "" : ", mesh change above 1%")}};
    } else {
      cert = {{"granted", false},
              {"variational_negative", var.negative},
              {"spectral_gap", false},
              {"threshold_trend", false},
              {"mesh_stable", false},
              {"comparable", false},
              {"summary", "denied: spectral path disabled"}};
    }
    rep["spectral"] = spectral;
    rep["certificate"] = cert;
    rep["provenance"] = provenance;
    rep["status"] = granted ? "granted" : "denied";
    res.outcome = granted ? Outcome::granted : Outcome::denied;
  } catch (const Error& e) {
    rep["provenance"] = provenance;
    rep["status"] = "error";
    rep["error"] = {{"kind", e.kind()}, {"message", e.what()}};
    res.outcome = Outcome::error;
  }
  return res;
}

RunResult run_scenario_file(const std::filesystem::path& path) {
  try {
    return run_scenario(load_scenario(path));
  } catch (const Error& e) {
    RunResult res;
    res.report["tool"] = {{"name", "qlayer"}, {"version", tool_version}, {"scenario_version", scenario_schema_version}};
    res.report["status"] = "error";
    res.report["error"] = {{"kind", e.kind()}, {"message", e.what()}};
    res.outcome = Outcome::error;
    return res;
  }
}

std::string catalog_table() {
  std::ostringstream os;
  os << std::left << std::setw(16) << "id" << std::setw(4) << "n" << std::setw(7) << "euler" << std::setw(6)
     << "ends" << std::setw(12) << "sup|A|" << "note\n";
  for (const auto& e : catalog()) {
    os << std::setw(16) << e.id << std::setw(4) << e.n << std::setw(7)
       << (e.euler_char ? std::to_string(*e.euler_char) : "?") << std::setw(6) << e.end_count << std::setw(12)
       << (e.sup_normA ? fmt(*e.sup_normA) : "unknown") << e.note << "\n";
  }
  return os.str();
}

}  // namespace qlayer

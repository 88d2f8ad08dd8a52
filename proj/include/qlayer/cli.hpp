#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "qlayer/catalog.hpp"
#include "qlayer/eigensolver.hpp"
#include "qlayer/forms.hpp"

namespace qlayer {

inline constexpr const char* tool_version = "0.3.0";
inline constexpr int scenario_schema_version = 1;

// ---- config files -------------------------------------------------------------
//
// A TOML-style subset: [table] headers, key = value lines, # comments. Values
// are numbers, "strings", true/false or flat [arrays] of numbers.

using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;

struct ConfigEntry {
  ConfigValue value;
  int line = 0;
};

class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  double number(const std::string& key, std::optional<double> fallback = {}) const;
  int integer(const std::string& key, std::optional<int> fallback = {}) const;
  std::string string(const std::string& key, std::optional<std::string> fallback = {}) const;
  bool boolean(const std::string& key, std::optional<bool> fallback = {}) const;
  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = {}) const;
  // Keys ("table.key") that were never read; unknown keys are config errors.
  std::vector<std::string> unread() const;
  int line_of(const std::string& key) const;

 private:
  std::map<std::string, ConfigEntry> entries_;
  mutable std::map<std::string, bool> read_;
  const ConfigEntry& get(const std::string& key) const;
};

// ---- scenarios ------------------------------------------------------------------

enum class FamilyChoice { automatic, product, perturbed, convex };

struct MeshSpec {
  int nr = 0, ntheta = 0, nu = 0;
};

struct Scenario {
  std::string name;
  std::string surface;
  SurfaceParams params;
  double a = 0.4;
  double C0 = 0.9;
  double truncation = 12.0;
  MeshSpec mesh_fine{48, 32, 24};
  MeshSpec mesh_coarse{32, 24, 16};
  int eigen_count = 4;
  double eigen_tol = 1e-7;
  int max_iterations = 500;
  std::uint64_t seed = 20240601;
  Preconditioner preconditioner = Preconditioner::factorized;
  FamilyChoice family = FamilyChoice::automatic;
  std::vector<double> ladder;        // R ladder (empty: family default)
  Chi1Kind chi1 = Chi1Kind::sine;
  double inner_radius = 4.0;
  double j_radius = 1.0;
  std::vector<double> threshold_radii{2.0, 5.0, 10.0};
  double parabolicity_T = 1000.0;
  bool eigensolver = true;
};

Scenario parse_scenario(const ConfigFile& cfg);
Scenario load_scenario(const std::filesystem::path& path);

enum class Outcome { granted, denied, error };
int exit_code(Outcome outcome);

struct RunResult {
  Outcome outcome = Outcome::error;
  nlohmann::ordered_json report;
  // CSV dumps: file name -> contents
  std::map<std::string, std::string> csv;
};

// Executes the full pipeline. Errors are captured into the report.
RunResult run_scenario(const Scenario& scenario);
RunResult run_scenario_file(const std::filesystem::path& path);

// ---- catalog and reproductions -------------------------------------------------

std::string catalog_table();

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

const std::vector<std::string>& paper_example_ids();
std::vector<CheckResult> verify_example(const std::string& id);
nlohmann::ordered_json checks_to_json(const std::string& id, const std::vector<CheckResult>& checks);

}  // namespace qlayer

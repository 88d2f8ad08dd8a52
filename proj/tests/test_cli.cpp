#include <string>

#include "doctest.h"
#include "qlayer/cli.hpp"
#include "qlayer/errors.hpp"

using namespace qlayer;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario(ConfigFile::parse(text));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal = R"(version = 1
[surface]
id = "paraboloid"
[layer]
a = 0.4
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config values") {
  const ConfigFile c = ConfigFile::parse(
      "# comment\nversion = 1\n[mesh]\nfine = [48, 32, 24]  # trailing\nenabled = false\n[surface]\nid = \"plane\"\n");
  CHECK(c.integer("version") == 1);
  CHECK(c.numbers("mesh.fine") == std::vector<double>{48, 32, 24});
  CHECK_FALSE(c.boolean("mesh.enabled"));
  CHECK(c.string("surface.id") == "plane");
  CHECK(c.line_of("surface.id") == 7);
  CHECK(c.number("layer.a", 0.25) == 0.25);
  CHECK(c.unread().empty());
}

TEST_CASE("scenario defaults") {
  const Scenario s = parse_scenario(ConfigFile::parse(kMinimal));
  CHECK(s.surface == "paraboloid");
  CHECK(s.a == 0.4);
  CHECK(s.C0 == 0.9);
  CHECK(s.family == FamilyChoice::automatic);
  CHECK(s.chi1 == Chi1Kind::sine);
  CHECK(s.eigensolver);
}

TEST_CASE("config errors carry line numbers") {
  CHECK(error_of("version = 1\n[surface]\nid = \"torus\"\n[layer]\na = 0.4\n").find("line 3") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "[mesh]\nfine = [48, 32]\n").find("line 7") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "colour = \"red\"\n").find("unknown key 'layer.colour'") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "C0 = 1.5\n").find("line 6") != std::string::npos);
  CHECK(error_of("version = 2\n").find("line 1") != std::string::npos);
  CHECK(error_of("version = 1\n[surface\n").find("line 2: malformed table header") != std::string::npos);
  CHECK(error_of("version = 1\nname = \"x\n").find("line 2: unterminated string") != std::string::npos);
  CHECK(error_of("version = 1\nversion = 1\n").find("duplicate key") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "[family]\nkind = \"best\"\n").find("line 7") != std::string::npos);
  CHECK(error_of("[layer]\na = 0.4\n").find("missing required key 'version'") != std::string::npos);
  CHECK(error_of(std::string(kMinimal) + "a = 0.5\n").find("duplicate key 'layer.a'") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(exit_code(Outcome::granted) == 0);
  CHECK(exit_code(Outcome::denied) == 3);
  CHECK(exit_code(Outcome::error) == 1);
}

TEST_CASE("too deep a layer is rejected before any computation") {
  const RunResult r = run_scenario_file(std::string(QLAYER_SOURCE_DIR) + "/scenarios/too-deep.toml");
  CHECK(r.outcome == Outcome::error);
  CHECK(r.report["status"] == "error");
  CHECK(r.report["error"]["kind"] == "ValidityError");
}

TEST_CASE("missing scenario file") {
  const RunResult r = run_scenario_file("/nonexistent/scenario.toml");
  CHECK(r.outcome == Outcome::error);
  CHECK(r.report["error"]["kind"] == "ConfigError");
}

TEST_CASE("plane without the spectral path is denied") {
  Scenario s = parse_scenario(ConfigFile::parse("version = 1\n[surface]\nid = \"plane\"\n[layer]\na = 1.0\n"
                                                "[mesh]\nenabled = false\n[family]\nkind = \"product\"\n"
                                                "ladder = [10, 100]\n"));
  const RunResult r = run_scenario(s);
  CHECK(r.outcome == Outcome::denied);
  CHECK(r.report["forms"]["negative"] == false);
  CHECK(r.report["forms"]["report"]["Q"]["value"].get<double>() >= 0.0);
  CHECK(r.report["parabolicity"]["verdict"] == "parabolic-consistent");
  CHECK(r.csv.count("ladder.csv") == 1);
  CHECK(r.csv.count("volume.csv") == 1);
}

TEST_CASE("catalog table") {
  const std::string t = catalog_table();
  auto row = [&](const std::string& id) {
    const auto p = t.find(id);
    REQUIRE(p != std::string::npos);
    return t.substr(p, t.find('\n', p) - p);
  };
  CHECK(row("s1xr2-logtube").find(" 3 ") != std::string::npos);
  CHECK(catalog_info("s1xr2-logtube").n == 3);
  CHECK(catalog_info("paraboloid").euler_char == 1);
  CHECK(row("gaussian-bump").find("int K = 0") != std::string::npos);
  CHECK(catalog_info("gaussian-bump").note.find("equality case") != std::string::npos);
}

TEST_CASE("reproductions") {
  for (const char* id : {"lemma51", "corollary15", "example41", "hartman"}) {
    CAPTURE(id);
    const auto checks = verify_example(id);
    REQUIRE_FALSE(checks.empty());
    for (const auto& c : checks) {
      CAPTURE(c.name);
      CAPTURE(c.detail);
      CHECK(c.pass);
    }
    CHECK(checks_to_json(id, checks)["pass"] == true);
  }
  CHECK(paper_example_ids().size() == 5);
  CHECK_THROWS_AS(verify_example("lemma99"), ConfigError);
}

}

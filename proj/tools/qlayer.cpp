#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "qlayer/cli.hpp"
#include "qlayer/errors.hpp"
#include "qlayer/parallel.hpp"

namespace fs = std::filesystem;

namespace {

int threads_from_env() {
  const char* env = std::getenv("QLAYER_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024) {
    std::cerr << "qlayer: ignoring invalid QLAYER_THREADS='" << env << "'\n";
    return 1;
  }
  return static_cast<int>(v);
}

bool write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qlayer: bound states of quantum layers"};
  app.require_subcommand(1);

  std::string scenario, out_path, csv_dir;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run a scenario and write a JSON report");
  run->add_option("--scenario", scenario, "Scenario config file")->required();
  run->add_option("--out", out_path, "Report path (JSON)")->required();
  run->add_option("--csv", csv_dir, "Directory for CSV curve dumps");
  run->add_option("--threads", threads, "Worker threads (default: QLAYER_THREADS or 1)")->check(CLI::Range(1, 1024));

  app.add_subcommand("catalog", "List catalog surfaces");

  std::string example;
  auto* verify = app.add_subcommand("verify", "Reproduce a closed-form example");
  verify->add_option("example", example, "Example id")->required()->check(CLI::IsMember(qlayer::paper_example_ids()));

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("catalog")) {
    std::cout << qlayer::catalog_table();
    return 0;
  }

  if (app.got_subcommand("verify")) {
    const auto checks = qlayer::verify_example(example);
    bool all = true;
    for (const auto& c : checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      all = all && c.pass;
    }
    return all ? 0 : 1;
  }

  qlayer::set_thread_count(threads > 0 ? threads : threads_from_env());
  const qlayer::RunResult res = qlayer::run_scenario_file(scenario);
  if (!write_file(out_path, res.report.dump(2) + "\n")) {
    std::cerr << "qlayer: cannot write report '" << out_path << "'\n";
    return 1;
  }
  if (!csv_dir.empty()) {
    std::error_code ec;
    fs::create_directories(csv_dir, ec);
    for (const auto& [name, text] : res.csv) {
      if (!write_file(fs::path(csv_dir) / name, text)) {
        std::cerr << "qlayer: cannot write '" << (fs::path(csv_dir) / name).string() << "'\n";
        return 1;
      }
    }
  }
  const auto& rep = res.report;
  if (rep.contains("error")) {
    std::cerr << "qlayer: " << rep["error"]["message"].get<std::string>() << "\n";
  } else {
    std::cout << rep["certificate"]["summary"].get<std::string>() << "\n";
  }
  return qlayer::exit_code(res.outcome);
}

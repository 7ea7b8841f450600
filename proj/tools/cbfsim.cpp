#include <algorithm>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cbf/scenario.hpp"
#include "cbf/selftest.hpp"
#include "cbf/trajectory_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitConfigError = 2;

struct RunOutcome {
  int exit_code = kExitOk;
  std::string report;
};

RunOutcome run_scenario(const std::string& path, const std::optional<std::string>& out_dir,
                        std::optional<std::uint64_t> seed_override, bool quiet) {
  RunOutcome outcome;
  try {
    cbf::Scenario scenario = cbf::load_scenario(path);
    if (seed_override) scenario.config.seed = *seed_override;
    const cbf::TrajectoryLog log = cbf::run(scenario.config);
    const cbf::SummaryMetrics m = cbf::metrics(log, scenario.config);

    if (out_dir) {
      fs::create_directories(*out_dir);
      const fs::path base(*out_dir);
      cbf::write_file((base / "trajectory.csv").string(), cbf::trajectory_csv(log));
      cbf::write_file((base / "summary.txt").string(), cbf::summary_text(scenario, log, m));
      if (!quiet)
        outcome.report += "wrote " + (base / "trajectory.csv").string() + ", " +
                          (base / "summary.txt").string() + "\n";
    }
    outcome.report += cbf::report_text(scenario, m);
    outcome.exit_code = m.all_passed() ? kExitOk : kExitPropertyFailure;
  } catch (const cbf::ParseError& e) {
    outcome.report = std::string(e.what()) + "\n";
    outcome.exit_code = kExitConfigError;
  } catch (const cbf::ConfigError& e) {
    outcome.report = std::string(e.what()) + "\n";
    outcome.exit_code = kExitConfigError;
  }
  return outcome;
}

std::string validity_text(const cbf::ValidityReport& r) {
  std::ostringstream out;
  out << "samples_requested " << r.requested << "\n";
  out << "samples_evaluated " << r.evaluated << "\n";
  out << "samples_skipped " << r.skipped << "\n";
  out << "feasible_fraction " << cbf::fmt9(r.feasible_fraction) << "\n";
  out << "worst_margin " << cbf::fmt9(r.worst_margin) << "\n";
  out << "set_likely_empty " << (r.set_likely_empty ? 1 : 0) << "\n";
  for (size_t k = 0; k < r.counterexamples.size(); ++k) {
    const auto& ce = r.counterexamples[k];
    out << "counterexample_" << k << "_margin " << cbf::fmt9(ce.margin) << "\n";
    out << "counterexample_" << k << "_state";
    for (int i = 0; i < ce.state.count(); ++i)
      out << ' ' << cbf::fmt9(ce.state.p(i, 0)) << ' ' << cbf::fmt9(ce.state.p(i, 1)) << ' '
          << cbf::fmt9(ce.state.v(i, 0)) << ' ' << cbf::fmt9(ce.state.v(i, 1));
    out << "\n";
  }
  out << "validity " << (r.passed() ? "pass" : "fail") << "\n";
  return out.str();
}

int check_scenario(const std::string& path, int samples,
                   const std::optional<std::string>& out_dir,
                   std::optional<std::uint64_t> seed_override, bool quiet) {
  try {
    cbf::Scenario scenario = cbf::load_scenario(path);
    const cbf::SimConfig& cfg = scenario.config;
    const auto tree = cbf::build_certificate(cfg.params, cfg.certificate);
    if (!tree) {
      std::cerr << "check: scenario '" << scenario.name << "' has no certificate\n";
      return kExitConfigError;
    }

    const auto [lo, hi] = cbf::scenario_arena(cfg);
    const std::uint64_t seed = seed_override.value_or(cfg.seed);
    const auto sampler = cbf::make_arena_sampler(cfg.params, *tree, lo, hi);
    const cbf::ValidityReport report =
        cbf::check_validity(*tree, cfg.params, cfg.alpha, sampler, samples, seed);

    const std::string text = validity_text(report);
    if (!quiet) std::cout << "scenario " << scenario.name << "\n" << text;
    if (out_dir) {
      fs::create_directories(*out_dir);
      cbf::write_file((fs::path(*out_dir) / "validity.txt").string(), text);
    }
    return report.passed() ? kExitOk : kExitPropertyFailure;
  } catch (const cbf::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const cbf::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  } catch (const cbf::InputError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional barrier-certificate simulator for planar robot teams"};
  app.require_subcommand(1);
  app.fallthrough();  // let --quiet appear after the subcommand as well

  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress informational output");

  std::string scenario_path, out_dir;
  int samples = 1000;
  std::uint64_t seed{0};
  bool seed_set = false;

  auto* run_cmd = app.add_subcommand("run", "simulate a scenario and report its properties");
  run_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  run_cmd->add_option("--out", out_dir, "output directory for trajectory.csv and summary.txt");
  run_cmd->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* check_cmd =
      app.add_subcommand("check", "audit certificate validity on sampled in-set states");
  check_cmd->add_option("scenario", scenario_path, "scenario file")->required();
  check_cmd->add_option("--samples", samples, "number of in-set samples");
  check_cmd->add_option("--out", out_dir, "output directory for validity.txt");
  check_cmd->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* selftest_cmd =
      app.add_subcommand("selftest", "run the built-in numerical audit suites");
  selftest_cmd->add_option("--seed", seed, "suite RNG seed")
      ->each([&](const std::string&) { seed_set = true; });

  auto* sweep_cmd = app.add_subcommand("sweep", "run every scenario in a directory");
  sweep_cmd->add_option("scenarios", scenario_path, "directory of scenario files")->required();
  sweep_cmd->add_option("--out", out_dir, "output root; one subdirectory per scenario");

  CLI11_PARSE(app, argc, argv);

  std::optional<std::string> out;
  if (!out_dir.empty()) out = out_dir;
  std::optional<std::uint64_t> seed_opt;
  if (seed_set) seed_opt = seed;

  if (run_cmd->parsed()) {
    const RunOutcome outcome = run_scenario(scenario_path, out, seed_opt, quiet);
    std::cout << outcome.report;
    return outcome.exit_code;
  }

  if (check_cmd->parsed()) return check_scenario(scenario_path, samples, out, seed_opt, quiet);

  if (selftest_cmd->parsed()) {
    const auto results = cbf::run_selftest(seed_set ? seed : 0x5eed5eedULL);
    std::cout << cbf::selftest_table(results);
    const bool ok = std::all_of(results.begin(), results.end(),
                                [](const cbf::SelftestResult& r) { return r.passed; });
    return ok ? kExitOk : kExitPropertyFailure;
  }

  if (sweep_cmd->parsed()) {
    std::vector<fs::path> files;
    try {
      for (const auto& entry : fs::directory_iterator(scenario_path))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
          files.push_back(entry.path());
    } catch (const fs::filesystem_error& e) {
      std::cerr << e.what() << "\n";
      return kExitConfigError;
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::cerr << "sweep: no .json scenarios in '" << scenario_path << "'\n";
      return kExitConfigError;
    }

    std::vector<RunOutcome> outcomes(files.size());
    std::mutex next_mutex;
    size_t next = 0;
    const size_t workers =
        std::min(files.size(), static_cast<size_t>(std::max(1u, std::thread::hardware_concurrency())));
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          size_t idx;
          {
            std::lock_guard<std::mutex> lock(next_mutex);
            if (next >= files.size()) return;
            idx = next++;
          }
          std::optional<std::string> sub;
          if (out) sub = (fs::path(*out) / files[idx].stem()).string();
          outcomes[idx] = run_scenario(files[idx].string(), sub, std::nullopt, quiet);
        }
      });
    }
    for (auto& t : pool) t.join();

    int exit_code = kExitOk;
    for (const auto& o : outcomes) {
      std::cout << o.report;
      exit_code = std::max(exit_code, o.exit_code);
    }
    return exit_code;
  }

  return kExitConfigError;
}

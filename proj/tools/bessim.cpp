// bessim: headless runs, parameter sweeps, live control service.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "bessim/errors.hpp"
#include "bessim/runner.hpp"
#include "bessim/scenario.hpp"
#include "bessim/service.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

std::vector<double> to_doubles(const std::string& text) {
  std::vector<double> out;
  for (const auto& v : bessim::parse_value_list(text)) out.push_back(v.get<double>());
  return out;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cloud-controlled BESS frequency-control simulator with attack injection"};
  app.require_subcommand(1);

  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run a scenario headless and write telemetry.csv and report.json");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--out", out_dir, "Output directory (default: outputs.dir)");

  std::string param;
  std::string values;
  unsigned jobs = 0;
  auto* sw = app.add_subcommand("sweep", "Run one scenario per parameter value and print a summary table");
  sw->add_option("--scenario", scenario, "Scenario file")->required();
  sw->add_option("--param", param, "Dotted path of a scalar field, e.g. links.s2c.drop.drop_rate")->required();
  sw->add_option("--values", values, "Comma list or start:stop:step")->required();
  sw->add_option("--seed", seed, "Override the scenario seed");
  sw->add_option("--out", out_dir, "Also write summary.csv here");
  sw->add_option("-j,--jobs", jobs, "Parallel runs (default: hardware threads)");

  int port = 8080;
  std::string bind = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Serve the HTTP/WebSocket control API; the engine starts paused");
  serve->add_option("--scenario", scenario, "Scenario file")->required();
  serve->add_option("--port", port, "TCP port (0 picks a free one)");
  serve->add_option("--bind", bind, "Listen address");
  serve->add_option("--seed", seed, "Override the scenario seed");

  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario");
  validate->add_option("--scenario", scenario, "Scenario file")->required();

  std::string kp_list = "0.5:4:0.4";
  std::string ki_list = "0.25:3:0.25";
  double constraint_s = 1200.0;
  auto* cal = app.add_subcommand("calibrate", "Grid-search PID gains on the attack-free scenario");
  cal->add_option("--scenario", scenario, "Baseline scenario file")->required();
  cal->add_option("--kp", kp_list, "kp values");
  cal->add_option("--ki", ki_list, "ki values");
  cal->add_option("--constraint-duration", constraint_s, "Length of the delay/drop constraint runs in seconds");
  cal->add_option("-j,--jobs", jobs, "Parallel runs");

  CLI11_PARSE(app, argc, argv);

  try {
    bessim::ScenarioConfig cfg = bessim::parse_scenario_file(scenario);
    if (seed) cfg.seed = *seed;

    if (*validate) {
      (void)bessim::build_consumption(cfg);
      std::cout << "ok " << scenario << " (hash " << bessim::scenario_hash(cfg) << ")\n";
      return kExitOk;
    }

    if (*run) {
      bessim::HeadlessOptions opts;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      opts.keep_telemetry = false;
      const auto result = bessim::run_headless(cfg, opts);
      std::cout << bessim::report_to_json(result.report).dump(2) << '\n';
      std::cerr << "wrote " << result.telemetry_path.string() << " and " << result.report_path.string() << '\n';
      return kExitOk;
    }

    if (*sw) {
      const auto rows = bessim::sweep(cfg, param, bessim::parse_value_list(values), jobs);
      bessim::write_sweep_table(std::cout, rows);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream f(std::filesystem::path(out_dir) / "summary.csv");
        if (!f) throw bessim::RuntimeError("cannot write summary.csv in " + out_dir);
        bessim::write_sweep_table(f, rows);
      }
      return kExitOk;
    }

    if (*cal) {
      const auto grid = bessim::calibrate(cfg, to_doubles(kp_list), to_doubles(ki_list), constraint_s, jobs);
      std::cout << "kp,ki,itae,baseline_in_band,delay_oscillates,drop_contained,feasible\n";
      for (const auto& c : grid) {
        std::cout << c.kp << ',' << c.ki << ',' << c.itae << ',' << c.baseline_in_band << ',' << c.delay_oscillates
                  << ',' << c.drop_contained << ',' << c.feasible() << '\n';
      }
      if (auto best = bessim::best_candidate(grid)) {
        std::cerr << "best: kp=" << best->kp << " ki=" << best->ki << " itae=" << best->itae << '\n';
      } else {
        std::cerr << "no feasible candidate\n";
      }
      return kExitOk;
    }

    if (*serve) {
      bessim::ServiceOptions opts;
      opts.bind_address = bind;
      opts.port = static_cast<unsigned short>(port);
      bessim::ControlService service(cfg, opts);
      const auto bound = service.start();
      std::cout << "listening on http://" << bind << ':' << bound << " (engine paused)" << std::endl;
      service.wait();
      return kExitOk;
    }
  } catch (const bessim::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

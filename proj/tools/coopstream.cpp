// Command-line front end: run, sweep, bound, validate-traces.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "coopstream/harness.hpp"
#include "coopstream/sim.hpp"
#include "coopstream/slotted.hpp"

using namespace coopstream;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::vector<std::string> split_values(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  for (char ch : v) {
    if (ch == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (ch != ' ') {
      item += ch;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

void write_outputs(const std::string& dir, const std::vector<ExperimentReport>& reports) {
  std::filesystem::create_directories(dir);
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : reports) all.push_back(to_json(r));
  std::ofstream js(std::filesystem::path(dir) / "report.json");
  js << (reports.size() == 1 ? all.front() : all).dump(2) << '\n';
  std::ofstream csv(std::filesystem::path(dir) / "summary.csv");
  write_summary_csv(csv, reports);
  if (!js || !csv) throw std::runtime_error("cannot write outputs under " + dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative multi-user ABR streaming simulator"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-config", print_defaults, "Print every config key with its default");

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  auto* run_cmd = app.add_subcommand("run", "Run one scenario");
  run_cmd->add_option("--config", config_path, "Config file")->required();
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Override the base seed");
  run_cmd->add_option("--out", out_dir, "Output directory");

  std::string axis;
  std::string values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a scenario across values of one key");
  sweep_cmd->add_option("--config", config_path, "Config file")->required();
  sweep_cmd->add_option("--axis", axis, "Config key to vary")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory");

  int refine = 2;
  auto* bound_cmd = app.add_subcommand("bound", "Slotted welfare bound on the micro instance");
  bound_cmd->add_option("--config", config_path, "Config file")->required();
  bound_cmd->add_option("--refine", refine, "Number of segment-length halvings")
      ->check(CLI::NonNegativeNumber);
  bound_cmd->add_option("--out", out_dir, "Output directory");

  std::string cap_csv;
  std::string mob_csv;
  auto* validate_cmd = app.add_subcommand("validate-traces", "Check capacity and mobility CSVs");
  validate_cmd->add_option("capacity", cap_csv, "Capacity CSV")->required();
  validate_cmd->add_option("mobility", mob_csv, "Mobility CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (print_defaults) {
      print_config(std::cout, ScenarioConfig{});
      return 0;
    }
    if (*validate_cmd) {
      const auto cap = read_capacity_csv_file(cap_csv);
      const auto mob = read_mobility_csv_file(mob_csv);
      if (cap.users() != mob.users()) throw ModelError("user counts differ");
      if (std::abs(cap.horizon() - mob.horizon()) > kTimeEps) throw ModelError("horizons differ");
      std::cout << "ok: " << cap.users() << " users, horizon " << format_double(cap.horizon())
                << " s\n";
      return 0;
    }
    if (*run_cmd) {
      ScenarioConfig cfg = parse_config_file(config_path);
      if (seed_opt->count() > 0) cfg.seed = seed;
      std::filesystem::create_directories(out_dir);
      write_outputs(out_dir, {run_experiment(cfg, out_dir)});
      return 0;
    }
    if (*sweep_cmd) {
      const ScenarioConfig cfg = parse_config_file(config_path);
      std::filesystem::create_directories(out_dir);
      write_outputs(out_dir, sweep(cfg, axis, split_values(values), out_dir));
      return 0;
    }
    if (*bound_cmd) {
      const ScenarioConfig cfg = parse_config_file(config_path);
      const Scenario sc = make_scenario(cfg, cfg.seed);
      const auto micro = micro_instance(cfg, sc);
      if (!micro) throw ConfigError("micro instance has no video user");
      const auto inst = SlottedInstance::from_traces(micro->traces, micro->profiles,
                                                     micro->force_noncoop);
      const SolverLimits limits{cfg.bound_node_budget};
      const auto region = bound_region(inst, refine, limits);
      const auto best = solve_slotted(inst.refined(refine), limits);
      std::filesystem::create_directories(out_dir);
      std::ofstream js(std::filesystem::path(out_dir) / "bound.json");
      js << to_json(region).dump(2) << '\n';
      std::ofstream plan(std::filesystem::path(out_dir) / "plan.csv");
      write_plan_csv(plan, best.plan);
      std::cout << "micro-instance bound: lower " << region.lower << ", upper estimate "
                << region.upper << (region.exact ? "" : " (inexact)") << '\n';
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ModelError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

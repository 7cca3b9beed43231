#pragma once
// `ftckit simulate` — run a scenario file through the rigid-body sim.

#include <CLI11.hpp>

#include <stdexcept>
#include <string>

namespace ftc::cli {

struct SimulateArgs {
  std::string scenario_path;
};

inline void register_simulate(CLI::App& app, SimulateArgs& a) {
  auto* cmd = app.add_subcommand("simulate", "run a scenario and write tick log + summary");
  cmd->add_option("scenario", a.scenario_path, "scenario JSON")->required();
}

int run_simulate(const SimulateArgs& a);

}  // namespace ftc::cli

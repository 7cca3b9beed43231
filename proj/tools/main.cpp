// ftckit command line front end. Subcommands are implemented in cmd_*.hpp
// next to this file; each returns a process exit code (0 ok, 1 runtime
// failure, 2 usage error).

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "cmd_avcs.hpp"
#include "cmd_calibrate.hpp"
#include "cmd_simulate.hpp"
#include "cmd_sysid.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fault-tolerant multirotor control toolkit"};
  app.require_subcommand(1);

  ftc::cli::AvcsArgs avcs_args;
  ftc::cli::register_avcs(app, avcs_args);
  ftc::cli::SimulateArgs sim_args;
  ftc::cli::register_simulate(app, sim_args);
  ftc::cli::SysidArgs sysid_args;
  ftc::cli::register_sysid(app, sysid_args);
  ftc::cli::CalibrateArgs cal_args;
  ftc::cli::register_calibrate(app, cal_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("avcs")) return ftc::cli::run_avcs(avcs_args);
    if (app.got_subcommand("simulate")) return ftc::cli::run_simulate(sim_args);
    if (app.got_subcommand("sysid")) return ftc::cli::run_sysid(sysid_args);
    if (app.got_subcommand("calibrate")) return ftc::cli::run_calibrate(cal_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}

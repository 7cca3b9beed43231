#pragma once
// `ftckit sysid` — fit the scaled effectiveness coefficients from a log.

#include <CLI11.hpp>

#include <string>

namespace ftc::cli {

struct SysidArgs {
  std::string log_path;
  double cutoff_hz = 25.0;
  double lambda = 1.0;
  std::string warm_start_path;
  std::string out_path = "sysid_model.json";
};

inline void register_sysid(CLI::App& app, SysidArgs& a) {
  auto* cmd = app.add_subcommand("sysid", "identify effectiveness coefficients from a flight log");
  cmd->add_option("log", a.log_path, "flight log CSV")->required();
  cmd->add_option("--cutoff", a.cutoff_hz, "low-pass cutoff, Hz");
  cmd->add_option("--lambda", a.lambda, "RLS forgetting factor");
  cmd->add_option("--warm-start", a.warm_start_path, "model JSON to warm-start from");
  cmd->add_option("--out", a.out_path, "output model JSON path");
}

int run_sysid(const SysidArgs& a);

}  // namespace ftc::cli

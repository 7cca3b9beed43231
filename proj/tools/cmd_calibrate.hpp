#pragma once
// `ftckit calibrate` — IMU lever-arm estimation from a spin log.

#include <CLI11.hpp>

#include <string>

namespace ftc::cli {

struct CalibrateArgs {
  std::string spin_log_path;
  std::string out_path = "calibration.json";
  std::string tilt_csv_path = "tilt_before_after.csv";
};

inline void register_calibrate(CLI::App& app, CalibrateArgs& a) {
  auto* cmd = app.add_subcommand("calibrate", "estimate IMU lever arm from a spin log");
  cmd->add_option("spin_log", a.spin_log_path, "spin log CSV")->required();
  cmd->add_option("--out", a.out_path, "output calibration JSON path");
  cmd->add_option("--tilt-csv", a.tilt_csv_path, "before/after tilt-angle CSV path");
}

int run_calibrate(const CalibrateArgs& a);

}  // namespace ftc::cli

#pragma once
// `ftckit avcs` — attainable-set geometry and controllability reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ftckit/avcs.hpp"
#include "ftckit/csv.hpp"
#include "ftckit/vehicle.hpp"

namespace ftc::cli {

struct AvcsArgs {
  std::string vehicle_path;
  std::vector<int> fail;
  double thrust_frac = 0.5;
  double yaw_fraction = 0.10;
  std::string out_dir = "avcs_out";
};

inline void register_avcs(CLI::App& app, AvcsArgs& a) {
  auto* cmd = app.add_subcommand("avcs", "attainable control set and controllability report");
  cmd->add_option("vehicle", a.vehicle_path, "vehicle JSON")->required();
  cmd->add_option("--fail", a.fail, "rotor indices to analyze as failed (one case each)");
  cmd->add_option("--thrust", a.thrust_frac, "hover thrust as a fraction of max total thrust");
  cmd->add_option("--yaw-fraction", a.yaw_fraction, "yaw budget probe fraction");
  cmd->add_option("--out", a.out_dir, "output directory");
}

namespace detail_cli {

inline void write_vertices_csv(const std::string& path, const ControlSet& set) {
  CsvTable t;
  t.columns = set.dims;
  for (int i = 0; i < set.vertices.rows(); ++i) {
    std::vector<double> row(set.vertices.cols());
    for (int j = 0; j < set.vertices.cols(); ++j) row[j] = set.vertices(i, j);
    t.rows.push_back(row);
  }
  write_csv(path, t);
}

inline void write_polygon_csv(const std::string& path, const std::vector<Eigen::Vector2d>& poly) {
  CsvTable t;
  t.columns = {"m_roll", "m_pitch"};
  for (const auto& p : poly) t.rows.push_back({p[0], p[1]});
  write_csv(path, t);
}

}  // namespace detail_cli

inline int run_avcs(const AvcsArgs& a) {
  VehicleConfig veh = VehicleConfig::load(a.vehicle_path);
  EffectivenessModel nominal = build_effectiveness(veh);

  double fz_max = 0.0;
  for (int i = 0; i < nominal.n(); ++i) fz_max += nominal.G(3, i) * nominal.u_hi[i];
  const double hover_thrust = a.thrust_frac * fz_max;

  std::filesystem::create_directories(a.out_dir);
  nlohmann::json report;
  report["vehicle"] = a.vehicle_path;
  report["hover_thrust"] = hover_thrust;
  report["thrust_fraction"] = a.thrust_frac;
  report["yaw_fraction_probe"] = a.yaw_fraction;
  report["cases"] = nlohmann::json::array();

  auto analyze = [&](const EffectivenessModel& model, const std::string& tag,
                     const std::vector<int>& failed) {
    ControlSet set = build_avcs(model);
    detail_cli::write_vertices_csv(a.out_dir + "/avcs_" + tag + "_vertices.csv", set);
    std::vector<Eigen::Vector2d> poly;
    if (ftc::detail::tilt_polygon(model.G, model.u_lo, model.u_hi, hover_thrust, 0.0, poly))
      detail_cli::write_polygon_csv(a.out_dir + "/slice_zero_yaw_" + tag + ".csv", poly);
    if (ftc::detail::tilt_polygon(model.G, model.u_lo, model.u_hi, hover_thrust,
                                  ftc::detail::kInf, poly))
      detail_cli::write_polygon_csv(a.out_dir + "/slice_free_yaw_" + tag + ".csv", poly);

    ControllabilityVerdict v = classify(model, hover_thrust, a.yaw_fraction);
    nlohmann::json c;
    c["tag"] = tag;
    c["failed_rotors"] = failed;
    c["case_id"] = v.case_id;
    c["tilt_margin_at_zero_yaw"] = v.tilt_margin_at_zero_yaw;
    c["tilt_margin_with_free_yaw"] = v.tilt_margin_with_free_yaw;
    c["tilt_margin_at_probe"] = v.tilt_margin_at_probe;
    c["required_yaw_fraction"] = v.required_yaw_fraction;
    c["yaw_uncontrollable"] = model.yaw_uncontrollable;
    c["volume"] = zonotope_volume(set);
    report["cases"].push_back(c);
    std::printf("%-12s case %d  margin(yaw=0) %.6g  margin(yaw free) %.6g  req yaw frac %.4f\n",
                tag.c_str(), v.case_id, v.tilt_margin_at_zero_yaw, v.tilt_margin_with_free_yaw,
                v.required_yaw_fraction);
  };

  analyze(nominal, "nominal", {});
  for (int idx : a.fail) {
    EffectivenessModel failed = apply_failure(nominal, idx);
    analyze(failed, "fail" + std::to_string(idx), {idx});
  }

  std::ofstream out(a.out_dir + "/classification.json");
  out << report.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed to write " + a.out_dir + "/classification.json");
  return 0;
}

}  // namespace ftc::cli

#pragma once
// Closed-loop scenario runner. Wires the rigid-body plant, IMU model and
// complementary filter to the reduced-attitude controller and command
// shaping, executes a failure schedule and a time-stamped stick trace, and
// produces a tick-level CSV log plus summary statistics. Runs are
// deterministic: the same scenario and seed give byte-identical logs.

#include <json.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftckit/allocation.hpp"
#include "ftckit/attitude.hpp"
#include "ftckit/csv.hpp"
#include "ftckit/sim.hpp"
#include "ftckit/vehicle.hpp"

namespace ftc {

struct ControllerConfig {
  RateGains gains;
  double yaw_rate_gain = 2.0;  // damps yaw rate toward zero while yaw is controllable
  double h3_min = 0.2;
  double max_tilt_rad = 0.35;  // stick deflection 1.0 maps to this tilt
  double stick_tau_s = 0.15;
};

// One control-rate pass: stick -> filtered direction -> tilt controller ->
// rate loop -> demand -> shaped actuator command. Stateless apart from the
// direction filter.
class FlightController {
 public:
  explicit FlightController(const ControllerConfig& cfg)
      : cfg_(cfg), dir_filter_(cfg.stick_tau_s) {
    cfg_.gains.validate();
    if (!(cfg.yaw_rate_gain >= 0.0) || !(cfg.max_tilt_rad >= 0.0 && cfg.max_tilt_rad < 1.5))
      throw std::invalid_argument("flight controller: bad config");
  }

  struct Output {
    Eigen::VectorXd u_cmd;
    Eigen::Vector4d demand = Eigen::Vector4d::Zero();
    Eigen::Vector3d n_des = Eigen::Vector3d(0, 0, -1);
    TiltCommand tilt;
    double tilt_scale = 1.0;
    bool saturated = false;
  };

  Output step(const EffectivenessModel& model, const Eigen::Matrix3d& dcm_inertial_from_body,
              const Eigen::Vector3d& omega, const Eigen::Vector2d& stick_roll_pitch, double dt) {
    const Eigen::Matrix3d& R = dcm_inertial_from_body;
    Output out;
    const Eigen::Vector3d target =
        stick_to_direction(stick_roll_pitch[0], stick_roll_pitch[1], cfg_.max_tilt_rad);
    Eigen::Vector3d n_des, n_des_dot;
    dir_filter_.step(target, dt, &n_des, &n_des_dot);
    out.n_des = n_des;

    const auto state = reduced_attitude_state(R.transpose(), n_des, omega.z());
    out.tilt = tilt_controller(state, cfg_.gains, n_des_dot, cfg_.h3_min);
    const Eigen::Vector2d pq_dot =
        rate_controller(omega.x(), omega.y(), out.tilt.p_des, out.tilt.q_des, 0.0, 0.0, cfg_.gains);
    const double r_dot = cfg_.yaw_rate_gain * (0.0 - omega.z());
    // Vertical-thrust compensation: hold 1 g of lift up to moderate tilt.
    const double az = kGravity / std::max(R(2, 2), 0.5);
    out.demand = Eigen::Vector4d(pq_dot[0], pq_dot[1], r_dot, az);

    const ShapedCommand shaped = shape_command(model, out.demand);
    out.u_cmd = shaped.u;
    out.tilt_scale = shaped.tilt_scale;
    out.saturated = shaped.saturated;
    return out;
  }

  void reset_direction(const Eigen::Vector3d& n) { dir_filter_ = DirectionFilter(cfg_.stick_tau_s, n); }

 private:
  ControllerConfig cfg_;
  DirectionFilter dir_filter_;
};

struct FailureEvent {
  double time_s = 0.0;
  int rotor = 0;
  double detection_delay_s = 0.0;  // controller keeps the healthy model this long
};

struct StickSample {
  double t = 0.0;
  double roll = 0.0, pitch = 0.0;  // deflections in [-1, 1]
};

struct ScenarioSpec {
  VehicleConfig vehicle;
  ControllerConfig controller;
  ImuModel imu;
  EstimatorConfig estimator;
  std::vector<FailureEvent> failures;
  std::vector<StickSample> stick;  // piecewise-linear, held outside the sampled range

  double duration_s = 10.0;
  double physics_dt = 1e-3;
  int control_divisor = 2;  // control runs every N physics steps
  double tau_m = 0.03;
  std::uint64_t seed = 0;
  bool control_uses_estimate = false;  // false: controller sees true state

  double initial_tilt_rad = 0.0;
  Eigen::Vector3d initial_tilt_axis = Eigen::Vector3d(1, 0, 0);
  Eigen::Vector3d initial_omega = Eigen::Vector3d::Zero();
  Eigen::Vector3d initial_velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d initial_position = Eigen::Vector3d::Zero();
  Eigen::VectorXd initial_rotor_speed;  // empty: hover trim

  double omega_guard_rad_s = 500.0;  // exceeding either guard counts as divergence
  double position_guard_m = 2000.0;

  void validate() const;
  static ScenarioSpec from_json(const nlohmann::json& j, const std::string& base_dir = ".");
  static ScenarioSpec load(const std::string& path);
};

struct ScenarioSummary {
  bool diverged = false;
  double diverged_at_s = -1.0;
  double end_time_s = 0.0;
  long ticks = 0;

  // Spin and attitude statistics over the trailing window (10 s or the whole
  // run if shorter), plus whole-run extremes.
  double spin_mean_rad_s = 0.0;     // mean |yaw rate|
  double spin_max_dev_frac = 0.0;   // max deviation from that mean, relative
  double trace_ratio = 1.0;         // thrust-axis trace: max/min angular radius
  double tilt_mean_deg = 0.0;       // window mean, thrust axis vs vertical
  double tilt_max_deg = 0.0;        // whole run
  double est_tilt_err_median_deg = 0.0;  // window median, estimator vs truth

  long gate_accepted = 0, gate_total = 0;
  long saturated_ticks = 0, guard_ticks = 0;
  double max_position_m = 0.0;
  Eigen::Vector3d final_position = Eigen::Vector3d::Zero();
  double final_yaw_rate_rad_s = 0.0;
  double wall_time_s = 0.0;
};

struct ScenarioResult {
  CsvTable ticks;
  ScenarioSummary summary;
};

inline void ScenarioSpec::validate() const {
  vehicle.validate();
  if (!(duration_s > 0.0)) throw std::invalid_argument("scenario: duration must be positive");
  if (!(physics_dt > 0.0) || physics_dt > 0.01)
    throw std::invalid_argument("scenario: physics_dt must be in (0, 0.01] s");
  if (control_divisor < 1) throw std::invalid_argument("scenario: control_divisor must be >= 1");
  for (const auto& f : failures) {
    if (f.rotor < 0 || f.rotor >= vehicle.n)
      throw std::invalid_argument("scenario: failure rotor index out of range");
    if (!(f.time_s >= 0.0) || !(f.detection_delay_s >= 0.0))
      throw std::invalid_argument("scenario: failure times must be non-negative");
  }
  for (size_t i = 1; i < stick.size(); ++i)
    if (!(stick[i].t >= stick[i - 1].t))
      throw std::invalid_argument("scenario: stick trace must be time-sorted");
  if (initial_rotor_speed.size() != 0 && initial_rotor_speed.size() != vehicle.n)
    throw std::invalid_argument("scenario: initial rotor speed size mismatch");
}

namespace detail {

inline Eigen::Vector2d sample_stick(const std::vector<StickSample>& trace, double t) {
  if (trace.empty()) return Eigen::Vector2d::Zero();
  if (t <= trace.front().t) return {trace.front().roll, trace.front().pitch};
  if (t >= trace.back().t) return {trace.back().roll, trace.back().pitch};
  auto hi = std::upper_bound(trace.begin(), trace.end(), t,
                             [](double v, const StickSample& s) { return v < s.t; });
  auto lo = hi - 1;
  const double span = hi->t - lo->t;
  const double a = span > 0.0 ? (t - lo->t) / span : 1.0;
  return {lo->roll + a * (hi->roll - lo->roll), lo->pitch + a * (hi->pitch - lo->pitch)};
}

}  // namespace detail

inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const int n = spec.vehicle.n;
  const SimModel plant = make_sim_model(spec.vehicle, spec.tau_m);
  const EffectivenessModel nominal = build_effectiveness(spec.vehicle);

  StateVector state;
  state.dcm_inertial_from_body =
      spec.initial_tilt_rad != 0.0
          ? Eigen::AngleAxisd(spec.initial_tilt_rad, spec.initial_tilt_axis.normalized())
                .toRotationMatrix()
          : Eigen::Matrix3d::Identity();
  state.omega = spec.initial_omega;
  state.velocity = spec.initial_velocity;
  state.position = spec.initial_position;
  const Eigen::VectorXd hover_u =
      allocate(nominal, Eigen::Vector4d(0, 0, 0, kGravity)).u;
  state.rotor_speed = spec.initial_rotor_speed.size() == n ? spec.initial_rotor_speed
                                                           : hover_u.cwiseSqrt().eval();

  FlightController controller(spec.controller);
  ComplementaryFilter estimator(spec.estimator, state.dcm_inertial_from_body);
  std::mt19937_64 rng(spec.seed);

  // The controller's effectiveness model follows the *detected* failure set;
  // the physical command is zeroed as soon as the failure actually occurs.
  EffectivenessModel model = nominal;
  std::set<int> known_failed;
  auto refresh_model = [&](double t) {
    std::set<int> now;
    for (const auto& f : spec.failures)
      if (t >= f.time_s + f.detection_delay_s) now.insert(f.rotor);
    if (now != known_failed) {
      model = nominal;
      for (int r : now) model = apply_failure(model, r);
      known_failed = now;
    }
  };

  Eigen::VectorXd u_cmd = hover_u;
  auto physical_command = [&](double t) {
    Eigen::VectorXd u = u_cmd;
    for (const auto& f : spec.failures)
      if (t >= f.time_s) u[f.rotor] = 0.0;
    return u;
  };

  CsvTable log;
  log.columns = {"t",      "qw",     "qx",     "qy",     "qz",    "wx",    "wy",
                 "wz",     "vx",     "vy",     "vz",     "px",    "py",    "pz"};
  for (int i = 0; i < n; ++i) log.columns.push_back("rotor" + std::to_string(i));
  for (const char* c : {"est_qw", "est_qx", "est_qy", "est_qz", "est_tilt_err_deg", "gyro_x",
                        "gyro_y", "gyro_z", "accel_x", "accel_y", "accel_z", "ndes_x", "ndes_y",
                        "ndes_z", "p_des", "q_des", "d_roll", "d_pitch", "d_yaw", "d_thrust"})
    log.columns.push_back(c);
  for (int i = 0; i < n; ++i) log.columns.push_back("u_cmd" + std::to_string(i));
  for (const char* c : {"tilt_scale", "saturated", "guard", "gate_ok", "tilt_deg"})
    log.columns.push_back(c);

  ScenarioSummary sum;
  struct TickSample {
    double t, spin, tilt, est_err;
    Eigen::Vector3d axis;
  };
  std::vector<TickSample> samples;

  const long steps = std::lround(spec.duration_s / spec.physics_dt);
  const double control_dt = spec.control_divisor * spec.physics_dt;
  Eigen::VectorXd u_phys = physical_command(0.0);
  const double rad2deg = 180.0 / 3.14159265358979323846;

  for (long k = 0; k < steps; ++k) {
    const double t = k * spec.physics_dt;
    if (k % spec.control_divisor == 0) {
      refresh_model(t);
      // Sensors read the dynamics produced by the command still being held.
      const StateDerivative deriv = eval_derivative(state, u_phys, plant);
      const SensorFrame frame = sample_imu(state, deriv, spec.imu, rng, t);
      const long acc_before = estimator.gate_accepted();
      const long tot_before = estimator.gate_total();
      estimator.step(frame);
      // -1: no gate decision this frame, 0: rejected, 1: accepted.
      const double gate_ok = estimator.gate_total() == tot_before
                                 ? -1.0
                                 : (estimator.gate_accepted() > acc_before ? 1.0 : 0.0);

      const Eigen::Matrix3d& R_used =
          spec.control_uses_estimate ? estimator.dcm() : state.dcm_inertial_from_body;
      const Eigen::Vector3d omega_used = spec.control_uses_estimate ? frame.gyro : state.omega;
      const Eigen::Vector2d stick = detail::sample_stick(spec.stick, t);
      const auto out = controller.step(model, R_used, omega_used, stick, control_dt);
      u_cmd = out.u_cmd;
      u_phys = physical_command(t);

      const double tilt = tilt_from_vertical(state.dcm_inertial_from_body);
      const double est_err =
          tilt_angle_between(estimator.dcm(), state.dcm_inertial_from_body);
      samples.push_back({t, std::abs(state.omega.z()), tilt, est_err,
                         -state.dcm_inertial_from_body.col(2)});
      sum.tilt_max_deg = std::max(sum.tilt_max_deg, tilt * rad2deg);
      sum.max_position_m = std::max(sum.max_position_m, state.position.norm());
      if (out.saturated) ++sum.saturated_ticks;
      if (out.tilt.guard_engaged) ++sum.guard_ticks;
      ++sum.ticks;

      Eigen::Quaterniond q(state.dcm_inertial_from_body);
      Eigen::Quaterniond qe(estimator.dcm());
      std::vector<double> row;
      row.reserve(log.columns.size());
      row.insert(row.end(), {t, q.w(), q.x(), q.y(), q.z(), state.omega.x(), state.omega.y(),
                             state.omega.z(), state.velocity.x(), state.velocity.y(),
                             state.velocity.z(), state.position.x(), state.position.y(),
                             state.position.z()});
      for (int i = 0; i < n; ++i) row.push_back(state.rotor_speed[i]);
      row.insert(row.end(), {qe.w(), qe.x(), qe.y(), qe.z(), est_err * rad2deg, frame.gyro.x(),
                             frame.gyro.y(), frame.gyro.z(), frame.accel.x(), frame.accel.y(),
                             frame.accel.z(), out.n_des.x(), out.n_des.y(), out.n_des.z(),
                             out.tilt.p_des, out.tilt.q_des, out.demand[0], out.demand[1],
                             out.demand[2], out.demand[3]});
      for (int i = 0; i < n; ++i) row.push_back(u_cmd[i]);
      row.insert(row.end(),
                 {out.tilt_scale, out.saturated ? 1.0 : 0.0, out.tilt.guard_engaged ? 1.0 : 0.0,
                  gate_ok, tilt * rad2deg});
      log.rows.push_back(std::move(row));

      if (state.omega.norm() > spec.omega_guard_rad_s ||
          state.position.norm() > spec.position_guard_m) {
        sum.diverged = true;
        sum.diverged_at_s = t;
        break;
      }
    }

    try {
      state = step_dynamics(state, u_phys, spec.physics_dt, plant);
    } catch (const std::runtime_error&) {
      sum.diverged = true;
      sum.diverged_at_s = t;
      break;
    }
    sum.end_time_s = (k + 1) * spec.physics_dt;
  }

  // Trailing-window statistics.
  if (!samples.empty()) {
    const double t_end = samples.back().t;
    const double window = std::min(10.0, t_end);
    std::vector<const TickSample*> win;
    for (const auto& s : samples)
      if (s.t >= t_end - window) win.push_back(&s);

    double spin_sum = 0.0, tilt_sum = 0.0;
    Eigen::Vector3d axis_mean = Eigen::Vector3d::Zero();
    for (const auto* s : win) {
      spin_sum += s->spin;
      tilt_sum += s->tilt;
      axis_mean += s->axis;
    }
    sum.spin_mean_rad_s = spin_sum / win.size();
    sum.tilt_mean_deg = tilt_sum / win.size() * rad2deg;
    double dev = 0.0;
    for (const auto* s : win)
      dev = std::max(dev, std::abs(s->spin - sum.spin_mean_rad_s));
    sum.spin_max_dev_frac = dev / std::max(sum.spin_mean_rad_s, 1e-9);

    if (axis_mean.norm() > 1e-12) {
      axis_mean.normalize();
      double dmin = 1e300, dmax = 0.0;
      for (const auto* s : win) {
        const double ang =
            std::acos(std::clamp(s->axis.dot(axis_mean), -1.0, 1.0));
        dmin = std::min(dmin, ang);
        dmax = std::max(dmax, ang);
      }
      sum.trace_ratio = dmax < 1e-6 ? 1.0 : dmax / std::max(dmin, 1e-12);
    }

    std::vector<double> errs;
    errs.reserve(win.size());
    for (const auto* s : win) errs.push_back(s->est_err);
    std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
    sum.est_tilt_err_median_deg = errs[errs.size() / 2] * rad2deg;
  }
  sum.gate_accepted = estimator.gate_accepted();
  sum.gate_total = estimator.gate_total();
  sum.final_position = state.position;
  sum.final_yaw_rate_rad_s = state.omega.z();
  sum.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(log), sum};
}

// ---- JSON wiring -----------------------------------------------------------

namespace detail {

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

inline Eigen::Vector3d vec3(const nlohmann::json& j, const char* key,
                            const Eigen::Vector3d& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw std::runtime_error(std::string("scenario: ") + key + " must be [x, y, z]");
  return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
}

}  // namespace detail

inline ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& j, const std::string& base_dir) {
  namespace fs = std::filesystem;
  ScenarioSpec s;
  const auto& jv = j.at("vehicle");
  if (jv.is_string()) {
    fs::path p = jv.get<std::string>();
    if (p.is_relative()) p = fs::path(base_dir) / p;
    s.vehicle = VehicleConfig::from_json(detail::load_json_file(p.string()));
  } else {
    s.vehicle = VehicleConfig::from_json(jv);
  }

  s.duration_s = j.value("duration_s", s.duration_s);
  s.seed = j.value("seed", static_cast<std::uint64_t>(0));
  s.control_uses_estimate = j.value("control_uses_estimate", false);

  if (j.contains("physics")) {
    const auto& p = j.at("physics");
    s.physics_dt = p.value("dt_s", s.physics_dt);
    s.control_divisor = p.value("control_divisor", s.control_divisor);
    s.tau_m = p.value("tau_m_s", s.tau_m);
  }
  if (j.contains("controller")) {
    const auto& c = j.at("controller");
    auto& g = s.controller.gains;
    g.k1 = c.value("k1", g.k1);
    g.k2 = c.value("k2", g.k2);
    g.Kp_p = c.value("Kp_p", g.Kp_p);
    g.Kp_q = c.value("Kp_q", g.Kp_q);
    g.Kd_p = c.value("Kd_p", g.Kd_p);
    g.Kd_q = c.value("Kd_q", g.Kd_q);
    g.Kff_p = c.value("Kff_p", g.Kff_p);
    g.Kff_q = c.value("Kff_q", g.Kff_q);
    s.controller.yaw_rate_gain = c.value("yaw_rate_gain", s.controller.yaw_rate_gain);
    s.controller.h3_min = c.value("h3_min", s.controller.h3_min);
    if (c.contains("max_tilt_deg"))
      s.controller.max_tilt_rad = c.at("max_tilt_deg").get<double>() * 3.14159265358979323846 / 180.0;
    s.controller.stick_tau_s = c.value("stick_tau_s", s.controller.stick_tau_s);
  }
  if (j.contains("imu")) {
    const auto& m = j.at("imu");
    s.imu.lever_arm = detail::vec3(m, "lever_arm", s.imu.lever_arm);
    s.imu.gyro_bias = detail::vec3(m, "gyro_bias", s.imu.gyro_bias);
    s.imu.accel_bias = detail::vec3(m, "accel_bias", s.imu.accel_bias);
    s.imu.gyro_noise_sd = m.value("gyro_noise_sd", s.imu.gyro_noise_sd);
    s.imu.accel_noise_sd = m.value("accel_noise_sd", s.imu.accel_noise_sd);
    s.imu.sample_rate_hz = m.value("sample_rate_hz", s.imu.sample_rate_hz);
  }
  if (j.contains("estimator")) {
    const auto& e = j.at("estimator");
    s.estimator.accel_weight = e.value("accel_weight", s.estimator.accel_weight);
    s.estimator.gate_half_width_g = e.value("gate_half_width_g", s.estimator.gate_half_width_g);
    s.estimator.calibrated = e.value("calibrated", s.estimator.calibrated);
    s.estimator.lever_arm = detail::vec3(e, "lever_arm", s.estimator.lever_arm);
  }
  if (j.contains("initial")) {
    const auto& i = j.at("initial");
    if (i.contains("tilt_deg"))
      s.initial_tilt_rad = i.at("tilt_deg").get<double>() * 3.14159265358979323846 / 180.0;
    s.initial_tilt_axis = detail::vec3(i, "tilt_axis", s.initial_tilt_axis);
    s.initial_omega = detail::vec3(i, "omega", s.initial_omega);
    s.initial_velocity = detail::vec3(i, "velocity", s.initial_velocity);
    s.initial_position = detail::vec3(i, "position", s.initial_position);
    if (i.contains("rotor_speed")) {
      const auto& r = i.at("rotor_speed");
      s.initial_rotor_speed.resize(static_cast<Eigen::Index>(r.size()));
      for (size_t k = 0; k < r.size(); ++k) s.initial_rotor_speed[k] = r.at(k).get<double>();
    }
  }
  for (const auto& f : j.value("failures", nlohmann::json::array())) {
    FailureEvent ev;
    ev.time_s = f.at("time_s").get<double>();
    ev.rotor = f.at("rotor").get<int>();
    ev.detection_delay_s = f.value("detection_delay_s", 0.0);
    s.failures.push_back(ev);
  }
  for (const auto& p : j.value("stick", nlohmann::json::array())) {
    if (!p.is_array() || p.size() != 3)
      throw std::runtime_error("scenario: stick entries must be [t, roll, pitch]");
    s.stick.push_back({p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()});
  }
  if (j.contains("guards")) {
    const auto& g = j.at("guards");
    s.omega_guard_rad_s = g.value("omega_rad_s", s.omega_guard_rad_s);
    s.position_guard_m = g.value("position_m", s.position_guard_m);
  }
  s.validate();
  return s;
}

inline ScenarioSpec ScenarioSpec::load(const std::string& path) {
  return from_json(detail::load_json_file(path),
                   std::filesystem::path(path).parent_path().string());
}

inline nlohmann::json summary_to_json(const ScenarioSummary& s) {
  nlohmann::json j;
  j["diverged"] = s.diverged;
  if (s.diverged) j["diverged_at_s"] = s.diverged_at_s;
  j["end_time_s"] = s.end_time_s;
  j["ticks"] = s.ticks;
  j["spin_mean_rad_s"] = s.spin_mean_rad_s;
  j["spin_mean_deg_s"] = s.spin_mean_rad_s * 180.0 / 3.14159265358979323846;
  j["spin_max_dev_frac"] = s.spin_max_dev_frac;
  j["trace_ratio"] = s.trace_ratio;
  j["tilt_mean_deg"] = s.tilt_mean_deg;
  j["tilt_max_deg"] = s.tilt_max_deg;
  j["est_tilt_err_median_deg"] = s.est_tilt_err_median_deg;
  j["gate_accepted"] = s.gate_accepted;
  j["gate_total"] = s.gate_total;
  j["saturated_ticks"] = s.saturated_ticks;
  j["guard_ticks"] = s.guard_ticks;
  j["max_position_m"] = s.max_position_m;
  j["final_position"] = {s.final_position.x(), s.final_position.y(), s.final_position.z()};
  j["final_yaw_rate_rad_s"] = s.final_yaw_rate_rad_s;
  j["wall_time_s"] = s.wall_time_s;
  return j;
}

}  // namespace ftc

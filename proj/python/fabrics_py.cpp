#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <span>

#include "fabrics/sim_harness.hpp"

namespace py = pybind11;
using namespace fabrics;

namespace {

py::dict metrics_dict(const RunMetrics& metrics) {
    py::dict d;
    d["success_rate"] = metrics.success_rate;
    d["time_to_success_s"] = metrics.time_to_success
                                 ? py::object(py::float_(*metrics.time_to_success))
                                 : py::object(py::none());
    d["collision"] = metrics.collision;
    d["min_clearance_m"] = metrics.min_clearance
                               ? py::object(py::float_(*metrics.min_clearance))
                               : py::object(py::none());
    d["compute_median_ms"] = metrics.compute_median_ms;
    d["compute_p95_ms"] = metrics.compute_p95_ms;
    d["planner_failure"] = metrics.planner_failure;
    d["failure_reason"] = metrics.failure_reason;
    py::list events;
    for (const auto& event : metrics.deadlock_events) {
        py::dict e;
        e["detect_time_s"] = event.detect_time;
        e["release_time_s"] = event.release_time
                                  ? py::object(py::float_(*event.release_time))
                                  : py::object(py::none());
        e["robots"] = event.robots;
        events.append(e);
    }
    d["deadlock_events"] = events;
    d["elapsed_sim_time_s"] = metrics.elapsed_sim_time;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Planar multi-robot optimization-fabric motion planning";

    py::register_exception<FabricsError>(m, "FabricsError");

    // --- spec algebra ---
    py::class_<SpecValue>(m, "SpecValue")
        .def_readonly("metric", &SpecValue::metric)
        .def_readonly("force", &SpecValue::force);

    py::class_<Spec>(m, "Spec")
        .def(py::init([](int dim, py::function eval) {
                 return Spec(dim, [eval](const Vector& x, const Vector& xd) {
                     py::gil_scoped_acquire gil;
                     const py::tuple result = eval(x, xd);
                     return SpecValue{result[0].cast<Matrix>(),
                                      result[1].cast<Vector>()};
                 });
             }),
             py::arg("dim"), py::arg("eval"))
        .def_property_readonly("dim", &Spec::dim)
        .def("eval", &Spec::eval)
        .def("solve", &Spec::solve);

    py::class_<Geometry>(m, "Geometry")
        .def(py::init([](int dim, py::function h) {
                 return Geometry(dim, [h](const Vector& x, const Vector& xd) {
                     py::gil_scoped_acquire gil;
                     return h(x, xd).cast<Vector>();
                 });
             }),
             py::arg("dim"), py::arg("h"))
        .def_property_readonly("dim", &Geometry::dim)
        .def("h", &Geometry::h);

    py::class_<EnergyLagrangian>(m, "EnergyLagrangian")
        .def_static("euclidean", &EnergyLagrangian::euclidean, py::arg("dim"),
                    py::arg("mass") = 1.0)
        .def_property_readonly("dim", &EnergyLagrangian::dim)
        .def("metric", &EnergyLagrangian::metric)
        .def("force", &EnergyLagrangian::force)
        .def("energy", &EnergyLagrangian::energy);

    py::class_<DifferentialMap>(m, "DifferentialMap")
        .def_static("identity", &DifferentialMap::identity)
        .def_static("compose", &DifferentialMap::compose)
        .def_property_readonly("in_dim", &DifferentialMap::in_dim)
        .def_property_readonly("out_dim", &DifferentialMap::out_dim)
        .def("phi", &DifferentialMap::phi)
        .def("jacobian", &DifferentialMap::jacobian)
        .def("jdot_qdot", &DifferentialMap::jdot_qdot);

    py::class_<RelativeMotionFrame>(m, "RelativeMotionFrame")
        .def_static("constant", &RelativeMotionFrame::constant,
                    py::arg("position"), py::arg("velocity"),
                    py::arg("acceleration"))
        .def_static("fixed", &RelativeMotionFrame::fixed, py::arg("position"));

    py::enum_<RestBehavior>(m, "RestBehavior")
        .value("THROW", RestBehavior::kThrow)
        .value("GEOMETRY_FALLBACK", RestBehavior::kGeometryFallback);

    m.def("energize", &energize, py::arg("geometry"), py::arg("lagrangian"),
          py::arg("rest_behavior") = RestBehavior::kThrow);
    m.def("pullback", &pullback, py::arg("map"), py::arg("spec"));
    m.def("dynamic_pullback", &dynamic_pullback, py::arg("frame"),
          py::arg("spec_rel"));
    m.def("sum_specs", &sum, py::arg("a"), py::arg("b"));
    m.def("zero_spec", &zero_spec, py::arg("dim"));

    // --- kinematics ---
    py::class_<BasePose>(m, "BasePose")
        .def(py::init<double, double, double>(), py::arg("x") = 0.0,
             py::arg("y") = 0.0, py::arg("heading") = 0.0)
        .def_readwrite("x", &BasePose::x)
        .def_readwrite("y", &BasePose::y)
        .def_readwrite("heading", &BasePose::heading);

    py::class_<SphereSpec>(m, "SphereSpec")
        .def(py::init<int, double, double>(), py::arg("link"),
             py::arg("offset"), py::arg("radius"))
        .def_readwrite("link", &SphereSpec::link)
        .def_readwrite("offset", &SphereSpec::offset)
        .def_readwrite("radius", &SphereSpec::radius);

    py::class_<RobotModel>(m, "RobotModel")
        .def(py::init<std::vector<double>, BasePose,
                      std::vector<std::pair<double, double>>,
                      std::vector<SphereSpec>>(),
             py::arg("link_lengths"), py::arg("base_pose"),
             py::arg("joint_limits"), py::arg("sphere_layout"))
        .def_static("desk_default", &RobotModel::desk_default,
                    py::arg("base_pose") = BasePose{})
        .def_property_readonly("dof", &RobotModel::dof)
        .def_property_readonly("reach", &RobotModel::reach)
        .def_property_readonly("sphere_count", &RobotModel::sphere_count);

    py::class_<RobotState>(m, "RobotState")
        .def(py::init<Vector, Vector>(), py::arg("q"), py::arg("qdot"))
        .def_readwrite("q", &RobotState::q)
        .def_readwrite("qdot", &RobotState::qdot);

    py::class_<SphereState>(m, "SphereState")
        .def_readonly("center", &SphereState::center)
        .def_readonly("velocity", &SphereState::velocity)
        .def_readonly("radius", &SphereState::radius);

    m.def("fk_point", &fk_point, py::arg("model"), py::arg("q"),
          py::arg("link"), py::arg("offset"));
    m.def("point_map", &point_map, py::arg("model"), py::arg("link"),
          py::arg("offset"));
    m.def("collision_spheres", &collision_spheres, py::arg("model"),
          py::arg("state"));
    m.def("end_effector", &end_effector, py::arg("model"), py::arg("q"));
    m.def("end_effector_map", &end_effector_map, py::arg("model"));

    // --- fabric builder ---
    py::class_<PlannerParams>(m, "PlannerParams")
        .def_static("defaults", &PlannerParams::defaults, py::arg("dof"),
                    py::arg("goal"))
        .def_readwrite("goal", &PlannerParams::goal)
        .def_readwrite("attractor_weight", &PlannerParams::attractor_weight)
        .def_readwrite("damping", &PlannerParams::damping)
        .def_readwrite("collision_gain", &PlannerParams::collision_gain)
        .def_readwrite("limit_gain", &PlannerParams::limit_gain)
        .def_readwrite("goal_tolerance", &PlannerParams::goal_tolerance)
        .def_readwrite("attractor_gain", &PlannerParams::attractor_gain)
        .def_readwrite("attractor_smoothing", &PlannerParams::attractor_smoothing)
        .def_readwrite("attractor_metric", &PlannerParams::attractor_metric);

    py::class_<ObstacleState>(m, "ObstacleState")
        .def(py::init([](const Vector2d& center, const Vector2d& velocity,
                         double radius) {
                 return ObstacleState{center, velocity, radius};
             }),
             py::arg("center"), py::arg("velocity"), py::arg("radius"))
        .def_readwrite("center", &ObstacleState::center)
        .def_readwrite("velocity", &ObstacleState::velocity)
        .def_readwrite("radius", &ObstacleState::radius);

    py::class_<FabricPolicy>(m, "FabricPolicy")
        .def("evaluate",
             [](const FabricPolicy& policy, const Vector& q, const Vector& qdot,
                const std::vector<ObstacleState>& obstacles,
                const PlannerParams& params) {
                 return policy.evaluate(q, qdot, obstacles, params);
             },
             py::arg("q"), py::arg("qdot"), py::arg("obstacles"),
             py::arg("params"))
        .def("component_energy",
             [](const FabricPolicy& policy, const Vector& q, const Vector& qdot,
                const std::vector<ObstacleState>& obstacles,
                const PlannerParams& params) {
                 return policy.component_energy(q, qdot, obstacles, params);
             });

    m.def(
        "build_policy",
        [](const RobotModel& model) { return build_policy(model); },
        py::arg("model"));

    py::class_<Attractor>(m, "Attractor")
        .def(py::init([](const Vector2d& goal, double gain, double smoothing) {
                 return Attractor{goal, gain, smoothing};
             }),
             py::arg("goal"), py::arg("gain") = 1.0, py::arg("smoothing") = 0.1)
        .def("psi", &Attractor::psi)
        .def("gradient", &Attractor::gradient);

    m.def("avoidance_geometry", &avoidance_geometry, py::arg("gain"));
    m.def("limit_geometry", &limit_geometry, py::arg("gain"));
    m.def("distance_map", &distance_map, py::arg("sphere_map"),
          py::arg("obstacle_center"), py::arg("radius_a"), py::arg("radius_b"));

    // --- multi-robot, rollout, resolution ---
    py::class_<FleetSnapshot>(m, "FleetSnapshot")
        .def(py::init<>())
        .def_readwrite("states", &FleetSnapshot::states)
        .def_readwrite("params", &FleetSnapshot::params)
        .def_readwrite("timestamp", &FleetSnapshot::timestamp);

    py::class_<MrdfPlanner>(m, "MrdfPlanner")
        .def(py::init([](int robot_id, std::vector<RobotModel> fleet,
                         std::vector<ObstacleState> statics) {
                 return MrdfPlanner(robot_id, std::move(fleet),
                                    std::move(statics));
             }),
             py::arg("robot_id"), py::arg("fleet_models"),
             py::arg("static_obstacles") = std::vector<ObstacleState>{})
        .def_property_readonly("robot_id", &MrdfPlanner::robot_id)
        .def_property_readonly("peer_obstacle_slots",
                               &MrdfPlanner::peer_obstacle_slots)
        .def("plan_step",
             [](const MrdfPlanner& planner, const FleetSnapshot& snapshot) {
                 return planner.plan_step(snapshot);
             },
             py::arg("snapshot"));

    py::enum_<RolloutMode>(m, "RolloutMode")
        .value("RF", RolloutMode::kRf)
        .value("RF_CV", RolloutMode::kRfCv);

    py::class_<RolloutConfig>(m, "RolloutConfig")
        .def(py::init<>())
        .def_readwrite("steps", &RolloutConfig::steps)
        .def_readwrite("dt", &RolloutConfig::dt)
        .def_readwrite("v_min", &RolloutConfig::v_min)
        .def_readwrite("ee_distance", &RolloutConfig::ee_distance)
        .def_readwrite("t_min", &RolloutConfig::t_min)
        .def_readwrite("lookahead", &RolloutConfig::lookahead)
        .def_readwrite("mode", &RolloutConfig::mode);

    py::class_<DeadlockPair>(m, "DeadlockPair")
        .def_readonly("first", &DeadlockPair::first)
        .def_readonly("second", &DeadlockPair::second);

    py::class_<RolloutResult>(m, "RolloutResult")
        .def_readonly("configurations", &RolloutResult::configurations)
        .def_readonly("velocities", &RolloutResult::velocities)
        .def_readonly("accelerations", &RolloutResult::accelerations)
        .def_readonly("average_speeds", &RolloutResult::average_speeds)
        .def_readonly("ee_distances", &RolloutResult::ee_distances)
        .def_readonly("deadlock", &RolloutResult::deadlock)
        .def_readonly("deadlock_pairs", &RolloutResult::deadlock_pairs);

    m.def("integrate",
          [](const Vector& q, const Vector& qdot, const Vector& qddot,
             double dt) {
              Vector q1, qd1;
              integrate(q, qdot, qddot, dt, q1, qd1);
              return py::make_tuple(q1, qd1);
          },
          py::arg("q"), py::arg("qdot"), py::arg("qddot"), py::arg("dt"));
    m.def("estimate_goal", &estimate_goal, py::arg("ee_position"),
          py::arg("ee_velocity"), py::arg("lookahead"), py::arg("dt"));
    m.def("rollout",
          [](const std::vector<MrdfPlanner>& planners,
             const FleetSnapshot& snapshot, const RolloutConfig& config,
             int ego_robot) {
              return rollout(planners, snapshot, config, ego_robot);
          },
          py::arg("planners"), py::arg("snapshot"), py::arg("config"),
          py::arg("ego_robot") = -1);
    m.def("detect_deadlock", &detect_deadlock, py::arg("average_speeds"),
          py::arg("ee_distances"), py::arg("config"));
    m.def("assign_priority", &assign_priority, py::arg("snapshot"),
          py::arg("models"), py::arg("candidates"), py::arg("seed"),
          py::arg("tie_tolerance") = 1e-6);

    // --- harness ---
    m.def("parse_scenario", &parse_scenario, py::arg("text"));
    m.def("load_scenario", &load_scenario, py::arg("path"));

    py::class_<Scenario>(m, "Scenario")
        .def_readwrite("t_max", &Scenario::t_max)
        .def_readwrite("dt", &Scenario::dt)
        .def_readwrite("seed", &Scenario::seed);

    m.def("randomize_goals", &randomize_goals, py::arg("scenario"),
          py::arg("seed"));
    m.def("run",
          [](const Scenario& scenario, const std::string& mode) {
              const RunResult result = run(scenario, mode_from_string(mode));
              py::dict d;
              d["metrics"] = metrics_dict(result.metrics);
              d["trajectory_csv"] = trajectory_csv(
                  result.log, scenario.robots.front().model.dof());
              return d;
          },
          py::arg("scenario"), py::arg("mode"));
    m.def("batch",
          [](const Scenario& scenario, int runs,
             const std::vector<std::string>& modes) {
              std::vector<PlannerMode> parsed;
              for (const auto& name : modes) parsed.push_back(mode_from_string(name));
              const BatchResult result = batch(scenario, runs, parsed);
              py::dict d;
              py::list stats;
              for (const auto& mode_stats : result.stats) {
                  py::dict s;
                  s["mode"] = to_string(mode_stats.mode);
                  s["runs"] = mode_stats.runs;
                  s["success_rate_mean"] = mode_stats.success_rate_mean;
                  s["success_rate_std"] = mode_stats.success_rate_std;
                  s["collision_rate"] = mode_stats.collision_rate;
                  s["deadlock_events"] = mode_stats.deadlock_events;
                  stats.append(s);
              }
              d["stats"] = stats;
              d["table"] = format_stats_table(result);
              return d;
          },
          py::arg("scenario"), py::arg("runs"), py::arg("modes"));
}

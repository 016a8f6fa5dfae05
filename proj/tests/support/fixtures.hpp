#pragma once

// Desk-scale scenario fixtures shared by the unit and acceptance suites.

#include "fabrics/scenario.hpp"

namespace fixtures {

using fabrics::BasePose;
using fabrics::GoalSpec;
using fabrics::PlannerParams;
using fabrics::RobotModel;
using fabrics::RobotScenario;
using fabrics::Scenario;
using fabrics::Vector;
using fabrics::Vector2d;

inline Vector vec3(double a, double b, double c) {
    Vector v(3);
    v << a, b, c;
    return v;
}

inline RobotScenario desk_robot(const BasePose& base, const Vector& q0,
                                const std::vector<GoalSpec>& goals) {
    const RobotModel model = RobotModel::desk_default(base);
    RobotScenario robot{model, q0, Vector::Zero(3), goals,
                        PlannerParams::defaults(3, goals.front().point)};
    return robot;
}

/// Two mirror-symmetric desk arms whose first goals are 0.10 m apart at the
/// shared table center: closer than one sphere-contact diameter, so both
/// cannot be occupied at once. The second goals are own-side trays.
inline Scenario head_on_scenario() {
    Scenario scenario;
    scenario.t_max = 70.0;
    scenario.dt = 0.01;
    scenario.seed = 42;
    scenario.resolution.seed = 7;

    const Vector q0_left = vec3(1.9, -1.0, -0.5);
    scenario.robots.push_back(desk_robot(
        BasePose{-0.65, 0.0, 0.0}, q0_left,
        {GoalSpec{Vector2d(-0.05, 0.35)}, GoalSpec{Vector2d(-0.45, 0.2)}}));
    scenario.robots.push_back(desk_robot(
        BasePose{0.65, 0.0, M_PI}, -q0_left,
        {GoalSpec{Vector2d(0.05, 0.35)}, GoalSpec{Vector2d(0.45, 0.2)}}));
    return scenario;
}

/// Same arms with laterally separated goals (1 m apart): no interaction.
inline Scenario offset_goal_scenario() {
    Scenario scenario = head_on_scenario();
    scenario.robots[0].goals = {GoalSpec{Vector2d(-0.5, 0.3)}};
    scenario.robots[1].goals = {GoalSpec{Vector2d(0.5, 0.3)}};
    scenario.robots[0].params.goal = scenario.robots[0].goals[0].point;
    scenario.robots[1].params.goal = scenario.robots[1].goals[0].point;
    return scenario;
}

inline Scenario single_robot_scenario() {
    Scenario scenario;
    scenario.t_max = 70.0;
    scenario.dt = 0.01;
    scenario.seed = 3;
    scenario.robots.push_back(desk_robot(BasePose{}, vec3(0.4, 0.3, -0.2),
                                         {GoalSpec{Vector2d(0.55, 0.45)}}));
    return scenario;
}

/// Randomized pick-and-place benchmark: two cubes per robot picked from the
/// contested table center, placed in own-side trays.
inline Scenario benchmark_template() {
    Scenario scenario;
    scenario.t_max = 70.0;
    scenario.dt = 0.01;
    scenario.seed = 1000;
    scenario.resolution.seed = 7;
    scenario.workspace.min_separation = 0.2;
    scenario.workspace.reach_margin = 0.92;
    scenario.workspace.x0 = -0.32;
    scenario.workspace.y0 = 0.22;
    scenario.workspace.x1 = 0.32;
    scenario.workspace.y1 = 0.55;

    const Eigen::Vector4d left_region(-0.30, 0.25, 0.04, 0.55);
    const Eigen::Vector4d right_region(-0.04, 0.25, 0.30, 0.55);

    GoalSpec left_pick;
    left_pick.randomize = true;
    left_pick.region = left_region;
    GoalSpec right_pick;
    right_pick.randomize = true;
    right_pick.region = right_region;

    const Vector q0_left = vec3(1.9, -1.0, -0.5);
    scenario.robots.push_back(desk_robot(
        BasePose{-0.65, 0.0, 0.0}, q0_left,
        {left_pick, GoalSpec{Vector2d(-0.5, 0.2)}, left_pick,
         GoalSpec{Vector2d(-0.55, 0.3)}}));
    scenario.robots.push_back(desk_robot(
        BasePose{0.65, 0.0, M_PI}, -q0_left,
        {right_pick, GoalSpec{Vector2d(0.5, 0.2)}, right_pick,
         GoalSpec{Vector2d(0.55, 0.3)}}));
    return scenario;
}

}  // namespace fixtures

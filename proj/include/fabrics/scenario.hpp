#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fabrics/deadlock_resolution.hpp"
#include "fabrics/multi_robot.hpp"
#include "fabrics/rollout.hpp"

namespace fabrics {

/// One mission goal. Randomizable goals are resampled per batch seed inside
/// `region` (or the scenario workspace when no region is given).
struct GoalSpec {
    Vector2d point = Vector2d::Zero();
    bool randomize = false;
    std::optional<Eigen::Vector4d> region;  ///< x0 y0 x1 y1
};

struct RobotScenario {
    RobotModel model;
    Vector q0;
    Vector qd0;
    std::vector<GoalSpec> goals;
    PlannerParams params;
};

/// Goal-randomization bounds and constraints for batch runs.
struct Workspace {
    double x0 = -0.5, y0 = 0.1, x1 = 0.5, y1 = 0.6;
    double min_separation = 0.0;  ///< between goals of different robots, meters
    double reach_margin = 0.95;   ///< goals within margin * reach of the base
};

struct Scenario {
    double t_max = 70.0;
    double dt = 0.01;
    unsigned long long seed = 0;
    double dwell = 0.2;  ///< seconds a goal must be held before it counts
    std::vector<RobotScenario> robots;
    std::vector<ObstacleState> static_obstacles;
    RolloutConfig rollout;
    ResolutionConfig resolution;
    Workspace workspace;

    void validate() const;
};

/// Parses the line-oriented scenario grammar (see docs/scenario_format.md).
Scenario parse_scenario(const std::string& text);

Scenario load_scenario(const std::string& path);

/// Resamples all randomizable goals with the given seed, honoring reach,
/// static-obstacle and cross-robot separation constraints.
Scenario randomize_goals(const Scenario& scenario, unsigned long long seed);

}  // namespace fabrics

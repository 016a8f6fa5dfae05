#include "fabrics/multi_robot.hpp"

#include <string>
#include <utility>

namespace fabrics {

MrdfPlanner::MrdfPlanner(int robot_id, std::vector<RobotModel> fleet_models,
                         std::vector<ObstacleState> static_obstacles,
                         PolicyComponents components)
    : robot_id_(robot_id),
      fleet_models_(std::move(fleet_models)),
      static_obstacles_(std::move(static_obstacles)),
      policy_(fleet_models_.at(robot_id), std::move(components)),
      peer_obstacle_slots_(0) {
    if (robot_id_ < 0 || robot_id_ >= static_cast<int>(fleet_models_.size())) {
        throw ConfigError("MrdfPlanner: robot id out of range");
    }
    for (int p = 0; p < fleet_size(); ++p) {
        if (p != robot_id_) peer_obstacle_slots_ += fleet_models_[p].sphere_count();
    }
}

void MrdfPlanner::check_snapshot(const FleetSnapshot& snapshot) const {
    if (static_cast<int>(snapshot.states.size()) != fleet_size() ||
        static_cast<int>(snapshot.params.size()) != fleet_size()) {
        throw ConfigError("MrdfPlanner: snapshot must cover all robots");
    }
    for (int p = 0; p < fleet_size(); ++p) {
        validate_state(fleet_models_[p], snapshot.states[p]);
    }
}

std::vector<ObstacleState> MrdfPlanner::gather_obstacles(
    const FleetSnapshot& snapshot) const {
    check_snapshot(snapshot);
    std::vector<ObstacleState> obstacles;
    obstacles.reserve(peer_obstacle_slots_ + static_obstacles_.size());
    for (int p = 0; p < fleet_size(); ++p) {
        if (p == robot_id_) continue;
        for (const auto& sphere :
             collision_spheres(fleet_models_[p], snapshot.states[p])) {
            obstacles.push_back(
                ObstacleState{sphere.center, sphere.velocity, sphere.radius});
        }
    }
    for (const auto& obs : static_obstacles_) obstacles.push_back(obs);
    return obstacles;
}

Vector MrdfPlanner::plan_step(const FleetSnapshot& snapshot,
                              PolicyDiagnostics* diagnostics) const {
    const auto obstacles = gather_obstacles(snapshot);
    const auto& state = snapshot.states[robot_id_];
    const auto& params = snapshot.params[robot_id_];
    const std::string context = "robot " + std::to_string(robot_id_) + ": ";
    try {
        return policy_.evaluate(state.q, state.qdot, obstacles, params,
                                diagnostics);
    } catch (const NonpositiveDistance& e) {
        throw NonpositiveDistance(context + e.what());
    } catch (const GradientSingularity& e) {
        throw GradientSingularity(context + e.what());
    } catch (const SingularMetric& e) {
        throw SingularMetric(context + e.what());
    }
}

std::vector<Vector> synchronized_plan(std::span<const MrdfPlanner> planners,
                                      const FleetSnapshot& snapshot) {
    std::vector<Vector> accelerations;
    accelerations.reserve(planners.size());
    for (const auto& planner : planners) {
        accelerations.push_back(planner.plan_step(snapshot));
    }
    return accelerations;
}

}  // namespace fabrics

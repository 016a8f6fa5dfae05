#pragma once

#include <span>
#include <vector>

#include "fabrics/fabric_builder.hpp"
#include "fabrics/kinematics.hpp"

namespace fabrics {

/// Synchronized fleet state: configuration, velocity and parameter vector of
/// every robot at one timestamp.
struct FleetSnapshot {
    std::vector<RobotState> states;
    std::vector<PlannerParams> params;
    double timestamp = 0.0;
};

/// Decentralized per-robot planner: every collision sphere of every other
/// robot enters the robot's own fabric as a moving obstacle, alongside the
/// scene's static obstacles.
class MrdfPlanner {
public:
    MrdfPlanner(int robot_id, std::vector<RobotModel> fleet_models,
                std::vector<ObstacleState> static_obstacles = {},
                PolicyComponents components = {});

    int robot_id() const { return robot_id_; }
    int fleet_size() const { return static_cast<int>(fleet_models_.size()); }
    const RobotModel& model() const { return fleet_models_[robot_id_]; }
    const FabricPolicy& policy() const { return policy_; }

    /// Number of moving-obstacle slots: sum of peer sphere counts.
    int peer_obstacle_slots() const { return peer_obstacle_slots_; }

    /// Peer spheres (in robot-id order) followed by static obstacles.
    std::vector<ObstacleState> gather_obstacles(
        const FleetSnapshot& snapshot) const;

    /// Evaluates the robot's own policy against the snapshot. Reads only
    /// peer states and parameters, never peer planner internals.
    Vector plan_step(const FleetSnapshot& snapshot,
                     PolicyDiagnostics* diagnostics = nullptr) const;

private:
    void check_snapshot(const FleetSnapshot& snapshot) const;

    int robot_id_;
    std::vector<RobotModel> fleet_models_;
    std::vector<ObstacleState> static_obstacles_;
    FabricPolicy policy_;
    int peer_obstacle_slots_;
};

/// Synchronized decentralized stepping: every planner reads the same
/// snapshot; the returned accelerations advance all robots together.
std::vector<Vector> synchronized_plan(std::span<const MrdfPlanner> planners,
                                      const FleetSnapshot& snapshot);

}  // namespace fabrics

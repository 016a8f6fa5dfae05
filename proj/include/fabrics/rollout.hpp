#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fabrics/multi_robot.hpp"

namespace fabrics {

enum class RolloutMode { kRf, kRfCv };

struct RolloutConfig {
    int steps = 10;            ///< K, prediction steps
    double dt = 0.01;          ///< seconds
    double v_min = 0.03;       ///< deadlock speed threshold, rad/s
    double ee_distance = 0.35; ///< deadlock end-effector distance, meters
    double t_min = 3.0;        ///< minimum time in resolution, seconds
    int lookahead = 10;        ///< H, goal-estimation horizon (defaults to K)
    RolloutMode mode = RolloutMode::kRf;

    void validate() const;
};

struct DeadlockPair {
    int first;
    int second;
};

/// K-step prediction of the whole fleet plus the deadlock verdict.
struct RolloutResult {
    /// [robot][k] for k = 0..K (configurations, velocities) and
    /// k = 0..K-1 (accelerations).
    std::vector<std::vector<Vector>> configurations;
    std::vector<std::vector<Vector>> velocities;
    std::vector<std::vector<Vector>> accelerations;
    std::vector<double> average_speeds;  ///< vbar per robot, rad/s
    Matrix ee_distances;                 ///< pairwise end-effector distances at k = 0
    bool deadlock = false;
    std::vector<DeadlockPair> deadlock_pairs;
};

/// Second-order integrator step: q' = q + dt qd, qd' = qd + dt qdd.
void integrate(const Vector& q, const Vector& qdot, const Vector& qddot,
               double dt, Vector& q_next, Vector& qdot_next);

/// Constant-velocity goal estimate: x_ee + H dt v_ee.
Vector2d estimate_goal(const Vector2d& ee_position, const Vector2d& ee_velocity,
                       int lookahead, double dt);

/// Forward-propagates every robot's decentralized policy for K steps and
/// evaluates the deadlock condition. In RF-CV mode (ego_robot >= 0) the
/// goals of all robots other than the ego are replaced by constant-velocity
/// estimates from their current end-effector states.
RolloutResult rollout(std::span<const MrdfPlanner> planners,
                      const FleetSnapshot& snapshot, const RolloutConfig& config,
                      int ego_robot = -1);

/// Deadlock condition: some pair with both average speeds below v_min and
/// end effectors closer than ee_distance.
std::pair<bool, std::vector<DeadlockPair>> detect_deadlock(
    const std::vector<double>& average_speeds, const Matrix& ee_distances,
    const RolloutConfig& config);

/// Approximates a fleet state `steps` integrator steps after a stale
/// snapshot by forward-propagating the communicated policies.
FleetSnapshot extrapolate_stale(std::span<const MrdfPlanner> planners,
                                const FleetSnapshot& stale, int steps,
                                const RolloutConfig& config);

}  // namespace fabrics

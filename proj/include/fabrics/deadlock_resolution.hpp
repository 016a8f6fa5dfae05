#pragma once

#include <vector>

#include "fabrics/rollout.hpp"

namespace fabrics {

struct ResolutionConfig {
    double gamma_high = 3.0;        ///< boosted attractor weight
    double retreat_distance = 0.3;  ///< rho, meters
    unsigned long long seed = 0;    ///< tie-break RNG seed
    double tie_tolerance = 1e-6;    ///< meters

    void validate() const;
};

/// Bookkeeping for one active resolution episode. saved_params holds the
/// original parameter vectors of the involved robots (present iff active).
struct ResolutionState {
    bool active = false;
    std::vector<int> priority_order;  ///< involved robots, highest priority first
    std::vector<PlannerParams> saved_params;  ///< aligned with priority_order
    double activation_time = 0.0;
    unsigned long long rng_seed = 0;
};

/// Sorts `candidates` ascending by end-effector distance to their goal
/// (closest robot wins the highest priority). Distances tied within
/// tie_tolerance are ordered by the seeded RNG, so planners sharing the seed
/// agree without communication.
std::vector<int> assign_priority(const FleetSnapshot& snapshot,
                                 const std::vector<RobotModel>& models,
                                 const std::vector<int>& candidates,
                                 unsigned long long seed,
                                 double tie_tolerance = 1e-6);

/// Activates a resolution episode: saves the involved robots' parameters,
/// boosts the top-priority robot's attractor weight to gamma_high and sends
/// every lower-priority robot to a retreat goal rho meters from its current
/// end effector, directly away from the contested goal.
/// Throws InvalidState unless a deadlock is active.
void apply_resolution(ResolutionState& state,
                      const std::vector<int>& priority_order,
                      const FleetSnapshot& snapshot,
                      const std::vector<RobotModel>& models,
                      std::vector<PlannerParams>& params,
                      const ResolutionConfig& config, double now,
                      bool deadlock_active);

/// Release condition: all involved predicted speeds above v_min and at least
/// t_min elapsed, or any involved robot within its goal tolerance of its
/// original goal. Throws InvalidState when no resolution is active.
bool check_release(const ResolutionState& state,
                   const std::vector<double>& average_speeds, double now,
                   const FleetSnapshot& snapshot,
                   const std::vector<RobotModel>& models,
                   const RolloutConfig& rollout_config);

/// Restores the saved parameters bit-exact and deactivates the episode.
void release_resolution(ResolutionState& state,
                        std::vector<PlannerParams>& params);

}  // namespace fabrics

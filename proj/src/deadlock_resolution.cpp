#include "fabrics/deadlock_resolution.hpp"

#include <algorithm>
#include <random>

namespace fabrics {

void ResolutionConfig::validate() const {
    if (!(gamma_high > 0.0)) {
        throw ConfigError("ResolutionConfig: gamma_high must be > 0");
    }
    if (!(retreat_distance > 0.0)) {
        throw ConfigError("ResolutionConfig: retreat distance must be > 0");
    }
    if (!(tie_tolerance >= 0.0)) {
        throw ConfigError("ResolutionConfig: tie tolerance must be >= 0");
    }
}

std::vector<int> assign_priority(const FleetSnapshot& snapshot,
                                 const std::vector<RobotModel>& models,
                                 const std::vector<int>& candidates,
                                 unsigned long long seed,
                                 double tie_tolerance) {
    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(candidates.size());
    for (int id : candidates) {
        const Vector2d ee = end_effector(models.at(id), snapshot.states.at(id).q);
        ranked.emplace_back((ee - snapshot.params.at(id).goal).norm(), id);
    }
    std::sort(ranked.begin(), ranked.end());

    // Shuffle maximal groups of tied distances with the shared seed.
    std::mt19937_64 rng(seed);
    std::size_t group_start = 0;
    for (std::size_t i = 1; i <= ranked.size(); ++i) {
        const bool group_ends =
            i == ranked.size() ||
            ranked[i].first - ranked[group_start].first > tie_tolerance;
        if (group_ends) {
            if (i - group_start > 1) {
                std::shuffle(ranked.begin() + group_start, ranked.begin() + i, rng);
            }
            group_start = i;
        }
    }

    std::vector<int> order;
    order.reserve(ranked.size());
    for (const auto& [distance, id] : ranked) order.push_back(id);
    return order;
}

void apply_resolution(ResolutionState& state,
                      const std::vector<int>& priority_order,
                      const FleetSnapshot& snapshot,
                      const std::vector<RobotModel>& models,
                      std::vector<PlannerParams>& params,
                      const ResolutionConfig& config, double now,
                      bool deadlock_active) {
    if (!deadlock_active) {
        throw InvalidState("apply_resolution: no deadlock is active");
    }
    if (state.active) {
        throw InvalidState("apply_resolution: resolution already active");
    }
    if (priority_order.size() < 2) {
        throw InvalidState("apply_resolution: at least two robots required");
    }
    config.validate();

    state.saved_params.clear();
    state.saved_params.reserve(priority_order.size());
    for (int id : priority_order) {
        state.saved_params.push_back(params.at(id));
    }
    state.priority_order = priority_order;
    state.activation_time = now;
    state.rng_seed = config.seed;
    state.active = true;

    const int high = priority_order.front();
    const Vector2d contested_goal = params.at(high).goal;
    params.at(high).attractor_weight = config.gamma_high;

    for (std::size_t rank = 1; rank < priority_order.size(); ++rank) {
        const int low = priority_order[rank];
        const Vector2d ee = end_effector(models.at(low), snapshot.states.at(low).q);
        Vector2d direction = ee - contested_goal;
        const double norm = direction.norm();
        if (norm > 1e-9) {
            direction /= norm;
        } else {
            // Low robot sits exactly on the contested goal: back away from
            // the high robot instead.
            const Vector2d ee_high =
                end_effector(models.at(high), snapshot.states.at(high).q);
            Vector2d alt = ee - ee_high;
            direction = alt.norm() > 1e-9 ? alt.normalized() : Vector2d(1.0, 0.0);
        }
        params.at(low).goal = ee + config.retreat_distance * direction;
    }
}

bool check_release(const ResolutionState& state,
                   const std::vector<double>& average_speeds, double now,
                   const FleetSnapshot& snapshot,
                   const std::vector<RobotModel>& models,
                   const RolloutConfig& rollout_config) {
    if (!state.active) {
        throw InvalidState("check_release: no resolution is active");
    }
    const double elapsed = now - state.activation_time;

    bool all_moving = true;
    for (int id : state.priority_order) {
        if (average_speeds.at(id) <= rollout_config.v_min) {
            all_moving = false;
            break;
        }
    }
    if (all_moving && elapsed >= rollout_config.t_min) return true;

    for (std::size_t rank = 0; rank < state.priority_order.size(); ++rank) {
        const int id = state.priority_order[rank];
        const auto& original = state.saved_params[rank];
        const Vector2d ee = end_effector(models.at(id), snapshot.states.at(id).q);
        if ((ee - original.goal).norm() <= original.goal_tolerance) return true;
    }
    return false;
}

void release_resolution(ResolutionState& state,
                        std::vector<PlannerParams>& params) {
    if (!state.active) {
        throw InvalidState("release_resolution: no resolution is active");
    }
    for (std::size_t rank = 0; rank < state.priority_order.size(); ++rank) {
        params.at(state.priority_order[rank]) = state.saved_params[rank];
    }
    state.active = false;
    state.priority_order.clear();
    state.saved_params.clear();
}

}  // namespace fabrics

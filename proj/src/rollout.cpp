#include "fabrics/rollout.hpp"

#include <cmath>
#include <string>

namespace fabrics {

void RolloutConfig::validate() const {
    if (steps < 1) throw ConfigError("RolloutConfig: steps must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("RolloutConfig: dt must be > 0");
    if (!(v_min > 0.0) || !(ee_distance > 0.0) || !(t_min > 0.0)) {
        throw ConfigError("RolloutConfig: thresholds must be > 0");
    }
    if (lookahead < 1) throw ConfigError("RolloutConfig: lookahead must be >= 1");
}

void integrate(const Vector& q, const Vector& qdot, const Vector& qddot,
               double dt, Vector& q_next, Vector& qdot_next) {
    q_next = q + dt * qdot;
    qdot_next = qdot + dt * qddot;
}

Vector2d estimate_goal(const Vector2d& ee_position, const Vector2d& ee_velocity,
                       int lookahead, double dt) {
    return ee_position + static_cast<double>(lookahead) * dt * ee_velocity;
}

namespace {

Matrix pairwise_ee_distances(std::span<const MrdfPlanner> planners,
                             const FleetSnapshot& snapshot) {
    const int n = static_cast<int>(planners.size());
    Matrix distances = Matrix::Zero(n, n);
    std::vector<Vector2d> ee(n);
    for (int i = 0; i < n; ++i) {
        ee[i] = end_effector(planners[i].model(), snapshot.states[i].q);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            distances(i, j) = distances(j, i) = (ee[i] - ee[j]).norm();
        }
    }
    return distances;
}

}  // namespace

RolloutResult rollout(std::span<const MrdfPlanner> planners,
                      const FleetSnapshot& snapshot, const RolloutConfig& config,
                      int ego_robot) {
    config.validate();
    const int n = static_cast<int>(planners.size());
    if (static_cast<int>(snapshot.states.size()) != n ||
        static_cast<int>(snapshot.params.size()) != n) {
        throw ConfigError("rollout: snapshot must cover all planners");
    }

    FleetSnapshot working = snapshot;
    if (config.mode == RolloutMode::kRfCv && ego_robot >= 0) {
        // Peer goals are unknown: substitute constant-velocity estimates.
        for (int p = 0; p < n; ++p) {
            if (p == ego_robot) continue;
            const auto& model = planners[p].model();
            const Vector2d ee = end_effector(model, working.states[p].q);
            const Vector2d vel = end_effector_velocity(model, working.states[p].q,
                                                       working.states[p].qdot);
            working.params[p].goal =
                estimate_goal(ee, vel, config.lookahead, config.dt);
        }
    }

    RolloutResult result;
    result.configurations.assign(n, {});
    result.velocities.assign(n, {});
    result.accelerations.assign(n, {});
    for (int i = 0; i < n; ++i) {
        result.configurations[i].reserve(config.steps + 1);
        result.velocities[i].reserve(config.steps + 1);
        result.accelerations[i].reserve(config.steps);
        result.configurations[i].push_back(working.states[i].q);
        result.velocities[i].push_back(working.states[i].qdot);
    }
    result.ee_distances = pairwise_ee_distances(planners, snapshot);

    for (int k = 0; k < config.steps; ++k) {
        std::vector<Vector> accelerations(n);
        for (int i = 0; i < n; ++i) {
            try {
                accelerations[i] = planners[i].plan_step(working);
            } catch (const NonpositiveDistance& e) {
                throw NonpositiveDistance("rollout step " + std::to_string(k) +
                                          ": " + e.what());
            } catch (const GradientSingularity& e) {
                throw GradientSingularity("rollout step " + std::to_string(k) +
                                          ": " + e.what());
            } catch (const SingularMetric& e) {
                throw SingularMetric("rollout step " + std::to_string(k) + ": " +
                                     e.what());
            }
        }
        for (int i = 0; i < n; ++i) {
            auto& state = working.states[i];
            Vector q_next;
            Vector qdot_next;
            integrate(state.q, state.qdot, accelerations[i], config.dt, q_next,
                      qdot_next);
            state.q = std::move(q_next);
            state.qdot = std::move(qdot_next);
            result.accelerations[i].push_back(std::move(accelerations[i]));
            result.configurations[i].push_back(state.q);
            result.velocities[i].push_back(state.qdot);
        }
        working.timestamp += config.dt;
    }

    result.average_speeds.resize(n);
    for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (const auto& qdot : result.velocities[i]) total += qdot.norm();
        // K+1 samples over K, as the horizon average is defined.
        result.average_speeds[i] = total / static_cast<double>(config.steps);
    }

    auto [deadlock, pairs] =
        detect_deadlock(result.average_speeds, result.ee_distances, config);
    result.deadlock = deadlock;
    result.deadlock_pairs = std::move(pairs);
    return result;
}

std::pair<bool, std::vector<DeadlockPair>> detect_deadlock(
    const std::vector<double>& average_speeds, const Matrix& ee_distances,
    const RolloutConfig& config) {
    std::vector<DeadlockPair> pairs;
    const int n = static_cast<int>(average_speeds.size());
    for (int i = 0; i < n; ++i) {
        for (int p = i + 1; p < n; ++p) {
            if (average_speeds[i] < config.v_min &&
                average_speeds[p] < config.v_min &&
                ee_distances(i, p) < config.ee_distance) {
                pairs.push_back(DeadlockPair{i, p});
            }
        }
    }
    return {!pairs.empty(), std::move(pairs)};
}

FleetSnapshot extrapolate_stale(std::span<const MrdfPlanner> planners,
                                const FleetSnapshot& stale, int steps,
                                const RolloutConfig& config) {
    if (steps < 0) {
        throw ConfigError("extrapolate_stale: steps must be >= 0");
    }
    FleetSnapshot working = stale;
    for (int k = 0; k < steps; ++k) {
        std::vector<Vector> accelerations(planners.size());
        for (std::size_t i = 0; i < planners.size(); ++i) {
            accelerations[i] = planners[i].plan_step(working);
        }
        for (std::size_t i = 0; i < planners.size(); ++i) {
            auto& state = working.states[i];
            Vector q_next;
            Vector qdot_next;
            integrate(state.q, state.qdot, accelerations[i], config.dt, q_next,
                      qdot_next);
            state.q = std::move(q_next);
            state.qdot = std::move(qdot_next);
        }
        working.timestamp += config.dt;
    }
    return working;
}

}  // namespace fabrics

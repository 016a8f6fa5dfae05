#include "fabrics/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace fabrics {

std::string to_string(PlannerMode mode) {
    switch (mode) {
        case PlannerMode::kMrdf: return "mrdf";
        case PlannerMode::kRf: return "rf";
        case PlannerMode::kRfCv: return "rf-cv";
    }
    return "unknown";
}

PlannerMode mode_from_string(const std::string& name) {
    if (name == "mrdf") return PlannerMode::kMrdf;
    if (name == "rf") return PlannerMode::kRf;
    if (name == "rf-cv" || name == "rfcv" || name == "rf_cv") {
        return PlannerMode::kRfCv;
    }
    throw ConfigError("unknown planner mode: " + name);
}

namespace {

/// Decentralized deadlock supervisor for one robot. In RF mode all
/// supervisors see identical information and therefore agree without
/// communication; in RF-CV each works from its own goal estimates.
class Supervisor {
public:
    Supervisor(int robot_id, const Scenario& scenario, PlannerMode mode)
        : robot_id_(robot_id),
          mode_(mode),
          config_(scenario.resolution),
          rollout_config_(scenario.rollout) {}

    bool active() const { return state_.active; }

    const ResolutionState& state() const { return state_; }

    /// Builds this robot's information view of the fleet parameters: peer
    /// goals are taken as communicated (RF) or replaced by constant-velocity
    /// estimates (RF-CV).
    FleetSnapshot info_view(const FleetSnapshot& snapshot,
                            const std::vector<RobotModel>& models) const {
        FleetSnapshot view = snapshot;
        if (mode_ == PlannerMode::kRfCv) {
            for (std::size_t p = 0; p < models.size(); ++p) {
                if (static_cast<int>(p) == robot_id_) continue;
                const Vector2d ee = end_effector(models[p], snapshot.states[p].q);
                const Vector2d vel = end_effector_velocity(
                    models[p], snapshot.states[p].q, snapshot.states[p].qdot);
                view.params[p].goal = estimate_goal(
                    ee, vel, rollout_config_.lookahead, rollout_config_.dt);
            }
        }
        return view;
    }

    /// Returns true when this call released an active episode.
    bool maybe_release(const RolloutResult& result,
                       const FleetSnapshot& snapshot,
                       const std::vector<RobotModel>& models, double now,
                       std::vector<PlannerParams>& params) {
        if (!state_.active) return false;
        bool release = false;
        if (mode_ == PlannerMode::kRf) {
            release = check_release(state_, result.average_speeds, now, snapshot,
                                    models, rollout_config_);
        } else {
            // Peer goals are estimates, so only verifiable clauses apply:
            // everyone moving again after t_min, or the own goal reached.
            const double elapsed = now - state_.activation_time;
            bool all_moving = true;
            for (int id : state_.priority_order) {
                if (result.average_speeds.at(id) <= rollout_config_.v_min) {
                    all_moving = false;
                    break;
                }
            }
            release = all_moving && elapsed >= rollout_config_.t_min;
            if (!release) {
                const Vector2d ee =
                    end_effector(models[robot_id_], snapshot.states[robot_id_].q);
                if ((ee - own_saved().goal).norm() <=
                    own_saved().goal_tolerance) {
                    release = true;
                }
            }
        }
        if (!release) return false;
        params[robot_id_] = own_saved();
        state_.active = false;
        state_.priority_order.clear();
        state_.saved_params.clear();
        return true;
    }

    /// Returns true when this call activated an episode.
    bool maybe_activate(const RolloutResult& result,
                        const FleetSnapshot& snapshot,
                        const std::vector<RobotModel>& models, double now,
                        std::vector<PlannerParams>& params) {
        if (state_.active || !result.deadlock) return false;
        std::set<int> involved_set;
        for (const auto& pair : result.deadlock_pairs) {
            involved_set.insert(pair.first);
            involved_set.insert(pair.second);
        }
        if (involved_set.count(robot_id_) == 0) return false;

        FleetSnapshot view = info_view(snapshot, models);
        const std::vector<int> involved(involved_set.begin(), involved_set.end());
        const auto order = assign_priority(view, models, involved, config_.seed,
                                           config_.tie_tolerance);

        // Apply the protocol on the view, then adopt only the own row.
        std::vector<PlannerParams> scratch = view.params;
        apply_resolution(state_, order, view, models, scratch, config_, now,
                         /*deadlock_active=*/true);
        params[robot_id_] = scratch[robot_id_];
        return true;
    }

private:
    const PlannerParams& own_saved() const {
        for (std::size_t rank = 0; rank < state_.priority_order.size(); ++rank) {
            if (state_.priority_order[rank] == robot_id_) {
                return state_.saved_params[rank];
            }
        }
        throw InvalidState("Supervisor: robot missing from its own episode");
    }

    int robot_id_;
    PlannerMode mode_;
    ResolutionConfig config_;
    RolloutConfig rollout_config_;
    ResolutionState state_;
};

struct ClearanceSample {
    double min_clearance = std::numeric_limits<double>::infinity();
    bool collision = false;
};

ClearanceSample clearance_check(const std::vector<RobotModel>& models,
                                const std::vector<RobotState>& states,
                                const std::vector<ObstacleState>& statics) {
    ClearanceSample sample;
    std::vector<std::vector<SphereState>> spheres(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        spheres[i] = collision_spheres(models[i], states[i]);
    }
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (std::size_t j = i + 1; j < models.size(); ++j) {
            for (const auto& a : spheres[i]) {
                for (const auto& b : spheres[j]) {
                    const double clearance =
                        (a.center - b.center).norm() - (a.radius + b.radius);
                    sample.min_clearance = std::min(sample.min_clearance, clearance);
                }
            }
        }
        for (const auto& a : spheres[i]) {
            for (const auto& obs : statics) {
                const double clearance =
                    (a.center - obs.center).norm() - (a.radius + obs.radius);
                sample.min_clearance = std::min(sample.min_clearance, clearance);
            }
        }
    }
    sample.collision = sample.min_clearance < 0.0;
    return sample;
}

double percentile(std::vector<double> values, double fraction) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double index = fraction * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(index));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(index));
    const double weight = index - static_cast<double>(lo);
    return values[lo] * (1.0 - weight) + values[hi] * weight;
}

struct Welford {
    int n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) {
        ++n;
        const double delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    double std_dev() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

}  // namespace

RunResult run(const Scenario& scenario, PlannerMode mode) {
    scenario.validate();
    const int n = static_cast<int>(scenario.robots.size());

    std::vector<RobotModel> models;
    models.reserve(n);
    for (const auto& robot : scenario.robots) models.push_back(robot.model);

    std::vector<MrdfPlanner> planners;
    planners.reserve(n);
    for (int i = 0; i < n; ++i) {
        planners.emplace_back(i, models, scenario.static_obstacles);
    }

    RolloutConfig rollout_config = scenario.rollout;
    rollout_config.dt = scenario.dt;
    rollout_config.mode =
        mode == PlannerMode::kRfCv ? RolloutMode::kRfCv : RolloutMode::kRf;

    FleetSnapshot snapshot;
    snapshot.timestamp = 0.0;
    std::vector<int> goal_index(n, 0);
    std::vector<double> dwell(n, 0.0);
    std::vector<bool> done(n, false);
    int total_goals = 0;
    int consumed = 0;
    for (int i = 0; i < n; ++i) {
        const auto& robot = scenario.robots[i];
        snapshot.states.push_back(RobotState{robot.q0, robot.qd0});
        PlannerParams params = robot.params;
        params.goal = robot.goals.front().point;
        snapshot.params.push_back(params);
        total_goals += static_cast<int>(robot.goals.size());
    }

    std::vector<Supervisor> supervisors;
    supervisors.reserve(n);
    for (int i = 0; i < n; ++i) supervisors.emplace_back(i, scenario, mode);

    RunResult result;
    RunMetrics& metrics = result.metrics;
    double min_clearance = std::numeric_limits<double>::infinity();
    std::vector<DeadlockEvent> events;

    const int max_steps = static_cast<int>(std::ceil(scenario.t_max / scenario.dt));
    result.log.reserve(static_cast<std::size_t>(max_steps) * n);
    result.step_times_ms.reserve(max_steps);

    for (int step = 0; step < max_steps; ++step) {
        const double t = static_cast<double>(step) * scenario.dt;
        snapshot.timestamp = t;

        const auto clearance =
            clearance_check(models, snapshot.states, scenario.static_obstacles);
        min_clearance = std::min(min_clearance, clearance.min_clearance);
        if (clearance.collision) metrics.collision = true;

        // Goal consumption (frozen while a resolution episode is active).
        bool any_active = false;
        for (const auto& supervisor : supervisors) {
            if (supervisor.active()) any_active = true;
        }
        if (!any_active) {
            for (int i = 0; i < n; ++i) {
                if (done[i]) continue;
                const Vector2d ee = end_effector(models[i], snapshot.states[i].q);
                const auto& goal = scenario.robots[i].goals[goal_index[i]];
                if ((ee - goal.point).norm() <=
                    snapshot.params[i].goal_tolerance) {
                    dwell[i] += scenario.dt;
                    if (dwell[i] >= scenario.dwell) {
                        ++consumed;
                        dwell[i] = 0.0;
                        ++goal_index[i];
                        if (goal_index[i] >=
                            static_cast<int>(scenario.robots[i].goals.size())) {
                            done[i] = true;
                        } else {
                            snapshot.params[i].goal =
                                scenario.robots[i].goals[goal_index[i]].point;
                        }
                    }
                } else {
                    dwell[i] = 0.0;
                }
            }
        }
        if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) {
            metrics.time_to_success = t;
            metrics.elapsed_sim_time = t;
            break;
        }
        metrics.elapsed_sim_time = t;

        // Planning block (timed): rollouts, supervision, policy evaluation.
        const auto planning_start = std::chrono::steady_clock::now();
        std::vector<Vector> accelerations(n);
        bool params_changed = false;
        bool rollouts_ok = false;
        std::vector<RolloutResult> rollouts;
        try {
            if (mode != PlannerMode::kMrdf) {
                rollouts.resize(n);
                try {
                    if (mode == PlannerMode::kRf) {
                        // Identical information: one shared rollout.
                        rollouts[0] = rollout(planners, snapshot, rollout_config);
                        for (int i = 1; i < n; ++i) rollouts[i] = rollouts[0];
                    } else {
                        for (int i = 0; i < n; ++i) {
                            rollouts[i] =
                                rollout(planners, snapshot, rollout_config, i);
                        }
                    }
                    rollouts_ok = true;
                } catch (const FabricsError&) {
                    // Prediction entered an invalid state; skip detection
                    // this step and keep executing.
                    rollouts_ok = false;
                }
                if (rollouts_ok) {
                    for (int i = 0; i < n; ++i) {
                        const bool released = supervisors[i].maybe_release(
                            rollouts[i], snapshot, models, t, snapshot.params);
                        if (released) {
                            params_changed = true;
                            for (auto it = events.rbegin(); it != events.rend();
                                 ++it) {
                                if (!it->release_time &&
                                    std::find(it->robots.begin(), it->robots.end(),
                                              i) != it->robots.end()) {
                                    it->release_time = t;
                                    break;
                                }
                            }
                        }
                    }
                    for (int i = 0; i < n; ++i) {
                        const bool activated = supervisors[i].maybe_activate(
                            rollouts[i], snapshot, models, t, snapshot.params);
                        if (activated) {
                            params_changed = true;
                            const auto& order =
                                supervisors[i].state().priority_order;
                            if (i == *std::min_element(order.begin(), order.end())) {
                                DeadlockEvent event;
                                event.detect_time = t;
                                event.robots = order;
                                std::sort(event.robots.begin(), event.robots.end());
                                events.push_back(std::move(event));
                            }
                        }
                    }
                }
            }

            if (rollouts_ok && !params_changed) {
                // The shared integrator and identical inputs make the k=0
                // rollout action bit-identical to a fresh plan.
                for (int i = 0; i < n; ++i) {
                    accelerations[i] = rollouts[i].accelerations[i][0];
                }
            } else {
                for (int i = 0; i < n; ++i) {
                    accelerations[i] = planners[i].plan_step(snapshot);
                }
            }
        } catch (const FabricsError& e) {
            metrics.planner_failure = true;
            metrics.failure_reason = e.what();
            break;
        }
        const auto planning_end = std::chrono::steady_clock::now();
        result.step_times_ms.push_back(
            std::chrono::duration<double, std::milli>(planning_end -
                                                      planning_start)
                .count());

        for (int i = 0; i < n; ++i) {
            result.log.push_back(TrajectoryRecord{
                t, i, snapshot.states[i].q, snapshot.states[i].qdot,
                accelerations[i]});
        }

        for (int i = 0; i < n; ++i) {
            Vector q_next;
            Vector qdot_next;
            integrate(snapshot.states[i].q, snapshot.states[i].qdot,
                      accelerations[i], scenario.dt, q_next, qdot_next);
            snapshot.states[i].q = std::move(q_next);
            snapshot.states[i].qdot = std::move(qdot_next);
        }
    }

    metrics.success_rate =
        total_goals > 0
            ? static_cast<double>(consumed) / static_cast<double>(total_goals)
            : 1.0;
    if (metrics.full_success() && std::isfinite(min_clearance)) {
        metrics.min_clearance = min_clearance;
    }
    if (!metrics.full_success()) {
        metrics.time_to_success.reset();
    }
    metrics.compute_median_ms = percentile(result.step_times_ms, 0.5);
    metrics.compute_p95_ms = percentile(result.step_times_ms, 0.95);
    metrics.deadlock_events = std::move(events);
    return result;
}

BatchResult batch(const Scenario& scenario_template, int n_runs,
                  const std::vector<PlannerMode>& modes) {
    if (n_runs < 1) throw ConfigError("batch: n_runs must be >= 1");
    if (modes.empty()) throw ConfigError("batch: at least one mode required");

    BatchResult result;
    for (int index = 0; index < n_runs; ++index) {
        const unsigned long long seed = scenario_template.seed + index;
        const Scenario randomized = randomize_goals(scenario_template, seed);
        for (const PlannerMode mode : modes) {
            RunResult run_result = run(randomized, mode);
            result.runs.push_back(BatchRun{seed, mode, run_result.metrics});
        }
    }

    for (const PlannerMode mode : modes) {
        ModeStats stats;
        stats.mode = mode;
        Welford success, time_to_success, clearance, compute;
        int collisions = 0;
        for (const auto& run_record : result.runs) {
            if (run_record.mode != mode) continue;
            ++stats.runs;
            success.add(run_record.metrics.success_rate);
            compute.add(run_record.metrics.compute_median_ms);
            if (run_record.metrics.collision) ++collisions;
            if (run_record.metrics.time_to_success) {
                time_to_success.add(*run_record.metrics.time_to_success);
            }
            if (run_record.metrics.min_clearance) {
                clearance.add(*run_record.metrics.min_clearance);
            }
            stats.deadlock_events +=
                static_cast<int>(run_record.metrics.deadlock_events.size());
            if (run_record.metrics.planner_failure) ++stats.planner_failures;
        }
        stats.success_rate_mean = success.mean;
        stats.success_rate_std = success.std_dev();
        if (time_to_success.n > 0) {
            stats.time_to_success_mean = time_to_success.mean;
            stats.time_to_success_std = time_to_success.std_dev();
        }
        stats.collision_rate =
            stats.runs > 0 ? static_cast<double>(collisions) / stats.runs : 0.0;
        if (clearance.n > 0) {
            stats.min_clearance_mean = clearance.mean;
            stats.min_clearance_std = clearance.std_dev();
        }
        stats.compute_median_ms_mean = compute.mean;
        stats.compute_median_ms_std = compute.std_dev();
        result.stats.push_back(stats);
    }
    return result;
}

std::string format_stats_table(const BatchResult& result) {
    const auto cell = [](double mean, double std_dev) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", mean, std_dev);
        return std::string(buf);
    };
    const auto opt_cell = [&cell](const std::optional<double>& mean,
                                  const std::optional<double>& std_dev) {
        return mean ? cell(*mean, std_dev.value_or(0.0)) : std::string("-");
    };

    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-6s %-18s %-20s %-15s %-20s %-18s\n",
                  "mode", "success-rate", "time-to-success[s]", "collision-rate",
                  "min-clearance[m]", "compute[ms]");
    out << line;
    for (const auto& stats : result.stats) {
        char rate[32];
        std::snprintf(rate, sizeof(rate), "%.2f", stats.collision_rate);
        std::snprintf(
            line, sizeof(line), "%-6s %-18s %-20s %-15s %-20s %-18s\n",
            to_string(stats.mode).c_str(),
            cell(stats.success_rate_mean, stats.success_rate_std).c_str(),
            opt_cell(stats.time_to_success_mean, stats.time_to_success_std)
                .c_str(),
            rate,
            opt_cell(stats.min_clearance_mean, stats.min_clearance_std).c_str(),
            cell(stats.compute_median_ms_mean, stats.compute_median_ms_std)
                .c_str());
        out << line;
    }
    return out.str();
}

std::string trajectory_csv(const std::vector<TrajectoryRecord>& log, int dof) {
    std::ostringstream out;
    out << "t,robot";
    for (int j = 0; j < dof; ++j) out << ",q" << j;
    for (int j = 0; j < dof; ++j) out << ",qd" << j;
    for (int j = 0; j < dof; ++j) out << ",qdd" << j;
    out << "\n";
    char buf[32];
    for (const auto& record : log) {
        std::snprintf(buf, sizeof(buf), "%.17g", record.t);
        out << buf << "," << record.robot;
        const auto append = [&out, &buf](const Vector& v) {
            for (int j = 0; j < v.size(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", v(j));
                out << "," << buf;
            }
        };
        append(record.q);
        append(record.qdot);
        append(record.qddot);
        out << "\n";
    }
    return out.str();
}

}  // namespace fabrics

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fabrics/scenario.hpp"

namespace fabrics {

enum class PlannerMode { kMrdf, kRf, kRfCv };

std::string to_string(PlannerMode mode);
PlannerMode mode_from_string(const std::string& name);

struct DeadlockEvent {
    double detect_time = 0.0;
    std::optional<double> release_time;  ///< absent if still active at the end
    std::vector<int> robots;
};

struct RunMetrics {
    double success_rate = 0.0;  ///< consumed goals / total goals
    std::optional<double> time_to_success;  ///< present only on full success
    bool collision = false;
    std::optional<double> min_clearance;  ///< present only on full success
    double compute_median_ms = 0.0;
    double compute_p95_ms = 0.0;
    std::vector<DeadlockEvent> deadlock_events;
    bool planner_failure = false;
    std::string failure_reason;
    double elapsed_sim_time = 0.0;

    bool full_success() const { return success_rate >= 1.0; }
};

/// One logged step of one robot: the state at time t and the acceleration
/// applied over [t, t + dt).
struct TrajectoryRecord {
    double t = 0.0;
    int robot = 0;
    Vector q;
    Vector qdot;
    Vector qddot;
};

struct RunResult {
    RunMetrics metrics;
    std::vector<TrajectoryRecord> log;
    /// Fleet snapshots matching the log, kept for test replay convenience.
    std::vector<double> step_times_ms;
};

/// Executes one scenario in the given mode: plan, (optionally) roll out and
/// resolve deadlocks, integrate, and collect metrics and a trajectory log.
RunResult run(const Scenario& scenario, PlannerMode mode);

struct ModeStats {
    PlannerMode mode = PlannerMode::kMrdf;
    int runs = 0;
    double success_rate_mean = 0.0;
    double success_rate_std = 0.0;
    std::optional<double> time_to_success_mean;
    std::optional<double> time_to_success_std;
    double collision_rate = 0.0;
    std::optional<double> min_clearance_mean;
    std::optional<double> min_clearance_std;
    double compute_median_ms_mean = 0.0;
    double compute_median_ms_std = 0.0;
    int deadlock_events = 0;
    int planner_failures = 0;
};

struct BatchRun {
    unsigned long long seed = 0;
    PlannerMode mode = PlannerMode::kMrdf;
    RunMetrics metrics;
};

struct BatchResult {
    std::vector<ModeStats> stats;
    std::vector<BatchRun> runs;
};

/// Runs `n_runs` randomized instances of the template per mode. Seeds are
/// scenario.seed + run index; goal positions are resampled per seed.
BatchResult batch(const Scenario& scenario_template, int n_runs,
                  const std::vector<PlannerMode>& modes);

/// Fixed-width human-readable statistics table.
std::string format_stats_table(const BatchResult& result);

/// Trajectory CSV with header t,robot,q...,qd...,qdd...
std::string trajectory_csv(const std::vector<TrajectoryRecord>& log, int dof);

}  // namespace fabrics

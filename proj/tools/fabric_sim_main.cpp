// Simulation CLI: run scenarios, batch benchmarks and horizon sweeps.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fabrics/sim_harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int log_level() {
    const char* env = std::getenv("FABRICS_LOG");
    if (env == nullptr) return 1;
    const std::string value(env);
    if (value == "quiet") return 0;
    if (value == "debug") return 2;
    return 1;
}

void info(const std::string& message) {
    if (log_level() >= 1) std::cerr << message << "\n";
}

json metrics_to_json(const fabrics::RunMetrics& metrics) {
    json j;
    j["success_rate"] = metrics.success_rate;
    if (metrics.time_to_success) j["time_to_success_s"] = *metrics.time_to_success;
    j["collision"] = metrics.collision;
    if (metrics.min_clearance) j["min_clearance_m"] = *metrics.min_clearance;
    j["compute_median_ms"] = metrics.compute_median_ms;
    j["compute_p95_ms"] = metrics.compute_p95_ms;
    j["elapsed_sim_time_s"] = metrics.elapsed_sim_time;
    j["planner_failure"] = metrics.planner_failure;
    if (metrics.planner_failure) j["failure_reason"] = metrics.failure_reason;
    j["deadlock_events"] = json::array();
    for (const auto& event : metrics.deadlock_events) {
        json e;
        e["detect_time_s"] = event.detect_time;
        if (event.release_time) e["release_time_s"] = *event.release_time;
        e["robots"] = event.robots;
        j["deadlock_events"].push_back(e);
    }
    return j;
}

json stats_to_json(const fabrics::BatchResult& result) {
    json j;
    j["modes"] = json::array();
    for (const auto& stats : result.stats) {
        json m;
        m["mode"] = fabrics::to_string(stats.mode);
        m["runs"] = stats.runs;
        m["success_rate_mean"] = stats.success_rate_mean;
        m["success_rate_std"] = stats.success_rate_std;
        if (stats.time_to_success_mean) {
            m["time_to_success_mean_s"] = *stats.time_to_success_mean;
            m["time_to_success_std_s"] = *stats.time_to_success_std;
        }
        m["collision_rate"] = stats.collision_rate;
        if (stats.min_clearance_mean) {
            m["min_clearance_mean_m"] = *stats.min_clearance_mean;
            m["min_clearance_std_m"] = *stats.min_clearance_std;
        }
        m["compute_median_ms_mean"] = stats.compute_median_ms_mean;
        m["compute_median_ms_std"] = stats.compute_median_ms_std;
        m["deadlock_events"] = stats.deadlock_events;
        m["planner_failures"] = stats.planner_failures;
        j["modes"].push_back(m);
    }
    j["runs"] = json::array();
    for (const auto& record : result.runs) {
        json r;
        r["seed"] = record.seed;
        r["mode"] = fabrics::to_string(record.mode);
        r["metrics"] = metrics_to_json(record.metrics);
        j["runs"].push_back(r);
    }
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream file(path);
    if (!file.is_open()) {
        throw fabrics::ConfigError("cannot write file: " + path.string());
    }
    file << content;
}

std::vector<fabrics::PlannerMode> parse_modes(const std::string& csv) {
    std::vector<fabrics::PlannerMode> modes;
    std::istringstream stream(csv);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (!token.empty()) modes.push_back(fabrics::mode_from_string(token));
    }
    if (modes.empty()) throw fabrics::ConfigError("no modes given");
    return modes;
}

int do_run(const std::string& scenario_path, const std::string& mode_name,
           int horizon, long long seed, const std::string& out_dir) {
    fabrics::Scenario scenario = fabrics::load_scenario(scenario_path);
    if (horizon > 0) {
        scenario.rollout.steps = horizon;
        scenario.rollout.lookahead = horizon;
    }
    if (seed >= 0) {
        scenario = fabrics::randomize_goals(
            scenario, static_cast<unsigned long long>(seed));
    }
    const auto mode = fabrics::mode_from_string(mode_name);
    info("running " + scenario_path + " in mode " + mode_name);
    const auto result = fabrics::run(scenario, mode);

    json j = metrics_to_json(result.metrics);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const int dof = scenario.robots.front().model.dof();
        write_file(fs::path(out_dir) / "trajectory.csv",
                   fabrics::trajectory_csv(result.log, dof));
        write_file(fs::path(out_dir) / "metrics.json", j.dump(2) + "\n");
        info("wrote " + (fs::path(out_dir) / "trajectory.csv").string());
    }
    std::cout << j.dump(2) << "\n";
    if (result.metrics.planner_failure) return 3;
    return 0;
}

int do_batch(const std::string& scenario_path, int runs,
             const std::string& modes_csv, long long seed,
             const std::string& out_dir) {
    fabrics::Scenario scenario = fabrics::load_scenario(scenario_path);
    if (seed >= 0) scenario.seed = static_cast<unsigned long long>(seed);
    const auto modes = parse_modes(modes_csv);
    info("batch: " + std::to_string(runs) + " randomized runs per mode");
    const auto result = fabrics::batch(scenario, runs, modes);

    const std::string table = fabrics::format_stats_table(result);
    std::cout << table;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "statistics.txt", table);
        write_file(fs::path(out_dir) / "statistics.json",
                   stats_to_json(result).dump(2) + "\n");
        info("wrote " + (fs::path(out_dir) / "statistics.json").string());
    }
    for (const auto& record : result.runs) {
        if (record.metrics.planner_failure) return 3;
    }
    return 0;
}

int do_bench_horizon(const std::string& scenario_path,
                     const std::string& horizons_csv, double window_s,
                     const std::string& out_dir) {
    fabrics::Scenario scenario = fabrics::load_scenario(scenario_path);
    scenario.t_max = window_s;

    std::vector<int> horizons;
    std::istringstream stream(horizons_csv);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (!token.empty()) horizons.push_back(std::stoi(token));
    }
    if (horizons.empty()) throw fabrics::ConfigError("no horizons given");

    json j;
    j["horizons"] = json::array();
    std::printf("%-8s %-14s %-14s\n", "K", "median[ms]", "p95[ms]");
    double previous = 0.0;
    bool monotone = true;
    for (const int k : horizons) {
        fabrics::Scenario variant = scenario;
        variant.rollout.steps = k;
        variant.rollout.lookahead = k;
        const auto result = fabrics::run(variant, fabrics::PlannerMode::kRf);
        const double median = result.metrics.compute_median_ms;
        std::printf("%-8d %-14.3f %-14.3f\n", k, median,
                    result.metrics.compute_p95_ms);
        json record;
        record["K"] = k;
        record["median_ms"] = median;
        record["p95_ms"] = result.metrics.compute_p95_ms;
        j["horizons"].push_back(record);
        if (median < previous) monotone = false;
        previous = median;
    }
    j["monotone_non_decreasing"] = monotone;
    std::printf("monotone non-decreasing: %s\n", monotone ? "yes" : "no");
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "horizon_bench.json", j.dump(2) + "\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar multi-robot fabric motion-planning simulator"};
    app.require_subcommand(1);

    std::string scenario_path, mode_name = "rf", out_dir, modes_csv = "mrdf,rf";
    std::string horizons_csv = "5,10,20,40,80";
    int horizon = 0, runs = 10;
    long long seed = -1;
    double window_s = 2.0;

    auto* run_cmd = app.add_subcommand("run", "Run one scenario");
    run_cmd->add_option("scenario", scenario_path, "Scenario file")->required();
    run_cmd->add_option("--mode", mode_name, "mrdf | rf | rf-cv");
    run_cmd->add_option("--horizon", horizon, "Override prediction steps K");
    run_cmd->add_option("--seed", seed, "Randomize goals with this seed");
    run_cmd->add_option("--out", out_dir, "Output directory");

    auto* batch_cmd = app.add_subcommand("batch", "Randomized benchmark");
    batch_cmd->add_option("scenario", scenario_path, "Scenario template")
        ->required();
    batch_cmd->add_option("--runs", runs, "Number of randomized runs");
    batch_cmd->add_option("--modes", modes_csv, "Comma-separated modes");
    batch_cmd->add_option("--seed", seed, "Base seed (default: scenario seed)");
    batch_cmd->add_option("--out", out_dir, "Output directory");

    auto* bench_cmd =
        app.add_subcommand("bench-horizon", "Compute-time scaling over K");
    bench_cmd->add_option("scenario", scenario_path, "Scenario file")
        ->required();
    bench_cmd->add_option("--horizons", horizons_csv, "Comma-separated K values");
    bench_cmd->add_option("--window", window_s,
                          "Simulated seconds per measurement");
    bench_cmd->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) {
            return do_run(scenario_path, mode_name, horizon, seed, out_dir);
        }
        if (batch_cmd->parsed()) {
            return do_batch(scenario_path, runs, modes_csv, seed, out_dir);
        }
        return do_bench_horizon(scenario_path, horizons_csv, window_s, out_dir);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const fabrics::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fabrics::FabricsError& e) {
        std::cerr << "planner error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

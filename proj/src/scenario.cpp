#include "fabrics/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fabrics {

namespace {

struct Line {
    int number = 0;
    std::vector<std::string> tokens;
};

std::vector<Line> tokenize(const std::string& text) {
    std::vector<Line> lines;
    std::istringstream stream(text);
    std::string raw;
    int number = 0;
    while (std::getline(stream, raw)) {
        ++number;
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream line_stream(raw);
        Line line{number, {}};
        std::string token;
        while (line_stream >> token) line.tokens.push_back(token);
        if (!line.tokens.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

[[noreturn]] void fail(const Line& line, const std::string& message) {
    throw ConfigError("scenario line " + std::to_string(line.number) + ": " +
                      message);
}

double to_double(const Line& line, const std::string& token) {
    try {
        std::size_t used = 0;
        const double value = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        fail(line, "expected a number, got '" + token + "'");
    }
}

long long to_int(const Line& line, const std::string& token) {
    try {
        std::size_t used = 0;
        const long long value = std::stoll(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return value;
    } catch (const std::exception&) {
        fail(line, "expected an integer, got '" + token + "'");
    }
}

void expect_values(const Line& line, std::size_t count) {
    if (line.tokens.size() != count + 1) {
        fail(line, "'" + line.tokens[0] + "' expects " + std::to_string(count) +
                       " value(s)");
    }
}

bool is_block_open(const Line& line) {
    return line.tokens.back() == "{";
}

/// Skips to the matching closing brace (used for error recovery is not
/// needed; unknown blocks are rejected instead).
struct RobotDraft {
    std::optional<BasePose> base;
    std::vector<double> links;
    std::vector<std::pair<double, double>> limits;
    std::vector<SphereSpec> spheres;
    std::vector<double> q0, qd0;
    std::vector<GoalSpec> goals;
    double attractor_weight = 2.0;
    double damping = 0.8;
    double collision_gain = 1.0;
    double limit_gain = 1.0;
    double goal_tolerance = 0.02;
    double attractor_gain = 1.0;
    double attractor_smoothing = 0.1;
    double attractor_metric = 1.0;
};

void parse_params_block(const std::vector<Line>& lines, std::size_t& idx,
                        RobotDraft& draft) {
    for (; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        const std::string& key = line.tokens[0];
        if (key == "}") return;
        expect_values(line, 1);
        const double value = to_double(line, line.tokens[1]);
        if (key == "attractor_weight") draft.attractor_weight = value;
        else if (key == "damping") draft.damping = value;
        else if (key == "collision_gain") draft.collision_gain = value;
        else if (key == "limit_gain") draft.limit_gain = value;
        else if (key == "goal_tolerance") draft.goal_tolerance = value;
        else if (key == "attractor_gain") draft.attractor_gain = value;
        else if (key == "attractor_smoothing") draft.attractor_smoothing = value;
        else if (key == "attractor_metric") draft.attractor_metric = value;
        else fail(line, "unknown params key '" + key + "'");
    }
    throw ConfigError("scenario: unterminated params block");
}

GoalSpec parse_goal(const Line& line) {
    if (line.tokens.size() < 3) fail(line, "goal expects at least x y");
    GoalSpec goal;
    goal.point = Vector2d(to_double(line, line.tokens[1]),
                          to_double(line, line.tokens[2]));
    std::size_t idx = 3;
    while (idx < line.tokens.size()) {
        const std::string& attr = line.tokens[idx];
        if (attr == "fixed") {
            goal.randomize = false;
            ++idx;
        } else if (attr == "random") {
            goal.randomize = true;
            ++idx;
        } else if (attr == "region") {
            if (idx + 4 >= line.tokens.size() + 0 &&
                line.tokens.size() < idx + 5) {
                fail(line, "region expects x0 y0 x1 y1");
            }
            goal.randomize = true;
            goal.region = Eigen::Vector4d(to_double(line, line.tokens[idx + 1]),
                                          to_double(line, line.tokens[idx + 2]),
                                          to_double(line, line.tokens[idx + 3]),
                                          to_double(line, line.tokens[idx + 4]));
            idx += 5;
        } else {
            fail(line, "unknown goal attribute '" + attr + "'");
        }
    }
    return goal;
}

RobotScenario parse_robot_block(const std::vector<Line>& lines,
                                std::size_t& idx) {
    RobotDraft draft;
    for (; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        const std::string& key = line.tokens[0];
        if (key == "}") {
            if (draft.links.empty()) fail(line, "robot block requires 'links'");
            const int dof = static_cast<int>(draft.links.size());
            if (draft.limits.empty()) {
                draft.limits.assign(dof, {-2.9, 2.9});
            }
            if (draft.spheres.empty()) {
                for (int link = 0; link < dof; ++link) {
                    draft.spheres.push_back({link, 0.33, 0.08});
                    draft.spheres.push_back({link, 0.83, 0.08});
                }
            }
            if (draft.q0.empty()) draft.q0.assign(dof, 0.0);
            if (draft.qd0.empty()) draft.qd0.assign(dof, 0.0);
            if (static_cast<int>(draft.q0.size()) != dof ||
                static_cast<int>(draft.qd0.size()) != dof ||
                static_cast<int>(draft.limits.size()) != dof) {
                fail(line, "robot q0/qd0/limit counts must match link count");
            }
            if (draft.goals.empty()) fail(line, "robot block requires a goal");

            RobotModel model(draft.links, draft.base.value_or(BasePose{}),
                             draft.limits, draft.spheres);
            RobotScenario robot{
                model,
                Eigen::Map<const Vector>(draft.q0.data(), dof),
                Eigen::Map<const Vector>(draft.qd0.data(), dof),
                draft.goals,
                PlannerParams::defaults(dof, draft.goals.front().point)};
            robot.params.attractor_weight = draft.attractor_weight;
            robot.params.damping = draft.damping * Matrix::Identity(dof, dof);
            robot.params.collision_gain = draft.collision_gain;
            robot.params.limit_gain = draft.limit_gain;
            robot.params.goal_tolerance = draft.goal_tolerance;
            robot.params.attractor_gain = draft.attractor_gain;
            robot.params.attractor_smoothing = draft.attractor_smoothing;
            robot.params.attractor_metric = draft.attractor_metric;
            return robot;
        }
        if (key == "params" && is_block_open(line)) {
            ++idx;
            parse_params_block(lines, idx, draft);
            continue;
        }
        if (key == "base") {
            expect_values(line, 3);
            draft.base = BasePose{to_double(line, line.tokens[1]),
                                  to_double(line, line.tokens[2]),
                                  to_double(line, line.tokens[3])};
        } else if (key == "links") {
            for (std::size_t i = 1; i < line.tokens.size(); ++i) {
                draft.links.push_back(to_double(line, line.tokens[i]));
            }
        } else if (key == "limit") {
            expect_values(line, 2);
            draft.limits.emplace_back(to_double(line, line.tokens[1]),
                                      to_double(line, line.tokens[2]));
        } else if (key == "sphere") {
            expect_values(line, 3);
            draft.spheres.push_back(
                SphereSpec{static_cast<int>(to_int(line, line.tokens[1])),
                           to_double(line, line.tokens[2]),
                           to_double(line, line.tokens[3])});
        } else if (key == "q0") {
            for (std::size_t i = 1; i < line.tokens.size(); ++i) {
                draft.q0.push_back(to_double(line, line.tokens[i]));
            }
        } else if (key == "qd0") {
            for (std::size_t i = 1; i < line.tokens.size(); ++i) {
                draft.qd0.push_back(to_double(line, line.tokens[i]));
            }
        } else if (key == "goal") {
            draft.goals.push_back(parse_goal(line));
        } else {
            fail(line, "unknown robot key '" + key + "'");
        }
    }
    throw ConfigError("scenario: unterminated robot block");
}

void parse_rollout_block(const std::vector<Line>& lines, std::size_t& idx,
                         RolloutConfig& config) {
    for (; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        const std::string& key = line.tokens[0];
        if (key == "}") return;
        expect_values(line, 1);
        if (key == "steps") config.steps = static_cast<int>(to_int(line, line.tokens[1]));
        else if (key == "dt") config.dt = to_double(line, line.tokens[1]);
        else if (key == "v_min") config.v_min = to_double(line, line.tokens[1]);
        else if (key == "ee_distance") config.ee_distance = to_double(line, line.tokens[1]);
        else if (key == "t_min") config.t_min = to_double(line, line.tokens[1]);
        else if (key == "lookahead") config.lookahead = static_cast<int>(to_int(line, line.tokens[1]));
        else fail(line, "unknown rollout key '" + key + "'");
    }
    throw ConfigError("scenario: unterminated rollout block");
}

void parse_resolution_block(const std::vector<Line>& lines, std::size_t& idx,
                            ResolutionConfig& config) {
    for (; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        const std::string& key = line.tokens[0];
        if (key == "}") return;
        expect_values(line, 1);
        if (key == "gamma_high") config.gamma_high = to_double(line, line.tokens[1]);
        else if (key == "retreat") config.retreat_distance = to_double(line, line.tokens[1]);
        else if (key == "seed") config.seed = static_cast<unsigned long long>(to_int(line, line.tokens[1]));
        else if (key == "tie_tolerance") config.tie_tolerance = to_double(line, line.tokens[1]);
        else fail(line, "unknown resolution key '" + key + "'");
    }
    throw ConfigError("scenario: unterminated resolution block");
}

void parse_workspace_block(const std::vector<Line>& lines, std::size_t& idx,
                           Workspace& workspace) {
    for (; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        const std::string& key = line.tokens[0];
        if (key == "}") return;
        if (key == "bounds") {
            expect_values(line, 4);
            workspace.x0 = to_double(line, line.tokens[1]);
            workspace.y0 = to_double(line, line.tokens[2]);
            workspace.x1 = to_double(line, line.tokens[3]);
            workspace.y1 = to_double(line, line.tokens[4]);
        } else if (key == "min_separation") {
            expect_values(line, 1);
            workspace.min_separation = to_double(line, line.tokens[1]);
        } else if (key == "reach_margin") {
            expect_values(line, 1);
            workspace.reach_margin = to_double(line, line.tokens[1]);
        } else {
            fail(line, "unknown workspace key '" + key + "'");
        }
    }
    throw ConfigError("scenario: unterminated workspace block");
}

}  // namespace

void Scenario::validate() const {
    if (robots.empty()) throw ConfigError("scenario: at least one robot required");
    if (!(t_max > 0.0)) throw ConfigError("scenario: t_max must be > 0");
    if (!(dt > 0.0)) throw ConfigError("scenario: dt must be > 0");
    if (!(dwell >= 0.0)) throw ConfigError("scenario: dwell must be >= 0");
    rollout.validate();
    resolution.validate();
    for (std::size_t i = 0; i < robots.size(); ++i) {
        const auto& robot = robots[i];
        const int dof = robot.model.dof();
        if (robot.q0.size() != dof || robot.qd0.size() != dof) {
            throw ConfigError("scenario: robot " + std::to_string(i) +
                              " initial state size mismatch");
        }
        for (int j = 0; j < dof; ++j) {
            const auto& [lower, upper] = robot.model.joint_limits()[j];
            if (!(robot.q0(j) > lower && robot.q0(j) < upper)) {
                throw ConfigError("scenario: robot " + std::to_string(i) +
                                  " starts outside joint limits");
            }
        }
        if (robot.goals.empty()) {
            throw ConfigError("scenario: robot " + std::to_string(i) +
                              " has no goals");
        }
        robot.params.validate(dof);
    }
    for (const auto& obstacle : static_obstacles) {
        if (!(obstacle.radius > 0.0)) {
            throw ConfigError("scenario: obstacle radius must be > 0");
        }
    }
}

Scenario parse_scenario(const std::string& text) {
    const auto lines = tokenize(text);
    Scenario scenario;
    for (std::size_t idx = 0; idx < lines.size(); ++idx) {
        const Line& line = lines[idx];
        const std::string& key = line.tokens[0];
        if (key == "robot" && is_block_open(line)) {
            ++idx;
            scenario.robots.push_back(parse_robot_block(lines, idx));
        } else if (key == "rollout" && is_block_open(line)) {
            ++idx;
            parse_rollout_block(lines, idx, scenario.rollout);
        } else if (key == "resolution" && is_block_open(line)) {
            ++idx;
            parse_resolution_block(lines, idx, scenario.resolution);
        } else if (key == "workspace" && is_block_open(line)) {
            ++idx;
            parse_workspace_block(lines, idx, scenario.workspace);
        } else if (key == "obstacle") {
            expect_values(line, 3);
            scenario.static_obstacles.push_back(
                ObstacleState{Vector2d(to_double(line, line.tokens[1]),
                                       to_double(line, line.tokens[2])),
                              Vector2d::Zero(),
                              to_double(line, line.tokens[3])});
        } else if (key == "t_max") {
            expect_values(line, 1);
            scenario.t_max = to_double(line, line.tokens[1]);
        } else if (key == "dt") {
            expect_values(line, 1);
            scenario.dt = to_double(line, line.tokens[1]);
        } else if (key == "seed") {
            expect_values(line, 1);
            scenario.seed = static_cast<unsigned long long>(
                to_int(line, line.tokens[1]));
        } else if (key == "dwell") {
            expect_values(line, 1);
            scenario.dwell = to_double(line, line.tokens[1]);
        } else {
            fail(line, "unknown key '" + key + "'");
        }
    }
    scenario.rollout.dt = scenario.dt;
    scenario.validate();
    return scenario;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream file(path);
    if (!file.is_open()) {
        throw ConfigError("cannot open scenario file: " + path);
    }
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_scenario(buffer.str());
}

Scenario randomize_goals(const Scenario& scenario, unsigned long long seed) {
    Scenario out = scenario;
    out.seed = seed;
    std::mt19937_64 rng(seed);
    const auto& ws = scenario.workspace;

    auto sample_point = [&rng](double x0, double y0, double x1,
                               double y1) -> Vector2d {
        std::uniform_real_distribution<double> dx(std::min(x0, x1),
                                                  std::max(x0, x1));
        std::uniform_real_distribution<double> dy(std::min(y0, y1),
                                                  std::max(y0, y1));
        const double x = dx(rng);
        const double y = dy(rng);
        return Vector2d(x, y);
    };

    // A goal participates in separation checks once its position is final:
    // fixed goals immediately, randomized ones after they are sampled.
    std::vector<std::vector<bool>> final_flags(out.robots.size());
    for (std::size_t i = 0; i < out.robots.size(); ++i) {
        for (const auto& goal : out.robots[i].goals) {
            final_flags[i].push_back(!goal.randomize);
        }
    }

    for (std::size_t i = 0; i < out.robots.size(); ++i) {
        auto& robot = out.robots[i];
        const Vector2d base(robot.model.base_pose().x,
                            robot.model.base_pose().y);
        const double max_reach = ws.reach_margin * robot.model.reach();
        for (std::size_t g = 0; g < robot.goals.size(); ++g) {
            auto& goal = robot.goals[g];
            if (!goal.randomize) continue;
            bool placed = false;
            for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
                Vector2d candidate =
                    goal.region
                        ? sample_point((*goal.region)(0), (*goal.region)(1),
                                       (*goal.region)(2), (*goal.region)(3))
                        : sample_point(ws.x0, ws.y0, ws.x1, ws.y1);
                if ((candidate - base).norm() > max_reach) continue;
                bool clear = true;
                for (const auto& obstacle : out.static_obstacles) {
                    if ((candidate - obstacle.center).norm() <=
                        obstacle.radius + 0.05) {
                        clear = false;
                        break;
                    }
                }
                if (clear && ws.min_separation > 0.0) {
                    for (std::size_t p = 0; p < out.robots.size() && clear; ++p) {
                        if (p == i) continue;
                        for (std::size_t og = 0; og < out.robots[p].goals.size();
                             ++og) {
                            if (!final_flags[p][og]) continue;
                            if ((candidate - out.robots[p].goals[og].point)
                                    .norm() < ws.min_separation) {
                                clear = false;
                                break;
                            }
                        }
                    }
                }
                if (!clear) continue;
                goal.point = candidate;
                final_flags[i][g] = true;
                placed = true;
            }
            if (!placed) {
                throw ConfigError(
                    "randomize_goals: could not place a goal for robot " +
                    std::to_string(i) + " under the workspace constraints");
            }
        }
        robot.params.goal = robot.goals.front().point;
    }
    return out;
}

}  // namespace fabrics

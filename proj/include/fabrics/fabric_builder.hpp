#pragma once

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "fabrics/kinematics.hpp"
#include "fabrics/spec_algebra.hpp"

namespace fabrics {

/// Per-robot planner parameters (the parameter vector theta).
struct PlannerParams {
    Vector2d goal = Vector2d::Zero();   ///< meters
    double attractor_weight = 2.0;      ///< gamma
    Matrix damping;                     ///< B, dof x dof, symmetric positive definite
    double collision_gain = 1.0;        ///< barrier gain for obstacle leaves
    double limit_gain = 1.0;            ///< barrier gain for joint-limit leaves
    double goal_tolerance = 0.02;       ///< meters
    double attractor_gain = 1.0;        ///< k: far-field gradient magnitude
    double attractor_smoothing = 0.1;   ///< s: softening length near the goal, meters
    double attractor_metric = 1.0;      ///< task-space metric scale of the goal leaf

    static PlannerParams defaults(int dof, const Vector2d& goal);
    void validate(int dof) const;
};

/// Moving circular obstacle as seen by one robot at one instant.
struct ObstacleState {
    Vector2d center;
    Vector2d velocity;
    double radius;
};

/// Repulsive barrier on a positive clearance coordinate d:
/// h(d, dd) = -gain * dd^2 / d^2 when approaching (dd < 0), else 0, paired
/// with the Finsler energy L = 1/2 (1/d) dd^2. Both are homogeneous of
/// degree 2 in dd. Evaluation at d <= 0 throws NonpositiveDistance.
std::pair<Geometry, EnergyLagrangian> avoidance_geometry(double gain);

/// Same barrier family on a joint-limit margin coordinate.
std::pair<Geometry, EnergyLagrangian> limit_geometry(double gain);

/// Margin coordinate of one joint-limit side as a differential map:
/// d = q_j - lower (side = +1) or d = upper - q_j (side = -1).
DifferentialMap limit_margin_map(int dof, int joint, double bound, int side);

/// 1-D map v -> |v| - radius_sum on a 2-D coordinate, with the chain-rule
/// Jacobian and curvature of the norm. Throws GradientSingularity when the
/// centers coincide.
DifferentialMap norm_distance_map(double radius_sum);

/// Clearance d(q) = |fk_sphere(q) - obstacle_center| - (r_a + r_b) composed
/// through a sphere map.
DifferentialMap distance_map(const DifferentialMap& sphere_map,
                             const Vector2d& obstacle_center, double radius_a,
                             double radius_b);

/// Goal potential with bounded far-field gradient:
/// psi(x) = k (|e| + s ln(1 + exp(-2|e|/s))), e = x - goal.
/// The gradient is k tanh(|e|/s) e/|e|, smooth at the goal.
struct Attractor {
    Vector2d goal;
    double gain = 1.0;       ///< k
    double smoothing = 0.1;  ///< s, meters

    double psi(const Vector2d& x) const;
    Vector2d gradient(const Vector2d& x) const;
};

struct PolicyDiagnostics {
    bool metric_regularized = false;
};

/// Optional component toggles for build_policy.
struct PolicyComponents {
    bool collision_avoidance = true;
    bool joint_limits = true;
    bool attractor = true;
    /// Extra configuration-space specs summed into the combined system.
    std::vector<Spec> extra_specs;
};

/// Compiled per-robot trajectory-generation policy: energizes, pulls and
/// sums all components and solves the forced, damped system
/// M qdd + f + gamma J' grad(psi) + B qd = 0 for qdd.
class FabricPolicy {
public:
    FabricPolicy(RobotModel model, PolicyComponents components);

    const RobotModel& model() const { return model_; }
    int dof() const { return model_.dof(); }

    /// Fast evaluation path with closed-form leaf arithmetic.
    Vector evaluate(const Vector& q, const Vector& qdot,
                    std::span<const ObstacleState> obstacles,
                    const PlannerParams& params,
                    PolicyDiagnostics* diagnostics = nullptr) const;

    /// Reference path composing the generic spec algebra; used to
    /// cross-check evaluate().
    Vector evaluate_via_algebra(const Vector& q, const Vector& qdot,
                                std::span<const ObstacleState> obstacles,
                                const PlannerParams& params,
                                PolicyDiagnostics* diagnostics = nullptr) const;

    /// Sum of all component Lagrangian energies at the given state
    /// (conserved by the unforced, undamped flow).
    double component_energy(const Vector& q, const Vector& qdot,
                            std::span<const ObstacleState> obstacles,
                            const PlannerParams& params) const;

private:
    RobotModel model_;
    PolicyComponents components_;
    std::vector<DifferentialMap> sphere_maps_;  // one per own collision sphere
    DifferentialMap ee_map_;
};

FabricPolicy build_policy(RobotModel model, PolicyComponents components = {});

/// Solves M qdd + f + gamma * forcing + B qd = 0 with the condition guard:
/// if cond(M) exceeds 1e12 the metric is regularized by 1e-9 I and the
/// diagnostics flag is set.
Vector solve_forced_system(const Matrix& metric, const Vector& force,
                           const Vector& forcing, const Matrix& damping,
                           const Vector& qdot,
                           PolicyDiagnostics* diagnostics = nullptr);

}  // namespace fabrics

#include "fabrics/fabric_builder.hpp"

#include <cmath>
#include <string>

namespace fabrics {

namespace {

constexpr double kNormSingularity = 1e-12;
constexpr double kRegularization = 1e-9;

double barrier_h(double gain, double d, double ddot) {
    if (d <= 0.0) {
        throw NonpositiveDistance("barrier evaluated at clearance " +
                                  std::to_string(d));
    }
    if (ddot >= 0.0) return 0.0;
    return -gain * ddot * ddot / (d * d);
}

/// Energized 1-D barrier force. With the metric 1/d the projector
/// annihilates everything along the single coordinate, so away from rest
/// the energized force is the Lagrangian force itself.
double energized_barrier_force(double gain, double d, double ddot) {
    if (d <= 0.0) {
        throw NonpositiveDistance("barrier evaluated at clearance " +
                                  std::to_string(d));
    }
    const double metric = 1.0 / d;
    const double denom = ddot * ddot * metric;
    if (denom <= kProjectorTolerance) {
        return metric * barrier_h(gain, d, ddot);
    }
    return -0.5 * ddot * ddot / (d * d);
}

std::pair<Geometry, EnergyLagrangian> barrier_pair(double gain) {
    if (!(gain > 0.0)) {
        throw ConfigError("barrier gain must be > 0");
    }
    Geometry geom(1, [gain](const Vector& x, const Vector& xdot) -> Vector {
        return Vector::Constant(1, barrier_h(gain, x(0), xdot(0)));
    });
    EnergyLagrangian lag(
        1,
        [](const Vector& x, const Vector&) -> Matrix {
            if (x(0) <= 0.0) {
                throw NonpositiveDistance("barrier metric at clearance " +
                                          std::to_string(x(0)));
            }
            return Matrix::Constant(1, 1, 1.0 / x(0));
        },
        [](const Vector& x, const Vector& xdot) -> Vector {
            if (x(0) <= 0.0) {
                throw NonpositiveDistance("barrier force at clearance " +
                                          std::to_string(x(0)));
            }
            return Vector::Constant(1, -0.5 * xdot(0) * xdot(0) / (x(0) * x(0)));
        },
        [](const Vector& x, const Vector& xdot) -> double {
            if (x(0) <= 0.0) {
                throw NonpositiveDistance("barrier energy at clearance " +
                                          std::to_string(x(0)));
            }
            return 0.5 * xdot(0) * xdot(0) / x(0);
        });
    return {std::move(geom), std::move(lag)};
}

}  // namespace

PlannerParams PlannerParams::defaults(int dof, const Vector2d& goal) {
    PlannerParams params;
    params.goal = goal;
    params.damping = 0.8 * Matrix::Identity(dof, dof);
    return params;
}

void PlannerParams::validate(int dof) const {
    if (damping.rows() != dof || damping.cols() != dof) {
        throw ConfigError("PlannerParams: damping must be dof x dof");
    }
    if ((damping - damping.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
        throw ConfigError("PlannerParams: damping must be symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(damping);
    if (eig.eigenvalues()(0) < -1e-12) {
        throw ConfigError("PlannerParams: damping must be positive semidefinite");
    }
    if (attractor_weight < 0.0) {
        throw ConfigError("PlannerParams: attractor weight must be >= 0");
    }
    if (!(collision_gain > 0.0) || !(limit_gain > 0.0)) {
        throw ConfigError("PlannerParams: barrier gains must be > 0");
    }
    if (!(goal_tolerance > 0.0)) {
        throw ConfigError("PlannerParams: goal tolerance must be > 0");
    }
    if (!(attractor_gain > 0.0) || !(attractor_smoothing > 0.0) ||
        attractor_metric < 0.0) {
        throw ConfigError("PlannerParams: invalid attractor shape parameters");
    }
}

std::pair<Geometry, EnergyLagrangian> avoidance_geometry(double gain) {
    return barrier_pair(gain);
}

std::pair<Geometry, EnergyLagrangian> limit_geometry(double gain) {
    return barrier_pair(gain);
}

DifferentialMap limit_margin_map(int dof, int joint, double bound, int side) {
    if (joint < 0 || joint >= dof) {
        throw IndexOutOfRange("limit_margin_map: joint index out of range");
    }
    if (side != 1 && side != -1) {
        throw ConfigError("limit_margin_map: side must be +1 or -1");
    }
    const double sign = static_cast<double>(side);
    return DifferentialMap(
        dof, 1,
        [joint, bound, sign](const Vector& q) -> Vector {
            return Vector::Constant(1, sign * (q(joint) - bound));
        },
        [dof, joint, sign](const Vector&) -> Matrix {
            Matrix jac = Matrix::Zero(1, dof);
            jac(0, joint) = sign;
            return jac;
        },
        [](const Vector&, const Vector&) -> Vector { return Vector::Zero(1); });
}

DifferentialMap norm_distance_map(double radius_sum) {
    return DifferentialMap(
        2, 1,
        [radius_sum](const Vector& v) -> Vector {
            const double r = v.norm();
            if (r < kNormSingularity) {
                throw GradientSingularity("norm_distance_map: coincident centers");
            }
            return Vector::Constant(1, r - radius_sum);
        },
        [](const Vector& v) -> Matrix {
            const double r = v.norm();
            if (r < kNormSingularity) {
                throw GradientSingularity("norm_distance_map: coincident centers");
            }
            return v.transpose() / r;
        },
        [](const Vector& v, const Vector& vdot) -> Vector {
            const double r = v.norm();
            if (r < kNormSingularity) {
                throw GradientSingularity("norm_distance_map: coincident centers");
            }
            const double radial = v.dot(vdot) / r;
            return Vector::Constant(
                1, (vdot.squaredNorm() - radial * radial) / r);
        });
}

DifferentialMap distance_map(const DifferentialMap& sphere_map,
                             const Vector2d& obstacle_center, double radius_a,
                             double radius_b) {
    if (sphere_map.out_dim() != 2) {
        throw DimensionMismatch("distance_map: sphere map must be planar");
    }
    if (!(radius_a > 0.0) || !(radius_b > 0.0)) {
        throw ConfigError("distance_map: radii must be > 0");
    }
    const Vector offset = obstacle_center;
    DifferentialMap translated(
        sphere_map.in_dim(), 2,
        [sphere_map, offset](const Vector& q) -> Vector {
            return sphere_map.phi(q) - offset;
        },
        [sphere_map](const Vector& q) { return sphere_map.jacobian(q); },
        [sphere_map](const Vector& q, const Vector& qdot) {
            return sphere_map.jdot_qdot(q, qdot);
        });
    return DifferentialMap::compose(norm_distance_map(radius_a + radius_b),
                                    translated);
}

double Attractor::psi(const Vector2d& x) const {
    const double r = (x - goal).norm();
    return gain * (r + smoothing * std::log1p(std::exp(-2.0 * r / smoothing)));
}

Vector2d Attractor::gradient(const Vector2d& x) const {
    const Vector2d e = x - goal;
    const double r = e.norm();
    if (r < 1e-12) return Vector2d::Zero();
    return gain * std::tanh(r / smoothing) / r * e;
}

FabricPolicy::FabricPolicy(RobotModel model, PolicyComponents components)
    : model_(std::move(model)),
      components_(std::move(components)),
      ee_map_(end_effector_map(model_)) {
    sphere_maps_.reserve(model_.sphere_layout().size());
    for (const auto& sphere : model_.sphere_layout()) {
        sphere_maps_.push_back(point_map(model_, sphere.link, sphere.offset));
    }
    for (const auto& spec : components_.extra_specs) {
        if (spec.dim() != model_.dof()) {
            throw DimensionMismatch(
                "FabricPolicy: extra spec dimension must equal dof");
        }
    }
}

Vector FabricPolicy::evaluate(const Vector& q, const Vector& qdot,
                              std::span<const ObstacleState> obstacles,
                              const PlannerParams& params,
                              PolicyDiagnostics* diagnostics) const {
    const int n = model_.dof();
    if (q.size() != n || qdot.size() != n) {
        throw DimensionMismatch("FabricPolicy::evaluate: state size mismatch");
    }
    params.validate(n);

    Matrix metric = Matrix::Zero(n, n);
    Vector force = Vector::Zero(n);

    if (components_.collision_avoidance && !obstacles.empty()) {
        Vector2d pos;
        Eigen::Matrix2Xd jac(2, n);
        Vector2d jdqd;
        const auto& layout = model_.sphere_layout();
        for (std::size_t s = 0; s < layout.size(); ++s) {
            point_kinematics(model_, q, qdot, layout[s].link, layout[s].offset,
                             pos, jac, jdqd);
            const Vector2d vel = jac * qdot;
            for (std::size_t o = 0; o < obstacles.size(); ++o) {
                const auto& obs = obstacles[o];
                const Vector2d rel = pos - obs.center;
                const double r = rel.norm();
                if (r < kNormSingularity) {
                    throw GradientSingularity(
                        "sphere " + std::to_string(s) + ", obstacle " +
                        std::to_string(o) + ": coincident centers");
                }
                const double d = r - (layout[s].radius + obs.radius);
                if (d <= 0.0) {
                    throw NonpositiveDistance(
                        "sphere " + std::to_string(s) + ", obstacle " +
                        std::to_string(o) + ": clearance " + std::to_string(d));
                }
                const Vector2d unit = rel / r;
                const Vector2d vel_rel = vel - obs.velocity;
                const double ddot = unit.dot(vel_rel);
                const double leaf_metric = 1.0 / d;
                const double f1 =
                    energized_barrier_force(params.collision_gain, d, ddot);
                const double norm_curvature =
                    (vel_rel.squaredNorm() - ddot * ddot) / r;
                const Vector w = jac.transpose() * unit;
                const double leaf_force =
                    f1 + leaf_metric * (norm_curvature + unit.dot(jdqd));
                metric.noalias() += leaf_metric * w * w.transpose();
                force.noalias() += leaf_force * w;
            }
        }
    }

    if (components_.joint_limits) {
        for (int j = 0; j < n; ++j) {
            const auto& [lower, upper] = model_.joint_limits()[j];
            const double margins[2] = {q(j) - lower, upper - q(j)};
            const double rates[2] = {qdot(j), -qdot(j)};
            const double signs[2] = {1.0, -1.0};
            for (int side = 0; side < 2; ++side) {
                const double margin = margins[side];
                if (margin <= 0.0) {
                    throw NonpositiveDistance("joint " + std::to_string(j) +
                                              ": limit margin " +
                                              std::to_string(margin));
                }
                const double f1 = energized_barrier_force(params.limit_gain,
                                                          margin, rates[side]);
                metric(j, j) += 1.0 / margin;
                force(j) += signs[side] * f1;
            }
        }
    }

    Vector forcing = Vector::Zero(n);
    if (components_.attractor) {
        Vector2d ee;
        Eigen::Matrix2Xd jac(2, n);
        Vector2d jdqd;
        point_kinematics(model_, q, qdot, n - 1, 1.0, ee, jac, jdqd);
        const double m_att = params.attractor_metric;
        metric.noalias() += m_att * jac.transpose() * jac;
        force.noalias() += m_att * jac.transpose() * jdqd;
        const Attractor attractor{params.goal, params.attractor_gain,
                                  params.attractor_smoothing};
        forcing = params.attractor_weight * jac.transpose() *
                  attractor.gradient(ee);
    }

    for (const auto& spec : components_.extra_specs) {
        const SpecValue value = spec.eval(q, qdot);
        metric += value.metric;
        force += value.force;
    }

    return solve_forced_system(metric, force, forcing, params.damping, qdot,
                               diagnostics);
}

Vector FabricPolicy::evaluate_via_algebra(const Vector& q, const Vector& qdot,
                                          std::span<const ObstacleState> obstacles,
                                          const PlannerParams& params,
                                          PolicyDiagnostics* diagnostics) const {
    const int n = model_.dof();
    params.validate(n);
    Spec total = zero_spec(n);

    if (components_.collision_avoidance && !obstacles.empty()) {
        const auto& layout = model_.sphere_layout();
        for (std::size_t s = 0; s < layout.size(); ++s) {
            for (const auto& obs : obstacles) {
                auto [geom, lag] = avoidance_geometry(params.collision_gain);
                const Spec energized = energize(
                    geom, lag, RestBehavior::kGeometryFallback);
                const Spec relative = pullback(
                    norm_distance_map(layout[s].radius + obs.radius), energized);
                const auto frame = RelativeMotionFrame::constant(
                    obs.center, obs.velocity, Vector::Zero(2));
                const Spec absolute = dynamic_pullback(frame, relative);
                total = sum(total, pullback(sphere_maps_[s], absolute));
            }
        }
    }

    if (components_.joint_limits) {
        for (int j = 0; j < n; ++j) {
            const auto& [lower, upper] = model_.joint_limits()[j];
            for (const auto& [bound, side] :
                 {std::pair{lower, 1}, std::pair{upper, -1}}) {
                auto [geom, lag] = limit_geometry(params.limit_gain);
                total = sum(
                    total,
                    pullback(limit_margin_map(n, j, bound, side),
                             energize(geom, lag, RestBehavior::kGeometryFallback)));
            }
        }
    }

    Vector forcing = Vector::Zero(n);
    if (components_.attractor) {
        Geometry still(2, [](const Vector&, const Vector&) {
            return Vector::Zero(2);
        });
        total = sum(total, pullback(ee_map_,
                                    energize(still,
                                             EnergyLagrangian::euclidean(
                                                 2, params.attractor_metric),
                                             RestBehavior::kGeometryFallback)));
        const Vector2d ee = end_effector(model_, q);
        const Attractor attractor{params.goal, params.attractor_gain,
                                  params.attractor_smoothing};
        forcing = params.attractor_weight *
                  ee_map_.jacobian(q).transpose() * attractor.gradient(ee);
    }

    for (const auto& spec : components_.extra_specs) {
        total = sum(total, spec);
    }

    const SpecValue value = total.eval(q, qdot);
    return solve_forced_system(value.metric, value.force, forcing,
                               params.damping, qdot, diagnostics);
}

double FabricPolicy::component_energy(const Vector& q, const Vector& qdot,
                                      std::span<const ObstacleState> obstacles,
                                      const PlannerParams& params) const {
    const int n = model_.dof();
    double energy = 0.0;

    if (components_.collision_avoidance && !obstacles.empty()) {
        Vector2d pos;
        Eigen::Matrix2Xd jac(2, n);
        Vector2d jdqd;
        const auto& layout = model_.sphere_layout();
        for (std::size_t s = 0; s < layout.size(); ++s) {
            point_kinematics(model_, q, qdot, layout[s].link, layout[s].offset,
                             pos, jac, jdqd);
            const Vector2d vel = jac * qdot;
            for (const auto& obs : obstacles) {
                const Vector2d rel = pos - obs.center;
                const double r = rel.norm();
                if (r < kNormSingularity) {
                    throw GradientSingularity("component_energy: coincident centers");
                }
                const double d = r - (layout[s].radius + obs.radius);
                if (d <= 0.0) {
                    throw NonpositiveDistance("component_energy: clearance " +
                                              std::to_string(d));
                }
                const double ddot = rel.dot(vel - obs.velocity) / r;
                energy += 0.5 * ddot * ddot / d;
            }
        }
    }

    if (components_.joint_limits) {
        for (int j = 0; j < n; ++j) {
            const auto& [lower, upper] = model_.joint_limits()[j];
            energy += 0.5 * qdot(j) * qdot(j) / (q(j) - lower);
            energy += 0.5 * qdot(j) * qdot(j) / (upper - q(j));
        }
    }

    if (components_.attractor) {
        const Vector2d vel = end_effector_velocity(model_, q, qdot);
        energy += 0.5 * params.attractor_metric * vel.squaredNorm();
    }

    return energy;
}

FabricPolicy build_policy(RobotModel model, PolicyComponents components) {
    return FabricPolicy(std::move(model), std::move(components));
}

Vector solve_forced_system(const Matrix& metric, const Vector& force,
                           const Vector& forcing, const Matrix& damping,
                           const Vector& qdot,
                           PolicyDiagnostics* diagnostics) {
    Matrix m = 0.5 * (metric + metric.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    const auto& ev = eig.eigenvalues();
    const double lo = ev(0);
    const double hi = ev(ev.size() - 1);
    if (lo <= 0.0 || hi / lo > kConditionLimit) {
        m += kRegularization * Matrix::Identity(m.rows(), m.cols());
        if (diagnostics != nullptr) diagnostics->metric_regularized = true;
    }
    const Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success) {
        throw SingularMetric("solve_forced_system: combined metric is singular");
    }
    const Vector rhs = -(force + forcing + damping * qdot);
    Vector qddot = ldlt.solve(rhs);
    if (!qddot.allFinite()) {
        throw SingularMetric("solve_forced_system: non-finite acceleration");
    }
    return qddot;
}

}  // namespace fabrics

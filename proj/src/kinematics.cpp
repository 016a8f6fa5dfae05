#include "fabrics/kinematics.hpp"

#include <cmath>
#include <string>

namespace fabrics {

RobotModel::RobotModel(std::vector<double> link_lengths, BasePose base_pose,
                       std::vector<std::pair<double, double>> joint_limits,
                       std::vector<SphereSpec> sphere_layout)
    : link_lengths_(std::move(link_lengths)),
      base_pose_(base_pose),
      joint_limits_(std::move(joint_limits)),
      sphere_layout_(std::move(sphere_layout)) {
    if (link_lengths_.empty()) {
        throw ConfigError("RobotModel: at least one link required");
    }
    for (double len : link_lengths_) {
        if (!(len > 0.0)) throw ConfigError("RobotModel: link lengths must be > 0");
    }
    if (joint_limits_.size() != link_lengths_.size()) {
        throw ConfigError("RobotModel: one joint limit pair per joint required");
    }
    for (const auto& [lower, upper] : joint_limits_) {
        if (!(lower < upper)) {
            throw ConfigError("RobotModel: joint limit lower must be < upper");
        }
    }
    for (const auto& sphere : sphere_layout_) {
        if (sphere.link < 0 || sphere.link >= dof()) {
            throw ConfigError("RobotModel: sphere link index out of range");
        }
        if (sphere.offset < 0.0 || sphere.offset > 1.0) {
            throw ConfigError("RobotModel: sphere offset must lie in [0, 1]");
        }
        if (!(sphere.radius > 0.0)) {
            throw ConfigError("RobotModel: sphere radius must be > 0");
        }
    }
}

double RobotModel::reach() const {
    double total = 0.0;
    for (double len : link_lengths_) total += len;
    return total;
}

RobotModel RobotModel::desk_default(BasePose base_pose) {
    const std::vector<double> lengths{0.4, 0.35, 0.25};
    std::vector<std::pair<double, double>> limits(3, {-2.9, 2.9});
    std::vector<SphereSpec> spheres;
    for (int link = 0; link < 3; ++link) {
        spheres.push_back({link, 0.33, 0.08});
        spheres.push_back({link, 0.83, 0.08});
    }
    return RobotModel(lengths, base_pose, std::move(limits), std::move(spheres));
}

void validate_state(const RobotModel& model, const RobotState& state) {
    if (state.q.size() != model.dof() || state.qdot.size() != model.dof()) {
        throw DimensionMismatch("RobotState: dimension does not match model dof");
    }
    if (!state.q.allFinite() || !state.qdot.allFinite()) {
        throw ConfigError("RobotState: entries must be finite");
    }
}

namespace {

void check_point(const RobotModel& model, int link, double offset) {
    if (link < 0 || link >= model.dof()) {
        throw IndexOutOfRange("fk_point: link " + std::to_string(link) +
                              " out of range for dof " +
                              std::to_string(model.dof()));
    }
    if (offset < 0.0 || offset > 1.0) {
        throw IndexOutOfRange("fk_point: offset must lie in [0, 1]");
    }
}

}  // namespace

Vector2d fk_point(const RobotModel& model, const Vector& q, int link,
                  double offset) {
    check_point(model, link, offset);
    if (q.size() != model.dof()) {
        throw DimensionMismatch("fk_point: configuration size mismatch");
    }
    double angle = model.base_pose().heading;
    Vector2d p(model.base_pose().x, model.base_pose().y);
    for (int j = 0; j <= link; ++j) {
        angle += q(j);
        const double len =
            (j == link) ? offset * model.link_lengths()[j] : model.link_lengths()[j];
        p.x() += len * std::cos(angle);
        p.y() += len * std::sin(angle);
    }
    return p;
}

void point_kinematics(const RobotModel& model, const Vector& q,
                      const Vector& qdot, int link, double offset,
                      Vector2d& position, Eigen::Matrix2Xd& jacobian,
                      Vector2d& jdot_qdot) {
    check_point(model, link, offset);
    const int n = model.dof();
    if (q.size() != n || qdot.size() != n) {
        throw DimensionMismatch("point_kinematics: state size mismatch");
    }
    position = Vector2d(model.base_pose().x, model.base_pose().y);
    jacobian.setZero(2, n);
    jdot_qdot.setZero();

    double angle = model.base_pose().heading;
    double angle_rate = 0.0;
    for (int j = 0; j <= link; ++j) {
        angle += q(j);
        angle_rate += qdot(j);
        const double len =
            (j == link) ? offset * model.link_lengths()[j] : model.link_lengths()[j];
        const double c = len * std::cos(angle);
        const double s = len * std::sin(angle);
        position.x() += c;
        position.y() += s;
        // Column k accumulates the tangent contribution of every segment at
        // or beyond joint k; equivalently each segment contributes to all
        // columns 0..j.
        for (int k = 0; k <= j; ++k) {
            jacobian(0, k) -= s;
            jacobian(1, k) += c;
        }
        jdot_qdot.x() -= c * angle_rate * angle_rate;
        jdot_qdot.y() -= s * angle_rate * angle_rate;
    }
}

DifferentialMap point_map(const RobotModel& model, int link, double offset) {
    check_point(model, link, offset);
    const int n = model.dof();
    return DifferentialMap(
        n, 2,
        [model, link, offset](const Vector& q) -> Vector {
            return fk_point(model, q, link, offset);
        },
        [model, link, offset, n](const Vector& q) -> Matrix {
            Vector2d pos;
            Eigen::Matrix2Xd jac;
            Vector2d jdqd;
            point_kinematics(model, q, Vector::Zero(n), link, offset, pos, jac,
                             jdqd);
            return jac;
        },
        [model, link, offset, n](const Vector& q, const Vector& qdot) -> Vector {
            Vector2d pos;
            Eigen::Matrix2Xd jac;
            Vector2d jdqd;
            point_kinematics(model, q, qdot, link, offset, pos, jac, jdqd);
            return jdqd;
        });
}

std::vector<SphereState> collision_spheres(const RobotModel& model,
                                           const RobotState& state) {
    validate_state(model, state);
    std::vector<SphereState> spheres;
    spheres.reserve(model.sphere_layout().size());
    Vector2d pos;
    Eigen::Matrix2Xd jac;
    Vector2d jdqd;
    for (const auto& spec : model.sphere_layout()) {
        point_kinematics(model, state.q, state.qdot, spec.link, spec.offset, pos,
                         jac, jdqd);
        spheres.push_back(SphereState{pos, jac * state.qdot, spec.radius});
    }
    return spheres;
}

Vector2d end_effector(const RobotModel& model, const Vector& q) {
    return fk_point(model, q, model.dof() - 1, 1.0);
}

Vector2d end_effector_velocity(const RobotModel& model, const Vector& q,
                               const Vector& qdot) {
    Vector2d pos;
    Eigen::Matrix2Xd jac;
    Vector2d jdqd;
    point_kinematics(model, q, qdot, model.dof() - 1, 1.0, pos, jac, jdqd);
    return jac * qdot;
}

DifferentialMap end_effector_map(const RobotModel& model) {
    return point_map(model, model.dof() - 1, 1.0);
}

}  // namespace fabrics

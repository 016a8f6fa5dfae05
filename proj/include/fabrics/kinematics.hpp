#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "fabrics/errors.hpp"
#include "fabrics/spec_algebra.hpp"

namespace fabrics {

using Eigen::Vector2d;

/// World pose of the chain base: position in meters, heading in radians.
struct BasePose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
};

/// Collision sphere attached to a link at a fractional offset along it.
struct SphereSpec {
    int link = 0;
    double offset = 0.0;  ///< fraction in [0, 1] along the link
    double radius = 0.0;  ///< meters
};

/// Planar revolute serial chain with joint limits and collision spheres.
class RobotModel {
public:
    RobotModel(std::vector<double> link_lengths, BasePose base_pose,
               std::vector<std::pair<double, double>> joint_limits,
               std::vector<SphereSpec> sphere_layout);

    int dof() const { return static_cast<int>(link_lengths_.size()); }
    const std::vector<double>& link_lengths() const { return link_lengths_; }
    const BasePose& base_pose() const { return base_pose_; }
    const std::vector<std::pair<double, double>>& joint_limits() const {
        return joint_limits_;
    }
    const std::vector<SphereSpec>& sphere_layout() const {
        return sphere_layout_;
    }
    int sphere_count() const { return static_cast<int>(sphere_layout_.size()); }

    double reach() const;  ///< sum of link lengths

    /// 3-DOF desk arm: links (0.4, 0.35, 0.25) m, limits +-2.9 rad,
    /// two 8 cm spheres per link at offsets 0.33 and 0.83.
    static RobotModel desk_default(BasePose base_pose);

private:
    std::vector<double> link_lengths_;
    BasePose base_pose_;
    std::vector<std::pair<double, double>> joint_limits_;
    std::vector<SphereSpec> sphere_layout_;
};

struct RobotState {
    Vector q;
    Vector qdot;
};

/// Throws if the state has non-finite entries or wrong dimensions.
void validate_state(const RobotModel& model, const RobotState& state);

/// World position of the point at `offset` along `link`. Offset 1 on the
/// last link is the end effector.
Vector2d fk_point(const RobotModel& model, const Vector& q, int link,
                  double offset);

/// Position, Jacobian and curvature product of a link point in one pass.
void point_kinematics(const RobotModel& model, const Vector& q,
                      const Vector& qdot, int link, double offset,
                      Vector2d& position, Eigen::Matrix2Xd& jacobian,
                      Vector2d& jdot_qdot);

/// Packages a link point as a DifferentialMap with analytic Jacobian and
/// curvature terms.
DifferentialMap point_map(const RobotModel& model, int link, double offset);

struct SphereState {
    Vector2d center;
    Vector2d velocity;
    double radius;
};

/// Current centers, velocities and radii of all collision spheres.
std::vector<SphereState> collision_spheres(const RobotModel& model,
                                           const RobotState& state);

Vector2d end_effector(const RobotModel& model, const Vector& q);

Vector2d end_effector_velocity(const RobotModel& model, const Vector& q,
                               const Vector& qdot);

DifferentialMap end_effector_map(const RobotModel& model);

}  // namespace fabrics

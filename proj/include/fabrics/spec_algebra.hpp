#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>

#include "fabrics/errors.hpp"

namespace fabrics {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance below which the energization projector denominator xd' M xd is
/// treated as degenerate (robot at rest).
inline constexpr double kProjectorTolerance = 1e-12;

/// Condition-number guard for dense metric inversions.
inline constexpr double kConditionLimit = 1e12;

/// Element-wise symmetry tolerance enforced on every evaluated metric.
inline constexpr double kSymmetryTolerance = 1e-12;

struct SpecValue {
    Matrix metric;  ///< M(x, xd), symmetric, invertible
    Vector force;   ///< f(x, xd)
};

/// Second-order system M(x, xd) xdd + f(x, xd) = 0 on an m-dimensional task
/// manifold. Specs are immutable closures; all algebra operations below
/// return new specs that evaluate lazily.
class Spec {
public:
    using EvalFn = std::function<SpecValue(const Vector& x, const Vector& xdot)>;

    Spec(int dim, EvalFn eval);

    int dim() const { return dim_; }

    /// Evaluates (M, f) and validates the symmetry invariant.
    SpecValue eval(const Vector& x, const Vector& xdot) const;

    /// Solves M xdd = -f with a condition-number guard.
    Vector solve(const Vector& x, const Vector& xdot) const;

private:
    int dim_;
    EvalFn eval_;
};

/// Geometry-defining term h of a system xdd + h(x, xd) = 0, homogeneous of
/// degree 2 in the velocity.
class Geometry {
public:
    using HFn = std::function<Vector(const Vector& x, const Vector& xdot)>;

    Geometry(int dim, HFn h);

    int dim() const { return dim_; }
    Vector h(const Vector& x, const Vector& xdot) const;

private:
    int dim_;
    HFn h_;
};

/// Energy Lagrangian L_e with derived equations of motion
/// M_Le xdd + f_Le = 0 and the conserved energy H_e. The energy must be
/// homogeneous of degree 2 in the velocity (Finsler-structure property).
class EnergyLagrangian {
public:
    using MetricFn = std::function<Matrix(const Vector& x, const Vector& xdot)>;
    using ForceFn = std::function<Vector(const Vector& x, const Vector& xdot)>;
    using EnergyFn = std::function<double(const Vector& x, const Vector& xdot)>;

    EnergyLagrangian(int dim, MetricFn metric, ForceFn force, EnergyFn energy);

    int dim() const { return dim_; }
    Matrix metric(const Vector& x, const Vector& xdot) const { return metric_(x, xdot); }
    Vector force(const Vector& x, const Vector& xdot) const { return force_(x, xdot); }
    double energy(const Vector& x, const Vector& xdot) const { return energy_(x, xdot); }

    /// L = 1/2 * mass * |xd|^2: metric mass*I, zero force.
    static EnergyLagrangian euclidean(int dim, double mass = 1.0);

private:
    int dim_;
    MetricFn metric_;
    ForceFn force_;
    EnergyFn energy_;
};

/// Smooth map phi between a configuration space and a task space, together
/// with its Jacobian and the curvature product Jdot * qdot.
class DifferentialMap {
public:
    using PhiFn = std::function<Vector(const Vector& q)>;
    using JacobianFn = std::function<Matrix(const Vector& q)>;
    using JdotQdotFn = std::function<Vector(const Vector& q, const Vector& qdot)>;

    DifferentialMap(int in_dim, int out_dim, PhiFn phi, JacobianFn jacobian,
                    JdotQdotFn jdot_qdot);

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }

    Vector phi(const Vector& q) const { return phi_(q); }
    Matrix jacobian(const Vector& q) const { return jacobian_(q); }
    Vector jdot_qdot(const Vector& q, const Vector& qdot) const {
        return jdot_qdot_(q, qdot);
    }

    static DifferentialMap identity(int dim);

    /// outer(inner(q)) with chain-rule Jacobian and curvature terms.
    static DifferentialMap compose(const DifferentialMap& outer,
                                   const DifferentialMap& inner);

private:
    int in_dim_;
    int out_dim_;
    PhiFn phi_;
    JacobianFn jacobian_;
    JdotQdotFn jdot_qdot_;
};

/// Time-varying reference frame (obstacle position, velocity, acceleration)
/// defining relative coordinates x_rel = x - xbar.
class RelativeMotionFrame {
public:
    using StateFn = std::function<Vector()>;

    RelativeMotionFrame(int dim, StateFn position, StateFn velocity,
                        StateFn acceleration);

    int dim() const { return dim_; }
    Vector position() const { return position_(); }
    Vector velocity() const { return velocity_(); }
    Vector acceleration() const { return acceleration_(); }

    /// Frame with fixed position, velocity and acceleration vectors.
    static RelativeMotionFrame constant(Vector position, Vector velocity,
                                        Vector acceleration);

    /// Non-moving frame (static obstacle).
    static RelativeMotionFrame fixed(Vector position);

private:
    int dim_;
    StateFn position_;
    StateFn velocity_;
    StateFn acceleration_;
};

/// Behavior of energize() when the projector denominator degenerates
/// (velocity at or near rest).
enum class RestBehavior {
    kThrow,             ///< raise DegenerateVelocity
    kGeometryFallback,  ///< return (M_Le, M_Le h): the plain geometry flow
};

/// Equips the geometry with the Lagrangian's metric so that solutions
/// conserve the Lagrangian energy. The result follows the same path as the
/// geometry, differing only by an acceleration along the motion direction.
Spec energize(const Geometry& geometry, const EnergyLagrangian& lagrangian,
              RestBehavior rest_behavior = RestBehavior::kThrow);

/// Transports a task-space spec to configuration space through `map`:
/// (J' M J, J' (f + M Jdot qdot)), evaluated at x = phi(q), xd = J qd.
Spec pullback(const DifferentialMap& map, const Spec& spec);

/// Transports a spec defined on relative coordinates x_rel = x - xbar back
/// to the absolute manifold: (M, f - M xbar_dd), evaluated at
/// (x - xbar, xd - xbar_dot).
Spec dynamic_pullback(const RelativeMotionFrame& frame, const Spec& spec_rel);

/// Pointwise sum (M_a + M_b, f_a + f_b).
Spec sum(const Spec& a, const Spec& b);

/// Identity element of summation: zero metric and force.
Spec zero_spec(int dim);

}  // namespace fabrics

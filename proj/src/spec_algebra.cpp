#include "fabrics/spec_algebra.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace fabrics {

namespace {

void require_dim(int expected, int actual, const char* what) {
    if (expected != actual) {
        throw DimensionMismatch(std::string(what) + ": expected dimension " +
                                std::to_string(expected) + ", got " +
                                std::to_string(actual));
    }
}

}  // namespace

Spec::Spec(int dim, EvalFn eval) : dim_(dim), eval_(std::move(eval)) {
    if (dim_ <= 0) {
        throw DimensionMismatch("Spec: dimension must be positive");
    }
}

SpecValue Spec::eval(const Vector& x, const Vector& xdot) const {
    require_dim(dim_, static_cast<int>(x.size()), "Spec::eval x");
    require_dim(dim_, static_cast<int>(xdot.size()), "Spec::eval xdot");
    SpecValue value = eval_(x, xdot);
    const double scale = std::max(1.0, value.metric.cwiseAbs().maxCoeff());
    const double asym =
        (value.metric - value.metric.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
        throw FabricsError("Spec::eval: metric violates symmetry invariant");
    }
    return value;
}

Vector Spec::solve(const Vector& x, const Vector& xdot) const {
    SpecValue value = eval(x, xdot);
    Eigen::JacobiSVD<Matrix> svd(value.metric,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > kConditionLimit) {
        throw SingularMetric("Spec::solve: metric condition number beyond 1e12");
    }
    return svd.solve(-value.force);
}

Geometry::Geometry(int dim, HFn h) : dim_(dim), h_(std::move(h)) {
    if (dim_ <= 0) {
        throw DimensionMismatch("Geometry: dimension must be positive");
    }
}

Vector Geometry::h(const Vector& x, const Vector& xdot) const {
    require_dim(dim_, static_cast<int>(x.size()), "Geometry::h x");
    require_dim(dim_, static_cast<int>(xdot.size()), "Geometry::h xdot");
    return h_(x, xdot);
}

EnergyLagrangian::EnergyLagrangian(int dim, MetricFn metric, ForceFn force,
                                   EnergyFn energy)
    : dim_(dim),
      metric_(std::move(metric)),
      force_(std::move(force)),
      energy_(std::move(energy)) {
    if (dim_ <= 0) {
        throw DimensionMismatch("EnergyLagrangian: dimension must be positive");
    }
}

EnergyLagrangian EnergyLagrangian::euclidean(int dim, double mass) {
    return EnergyLagrangian(
        dim,
        [dim, mass](const Vector&, const Vector&) -> Matrix {
            return mass * Matrix::Identity(dim, dim);
        },
        [dim](const Vector&, const Vector&) -> Vector {
            return Vector::Zero(dim);
        },
        [mass](const Vector&, const Vector& xdot) -> double {
            return 0.5 * mass * xdot.squaredNorm();
        });
}

DifferentialMap::DifferentialMap(int in_dim, int out_dim, PhiFn phi,
                                 JacobianFn jacobian, JdotQdotFn jdot_qdot)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      phi_(std::move(phi)),
      jacobian_(std::move(jacobian)),
      jdot_qdot_(std::move(jdot_qdot)) {
    if (in_dim_ <= 0 || out_dim_ <= 0) {
        throw DimensionMismatch("DifferentialMap: dimensions must be positive");
    }
}

DifferentialMap DifferentialMap::identity(int dim) {
    return DifferentialMap(
        dim, dim, [](const Vector& q) { return q; },
        [dim](const Vector&) -> Matrix { return Matrix::Identity(dim, dim); },
        [dim](const Vector&, const Vector&) -> Vector {
            return Vector::Zero(dim);
        });
}

DifferentialMap DifferentialMap::compose(const DifferentialMap& outer,
                                         const DifferentialMap& inner) {
    require_dim(outer.in_dim(), inner.out_dim(), "DifferentialMap::compose");
    return DifferentialMap(
        inner.in_dim(), outer.out_dim(),
        [outer, inner](const Vector& q) { return outer.phi(inner.phi(q)); },
        [outer, inner](const Vector& q) -> Matrix {
            return outer.jacobian(inner.phi(q)) * inner.jacobian(q);
        },
        [outer, inner](const Vector& q, const Vector& qdot) -> Vector {
            const Vector mid = inner.phi(q);
            const Vector mid_dot = inner.jacobian(q) * qdot;
            return outer.jacobian(mid) * inner.jdot_qdot(q, qdot) +
                   outer.jdot_qdot(mid, mid_dot);
        });
}

RelativeMotionFrame::RelativeMotionFrame(int dim, StateFn position,
                                         StateFn velocity, StateFn acceleration)
    : dim_(dim),
      position_(std::move(position)),
      velocity_(std::move(velocity)),
      acceleration_(std::move(acceleration)) {
    if (dim_ <= 0) {
        throw DimensionMismatch("RelativeMotionFrame: dimension must be positive");
    }
}

RelativeMotionFrame RelativeMotionFrame::constant(Vector position,
                                                  Vector velocity,
                                                  Vector acceleration) {
    const int dim = static_cast<int>(position.size());
    require_dim(dim, static_cast<int>(velocity.size()),
                "RelativeMotionFrame::constant velocity");
    require_dim(dim, static_cast<int>(acceleration.size()),
                "RelativeMotionFrame::constant acceleration");
    return RelativeMotionFrame(
        dim, [position]() { return position; }, [velocity]() { return velocity; },
        [acceleration]() { return acceleration; });
}

RelativeMotionFrame RelativeMotionFrame::fixed(Vector position) {
    const Vector zero = Vector::Zero(position.size());
    return constant(std::move(position), zero, zero);
}

Spec energize(const Geometry& geometry, const EnergyLagrangian& lagrangian,
              RestBehavior rest_behavior) {
    require_dim(geometry.dim(), lagrangian.dim(), "energize");
    const int dim = geometry.dim();
    return Spec(dim, [geometry, lagrangian, rest_behavior](
                         const Vector& x, const Vector& xdot) -> SpecValue {
        Matrix metric = lagrangian.metric(x, xdot);
        {
            // Invertibility guard on the Lagrangian metric.
            Eigen::LDLT<Matrix> ldlt(metric);
            const auto d = ldlt.vectorD();
            const double dmax = d.cwiseAbs().maxCoeff();
            if (ldlt.info() != Eigen::Success || dmax <= 0.0 ||
                d.cwiseAbs().minCoeff() < dmax / kConditionLimit) {
                throw SingularMetric("energize: Lagrangian metric not invertible");
            }
        }
        const Vector h = geometry.h(x, xdot);
        const Vector m_xdot = metric * xdot;
        const double denom = xdot.dot(m_xdot);
        if (denom <= kProjectorTolerance) {
            if (rest_behavior == RestBehavior::kThrow) {
                throw DegenerateVelocity(
                    "energize: xd' M_Le xd below projector tolerance");
            }
            // Rest state: fall back to the plain geometry flow xdd = -h.
            return SpecValue{metric, metric * h};
        }
        const Vector f_le = lagrangian.force(x, xdot);
        // P_Le v = v - M xd (xd . v) / (xd' M xd)
        const Vector v = metric * h - f_le;
        Vector force = f_le + v - m_xdot * (xdot.dot(v) / denom);
        return SpecValue{std::move(metric), std::move(force)};
    });
}

Spec pullback(const DifferentialMap& map, const Spec& spec) {
    require_dim(map.out_dim(), spec.dim(), "pullback");
    return Spec(map.in_dim(), [map, spec](const Vector& q,
                                          const Vector& qdot) -> SpecValue {
        const Vector x = map.phi(q);
        const Matrix jac = map.jacobian(q);
        const Vector xdot = jac * qdot;
        const SpecValue task = spec.eval(x, xdot);
        const Vector curvature = map.jdot_qdot(q, qdot);
        Matrix metric = jac.transpose() * task.metric * jac;
        metric = 0.5 * (metric + metric.transpose()).eval();
        Vector force = jac.transpose() * (task.force + task.metric * curvature);
        return SpecValue{std::move(metric), std::move(force)};
    });
}

Spec dynamic_pullback(const RelativeMotionFrame& frame, const Spec& spec_rel) {
    require_dim(frame.dim(), spec_rel.dim(), "dynamic_pullback");
    return Spec(spec_rel.dim(), [frame, spec_rel](
                                    const Vector& x, const Vector& xdot) -> SpecValue {
        const Vector x_rel = x - frame.position();
        const Vector xdot_rel = xdot - frame.velocity();
        SpecValue value = spec_rel.eval(x_rel, xdot_rel);
        value.force -= value.metric * frame.acceleration();
        return value;
    });
}

Spec sum(const Spec& a, const Spec& b) {
    require_dim(a.dim(), b.dim(), "sum");
    return Spec(a.dim(), [a, b](const Vector& x, const Vector& xdot) -> SpecValue {
        SpecValue va = a.eval(x, xdot);
        const SpecValue vb = b.eval(x, xdot);
        va.metric += vb.metric;
        va.force += vb.force;
        return va;
    });
}

Spec zero_spec(int dim) {
    return Spec(dim, [dim](const Vector&, const Vector&) -> SpecValue {
        return SpecValue{Matrix::Zero(dim, dim), Vector::Zero(dim)};
    });
}

}  // namespace fabrics

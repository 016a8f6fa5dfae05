#pragma once

// Randomized analytic families of specs, geometries, Lagrangians and maps
// with hand-derived closed forms, shared by the unit and acceptance suites.

#include <cmath>

#include "fabrics/spec_algebra.hpp"
#include "support/oracles.hpp"

namespace families {

using fabrics::Matrix;
using fabrics::Vector;

/// Smooth random spec: M(x) = A0 + A1 * s(x) with s in (0,1),
/// f(x, xd) = c .* sin(B x) + (w . xd) * D xd.
struct RandomSpecData {
    Matrix a0, a1, b, d;
    Vector c, w, gate;

    static RandomSpecData draw(oracles::Rng& rng, int dim) {
        RandomSpecData s;
        s.a0 = rng.spd(dim);
        s.a1 = rng.spd(dim);
        s.b = Matrix::Zero(dim, dim);
        s.d = Matrix::Zero(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                s.b(i, j) = rng.uniform(-1.0, 1.0);
                s.d(i, j) = rng.uniform(-1.0, 1.0);
            }
        s.c = rng.vector(dim);
        s.w = rng.vector(dim);
        s.gate = rng.vector(dim);
        return s;
    }

    Matrix metric(const Vector& x) const {
        const double s = 0.5 * (1.0 + std::tanh(gate.dot(x)));
        return a0 + s * a1;
    }

    Vector force(const Vector& x, const Vector& xdot) const {
        Vector f(x.size());
        const Vector bx = b * x;
        for (int i = 0; i < x.size(); ++i) f(i) = c(i) * std::sin(bx(i));
        f += (w.dot(xdot)) * (d * xdot);
        return f;
    }

    fabrics::Spec spec() const {
        const int dim = static_cast<int>(c.size());
        RandomSpecData copy = *this;
        return fabrics::Spec(dim, [copy](const Vector& x, const Vector& xd) {
            return fabrics::SpecValue{copy.metric(x), copy.force(x, xd)};
        });
    }
};

/// Degree-2 homogeneous geometry: h = g(x) |xd|^2 + (a . xd) W xd.
struct RandomGeometryData {
    Vector g, a;
    Matrix w;

    static RandomGeometryData draw(oracles::Rng& rng, int dim) {
        RandomGeometryData d;
        d.g = rng.vector(dim);
        d.a = rng.vector(dim);
        d.w = Matrix::Zero(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) d.w(i, j) = rng.uniform(-1.0, 1.0);
        return d;
    }

    Vector h(const Vector& x, const Vector& xdot) const {
        const double damp = 1.0 / (1.0 + x.squaredNorm());
        return damp * (g * xdot.squaredNorm() + (a.dot(xdot)) * (w * xdot));
    }

    fabrics::Geometry geometry() const {
        RandomGeometryData copy = *this;
        return fabrics::Geometry(static_cast<int>(g.size()),
                                 [copy](const Vector& x, const Vector& xd) {
                                     return copy.h(x, xd);
                                 });
    }
};

/// Finsler energy L = 1/2 w(x) |xd|^2 with w(x) = w0 + 0.5 tanh(b.x) + 0.2|x|^2.
/// Closed forms: M = w I, f = (grad_w . xd) xd - 1/2 |xd|^2 grad_w.
struct ScaledEuclideanEnergy {
    double w0;
    Vector b;

    static ScaledEuclideanEnergy draw(oracles::Rng& rng, int dim) {
        return ScaledEuclideanEnergy{rng.uniform(1.2, 2.0), rng.vector(dim)};
    }

    double weight(const Vector& x) const {
        return w0 + 0.5 * std::tanh(b.dot(x)) + 0.2 * x.squaredNorm();
    }

    Vector weight_grad(const Vector& x) const {
        const double t = std::tanh(b.dot(x));
        return 0.5 * (1.0 - t * t) * b + 0.4 * x;
    }

    fabrics::EnergyLagrangian lagrangian() const {
        const int dim = static_cast<int>(b.size());
        ScaledEuclideanEnergy copy = *this;
        return fabrics::EnergyLagrangian(
            dim,
            [copy, dim](const Vector& x, const Vector&) -> Matrix {
                return copy.weight(x) * Matrix::Identity(dim, dim);
            },
            [copy](const Vector& x, const Vector& xd) -> Vector {
                const Vector grad = copy.weight_grad(x);
                return grad.dot(xd) * xd - 0.5 * xd.squaredNorm() * grad;
            },
            [copy](const Vector& x, const Vector& xd) -> double {
                return 0.5 * copy.weight(x) * xd.squaredNorm();
            });
    }
};

/// Nonlinear map phi_i(q) = a_i . q + c_i sin(b_i . q) with analytic
/// Jacobian and curvature.
struct RandomMapData {
    Matrix a, b;
    Vector c;

    static RandomMapData draw(oracles::Rng& rng, int out_dim, int in_dim) {
        RandomMapData m;
        m.a = Matrix::Zero(out_dim, in_dim);
        m.b = Matrix::Zero(out_dim, in_dim);
        for (int i = 0; i < out_dim; ++i)
            for (int j = 0; j < in_dim; ++j) {
                m.a(i, j) = rng.uniform(-1.0, 1.0);
                m.b(i, j) = rng.uniform(-1.0, 1.0);
            }
        m.c = rng.vector(out_dim);
        return m;
    }

    fabrics::DifferentialMap map() const {
        const int out_dim = static_cast<int>(a.rows());
        const int in_dim = static_cast<int>(a.cols());
        RandomMapData copy = *this;
        return fabrics::DifferentialMap(
            in_dim, out_dim,
            [copy](const Vector& q) -> Vector {
                Vector x = copy.a * q;
                const Vector bq = copy.b * q;
                for (int i = 0; i < x.size(); ++i)
                    x(i) += copy.c(i) * std::sin(bq(i));
                return x;
            },
            [copy](const Vector& q) -> Matrix {
                Matrix jac = copy.a;
                const Vector bq = copy.b * q;
                for (int i = 0; i < jac.rows(); ++i)
                    jac.row(i) += copy.c(i) * std::cos(bq(i)) * copy.b.row(i);
                return jac;
            },
            [copy](const Vector& q, const Vector& qdot) -> Vector {
                const Vector bq = copy.b * q;
                const Vector bqd = copy.b * qdot;
                Vector out(copy.c.size());
                for (int i = 0; i < out.size(); ++i)
                    out(i) = -copy.c(i) * std::sin(bq(i)) * bqd(i) * bqd(i);
                return out;
            });
    }
};

}  // namespace families

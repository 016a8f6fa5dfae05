#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fabrics/kinematics.hpp"
#include "support/oracles.hpp"

using fabrics::BasePose;
using fabrics::RobotModel;
using fabrics::RobotState;
using fabrics::Vector;
using fabrics::Vector2d;

namespace {

RobotModel two_link_unit(BasePose base = {}) {
    return RobotModel({1.0, 1.0}, base, {{-3.0, 3.0}, {-3.0, 3.0}},
                      {{0, 0.5, 0.05}});
}

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<int>(values.size()));
    int i = 0;
    for (double value : values) v(i++) = value;
    return v;
}

}  // namespace

TEST_CASE("fk_point: straight and rotated two-link arm") {
    const auto model = two_link_unit();

    const Vector2d straight = fk_point(model, vec({0.0, 0.0}), 1, 1.0);
    CHECK(straight.x() == doctest::Approx(2.0));
    CHECK(straight.y() == doctest::Approx(0.0));

    const Vector2d up = fk_point(model, vec({M_PI_2, 0.0}), 1, 1.0);
    CHECK(up.x() == doctest::Approx(0.0));
    CHECK(up.y() == doctest::Approx(2.0));

    // q = (pi/2, -pi/2): first link up, second link back to horizontal.
    const Vector2d bent = fk_point(model, vec({M_PI_2, -M_PI_2}), 1, 1.0);
    CHECK(bent.x() == doctest::Approx(1.0));
    CHECK(bent.y() == doctest::Approx(1.0));
}

TEST_CASE("fk_point: index and offset validation") {
    const auto model = two_link_unit();
    CHECK_THROWS_AS((void)fk_point(model, vec({0, 0}), 2, 0.5),
                    fabrics::IndexOutOfRange);
    CHECK_THROWS_AS((void)fk_point(model, vec({0, 0}), 0, 1.5),
                    fabrics::IndexOutOfRange);
}

TEST_CASE("point_map: one-link arm Jacobian at rest") {
    const RobotModel model({1.0}, {}, {{-3.0, 3.0}}, {});
    const auto map = fabrics::point_map(model, 0, 1.0);
    const auto jac = map.jacobian(vec({0.0}));
    CHECK(jac(0, 0) == doctest::Approx(0.0));
    CHECK(jac(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("point_map: analytic Jacobian matches finite differences") {
    const auto model = RobotModel::desk_default({0.2, -0.1, 0.4});
    oracles::Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Vector q = rng.vector(3, -2.5, 2.5);
        const int link = static_cast<int>(rng.uniform(0.0, 3.0));
        const double offset = rng.uniform(0.0, 1.0);
        const auto map = fabrics::point_map(model, link, offset);
        const auto jac_fd = oracles::fd_jacobian(
            [&map](const Vector& p) { return map.phi(p); }, q);
        CHECK((map.jacobian(q) - jac_fd).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("point_map: curvature term matches trajectory finite differences") {
    const auto model = RobotModel::desk_default({-0.3, 0.2, -0.7});
    oracles::Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const Vector q = rng.vector(3, -2.0, 2.0);
        const Vector qd = rng.vector(3, -1.5, 1.5);
        const int link = static_cast<int>(rng.uniform(0.0, 3.0));
        const double offset = rng.uniform(0.0, 1.0);
        const auto map = fabrics::point_map(model, link, offset);
        const auto jdqd_fd = oracles::fd_jdot_qdot(
            [&map](const Vector& p) { return map.jacobian(p); }, q, qd);
        CHECK((map.jdot_qdot(q, qd) - jdqd_fd).cwiseAbs().maxCoeff() < 1e-4);
    }
}

TEST_CASE("collision_spheres: straight arm sphere states") {
    const auto model = two_link_unit();

    const RobotState rest{vec({0.0, 0.0}), vec({0.0, 0.0})};
    const auto spheres_rest = fabrics::collision_spheres(model, rest);
    REQUIRE(spheres_rest.size() == 1);
    CHECK(spheres_rest[0].center.x() == doctest::Approx(0.5));
    CHECK(spheres_rest[0].center.y() == doctest::Approx(0.0));
    CHECK(spheres_rest[0].velocity.norm() == doctest::Approx(0.0));
    CHECK(spheres_rest[0].radius == doctest::Approx(0.05));

    const RobotState moving{vec({0.0, 0.0}), vec({1.0, 0.0})};
    const auto spheres_moving = fabrics::collision_spheres(model, moving);
    CHECK(spheres_moving[0].velocity.x() == doctest::Approx(0.0));
    CHECK(spheres_moving[0].velocity.y() == doctest::Approx(0.5));

    // Velocity cross-check against finite differences of the center.
    const double h = 1e-6;
    const Vector2d ahead =
        fk_point(model, moving.q + h * moving.qdot, 0, 0.5);
    const Vector2d behind =
        fk_point(model, moving.q - h * moving.qdot, 0, 0.5);
    const Vector2d vel_fd = (ahead - behind) / (2.0 * h);
    CHECK((spheres_moving[0].velocity - vel_fd).norm() < 1e-6);
}

TEST_CASE("collision_spheres: one entry per layout item") {
    const auto model = RobotModel::desk_default({});
    const RobotState state{vec({0.1, -0.4, 0.8}), vec({0.0, 0.2, -0.1})};
    CHECK(fabrics::collision_spheres(model, state).size() ==
          model.sphere_layout().size());
}

TEST_CASE("fk is base-translation equivariant") {
    oracles::Rng rng(27);
    const auto base_model = RobotModel::desk_default({});
    const auto shifted_model = RobotModel::desk_default({0.7, -1.2, 0.0});
    for (int trial = 0; trial < 50; ++trial) {
        const Vector q = rng.vector(3, -2.5, 2.5);
        const int link = static_cast<int>(rng.uniform(0.0, 3.0));
        const double offset = rng.uniform(0.0, 1.0);
        const Vector2d a = fk_point(base_model, q, link, offset);
        const Vector2d b = fk_point(shifted_model, q, link, offset);
        CHECK((b - a - Vector2d(0.7, -1.2)).norm() < 1e-14);
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(RobotModel({-1.0}, {}, {{-1.0, 1.0}}, {}),
                    fabrics::ConfigError);
    CHECK_THROWS_AS(RobotModel({1.0}, {}, {{1.0, -1.0}}, {}),
                    fabrics::ConfigError);
    CHECK_THROWS_AS(RobotModel({1.0}, {}, {{-1.0, 1.0}}, {{0, 0.5, -0.1}}),
                    fabrics::ConfigError);
    CHECK_THROWS_AS(RobotModel({1.0}, {}, {{-1.0, 1.0}}, {{3, 0.5, 0.1}}),
                    fabrics::ConfigError);
}

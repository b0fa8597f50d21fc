#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bfae/error.hpp"
#include "bfae/grid.hpp"

using namespace bfae;

TEST(Grid, ThreePointTrapezoid) {
    const Grid g = make_uniform_grid(0.0, 1.0, 3);
    EXPECT_EQ(g.points(), Eigen::Vector3d(0.0, 0.5, 1.0));
    EXPECT_EQ(g.weights(), Eigen::Vector3d(0.25, 0.5, 0.25));
}

TEST(Grid, TwoPoints) {
    const Grid g = make_uniform_grid(0.0, 1.0, 2);
    EXPECT_EQ(g.points(), Eigen::Vector2d(0.0, 1.0));
    EXPECT_EQ(g.weights(), Eigen::Vector2d(0.5, 0.5));
}

TEST(Grid, WeightsSumToLength) {
    for (Eigen::Index m : {2, 7, 50, 151}) {
        const Grid g = make_uniform_grid(-1.5, 2.0, m);
        EXPECT_EQ(g.size(), m);
        EXPECT_NEAR(g.weights().sum(), 3.5, 1e-12 * 3.5);
        EXPECT_EQ(g.point(0), -1.5);
        EXPECT_EQ(g.point(m - 1), 2.0);
    }
}

TEST(Grid, UniformInteriorWeightsExact) {
    const Grid g = make_uniform_grid(0.0, 1.0, 50);
    const double h = 1.0 / 49.0;
    for (Eigen::Index j = 1; j < 49; ++j) EXPECT_EQ(g.weight(j), h);
    EXPECT_EQ(g.weight(0), h / 2);
    EXPECT_EQ(g.weight(49), h / 2);
}

TEST(Grid, Errors) {
    try {
        make_uniform_grid(1.0, 1.0, 5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_interval);
    }
    try {
        make_uniform_grid(0.0, 1.0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::too_few_points);
    }
    EXPECT_THROW(Grid::from_points(Eigen::Vector3d(0.0, 0.5, 0.5)), Error);
}

TEST(Grid, NonUniformFromPoints) {
    const Grid g = Grid::from_points(Eigen::Vector4d(0.0, 0.1, 0.5, 1.0));
    EXPECT_NEAR(g.weight(0), 0.05, 1e-15);
    EXPECT_NEAR(g.weight(1), 0.25, 1e-15);
    EXPECT_NEAR(g.weight(2), 0.45, 1e-15);
    EXPECT_NEAR(g.weight(3), 0.25, 1e-15);
}

TEST(Integrate, ConstantAndLinear) {
    for (Eigen::Index m : {2, 3, 10, 51}) {
        const Grid g = make_uniform_grid(0.0, 1.0, m);
        EXPECT_NEAR(integrate(Eigen::VectorXd::Ones(m), g), 1.0, 1e-14);
    }
    const Grid g = make_uniform_grid(0.0, 1.0, 51);
    EXPECT_NEAR(integrate(g.points(), g), 0.5, 1e-15);
}

TEST(Integrate, Quadratic) {
    const Grid g = make_uniform_grid(0.0, 1.0, 101);
    EXPECT_NEAR(integrate(g.points().array().square().matrix(), g), 1.0 / 3.0, 1e-4);
}

TEST(Integrate, TrapezoidConverges) {
    double previous = 0.0;
    for (Eigen::Index intervals : {8, 16, 32, 64}) {
        const Grid g = make_uniform_grid(0.0, 1.0, intervals + 1);
        const double err = std::abs(integrate(g.points().array().square().matrix(), g) - 1.0 / 3.0);
        // Error is exactly 1 / (6 n^2) for t^2.
        EXPECT_NEAR(err, 1.0 / (6.0 * intervals * intervals), 1e-14);
        if (previous > 0) EXPECT_NEAR(previous / err, 4.0, 1e-6);
        previous = err;
    }
}

TEST(Integrate, Linear) {
    const Grid g = make_uniform_grid(0.0, 2.0, 17);
    const Eigen::VectorXd f = g.points().array().sin();
    const Eigen::VectorXd h = g.points().array().exp();
    EXPECT_NEAR(integrate(2.5 * f - 0.75 * h, g), 2.5 * integrate(f, g) - 0.75 * integrate(h, g), 1e-12);
}

TEST(Integrate, LengthMismatch) {
    const Grid g = make_uniform_grid(0.0, 1.0, 5);
    try {
        integrate(Eigen::VectorXd::Ones(4), g);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::length_mismatch);
    }
    EXPECT_THROW(inner_product(Eigen::VectorXd::Ones(5), Eigen::VectorXd::Ones(4), g), Error);
}

TEST(InnerProduct, Basics) {
    const Grid g = make_uniform_grid(0.0, 1.0, 11);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(11);
    EXPECT_NEAR(inner_product(one, one, g), 1.0, 1e-14);
    EXPECT_EQ(inner_product(one, Eigen::VectorXd::Zero(11), g), 0.0);
}

TEST(InnerProduct, SinCosOrthogonal) {
    const Grid g = make_uniform_grid(0.0, 1.0, 201);
    const Eigen::VectorXd s = (2 * std::numbers::pi * g.points().array()).sin();
    const Eigen::VectorXd c = (2 * std::numbers::pi * g.points().array()).cos();
    EXPECT_NEAR(inner_product(s, c, g), 0.0, 1e-6);
}

TEST(InnerProduct, SymmetricAndPositive) {
    const Grid g = make_uniform_grid(0.0, 1.0, 23);
    const Eigen::VectorXd f = g.points().array().cos() + 0.3;
    const Eigen::VectorXd h = g.points().array().square() - 0.2;
    EXPECT_EQ(inner_product(f, h, g), inner_product(h, f, g));
    EXPECT_GT(inner_product(f, f, g), 0.0);
}

TEST(LinearResample, Midpoint) {
    const Grid from = make_uniform_grid(0.0, 1.0, 2);
    const Grid to = Grid::single_point(0.0, 1.0);
    const Eigen::VectorXd v = linear_resample(Eigen::Vector2d(0.0, 1.0), from, to);
    ASSERT_EQ(v.size(), 1);
    EXPECT_DOUBLE_EQ(v[0], 0.5);
}

TEST(LinearResample, IdentityAndAffine) {
    const Grid from = make_uniform_grid(0.0, 1.0, 9);
    const Eigen::VectorXd f = (3.0 * from.points().array() + 2.0).matrix();
    EXPECT_EQ(linear_resample(f, from, from), f);
    const Grid fine = make_uniform_grid(0.0, 1.0, 37);
    const Eigen::VectorXd r = linear_resample(f, from, fine);
    for (Eigen::Index j = 0; j < fine.size(); ++j) EXPECT_NEAR(r[j], 3.0 * fine.point(j) + 2.0, 1e-14);
}

TEST(LinearResample, OutOfRange) {
    const Grid from = make_uniform_grid(0.0, 1.0, 5);
    const Grid to = make_uniform_grid(0.5, 1.5, 5);
    try {
        linear_resample(Eigen::VectorXd::Zero(5), from, to);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::out_of_range);
    }
}

TEST(Grid, RestoreIsBitwise) {
    const Grid u = make_uniform_grid(0.0, 1.0, 50);
    const Grid r = Grid::restore(0.0, 1.0, u.points());
    EXPECT_EQ(r, u);
    EXPECT_EQ(r.weights(), u.weights());
    const Grid one = Grid::restore(0.0, 1.0, Eigen::VectorXd::Constant(1, 0.5));
    EXPECT_EQ(one.size(), 1);
    EXPECT_EQ(one.weight(0), 1.0);
}

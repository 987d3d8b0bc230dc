#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "psfield/rng.hpp"
#include "psfield/thin_plate.hpp"

using namespace psfield;

namespace {

Eigen::Matrix2Xd random_positions(int p, Rng& rng) {
    Eigen::Matrix2Xd pos(2, p);
    for (Eigen::Index i = 0; i < pos.size(); ++i) pos(i) = rng.uniform(-2.0, 2.0);
    return pos;
}

}  // namespace

TEST_CASE("affine functions are reproduced with vanishing kernel weights") {
    Rng rng(41);
    for (int rep = 0; rep < 20; ++rep) {
        const int p = 3 + static_cast<int>(rng.next_u64() % 8);
        const Eigen::Matrix2Xd pos = random_positions(p, rng);
        const double a = rng.uniform(-3.0, 3.0);
        const double b = rng.uniform(-3.0, 3.0);
        const double c = rng.uniform(-3.0, 3.0);
        Eigen::VectorXd values(p);
        for (int i = 0; i < p; ++i) values(i) = a * pos(0, i) + b * pos(1, i) + c;

        const ThinPlateModel model = thin_plate_fit(pos, values);
        CHECK(model.weights.cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(model.affine(0) == doctest::Approx(a).epsilon(1e-8));
        CHECK(model.affine(1) == doctest::Approx(b).epsilon(1e-8));
        CHECK(model.affine(2) == doctest::Approx(c).epsilon(1e-8));
        for (int q = 0; q < 5; ++q) {
            const Eigen::Vector2d query(rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0));
            const double expected = a * query(0) + b * query(1) + c;
            CHECK(thin_plate_eval(model, query) ==
                  doctest::Approx(expected).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("the fit interpolates its control values exactly") {
    Rng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        const int p = 3 + static_cast<int>(rng.next_u64() % 10);
        const Eigen::Matrix2Xd pos = random_positions(p, rng);
        Eigen::VectorXd values(p);
        for (int i = 0; i < p; ++i) values(i) = rng.uniform(-2.0, 2.0);
        const ThinPlateModel model = thin_plate_fit(pos, values);
        for (int i = 0; i < p; ++i)
            CHECK(thin_plate_eval(model, pos.col(i)) ==
                  doctest::Approx(values(i)).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("fitting is linear in the values") {
    Rng rng(43);
    const Eigen::Matrix2Xd pos = random_positions(8, rng);
    Eigen::VectorXd v1(8), v2(8);
    for (int i = 0; i < 8; ++i) {
        v1(i) = rng.uniform(-1.0, 1.0);
        v2(i) = rng.uniform(-1.0, 1.0);
    }
    const ThinPlateModel m1 = thin_plate_fit(pos, v1);
    const ThinPlateModel m2 = thin_plate_fit(pos, v2);
    const ThinPlateModel msum = thin_plate_fit(pos, v1 + v2);
    for (int q = 0; q < 10; ++q) {
        const Eigen::Vector2d query(rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0));
        CHECK(thin_plate_eval(msum, query) ==
              doctest::Approx(thin_plate_eval(m1, query) + thin_plate_eval(m2, query))
                  .epsilon(1e-8)
                  .scale(1.0));
    }
}

TEST_CASE("a symmetric four-point stencil averages at its center") {
    // Control points at (+-1, 0), (0, +-1): the side conditions force the
    // kernel contributions at the origin to cancel, and the symmetry group of
    // the stencil forces the affine part there to the mean of the values.
    Eigen::Matrix2Xd pos(2, 4);
    pos << 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0;
    Rng rng(44);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd values(4);
        for (int i = 0; i < 4; ++i) values(i) = rng.uniform(-5.0, 5.0);
        const ThinPlateModel model = thin_plate_fit(pos, values);
        CHECK(thin_plate_eval(model, Eigen::Vector2d::Zero()) ==
              doctest::Approx(values.mean()).epsilon(1e-10).scale(1.0));
        CHECK(std::abs(model.weights.sum()) <= 1e-10);
    }
}

TEST_CASE("three points define the interpolating plane") {
    Eigen::Matrix2Xd pos(2, 3);
    pos << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0;
    Eigen::VectorXd values(3);
    values << 1.0, 3.0, -2.0;
    const ThinPlateModel model = thin_plate_fit(pos, values);
    // With exactly three points the solution is the affine interpolant.
    CHECK(model.weights.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(thin_plate_eval(model, Eigen::Vector2d(0.5, 0.5)) ==
          doctest::Approx(1.0 + 2.0 * 0.5 - 3.0 * 0.5).epsilon(1e-10));
}

TEST_CASE("degenerate geometry is rejected") {
    Eigen::Matrix2Xd two(2, 2);
    two << 0.0, 1.0, 0.0, 1.0;
    CHECK_THROWS_AS(thin_plate_fit(two, Eigen::VectorXd::Zero(2)), std::invalid_argument);

    Eigen::Matrix2Xd dup(2, 3);
    dup << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(thin_plate_fit(dup, Eigen::VectorXd::Zero(3)), std::invalid_argument);

    Eigen::Matrix2Xd mismatch(2, 3);
    mismatch << 0.0, 1.0, 0.0, 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(thin_plate_fit(mismatch, Eigen::VectorXd::Zero(4)), std::invalid_argument);

    Eigen::Matrix2Xd nan = mismatch;
    nan(0, 0) = std::nan("");
    CHECK_THROWS_AS(thin_plate_fit(nan, Eigen::VectorXd::Zero(3)), std::invalid_argument);

    Eigen::Matrix2Xd line3(2, 3);
    line3 << 0.0, 1.0, 2.0, 0.0, 1.0, 2.0;
    CHECK_THROWS_AS(thin_plate_fit(line3, Eigen::VectorXd::Zero(3)), std::runtime_error);

    Eigen::Matrix2Xd line5(2, 5);
    for (int i = 0; i < 5; ++i) {
        line5(0, i) = static_cast<double>(i);
        line5(1, i) = 2.0 * static_cast<double>(i) - 1.0;
    }
    CHECK_THROWS_AS(thin_plate_fit(line5, Eigen::VectorXd::Ones(5)), std::runtime_error);
}

#include "psfield/thin_plate.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>
#include <string>

namespace psfield {

namespace {

// phi(r) = r^2 log r, written on squared distances; the r -> 0 limit is 0.
double kernel(double d2) {
    return d2 > 0.0 ? 0.5 * d2 * std::log(d2) : 0.0;
}

}  // namespace

ThinPlateModel thin_plate_fit(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& values) {
    const Eigen::Index p = positions.cols();
    if (p < 3) throw std::invalid_argument("thin_plate_fit: need at least three control points");
    if (values.size() != p) throw std::invalid_argument("thin_plate_fit: value count mismatch");
    if (!positions.allFinite() || !values.allFinite())
        throw std::invalid_argument("thin_plate_fit: non-finite input");
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = i + 1; j < p; ++j)
            if ((positions.col(i) - positions.col(j)).squaredNorm() == 0.0)
                throw std::invalid_argument("thin_plate_fit: duplicate control points " +
                                            std::to_string(i) + " and " + std::to_string(j));

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p + 3, p + 3);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p; ++j) {
            const double k = kernel((positions.col(i) - positions.col(j)).squaredNorm());
            a(i, j) = k;
            a(j, i) = k;
        }
        a(i, p) = positions(0, i);
        a(i, p + 1) = positions(1, i);
        a(i, p + 2) = 1.0;
        a(p, i) = positions(0, i);
        a(p + 1, i) = positions(1, i);
        a(p + 2, i) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p + 3);
    rhs.head(p) = values;

    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible())
        throw std::runtime_error(
            "thin_plate_fit: singular system (collinear control points?)");
    const Eigen::VectorXd sol = lu.solve(rhs);

    ThinPlateModel model;
    model.control_points = positions;
    model.weights = sol.head(p);
    model.affine = sol.tail(3);
    return model;
}

double thin_plate_eval(const ThinPlateModel& model, const Eigen::Vector2d& q) {
    double f = model.affine(0) * q(0) + model.affine(1) * q(1) + model.affine(2);
    for (Eigen::Index j = 0; j < model.control_points.cols(); ++j)
        f += model.weights(j) * kernel((q - model.control_points.col(j)).squaredNorm());
    return f;
}

}  // namespace psfield

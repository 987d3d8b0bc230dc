#pragma once

#include <Eigen/Core>

namespace psfield {

// Scalar thin-plate spline f(q) = a*q_x + b*q_y + c + sum_j w_j phi(|q - p_j|)
// with phi(r) = r^2 log r (zero at r = 0).
struct ThinPlateModel {
    Eigen::Matrix2Xd control_points;
    Eigen::Vector3d affine;  // (a, b, c)
    Eigen::VectorXd weights;
};

// Exact interpolation through (positions, values); at least three distinct,
// non-collinear control points are required.
ThinPlateModel thin_plate_fit(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& values);

double thin_plate_eval(const ThinPlateModel& model, const Eigen::Vector2d& q);

}  // namespace psfield

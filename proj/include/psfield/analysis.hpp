#pragma once

#include <Eigen/Core>
#include <vector>

#include "psfield/image.hpp"

namespace psfield {

// Coordinate images (1-based pixel indices k = line, l = column) whose inner
// products with an image generate its raw moments:
//   u1 = k, u2 = l, u3 = 1, u4 = k^2 + l^2, u5 = k^2 - l^2, u6 = k*l.
struct InnerForms {
    Eigen::MatrixXd u1, u2, u3, u4, u5, u6;
};

InnerForms ellipticity_inner_forms(Eigen::Index rows, Eigen::Index cols);

// Ellipticity written purely through the inner forms; agrees with the
// central-moment definition.
Eigen::Vector2d ellipticity_moment_form(const Image& img);

// d/dt of both ellipticity components of img + t * direction, evaluated at t
// (closed form via the rational moment expressions).
Eigen::Vector2d ellipticity_directional_derivative(const Image& img, const Image& direction,
                                                   double t);

struct SensitivityResult {
    Eigen::VectorXd v_e1;        // variance-weighted mean |d e1 / dt| per direction
    Eigen::VectorXd v_e2;
    Eigen::VectorXd dispersion;  // population std of the projections per direction
};

// Ellipticity sensitivity of a PSF set along each perturbation direction:
// dispersion of the Frobenius projections times the mean absolute derivative
// at t = 0 across the set.
SensitivityResult sensitivity(const std::vector<Image>& psfs,
                              const std::vector<Image>& directions);

}  // namespace psfield

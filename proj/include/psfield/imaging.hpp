#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "psfield/image.hpp"

namespace psfield {

// Weight of the planar displacement term in the transport ground cost:
//   cost^2(p, q) = (p_0 - q_0)^2 + beta^2 * ((p_1 - q_1)^2 + (p_2 - q_2)^2)
// where coordinate 0 is intensity and 1, 2 are the line/column positions.
struct GroundMetric {
    double beta = 1.0;
};

// One column per pixel: (intensity, line, column). Each point carries the
// same unit mass. Spatial coordinates are stored unscaled; beta enters via
// the ground metric inside the transport operations only.
using PointCloud = Eigen::Matrix3Xd;

struct Moments {
    double mass = 0.0;
    double centroid_i = 0.0;
    double centroid_j = 0.0;
    double mu20 = 0.0;
    double mu02 = 0.0;
    double mu11 = 0.0;
};

// Lexicographic (row-major) pixel enumeration: point k = (i, j) with
// i = k / N_c, j = k % N_c.
PointCloud image_to_cloud(const Image& img);

// Adjoint rendering: each point distributes its intensity over the four
// nearest lattice sites with inverse-squared-distance weights; a point lying
// exactly on one or more sites sends everything there (ties split equally).
// Total intensity is conserved and lattice-aligned clouds round-trip exactly.
Image cloud_to_image(const PointCloud& cloud, Eigen::Index rows, Eigen::Index cols);

// Transport cost of the identity assignment between two same-shaped images
// (the spatial terms cancel, leaving the plain l2 distance of intensities).
double pixel_l2_distance(const Image& a, const Image& b);

Moments central_moments(const Image& img);

// Complex ellipticity (e1, e2) from second-order central moments.
Eigen::Vector2d ellipticity(const Image& img);

// Radial size sqrt((mu20 + mu02) / mass).
double psf_size(const Image& img);

struct FieldMetrics {
    double e_gamma = 0.0;  // mean l2 error of the ellipticity vector
    double e_size = 0.0;   // mean absolute size error
    double nmse = 0.0;     // mean of per-image ||est - truth||^2 / ||truth||^2
};

FieldMetrics field_metrics(const std::vector<Image>& truth, const std::vector<Image>& estimate);

}  // namespace psfield

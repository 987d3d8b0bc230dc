#pragma once

#include <Eigen/Core>
#include <vector>

#include "psfield/field.hpp"
#include "psfield/image.hpp"

namespace psfield {

struct PcaBasis {
    Image mean_image;
    std::vector<Image> components;  // orthonormal, deterministic sign
    Eigen::VectorXd variances;      // singular value^2 / (K - 1) per component
};

// Principal components of an image stack (mean-centered, thin SVD).
PcaBasis pca_fit(const std::vector<Image>& samples, int q);

Eigen::VectorXd pca_project(const PcaBasis& basis, const Image& img);
Image pca_reconstruct(const PcaBasis& basis, const Eigen::VectorXd& coeffs);

// Inverse-squared-distance weighted average of the p nearest samples; an
// exact position hit returns that sample unchanged.
Image idw_interpolate(const std::vector<FieldSample>& samples, const Eigen::Vector2d& target,
                      int p);

// Component-wise thin-plate interpolation of PCA coefficients over the p
// nearest samples, reconstructed through the basis.
Image rbf_interpolate(const std::vector<FieldSample>& samples, const Eigen::Vector2d& target,
                      int p, const PcaBasis& basis);

}  // namespace psfield

#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>

namespace psfield {

// Dense N_l x N_c intensity grid. PSF stamps carry unit total mass;
// intermediate images (residuals, basis components) need not.
struct Image {
    Eigen::MatrixXd pixels;

    Image() = default;
    Image(Eigen::Index rows, Eigen::Index cols) : pixels(Eigen::MatrixXd::Zero(rows, cols)) {}
    explicit Image(Eigen::MatrixXd px) : pixels(std::move(px)) {}

    Eigen::Index rows() const { return pixels.rows(); }
    Eigen::Index cols() const { return pixels.cols(); }
    double sum() const { return pixels.sum(); }
};

inline bool same_shape(const Image& a, const Image& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
}

bool is_unit_mass(const Image& img, double tol = 1e-9);

// Row-major flattening: v[i*N_c + j] = pixels(i, j).
Eigen::VectorXd to_vector(const Image& img);
Image from_vector(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols);

// ASCII stamp format: a "N_l N_c" header line, then one line per row of
// space-separated values written with 17 significant digits (round-trip safe).
void write_image(const std::string& path, const Image& img);
Image read_image(const std::string& path);

}  // namespace psfield

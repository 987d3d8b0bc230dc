#include "psfield/analysis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// The six raw inner products of an image with the coordinate forms.
struct RawMoments {
    double m1, m2, m3, m4, m5, m6;
};

RawMoments raw_moments(const Image& img) {
    RawMoments m{0, 0, 0, 0, 0, 0};
    for (Eigen::Index i = 0; i < img.rows(); ++i) {
        const auto k = static_cast<double>(i + 1);
        for (Eigen::Index j = 0; j < img.cols(); ++j) {
            const auto l = static_cast<double>(j + 1);
            const double v = img.pixels(i, j);
            m.m1 += k * v;
            m.m2 += l * v;
            m.m3 += v;
            m.m4 += (k * k + l * l) * v;
            m.m5 += (k * k - l * l) * v;
            m.m6 += k * l * v;
        }
    }
    return m;
}

}  // namespace

InnerForms ellipticity_inner_forms(Eigen::Index rows, Eigen::Index cols) {
    require(rows >= 1 && cols >= 1, "ellipticity_inner_forms: empty grid");
    InnerForms f;
    f.u1.resize(rows, cols);
    f.u2.resize(rows, cols);
    f.u3 = Eigen::MatrixXd::Ones(rows, cols);
    f.u4.resize(rows, cols);
    f.u5.resize(rows, cols);
    f.u6.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto k = static_cast<double>(i + 1);
        for (Eigen::Index j = 0; j < cols; ++j) {
            const auto l = static_cast<double>(j + 1);
            f.u1(i, j) = k;
            f.u2(i, j) = l;
            f.u4(i, j) = k * k + l * l;
            f.u5(i, j) = k * k - l * l;
            f.u6(i, j) = k * l;
        }
    }
    return f;
}

Eigen::Vector2d ellipticity_moment_form(const Image& img) {
    require(img.rows() >= 1 && img.cols() >= 1, "ellipticity_moment_form: empty image");
    const RawMoments m = raw_moments(img);
    const double denom = m.m3 * m.m4 - m.m1 * m.m1 - m.m2 * m.m2;
    require(denom != 0.0, "ellipticity_moment_form: degenerate second moments");
    const double e1 = (m.m3 * m.m5 - m.m1 * m.m1 + m.m2 * m.m2) / denom;
    const double e2 = 2.0 * (m.m3 * m.m6 - m.m1 * m.m2) / denom;
    return {e1, e2};
}

Eigen::Vector2d ellipticity_directional_derivative(const Image& img, const Image& direction,
                                                   double t) {
    require(same_shape(img, direction), "ellipticity_directional_derivative: shape mismatch");
    require(std::isfinite(t), "ellipticity_directional_derivative: non-finite t");
    const RawMoments a = raw_moments(img);
    const RawMoments b = raw_moments(direction);

    // Every raw moment is affine in t along the ray img + t * direction.
    const double m1 = a.m1 + t * b.m1, m2 = a.m2 + t * b.m2, m3 = a.m3 + t * b.m3;
    const double m4 = a.m4 + t * b.m4, m5 = a.m5 + t * b.m5, m6 = a.m6 + t * b.m6;

    const double c = m3 * m4 - m1 * m1 - m2 * m2;
    require(c != 0.0, "ellipticity_directional_derivative: degenerate second moments");
    const double num1 = m3 * m5 - m1 * m1 + m2 * m2;
    const double num2 = 2.0 * (m3 * m6 - m1 * m2);

    const double dc = b.m3 * m4 + m3 * b.m4 - 2.0 * m1 * b.m1 - 2.0 * m2 * b.m2;
    const double dnum1 = b.m3 * m5 + m3 * b.m5 - 2.0 * m1 * b.m1 + 2.0 * m2 * b.m2;
    const double dnum2 = 2.0 * (b.m3 * m6 + m3 * b.m6 - b.m1 * m2 - m1 * b.m2);

    const double de1 = dnum1 / c - num1 * dc / (c * c);
    const double de2 = dnum2 / c - num2 * dc / (c * c);
    return {de1, de2};
}

SensitivityResult sensitivity(const std::vector<Image>& psfs,
                              const std::vector<Image>& directions) {
    require(!psfs.empty(), "sensitivity: empty PSF set");
    require(!directions.empty(), "sensitivity: empty direction set");
    for (const Image& img : psfs)
        require(same_shape(img, psfs.front()), "sensitivity: PSF shape mismatch");
    for (const Image& dir : directions)
        require(same_shape(dir, psfs.front()), "sensitivity: direction shape mismatch");

    const auto kd = static_cast<Eigen::Index>(directions.size());
    const auto kp = static_cast<double>(psfs.size());
    SensitivityResult out;
    out.v_e1.resize(kd);
    out.v_e2.resize(kd);
    out.dispersion.resize(kd);

    for (Eigen::Index d = 0; d < kd; ++d) {
        const Image& dir = directions[static_cast<std::size_t>(d)];
        double proj_sum = 0.0, proj_sq = 0.0, abs1 = 0.0, abs2 = 0.0;
        for (const Image& psf : psfs) {
            const double proj = (psf.pixels.array() * dir.pixels.array()).sum();
            proj_sum += proj;
            proj_sq += proj * proj;
            const Eigen::Vector2d de = ellipticity_directional_derivative(psf, dir, 0.0);
            abs1 += std::abs(de(0));
            abs2 += std::abs(de(1));
        }
        const double mean = proj_sum / kp;
        const double var = std::max(proj_sq / kp - mean * mean, 0.0);
        const double disp = std::sqrt(var);
        out.dispersion(d) = disp;
        out.v_e1(d) = disp * abs1 / kp;
        out.v_e2(d) = disp * abs2 / kp;
    }
    return out;
}

}  // namespace psfield

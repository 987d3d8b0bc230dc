#include "psfield/baselines.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <stdexcept>
#include <string>

#include "psfield/thin_plate.hpp"

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_same_shapes(const std::vector<Image>& images, const std::string& who) {
    require(!images.empty(), who + ": empty image set");
    for (const Image& img : images)
        require(same_shape(img, images.front()), who + ": image shape mismatch");
}

}  // namespace

PcaBasis pca_fit(const std::vector<Image>& samples, int q) {
    require_same_shapes(samples, "pca_fit");
    const auto k = static_cast<Eigen::Index>(samples.size());
    require(k >= 2, "pca_fit: need at least two samples");
    const Eigen::Index rows = samples[0].rows(), cols = samples[0].cols();
    const Eigen::Index n = rows * cols;
    require(q >= 1 && q <= std::min<Eigen::Index>(k - 1, n),
            "pca_fit: component count out of range");

    Eigen::MatrixXd data(k, n);
    for (Eigen::Index i = 0; i < k; ++i)
        data.row(i) = to_vector(samples[static_cast<std::size_t>(i)]).transpose();
    const Eigen::RowVectorXd mean = data.colwise().mean();
    data.rowwise() -= mean;

    const Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = svd.singularValues();

    PcaBasis basis;
    basis.mean_image = from_vector(mean.transpose(), rows, cols);
    basis.variances.resize(q);
    basis.components.reserve(static_cast<std::size_t>(q));
    for (int c = 0; c < q; ++c) {
        Eigen::VectorXd v = svd.matrixV().col(c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        basis.components.push_back(from_vector(v, rows, cols));
        basis.variances(c) = s(c) * s(c) / static_cast<double>(k - 1);
    }
    return basis;
}

Eigen::VectorXd pca_project(const PcaBasis& basis, const Image& img) {
    require(!basis.components.empty(), "pca_project: empty basis");
    require(same_shape(img, basis.mean_image), "pca_project: image shape mismatch");
    const auto q = static_cast<Eigen::Index>(basis.components.size());
    const Eigen::MatrixXd centered = img.pixels - basis.mean_image.pixels;
    Eigen::VectorXd coeffs(q);
    for (Eigen::Index c = 0; c < q; ++c)
        coeffs(c) = (centered.array() * basis.components[static_cast<std::size_t>(c)].pixels.array()).sum();
    return coeffs;
}

Image pca_reconstruct(const PcaBasis& basis, const Eigen::VectorXd& coeffs) {
    require(!basis.components.empty(), "pca_reconstruct: empty basis");
    require(coeffs.size() == static_cast<Eigen::Index>(basis.components.size()),
            "pca_reconstruct: coefficient count mismatch");
    Image out = basis.mean_image;
    for (Eigen::Index c = 0; c < coeffs.size(); ++c)
        out.pixels += coeffs(c) * basis.components[static_cast<std::size_t>(c)].pixels;
    return out;
}

Image idw_interpolate(const std::vector<FieldSample>& samples, const Eigen::Vector2d& target,
                      int p) {
    const std::vector<int> nbrs = nearest_neighbors(samples, target, p);
    for (const FieldSample& s : samples)
        require(same_shape(s.img, samples.front().img), "idw_interpolate: image shape mismatch");

    // Exact hit: the sample itself (ties broken toward the lowest index).
    const FieldSample& closest = samples[static_cast<std::size_t>(nbrs.front())];
    if ((closest.pos - target).squaredNorm() == 0.0) return closest.img;

    double total = 0.0;
    Image out;
    out.pixels = Eigen::MatrixXd::Zero(closest.img.rows(), closest.img.cols());
    for (int idx : nbrs) {
        const FieldSample& s = samples[static_cast<std::size_t>(idx)];
        const double w = 1.0 / (s.pos - target).squaredNorm();
        out.pixels += w * s.img.pixels;
        total += w;
    }
    out.pixels /= total;
    return out;
}

Image rbf_interpolate(const std::vector<FieldSample>& samples, const Eigen::Vector2d& target,
                      int p, const PcaBasis& basis) {
    require(p >= 3, "rbf_interpolate: need at least three neighbors for the coefficient maps");
    const std::vector<int> nbrs = nearest_neighbors(samples, target, p);

    const auto q = static_cast<Eigen::Index>(basis.components.size());
    Eigen::Matrix2Xd positions(2, p);
    Eigen::MatrixXd coeffs(q, p);
    for (int a = 0; a < p; ++a) {
        const FieldSample& s = samples[static_cast<std::size_t>(nbrs[static_cast<std::size_t>(a)])];
        positions.col(a) = s.pos;
        coeffs.col(a) = pca_project(basis, s.img);
    }

    Eigen::VectorXd mapped(q);
    for (Eigen::Index c = 0; c < q; ++c) {
        const ThinPlateModel model = thin_plate_fit(positions, coeffs.row(c).transpose());
        mapped(c) = thin_plate_eval(model, target);
    }
    return pca_reconstruct(basis, mapped);
}

}  // namespace psfield

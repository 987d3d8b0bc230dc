#include "psfield/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Integer lattice coordinates in [0, n) nearest to v, ordered by
// (distance, coordinate); at most four are needed by the splatting rule.
int nearest_sites(double v, Eigen::Index n, std::array<Eigen::Index, 4>& out) {
    const double clamped = std::min(std::max(v, 0.0), static_cast<double>(n - 1));
    const auto base = static_cast<Eigen::Index>(std::floor(clamped));
    std::array<Eigen::Index, 8> cand{};
    int m = 0;
    for (Eigen::Index k = base - 3; k <= base + 4; ++k) {
        if (k >= 0 && k < n) cand[static_cast<std::size_t>(m++)] = k;
    }
    std::sort(cand.begin(), cand.begin() + m, [v](Eigen::Index a, Eigen::Index b) {
        const double da = std::abs(v - static_cast<double>(a));
        const double db = std::abs(v - static_cast<double>(b));
        if (da != db) return da < db;
        return a < b;
    });
    const int take = std::min(m, 4);
    for (int k = 0; k < take; ++k) out[static_cast<std::size_t>(k)] = cand[static_cast<std::size_t>(k)];
    return take;
}

}  // namespace

bool is_unit_mass(const Image& img, double tol) {
    return std::abs(img.sum() - 1.0) <= tol;
}

Eigen::VectorXd to_vector(const Image& img) {
    const Eigen::Index nl = img.rows(), nc = img.cols();
    Eigen::VectorXd v(nl * nc);
    for (Eigen::Index i = 0; i < nl; ++i)
        for (Eigen::Index j = 0; j < nc; ++j) v(i * nc + j) = img.pixels(i, j);
    return v;
}

Image from_vector(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
    require(rows > 0 && cols > 0 && v.size() == rows * cols, "from_vector: size mismatch");
    Image img(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) img.pixels(i, j) = v(i * cols + j);
    return img;
}

void write_image(const std::string& path, const Image& img) {
    require(img.rows() > 0 && img.cols() > 0, "write_image: empty image");
    std::string out;
    out.reserve(static_cast<std::size_t>(img.rows() * img.cols()) * 24 + 32);
    out += std::to_string(img.rows());
    out += ' ';
    out += std::to_string(img.cols());
    out += '\n';
    for (Eigen::Index i = 0; i < img.rows(); ++i) {
        for (Eigen::Index j = 0; j < img.cols(); ++j) {
            if (j) out += ' ';
            out += fmt(img.pixels(i, j));
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument("write_image: cannot open " + path);
    f << out;
    if (!f) throw std::invalid_argument("write_image: write failed for " + path);
}

Image read_image(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("read_image: cannot open " + path);
    long long rows = 0, cols = 0;
    if (!(f >> rows >> cols) || rows <= 0 || cols <= 0)
        throw std::invalid_argument("read_image: bad header in " + path);
    Image img(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < img.rows(); ++i)
        for (Eigen::Index j = 0; j < img.cols(); ++j) {
            double v = 0.0;
            if (!(f >> v)) throw std::invalid_argument("read_image: truncated data in " + path);
            if (!std::isfinite(v)) throw std::invalid_argument("read_image: non-finite value in " + path);
            img.pixels(i, j) = v;
        }
    return img;
}

PointCloud image_to_cloud(const Image& img) {
    const Eigen::Index nl = img.rows(), nc = img.cols();
    require(nl > 0 && nc > 0, "image_to_cloud: empty image");
    PointCloud cloud(3, nl * nc);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < nl; ++i)
        for (Eigen::Index j = 0; j < nc; ++j, ++k) {
            cloud(0, k) = img.pixels(i, j);
            cloud(1, k) = static_cast<double>(i);
            cloud(2, k) = static_cast<double>(j);
        }
    return cloud;
}

Image cloud_to_image(const PointCloud& cloud, Eigen::Index rows, Eigen::Index cols) {
    require(rows > 0 && cols > 0, "cloud_to_image: empty target grid");
    require(cloud.cols() == rows * cols, "cloud_to_image: cloud size does not match grid");
    Image out(rows, cols);
    std::array<Eigen::Index, 4> ri{}, ci{};
    struct Site {
        double d2;
        Eigen::Index r, c;
    };
    std::array<Site, 16> sites{};
    for (Eigen::Index k = 0; k < cloud.cols(); ++k) {
        const double w = cloud(0, k);
        const double r = cloud(1, k);
        const double c = cloud(2, k);
        if (!std::isfinite(w) || !std::isfinite(r) || !std::isfinite(c))
            throw std::invalid_argument("cloud_to_image: non-finite point");
        const int nr = nearest_sites(r, rows, ri);
        const int nc = nearest_sites(c, cols, ci);
        int m = 0;
        for (int a = 0; a < nr; ++a)
            for (int b = 0; b < nc; ++b) {
                const double dr = r - static_cast<double>(ri[static_cast<std::size_t>(a)]);
                const double dc = c - static_cast<double>(ci[static_cast<std::size_t>(b)]);
                sites[static_cast<std::size_t>(m++)] = {dr * dr + dc * dc,
                                                        ri[static_cast<std::size_t>(a)],
                                                        ci[static_cast<std::size_t>(b)]};
            }
        std::sort(sites.begin(), sites.begin() + m, [](const Site& a, const Site& b) {
            if (a.d2 != b.d2) return a.d2 < b.d2;
            if (a.r != b.r) return a.r < b.r;
            return a.c < b.c;
        });
        const int take = std::min(m, 4);
        if (sites[0].d2 == 0.0) {
            // On-lattice point: all intensity to the coincident site(s).
            int hits = 1;
            while (hits < take && sites[static_cast<std::size_t>(hits)].d2 == 0.0) ++hits;
            for (int a = 0; a < hits; ++a)
                out.pixels(sites[static_cast<std::size_t>(a)].r, sites[static_cast<std::size_t>(a)].c) +=
                    w / hits;
            continue;
        }
        double denom = 0.0;
        for (int a = 0; a < take; ++a) denom += 1.0 / sites[static_cast<std::size_t>(a)].d2;
        for (int a = 0; a < take; ++a) {
            const Site& s = sites[static_cast<std::size_t>(a)];
            out.pixels(s.r, s.c) += w * (1.0 / s.d2) / denom;
        }
    }
    return out;
}

double pixel_l2_distance(const Image& a, const Image& b) {
    require(same_shape(a, b), "pixel_l2_distance: shape mismatch");
    require(a.rows() > 0 && a.cols() > 0, "pixel_l2_distance: empty image");
    return (a.pixels - b.pixels).norm();
}

Moments central_moments(const Image& img) {
    const Eigen::Index nl = img.rows(), nc = img.cols();
    require(nl > 0 && nc > 0, "central_moments: empty image");
    Moments m;
    double si = 0.0, sj = 0.0;
    for (Eigen::Index i = 0; i < nl; ++i)
        for (Eigen::Index j = 0; j < nc; ++j) {
            const double x = img.pixels(i, j);
            m.mass += x;
            si += x * static_cast<double>(i);
            sj += x * static_cast<double>(j);
        }
    require(m.mass != 0.0, "central_moments: zero total intensity");
    m.centroid_i = si / m.mass;
    m.centroid_j = sj / m.mass;
    for (Eigen::Index i = 0; i < nl; ++i)
        for (Eigen::Index j = 0; j < nc; ++j) {
            const double x = img.pixels(i, j);
            const double di = static_cast<double>(i) - m.centroid_i;
            const double dj = static_cast<double>(j) - m.centroid_j;
            m.mu20 += x * di * di;
            m.mu02 += x * dj * dj;
            m.mu11 += x * di * dj;
        }
    return m;
}

Eigen::Vector2d ellipticity(const Image& img) {
    const Moments m = central_moments(img);
    const double denom = m.mu20 + m.mu02;
    if (denom == 0.0) throw std::invalid_argument("ellipticity: degenerate second moments");
    return {(m.mu20 - m.mu02) / denom, 2.0 * m.mu11 / denom};
}

double psf_size(const Image& img) {
    const Moments m = central_moments(img);
    if (m.mass <= 0.0) throw std::invalid_argument("psf_size: non-positive total intensity");
    return std::sqrt((m.mu20 + m.mu02) / m.mass);
}

FieldMetrics field_metrics(const std::vector<Image>& truth, const std::vector<Image>& estimate) {
    require(!truth.empty(), "field_metrics: empty truth set");
    require(truth.size() == estimate.size(), "field_metrics: set size mismatch");
    FieldMetrics fm;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        require(same_shape(truth[k], estimate[k]), "field_metrics: shape mismatch");
        const double tn = truth[k].pixels.norm();
        require(tn > 0.0, "field_metrics: zero truth image");
        fm.e_gamma += (ellipticity(truth[k]) - ellipticity(estimate[k])).norm();
        fm.e_size += std::abs(psf_size(truth[k]) - psf_size(estimate[k]));
        fm.nmse += (estimate[k].pixels - truth[k].pixels).squaredNorm() / (tn * tn);
    }
    const auto n = static_cast<double>(truth.size());
    fm.e_gamma /= n;
    fm.e_size /= n;
    fm.nmse /= n;
    return fm;
}

}  // namespace psfield

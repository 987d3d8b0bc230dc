#include "psfield/embedding.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "psfield/parallel.hpp"
#include "psfield/rng.hpp"

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

DistanceMatrix make_distance_matrix(Eigen::MatrixXd d2) {
    require(d2.rows() == d2.cols() && d2.rows() >= 1, "distance matrix must be square");
    require(d2.allFinite(), "distance matrix must be finite");
    const double scale = 1.0 + d2.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
        require(std::abs(d2(i, i)) <= 1e-9 * scale, "distance matrix diagonal must be zero");
        for (Eigen::Index j = i + 1; j < d2.cols(); ++j) {
            require(std::abs(d2(i, j) - d2(j, i)) <= 1e-9 * scale,
                    "distance matrix must be symmetric");
            const double v = std::max(0.5 * (d2(i, j) + d2(j, i)), 0.0);
            d2(i, j) = v;
            d2(j, i) = v;
        }
        d2(i, i) = 0.0;
    }
    return {std::move(d2)};
}

DistanceMatrix pairwise_distance_matrix(const std::vector<PointCloud>& clouds,
                                        const GroundMetric& metric, const SlicedConfig& cfg,
                                        int threads, Eigen::MatrixXi* discrepancies) {
    require(clouds.size() >= 2, "pairwise_distance_matrix: need at least two clouds");
    const Eigen::Index n = clouds[0].cols();
    for (const PointCloud& c : clouds)
        require(c.cols() == n, "pairwise_distance_matrix: cloud size mismatch");

    const auto k = static_cast<Eigen::Index>(clouds.size());
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(k * (k - 1) / 2));
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) pairs.emplace_back(i, j);

    std::vector<double> dist(pairs.size(), 0.0);
    std::vector<int> disc(pairs.size(), 0);
    parallel_for(pairs.size(), threads, [&](std::size_t idx) {
        const auto [i, j] = pairs[idx];
        SlicedConfig pair_cfg = cfg;
        pair_cfg.rng_seed = derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(j));
        const TransportResult res =
            sliced_transport(clouds[static_cast<std::size_t>(i)],
                             clouds[static_cast<std::size_t>(j)], metric, pair_cfg);
        dist[idx] = res.distance;
        disc[idx] = res.discrepancy;
    });

    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(k, k);
    if (discrepancies) discrepancies->setZero(k, k);
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        const auto [i, j] = pairs[idx];
        d2(i, j) = dist[idx] * dist[idx];
        d2(j, i) = d2(i, j);
        if (discrepancies) {
            (*discrepancies)(i, j) = disc[idx];
            (*discrepancies)(j, i) = disc[idx];
        }
    }
    return {std::move(d2)};
}

Eigen::MatrixXd centering_matrix(Eigen::Index p) {
    require(p >= 1, "centering_matrix: p must be >= 1");
    return Eigen::MatrixXd::Identity(p, p) -
           Eigen::MatrixXd::Constant(p, p, 1.0 / static_cast<double>(p));
}

Embedding mds_embed(const DistanceMatrix& dist, int d_max) {
    const Eigen::Index p = dist.d2.rows();
    require(p >= 2, "mds_embed: need at least two points");
    require(d_max >= 1, "mds_embed: d_max must be >= 1");

    const Eigen::MatrixXd c = centering_matrix(p);
    Eigen::MatrixXd gram = -0.5 * c * dist.d2 * c;
    gram = 0.5 * (gram + gram.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    require(es.info() == Eigen::Success, "mds_embed: eigendecomposition failed");

    Embedding out;
    out.eigenvalues.resize(p);
    Eigen::MatrixXd vecs(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        out.eigenvalues(k) = es.eigenvalues()(p - 1 - k);
        vecs.col(k) = es.eigenvectors().col(p - 1 - k);
    }

    double neg = 0.0, total = 0.0;
    for (Eigen::Index k = 0; k < p; ++k) {
        total += std::abs(out.eigenvalues(k));
        if (out.eigenvalues(k) < 0.0) neg += -out.eigenvalues(k);
    }
    out.clamped_fraction = total > 0.0 ? neg / total : 0.0;

    const double lead = out.eigenvalues(0);
    Eigen::Index rank = 0;
    if (lead > 0.0)
        for (Eigen::Index k = 0; k < p; ++k)
            if (out.eigenvalues(k) > 1e-9 * lead) ++rank;

    const Eigen::Index d = std::max<Eigen::Index>(1, std::min<Eigen::Index>(d_max, rank));
    out.coords = Eigen::MatrixXd::Zero(d, p);
    for (Eigen::Index k = 0; k < d && k < rank; ++k) {
        Eigen::VectorXd v = vecs.col(k);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.coords.row(k) = std::sqrt(std::max(out.eigenvalues(k), 0.0)) * v.transpose();
    }
    return out;
}

int select_dimension(const Eigen::VectorXd& eigenvalues, int d_ext) {
    require(eigenvalues.size() >= 1, "select_dimension: empty spectrum");
    require(d_ext >= 1, "select_dimension: d_ext must be >= 1");
    const double lead = eigenvalues(0);
    int rank = 0;
    if (lead > 0.0)
        for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
            if (eigenvalues(k) > 1e-9 * lead) ++rank;
    const int p = static_cast<int>(eigenvalues.size());
    return std::max(1, std::min({p, d_ext, rank}));
}

}  // namespace psfield

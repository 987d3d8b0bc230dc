#pragma once

#include <Eigen/Core>
#include <vector>

#include "psfield/imaging.hpp"
#include "psfield/transport.hpp"

namespace psfield {

// Symmetric matrix of squared pairwise transport distances, zero diagonal.
struct DistanceMatrix {
    Eigen::MatrixXd d2;
};

// Validates (square, finite, near-symmetric, non-negative) and symmetrizes.
DistanceMatrix make_distance_matrix(Eigen::MatrixXd d2);

// Squared sliced-transport distances for every unordered pair, computed with
// a per-pair derived seed so the matrix is independent of evaluation order
// and thread count. Pairs whose assignment never settles within the
// iteration budget keep their approximated distance (the energy still
// converges when the discrete assignment oscillates between near-ties); the
// optional `discrepancies` matrix flags such entries with the final
// per-direction disagreement count.
DistanceMatrix pairwise_distance_matrix(const std::vector<PointCloud>& clouds,
                                        const GroundMetric& metric, const SlicedConfig& cfg,
                                        int threads = 1,
                                        Eigen::MatrixXi* discrepancies = nullptr);

// J = I - (1/p) 11^T.
Eigen::MatrixXd centering_matrix(Eigen::Index p);

struct Embedding {
    // d x p coordinate matrix; row k is sqrt(lambda_k) times the k-th
    // eigenvector (sign fixed so the largest-magnitude entry is positive).
    Eigen::MatrixXd coords;
    // All p Gram eigenvalues, non-increasing, unclamped.
    Eigen::VectorXd eigenvalues;
    // |negative eigenvalue mass| / total absolute mass (metric distortion).
    double clamped_fraction = 0.0;
};

// Classical multidimensional scaling of a squared-distance matrix, keeping at
// most d_max coordinates (fewer when the numerical rank is smaller).
Embedding mds_embed(const DistanceMatrix& dist, int d_max);

// Embedding dimension: numerical rank of the Gram spectrum capped by the
// extrinsic dimension estimate, at least 1.
int select_dimension(const Eigen::VectorXd& eigenvalues, int d_ext);

}  // namespace psfield

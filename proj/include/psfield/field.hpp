#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "psfield/imaging.hpp"
#include "psfield/transport.hpp"

namespace psfield {

struct FieldSample {
    Eigen::Vector2d pos;
    Image img;
};

// Indices of the p samples closest to the target in field coordinates,
// ordered by (distance, index).
std::vector<int> nearest_neighbors(const std::vector<FieldSample>& samples,
                                   const Eigen::Vector2d& target, int p);

// Ground-metric weight from the field itself: the max-abs pixel difference of
// the closest pair of field positions. A zero difference (duplicate images at
// the closest positions) is a degenerate metric and raises an error.
GroundMetric compute_beta(const std::vector<FieldSample>& samples);

struct BarycentricWeights {
    Eigen::VectorXd w;       // simplex point: non-negative, sums to one
    double residual = 0.0;   // || R w - target ||
};

// Projection of target_coords onto the convex hull of the columns of
// neighbor_coords (d x p): simplex-constrained least squares, solved by an
// accelerated projected gradient with an exact active-support polish.
BarycentricWeights barycentric_coordinates(const Eigen::VectorXd& target_coords,
                                           const Eigen::MatrixXd& neighbor_coords);

// Squared pairwise distance plus the final assignment disagreement count of
// the transport that produced it (0 when the assignment settled exactly;
// near-tied clouds can leave a nonzero count while the distance itself is
// still well converged).
struct CachedDistance {
    double d2 = 0.0;
    int discrepancy = 0;
};

// Shared store of squared pairwise distances keyed by sample index pair.
class DistanceCache {
public:
    std::optional<CachedDistance> get(int i, int j) const;
    void put(int i, int j, double d2, int discrepancy = 0);
    std::size_t size() const;

private:
    static std::uint64_t key(int i, int j);
    mutable std::mutex mu_;
    std::unordered_map<std::uint64_t, CachedDistance> map_;
};

struct TrainOptions {
    int neighbors = 15;
    int d_ext = 0;      // 0: estimate from the samples' principal spectrum
    double beta = 0.0;  // 0: compute from the field (compute_beta)
    SlicedConfig sliced;
    int threads = 1;
};

struct TargetDiagnostics {
    int discrepancy = 0;       // worst transport disagreement across this
                               // target's pair distances and barycenter folds
    double mass_drift = 0.0;   // |mass - 1| before renormalization
    double qp_residual = 0.0;  // hull-projection residual
    int embedding_dim = 0;
    double seconds = 0.0;
};

// Transport-based field interpolation: local pairwise distances -> metric
// embedding -> thin-plate field map -> hull weights -> sequential barycenter,
// rendered back to an image per target.
std::vector<Image> train_interpolate(const std::vector<FieldSample>& samples,
                                     const std::vector<Eigen::Vector2d>& targets,
                                     const TrainOptions& opt, DistanceCache* cache = nullptr,
                                     std::vector<TargetDiagnostics>* diagnostics = nullptr);

// Count of dominant principal directions of the sample stack (relative
// singular-value threshold 1e-6), capped at K - 1; lower bound for useful
// embedding dimensions.
int estimate_extrinsic_dimension(const std::vector<FieldSample>& samples);

}  // namespace psfield

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "psfield/imaging.hpp"

namespace psfield {

// sigma[i] = index of the target point matched to source point i.
using Assignment = std::vector<int>;

struct SlicedConfig {
    int num_directions = 30;
    int max_iters = 20000;
    double step_size = 2.0;
    // 0 keeps the step constant; values in (1/2, 1] give the classical
    // stochastic-approximation decay step_size / n^a.
    double step_decay_exponent = 0.0;
    std::uint64_t rng_seed = 1;
    // Hungarian seeding window (rows, cols); disabled when absent.
    std::optional<std::pair<int, int>> init_window;
};

struct TransportResult {
    PointCloud y_star;       // target cloud relabeled into source order (or the
                             // final iterate when the assignment never settled)
    double distance = 0.0;   // ground-metric cost of the final coupling
    int discrepancy = 0;     // per-direction assignment disagreements at exit
    int iterations_used = 0; // applied gradient steps
};

// Monotone rearrangement between two equal-length scalar samples:
// sigma[i] = index in y of the order statistic matching x_i's rank.
// Ties broken by index, making the result deterministic.
Assignment assignment_1d(const std::vector<double>& x, const std::vector<double>& y);

// Exact one-dimensional p-Wasserstein distance (sorted-sample matching).
double wasserstein_1d(const std::vector<double>& x, const std::vector<double>& y, double p);

// Exact one-dimensional 2-Wasserstein barycenter of equal-length samples:
// the i-th order statistic is the weighted mean of the inputs' i-th order
// statistics.
std::vector<double> barycenter_1d(const std::vector<std::vector<double>>& samples,
                                  const std::vector<double>& weights);

// Exact linear assignment (Jonker-Volgenant shortest augmenting paths) on a
// square cost matrix; returns the row-to-column matching minimizing the sum.
Assignment hungarian(const Eigen::MatrixXd& cost);

// Partial exact matching used to initialize the sliced descent: both clouds
// contribute a window of points around their intensity centroids (an h x w
// lattice window for image-derived clouds, the h*w spatially nearest points
// otherwise), the window points are matched exactly under the ground cost,
// and the source cloud is returned with its window replaced by the matched
// target points.
PointCloud hungarian_seed(const PointCloud& x_cloud, const PointCloud& y_cloud,
                          const GroundMetric& metric, std::pair<int, int> window);

// Number of points whose matched index differs across any two directions.
int discrepancy_support(const std::vector<Assignment>& per_direction);

// Stochastic sliced-Wasserstein descent of Z towards the target cloud,
// starting from the (optionally seeded) source. Convergence requires a
// direction-consistent assignment (zero discrepancy) and a vanishing step
// for three consecutive direction batches; the target is then relabeled
// exactly into source order.
TransportResult sliced_transport(const PointCloud& x_cloud, const PointCloud& y_cloud,
                                 const GroundMetric& metric, const SlicedConfig& cfg);

// Straight-line displacement between aligned clouds at t in [0, 1].
PointCloud displacement_interpolate(const PointCloud& x_cloud, const PointCloud& y_star, double t);

struct TimedCloud {
    PointCloud cloud;
    double t = 0.0;
};

// Displacement path whose per-snapshot motion is projected onto the dominant
// velocity direction and capped at mu_max, yielding pieces of bounded speed;
// ends exactly at y_star. i_max < 0 selects the default budget
// 10 * ceil(||X - Y*|| / mu_max).
std::vector<TimedCloud> velocity_constrained_interpolate(const PointCloud& x_cloud,
                                                         const PointCloud& y_star, double mu_max,
                                                         int i_max = -1);

// Fraction of the straight-line gap already covered by iterate i.
double time_parameter_linear(const std::vector<PointCloud>& iterates, std::size_t i);

// Fraction of the polyline length already covered by iterate i.
double time_parameter_curve_length(const std::vector<PointCloud>& iterates, std::size_t i);

struct BarycenterResult {
    PointCloud cloud;
    int max_discrepancy = 0;   // worst per-fold assignment disagreement
    int total_iterations = 0;  // applied gradient steps across folds
};

// Approximate Wasserstein barycenter by folding the clouds in decreasing
// weight order: each step transports the running barycenter onto the next
// cloud and displaces by the incremental weight ratio.
BarycenterResult sequential_barycenter(const std::vector<PointCloud>& clouds,
                                       const std::vector<double>& weights,
                                       const GroundMetric& metric, const SlicedConfig& cfg);

}  // namespace psfield

#include "psfield/transport.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "psfield/rng.hpp"

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Monotone bijection from finite doubles to unsigned integers: flipping the
// sign bit of non-negatives and all bits of negatives makes unsigned
// comparison agree exactly with operator< on the original values.
inline std::uint64_t sort_key(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    return (bits & 0x8000000000000000ULL) ? ~bits : (bits ^ 0x8000000000000000ULL);
}

struct ArgsortScratch {
    std::vector<std::uint64_t> keys_a, keys_b;
    std::vector<int> idx_a, idx_b;
};

// Stable LSD radix argsort: ascending by value, ties broken by index (the
// identity payload is stable under every pass). Integer-only, so the order is
// identical on every run regardless of thread count or library version.
void argsort(const std::vector<double>& vals, ArgsortScratch& s, std::vector<int>& order) {
    const int n = static_cast<int>(vals.size());
    s.keys_a.resize(static_cast<std::size_t>(n));
    s.keys_b.resize(static_cast<std::size_t>(n));
    s.idx_a.resize(static_cast<std::size_t>(n));
    s.idx_b.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        s.keys_a[static_cast<std::size_t>(k)] = sort_key(vals[static_cast<std::size_t>(k)]);
        s.idx_a[static_cast<std::size_t>(k)] = k;
    }
    for (int pass = 0; pass < 8; ++pass) {
        int hist[257] = {0};
        const int sh = pass * 8;
        for (int k = 0; k < n; ++k) ++hist[((s.keys_a[static_cast<std::size_t>(k)] >> sh) & 255) + 1];
        if (n > 0 && hist[((s.keys_a[0] >> sh) & 255) + 1] == n) continue;  // one bucket: no-op pass
        for (int b = 0; b < 256; ++b) hist[b + 1] += hist[b];
        for (int k = 0; k < n; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const int pos = hist[(s.keys_a[ku] >> sh) & 255]++;
            const auto pu = static_cast<std::size_t>(pos);
            s.keys_b[pu] = s.keys_a[ku];
            s.idx_b[pu] = s.idx_a[ku];
        }
        s.keys_a.swap(s.keys_b);
        s.idx_a.swap(s.idx_b);
    }
    for (int k = 0; k < n; ++k) order[static_cast<std::size_t>(k)] = s.idx_a[static_cast<std::size_t>(k)];
}

double ground_cost2(const PointCloud& a, Eigen::Index i, const PointCloud& b, Eigen::Index j,
                    double beta) {
    const double di = a(0, i) - b(0, j);
    const double dr = a(1, i) - b(1, j);
    const double dc = a(2, i) - b(2, j);
    return di * di + beta * beta * (dr * dr + dc * dc);
}

// Cost of a source-aligned coupling, summed over sorted per-pair terms so the
// result depends only on the multiset of matched pairs (exact symmetry under
// argument swap for exact matchings).
double aligned_cost(const PointCloud& x, const PointCloud& y_aligned, double beta) {
    std::vector<double> terms(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index k = 0; k < x.cols(); ++k)
        terms[static_cast<std::size_t>(k)] = ground_cost2(x, k, y_aligned, k, beta);
    std::sort(terms.begin(), terms.end());
    return std::sqrt(std::accumulate(terms.begin(), terms.end(), 0.0));
}

struct LatticeDims {
    Eigen::Index rows = 0, cols = 0;
};

// An image-derived cloud covers a full integer grid; anything else (blended
// barycenter iterates in particular) gets the generalized window.
std::optional<LatticeDims> lattice_dims(const PointCloud& c) {
    Eigen::Index maxr = -1, maxc = -1;
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
        const double r = c(1, k), col = c(2, k);
        if (!(r >= 0.0) || !(col >= 0.0) || r != std::floor(r) || col != std::floor(col) ||
            r > 1e9 || col > 1e9)
            return std::nullopt;
        maxr = std::max(maxr, static_cast<Eigen::Index>(r));
        maxc = std::max(maxc, static_cast<Eigen::Index>(col));
    }
    if ((maxr + 1) * (maxc + 1) != c.cols()) return std::nullopt;
    return LatticeDims{maxr + 1, maxc + 1};
}

std::pair<double, double> spatial_centroid(const PointCloud& c) {
    double mass = 0.0, sr = 0.0, sc = 0.0;
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
        mass += c(0, k);
        sr += c(0, k) * c(1, k);
        sc += c(0, k) * c(2, k);
    }
    if (mass != 0.0) return {sr / mass, sc / mass};
    // Degenerate intensity: fall back to the unweighted spatial mean.
    const auto n = static_cast<double>(c.cols());
    return {c.row(1).sum() / n, c.row(2).sum() / n};
}

std::vector<Eigen::Index> window_indices(const PointCloud& c, int h, int w, double cr, double cc) {
    const auto dims = lattice_dims(c);
    if (dims) {
        require(h <= dims->rows && w <= dims->cols, "hungarian_seed: window exceeds image extent");
        auto clamp_start = [](double center, int extent, Eigen::Index n) {
            auto start = static_cast<Eigen::Index>(std::llround(center)) - extent / 2;
            return std::min(std::max<Eigen::Index>(start, 0), n - extent);
        };
        const Eigen::Index r0 = clamp_start(cr, h, dims->rows);
        const Eigen::Index c0 = clamp_start(cc, w, dims->cols);
        std::vector<Eigen::Index> ind;
        ind.reserve(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
        for (Eigen::Index k = 0; k < c.cols(); ++k) {
            const auto r = static_cast<Eigen::Index>(c(1, k));
            const auto col = static_cast<Eigen::Index>(c(2, k));
            if (r >= r0 && r < r0 + h && col >= c0 && col < c0 + w) ind.push_back(k);
        }
        if (ind.size() == static_cast<std::size_t>(h) * static_cast<std::size_t>(w)) return ind;
        // Duplicate lattice sites; fall through to the generalized window.
    }
    const auto want = std::min<Eigen::Index>(static_cast<Eigen::Index>(h) * w, c.cols());
    std::vector<std::pair<double, Eigen::Index>> by_dist(static_cast<std::size_t>(c.cols()));
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
        const double dr = c(1, k) - cr, dc = c(2, k) - cc;
        by_dist[static_cast<std::size_t>(k)] = {dr * dr + dc * dc, k};
    }
    std::sort(by_dist.begin(), by_dist.end());
    std::vector<Eigen::Index> ind(static_cast<std::size_t>(want));
    for (Eigen::Index k = 0; k < want; ++k) ind[static_cast<std::size_t>(k)] = by_dist[static_cast<std::size_t>(k)].second;
    return ind;
}

void validate_config(const SlicedConfig& cfg) {
    require(cfg.num_directions >= 1, "sliced_transport: num_directions must be >= 1");
    require(cfg.max_iters >= 1, "sliced_transport: max_iters must be >= 1");
    require(cfg.step_size > 0.0, "sliced_transport: step_size must be positive");
    require(cfg.step_decay_exponent == 0.0 ||
                (cfg.step_decay_exponent > 0.5 && cfg.step_decay_exponent <= 1.0),
            "sliced_transport: decay exponent must be 0 or in (1/2, 1]");
    if (cfg.init_window)
        require(cfg.init_window->first >= 1 && cfg.init_window->second >= 1,
                "sliced_transport: window extents must be >= 1");
}

}  // namespace

Assignment assignment_1d(const std::vector<double>& x, const std::vector<double>& y) {
    require(!x.empty() && x.size() == y.size(), "assignment_1d: length mismatch");
    const int n = static_cast<int>(x.size());
    ArgsortScratch buf;
    std::vector<int> ox(x.size()), oy(x.size());
    argsort(x, buf, ox);
    argsort(y, buf, oy);
    Assignment sigma(x.size());
    for (int k = 0; k < n; ++k)
        sigma[static_cast<std::size_t>(ox[static_cast<std::size_t>(k)])] =
            oy[static_cast<std::size_t>(k)];
    return sigma;
}

double wasserstein_1d(const std::vector<double>& x, const std::vector<double>& y, double p) {
    require(!x.empty() && x.size() == y.size(), "wasserstein_1d: length mismatch");
    require(p >= 1.0, "wasserstein_1d: order must be >= 1");
    std::vector<double> sx = x, sy = y;
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    double acc = 0.0;
    for (std::size_t k = 0; k < sx.size(); ++k) {
        const double d = std::abs(sx[k] - sy[k]);
        acc += (p == 2.0) ? d * d : (p == 1.0 ? d : std::pow(d, p));
    }
    return (p == 2.0) ? std::sqrt(acc) : (p == 1.0 ? acc : std::pow(acc, 1.0 / p));
}

std::vector<double> barycenter_1d(const std::vector<std::vector<double>>& samples,
                                  const std::vector<double>& weights) {
    require(!samples.empty(), "barycenter_1d: no samples");
    require(samples.size() == weights.size(), "barycenter_1d: weight count mismatch");
    const std::size_t n = samples[0].size();
    require(n >= 1, "barycenter_1d: empty sample");
    double wsum = 0.0;
    for (double w : weights) {
        require(w >= 0.0, "barycenter_1d: negative weight");
        wsum += w;
    }
    require(std::abs(wsum - 1.0) <= 1e-9, "barycenter_1d: weights must sum to 1");
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        require(samples[k].size() == n, "barycenter_1d: sample length mismatch");
        std::vector<double> s = samples[k];
        std::sort(s.begin(), s.end());
        for (std::size_t i = 0; i < n; ++i) out[i] += weights[k] * s[i];
    }
    return out;
}

Assignment hungarian(const Eigen::MatrixXd& cost) {
    require(cost.rows() == cost.cols() && cost.rows() >= 1, "hungarian: cost matrix must be square");
    require(cost.allFinite(), "hungarian: cost matrix must be finite");
    const int n = static_cast<int>(cost.rows());
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    std::vector<double> minv(static_cast<std::size_t>(n) + 1);
    std::vector<char> used(static_cast<std::size_t>(n) + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur =
                    cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    Assignment sigma(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)] > 0)
            sigma[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    return sigma;
}

PointCloud hungarian_seed(const PointCloud& x_cloud, const PointCloud& y_cloud,
                          const GroundMetric& metric, std::pair<int, int> window) {
    require(x_cloud.cols() == y_cloud.cols() && x_cloud.cols() >= 1,
            "hungarian_seed: cloud size mismatch");
    require(metric.beta > 0.0, "hungarian_seed: beta must be positive");
    require(window.first >= 1 && window.second >= 1, "hungarian_seed: window extents must be >= 1");
    // Both windows share one center (the midpoint of the two intensity
    // centroids). Rounding each centroid separately can offset the windows by
    // a pixel for sub-pixel shifts, which forces the windowed assignment into
    // a spurious global translation; a common center keeps the identity
    // matching available whenever it is optimal while still aligning genuine
    // displacements inside the window.
    const auto [xr, xc] = spatial_centroid(x_cloud);
    const auto [yr, yc] = spatial_centroid(y_cloud);
    const double cr = 0.5 * (xr + yr), cc = 0.5 * (xc + yc);
    const std::vector<Eigen::Index> ix = window_indices(x_cloud, window.first, window.second, cr, cc);
    const std::vector<Eigen::Index> iy = window_indices(y_cloud, window.first, window.second, cr, cc);
    // Both selections yield h*w points (full lattice windows) or min(h*w, N)
    // (generalized windows); equal cloud sizes make them match.
    require(ix.size() == iy.size(), "hungarian_seed: inconsistent window selections");
    const std::size_t m = ix.size();
    Eigen::MatrixXd cost(m, m);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                ground_cost2(x_cloud, ix[a], y_cloud, iy[b], metric.beta);
    const Assignment sigma = hungarian(cost);
    PointCloud seeded = x_cloud;
    for (std::size_t a = 0; a < m; ++a)
        seeded.col(ix[a]) = y_cloud.col(iy[static_cast<std::size_t>(sigma[a])]);
    return seeded;
}

int discrepancy_support(const std::vector<Assignment>& per_direction) {
    require(!per_direction.empty(), "discrepancy_support: no assignments");
    const std::size_t n = per_direction[0].size();
    for (const Assignment& a : per_direction)
        require(a.size() == n, "discrepancy_support: length mismatch");
    int count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t d = 1; d < per_direction.size(); ++d) {
            if (per_direction[d][k] != per_direction[0][k]) {
                ++count;
                break;
            }
        }
    }
    return count;
}

TransportResult sliced_transport(const PointCloud& x_cloud, const PointCloud& y_cloud,
                                 const GroundMetric& metric, const SlicedConfig& cfg) {
    require(x_cloud.cols() == y_cloud.cols() && x_cloud.cols() >= 1,
            "sliced_transport: cloud size mismatch");
    require(metric.beta > 0.0, "sliced_transport: beta must be positive");
    validate_config(cfg);
    const Eigen::Index n = x_cloud.cols();
    const double beta = metric.beta;

    auto scaled = [beta](PointCloud c) {
        c.row(1) *= beta;
        c.row(2) *= beta;
        return c;
    };
    const PointCloud xs = scaled(x_cloud);
    const PointCloud ys = scaled(y_cloud);
    PointCloud z = cfg.init_window
                       ? scaled(hungarian_seed(x_cloud, y_cloud, metric, *cfg.init_window))
                       : xs;

    Rng rng(cfg.rng_seed);
    const double step_tol = 1e-9 * z.norm();
    const int m = cfg.num_directions;

    std::vector<double> pz(static_cast<std::size_t>(n)), py(static_cast<std::size_t>(n));
    ArgsortScratch buf;
    std::vector<int> oz(static_cast<std::size_t>(n)), oy(static_cast<std::size_t>(n));
    std::vector<int> sig0(static_cast<std::size_t>(n)), sig(static_cast<std::size_t>(n));
    Eigen::VectorXd diff(n);
    Eigen::Matrix3Xd grad(3, n), step(3, n);
    std::vector<char> disagree(static_cast<std::size_t>(n));

    Assignment candidate;
    bool have_candidate = false;
    int consec = 0;
    int applied = 0;
    int last_disc = 0;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        grad.setZero();
        int disc = 0;
        std::fill(disagree.begin(), disagree.end(), 0);
        for (int d = 0; d < m; ++d) {
            Eigen::Vector3d u;
            double norm2;
            do {
                u << rng.normal(), rng.normal(), rng.normal();
                norm2 = u.squaredNorm();
            } while (norm2 < 1e-100);
            u /= std::sqrt(norm2);
            for (Eigen::Index k = 0; k < n; ++k) {
                pz[static_cast<std::size_t>(k)] = u(0) * z(0, k) + u(1) * z(1, k) + u(2) * z(2, k);
                py[static_cast<std::size_t>(k)] = u(0) * ys(0, k) + u(1) * ys(1, k) + u(2) * ys(2, k);
            }
            argsort(pz, buf, oz);
            argsort(py, buf, oy);
            std::vector<int>& s = (d == 0) ? sig0 : sig;
            for (Eigen::Index k = 0; k < n; ++k)
                s[static_cast<std::size_t>(oz[static_cast<std::size_t>(k)])] =
                    oy[static_cast<std::size_t>(k)];
            if (d > 0) {
                for (Eigen::Index k = 0; k < n; ++k)
                    if (s[static_cast<std::size_t>(k)] != sig0[static_cast<std::size_t>(k)])
                        disagree[static_cast<std::size_t>(k)] = 1;
            }
            const std::vector<int>& su = (d == 0) ? sig0 : sig;
            for (Eigen::Index k = 0; k < n; ++k)
                diff(k) = pz[static_cast<std::size_t>(k)] -
                          py[static_cast<std::size_t>(su[static_cast<std::size_t>(k)])];
            grad.noalias() += u * diff.transpose();
        }
        for (Eigen::Index k = 0; k < n; ++k) disc += disagree[static_cast<std::size_t>(k)];
        last_disc = disc;

        const double eta = cfg.step_decay_exponent > 0.0
                               ? cfg.step_size / std::pow(static_cast<double>(it), cfg.step_decay_exponent)
                               : cfg.step_size;
        step.noalias() = grad * (eta / static_cast<double>(m));
        const double step_norm = step.norm();

        if (disc == 0 && step_norm <= step_tol) {
            if (!have_candidate || candidate != sig0) {
                candidate = sig0;
                have_candidate = true;
                consec = 1;
            } else {
                ++consec;
            }
            if (consec >= 3) break;
        } else {
            consec = 0;
            have_candidate = false;
            z -= step;
            ++applied;
        }
    }

    TransportResult out;
    out.iterations_used = applied;
    out.discrepancy = last_disc;
    if (last_disc == 0) {
        // Direction-consistent assignment: exact relabeling of the target.
        PointCloud ystar(3, n);
        for (Eigen::Index k = 0; k < n; ++k) ystar.col(k) = y_cloud.col(sig0[static_cast<std::size_t>(k)]);
        out.y_star = std::move(ystar);
        out.distance = aligned_cost(x_cloud, out.y_star, beta);
    } else {
        out.distance = (xs - z).norm();
        z.row(1) /= beta;
        z.row(2) /= beta;
        out.y_star = std::move(z);
    }
    return out;
}

PointCloud displacement_interpolate(const PointCloud& x_cloud, const PointCloud& y_star, double t) {
    require(x_cloud.cols() == y_star.cols(), "displacement_interpolate: cloud size mismatch");
    require(t >= 0.0 && t <= 1.0, "displacement_interpolate: t out of [0, 1]");
    return (1.0 - t) * x_cloud + t * y_star;
}

std::vector<TimedCloud> velocity_constrained_interpolate(const PointCloud& x_cloud,
                                                         const PointCloud& y_star, double mu_max,
                                                         int i_max) {
    require(x_cloud.cols() == y_star.cols() && x_cloud.cols() >= 1,
            "velocity_constrained_interpolate: cloud size mismatch");
    require(mu_max > 0.0, "velocity_constrained_interpolate: mu_max must be positive");
    const double gap = (y_star - x_cloud).norm();
    if (gap == 0.0) return {{x_cloud, 1.0}};
    if (i_max < 0) {
        const double budget = 10.0 * std::ceil(gap / mu_max);
        i_max = budget > 1e9 ? 1000000000 : static_cast<int>(budget);
    }

    std::vector<PointCloud> path{x_cloud};
    PointCloud cur = x_cloud;
    for (int i = 0; i < i_max; ++i) {
        const PointCloud v = y_star - cur;
        const double vn = v.norm();
        if (vn <= 1e-10 * gap) break;
        const Eigen::Matrix3d vvt = v * v.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(vvt);
        Eigen::Vector3d u = es.eigenvectors().col(2);  // largest eigenvalue
        Eigen::Index imax_abs = 0;
        u.cwiseAbs().maxCoeff(&imax_abs);
        if (u(imax_abs) < 0.0) u = -u;
        const PointCloud vhat = (u * (u.transpose() * v)) / u.squaredNorm();
        const double denom = vhat.squaredNorm();
        if (denom == 0.0) break;
        const double mu_opt = -((cur - y_star).array() * vhat.array()).sum() / denom;
        const double mu = std::min(mu_opt, mu_max);
        cur += mu * vhat;
        path.push_back(cur);
    }
    if (path.back() != y_star) path.push_back(y_star);

    std::vector<TimedCloud> out;
    out.reserve(path.size());
    for (std::size_t i = 0; i < path.size(); ++i)
        out.push_back({path[i], time_parameter_curve_length(path, i)});
    return out;
}

double time_parameter_linear(const std::vector<PointCloud>& iterates, std::size_t i) {
    require(iterates.size() >= 2, "time_parameter: need at least two iterates");
    require(i < iterates.size(), "time_parameter: index out of range");
    const double gap = (iterates.front() - iterates.back()).norm();
    require(gap > 0.0, "time_parameter: coincident endpoints");
    return 1.0 - (iterates[i] - iterates.back()).norm() / gap;
}

double time_parameter_curve_length(const std::vector<PointCloud>& iterates, std::size_t i) {
    require(iterates.size() >= 2, "time_parameter: need at least two iterates");
    require(i < iterates.size(), "time_parameter: index out of range");
    double total = 0.0, remaining = 0.0;
    for (std::size_t k = 0; k + 1 < iterates.size(); ++k) {
        const double seg = (iterates[k + 1] - iterates[k]).norm();
        total += seg;
        if (k >= i) remaining += seg;
    }
    require(total > 0.0, "time_parameter: degenerate path");
    return 1.0 - remaining / total;
}

BarycenterResult sequential_barycenter(const std::vector<PointCloud>& clouds,
                                       const std::vector<double>& weights,
                                       const GroundMetric& metric, const SlicedConfig& cfg) {
    require(!clouds.empty(), "sequential_barycenter: no clouds");
    require(clouds.size() == weights.size(), "sequential_barycenter: weight count mismatch");
    const Eigen::Index n = clouds[0].cols();
    double wsum = 0.0;
    for (std::size_t k = 0; k < clouds.size(); ++k) {
        require(clouds[k].cols() == n, "sequential_barycenter: cloud size mismatch");
        require(weights[k] >= 0.0, "sequential_barycenter: negative weight");
        wsum += weights[k];
    }
    require(std::abs(wsum - 1.0) <= 1e-9, "sequential_barycenter: weights must sum to 1");

    std::vector<std::size_t> order(clouds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return weights[a] > weights[b];
    });

    BarycenterResult out;
    out.cloud = clouds[order[0]];
    double acc = weights[order[0]];
    for (std::size_t k = 1; k < order.size(); ++k) {
        const std::size_t idx = order[k];
        if (weights[idx] == 0.0) continue;
        SlicedConfig fold_cfg = cfg;
        fold_cfg.rng_seed = derive_seed(cfg.rng_seed, 0x8000000000000000ULL | k, 0);
        const TransportResult res = sliced_transport(out.cloud, clouds[idx], metric, fold_cfg);
        out.max_discrepancy = std::max(out.max_discrepancy, res.discrepancy);
        out.total_iterations += res.iterations_used;
        const double t = weights[idx] / (acc + weights[idx]);
        if (res.y_star != out.cloud)
            out.cloud = displacement_interpolate(out.cloud, res.y_star, t);
        acc += weights[idx];
    }
    return out;
}

}  // namespace psfield

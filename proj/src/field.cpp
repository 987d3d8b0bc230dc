#include "psfield/field.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "psfield/embedding.hpp"
#include "psfield/parallel.hpp"
#include "psfield/rng.hpp"
#include "psfield/thin_plate.hpp"

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Exact Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(Eigen::VectorXd v) {
    const Eigen::Index p = v.size();
    std::vector<double> u(v.data(), v.data() + p);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    Eigen::Index rho = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
        css += u[static_cast<std::size_t>(j)];
        const double t = (css - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) {
            rho = j + 1;
            tau = t;
        }
    }
    (void)rho;
    for (Eigen::Index i = 0; i < p; ++i) v(i) = std::max(v(i) - tau, 0.0);
    return v;
}

}  // namespace

std::vector<int> nearest_neighbors(const std::vector<FieldSample>& samples,
                                   const Eigen::Vector2d& target, int p) {
    require(!samples.empty(), "nearest_neighbors: empty sample set");
    require(p >= 1 && static_cast<std::size_t>(p) <= samples.size(),
            "nearest_neighbors: invalid neighbor count");
    std::vector<std::pair<double, int>> by_dist(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k)
        by_dist[k] = {(samples[k].pos - target).squaredNorm(), static_cast<int>(k)};
    std::sort(by_dist.begin(), by_dist.end());
    std::vector<int> out(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) out[static_cast<std::size_t>(k)] = by_dist[static_cast<std::size_t>(k)].second;
    return out;
}

GroundMetric compute_beta(const std::vector<FieldSample>& samples) {
    require(samples.size() >= 2, "compute_beta: need at least two samples");
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j) {
            const double d = (samples[i].pos - samples[j].pos).squaredNorm();
            if (d < best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    require(same_shape(samples[bi].img, samples[bj].img), "compute_beta: image shape mismatch");
    const double beta = (samples[bi].img.pixels - samples[bj].img.pixels).cwiseAbs().maxCoeff();
    if (beta <= 0.0)
        throw std::runtime_error(
            "compute_beta: degenerate metric (closest field pair has identical images)");
    return {beta};
}

BarycentricWeights barycentric_coordinates(const Eigen::VectorXd& target_coords,
                                           const Eigen::MatrixXd& neighbor_coords) {
    const Eigen::Index d = neighbor_coords.rows();
    const Eigen::Index p = neighbor_coords.cols();
    require(p >= 1, "barycentric_coordinates: no neighbors");
    require(target_coords.size() == d, "barycentric_coordinates: dimension mismatch");

    BarycentricWeights out;
    if (p == 1) {
        out.w = Eigen::VectorXd::Ones(1);
        out.residual = (neighbor_coords.col(0) - target_coords).norm();
        return out;
    }

    const Eigen::MatrixXd gram = neighbor_coords.transpose() * neighbor_coords;
    const Eigen::VectorXd lin = neighbor_coords.transpose() * target_coords;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double lip = es.eigenvalues().maxCoeff();

    Eigen::VectorXd w = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
    auto grad = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return gram * x - lin; };
    auto gm_residual = [&](const Eigen::VectorXd& x) {
        return (x - project_simplex(x - grad(x))).norm();
    };
    const double tol = 1e-10 * std::max(1.0, lip);

    if (lip > 0.0) {
        Eigen::VectorXd v = w, w_prev = w;
        double theta = 1.0;
        for (int it = 0; it < 20000; ++it) {
            const Eigen::VectorXd w_new = project_simplex(v - grad(v) / lip);
            // Adaptive restart: drop momentum when it points uphill.
            const double restart = (v - w_new).dot(w_new - w);
            const double theta_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
            if (restart > 0.0) {
                v = w_new;
                theta = 1.0;
            } else {
                v = w_new + ((theta - 1.0) / theta_new) * (w_new - w);
                theta = theta_new;
            }
            w_prev = w;
            w = w_new;
            if (gm_residual(w) <= tol) break;
        }
        (void)w_prev;
    }

    // Exact polish on the active support: equality-constrained least squares
    // via the bordered normal system, accepted only when it satisfies the
    // simplex KKT conditions at least as well as the iterate.
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < p; ++i)
        if (w(i) > 1e-10) support.push_back(i);
    if (!support.empty()) {
        const auto s = static_cast<Eigen::Index>(support.size());
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
        Eigen::VectorXd rhs(s + 1);
        for (Eigen::Index a = 0; a < s; ++a) {
            for (Eigen::Index b = 0; b < s; ++b) kkt(a, b) = gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
            kkt(a, s) = 1.0;
            kkt(s, a) = 1.0;
            rhs(a) = lin(support[static_cast<std::size_t>(a)]);
        }
        rhs(s) = 1.0;
        const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        Eigen::VectorXd polished = Eigen::VectorXd::Zero(p);
        bool feasible = true;
        for (Eigen::Index a = 0; a < s; ++a) {
            const double val = sol(a);
            if (val < -1e-12) {
                feasible = false;
                break;
            }
            polished(support[static_cast<std::size_t>(a)]) = std::max(val, 0.0);
        }
        if (feasible) {
            const double total = polished.sum();
            if (total > 0.0) {
                polished /= total;
                if (gm_residual(polished) <= gm_residual(w)) w = polished;
            }
        }
    }

    // Renormalize exactly once more to pin the simplex invariants.
    for (Eigen::Index i = 0; i < p; ++i) w(i) = std::max(w(i), 0.0);
    const double total = w.sum();
    if (total > 0.0) w /= total;
    else w.setConstant(1.0 / static_cast<double>(p));

    out.w = w;
    out.residual = (neighbor_coords * w - target_coords).norm();
    return out;
}

std::optional<CachedDistance> DistanceCache::get(int i, int j) const {
    std::lock_guard<std::mutex> lock(mu_);
    const auto it = map_.find(key(i, j));
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

void DistanceCache::put(int i, int j, double d2, int discrepancy) {
    std::lock_guard<std::mutex> lock(mu_);
    map_[key(i, j)] = {d2, discrepancy};
}

std::size_t DistanceCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
}

std::uint64_t DistanceCache::key(int i, int j) {
    const auto a = static_cast<std::uint64_t>(std::min(i, j));
    const auto b = static_cast<std::uint64_t>(std::max(i, j));
    return (a << 32) | b;
}

int estimate_extrinsic_dimension(const std::vector<FieldSample>& samples) {
    require(samples.size() >= 2, "estimate_extrinsic_dimension: need at least two samples");
    const auto k = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index n = samples[0].img.rows() * samples[0].img.cols();
    Eigen::MatrixXd data(k, n);
    for (Eigen::Index i = 0; i < k; ++i) {
        require(same_shape(samples[static_cast<std::size_t>(i)].img, samples[0].img),
                "estimate_extrinsic_dimension: image shape mismatch");
        data.row(i) = to_vector(samples[static_cast<std::size_t>(i)].img).transpose();
    }
    data.rowwise() -= data.colwise().mean();
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(data);
    const Eigen::VectorXd s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0) return 1;
    int count = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) >= 1e-6 * s(0)) ++count;
    return std::max(1, std::min<int>(count, static_cast<int>(k) - 1));
}

std::vector<Image> train_interpolate(const std::vector<FieldSample>& samples,
                                     const std::vector<Eigen::Vector2d>& targets,
                                     const TrainOptions& opt, DistanceCache* cache,
                                     std::vector<TargetDiagnostics>* diagnostics) {
    require(!samples.empty(), "train_interpolate: empty sample set");
    const Eigen::Index rows = samples[0].img.rows(), cols = samples[0].img.cols();
    for (const FieldSample& s : samples)
        require(same_shape(s.img, samples[0].img), "train_interpolate: image shape mismatch");
    const int p = opt.neighbors;
    require(p >= 3, "train_interpolate: need at least three neighbors for the field map");
    require(static_cast<std::size_t>(p) <= samples.size(),
            "train_interpolate: more neighbors than samples");
    require(opt.beta >= 0.0, "train_interpolate: negative beta");

    if (diagnostics) diagnostics->assign(targets.size(), {});
    std::vector<Image> out(targets.size());
    if (targets.empty()) return out;

    const GroundMetric metric = opt.beta > 0.0 ? GroundMetric{opt.beta} : compute_beta(samples);
    const int d_ext = opt.d_ext > 0 ? opt.d_ext : estimate_extrinsic_dimension(samples);

    std::vector<PointCloud> clouds(samples.size());
    parallel_for(samples.size(), opt.threads,
                 [&](std::size_t k) { clouds[k] = image_to_cloud(samples[k].img); });

    std::vector<std::vector<int>> nbrs(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t)
        nbrs[t] = nearest_neighbors(samples, targets[t], p);

    // Distances needed across all targets, computed once (deterministic
    // per-pair seeds; shared via the cache when one is supplied).
    DistanceCache local;
    DistanceCache& store = cache ? *cache : local;
    std::vector<std::pair<int, int>> needed;
    {
        std::vector<std::uint64_t> keys;
        for (const auto& list : nbrs)
            for (std::size_t a = 0; a < list.size(); ++a)
                for (std::size_t b = a + 1; b < list.size(); ++b) {
                    const int i = std::min(list[a], list[b]);
                    const int j = std::max(list[a], list[b]);
                    keys.push_back((static_cast<std::uint64_t>(i) << 32) |
                                   static_cast<std::uint64_t>(j));
                }
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        for (std::uint64_t key : keys) {
            const int i = static_cast<int>(key >> 32);
            const int j = static_cast<int>(key & 0xffffffffULL);
            if (!store.get(i, j)) needed.emplace_back(i, j);
        }
    }
    std::vector<double> computed(needed.size(), 0.0);
    std::vector<int> computed_disc(needed.size(), 0);
    parallel_for(needed.size(), opt.threads, [&](std::size_t idx) {
        const auto [i, j] = needed[idx];
        SlicedConfig pair_cfg = opt.sliced;
        pair_cfg.rng_seed = derive_seed(opt.sliced.rng_seed, static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(j));
        const TransportResult res = sliced_transport(clouds[static_cast<std::size_t>(i)],
                                                     clouds[static_cast<std::size_t>(j)], metric,
                                                     pair_cfg);
        // A nonzero final disagreement count means the discrete assignment
        // kept oscillating between near-ties; the distance estimate is still
        // the converged energy value, so keep it and surface the count
        // through the per-target diagnostics instead of failing the run.
        computed[idx] = res.distance * res.distance;
        computed_disc[idx] = res.discrepancy;
    });
    for (std::size_t idx = 0; idx < needed.size(); ++idx)
        store.put(needed[idx].first, needed[idx].second, computed[idx], computed_disc[idx]);

    parallel_for(targets.size(), opt.threads, [&](std::size_t t) {
        const auto start = std::chrono::steady_clock::now();
        const std::vector<int>& list = nbrs[t];

        Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(p, p);
        int pair_disc = 0;
        for (int a = 0; a < p; ++a)
            for (int b = a + 1; b < p; ++b) {
                const auto cached = store.get(list[static_cast<std::size_t>(a)],
                                              list[static_cast<std::size_t>(b)]);
                d2(a, b) = cached->d2;
                d2(b, a) = d2(a, b);
                pair_disc = std::max(pair_disc, cached->discrepancy);
            }

        const Embedding emb = mds_embed(make_distance_matrix(d2), p);
        const int d = std::min<int>(select_dimension(emb.eigenvalues, d_ext),
                                    static_cast<int>(emb.coords.rows()));
        const Eigen::MatrixXd coords = emb.coords.topRows(d);

        Eigen::Matrix2Xd positions(2, p);
        for (int a = 0; a < p; ++a) positions.col(a) = samples[static_cast<std::size_t>(list[static_cast<std::size_t>(a)])].pos;
        Eigen::VectorXd mapped(d);
        for (int k = 0; k < d; ++k) {
            const ThinPlateModel tps = thin_plate_fit(positions, coords.row(k).transpose());
            mapped(k) = thin_plate_eval(tps, targets[t]);
        }

        const BarycentricWeights bary = barycentric_coordinates(mapped, coords);

        std::vector<PointCloud> local_clouds;
        local_clouds.reserve(static_cast<std::size_t>(p));
        std::vector<double> weights(static_cast<std::size_t>(p));
        for (int a = 0; a < p; ++a) {
            local_clouds.push_back(clouds[static_cast<std::size_t>(list[static_cast<std::size_t>(a)])]);
            weights[static_cast<std::size_t>(a)] = bary.w(a);
        }
        SlicedConfig bary_cfg = opt.sliced;
        bary_cfg.rng_seed = derive_seed(opt.sliced.rng_seed, 0x7A46E7ULL, t);
        const BarycenterResult bres = sequential_barycenter(local_clouds, weights, metric, bary_cfg);

        Image img = cloud_to_image(bres.cloud, rows, cols);
        const double mass = img.sum();
        const double drift = std::abs(mass - 1.0);
        if (mass <= 0.0)
            throw std::runtime_error("train_interpolate: non-positive output mass at target " +
                                     std::to_string(t));
        if (mass != 1.0) img.pixels /= mass;
        out[t] = std::move(img);

        if (diagnostics) {
            TargetDiagnostics& diag = (*diagnostics)[t];
            diag.discrepancy = std::max(pair_disc, bres.max_discrepancy);
            diag.mass_drift = drift;
            diag.qp_residual = bary.residual;
            diag.embedding_dim = d;
            diag.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    });

    return out;
}

}  // namespace psfield

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "psfield/rng.hpp"
#include "psfield/transport.hpp"

using namespace psfield;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

double assignment_cost_1d(const std::vector<double>& x, const std::vector<double>& y,
                          const Assignment& sigma) {
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[static_cast<std::size_t>(sigma[i])];
        c += d * d;
    }
    return c;
}

double brute_force_min_cost_1d(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<int> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - y[static_cast<std::size_t>(perm[i])];
            c += d * d;
        }
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double brute_force_min_cost(const Eigen::MatrixXd& cost) {
    std::vector<int> perm(static_cast<std::size_t>(cost.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double c = 0.0;
        for (Eigen::Index i = 0; i < cost.rows(); ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Image random_image(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Image img(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) img.pixels(i, j) = rng.next_double();
    return img;
}

// Exact squared 2-Wasserstein cost between same-size clouds under the ground
// metric, via a full Hungarian assignment (independent of the sliced solver).
double exact_w2(const PointCloud& x, const PointCloud& y, double beta) {
    const Eigen::Index n = x.cols();
    Eigen::MatrixXd cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double di = x(0, i) - y(0, j);
            const double dr = x(1, i) - y(1, j);
            const double dc = x(2, i) - y(2, j);
            cost(i, j) = di * di + beta * beta * (dr * dr + dc * dc);
        }
    const Assignment sigma = hungarian(cost);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += cost(i, sigma[static_cast<std::size_t>(i)]);
    return std::sqrt(total);
}

std::vector<double> sorted_row0(const PointCloud& c) {
    std::vector<double> v(static_cast<std::size_t>(c.cols()));
    for (Eigen::Index k = 0; k < c.cols(); ++k) v[static_cast<std::size_t>(k)] = c(0, k);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("assignment_1d on sorted and reversed inputs") {
    const std::vector<double> inc{1, 2, 3, 4};
    const std::vector<double> dec{8, 7, 6, 5};
    const Assignment id = assignment_1d(inc, std::vector<double>{2, 3, 4, 5});
    for (int i = 0; i < 4; ++i) CHECK(id[static_cast<std::size_t>(i)] == i);
    const Assignment rev = assignment_1d(inc, dec);
    CHECK(rev == Assignment{3, 2, 1, 0});
    CHECK_THROWS_AS(assignment_1d({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("assignment_1d matches the exhaustive optimum on small instances") {
    Rng rng(101);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::vector<double> x = random_vector(rng, 6);
        const std::vector<double> y = random_vector(rng, 6);
        const Assignment sigma = assignment_1d(x, y);
        std::vector<char> seen(6, 0);
        for (int s : sigma) {
            REQUIRE(s >= 0);
            REQUIRE(s < 6);
            seen[static_cast<std::size_t>(s)] = 1;
        }
        CHECK(std::count(seen.begin(), seen.end(), 1) == 6);
        CHECK(assignment_cost_1d(x, y, sigma) <= brute_force_min_cost_1d(x, y) + 1e-12);
    }
}

TEST_CASE("wasserstein_1d examples and exhaustive oracle") {
    CHECK(wasserstein_1d({0.0}, {3.0}, 2.0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(wasserstein_1d({1, 5, 2}, {2, 1, 5}, 2.0) == 0.0);
    CHECK(wasserstein_1d({0, 0}, {1, 1}, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    Rng rng(202);
    for (int rep = 0; rep < 50; ++rep) {
        const std::vector<double> x = random_vector(rng, 6);
        const std::vector<double> y = random_vector(rng, 6);
        const double d = wasserstein_1d(x, y, 2.0);
        CHECK(d * d == doctest::Approx(brute_force_min_cost_1d(x, y)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(wasserstein_1d({1.0}, {1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("barycenter_1d closed form and optimality") {
    const std::vector<double> single = barycenter_1d({{3.0, 1.0, 2.0}}, {1.0});
    CHECK(single == std::vector<double>{1.0, 2.0, 3.0});

    const std::vector<double> mid = barycenter_1d({{0.0, 2.0}, {6.0, 4.0}}, {0.5, 0.5});
    CHECK(mid[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mid[1] == doctest::Approx(4.0).epsilon(1e-15));

    // Dense grid oracle on a two-point support.
    Rng rng(303);
    const std::vector<std::vector<double>> samples{{-1.3, 0.7}, {2.1, 0.4}, {1.0, -0.2}};
    const std::vector<double> w{0.5, 0.3, 0.2};
    const std::vector<double> bary = barycenter_1d(samples, w);
    auto objective = [&](const std::vector<double>& cand) {
        double obj = 0.0;
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const double d = wasserstein_1d(cand, samples[k], 2.0);
            obj += w[k] * d * d;
        }
        return obj;
    };
    const double ours = objective(bary);
    for (double a = -3.0; a <= 3.0; a += 0.05)
        for (double b = a; b <= 3.0; b += 0.05) CHECK(ours <= objective({a, b}) + 1e-9);

    // Random candidates on a longer support.
    const std::vector<std::vector<double>> s5{random_vector(rng, 5), random_vector(rng, 5),
                                              random_vector(rng, 5)};
    const std::vector<double> b5 = barycenter_1d(s5, w);
    auto obj5 = [&](const std::vector<double>& cand) {
        double obj = 0.0;
        for (std::size_t k = 0; k < s5.size(); ++k) {
            const double d = wasserstein_1d(cand, s5[k], 2.0);
            obj += w[k] * d * d;
        }
        return obj;
    };
    const double best5 = obj5(b5);
    for (int rep = 0; rep < 2000; ++rep) {
        std::vector<double> cand = random_vector(rng, 5);
        CHECK(best5 <= obj5(cand) + 1e-9);
        for (std::size_t i = 0; i < 5; ++i) cand[i] = b5[i] + rng.uniform(-0.05, 0.05);
        CHECK(best5 <= obj5(cand) + 1e-9);
    }

    CHECK_THROWS_AS(barycenter_1d({{1.0}, {2.0}}, {0.7, 0.7}), std::invalid_argument);
    CHECK_THROWS_AS(barycenter_1d({{1.0}, {2.0, 3.0}}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("hungarian solves small instances exactly") {
    Eigen::MatrixXd ident(3, 3);
    ident << 0, 5, 5, 5, 0, 5, 5, 5, 0;
    CHECK(hungarian(ident) == Assignment{0, 1, 2});

    Eigen::MatrixXd two(2, 2);
    two << 1, 3, 3, 10;
    CHECK(hungarian(two) == Assignment{1, 0});

    Rng rng(404);
    for (int rep = 0; rep < 220; ++rep) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.next_u64() % 6);
        Eigen::MatrixXd cost(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = rng.uniform(-2.0, 8.0);
        const Assignment sigma = hungarian(cost);
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            seen[static_cast<std::size_t>(sigma[static_cast<std::size_t>(i)])] = 1;
            total += cost(i, sigma[static_cast<std::size_t>(i)]);
        }
        CHECK(std::count(seen.begin(), seen.end(), 1) == n);
        CHECK(total == doctest::Approx(brute_force_min_cost(cost)).epsilon(1e-12));
    }
}

TEST_CASE("full-window seeding relabels the target cloud exactly") {
    Rng rng(505);
    const Image a = random_image(rng, 4, 4);
    const Image b = random_image(rng, 4, 4);
    const PointCloud x = image_to_cloud(a), y = image_to_cloud(b);
    const PointCloud seeded = hungarian_seed(x, y, {1.0}, {4, 4});
    // The seeded cloud is a column permutation of y.
    std::vector<std::vector<double>> sx, sy;
    for (Eigen::Index k = 0; k < 16; ++k) {
        sx.push_back({seeded(0, k), seeded(1, k), seeded(2, k)});
        sy.push_back({y(0, k), y(1, k), y(2, k)});
    }
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    CHECK(sx == sy);
}

TEST_CASE("seeding identical clouds is the identity") {
    Rng rng(606);
    const Image a = random_image(rng, 5, 3);
    const PointCloud x = image_to_cloud(a);
    const PointCloud seeded = hungarian_seed(x, x, {0.7}, {2, 2});
    CHECK(seeded == x);
}

TEST_CASE("seeding accepts non-lattice clouds through the generalized window") {
    Rng rng(707);
    PointCloud x(3, 9), y(3, 9);
    for (Eigen::Index k = 0; k < 9; ++k) {
        x.col(k) << rng.next_double(), rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0);
        y.col(k) << rng.next_double(), rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0);
    }
    const PointCloud seeded = hungarian_seed(x, y, {1.0}, {2, 3});
    CHECK(seeded.cols() == 9);
    CHECK_THROWS_AS(hungarian_seed(x, y, {1.0}, {0, 3}), std::invalid_argument);
    // Window larger than an image errors in lattice mode.
    const PointCloud lx = image_to_cloud(random_image(rng, 3, 3));
    CHECK_THROWS_AS(hungarian_seed(lx, lx, {1.0}, {4, 3}), std::invalid_argument);
}

TEST_CASE("discrepancy_support counts disagreeing points") {
    CHECK(discrepancy_support({{0, 1, 2}, {0, 1, 2}}) == 0);
    CHECK(discrepancy_support({{0, 1, 2}, {1, 0, 2}}) == 2);
    CHECK(discrepancy_support({{0, 1}, {0, 1}, {1, 0}}) == 2);
    CHECK_THROWS_AS(discrepancy_support({}), std::invalid_argument);
}

TEST_CASE("transport of a cloud onto itself is free and immediate") {
    Rng rng(808);
    const PointCloud x = image_to_cloud(random_image(rng, 6, 6));
    SlicedConfig cfg;
    cfg.rng_seed = 42;
    const TransportResult res = sliced_transport(x, x, {1.0}, cfg);
    CHECK(res.distance == 0.0);
    CHECK(res.discrepancy == 0);
    CHECK(res.iterations_used == 0);
    CHECK(res.y_star == x);
}

TEST_CASE("full-window seeded transport reproduces the exact distance") {
    Rng rng(909);
    for (int rep = 0; rep < 3; ++rep) {
        const Image a = random_image(rng, 5, 5);
        const Image b = random_image(rng, 5, 5);
        const PointCloud x = image_to_cloud(a), y = image_to_cloud(b);
        SlicedConfig cfg;
        cfg.rng_seed = 1000 + static_cast<std::uint64_t>(rep);
        cfg.init_window = {5, 5};
        const TransportResult res = sliced_transport(x, y, {1.0}, cfg);
        CHECK(res.discrepancy == 0);
        CHECK(res.iterations_used == 0);
        CHECK(res.distance == doctest::Approx(exact_w2(x, y, 1.0)).epsilon(1e-12));
        // Swapped arguments give the exact same distance.
        const TransportResult swp = sliced_transport(y, x, {1.0}, cfg);
        CHECK(swp.distance == res.distance);
    }
}

TEST_CASE("unseeded sliced descent approaches the exact distance on small images") {
    Rng rng(1010);
    for (int rep = 0; rep < 3; ++rep) {
        const Image a = random_image(rng, 5, 5);
        const Image b = random_image(rng, 5, 5);
        const PointCloud x = image_to_cloud(a), y = image_to_cloud(b);
        SlicedConfig cfg;
        cfg.rng_seed = 2000 + static_cast<std::uint64_t>(rep);
        const TransportResult res = sliced_transport(x, y, {1.0}, cfg);
        const double exact = exact_w2(x, y, 1.0);
        CHECK(res.distance >= exact * (1.0 - 1e-9));
        CHECK(res.distance <= exact * 1.05);
    }
}

TEST_CASE("near-identical images sit in the euclidean regime") {
    Rng rng(1111);
    const Image a = random_image(rng, 8, 8);
    Image b = a;
    for (Eigen::Index i = 0; i < 8; ++i)
        for (Eigen::Index j = 0; j < 8; ++j) b.pixels(i, j) += rng.uniform(-0.4, 0.4);
    const PointCloud x = image_to_cloud(a), y = image_to_cloud(b);
    const double l2 = pixel_l2_distance(a, b);
    SlicedConfig cfg;
    cfg.rng_seed = 7;
    const TransportResult res = sliced_transport(x, y, {1.0}, cfg);
    CHECK(res.discrepancy == 0);
    CHECK(res.distance == doctest::Approx(l2).epsilon(0.01));
    SlicedConfig seeded = cfg;
    seeded.init_window = {8, 8};
    CHECK(sliced_transport(x, y, {1.0}, seeded).distance == doctest::Approx(l2).epsilon(1e-9));
}

TEST_CASE("sliced transport is deterministic for a fixed seed") {
    Rng rng(1212);
    const PointCloud x = image_to_cloud(random_image(rng, 6, 6));
    const PointCloud y = image_to_cloud(random_image(rng, 6, 6));
    SlicedConfig cfg;
    cfg.rng_seed = 99;
    const TransportResult r1 = sliced_transport(x, y, {0.8}, cfg);
    const TransportResult r2 = sliced_transport(x, y, {0.8}, cfg);
    CHECK(r1.distance == r2.distance);
    CHECK(r1.y_star == r2.y_star);
    CHECK(r1.iterations_used == r2.iterations_used);
}

TEST_CASE("displacement interpolation endpoints and midpoint") {
    Rng rng(1313);
    const PointCloud x = image_to_cloud(random_image(rng, 4, 4));
    const PointCloud y = image_to_cloud(random_image(rng, 4, 4));
    CHECK(displacement_interpolate(x, y, 0.0) == x);
    CHECK(displacement_interpolate(x, y, 1.0) == y);
    const PointCloud mid = displacement_interpolate(x, y, 0.5);
    CHECK(mid(0, 3) == doctest::Approx(0.5 * (x(0, 3) + y(0, 3))).epsilon(1e-15));
    CHECK_THROWS_AS(displacement_interpolate(x, y, 1.5), std::invalid_argument);
}

TEST_CASE("velocity-constrained path with a rank-one velocity field is straight") {
    Rng rng(1414);
    PointCloud x(3, 12);
    for (Eigen::Index k = 0; k < 12; ++k)
        x.col(k) << rng.next_double(), rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0);
    const Eigen::Vector3d dir = Eigen::Vector3d(0.3, 0.8, -0.5).normalized();
    Eigen::RowVectorXd mags(12);
    for (Eigen::Index k = 0; k < 12; ++k) mags(k) = rng.uniform(-2.0, 2.0);
    const PointCloud y = x + dir * mags;

    const auto path = velocity_constrained_interpolate(x, y, 0.5);
    REQUIRE(path.size() >= 2);
    CHECK(path.front().cloud == x);
    CHECK(path.back().cloud == y);
    CHECK(path.front().t == doctest::Approx(0.0));
    CHECK(path.back().t == doctest::Approx(1.0));
    const double gap = (y - x).norm();
    double length = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        length += (path[i + 1].cloud - path[i].cloud).norm();
    CHECK(length == doctest::Approx(gap).epsilon(1e-9));
    // Iterates lie on the segment: distance-to-line is tiny.
    for (const auto& tc : path) {
        const PointCloud expected = displacement_interpolate(x, y, tc.t);
        CHECK((tc.cloud - expected).norm() <= 1e-9 * gap);
    }
}

TEST_CASE("velocity-constrained path contracts monotonically and ends exactly") {
    Rng rng(1515);
    const PointCloud x = image_to_cloud(random_image(rng, 5, 4));
    PointCloud y = image_to_cloud(random_image(rng, 5, 4));
    const auto path = velocity_constrained_interpolate(x, y, 1.0);
    CHECK(path.back().cloud == y);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& tc : path) {
        const double r = (tc.cloud - y).norm();
        CHECK(r <= prev + 1e-12);
        prev = r;
    }
    for (std::size_t i = 0; i + 1 < path.size(); ++i) CHECK(path[i].t < path[i + 1].t + 1e-15);

    const auto trivial = velocity_constrained_interpolate(x, x, 1.0);
    REQUIRE(trivial.size() == 1);
    CHECK(trivial[0].cloud == x);
    CHECK(trivial[0].t == 1.0);
}

TEST_CASE("time parameters on a hand-built path") {
    PointCloud p0 = PointCloud::Zero(3, 1), p1 = PointCloud::Zero(3, 1), p2 = PointCloud::Zero(3, 1);
    p1(0, 0) = 3.0;
    p2(0, 0) = 4.0;
    const std::vector<PointCloud> direct{p0, p1, p2};
    CHECK(time_parameter_linear(direct, 0) == doctest::Approx(0.0));
    CHECK(time_parameter_linear(direct, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(time_parameter_linear(direct, 2) == doctest::Approx(1.0));
    CHECK(time_parameter_curve_length(direct, 1) == doctest::Approx(0.75).epsilon(1e-15));

    PointCloud q1 = PointCloud::Zero(3, 1);
    q1(0, 0) = 6.0;  // overshoot then come back
    const std::vector<PointCloud> zigzag{p0, q1, p2};
    CHECK(time_parameter_linear(zigzag, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(time_parameter_curve_length(zigzag, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_THROWS_AS(time_parameter_linear({p0, p0}, 0), std::invalid_argument);
}

TEST_CASE("sequential barycenter trivial weight vectors") {
    Rng rng(1616);
    std::vector<PointCloud> clouds;
    for (int k = 0; k < 3; ++k) clouds.push_back(image_to_cloud(random_image(rng, 4, 4)));
    SlicedConfig cfg;
    cfg.rng_seed = 5;
    const BarycenterResult one = sequential_barycenter(clouds, {1.0, 0.0, 0.0}, {1.0}, cfg);
    CHECK(one.cloud == clouds[0]);
    CHECK(one.total_iterations == 0);

    const BarycenterResult same =
        sequential_barycenter({clouds[1], clouds[1], clouds[1]}, {0.2, 0.5, 0.3}, {1.0}, cfg);
    CHECK(same.cloud == clouds[1]);
    CHECK(same.max_discrepancy == 0);

    CHECK_THROWS_AS(sequential_barycenter(clouds, {0.5, 0.5}, {1.0}, cfg), std::invalid_argument);
    CHECK_THROWS_AS(sequential_barycenter(clouds, {0.8, 0.4, -0.2}, {1.0}, cfg),
                    std::invalid_argument);
}

TEST_CASE("two-cloud barycenter reduces to displacement interpolation") {
    Rng rng(1717);
    const Image a = random_image(rng, 5, 5);
    Image b = a;
    for (Eigen::Index i = 0; i < 5; ++i)
        for (Eigen::Index j = 0; j < 5; ++j) b.pixels(i, j) += rng.uniform(-0.3, 0.3);
    const PointCloud x = image_to_cloud(a), y = image_to_cloud(b);
    SlicedConfig cfg;
    cfg.rng_seed = 11;
    const BarycenterResult res = sequential_barycenter({x, y}, {0.7, 0.3}, {1.0}, cfg);
    CHECK(res.max_discrepancy == 0);
    SlicedConfig fold = cfg;
    fold.rng_seed = derive_seed(cfg.rng_seed, 0x8000000000000000ULL | 1, 0);
    const TransportResult tr = sliced_transport(x, y, {1.0}, fold);
    const PointCloud expected = displacement_interpolate(x, tr.y_star, 0.3);
    CHECK((res.cloud - expected).norm() <= 1e-12 * expected.norm());
}

TEST_CASE("barycenter of intensity-only clouds matches the 1d closed form") {
    Rng rng(1818);
    const std::size_t n = 10;
    std::vector<std::vector<double>> samples;
    std::vector<PointCloud> clouds;
    for (int k = 0; k < 3; ++k) {
        std::vector<double> s = random_vector(rng, n, 0.0, 1.0);
        PointCloud c(3, static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) c.col(static_cast<Eigen::Index>(i)) << s[i], 2.0, 5.0;
        samples.push_back(std::move(s));
        clouds.push_back(std::move(c));
    }
    const std::vector<double> w{0.5, 0.3, 0.2};
    SlicedConfig cfg;
    cfg.rng_seed = 21;
    const BarycenterResult res = sequential_barycenter(clouds, w, {1.0}, cfg);
    CHECK(res.max_discrepancy == 0);
    const std::vector<double> expect = barycenter_1d(samples, w);
    const std::vector<double> got = sorted_row0(res.cloud);
    for (std::size_t i = 0; i < n; ++i) CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-10));
    // Spatial coordinates stay put.
    for (Eigen::Index k = 0; k < res.cloud.cols(); ++k) {
        CHECK(res.cloud(1, k) == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(res.cloud(2, k) == doctest::Approx(5.0).epsilon(1e-12));
    }
}

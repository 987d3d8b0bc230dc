#include "psfield/datagen.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "psfield/rng.hpp"

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void validate_spec(const FieldSpec& spec) {
    require(spec.rows >= 2 && spec.cols >= 2, "field spec: stamps need at least 2x2 pixels");
    require(spec.n_train >= 1 && spec.n_test >= 1, "field spec: counts must be at least 1");
    require(std::isfinite(spec.x_min) && std::isfinite(spec.x_max) &&
                std::isfinite(spec.y_min) && std::isfinite(spec.y_max),
            "field spec: non-finite bounds");
    require(spec.x_max >= spec.x_min && spec.y_max >= spec.y_min,
            "field spec: inverted bounds");
    require(std::isfinite(spec.warp_amplitude) && spec.warp_amplitude >= 0.0,
            "field spec: warp amplitude must be non-negative");
}

// Position scaled to [-1, 1] per axis (0 for a collapsed axis).
Eigen::Vector2d unit_coords(const FieldSpec& spec, const Eigen::Vector2d& pos) {
    const double wx = spec.x_max - spec.x_min;
    const double wy = spec.y_max - spec.y_min;
    return {wx > 0.0 ? 2.0 * (pos.x() - spec.x_min) / wx - 1.0 : 0.0,
            wy > 0.0 ? 2.0 * (pos.y() - spec.y_min) / wy - 1.0 : 0.0};
}

Image render_gaussian_mixture(const FieldSpec& spec, double xi, double eta) {
    const double wa = spec.warp_amplitude;
    const double extent = static_cast<double>(std::min(spec.rows, spec.cols));
    const double sigma0 = extent / 8.0;

    const double e_mag = wa * (0.14 + 0.10 * std::sin(2.1 * xi) * std::cos(1.8 * eta));
    const double theta = wa * (2.6 * xi + 2.2 * eta + 1.2 * std::sin(1.3 * xi * eta));
    const double drift_r = 3.2 * wa * std::sin(2.2 * xi + 0.8 * eta);
    const double drift_c = 3.2 * wa * std::cos(2.0 * eta - 0.7 * xi);
    const double sigma_a = sigma0 * (1.0 + e_mag);
    const double sigma_b = sigma0 * (1.0 - e_mag);

    const double cr = 0.5 * static_cast<double>(spec.rows - 1) + drift_r;
    const double cc = 0.5 * static_cast<double>(spec.cols - 1) + drift_c;
    const double ct = std::cos(theta), st = std::sin(theta);

    const double lobe_amp = wa * (0.50 + 0.15 * std::sin(1.0 * xi - 1.3 * eta));
    const double lobe_radius = (0.17 + 0.06 * std::cos(1.5 * xi + 0.6 * eta)) * extent;
    const double psi = 0.9 * xi - 0.75 * eta + 0.5 * std::sin(1.6 * xi * eta) + 0.6;
    const double lobe_r = cr + lobe_radius * std::sin(psi);
    const double lobe_c = cc + lobe_radius * std::cos(psi);
    const double sigma_l = 0.5 * sigma0;

    Image img;
    img.pixels.resize(spec.rows, spec.cols);
    for (Eigen::Index i = 0; i < spec.rows; ++i)
        for (Eigen::Index j = 0; j < spec.cols; ++j) {
            const double di = static_cast<double>(i) - cr;
            const double dj = static_cast<double>(j) - cc;
            const double u = ct * di + st * dj;
            const double v = -st * di + ct * dj;
            double value = std::exp(
                -0.5 * (u * u / (sigma_a * sigma_a) + v * v / (sigma_b * sigma_b)));
            const double li = static_cast<double>(i) - lobe_r;
            const double lj = static_cast<double>(j) - lobe_c;
            value += lobe_amp * std::exp(-0.5 * (li * li + lj * lj) / (sigma_l * sigma_l));
            img.pixels(i, j) = value;
        }
    img.pixels /= img.pixels.sum();
    return img;
}

Image render_airy_like(const FieldSpec& spec, double xi, double eta) {
    const double wa = spec.warp_amplitude;
    const double extent = static_cast<double>(std::min(spec.rows, spec.cols));
    const double sigma0 = extent / 8.0;

    const double drift_r = 3.2 * wa * std::sin(2.2 * xi + 0.8 * eta);
    const double drift_c = 3.2 * wa * std::cos(2.0 * eta - 0.7 * xi);
    const double cr = 0.5 * static_cast<double>(spec.rows - 1) + drift_r;
    const double cc = 0.5 * static_cast<double>(spec.cols - 1) + drift_c;

    const double sigma_core = 0.55 * sigma0;
    const double ring_radius = sigma0 * (1.9 + 0.35 * wa * std::sin(1.3 * xi + 0.85 * eta));
    const double sigma_ring = 0.5 * sigma0 * (1.0 + 0.2 * wa * std::cos(0.9 * xi - 1.15 * eta));
    const double ring_amp = 0.45 * (1.0 + 0.5 * wa * std::sin(0.7 * xi * eta + 1.05 * xi));
    const double eps = 0.20 * wa * std::sin(1.45 * xi - 0.9 * eta);
    const double theta = wa * (2.1 * xi + 1.7 * eta);
    const double ct = std::cos(theta), st = std::sin(theta);

    Image img;
    img.pixels.resize(spec.rows, spec.cols);
    for (Eigen::Index i = 0; i < spec.rows; ++i)
        for (Eigen::Index j = 0; j < spec.cols; ++j) {
            const double di = static_cast<double>(i) - cr;
            const double dj = static_cast<double>(j) - cc;
            const double u = ct * di + st * dj;
            const double v = -st * di + ct * dj;
            const double core =
                std::exp(-0.5 * (di * di + dj * dj) / (sigma_core * sigma_core));
            const double stretched =
                std::sqrt(u * u * (1.0 + eps) + v * v * (1.0 - eps));
            const double ring_off = stretched - ring_radius;
            const double ring =
                std::exp(-0.5 * ring_off * ring_off / (sigma_ring * sigma_ring));
            img.pixels(i, j) = core + ring_amp * ring;
        }
    img.pixels /= img.pixels.sum();
    return img;
}

}  // namespace

Image render_psf(const FieldSpec& spec, const Eigen::Vector2d& pos) {
    validate_spec(spec);
    require(pos.allFinite(), "render_psf: non-finite position");
    const Eigen::Vector2d unit = unit_coords(spec, pos);
    switch (spec.family) {
        case PsfFamily::gaussian_mixture:
            return render_gaussian_mixture(spec, unit.x(), unit.y());
        case PsfFamily::airy_like:
            return render_airy_like(spec, unit.x(), unit.y());
    }
    throw std::invalid_argument("render_psf: unknown family");
}

GeneratedField generate_field(const FieldSpec& spec) {
    validate_spec(spec);
    Rng rng(spec.rng_seed);
    GeneratedField field;
    field.train.reserve(static_cast<std::size_t>(spec.n_train));
    field.test.reserve(static_cast<std::size_t>(spec.n_test));

    // Train: one uniform draw per cell of a near-square grid (jitter covers
    // 10% of the cell), so coverage is even and the closest pair stays at the
    // order of the mean spacing instead of collapsing to a near-duplicate.
    if (spec.n_train > 0) {
        const int gc = static_cast<int>(
            std::ceil(std::sqrt(static_cast<double>(spec.n_train))));
        const int gr = (spec.n_train + gc - 1) / gc;
        const double wx = spec.x_max - spec.x_min;
        const double wy = spec.y_max - spec.y_min;
        int k = 0;
        for (int r = 0; r < gr && k < spec.n_train; ++r)
            for (int c = 0; c < gc && k < spec.n_train; ++c, ++k) {
                const double fx =
                    (static_cast<double>(c) + 0.5 + 0.1 * rng.uniform(-0.5, 0.5)) / gc;
                const double fy =
                    (static_cast<double>(r) + 0.5 + 0.1 * rng.uniform(-0.5, 0.5)) / gr;
                const Eigen::Vector2d pos(spec.x_min + fx * wx, spec.y_min + fy * wy);
                field.train.push_back({pos, render_psf(spec, pos)});
            }
    }

    // Test: independent uniform positions anywhere in the field.
    for (int k = 0; k < spec.n_test; ++k) {
        Eigen::Vector2d pos(rng.uniform(spec.x_min, spec.x_max),
                            rng.uniform(spec.y_min, spec.y_max));
        field.test.push_back({pos, render_psf(spec, pos)});
    }
    return field;
}

}  // namespace psfield

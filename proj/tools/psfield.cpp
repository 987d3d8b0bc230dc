// psfield: batch tools for spatially-varying PSF fields.
//
//   gen          render a synthetic PSF field to manifests + stamp files
//   interp       interpolate stamps at target positions (train | idw | rbf)
//   metrics      score an estimate directory against a truth manifest
//   sensitivity  ellipticity sensitivity of a PSF set along basis directions
//
// Exit codes: 0 success, 2 bad arguments or invalid configuration,
// 3 numerical/runtime failure.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "psfield/analysis.hpp"
#include "psfield/baselines.hpp"
#include "psfield/datagen.hpp"
#include "psfield/field.hpp"
#include "psfield/manifest.hpp"

namespace fs = std::filesystem;
using namespace psfield;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require_arg(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

struct CommonArgs {
    std::string config;
    std::optional<long long> seed;
    std::optional<int> neighbors;
    std::optional<int> threads;
    std::optional<int> pca_components;
};

RunConfig resolve_config(const CommonArgs& args) {
    RunConfig cfg = args.config.empty() ? default_run_config() : load_run_config(args.config);
    if (args.seed) {
        require_arg(*args.seed >= 0, "seed must be non-negative");
        cfg.field.rng_seed = static_cast<std::uint64_t>(*args.seed);
        cfg.train.sliced.rng_seed = static_cast<std::uint64_t>(*args.seed);
    }
    if (args.neighbors) cfg.train.neighbors = *args.neighbors;
    if (args.threads) cfg.train.threads = *args.threads;
    if (args.pca_components) cfg.pca_components = *args.pca_components;
    return cfg;
}

// Window config: -1 auto (min(16, extent)), 0 disables seeding, else exact.
std::optional<std::pair<int, int>> resolve_window(const RunConfig& cfg, Eigen::Index rows,
                                                  Eigen::Index cols) {
    require_arg(cfg.window_rows >= -1 && cfg.window_cols >= -1,
                "window extents must be -1 (auto), 0 (off), or positive");
    int wr = cfg.window_rows, wc = cfg.window_cols;
    if (wr == -1) wr = static_cast<int>(std::min<Eigen::Index>(16, rows));
    if (wc == -1) wc = static_cast<int>(std::min<Eigen::Index>(16, cols));
    if (wr == 0 || wc == 0) return std::nullopt;
    wr = static_cast<int>(std::min<Eigen::Index>(wr, rows));
    wc = static_cast<int>(std::min<Eigen::Index>(wc, cols));
    return std::make_pair(wr, wc);
}

void write_field_group(const fs::path& dir, const std::string& prefix,
                       const std::vector<FieldSample>& samples) {
    fs::create_directories(dir);
    std::vector<ManifestEntry> entries;
    entries.reserve(samples.size());
    for (std::size_t k = 0; k < samples.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04zu", prefix.c_str(), k);
        const std::string stamp = std::string(name) + ".txt";
        write_image((dir / stamp).string(), samples[k].img);
        entries.push_back({name, samples[k].pos.x(), samples[k].pos.y(), stamp});
    }
    write_manifest((dir / "manifest.csv").string(), entries);
}

int cmd_gen(const CommonArgs& common, const std::string& out_dir) {
    const RunConfig cfg = resolve_config(common);
    const GeneratedField field = generate_field(cfg.field);

    const fs::path out(out_dir);
    write_field_group(out / "train", "train", field.train);
    write_field_group(out / "test", "test", field.test);

    std::vector<TargetEntry> targets;
    targets.reserve(field.test.size());
    for (std::size_t k = 0; k < field.test.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof(name), "test_%04zu", k);
        targets.push_back({name, field.test[k].pos.x(), field.test[k].pos.y()});
    }
    write_targets((out / "targets.csv").string(), targets);

    std::cout << "wrote " << field.train.size() << " train and " << field.test.size()
              << " test stamps under " << out.string() << "\n";
    return 0;
}

int cmd_interp(const CommonArgs& common, const std::string& manifest_path,
               const std::string& targets_path, const std::string& method,
               const std::string& out_dir) {
    const RunConfig cfg = resolve_config(common);
    require_arg(method == "train" || method == "idw" || method == "rbf",
                "unknown method '" + method + "' (expected train, idw, or rbf)");

    const LoadedManifest manifest = read_manifest(manifest_path);
    require_arg(!manifest.samples.empty(), "manifest has no samples");
    const std::vector<TargetEntry> targets = read_targets(targets_path);

    const fs::path out(out_dir);
    fs::create_directories(out);

    std::vector<Eigen::Vector2d> positions;
    positions.reserve(targets.size());
    for (const TargetEntry& t : targets) positions.emplace_back(t.x, t.y);

    std::vector<Image> estimates(targets.size());
    std::vector<double> seconds(targets.size(), 0.0);
    std::vector<int> discrepancies(targets.size(), 0);

    if (method == "train") {
        TrainOptions opt = cfg.train;
        opt.sliced.init_window =
            resolve_window(cfg, manifest.samples[0].img.rows(), manifest.samples[0].img.cols());
        std::vector<TargetDiagnostics> diags;
        estimates = train_interpolate(manifest.samples, positions, opt, nullptr, &diags);
        for (std::size_t t = 0; t < targets.size(); ++t) {
            seconds[t] = diags[t].seconds;
            discrepancies[t] = diags[t].discrepancy;
        }
    } else if (method == "idw") {
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const auto start = std::chrono::steady_clock::now();
            estimates[t] = idw_interpolate(manifest.samples, positions[t], cfg.train.neighbors);
            seconds[t] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    } else {
        std::vector<Image> stack;
        stack.reserve(manifest.samples.size());
        for (const FieldSample& s : manifest.samples) stack.push_back(s.img);
        const int q = std::min<int>(cfg.pca_components,
                                    static_cast<int>(manifest.samples.size()) - 1);
        const PcaBasis basis = pca_fit(stack, q);
        for (std::size_t t = 0; t < targets.size(); ++t) {
            const auto start = std::chrono::steady_clock::now();
            estimates[t] =
                rbf_interpolate(manifest.samples, positions[t], cfg.train.neighbors, basis);
            seconds[t] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    }

    for (std::size_t t = 0; t < targets.size(); ++t)
        write_image((out / (targets[t].id + ".txt")).string(), estimates[t]);

    {
        std::ofstream timings(out / "timings.csv");
        require_arg(static_cast<bool>(timings), "cannot write timings.csv");
        timings << "target_id,seconds,discrepancy\n";
        for (std::size_t t = 0; t < targets.size(); ++t)
            timings << targets[t].id << ',' << fmt(seconds[t]) << ',' << discrepancies[t]
                    << '\n';
    }
    {
        std::ofstream meta(out / "meta.csv");
        require_arg(static_cast<bool>(meta), "cannot write meta.csv");
        meta << "method,neighbors\n" << method << ',' << cfg.train.neighbors << '\n';
    }

    std::cout << "interpolated " << targets.size() << " targets with " << method << " into "
              << out.string() << "\n";
    return 0;
}

int cmd_metrics(const std::string& manifest_path, const std::string& estimate_dir,
                const std::string& out_path) {
    const LoadedManifest manifest = read_manifest(manifest_path);
    require_arg(!manifest.samples.empty(), "manifest has no samples");

    const fs::path dir(estimate_dir);
    std::vector<Image> truth, estimate;
    truth.reserve(manifest.entries.size());
    estimate.reserve(manifest.entries.size());
    for (std::size_t k = 0; k < manifest.entries.size(); ++k) {
        truth.push_back(manifest.samples[k].img);
        estimate.push_back(read_image((dir / (manifest.entries[k].id + ".txt")).string()));
    }
    const FieldMetrics metrics = field_metrics(truth, estimate);

    // Provenance of the estimates, recorded by interp.
    std::ifstream meta(dir / "meta.csv");
    require_arg(static_cast<bool>(meta), "cannot read meta.csv in " + estimate_dir);
    std::string header, row;
    require_arg(static_cast<bool>(std::getline(meta, header)) && header == "method,neighbors" &&
                    static_cast<bool>(std::getline(meta, row)) && !row.empty(),
                "malformed meta.csv in " + estimate_dir);

    const bool fresh = !fs::exists(out_path) || fs::file_size(out_path) == 0;
    std::ofstream out(out_path, std::ios::app);
    require_arg(static_cast<bool>(out), "cannot write " + out_path);
    if (fresh) out << "method,neighbors,e_gamma,e_size,nmse\n";
    out << row << ',' << fmt(metrics.e_gamma) << ',' << fmt(metrics.e_size) << ','
        << fmt(metrics.nmse) << '\n';

    std::cout << row << ": e_gamma=" << fmt(metrics.e_gamma)
              << " e_size=" << fmt(metrics.e_size) << " nmse=" << fmt(metrics.nmse) << "\n";
    return 0;
}

int cmd_sensitivity(const std::string& manifest_path, const std::string& basis_manifest_path,
                    int q, const std::string& out_path) {
    const LoadedManifest manifest = read_manifest(manifest_path);
    require_arg(!manifest.samples.empty(), "manifest has no samples");
    std::vector<Image> psfs;
    psfs.reserve(manifest.samples.size());
    for (const FieldSample& s : manifest.samples) psfs.push_back(s.img);

    std::vector<Image> basis_stack = psfs;
    if (!basis_manifest_path.empty() && basis_manifest_path != manifest_path) {
        const LoadedManifest basis_manifest = read_manifest(basis_manifest_path);
        require_arg(!basis_manifest.samples.empty(), "basis manifest has no samples");
        basis_stack.clear();
        for (const FieldSample& s : basis_manifest.samples) basis_stack.push_back(s.img);
    }

    const PcaBasis basis = pca_fit(basis_stack, q);
    const SensitivityResult res = sensitivity(psfs, basis.components);

    std::ofstream out(out_path);
    require_arg(static_cast<bool>(out), "cannot write " + out_path);
    out << "component,v_e1,v_e2,dispersion\n";
    for (Eigen::Index d = 0; d < res.v_e1.size(); ++d)
        out << (d + 1) << ',' << fmt(res.v_e1(d)) << ',' << fmt(res.v_e2(d)) << ','
            << fmt(res.dispersion(d)) << '\n';

    std::cout << "sensitivity over " << res.v_e1.size() << " components written to " << out_path
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatially-varying PSF field toolbox"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string out_dir, manifest_path, targets_path, method = "train";
    std::string estimate_dir, out_path, basis_manifest_path;
    int q = 5;

    CLI::App* gen = app.add_subcommand("gen", "Render a synthetic PSF field");
    gen->add_option("--config", common.config, "Run configuration file");
    gen->add_option("--seed", common.seed, "Override the generation seed");
    gen->add_option("--out", out_dir, "Output directory")->required();

    CLI::App* interp = app.add_subcommand("interp", "Interpolate stamps at target positions");
    interp->add_option("--config", common.config, "Run configuration file");
    interp->add_option("--seed", common.seed, "Override the transport seed");
    interp->add_option("--manifest", manifest_path, "Training manifest CSV")->required();
    interp->add_option("--targets", targets_path, "Targets CSV (id,x,y)")->required();
    interp->add_option("--method", method, "train, idw, or rbf");
    interp->add_option("--neighbors", common.neighbors, "Neighborhood size");
    interp->add_option("--threads", common.threads, "Worker threads");
    interp->add_option("--pca-components", common.pca_components, "rbf basis size");
    interp->add_option("--out", out_dir, "Output directory")->required();

    CLI::App* metrics = app.add_subcommand("metrics", "Score estimates against a truth manifest");
    metrics->add_option("--manifest", manifest_path, "Truth manifest CSV")->required();
    metrics->add_option("--estimate", estimate_dir, "Directory written by interp")->required();
    metrics->add_option("--out", out_path, "Metrics CSV (appends)")->required();

    CLI::App* sens = app.add_subcommand("sensitivity", "Ellipticity sensitivity per component");
    sens->add_option("--manifest", manifest_path, "PSF manifest CSV")->required();
    sens->add_option("--basis-manifest", basis_manifest_path,
                     "Manifest for the direction basis (default: --manifest)");
    sens->add_option("--q", q, "Number of principal directions");
    sens->add_option("--out", out_path, "Sensitivity CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return cmd_gen(common, out_dir);
        if (interp->parsed())
            return cmd_interp(common, manifest_path, targets_path, method, out_dir);
        if (metrics->parsed()) return cmd_metrics(manifest_path, estimate_dir, out_path);
        if (sens->parsed()) return cmd_sensitivity(manifest_path, basis_manifest_path, q, out_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

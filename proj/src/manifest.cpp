#include "psfield/manifest.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace psfield {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(where + ": bad number '" + s + "'");
    }
    require(used == s.size() && std::isfinite(v), where + ": bad number '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument(where + ": bad integer '" + s + "'");
    }
    require(used == s.size(), where + ": bad integer '" + s + "'");
    return v;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

LoadedManifest read_manifest(const std::string& path, bool load_images) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "read_manifest: cannot open " + path);

    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "read_manifest: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == "id,x,y,image_path",
            "read_manifest: bad header '" + line + "' in " + path);

    const std::filesystem::path dir = std::filesystem::path(path).parent_path();
    LoadedManifest out;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        require(fields.size() == 4, "read_manifest: expected 4 fields on line " +
                                        std::to_string(lineno) + " of " + path);
        ManifestEntry entry;
        entry.id = trim(fields[0]);
        require(!entry.id.empty(), "read_manifest: empty id on line " + std::to_string(lineno));
        const std::string where = "read_manifest line " + std::to_string(lineno);
        entry.x = parse_double(trim(fields[1]), where);
        entry.y = parse_double(trim(fields[2]), where);
        entry.image_path = trim(fields[3]);
        require(!entry.image_path.empty(),
                "read_manifest: empty image path on line " + std::to_string(lineno));

        FieldSample sample;
        sample.pos = Eigen::Vector2d(entry.x, entry.y);
        if (load_images) sample.img = read_image((dir / entry.image_path).string());
        out.entries.push_back(std::move(entry));
        out.samples.push_back(std::move(sample));
    }
    return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    for (const ManifestEntry& e : entries) {
        require(!e.id.empty() && e.id.find_first_of(",\r\n") == std::string::npos,
                "write_manifest: invalid id '" + e.id + "'");
        require(!e.image_path.empty() &&
                    e.image_path.find_first_of(",\r\n") == std::string::npos,
                "write_manifest: invalid image path '" + e.image_path + "'");
    }
    std::ofstream f(path);
    require(static_cast<bool>(f), "write_manifest: cannot open " + path);
    f << "id,x,y,image_path\n";
    for (const ManifestEntry& e : entries)
        f << e.id << ',' << fmt_double(e.x) << ',' << fmt_double(e.y) << ',' << e.image_path
          << '\n';
    require(static_cast<bool>(f), "write_manifest: write failed for " + path);
}

namespace {

bool valid_target_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

}  // namespace

std::vector<TargetEntry> read_targets(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "read_targets: cannot open " + path);

    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "read_targets: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == "id,x,y", "read_targets: bad header '" + line + "' in " + path);

    std::vector<TargetEntry> out;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv(line);
        require(fields.size() == 3, "read_targets: expected 3 fields on line " +
                                        std::to_string(lineno) + " of " + path);
        TargetEntry entry;
        entry.id = trim(fields[0]);
        require(valid_target_id(entry.id), "read_targets: invalid id '" + entry.id +
                                               "' on line " + std::to_string(lineno));
        const std::string where = "read_targets line " + std::to_string(lineno);
        entry.x = parse_double(trim(fields[1]), where);
        entry.y = parse_double(trim(fields[2]), where);
        out.push_back(std::move(entry));
    }
    return out;
}

void write_targets(const std::string& path, const std::vector<TargetEntry>& targets) {
    for (const TargetEntry& t : targets)
        require(valid_target_id(t.id), "write_targets: invalid id '" + t.id + "'");
    std::ofstream f(path);
    require(static_cast<bool>(f), "write_targets: cannot open " + path);
    f << "id,x,y\n";
    for (const TargetEntry& t : targets)
        f << t.id << ',' << fmt_double(t.x) << ',' << fmt_double(t.y) << '\n';
    require(static_cast<bool>(f), "write_targets: write failed for " + path);
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    require(static_cast<bool>(f), "load_run_config: cannot open " + path);

    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        const std::string where = "load_run_config line " + std::to_string(lineno);
        require(eq != std::string::npos, where + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        require(!key.empty(), where + ": empty key");
        require(!value.empty(), where + ": empty value for '" + key + "'");

        if (key == "rows") {
            cfg.field.rows = static_cast<Eigen::Index>(parse_int(value, where));
        } else if (key == "cols") {
            cfg.field.cols = static_cast<Eigen::Index>(parse_int(value, where));
        } else if (key == "n_train") {
            cfg.field.n_train = static_cast<int>(parse_int(value, where));
        } else if (key == "n_test") {
            cfg.field.n_test = static_cast<int>(parse_int(value, where));
        } else if (key == "x_min") {
            cfg.field.x_min = parse_double(value, where);
        } else if (key == "x_max") {
            cfg.field.x_max = parse_double(value, where);
        } else if (key == "y_min") {
            cfg.field.y_min = parse_double(value, where);
        } else if (key == "y_max") {
            cfg.field.y_max = parse_double(value, where);
        } else if (key == "family") {
            if (value == "gaussian_mixture") {
                cfg.field.family = PsfFamily::gaussian_mixture;
            } else if (value == "airy_like") {
                cfg.field.family = PsfFamily::airy_like;
            } else {
                throw std::invalid_argument(where + ": unknown family '" + value + "'");
            }
        } else if (key == "warp_amplitude") {
            cfg.field.warp_amplitude = parse_double(value, where);
        } else if (key == "seed") {
            const long long seed = parse_int(value, where);
            require(seed >= 0, where + ": seed must be non-negative");
            cfg.field.rng_seed = static_cast<std::uint64_t>(seed);
            cfg.train.sliced.rng_seed = static_cast<std::uint64_t>(seed);
        } else if (key == "neighbors") {
            cfg.train.neighbors = static_cast<int>(parse_int(value, where));
        } else if (key == "d_ext") {
            cfg.train.d_ext = static_cast<int>(parse_int(value, where));
        } else if (key == "beta") {
            cfg.train.beta = parse_double(value, where);
        } else if (key == "directions") {
            cfg.train.sliced.num_directions = static_cast<int>(parse_int(value, where));
        } else if (key == "max_iters") {
            cfg.train.sliced.max_iters = static_cast<int>(parse_int(value, where));
        } else if (key == "step_size") {
            cfg.train.sliced.step_size = parse_double(value, where);
        } else if (key == "step_decay") {
            cfg.train.sliced.step_decay_exponent = parse_double(value, where);
        } else if (key == "threads") {
            cfg.train.threads = static_cast<int>(parse_int(value, where));
        } else if (key == "pca_components") {
            cfg.pca_components = static_cast<int>(parse_int(value, where));
        } else if (key == "window_rows") {
            cfg.window_rows = static_cast<int>(parse_int(value, where));
        } else if (key == "window_cols") {
            cfg.window_cols = static_cast<int>(parse_int(value, where));
        } else {
            throw std::invalid_argument(where + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

}  // namespace psfield

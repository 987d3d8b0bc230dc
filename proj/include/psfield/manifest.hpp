#pragma once

#include <string>
#include <vector>

#include "psfield/datagen.hpp"
#include "psfield/field.hpp"

namespace psfield {

struct ManifestEntry {
    std::string id;
    double x = 0.0, y = 0.0;
    std::string image_path;  // relative to the manifest's directory
};

struct LoadedManifest {
    std::vector<ManifestEntry> entries;
    std::vector<FieldSample> samples;  // images empty when load_images=false
};

// CSV schema: header "id,x,y,image_path", one entry per line.
LoadedManifest read_manifest(const std::string& path, bool load_images = true);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// Interpolation targets. CSV schema: header "id,x,y"; ids are restricted to
// [A-Za-z0-9_-] so they can safely name output files.
struct TargetEntry {
    std::string id;
    double x = 0.0, y = 0.0;
};

std::vector<TargetEntry> read_targets(const std::string& path);
void write_targets(const std::string& path, const std::vector<TargetEntry>& targets);

// key=value run configuration ('#' comments, blank lines ignored; unknown
// keys rejected).
struct RunConfig {
    FieldSpec field;
    TrainOptions train;
    int pca_components = 10;
    // Seeding window config: -1 auto (min(16, image extent)), 0 disabled,
    // otherwise the exact extent.
    int window_rows = -1;
    int window_cols = -1;
};

RunConfig load_run_config(const std::string& path);
RunConfig default_run_config();

}  // namespace psfield

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meshrefine/camera.hpp"
#include "meshrefine/loss.hpp"
#include "meshrefine/optimize.hpp"

namespace meshrefine {

// One generation-backend call. Backends are out of process: controls are
// PNG files on disk and the request references them; responses are
// directories satisfying the target manifest contract.
struct GenerationRequest {
    enum class Stage { SingleView, MultiView };
    Stage stage = Stage::SingleView;
    std::string prompt;
    std::vector<std::pair<int, std::string>> controls;  // view id -> PNG path
    std::string rgb_reference;  // stage-1 image handed to the multi-view stage
    double guidance = 0.5;      // fraction of denoising steps honoring controls
    uint64_t seed = 0;

    void validate(int expected_views) const;
    std::string to_json_line() const;
};

struct ManifestView {
    int id = 0;
    double azimuth = 0.0;
    double elevation = 0.0;
    std::string normal;  // file names relative to the manifest directory
    std::string mask;
    std::string depth;
    std::string rgb;
};

struct Manifest {
    int version = 1;
    std::string kind;  // "controls" or "targets"
    int resolution = 0;
    double half_extent = 0.55;
    std::vector<ManifestView> views;
};

Manifest read_manifest(const std::string& path);
// Canonical serialization: read -> write round-trips byte-identically.
void write_manifest(const Manifest& manifest, const std::string& path);

// Rejects view sets other than the six canonical azimuths at elevation 0.
void validate_canonical_views(const Manifest& manifest);

struct ControlBundle {
    std::string directory;
    Manifest manifest;
};

// Renders the stage-1 depth control (first view), the blurred normal
// controls for every view, and silhouette masks; writes PNGs plus a
// manifest. All writes are atomic (temp file + rename).
ControlBundle prepare_controls(const Mesh& mesh, const ViewSet& views, int blur_kernel,
                               double blur_sigma, const std::string& out_dir);

// Renders unblurred normals + coverage masks of a (truth) mesh as a target
// fixture directory.
ControlBundle render_target_fixtures(const Mesh& mesh, const ViewSet& views,
                                     const std::string& out_dir);

// Decodes and validates a fixture directory into TargetViews.
TargetViews ingest_targets(const std::string& fixture_dir, const ViewSet& views);

struct PipelineConfig {
    std::string mesh_path;
    std::string fixture_dir;   // exactly one of fixture_dir / backend_url
    std::string backend_url;
    std::string out_dir;
    std::string prompt;
    int resolution = 256;
    double half_extent = 0.55;
    int blur_kernel = 7;
    double blur_sigma = 1.4;
    double guidance = 0.5;
    RefineConfig refine;

    void validate() const;
};

// Parses the `key = value` run-config text format (# comments allowed).
PipelineConfig parse_pipeline_config(const std::string& path);

struct PipelineResult {
    std::string refined_obj;
    std::string metrics_csv;
    MeshDiagnostics final_diagnostics;
};

// Stage 1: control images; stage 2: fixture ingest or backend call;
// stage 3: refinement. Stage failures name the stage; earlier artifacts
// stay on disk.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace meshrefine

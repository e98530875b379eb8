#pragma once

#include <string>
#include <utility>
#include <vector>

#include "meshrefine/geometry.hpp"
#include "meshrefine/loss.hpp"
#include "meshrefine/remesh.hpp"

namespace meshrefine {

struct RefineConfig {
    int iterations = 2000;
    double learning_rate = 0.01;      // on normalized coordinates
    double learning_rate_end = 0.001; // cosine decay target
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    LossWeights loss_weights;
    bool foreground_only = false;

    int remesh_interval = 1;  // 0 disables remeshing
    double remesh_start_length = 0.08;
    double remesh_end_length = 0.02;
    int remesh_max_ops = 10000;
    bool remesh_flips = true;

    int snapshot_interval = 0;  // 0 disables `snap_%06d.obj` snapshots
    std::string snapshot_dir;

    int resolution = 256;
    uint64_t seed = 0;
    int threads = 0;  // 0 = default worker count

    void validate() const;
};

struct RunLog {
    struct Row {
        int iteration;
        double total, normal, normal_gradient, silhouette;
        int vertex_count;
    };
    std::vector<Row> rows;
    double seconds_render_loss = 0.0;
    double seconds_remesh = 0.0;
    // Largest relative enclosed-volume change over any single remesh pass.
    double max_remesh_volume_drift = 0.0;
    MeshDiagnostics final_diagnostics;

    void write_csv(const std::string& path) const;
};

// Gradient descent on vertex positions against the targets, interleaved with
// adaptive remeshing. Deterministic for a fixed config, independent of the
// worker count.
std::pair<Mesh, RunLog> refine(const Mesh& mesh, const ViewSet& views,
                               const TargetViews& targets, const RefineConfig& config);

// Symmetric mean point-to-surface distance between area-weighted surface
// samples of each mesh and the other mesh's triangles.
double chamfer_distance(const Mesh& a, const Mesh& b, int samples = 100000, uint64_t seed = 7);

// Mean cosine between rendered and target normals over target-foreground
// pixels, averaged over views; in [-1, 1].
double normal_consistency(const Mesh& mesh, const TargetViews& targets, const ViewSet& views);

}  // namespace meshrefine

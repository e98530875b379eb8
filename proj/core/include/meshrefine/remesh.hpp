#pragma once

#include <utility>
#include <vector>

#include "meshrefine/geometry.hpp"

namespace meshrefine {

// Adam state carried per vertex; rows track |V| across remeshing.
struct OptimState {
    std::vector<Vec3> m;  // first moment
    std::vector<Vec3> v;  // second moment
    long step = 0;

    OptimState() = default;
    explicit OptimState(int vertex_count) : m(vertex_count), v(vertex_count) {}
    size_t size() const { return m.size(); }
};

struct RemeshParams {
    double target_edge_length = 0.02;
    // Split above 4/3 * target, collapse below 4/5 * target.
    static constexpr double kSplitFactor = 4.0 / 3.0;
    static constexpr double kCollapseFactor = 4.0 / 5.0;
    int max_ops = 10000;  // per pass, per op kind
    bool enable_flips = true;
    double relaxation = 0.5;  // tangential relaxation step in [0,1]
};

// One adaptive pass: split long edges at their midpoint, collapse short ones
// where safe (link condition holds, no incident face normal flips past 90
// degrees, never boundary or non-manifold edges), valence-improving flips,
// then one sweep of tangential relaxation. Optimizer rows follow the
// vertices: split averages the endpoints' moments, collapse merges them.
std::pair<Mesh, OptimState> remesh_pass(const Mesh& mesh, const OptimState& state,
                                        const RemeshParams& params);

// State-row transfer primitives (exposed for tests).
// Appends the averaged row for the vertex inserted on (a, b).
void state_after_split(OptimState& state, int a, int b);
// Folds row `gone` into `kept` by averaging; the caller drops `gone` when
// it compacts the vertex array.
void state_merge_rows(OptimState& state, int kept, int gone);

}  // namespace meshrefine

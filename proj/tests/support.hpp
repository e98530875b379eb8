#pragma once

#include <filesystem>
#include <string>

#include "meshrefine/geometry.hpp"
#include "meshrefine/loss.hpp"
#include "meshrefine/rng.hpp"

namespace meshrefine::test {

// Unique scratch directory under the build tree, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return path_ + "/" + name; }

private:
    std::string path_;
};

// Star-shaped random test mesh: icosphere with seeded radial harmonic bumps.
Mesh random_bumpy_sphere(uint64_t seed, int subdivisions = 1, double amplitude = 0.04);

// Random connectivity-irregular mesh for I/O property tests: a jittered grid
// patch (open) or jittered sphere (closed), seeded.
Mesh random_irregular_mesh(uint64_t seed);

// In-memory render of every view as a supervision target.
TargetViews self_targets(const Mesh& mesh, const ViewSet& views);

// Central finite difference of a scalar function of the mesh vertices.
template <typename F>
double central_difference(const Mesh& mesh, F&& eval, int vertex, int axis, double step) {
    auto shifted = [&](double delta) {
        std::vector<Vec3> verts = mesh.vertices();
        verts[vertex][axis] += delta;
        return Mesh(std::move(verts), mesh.faces());
    };
    double hi = eval(shifted(step));
    double lo = eval(shifted(-step));
    return (hi - lo) / (2.0 * step);
}

}  // namespace meshrefine::test

#include "support.hpp"

#include <unistd.h>

#include <atomic>

#include "meshrefine/primitives.hpp"
#include "meshrefine/raster.hpp"

namespace meshrefine::test {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = (fs::temp_directory_path() /
             ("meshrefine_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter++)))
                .string();
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

Mesh random_bumpy_sphere(uint64_t seed, int subdivisions, double amplitude) {
    return displace_radial_harmonics(make_icosphere(subdivisions, 0.5), {1, 2, 3}, amplitude,
                                     seed);
}

Mesh random_irregular_mesh(uint64_t seed) {
    Rng rng(seed);
    Mesh base = rng.next_double() < 0.5 ? make_icosphere(1, 0.5) : make_grid(4, 0.5);
    std::vector<Vec3> verts = base.vertices();
    for (Vec3& v : verts) {
        v.x += rng.uniform(-0.02, 0.02);
        v.y += rng.uniform(-0.02, 0.02);
        v.z += rng.uniform(-0.02, 0.02);
    }
    return Mesh(std::move(verts), base.faces());
}

TargetViews self_targets(const Mesh& mesh, const ViewSet& views) {
    TargetViews targets;
    std::vector<Vec3> nsums = vertex_normal_sums(mesh);
    for (size_t i = 0; i < views.size(); ++i) {
        RasterOutput r = rasterize(mesh, nsums, views[i]);
        targets.views.push_back({std::move(r.normal), std::move(r.silhouette)});
    }
    return targets;
}

}  // namespace meshrefine::test

#include <benchmark/benchmark.h>

#include "meshrefine/image.hpp"
#include "meshrefine/loss.hpp"
#include "meshrefine/optimize.hpp"
#include "meshrefine/primitives.hpp"
#include "meshrefine/raster.hpp"
#include "meshrefine/remesh.hpp"
#include "meshrefine/rng.hpp"

using namespace meshrefine;

namespace {

Mesh bench_mesh(int subdivisions) {
    return displace_radial_harmonics(make_icosphere(subdivisions, 0.5), {2, 3, 4}, 0.05, 7);
}

void BM_RasterizeForward(benchmark::State& state) {
    Mesh mesh = bench_mesh(int(state.range(0)));
    Viewpoint vp(0.5, 0, 256);
    std::vector<Vec3> nsums = vertex_normal_sums(mesh);
    for (auto _ : state) benchmark::DoNotOptimize(rasterize(mesh, nsums, vp));
    state.SetLabel(std::to_string(mesh.face_count()) + " faces");
}
BENCHMARK(BM_RasterizeForward)->Arg(2)->Arg(4);

void BM_RasterBackward(benchmark::State& state) {
    Mesh mesh = bench_mesh(int(state.range(0)));
    Viewpoint vp(0.5, 0, 256);
    std::vector<Vec3> nsums = vertex_normal_sums(mesh);
    RasterOutput r = rasterize(mesh, nsums, vp);
    Image gN(256, 256, 3, 0.1), gS(256, 256, 1, -0.2);
    for (auto _ : state)
        benchmark::DoNotOptimize(backward(r, mesh, nsums, vp, gN, gS));
    state.SetLabel(std::to_string(mesh.face_count()) + " faces");
}
BENCHMARK(BM_RasterBackward)->Arg(2)->Arg(4);

void BM_TotalLoss6Views(benchmark::State& state) {
    Mesh mesh = bench_mesh(4);
    ViewSet views = canonical_viewset(256);
    TargetViews targets;
    std::vector<Vec3> nsums = vertex_normal_sums(mesh);
    for (size_t i = 0; i < views.size(); ++i) {
        RasterOutput r = rasterize(mesh, nsums, views[i]);
        targets.views.push_back({std::move(r.normal), std::move(r.silhouette)});
    }
    int threads = int(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(total_loss(mesh, views, targets, threads));
    state.SetLabel(std::to_string(threads) + " workers");
}
BENCHMARK(BM_TotalLoss6Views)->Arg(1)->Arg(2)->Arg(4);

void BM_RemeshPass(benchmark::State& state) {
    Mesh mesh = bench_mesh(4);
    for (auto _ : state) {
        OptimState st(mesh.vertex_count());
        RemeshParams p;
        p.target_edge_length = 0.02;
        benchmark::DoNotOptimize(remesh_pass(mesh, st, p));
    }
    state.SetLabel(std::to_string(mesh.face_count()) + " faces");
}
BENCHMARK(BM_RemeshPass);

void BM_GaussianBlur(benchmark::State& state) {
    Rng rng(3);
    Image img(256, 256, 3);
    for (double& v : img.data) v = rng.uniform(-1, 1);
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(img, 7, 1.4));
}
BENCHMARK(BM_GaussianBlur);

void BM_ChamferDistance(benchmark::State& state) {
    Mesh a = bench_mesh(3), b = make_icosphere(3, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(chamfer_distance(a, b, 20000, 5));
}
BENCHMARK(BM_ChamferDistance);

}  // namespace

BENCHMARK_MAIN();

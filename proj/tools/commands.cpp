#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "meshrefine/error.hpp"
#include "meshrefine/pipeline.hpp"
#include "meshrefine/primitives.hpp"

namespace meshrefine::cli {

namespace fs = std::filesystem;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage: return kExitUsage;
        case ErrorKind::Data: return kExitData;
        case ErrorKind::Numeric: return kExitNumeric;
    }
    return kExitData;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}

// Joint normalization so two meshes can be rendered with the same camera.
void normalize_jointly(Mesh& a, Mesh& b) {
    Vec3 lo_a, hi_a, lo_b, hi_b;
    bounding_box(a, lo_a, hi_a);
    bounding_box(b, lo_b, hi_b);
    Vec3 lo{std::min(lo_a.x, lo_b.x), std::min(lo_a.y, lo_b.y), std::min(lo_a.z, lo_b.z)};
    Vec3 hi{std::max(hi_a.x, hi_b.x), std::max(hi_a.y, hi_b.y), std::max(hi_a.z, hi_b.z)};
    Vec3 ext = hi - lo;
    double longest = std::max({ext.x, ext.y, ext.z});
    if (!(longest > 0)) throw_data("eval: zero joint extent");
    NormalizeTransform t;
    t.translation = (lo + hi) * -0.5;
    t.scale = 1.0 / longest;
    auto apply = [&](Mesh& m) {
        std::vector<Vec3> verts = m.vertices();
        for (Vec3& v : verts) v = t.apply(v);
        m = Mesh(std::move(verts), m.faces());
    };
    apply(a);
    apply(b);
}

}  // namespace

int cmd_render_controls(const RenderControlsArgs& args) {
    return guarded([&] {
        Mesh mesh = normalize(load_obj(args.mesh));
        ViewSet views = canonical_viewset(args.res, args.half_extent);
        prepare_controls(mesh, views, args.blur_kernel, args.blur_sigma, args.out);
        nlohmann::ordered_json j;
        j["controls"] = args.out;
        j["views"] = views.size();
        std::cout << j.dump() << "\n";
    });
}

int cmd_refine(const RefineArgs& args) {
    return guarded([&] {
        PipelineConfig cfg;
        if (!args.config.empty()) cfg = parse_pipeline_config(args.config);
        cfg.mesh_path = args.mesh.empty() ? cfg.mesh_path : args.mesh;
        cfg.fixture_dir = args.targets.empty() ? cfg.fixture_dir : args.targets;
        cfg.backend_url.clear();
        cfg.out_dir = args.out.empty() ? cfg.out_dir : args.out;
        if (args.iterations >= 0) cfg.refine.iterations = args.iterations;
        if (args.threads > 0) cfg.refine.threads = args.threads;
        PipelineResult result = run_pipeline(cfg);
        nlohmann::ordered_json j;
        j["refined"] = result.refined_obj;
        j["metrics"] = result.metrics_csv;
        j["vertices"] = result.final_diagnostics.vertex_count;
        j["faces"] = result.final_diagnostics.face_count;
        std::cout << j.dump() << "\n";
    });
}

int cmd_pipeline(const PipelineArgs& args) {
    return guarded([&] {
        PipelineConfig cfg = parse_pipeline_config(args.config);
        if (args.threads > 0) cfg.refine.threads = args.threads;
        PipelineResult result = run_pipeline(cfg);
        nlohmann::ordered_json j;
        j["refined"] = result.refined_obj;
        j["metrics"] = result.metrics_csv;
        j["vertices"] = result.final_diagnostics.vertex_count;
        j["faces"] = result.final_diagnostics.face_count;
        std::cout << j.dump() << "\n";
    });
}

int cmd_eval(const EvalArgs& args) {
    return guarded([&] {
        Mesh a = load_obj(args.mesh_a);
        Mesh b = load_obj(args.mesh_b);
        double chamfer = chamfer_distance(a, b, args.samples, args.seed);

        Mesh na = a, nb = b;
        normalize_jointly(na, nb);
        ViewSet views = canonical_viewset(256);
        TargetViews targets;
        for (size_t i = 0; i < views.size(); ++i) {
            RasterOutput r = rasterize(nb, views[i]);
            targets.views.push_back({r.normal, r.silhouette});
        }
        double nc = normal_consistency(na, targets, views);

        nlohmann::ordered_json j;
        j["chamfer"] = chamfer;
        j["normal_consistency"] = nc;
        j["samples"] = args.samples;
        std::cout << j.dump() << "\n";
    });
}

int cmd_synth(const SynthArgs& args) {
    return guarded([&] {
        Mesh coarse, truth;
        if (args.kase == "sphere-bumps") {
            coarse = make_icosphere(2, 0.5);
            truth = displace_radial_harmonics(make_icosphere(4, 0.5), {2, 3, 4}, 0.05,
                                              args.seed);
        } else if (args.kase == "cube-dents") {
            coarse = make_cube(3, 0.45);
            truth = displace_gaussian_dents(make_cube(12, 0.45), 6, 0.04, 0.15, args.seed);
        } else {
            throw_usage("unknown synth case '" + args.kase +
                        "' (expected sphere-bumps or cube-dents)");
        }
        fs::create_directories(args.out);
        save_obj(coarse, args.out + "/coarse.obj");
        save_obj(truth, args.out + "/truth.obj");
        ViewSet views = canonical_viewset(args.res);
        render_target_fixtures(truth, views, args.out + "/fixtures");
        nlohmann::ordered_json j;
        j["coarse"] = args.out + "/coarse.obj";
        j["truth"] = args.out + "/truth.obj";
        j["fixtures"] = args.out + "/fixtures";
        std::cout << j.dump() << "\n";
    });
}

}  // namespace meshrefine::cli

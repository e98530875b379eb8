#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "meshrefine/error.hpp"
#include "meshrefine/pipeline.hpp"
#include "meshrefine/primitives.hpp"
#include "support.hpp"

using namespace meshrefine;
using test::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_config(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

}  // namespace

TEST_CASE("prepare_controls: six canonical views, blur applied by default") {
    TempDir dir("controls");
    Mesh mesh = make_icosphere(2, 0.5);
    ViewSet views = canonical_viewset(64);
    ControlBundle bundle = prepare_controls(mesh, views, 7, 1.4, dir.file("out"));

    REQUIRE(bundle.manifest.views.size() == 6);
    for (size_t i = 0; i < 6; ++i) {
        CHECK(bundle.manifest.views[i].azimuth ==
              doctest::Approx(kCanonicalAzimuths[i]).epsilon(1e-15));
        CHECK_FALSE(bundle.manifest.views[i].normal.empty());
        CHECK_FALSE(bundle.manifest.views[i].mask.empty());
        CHECK(std::filesystem::exists(dir.file("out/" + bundle.manifest.views[i].normal)));
    }
    // Depth control only for the starting view.
    CHECK_FALSE(bundle.manifest.views[0].depth.empty());
    CHECK(bundle.manifest.views[1].depth.empty());

    // The emitted normals equal the blur of the raw render.
    RasterOutput raw = rasterize(mesh, views[0]);
    Image expect = gaussian_blur(raw.normal, 7, 1.4);
    Image got = decode_normal_png(dir.file("out/" + bundle.manifest.views[0].normal));
    double max_err = 0;
    for (size_t i = 0; i < expect.data.size(); ++i)
        max_err = std::max(max_err, std::abs(expect.data[i] - got.data[i]));
    CHECK(max_err <= 1.0 / 65535.0 + 1e-9);
}

TEST_CASE("prepare_controls with blur disabled emits raw renders bit-exactly") {
    TempDir dir("controls");
    Mesh mesh = make_icosphere(1, 0.5);
    ViewSet views = canonical_viewset(48);
    ControlBundle bundle = prepare_controls(mesh, views, 1, 1.0, dir.file("a"));
    render_target_fixtures(mesh, views, dir.file("b"));
    for (int i = 0; i < 6; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "normal_%03d.png", i);
        CHECK(slurp(dir.file("a/") + name) == slurp(dir.file("b/") + name));
    }
}

TEST_CASE("re-running control preparation is byte-identical") {
    TempDir dir("controls");
    Mesh mesh = test::random_bumpy_sphere(5, 2, 0.05);
    ViewSet views = canonical_viewset(64);
    prepare_controls(mesh, views, 7, 1.4, dir.file("a"));
    prepare_controls(mesh, views, 7, 1.4, dir.file("b"));
    for (const char* name :
         {"manifest.json", "normal_000.png", "normal_003.png", "mask_002.png", "depth_000.png"})
        CHECK(slurp(dir.file(std::string("a/") + name)) ==
              slurp(dir.file(std::string("b/") + name)));
}

TEST_CASE("manifest round-trip is byte-identical") {
    TempDir dir("manifest");
    Mesh mesh = make_icosphere(1, 0.5);
    ViewSet views = canonical_viewset(32);
    ControlBundle bundle = render_target_fixtures(mesh, views, dir.file("fix"));
    std::string first = slurp(dir.file("fix/manifest.json"));
    Manifest m = read_manifest(dir.file("fix/manifest.json"));
    write_manifest(m, dir.file("again.json"));
    CHECK(slurp(dir.file("again.json")) == first);
}

TEST_CASE("loopback: fixtures rendered from a mesh give near-zero loss") {
    TempDir dir("loopback");
    Mesh mesh = test::random_bumpy_sphere(8, 2, 0.05);
    ViewSet views = canonical_viewset(64);
    render_target_fixtures(mesh, views, dir.file("fix"));
    TargetViews targets = ingest_targets(dir.file("fix"), views);
    auto [report, grads] = total_loss(mesh, views, targets, 2);
    // PNG quantization bounds the loopback error: half a step per sample
    // plus the mask's 8-bit rounding along the silhouette band.
    CHECK(report.normal < 64 * 64 * 3 * (0.5 / 65535.0) * 4);
    CHECK(report.total < 64 * 64 * 0.02);
}

TEST_CASE("ingest_targets validation errors name the failing view") {
    TempDir dir("ingest");
    Mesh mesh = make_icosphere(1, 0.5);
    ViewSet views = canonical_viewset(32);
    render_target_fixtures(mesh, views, dir.file("fix"));

    SUBCASE("missing mask file") {
        std::filesystem::remove(dir.file("fix/mask_003.png"));
        try {
            ingest_targets(dir.file("fix"), views);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("view 3") != std::string::npos);
        }
    }
    SUBCASE("non-canonical azimuth is rejected") {
        Manifest m = read_manifest(dir.file("fix/manifest.json"));
        m.views[2].azimuth = M_PI / 3.0;
        write_manifest(m, dir.file("fix/manifest.json"));
        CHECK_THROWS_AS(ingest_targets(dir.file("fix"), views), Error);
    }
    SUBCASE("resolution mismatch against the configured views") {
        CHECK_THROWS_AS(ingest_targets(dir.file("fix"), canonical_viewset(64)), Error);
    }
    SUBCASE("wrong view count is rejected") {
        Manifest m = read_manifest(dir.file("fix/manifest.json"));
        m.views.pop_back();
        write_manifest(m, dir.file("fix/manifest.json"));
        CHECK_THROWS_AS(ingest_targets(dir.file("fix"), views), Error);
    }
}

TEST_CASE("generation request invariants") {
    GenerationRequest req;
    req.stage = GenerationRequest::Stage::SingleView;
    req.controls = {{0, "depth.png"}};
    req.guidance = 0.5;
    req.validate(6);

    req.guidance = 1.5;
    CHECK_THROWS_AS(req.validate(6), Error);
    req.guidance = 0.5;
    req.controls.push_back({1, "x.png"});
    CHECK_THROWS_AS(req.validate(6), Error);

    GenerationRequest mv;
    mv.stage = GenerationRequest::Stage::MultiView;
    for (int i = 0; i < 6; ++i) mv.controls.push_back({i, "n.png"});
    CHECK_THROWS_AS(mv.validate(6), Error);  // missing the stage-1 image
    mv.rgb_reference = "preview.png";
    mv.validate(6);
}

TEST_CASE("config parsing: unknown keys rejected, values land") {
    TempDir dir("config");
    write_config(dir.file("run.cfg"),
                 "# comment\n"
                 "mesh = m.obj\n"
                 "fixtures = fix\n"
                 "out = outdir\n"
                 "resolution = 64\n"
                 "guidance = 0.5\n"
                 "iterations = 12\n"
                 "w_normal_gradient = 0.5\n");
    PipelineConfig cfg = parse_pipeline_config(dir.file("run.cfg"));
    CHECK(cfg.mesh_path == "m.obj");
    CHECK(cfg.resolution == 64);
    CHECK(cfg.refine.iterations == 12);
    CHECK(cfg.refine.loss_weights.normal_gradient == doctest::Approx(0.5));
    CHECK(cfg.guidance == doctest::Approx(0.5));

    write_config(dir.file("bad.cfg"), "nonsense = 12\n");
    CHECK_THROWS_AS(parse_pipeline_config(dir.file("bad.cfg")), Error);
}

TEST_CASE("run_pipeline end-to-end in fixture mode") {
    TempDir dir("pipe");
    Mesh coarse = make_icosphere(2, 0.5);
    save_obj(coarse, dir.file("coarse.obj"));
    Mesh truth = test::random_bumpy_sphere(4, 3, 0.05);
    ViewSet views = canonical_viewset(64);
    render_target_fixtures(truth, views, dir.file("fixtures"));

    PipelineConfig cfg;
    cfg.mesh_path = dir.file("coarse.obj");
    cfg.fixture_dir = dir.file("fixtures");
    cfg.out_dir = dir.file("out");
    cfg.resolution = 64;
    cfg.refine.resolution = 64;
    cfg.refine.iterations = 10;
    cfg.refine.remesh_start_length = 0.1;
    cfg.refine.remesh_end_length = 0.09;
    cfg.refine.threads = 2;
    cfg.guidance = 0.5;

    PipelineResult result = run_pipeline(cfg);
    CHECK(std::filesystem::exists(result.refined_obj));
    CHECK(std::filesystem::exists(result.metrics_csv));
    CHECK(std::filesystem::exists(dir.file("out/controls/manifest.json")));

    // Guidance fraction recorded verbatim in the request log.
    std::string log = slurp(dir.file("out/requests.jsonl"));
    CHECK(log.find("\"guidance\":0.5") != std::string::npos);

    // Metrics CSV has one row per iteration plus the header.
    std::string csv = slurp(result.metrics_csv);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') lines++;
    CHECK(lines == 11);
}

TEST_CASE("unreachable backend fails in stage 2 with stage-1 artifacts on disk") {
    TempDir dir("pipe");
    Mesh coarse = make_icosphere(1, 0.5);
    save_obj(coarse, dir.file("coarse.obj"));

    PipelineConfig cfg;
    cfg.mesh_path = dir.file("coarse.obj");
    cfg.backend_url = "http://127.0.0.1:9";  // discard port: nothing listens
    cfg.out_dir = dir.file("out");
    cfg.resolution = 32;
    cfg.refine.resolution = 32;
    cfg.refine.iterations = 1;
    try {
        run_pipeline(cfg);
        FAIL("expected stage-2 failure");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("stage 2") != std::string::npos);
    }
    CHECK(std::filesystem::exists(dir.file("out/controls/manifest.json")));
    CHECK(std::filesystem::exists(dir.file("out/controls/depth_000.png")));
}

TEST_CASE("pipeline config validation") {
    PipelineConfig cfg;
    cfg.mesh_path = "m.obj";
    cfg.out_dir = "o";
    CHECK_THROWS_AS(cfg.validate(), Error);  // neither fixtures nor backend
    cfg.fixture_dir = "f";
    cfg.backend_url = "http://x";
    CHECK_THROWS_AS(cfg.validate(), Error);  // both
    cfg.backend_url.clear();
    cfg.blur_kernel = 4;
    CHECK_THROWS_AS(cfg.validate(), Error);  // even kernel
    cfg.blur_kernel = 7;
    cfg.validate();
}

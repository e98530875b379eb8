#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "meshrefine/geometry.hpp"
#include "meshrefine/primitives.hpp"
#include "support.hpp"

using namespace meshrefine;
using namespace meshrefine::cli;
using test::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("render-controls: success and failure modes") {
    TempDir dir("cli");
    save_obj(make_icosphere(1, 0.5), dir.file("m.obj"));

    RenderControlsArgs ok;
    ok.mesh = dir.file("m.obj");
    ok.out = dir.file("controls");
    ok.res = 32;
    CHECK(cmd_render_controls(ok) == kExitOk);
    CHECK(std::filesystem::exists(dir.file("controls/manifest.json")));

    RenderControlsArgs missing = ok;
    missing.mesh = dir.file("absent.obj");
    CHECK(cmd_render_controls(missing) == kExitData);

    RenderControlsArgs tiny = ok;
    tiny.res = 8;
    CHECK(cmd_render_controls(tiny) == kExitUsage);
}

TEST_CASE("synth: cases, determinism, usage errors") {
    TempDir dir("cli");
    SynthArgs args;
    args.kase = "sphere-bumps";
    args.out = dir.file("a");
    args.seed = 11;
    args.res = 32;
    CHECK(cmd_synth(args) == kExitOk);
    CHECK(std::filesystem::exists(dir.file("a/coarse.obj")));
    CHECK(std::filesystem::exists(dir.file("a/truth.obj")));
    CHECK(std::filesystem::exists(dir.file("a/fixtures/manifest.json")));
    for (int i = 0; i < 6; ++i) {
        char n[40], m[40];
        std::snprintf(n, sizeof n, "a/fixtures/normal_%03d.png", i);
        std::snprintf(m, sizeof m, "a/fixtures/mask_%03d.png", i);
        CHECK(std::filesystem::exists(dir.file(n)));
        CHECK(std::filesystem::exists(dir.file(m)));
    }

    // Coarse mesh is the 320-face sphere.
    Mesh coarse = load_obj(dir.file("a/coarse.obj"));
    CHECK(coarse.face_count() == 320);

    // Same seed twice: byte-identical artifacts.
    args.out = dir.file("b");
    CHECK(cmd_synth(args) == kExitOk);
    CHECK(slurp(dir.file("a/truth.obj")) == slurp(dir.file("b/truth.obj")));
    CHECK(slurp(dir.file("a/fixtures/normal_002.png")) ==
          slurp(dir.file("b/fixtures/normal_002.png")));

    SynthArgs unknown = args;
    unknown.kase = "torus-knots";
    CHECK(cmd_synth(unknown) == kExitUsage);

    SynthArgs dents;
    dents.kase = "cube-dents";
    dents.out = dir.file("c");
    dents.res = 32;
    CHECK(cmd_synth(dents) == kExitOk);
}

TEST_CASE("eval: identical meshes and concentric spheres") {
    TempDir dir("cli");
    save_obj(make_icosphere(3, 0.5), dir.file("a.obj"));
    save_obj(make_icosphere(3, 0.45), dir.file("b.obj"));

    EvalArgs same;
    same.mesh_a = dir.file("a.obj");
    same.mesh_b = dir.file("a.obj");
    same.samples = 20000;
    CHECK(cmd_eval(same) == kExitOk);

    EvalArgs spheres = same;
    spheres.mesh_b = dir.file("b.obj");
    CHECK(cmd_eval(spheres) == kExitOk);

    EvalArgs missing = same;
    missing.mesh_b = dir.file("absent.obj");
    CHECK(cmd_eval(missing) == kExitData);
}

TEST_CASE("refine: smoke run over synth fixtures finishes quickly") {
    auto t0 = std::chrono::steady_clock::now();
    TempDir dir("cli");
    SynthArgs synth;
    synth.kase = "sphere-bumps";
    synth.out = dir.file("suite");
    synth.seed = 3;
    synth.res = 48;
    REQUIRE(cmd_synth(synth) == kExitOk);

    RefineArgs refine;
    refine.mesh = dir.file("suite/coarse.obj");
    refine.targets = dir.file("suite/fixtures");
    refine.out = dir.file("run");
    refine.iterations = 5;
    refine.threads = 2;
    // No config file: defaults except the resolution must match fixtures.
    TempDir cfgdir("cfg");
    {
        std::ofstream cfg(cfgdir.file("r.cfg"));
        cfg << "resolution = 48\n";
    }
    refine.config = cfgdir.file("r.cfg");
    CHECK(cmd_refine(refine) == kExitOk);
    CHECK(std::filesystem::exists(dir.file("run/refined.obj")));
    CHECK(std::filesystem::exists(dir.file("run/metrics.csv")));

    // Mismatched resolution: fixtures are 48, config asks 64.
    RefineArgs bad = refine;
    {
        std::ofstream cfg(cfgdir.file("bad.cfg"));
        cfg << "resolution = 64\n";
    }
    bad.config = cfgdir.file("bad.cfg");
    bad.out = dir.file("run2");
    CHECK(bad.config != refine.config);
    CHECK(cmd_refine(bad) == kExitData);

    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 30.0);
}

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace meshrefine::cli;

    CLI::App app{"Multi-view normal-guided mesh refinement"};
    app.require_subcommand(1);

    RenderControlsArgs rc;
    CLI::App* c_render = app.add_subcommand(
        "render-controls", "Render depth + blurred normal control images for a mesh");
    c_render->add_option("--mesh", rc.mesh, "Input OBJ mesh")->required();
    c_render->add_option("--out", rc.out, "Output directory")->required();
    c_render->add_option("--res", rc.res, "Image resolution");
    c_render->add_option("--blur-kernel", rc.blur_kernel, "Gaussian kernel size (odd)");
    c_render->add_option("--blur-sigma", rc.blur_sigma, "Gaussian sigma in pixels");
    c_render->add_option("--half-extent", rc.half_extent, "Orthographic half extent");
    c_render->add_option("--threads", rc.threads, "Worker cap");

    RefineArgs rf;
    CLI::App* c_refine =
        app.add_subcommand("refine", "Optimize a mesh against target normal fixtures");
    c_refine->add_option("--mesh", rf.mesh, "Input OBJ mesh");
    c_refine->add_option("--targets", rf.targets, "Fixture directory with targets");
    c_refine->add_option("--config", rf.config, "Run config file");
    c_refine->add_option("--out", rf.out, "Output directory");
    c_refine->add_option("--iterations", rf.iterations, "Override iteration count");
    c_refine->add_option("--threads", rf.threads, "Worker cap");

    PipelineArgs pl;
    CLI::App* c_pipe = app.add_subcommand("pipeline", "Run all stages from a config file");
    c_pipe->add_option("--config", pl.config, "Run config file")->required();
    c_pipe->add_option("--threads", pl.threads, "Worker cap");

    EvalArgs ev;
    CLI::App* c_eval = app.add_subcommand("eval", "Chamfer distance + normal stats");
    c_eval->add_option("--mesh-a", ev.mesh_a, "First OBJ mesh")->required();
    c_eval->add_option("--mesh-b", ev.mesh_b, "Second OBJ mesh")->required();
    c_eval->add_option("--samples", ev.samples, "Surface sample count");
    c_eval->add_option("--seed", ev.seed, "Sampling seed");

    SynthArgs sy;
    CLI::App* c_synth =
        app.add_subcommand("synth", "Generate a synthetic coarse/truth/fixture suite");
    c_synth->add_option("--case", sy.kase, "sphere-bumps | cube-dents")->required();
    c_synth->add_option("--out", sy.out, "Output directory")->required();
    c_synth->add_option("--seed", sy.seed, "Generation seed");
    c_synth->add_option("--res", sy.res, "Fixture resolution");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    if (c_render->parsed()) return cmd_render_controls(rc);
    if (c_refine->parsed()) return cmd_refine(rf);
    if (c_pipe->parsed()) return cmd_pipeline(pl);
    if (c_eval->parsed()) return cmd_eval(ev);
    if (c_synth->parsed()) return cmd_synth(sy);
    return kExitUsage;
}

#pragma once

#include <cstdint>
#include <string>

namespace meshrefine::cli {

// Exit codes: 0 success, 2 usage, 3 input data, 4 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RenderControlsArgs {
    std::string mesh, out;
    int res = 256;
    int blur_kernel = 7;
    double blur_sigma = 1.4;
    double half_extent = 0.55;
    int threads = 0;
};
int cmd_render_controls(const RenderControlsArgs& args);

struct RefineArgs {
    std::string mesh, targets, config, out;
    int iterations = -1;  // -1 = from config/default
    int threads = 0;
};
int cmd_refine(const RefineArgs& args);

struct PipelineArgs {
    std::string config;
    int threads = 0;
};
int cmd_pipeline(const PipelineArgs& args);

struct EvalArgs {
    std::string mesh_a, mesh_b;
    int samples = 100000;
    uint64_t seed = 7;
};
int cmd_eval(const EvalArgs& args);

struct SynthArgs {
    std::string kase;  // sphere-bumps | cube-dents
    std::string out;
    uint64_t seed = 0;
    int res = 256;
};
int cmd_synth(const SynthArgs& args);

}  // namespace meshrefine::cli

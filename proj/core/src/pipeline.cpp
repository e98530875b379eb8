#include "meshrefine/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "meshrefine/error.hpp"
#include "meshrefine/image.hpp"
#include "meshrefine/raster.hpp"

namespace meshrefine {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kAzimuthTol = 1e-9;

// Writes through a temp file and renames into place.
template <typename Fn>
void atomic_write(const std::string& path, Fn&& writer) {
    std::string tmp = path + ".tmp";
    writer(tmp);
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw_data("cannot move " + tmp + " into place");
}

std::string view_file(const char* stem, int id) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d.png", stem, id);
    return buf;
}

// Depth control encoding: min-max over covered pixels, near = 1, background 0.
Image depth_control_image(const RasterOutput& raster) {
    const Image& d = raster.depth;
    double dmin = 1e300, dmax = -1e300;
    for (size_t i = 0; i < d.data.size(); ++i) {
        if (raster.triangle_id[i] < 0) continue;
        dmin = std::min(dmin, d.data[i]);
        dmax = std::max(dmax, d.data[i]);
    }
    Image out(d.width, d.height, 1);
    if (dmax < dmin) return out;  // nothing covered
    double range = dmax - dmin;
    for (size_t i = 0; i < d.data.size(); ++i) {
        if (raster.triangle_id[i] < 0) continue;
        out.data[i] = range > 0 ? (dmax - d.data[i]) / range : 1.0;
    }
    return out;
}

}  // namespace

void GenerationRequest::validate(int expected_views) const {
    if (!(guidance >= 0.0 && guidance <= 1.0))
        throw_data("generation request: guidance fraction must be in [0, 1]");
    if (stage == Stage::SingleView) {
        if (controls.size() != 1)
            throw_data("single-view request must carry exactly one depth control");
    } else {
        if (int(controls.size()) != expected_views)
            throw_data("multi-view request must carry one normal control per view");
        if (rgb_reference.empty())
            throw_data("multi-view request must carry the stage-1 RGB image");
    }
}

std::string GenerationRequest::to_json_line() const {
    ordered_json j;
    j["stage"] = stage == Stage::SingleView ? "single_view" : "multi_view";
    j["prompt"] = prompt;
    j["guidance"] = guidance;
    j["seed"] = seed;
    ordered_json ctrl = ordered_json::array();
    for (const auto& [id, path] : controls) ctrl.push_back({{"view", id}, {"file", path}});
    j["controls"] = ctrl;
    if (!rgb_reference.empty()) j["rgb_reference"] = rgb_reference;
    return j.dump();
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_data("cannot open manifest: " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw_data("manifest parse error in " + path + ": " + e.what());
    }
    Manifest m;
    try {
        m.version = j.at("version").get<int>();
        m.kind = j.at("kind").get<std::string>();
        m.resolution = j.at("resolution").get<int>();
        m.half_extent = j.at("half_extent").get<double>();
        for (const auto& v : j.at("views")) {
            ManifestView mv;
            mv.id = v.at("id").get<int>();
            mv.azimuth = v.at("azimuth").get<double>();
            mv.elevation = v.at("elevation").get<double>();
            if (v.contains("normal")) mv.normal = v["normal"].get<std::string>();
            if (v.contains("mask")) mv.mask = v["mask"].get<std::string>();
            if (v.contains("depth")) mv.depth = v["depth"].get<std::string>();
            if (v.contains("rgb")) mv.rgb = v["rgb"].get<std::string>();
            m.views.push_back(mv);
        }
    } catch (const std::exception& e) {
        throw_data("manifest field error in " + path + ": " + e.what());
    }
    if (m.version != 1) throw_data("unsupported manifest version in " + path);
    return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
    ordered_json j;
    j["version"] = m.version;
    j["kind"] = m.kind;
    j["resolution"] = m.resolution;
    j["half_extent"] = m.half_extent;
    j["encoding"] = {{"normal", "rgb16"}, {"mask", "gray8"}, {"depth", "gray16"}};
    ordered_json views = ordered_json::array();
    for (const ManifestView& mv : m.views) {
        ordered_json v;
        v["id"] = mv.id;
        v["azimuth"] = mv.azimuth;
        v["elevation"] = mv.elevation;
        if (!mv.normal.empty()) v["normal"] = mv.normal;
        if (!mv.mask.empty()) v["mask"] = mv.mask;
        if (!mv.depth.empty()) v["depth"] = mv.depth;
        if (!mv.rgb.empty()) v["rgb"] = mv.rgb;
        views.push_back(v);
    }
    j["views"] = views;
    atomic_write(path, [&](const std::string& tmp) {
        std::ofstream out(tmp);
        if (!out) throw_data("cannot open for writing: " + tmp);
        out << j.dump(2) << "\n";
        if (!out) throw_data("write failed: " + tmp);
    });
}

void validate_canonical_views(const Manifest& m) {
    if (m.views.size() != kCanonicalAzimuths.size())
        throw_data("manifest must list exactly " + std::to_string(kCanonicalAzimuths.size()) +
                   " views, got " + std::to_string(m.views.size()));
    for (size_t i = 0; i < m.views.size(); ++i) {
        if (std::abs(m.views[i].azimuth - kCanonicalAzimuths[i]) > kAzimuthTol)
            throw_data("view " + std::to_string(i) + " azimuth " +
                       std::to_string(m.views[i].azimuth) + " is not the canonical " +
                       std::to_string(kCanonicalAzimuths[i]));
        if (std::abs(m.views[i].elevation) > kAzimuthTol)
            throw_data("view " + std::to_string(i) + " elevation must be 0");
    }
}

namespace {

ControlBundle render_views(const Mesh& mesh, const ViewSet& views, const std::string& out_dir,
                           const std::string& kind, int blur_kernel, double blur_sigma,
                           bool with_depth) {
    fs::create_directories(out_dir);
    std::vector<Vec3> nsums = vertex_normal_sums(mesh);

    Manifest m;
    m.kind = kind;
    m.resolution = views.resolution;
    m.half_extent = views.views.empty() ? 0.55 : views[0].half_extent();

    for (size_t i = 0; i < views.size(); ++i) {
        RasterOutput raster = rasterize(mesh, nsums, views[i]);
        ManifestView mv;
        mv.id = int(i);
        mv.azimuth = views[i].azimuth();
        mv.elevation = views[i].elevation();

        Image normal = raster.normal;
        if (blur_kernel > 1) normal = gaussian_blur(normal, blur_kernel, blur_sigma);
        mv.normal = view_file("normal", int(i));
        atomic_write(out_dir + "/" + mv.normal,
                     [&](const std::string& tmp) { encode_normal_png(normal, tmp); });

        mv.mask = view_file("mask", int(i));
        atomic_write(out_dir + "/" + mv.mask,
                     [&](const std::string& tmp) { encode_mask_png(raster.silhouette, tmp); });

        if (with_depth && i == 0) {
            mv.depth = view_file("depth", 0);
            Image depth = depth_control_image(raster);
            atomic_write(out_dir + "/" + mv.depth,
                         [&](const std::string& tmp) { encode_depth_png(depth, tmp); });
        }
        m.views.push_back(mv);
    }
    write_manifest(m, out_dir + "/manifest.json");
    return {out_dir, std::move(m)};
}

}  // namespace

ControlBundle prepare_controls(const Mesh& mesh, const ViewSet& views, int blur_kernel,
                               double blur_sigma, const std::string& out_dir) {
    return render_views(mesh, views, out_dir, "controls", blur_kernel, blur_sigma, true);
}

ControlBundle render_target_fixtures(const Mesh& mesh, const ViewSet& views,
                                     const std::string& out_dir) {
    return render_views(mesh, views, out_dir, "targets", 1, 1.0, false);
}

TargetViews ingest_targets(const std::string& fixture_dir, const ViewSet& views) {
    Manifest m = read_manifest(fixture_dir + "/manifest.json");
    validate_canonical_views(m);
    if (m.resolution != views.resolution)
        throw_data("fixture resolution " + std::to_string(m.resolution) +
                   " does not match configured " + std::to_string(views.resolution));

    TargetViews targets;
    for (size_t i = 0; i < m.views.size(); ++i) {
        const ManifestView& mv = m.views[i];
        std::string who = "view " + std::to_string(mv.id);
        if (mv.normal.empty()) throw_data(who + ": manifest lists no normal image");
        if (mv.mask.empty()) throw_data(who + ": manifest lists no mask image");
        std::string npath = fixture_dir + "/" + mv.normal;
        std::string mpath = fixture_dir + "/" + mv.mask;
        if (!fs::exists(npath)) throw_data(who + ": missing normal file " + npath);
        if (!fs::exists(mpath)) throw_data(who + ": missing mask file " + mpath);

        TargetView tv;
        tv.normal = decode_normal_png(npath);
        tv.mask = decode_mask_png(mpath);
        if (tv.normal.width != m.resolution || tv.normal.height != m.resolution)
            throw_data(who + ": normal image size does not match manifest resolution");
        if (tv.mask.width != m.resolution || tv.mask.height != m.resolution)
            throw_data(who + ": mask image size does not match manifest resolution");

        double foreground = 0.0;
        for (double v : tv.mask.data) foreground += v;
        if (foreground <= 0.0) throw_data(who + ": foreground mask is empty");
        for (int y = 0; y < tv.normal.height; ++y)
            for (int x = 0; x < tv.normal.width; ++x) {
                if (tv.mask.at(y, x) <= 0.5) continue;
                Vec3 n{tv.normal.at(y, x, 0), tv.normal.at(y, x, 1), tv.normal.at(y, x, 2)};
                if (norm(n) > 1.0 + 1e-3)
                    throw_data(who + ": foreground normal longer than unit at pixel (" +
                               std::to_string(x) + ", " + std::to_string(y) + ")");
            }
        targets.views.push_back(std::move(tv));
    }
    return targets;
}

void PipelineConfig::validate() const {
    if (mesh_path.empty()) throw_usage("config: mesh path is required");
    if (out_dir.empty()) throw_usage("config: output directory is required");
    if (fixture_dir.empty() == backend_url.empty())
        throw_usage("config: exactly one of fixtures/backend must be set");
    if (blur_kernel < 1 || blur_kernel % 2 == 0)
        throw_usage("config: blur kernel must be odd and >= 1");
    if (!(guidance >= 0.0 && guidance <= 1.0))
        throw_usage("config: guidance must be in [0, 1]");
    refine.validate();
    if (resolution != refine.resolution)
        throw_usage("config: resolution fields disagree");
}

PipelineConfig parse_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_data("cannot open config: " + path);
    PipelineConfig cfg;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw_usage(path + ":" + std::to_string(line_no) + ": " + what);
    };
    auto trim = [](std::string s) {
        size_t a = s.find_first_not_of(" \t\r");
        size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    auto to_bool = [&](const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        fail("expected boolean, got '" + v + "'");
        return false;
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos) fail("expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));

        try {
            if (key == "mesh") cfg.mesh_path = value;
            else if (key == "fixtures") cfg.fixture_dir = value;
            else if (key == "backend") cfg.backend_url = value;
            else if (key == "out") cfg.out_dir = value;
            else if (key == "prompt") cfg.prompt = value;
            else if (key == "resolution") { cfg.resolution = std::stoi(value); cfg.refine.resolution = cfg.resolution; }
            else if (key == "half_extent") cfg.half_extent = std::stod(value);
            else if (key == "blur_kernel") cfg.blur_kernel = std::stoi(value);
            else if (key == "blur_sigma") cfg.blur_sigma = std::stod(value);
            else if (key == "guidance") cfg.guidance = std::stod(value);
            else if (key == "seed") cfg.refine.seed = std::stoull(value);
            else if (key == "iterations") cfg.refine.iterations = std::stoi(value);
            else if (key == "learning_rate") cfg.refine.learning_rate = std::stod(value);
            else if (key == "learning_rate_end") cfg.refine.learning_rate_end = std::stod(value);
            else if (key == "beta1") cfg.refine.beta1 = std::stod(value);
            else if (key == "beta2") cfg.refine.beta2 = std::stod(value);
            else if (key == "epsilon") cfg.refine.epsilon = std::stod(value);
            else if (key == "w_normal") cfg.refine.loss_weights.normal = std::stod(value);
            else if (key == "w_normal_gradient") cfg.refine.loss_weights.normal_gradient = std::stod(value);
            else if (key == "w_silhouette") cfg.refine.loss_weights.silhouette = std::stod(value);
            else if (key == "foreground_only") cfg.refine.foreground_only = to_bool(value);
            else if (key == "remesh_interval") cfg.refine.remesh_interval = std::stoi(value);
            else if (key == "remesh_start_length") cfg.refine.remesh_start_length = std::stod(value);
            else if (key == "remesh_end_length") cfg.refine.remesh_end_length = std::stod(value);
            else if (key == "remesh_max_ops") cfg.refine.remesh_max_ops = std::stoi(value);
            else if (key == "remesh_flips") cfg.refine.remesh_flips = to_bool(value);
            else if (key == "snapshot_interval") cfg.refine.snapshot_interval = std::stoi(value);
            else if (key == "threads") cfg.refine.threads = std::stoi(value);
            else fail("unknown key '" + key + "'");
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            fail("bad value for '" + key + "': " + value);
        }
    }
    return cfg;
}

namespace {

void append_request_log(const std::string& out_dir, const GenerationRequest& req) {
    std::ofstream log(out_dir + "/requests.jsonl", std::ios::app);
    if (!log) throw_data("cannot open request log in " + out_dir);
    log << req.to_json_line() << "\n";
}

[[noreturn]] void stage_fail(int stage, const std::string& name, const std::string& msg) {
    throw_data("stage " + std::to_string(stage) + " (" + name + "): " + msg);
}

std::string call_http_backend(const std::string& url, const GenerationRequest& req,
                              const std::string& control_dir);

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    fs::create_directories(config.out_dir);

    // Stage 1: load, normalize, render controls.
    Mesh input = load_obj(config.mesh_path);
    MeshDiagnostics input_diag = diagnostics(input);
    if (input_diag.nonmanifold_edge_count > 0)
        std::fprintf(stderr,
                     "warning: %s has %d non-manifold edge(s); remeshing will leave them "
                     "untouched\n",
                     config.mesh_path.c_str(), input_diag.nonmanifold_edge_count);
    NormalizeTransform transform;
    Mesh mesh = normalize(input, &transform);
    ViewSet views = canonical_viewset(config.resolution, config.half_extent);

    ControlBundle controls;
    try {
        controls = prepare_controls(mesh, views, config.blur_kernel, config.blur_sigma,
                                    config.out_dir + "/controls");
        GenerationRequest req;
        req.stage = GenerationRequest::Stage::SingleView;
        req.prompt = config.prompt;
        req.guidance = config.guidance;
        req.seed = config.refine.seed;
        req.controls = {{0, controls.manifest.views[0].depth}};
        req.validate(int(views.size()));
        append_request_log(config.out_dir, req);
    } catch (const Error& e) {
        stage_fail(1, "control rendering", e.what());
    }

    // Stage 2: targets from the fixture directory or an out-of-process
    // backend.
    std::string target_dir;
    try {
        GenerationRequest req;
        req.stage = GenerationRequest::Stage::MultiView;
        req.prompt = config.prompt;
        req.guidance = config.guidance;
        req.seed = config.refine.seed;
        for (const ManifestView& mv : controls.manifest.views)
            req.controls.push_back({mv.id, mv.normal});
        req.rgb_reference = "stage1_preview.png";
        req.validate(int(views.size()));
        append_request_log(config.out_dir, req);

        if (!config.fixture_dir.empty())
            target_dir = config.fixture_dir;
        else
            target_dir = call_http_backend(config.backend_url, req, controls.directory);
    } catch (const Error& e) {
        stage_fail(2, "multi-view generation", e.what());
    }

    TargetViews targets;
    try {
        targets = ingest_targets(target_dir, views);
    } catch (const Error& e) {
        stage_fail(2, "target ingestion", e.what());
    }

    // Stage 3: refinement.
    PipelineResult result;
    try {
        RefineConfig rc = config.refine;
        if (rc.snapshot_interval > 0) rc.snapshot_dir = config.out_dir;
        auto [refined, log] = refine(mesh, views, targets, rc);

        // Export in the input's coordinate frame.
        std::vector<Vec3> verts = refined.vertices();
        for (Vec3& v : verts) v = transform.invert(v);
        Mesh denormalized(std::move(verts), refined.faces());

        result.refined_obj = config.out_dir + "/refined.obj";
        atomic_write(result.refined_obj,
                     [&](const std::string& tmp) { save_obj(denormalized, tmp); });
        result.metrics_csv = config.out_dir + "/metrics.csv";
        atomic_write(result.metrics_csv,
                     [&](const std::string& tmp) { log.write_csv(tmp); });
        result.final_diagnostics = log.final_diagnostics;
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Numeric) throw;
        stage_fail(3, "mesh refinement", e.what());
    }
    return result;
}

}  // namespace meshrefine

// httplib pulls in system networking headers; keep it out of the main
// namespace block.
#include <httplib.h>

namespace meshrefine {
namespace {

std::string call_http_backend(const std::string& url, const GenerationRequest& req,
                              const std::string& control_dir) {
    // url: http://host:port ; POST /generate with the request JSON plus the
    // control bundle path; the backend answers {"targets_dir": ...}.
    httplib::Client client(url);
    client.set_connection_timeout(5, 0);
    ordered_json body = ordered_json::parse(req.to_json_line());
    body["control_dir"] = control_dir;
    auto res = client.Post("/generate", body.dump(), "application/json");
    if (!res) throw_data("cannot reach backend at " + url);
    if (res->status != 200)
        throw_data("backend at " + url + " returned status " + std::to_string(res->status));
    try {
        ordered_json j = ordered_json::parse(res->body);
        return j.at("targets_dir").get<std::string>();
    } catch (const std::exception& e) {
        throw_data(std::string("backend response parse error: ") + e.what());
    }
}

}  // namespace
}  // namespace meshrefine

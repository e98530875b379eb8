#include "meshrefine/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "meshrefine/error.hpp"
#include "meshrefine/rng.hpp"

namespace meshrefine {

void RefineConfig::validate() const {
    if (iterations < 1) throw_usage("iterations must be >= 1");
    if (!(learning_rate > 0)) throw_usage("learning rate must be > 0");
    if (!(learning_rate_end > 0) || learning_rate_end > learning_rate)
        throw_usage("final learning rate must be in (0, learning_rate]");
    if (resolution < 16) throw_usage("resolution must be at least 16");
    if (remesh_interval < 0) throw_usage("remesh interval must be >= 0");
    if (!(remesh_start_length > 0) || !(remesh_end_length > 0) ||
        remesh_end_length > remesh_start_length)
        throw_usage("remesh schedule needs 0 < end length <= start length");
    if (snapshot_interval < 0) throw_usage("snapshot interval must be >= 0");
}

void RunLog::write_csv(const std::string& path) const {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw_data("cannot open for writing: " + path);
    std::fprintf(f, "iteration,total,normal,normal_gradient,silhouette,vertices\n");
    for (const Row& r : rows)
        std::fprintf(f, "%d,%.10g,%.10g,%.10g,%.10g,%d\n", r.iteration, r.total, r.normal,
                     r.normal_gradient, r.silhouette, r.vertex_count);
    if (std::fclose(f) != 0) throw_data("write failed: " + path);
}

namespace {

class Adam {
public:
    Adam(double beta1, double beta2, double epsilon)
        : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

    void step(std::vector<Vec3>& params, const std::vector<Vec3>& grads, OptimState& state,
              double lr) {
        state.step++;
        double bc1 = 1.0 - std::pow(beta1_, double(state.step));
        double bc2 = 1.0 - std::pow(beta2_, double(state.step));
        for (size_t i = 0; i < params.size(); ++i) {
            for (int k = 0; k < 3; ++k) {
                double g = grads[i][k];
                state.m[i][k] = beta1_ * state.m[i][k] + (1.0 - beta1_) * g;
                state.v[i][k] = beta2_ * state.v[i][k] + (1.0 - beta2_) * g * g;
                double mhat = state.m[i][k] / bc1;
                double vhat = state.v[i][k] / bc2;
                params[i][k] -= lr * mhat / (std::sqrt(vhat) + epsilon_);
            }
        }
    }

private:
    double beta1_, beta2_, epsilon_;
};

double cosine_lr(const RefineConfig& cfg, int iteration) {
    double t = cfg.iterations > 1 ? double(iteration) / double(cfg.iterations - 1) : 0.0;
    return cfg.learning_rate_end +
           0.5 * (cfg.learning_rate - cfg.learning_rate_end) * (1.0 + std::cos(M_PI * t));
}

std::string snapshot_path(const std::string& dir, int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%06d.obj", iteration);
    return dir + "/" + buf;
}

}  // namespace

std::pair<Mesh, RunLog> refine(const Mesh& mesh, const ViewSet& views, const TargetViews& targets,
                               const RefineConfig& config) {
    config.validate();
    if (views.resolution != config.resolution)
        throw_data("refine: view resolution does not match config");
    if (targets.size() != views.size()) throw_data("refine: target count does not match views");

    using clock = std::chrono::steady_clock;
    RunLog log;
    Mesh current = mesh;
    OptimState state(mesh.vertex_count());
    Adam adam(config.beta1, config.beta2, config.epsilon);

    TargetViews weighted = targets;
    weighted.weights = config.loss_weights;
    weighted.foreground_only = config.foreground_only;

    for (int it = 0; it < config.iterations; ++it) {
        auto t0 = clock::now();
        auto [report, grads] = total_loss(current, views, weighted, config.threads);
        if (!report.finite()) {
            const char* term = !std::isfinite(report.normal)            ? "normal"
                               : !std::isfinite(report.normal_gradient) ? "normal_gradient"
                                                                        : "silhouette";
            throw_numeric("non-finite loss at iteration " + std::to_string(it) + " (term " +
                          term + ")");
        }
        if (!grads.all_finite())
            throw_numeric("non-finite vertex gradient at iteration " + std::to_string(it));

        std::vector<Vec3> verts = current.vertices();
        adam.step(verts, grads.g, state, cosine_lr(config, it));
        Mesh stepped(std::move(verts), current.faces());
        auto t1 = clock::now();
        log.seconds_render_loss += std::chrono::duration<double>(t1 - t0).count();

        if (config.remesh_interval > 0 && (it + 1) % config.remesh_interval == 0) {
            RemeshParams rp;
            double t = config.iterations > 1 ? double(it) / double(config.iterations - 1) : 1.0;
            rp.target_edge_length = config.remesh_start_length +
                                    (config.remesh_end_length - config.remesh_start_length) * t;
            rp.max_ops = config.remesh_max_ops;
            rp.enable_flips = config.remesh_flips;
            double volume_before = enclosed_volume(stepped);
            auto [next, next_state] = remesh_pass(stepped, state, rp);
            double volume_after = enclosed_volume(next);
            double drift = std::abs(volume_after - volume_before) /
                           std::max(std::abs(volume_before), 1e-12);
            log.max_remesh_volume_drift = std::max(log.max_remesh_volume_drift, drift);
            current = std::move(next);
            state = std::move(next_state);
        } else {
            current = std::move(stepped);
        }
        log.seconds_remesh += std::chrono::duration<double>(clock::now() - t1).count();

        log.rows.push_back({it, report.total, report.normal, report.normal_gradient,
                            report.silhouette, current.vertex_count()});
        if (config.snapshot_interval > 0 && (it + 1) % config.snapshot_interval == 0 &&
            !config.snapshot_dir.empty())
            save_obj(current, snapshot_path(config.snapshot_dir, it + 1));
    }
    log.final_diagnostics = diagnostics(current);
    return {std::move(current), std::move(log)};
}

namespace {

struct BvhNode {
    Vec3 lo, hi;
    int left = -1, right = -1;  // children, or leaf range below
    int first = 0, count = 0;
};

class TriangleBvh {
public:
    explicit TriangleBvh(const Mesh& mesh) : mesh_(mesh) {
        order_.resize(mesh.face_count());
        std::iota(order_.begin(), order_.end(), 0);
        centroids_.reserve(mesh.face_count());
        const auto& V = mesh.vertices();
        for (const Face& f : mesh.faces())
            centroids_.push_back((V[f[0]] + V[f[1]] + V[f[2]]) / 3.0);
        nodes_.reserve(2 * mesh.face_count());
        build(0, mesh.face_count());
    }

    double distance2(const Vec3& p) const {
        double best = std::numeric_limits<double>::infinity();
        query(0, p, best);
        return best;
    }

private:
    int build(int first, int count) {
        int node_idx = int(nodes_.size());
        nodes_.push_back({});
        BvhNode node;
        node.first = first;
        node.count = count;
        node.lo = {1e300, 1e300, 1e300};
        node.hi = {-1e300, -1e300, -1e300};
        const auto& V = mesh_.vertices();
        for (int i = first; i < first + count; ++i) {
            const Face& f = mesh_.faces()[order_[i]];
            for (int k = 0; k < 3; ++k)
                for (int c = 0; c < 3; ++c) {
                    node.lo[c] = std::min(node.lo[c], V[f[k]][c]);
                    node.hi[c] = std::max(node.hi[c], V[f[k]][c]);
                }
        }
        if (count > 8) {
            Vec3 ext = node.hi - node.lo;
            int axis = ext.x > ext.y ? (ext.x > ext.z ? 0 : 2) : (ext.y > ext.z ? 1 : 2);
            int mid = first + count / 2;
            std::nth_element(order_.begin() + first, order_.begin() + mid,
                             order_.begin() + first + count, [&](int x, int y) {
                                 if (centroids_[x][axis] != centroids_[y][axis])
                                     return centroids_[x][axis] < centroids_[y][axis];
                                 return x < y;
                             });
            node.left = build(first, mid - first);
            node.right = build(mid, first + count - mid);
            node.count = 0;
        }
        nodes_[node_idx] = node;
        return node_idx;
    }

    static double box_dist2(const BvhNode& n, const Vec3& p) {
        double d2 = 0;
        for (int c = 0; c < 3; ++c) {
            double d = std::max({n.lo[c] - p[c], 0.0, p[c] - n.hi[c]});
            d2 += d * d;
        }
        return d2;
    }

    void query(int idx, const Vec3& p, double& best) const {
        const BvhNode& n = nodes_[idx];
        if (box_dist2(n, p) >= best) return;
        if (n.left < 0) {
            const auto& V = mesh_.vertices();
            for (int i = n.first; i < n.first + n.count; ++i) {
                const Face& f = mesh_.faces()[order_[i]];
                best = std::min(best, point_triangle_dist2(p, V[f[0]], V[f[1]], V[f[2]]));
            }
            return;
        }
        double dl = box_dist2(nodes_[n.left], p), dr = box_dist2(nodes_[n.right], p);
        if (dl < dr) {
            query(n.left, p, best);
            query(n.right, p, best);
        } else {
            query(n.right, p, best);
            query(n.left, p, best);
        }
    }

    // Ericson, Real-Time Collision Detection, closest point on triangle.
    static double point_triangle_dist2(const Vec3& p, const Vec3& a, const Vec3& b,
                                       const Vec3& c) {
        Vec3 ab = b - a, ac = c - a, ap = p - a;
        double d1 = dot(ab, ap), d2 = dot(ac, ap);
        if (d1 <= 0 && d2 <= 0) return norm2(p - a);
        Vec3 bp = p - b;
        double d3 = dot(ab, bp), d4 = dot(ac, bp);
        if (d3 >= 0 && d4 <= d3) return norm2(p - b);
        double vc = d1 * d4 - d3 * d2;
        if (vc <= 0 && d1 >= 0 && d3 <= 0) {
            double t = d1 / (d1 - d3);
            return norm2(p - (a + ab * t));
        }
        Vec3 cp = p - c;
        double d5 = dot(ab, cp), d6 = dot(ac, cp);
        if (d6 >= 0 && d5 <= d6) return norm2(p - c);
        double vb = d5 * d2 - d1 * d6;
        if (vb <= 0 && d2 >= 0 && d6 <= 0) {
            double t = d2 / (d2 - d6);
            return norm2(p - (a + ac * t));
        }
        double va = d3 * d6 - d5 * d4;
        if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
            double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return norm2(p - (b + (c - b) * t));
        }
        double denom = 1.0 / (va + vb + vc);
        double v = vb * denom, w = vc * denom;
        return norm2(p - (a + ab * v + ac * w));
    }

    const Mesh& mesh_;
    std::vector<int> order_;
    std::vector<Vec3> centroids_;
    std::vector<BvhNode> nodes_;
};

std::vector<Vec3> sample_surface(const Mesh& mesh, int samples, Rng& rng) {
    const auto& V = mesh.vertices();
    std::vector<double> cumulative;
    cumulative.reserve(mesh.face_count());
    double total = 0;
    for (const Face& f : mesh.faces()) {
        total += 0.5 * norm(cross(V[f[1]] - V[f[0]], V[f[2]] - V[f[0]]));
        cumulative.push_back(total);
    }
    if (!(total > 0)) throw_data("chamfer: mesh has zero surface area");
    std::vector<Vec3> pts;
    pts.reserve(samples);
    for (int i = 0; i < samples; ++i) {
        double r = rng.next_double() * total;
        size_t fi = std::lower_bound(cumulative.begin(), cumulative.end(), r) -
                    cumulative.begin();
        if (fi >= cumulative.size()) fi = cumulative.size() - 1;
        const Face& f = mesh.faces()[fi];
        double u = rng.next_double(), v = rng.next_double();
        double su = std::sqrt(u);
        double b0 = 1.0 - su, b1 = su * (1.0 - v), b2 = su * v;
        pts.push_back(V[f[0]] * b0 + V[f[1]] * b1 + V[f[2]] * b2);
    }
    return pts;
}

}  // namespace

double chamfer_distance(const Mesh& a, const Mesh& b, int samples, uint64_t seed) {
    if (a.empty() || b.empty()) throw_data("chamfer: empty mesh");
    if (samples < 1000) throw_usage("chamfer: need at least 1000 samples");
    Rng rng(seed);
    std::vector<Vec3> pa = sample_surface(a, samples, rng);
    std::vector<Vec3> pb = sample_surface(b, samples, rng);
    TriangleBvh bvh_a(a), bvh_b(b);
    double da = 0, db = 0;
    for (const Vec3& p : pa) da += std::sqrt(bvh_b.distance2(p));
    for (const Vec3& p : pb) db += std::sqrt(bvh_a.distance2(p));
    return 0.5 * (da / samples + db / samples);
}

double normal_consistency(const Mesh& mesh, const TargetViews& targets, const ViewSet& views) {
    if (targets.size() != views.size())
        throw_data("normal_consistency: target count does not match views");
    std::vector<Vec3> nsums = vertex_normal_sums(mesh);
    double sum = 0;
    long count = 0;
    for (size_t i = 0; i < views.size(); ++i) {
        RasterOutput raster = rasterize(mesh, nsums, views[i]);
        const TargetView& tv = targets.views[i];
        for (int y = 0; y < raster.height(); ++y)
            for (int x = 0; x < raster.width(); ++x) {
                if (tv.mask.at(y, x) <= 0.5) continue;
                Vec3 t{tv.normal.at(y, x, 0), tv.normal.at(y, x, 1), tv.normal.at(y, x, 2)};
                double tn = norm(t);
                if (tn < 0.1) continue;
                Vec3 r{raster.normal.at(y, x, 0), raster.normal.at(y, x, 1),
                       raster.normal.at(y, x, 2)};
                double rn = norm(r);
                sum += rn < 1e-9 ? 0.0 : dot(r / rn, t / tn);
                count++;
            }
    }
    if (count == 0) throw_data("normal_consistency: no foreground pixels");
    return sum / double(count);
}

}  // namespace meshrefine

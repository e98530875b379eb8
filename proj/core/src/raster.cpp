#include "meshrefine/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meshrefine/error.hpp"

namespace meshrefine {

namespace {

// Projected triangles with less screen area than this are skipped by the
// z-pass and excluded from interpolation gradients (near-collinear corners
// make the barycentric derivatives blow up).
constexpr double kMinScreenArea = 1e-12;

// Winding accumulation noise floor; interior/exterior cells snap to exact
// integers so saturated coverage carries no spurious gradient.
constexpr double kWindingSnap = 1e-8;

struct Screen {
    double x, y, depth;
};

std::vector<Screen> project_all(const Mesh& mesh, const Viewpoint& vp) {
    std::vector<Screen> s(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        Vec3 p = vp.project(mesh.vertices()[v]);
        s[v] = {p.x, p.y, p.z};
    }
    return s;
}

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

// Top-left fill rule for a positive-area triangle in x-right/y-down screen
// coordinates. e is the directed edge whose edge function vanished.
bool top_left_edge(double ex, double ey) { return (ey == 0.0 && ex > 0.0) || ey < 0.0; }

// Integral over t in [0,1] of clamp(ua + (ub-ua) t, 0, 1).
double clamped_line_integral(double ua, double ub) {
    double lo = std::min(ua, ub), hi = std::max(ua, ub);
    if (hi <= 0.0) return 0.0;
    if (lo >= 1.0) return 1.0;
    if (hi - lo < 1e-300) return std::clamp(lo, 0.0, 1.0);
    double inv = 1.0 / (hi - lo);
    double c0 = std::clamp(-lo * inv, 0.0, 1.0);
    double c1 = std::clamp((1.0 - lo) * inv, 0.0, 1.0);
    double mid_avg = 0.5 * (std::max(lo, 0.0) + std::min(hi, 1.0));
    return (c1 - c0) * mid_avg + (1.0 - c1);
}

double point_segment_dist2(double px, double py, double sx, double sy, double ex, double ey,
                           double* t_out) {
    double dx = ex - sx, dy = ey - sy;
    double q = dx * dx + dy * dy;
    double t = 0.0;
    if (q > 1e-300) t = std::clamp(((px - sx) * dx + (py - sy) * dy) / q, 0.0, 1.0);
    double cx = sx + t * dx - px, cy = sy + t * dy - py;
    if (t_out) *t_out = t;
    return cx * cx + cy * cy;
}

struct EdgeEmission {
    int vi, vj;     // canonical traversal, world vertex ids
    double weight;  // winding weight (1 for boundary, 1/2-paired folds)
    double flip;    // two-sided shading sign of the face that owns the band
};

// Edges whose winding contributions survive cancellation: boundary edges and
// front/back folds. Faces are reoriented to positive screen winding so every
// face contributes +1 over its projected interior; edges shared by two
// consistently wound faces of equal facing cancel and are dropped.
std::vector<EdgeEmission> surviving_edges(const Mesh& mesh, const std::vector<int8_t>& orient) {
    std::vector<EdgeEmission> out;
    for (const Edge& e : mesh.edges()) {
        int net = 0;
        bool has_front = false;
        for (int k = 0; k < e.face_count; ++k) {
            int fi = e.incident(k);
            const Face& f = mesh.faces()[fi];
            int dir = 0;  // +1 if the face traverses a->b
            for (int c = 0; c < 3; ++c) {
                if (f[c] == e.a && f[(c + 1) % 3] == e.b) dir = +1;
                if (f[c] == e.b && f[(c + 1) % 3] == e.a) dir = -1;
            }
            if (orient[fi] < 0) {
                has_front = true;
                dir = -dir;  // reorient front faces to positive screen winding
            }
            net += dir;
        }
        if (net == 0) continue;
        double weight = e.face_count == 1 ? 1.0 : std::min(1.0, std::abs(net) / 2.0);
        EdgeEmission em;
        em.vi = net > 0 ? e.a : e.b;
        em.vj = net > 0 ? e.b : e.a;
        em.weight = weight;
        em.flip = has_front ? 1.0 : -1.0;
        out.push_back(em);
    }
    return out;
}

Vec3 row_vec(const Mat3& m, int r) { return {m.m[r][0], m.m[r][1], m.m[r][2]}; }

}  // namespace

bool VertexGrads::all_finite() const {
    for (const Vec3& v : g)
        for (int k = 0; k < 3; ++k)
            if (!std::isfinite(v[k])) return false;
    return true;
}

RasterOutput rasterize(const Mesh& mesh, const Viewpoint& vp) {
    return rasterize(mesh, vertex_normal_sums(mesh), vp);
}

RasterOutput rasterize(const Mesh& mesh, const std::vector<Vec3>& normal_sums,
                       const Viewpoint& vp) {
    const int W = vp.resolution(), H = vp.resolution();
    const auto& faces = mesh.faces();
    std::vector<Screen> screen = project_all(mesh, vp);

    std::vector<Vec3> nhat(normal_sums.size());
    for (size_t i = 0; i < normal_sums.size(); ++i) nhat[i] = normalized(normal_sums[i]);

    RasterOutput out;
    out.normal = Image(W, H, 3);
    out.depth = Image(W, H, 1);
    out.silhouette = Image(W, H, 1);
    out.triangle_id.assign(size_t(W) * H, -1);
    out.barycentric.assign(size_t(W) * H * 3, 0.0);
    out.face_orient.assign(faces.size(), 0);

    // Z-buffer pass over pixel centers.
    std::vector<double> zbuf(size_t(W) * H, std::numeric_limits<double>::infinity());
    for (size_t fi = 0; fi < faces.size(); ++fi) {
        const Face& f = faces[fi];
        const Screen &s0 = screen[f[0]], &s1 = screen[f[1]], &s2 = screen[f[2]];
        double area = cross2(s1.x - s0.x, s1.y - s0.y, s2.x - s0.x, s2.y - s0.y);
        out.face_orient[fi] = area > 0 ? 1 : (area < 0 ? -1 : 0);
        if (std::abs(area) < kMinScreenArea) continue;

        // Canonical corner order with positive screen winding; remap holds
        // the original corner each canonical slot came from.
        int remap[3] = {0, 1, 2};
        const Screen* p[3] = {&s0, &s1, &s2};
        int pidx[3] = {f[0], f[1], f[2]};
        if (area < 0) {
            std::swap(remap[1], remap[2]);
            std::swap(p[1], p[2]);
            std::swap(pidx[1], pidx[2]);
        }
        double abs_area = std::abs(area);

        double minx = std::min({p[0]->x, p[1]->x, p[2]->x});
        double maxx = std::max({p[0]->x, p[1]->x, p[2]->x});
        double miny = std::min({p[0]->y, p[1]->y, p[2]->y});
        double maxy = std::max({p[0]->y, p[1]->y, p[2]->y});
        int px_lo = std::max(0, int(std::ceil(minx - 0.5)));
        int px_hi = std::min(W - 1, int(std::floor(maxx - 0.5)));
        int py_lo = std::max(0, int(std::ceil(miny - 0.5)));
        int py_hi = std::min(H - 1, int(std::floor(maxy - 0.5)));

        for (int py = py_lo; py <= py_hi; ++py) {
            double cy = py + 0.5;
            for (int px = px_lo; px <= px_hi; ++px) {
                double cx = px + 0.5;
                double w[3];
                bool inside = true;
                for (int k = 0; k < 3 && inside; ++k) {
                    const Screen* a = p[(k + 1) % 3];
                    const Screen* b = p[(k + 2) % 3];
                    // Evaluate the edge function in canonical (sorted index)
                    // direction and negate, so the two triangles sharing the
                    // edge see exactly complementary signs.
                    double wk;
                    if (pidx[(k + 1) % 3] < pidx[(k + 2) % 3])
                        wk = cross2(b->x - a->x, b->y - a->y, cx - a->x, cy - a->y);
                    else
                        wk = -cross2(a->x - b->x, a->y - b->y, cx - b->x, cy - b->y);
                    if (wk < 0 || (wk == 0 && !top_left_edge(b->x - a->x, b->y - a->y)))
                        inside = false;
                    w[k] = wk;
                }
                if (!inside) continue;
                double bcan[3] = {w[0] / abs_area, w[1] / abs_area, w[2] / abs_area};
                double depth = bcan[0] * p[0]->depth + bcan[1] * p[1]->depth +
                               bcan[2] * p[2]->depth;
                size_t pix = size_t(py) * W + px;
                if (depth < zbuf[pix]) {
                    zbuf[pix] = depth;
                    out.triangle_id[pix] = int32_t(fi);
                    double borig[3];
                    for (int k = 0; k < 3; ++k) borig[remap[k]] = bcan[k];
                    for (int k = 0; k < 3; ++k) out.barycentric[3 * pix + k] = borig[k];
                }
            }
        }
    }

    // Exact-area coverage: every surviving edge integrates its clamped
    // half-plane overlap per cell; cells fully left of an edge in a row
    // receive the whole sub-span height through the delta sweep.
    out.silhouette_edges.clear();
    {
        auto emissions = surviving_edges(mesh, out.face_orient);
        out.silhouette_edges.reserve(emissions.size());
        for (const auto& em : emissions)
            out.silhouette_edges.push_back({em.vi, em.vj, em.weight, em.flip});
    }

    std::vector<double> partial(size_t(W) * H, 0.0), delta(size_t(W) * H, 0.0);
    for (const auto& e : out.silhouette_edges) {
        double sx = screen[e.vi].x, sy = screen[e.vi].y;
        double ex = screen[e.vj].x, ey = screen[e.vj].y;
        if (sy == ey) continue;
        double sigma = ey > sy ? 1.0 : -1.0;
        double ylo = std::min(sy, ey), yhi = std::max(sy, ey);
        double slope = (ex - sx) / (ey - sy);
        int j_lo = std::max(0, int(std::floor(ylo)));
        int j_hi = std::min(H - 1, int(std::floor(std::nextafter(yhi, -1.0))));
        for (int j = j_lo; j <= j_hi; ++j) {
            double a = std::max(ylo, double(j));
            double b = std::min(yhi, double(j + 1));
            if (!(b > a)) continue;
            double xa = sx + (a - sy) * slope;
            double xb = sx + (b - sy) * slope;
            double xlo = std::min(xa, xb), xhi = std::max(xa, xb);
            double contrib = sigma * e.weight * (b - a);
            int c_first = int(std::floor(xlo));
            int c_last = int(std::floor(xhi));
            int cL = c_first - 1;  // last cell fully left of the edge
            if (cL >= 0) delta[size_t(j) * W + std::min(cL, W - 1)] += contrib;
            for (int c = std::max(0, c_first); c <= std::min(W - 1, c_last); ++c)
                partial[size_t(j) * W + c] +=
                    contrib * clamped_line_integral(xa - c, xb - c);
        }
    }
    for (int j = 0; j < H; ++j) {
        double running = 0.0;
        for (int c = W - 1; c >= 0; --c) {
            running += delta[size_t(j) * W + c];
            double acc = running + partial[size_t(j) * W + c];
            double nearest = std::round(acc);
            if (std::abs(acc - nearest) < kWindingSnap) acc = nearest;
            out.silhouette.at(j, c) = std::clamp(acc, 0.0, 1.0);
        }
    }

    // Shade covered pixels; find the depth range on the way.
    const Mat3& R = vp.rotation();
    double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
    for (int py = 0; py < H; ++py) {
        for (int px = 0; px < W; ++px) {
            size_t pix = size_t(py) * W + px;
            int32_t fid = out.triangle_id[pix];
            if (fid < 0) continue;
            const Face& f = faces[fid];
            double b0 = out.barycentric[3 * pix], b1 = out.barycentric[3 * pix + 1],
                   b2 = out.barycentric[3 * pix + 2];
            Vec3 m = nhat[f[0]] * b0 + nhat[f[1]] * b1 + nhat[f[2]] * b2;
            Vec3 mh = normalized(m);
            double flip = out.face_orient[fid] < 0 ? 1.0 : -1.0;
            Vec3 n_cam = (R * mh) * flip;
            double cov = out.silhouette.at(py, px);
            out.normal.at(py, px, 0) = cov * n_cam.x;
            out.normal.at(py, px, 1) = cov * n_cam.y;
            out.normal.at(py, px, 2) = cov * n_cam.z;
            out.depth.at(py, px) = zbuf[pix];
            dmin = std::min(dmin, zbuf[pix]);
            dmax = std::max(dmax, zbuf[pix]);
        }
    }
    if (dmax < dmin) {  // nothing covered
        dmin = 0.0;
        dmax = 2.0 * vp.half_extent();
    }
    out.depth_sentinel = dmax + std::max(0.05 * (dmax - dmin), 1e-3);
    for (size_t pix = 0; pix < zbuf.size(); ++pix)
        if (out.triangle_id[pix] < 0) out.depth.data[pix] = out.depth_sentinel;

    // Boundary band: fractional coverage over an uncovered center is shaded
    // from the nearest surviving edge so the normal image stays continuous
    // while the silhouette sweeps across pixel centers.
    std::vector<std::vector<int>> row_buckets(H);
    for (size_t ei = 0; ei < out.silhouette_edges.size(); ++ei) {
        const auto& e = out.silhouette_edges[ei];
        double y0 = std::min(screen[e.vi].y, screen[e.vj].y);
        double y1 = std::max(screen[e.vi].y, screen[e.vj].y);
        int r0 = std::max(0, int(std::floor(y0)) - 1);
        int r1 = std::min(H - 1, int(std::floor(y1)) + 1);
        for (int r = r0; r <= r1; ++r) row_buckets[r].push_back(int(ei));
    }
    for (int py = 0; py < H; ++py) {
        for (int px = 0; px < W; ++px) {
            size_t pix = size_t(py) * W + px;
            double cov = out.silhouette.at(py, px);
            if (out.triangle_id[pix] >= 0 || cov <= 0.0 || cov >= 1.0) continue;
            double cx = px + 0.5, cy = py + 0.5;
            int best = -1;
            double best_d = std::numeric_limits<double>::infinity(), best_t = 0.0;
            auto consider = [&](int ei) {
                const auto& e = out.silhouette_edges[ei];
                double t;
                double d = point_segment_dist2(cx, cy, screen[e.vi].x, screen[e.vi].y,
                                               screen[e.vj].x, screen[e.vj].y, &t);
                if (d < best_d) {
                    best_d = d;
                    best = ei;
                    best_t = t;
                }
            };
            for (int ei : row_buckets[py]) consider(ei);
            if (best < 0)
                for (size_t ei = 0; ei < out.silhouette_edges.size(); ++ei) consider(int(ei));
            if (best < 0) continue;
            const auto& e = out.silhouette_edges[best];
            Vec3 m = nhat[e.vi] * (1.0 - best_t) + nhat[e.vj] * best_t;
            Vec3 n_cam = (R * normalized(m)) * e.flip;
            out.normal.at(py, px, 0) = cov * n_cam.x;
            out.normal.at(py, px, 1) = cov * n_cam.y;
            out.normal.at(py, px, 2) = cov * n_cam.z;
            out.band_pixels.push_back({int(pix), best, best_t});
        }
    }
    return out;
}

VertexGrads backward(const RasterOutput& raster, const Mesh& mesh, const Viewpoint& vp,
                     const Image& dL_dnormal, const Image& dL_dsilhouette) {
    return backward(raster, mesh, vertex_normal_sums(mesh), vp, dL_dnormal, dL_dsilhouette);
}

VertexGrads backward(const RasterOutput& raster, const Mesh& mesh,
                     const std::vector<Vec3>& normal_sums, const Viewpoint& vp,
                     const Image& dL_dnormal, const Image& dL_dsilhouette) {
    const int W = raster.width(), H = raster.height();
    if (dL_dnormal.width != W || dL_dnormal.height != H || dL_dnormal.channels != 3)
        throw_data("backward: dL/dnormal shape mismatch");
    if (dL_dsilhouette.width != W || dL_dsilhouette.height != H || dL_dsilhouette.channels != 1)
        throw_data("backward: dL/dsilhouette shape mismatch");

    const auto& faces = mesh.faces();
    std::vector<Screen> screen = project_all(mesh, vp);
    std::vector<Vec3> nhat(normal_sums.size());
    for (size_t i = 0; i < normal_sums.size(); ++i) nhat[i] = normalized(normal_sums[i]);

    const Mat3& R = vp.rotation();
    const double ppu = vp.pixels_per_unit();
    const Vec3 r0 = row_vec(R, 0), r1 = row_vec(R, 1);

    VertexGrads grads(mesh.vertex_count());
    std::vector<Vec3> g_nhat(mesh.vertex_count());
    // dL/dcoverage, combining the silhouette loss and the fade factor the
    // normal image carries.
    std::vector<double> dcov(size_t(W) * H, 0.0);

    auto add_screen_grad = [&](int v, double gx, double gy) {
        grads.g[v] += r0 * (ppu * gx) - r1 * (ppu * gy);
    };

    // Unit-normalization backward: y = m/|m|.
    auto through_unit = [](const Vec3& m, const Vec3& gy) -> Vec3 {
        double n = norm(m);
        if (n < 1e-12) return {0, 0, 0};
        Vec3 mh = m / n;
        return (gy - mh * dot(mh, gy)) / n;
    };

    // Covered pixels: interpolation + vertex-normal attribute paths.
    for (int py = 0; py < H; ++py) {
        for (int px = 0; px < W; ++px) {
            size_t pix = size_t(py) * W + px;
            double gs = dL_dsilhouette.at(py, px);
            if (gs != 0.0) dcov[pix] += gs;
            int32_t fid = raster.triangle_id[pix];
            if (fid < 0) continue;
            Vec3 gN{dL_dnormal.at(py, px, 0), dL_dnormal.at(py, px, 1),
                    dL_dnormal.at(py, px, 2)};
            const Face& f = faces[fid];
            double b[3] = {raster.barycentric[3 * pix], raster.barycentric[3 * pix + 1],
                           raster.barycentric[3 * pix + 2]};
            Vec3 m = nhat[f[0]] * b[0] + nhat[f[1]] * b[1] + nhat[f[2]] * b[2];
            double flip = raster.face_orient[fid] < 0 ? 1.0 : -1.0;
            Vec3 n_cam = (R * normalized(m)) * flip;
            double cov = raster.silhouette.at(py, px);

            if (gN.x != 0 || gN.y != 0 || gN.z != 0) {
                dcov[pix] += dot(gN, n_cam);
                // N = cov * flip * R * unit(m)
                Vec3 g_mh = R.transposed_mul(gN * (cov * flip));
                Vec3 g_m = through_unit(m, g_mh);
                for (int k = 0; k < 3; ++k) g_nhat[f[k]] += g_m * b[k];

                // Interpolation-weight path: b = w / (w0+w1+w2).
                const Screen &s0 = screen[f[0]], &s1 = screen[f[1]], &s2 = screen[f[2]];
                double area =
                    cross2(s1.x - s0.x, s1.y - s0.y, s2.x - s0.x, s2.y - s0.y);
                if (std::abs(area) >= kMinScreenArea) {
                    double gb[3] = {dot(nhat[f[0]], g_m), dot(nhat[f[1]], g_m),
                                    dot(nhat[f[2]], g_m)};
                    double gdotb = gb[0] * b[0] + gb[1] * b[1] + gb[2] * b[2];
                    double gw[3];
                    for (int k = 0; k < 3; ++k) gw[k] = (gb[k] - gdotb) / area;
                    double cx = px + 0.5, cy = py + 0.5;
                    // w_k = cross(q - p, c - p) with (p,q) opposite corner k.
                    const Screen* P[3] = {&s1, &s2, &s0};
                    const Screen* Q[3] = {&s2, &s0, &s1};
                    int PI[3] = {f[1], f[2], f[0]}, QI[3] = {f[2], f[0], f[1]};
                    for (int k = 0; k < 3; ++k) {
                        if (gw[k] == 0.0) continue;
                        add_screen_grad(PI[k], gw[k] * (Q[k]->y - cy), gw[k] * (cx - Q[k]->x));
                        add_screen_grad(QI[k], gw[k] * (cy - P[k]->y), gw[k] * (P[k]->x - cx));
                    }
                }
            }
        }
    }

    // Band pixels: edge-interpolated normal and nearest-point parameter.
    for (const auto& rec : raster.band_pixels) {
        int py = rec.pixel / W, px = rec.pixel % W;
        Vec3 gN{dL_dnormal.at(py, px, 0), dL_dnormal.at(py, px, 1), dL_dnormal.at(py, px, 2)};
        if (gN.x == 0 && gN.y == 0 && gN.z == 0) continue;
        const auto& e = raster.silhouette_edges[rec.edge];
        double t = rec.t;
        Vec3 m = nhat[e.vi] * (1.0 - t) + nhat[e.vj] * t;
        Vec3 n_cam = (R * normalized(m)) * e.flip;
        double cov = raster.silhouette.data[rec.pixel];
        dcov[rec.pixel] += dot(gN, n_cam);

        Vec3 g_mh = R.transposed_mul(gN * (cov * e.flip));
        Vec3 g_m = through_unit(m, g_mh);
        g_nhat[e.vi] += g_m * (1.0 - t);
        g_nhat[e.vj] += g_m * t;

        if (t > 0.0 && t < 1.0) {
            double g_t = dot(nhat[e.vj] - nhat[e.vi], g_m);
            double sx = screen[e.vi].x, sy = screen[e.vi].y;
            double ex = screen[e.vj].x, ey = screen[e.vj].y;
            double cx = px + 0.5, cy = py + 0.5;
            double dx = ex - sx, dy = ey - sy;
            double Qd = dx * dx + dy * dy;
            if (Qd > 1e-300) {
                double Nd = (cx - sx) * dx + (cy - sy) * dy;
                double inv_q2 = 1.0 / (Qd * Qd);
                double dt_dsx = ((-dx - (cx - sx)) * Qd - Nd * (-2.0 * dx)) * inv_q2;
                double dt_dsy = ((-dy - (cy - sy)) * Qd - Nd * (-2.0 * dy)) * inv_q2;
                double dt_dex = ((cx - sx) * Qd - Nd * (2.0 * dx)) * inv_q2;
                double dt_dey = ((cy - sy) * Qd - Nd * (2.0 * dy)) * inv_q2;
                add_screen_grad(e.vi, g_t * dt_dsx, g_t * dt_dsy);
                add_screen_grad(e.vj, g_t * dt_dex, g_t * dt_dey);
            }
        }
    }

    // Coverage path. Fractional cells per row, with their dL/dcov weights.
    std::vector<std::vector<std::pair<int, double>>> frac_rows(H);
    for (int py = 0; py < H; ++py)
        for (int px = 0; px < W; ++px) {
            size_t pix = size_t(py) * W + px;
            double cov = raster.silhouette.data[pix];
            if (cov > 0.0 && cov < 1.0 && dcov[pix] != 0.0)
                frac_rows[py].push_back({px, dcov[pix]});
        }

    for (const auto& e : raster.silhouette_edges) {
        double sx = screen[e.vi].x, sy = screen[e.vi].y;
        double ex = screen[e.vj].x, ey = screen[e.vj].y;
        if (sy == ey) continue;
        double mden = ey - sy;
        double sigma = mden > 0 ? 1.0 : -1.0;
        double ylo = std::min(sy, ey), yhi = std::max(sy, ey);
        double slope = (ex - sx) / mden;
        int j_lo = std::max(0, int(std::floor(ylo)));
        int j_hi = std::min(H - 1, int(std::floor(std::nextafter(yhi, -1.0))));
        for (int j = j_lo; j <= j_hi; ++j) {
            if (frac_rows[j].empty()) continue;
            double a = std::max(ylo, double(j));
            double b = std::min(yhi, double(j + 1));
            if (!(b > a)) continue;
            double xa = sx + (a - sy) * slope;
            double xb = sx + (b - sy) * slope;
            double xlo = std::min(xa, xb), xhi = std::max(xa, xb);
            bool endpoint_row = a > double(j) || b < double(j + 1);
            int c_min = endpoint_row ? 0 : std::max(0, int(std::floor(xlo)) - 1);
            int c_max = std::min(W - 1, int(std::floor(xhi)) + 1);
            // da/dq, db/dq: nonzero only where the sub-span is cut by an
            // edge endpoint rather than the row border.
            double da_dsy = (sy < ey && a == ylo && ylo > double(j)) ? 1.0 : 0.0;
            double da_dey = (ey < sy && a == ylo && ylo > double(j)) ? 1.0 : 0.0;
            double db_dsy = (sy > ey && b == yhi && yhi < double(j + 1)) ? 1.0 : 0.0;
            double db_dey = (ey > sy && b == yhi && yhi < double(j + 1)) ? 1.0 : 0.0;

            for (const auto& [c, wcell] : frac_rows[j]) {
                if (c < c_min || c > c_max) continue;
                double ua = xa - c, ub = xb - c;
                // Interior stretch where 0 < u < 1.
                double iv_lo = a, iv_hi = b;
                if (std::abs(slope) > 1e-300) {
                    // y where x* crosses the cell walls
                    double y_at0 = sy + (double(c) - sx) / slope;
                    double y_at1 = sy + (double(c) + 1.0 - sx) / slope;
                    iv_lo = std::max(a, std::min(y_at0, y_at1));
                    iv_hi = std::min(b, std::max(y_at0, y_at1));
                } else if (!(ua > 0.0 && ua < 1.0)) {
                    iv_hi = iv_lo - 1.0;
                }
                double L = std::max(0.0, iv_hi - iv_lo);
                double ym = 0.5 * (iv_lo + iv_hi);

                double cu_a = std::clamp(ua, 0.0, 1.0);
                double cu_b = std::clamp(ub, 0.0, 1.0);
                double dF_dsx = L * (ey - ym) / mden;
                double dF_dex = L * (ym - sy) / mden;
                double dF_dsy = cu_b * db_dsy - cu_a * da_dsy +
                                (ex - sx) * L * (ym - ey) / (mden * mden);
                double dF_dey = cu_b * db_dey - cu_a * da_dey -
                                (ex - sx) * L * (ym - sy) / (mden * mden);
                double scale = wcell * e.weight * sigma;
                add_screen_grad(e.vi, scale * dF_dsx, scale * dF_dsy);
                add_screen_grad(e.vj, scale * dF_dex, scale * dF_dey);
            }
        }
    }

    // Vertex-normal chain: nhat = unit(sum of incident edge cross products).
    std::vector<Vec3> g_sum(mesh.vertex_count());
    bool any = false;
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const Vec3& gnh = g_nhat[v];
        if (gnh.x == 0 && gnh.y == 0 && gnh.z == 0) continue;
        g_sum[v] = through_unit(normal_sums[v], gnh);
        any = true;
    }
    if (any) {
        const auto& V = mesh.vertices();
        for (const Face& f : faces) {
            Vec3 gc = g_sum[f[0]] + g_sum[f[1]] + g_sum[f[2]];
            if (gc.x == 0 && gc.y == 0 && gc.z == 0) continue;
            Vec3 u = V[f[1]] - V[f[0]], w = V[f[2]] - V[f[0]];
            Vec3 gu = cross(w, gc);
            Vec3 gw = cross(gc, u);
            grads.g[f[1]] += gu;
            grads.g[f[2]] += gw;
            grads.g[f[0]] -= gu + gw;
        }
    }
    return grads;
}

}  // namespace meshrefine

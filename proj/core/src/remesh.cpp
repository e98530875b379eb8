#include "meshrefine/remesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "meshrefine/error.hpp"

namespace meshrefine {

void state_after_split(OptimState& state, int a, int b) {
    state.m.push_back((state.m[a] + state.m[b]) * 0.5);
    state.v.push_back((state.v[a] + state.v[b]) * 0.5);
}

void state_merge_rows(OptimState& state, int kept, int gone) {
    state.m[kept] = (state.m[kept] + state.m[gone]) * 0.5;
    state.v[kept] = (state.v[kept] + state.v[gone]) * 0.5;
}

namespace {

struct WorkEdge {
    int a, b;            // a < b
    int faces[2];        // incident alive faces (-1 when absent)
    int face_count = 0;  // total incidences, may exceed 2
};

struct Workspace {
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    std::vector<char> face_alive;
    OptimState state;
};

// Edge list over alive faces, sorted by (a, b).
std::vector<WorkEdge> build_edges(const Workspace& ws) {
    std::map<std::pair<int, int>, WorkEdge> edges;
    for (size_t fi = 0; fi < ws.faces.size(); ++fi) {
        if (!ws.face_alive[fi]) continue;
        const Face& f = ws.faces[fi];
        for (int k = 0; k < 3; ++k) {
            int a = f[k], b = f[(k + 1) % 3];
            if (a > b) std::swap(a, b);
            WorkEdge& e = edges[{a, b}];
            e.a = a;
            e.b = b;
            if (e.face_count < 2) e.faces[e.face_count] = int(fi);
            e.face_count++;
        }
    }
    std::vector<WorkEdge> out;
    out.reserve(edges.size());
    for (auto& [k, e] : edges) {
        if (e.face_count < 2) e.faces[1] = -1;
        if (e.face_count < 1) e.faces[0] = -1;
        out.push_back(e);
    }
    return out;
}

Vec3 face_normal_raw(const Workspace& ws, const Face& f) {
    return cross(ws.verts[f[1]] - ws.verts[f[0]], ws.verts[f[2]] - ws.verts[f[0]]);
}

// Area-weighted vertex normals over alive faces.
std::vector<Vec3> work_vertex_normals(const Workspace& ws) {
    std::vector<Vec3> sums(ws.verts.size());
    for (size_t fi = 0; fi < ws.faces.size(); ++fi) {
        if (!ws.face_alive[fi]) continue;
        Vec3 c = face_normal_raw(ws, ws.faces[fi]);
        for (int k = 0; k < 3; ++k) sums[ws.faces[fi][k]] += c;
    }
    for (Vec3& s : sums) s = normalized(s);
    return sums;
}

// Midpoint of (a, b) lifted along the average normal to cancel the chord
// sag of a locally spherical surface; zero on flat regions.
Vec3 lifted_midpoint(const Workspace& ws, const std::vector<Vec3>& normals, int a, int b) {
    Vec3 mid = (ws.verts[a] + ws.verts[b]) * 0.5;
    double sag = 0.25 * (dot(normals[a], ws.verts[a] - mid) +
                         dot(normals[b], ws.verts[b] - mid));
    return mid + normalized(normals[a] + normals[b], Vec3{0, 0, 0}) * sag;
}

int split_pass(Workspace& ws, double threshold, int max_ops) {
    auto edges = build_edges(ws);
    std::vector<Vec3> normals = work_vertex_normals(ws);
    struct Cand {
        double len;
        int idx;
    };
    std::vector<Cand> cands;
    for (size_t i = 0; i < edges.size(); ++i) {
        double len = norm(ws.verts[edges[i].b] - ws.verts[edges[i].a]);
        if (len > threshold) cands.push_back({len, int(i)});
    }
    std::sort(cands.begin(), cands.end(), [&](const Cand& x, const Cand& y) {
        if (x.len != y.len) return x.len > y.len;
        return std::make_pair(edges[x.idx].a, edges[x.idx].b) <
               std::make_pair(edges[y.idx].a, edges[y.idx].b);
    });

    std::vector<char> face_touched(ws.faces.size(), 0);
    int ops = 0;
    for (const Cand& c : cands) {
        if (ops >= max_ops) break;
        const WorkEdge& e = edges[c.idx];
        bool stale = false;
        for (int k = 0; k < 2; ++k) {
            int fi = e.faces[k];
            if (fi < 0) continue;
            if (!ws.face_alive[fi] || face_touched[fi]) stale = true;
        }
        if (stale || e.face_count > 2) continue;

        int w = int(ws.verts.size());
        ws.verts.push_back(lifted_midpoint(ws, normals, e.a, e.b));
        state_after_split(ws.state, e.a, e.b);

        for (int k = 0; k < 2; ++k) {
            int fi = e.faces[k];
            if (fi < 0) continue;
            const Face f = ws.faces[fi];
            ws.face_alive[fi] = 0;
            // Keep winding: the face traverses the edge as x -> y.
            int x = -1, y = -1, other = -1;
            for (int c3 = 0; c3 < 3; ++c3) {
                int p = f[c3], q = f[(c3 + 1) % 3];
                if ((p == e.a && q == e.b) || (p == e.b && q == e.a)) {
                    x = p;
                    y = q;
                    other = f[(c3 + 2) % 3];
                }
            }
            ws.faces.push_back({{x, w, other}});
            ws.face_alive.push_back(1);
            face_touched.push_back(1);
            ws.faces.push_back({{w, y, other}});
            ws.face_alive.push_back(1);
            face_touched.push_back(1);
        }
        ops++;
    }
    return ops;
}

int collapse_pass(Workspace& ws, double threshold, int max_ops) {
    auto edges = build_edges(ws);
    std::vector<Vec3> normals = work_vertex_normals(ws);

    const int nv = int(ws.verts.size());
    // Vertex rings and incident faces from alive faces.
    std::vector<std::vector<int>> ring(nv), vfaces(nv);
    for (size_t fi = 0; fi < ws.faces.size(); ++fi) {
        if (!ws.face_alive[fi]) continue;
        const Face& f = ws.faces[fi];
        for (int k = 0; k < 3; ++k) vfaces[f[k]].push_back(int(fi));
    }
    std::vector<char> locked(nv, 0);  // boundary / non-manifold vertices
    for (const WorkEdge& e : edges) {
        ring[e.a].push_back(e.b);
        ring[e.b].push_back(e.a);
        if (e.face_count != 2) {
            locked[e.a] = 1;
            locked[e.b] = 1;
        }
    }
    for (int v = 0; v < nv; ++v) std::sort(ring[v].begin(), ring[v].end());

    struct Cand {
        double len;
        int idx;
    };
    std::vector<Cand> cands;
    for (size_t i = 0; i < edges.size(); ++i) {
        double len = norm(ws.verts[edges[i].b] - ws.verts[edges[i].a]);
        if (len < threshold) cands.push_back({len, int(i)});
    }
    std::sort(cands.begin(), cands.end(), [&](const Cand& x, const Cand& y) {
        if (x.len != y.len) return x.len < y.len;
        return std::make_pair(edges[x.idx].a, edges[x.idx].b) <
               std::make_pair(edges[y.idx].a, edges[y.idx].b);
    });

    std::vector<char> dirty(nv, 0);
    int ops = 0;
    for (const Cand& c : cands) {
        if (ops >= max_ops) break;
        const WorkEdge& e = edges[c.idx];
        int a = e.a, b = e.b;
        if (e.face_count != 2 || locked[a] || locked[b]) continue;
        if (dirty[a] || dirty[b]) continue;
        bool ring_dirty = false;
        for (int r : ring[a])
            if (dirty[r]) ring_dirty = true;
        for (int r : ring[b])
            if (dirty[r]) ring_dirty = true;
        if (ring_dirty) continue;

        // Link condition: the rings may share exactly the two opposite
        // vertices of the faces being removed.
        std::vector<int> common;
        std::set_intersection(ring[a].begin(), ring[a].end(), ring[b].begin(), ring[b].end(),
                              std::back_inserter(common));
        if (common.size() != 2) continue;

        Vec3 mid = lifted_midpoint(ws, normals, a, b);
        // No incident face may flip or degenerate.
        bool ok = true;
        for (int who : {a, b}) {
            for (int fi : vfaces[who]) {
                if (!ws.face_alive[fi]) continue;
                const Face& f = ws.faces[fi];
                bool shared = false;
                for (int k = 0; k < 3; ++k)
                    if (f[k] == (who == a ? b : a)) shared = true;
                if (shared) continue;  // removed by the collapse
                Vec3 before = face_normal_raw(ws, f);
                Vec3 p[3];
                for (int k = 0; k < 3; ++k)
                    p[k] = f[k] == who ? mid : ws.verts[f[k]];
                Vec3 after = cross(p[1] - p[0], p[2] - p[0]);
                if (norm(after) < 1e-18 || dot(before, after) <= 0.0) {
                    ok = false;
                    break;
                }
            }
            if (!ok) break;
        }
        if (!ok) continue;

        // Apply: a absorbs b at the midpoint.
        ws.verts[a] = mid;
        state_merge_rows(ws.state, a, b);
        for (int fi : vfaces[b]) {
            if (!ws.face_alive[fi]) continue;
            Face& f = ws.faces[fi];
            bool has_a = f[0] == a || f[1] == a || f[2] == a;
            if (has_a) {
                ws.face_alive[fi] = 0;
            } else {
                for (int k = 0; k < 3; ++k)
                    if (f[k] == b) f[k] = a;
                vfaces[a].push_back(fi);
            }
        }
        dirty[a] = 1;
        dirty[b] = 1;
        for (int r : ring[a]) dirty[r] = 1;
        for (int r : ring[b]) dirty[r] = 1;
        ops++;
    }
    return ops;
}

int flip_pass(Workspace& ws, int max_ops) {
    auto edges = build_edges(ws);
    const int nv = int(ws.verts.size());
    std::vector<int> valence(nv, 0);
    std::vector<char> boundary(nv, 0);
    for (const WorkEdge& e : edges) {
        valence[e.a]++;
        valence[e.b]++;
        if (e.face_count != 2) {
            boundary[e.a] = 1;
            boundary[e.b] = 1;
        }
    }
    // Existing-edge lookup for the "would create duplicate edge" guard.
    std::vector<std::vector<int>> ring(nv);
    for (const WorkEdge& e : edges) {
        ring[e.a].push_back(e.b);
        ring[e.b].push_back(e.a);
    }
    auto connected = [&](int x, int y) {
        for (int r : ring[x])
            if (r == y) return true;
        return false;
    };
    auto dev2 = [&](int v, int val) {
        int target = boundary[v] ? 4 : 6;
        double d = val - target;
        return d * d;
    };

    std::vector<char> dirty(nv, 0);
    int ops = 0;
    for (const WorkEdge& e : edges) {
        if (ops >= max_ops) break;
        if (e.face_count != 2) continue;
        int f1 = e.faces[0], f2 = e.faces[1];
        if (!ws.face_alive[f1] || !ws.face_alive[f2]) continue;
        int a = e.a, b = e.b;
        // Opposite vertices.
        auto opposite = [&](int fi) {
            const Face& f = ws.faces[fi];
            for (int k = 0; k < 3; ++k)
                if (f[k] != a && f[k] != b) return f[k];
            return -1;
        };
        int c = opposite(f1), d = opposite(f2);
        if (c < 0 || d < 0 || c == d) continue;
        if (dirty[a] || dirty[b] || dirty[c] || dirty[d]) continue;
        if (connected(c, d)) continue;

        double before = dev2(a, valence[a]) + dev2(b, valence[b]) + dev2(c, valence[c]) +
                        dev2(d, valence[d]);
        double after = dev2(a, valence[a] - 1) + dev2(b, valence[b] - 1) +
                       dev2(c, valence[c] + 1) + dev2(d, valence[d] + 1);
        if (!(after < before)) continue;

        // Orient the quad: f1 must traverse a->b; swap so it does.
        const Face& F1 = ws.faces[f1];
        bool f1_ab = false;
        for (int k = 0; k < 3; ++k)
            if (F1[k] == a && F1[(k + 1) % 3] == b) f1_ab = true;
        if (!f1_ab) std::swap(f1, f2);
        // Re-read opposites against the swapped faces.
        c = opposite(f1);
        d = opposite(f2);
        if (c < 0 || d < 0) continue;

        Vec3 n_old = face_normal_raw(ws, ws.faces[f1]) + face_normal_raw(ws, ws.faces[f2]);
        Face na{{a, d, c}}, nb{{d, b, c}};
        Vec3 n1 = cross(ws.verts[na[1]] - ws.verts[na[0]], ws.verts[na[2]] - ws.verts[na[0]]);
        Vec3 n2 = cross(ws.verts[nb[1]] - ws.verts[nb[0]], ws.verts[nb[2]] - ws.verts[nb[0]]);
        if (norm(n1) < 1e-18 || norm(n2) < 1e-18) continue;
        if (dot(n1, n_old) <= 0.0 || dot(n2, n_old) <= 0.0) continue;

        ws.faces[f1] = na;
        ws.faces[f2] = nb;
        valence[a]--;
        valence[b]--;
        valence[c]++;
        valence[d]++;
        dirty[a] = dirty[b] = dirty[c] = dirty[d] = 1;
        ops++;
    }
    return ops;
}

void relax_pass(Workspace& ws, double weight) {
    if (weight <= 0.0) return;
    auto edges = build_edges(ws);
    const int nv = int(ws.verts.size());
    std::vector<char> locked(nv, 1);  // lock everything not referenced
    for (size_t fi = 0; fi < ws.faces.size(); ++fi) {
        if (!ws.face_alive[fi]) continue;
        for (int k = 0; k < 3; ++k) locked[ws.faces[fi][k]] = 0;
    }
    for (const WorkEdge& e : edges)
        if (e.face_count != 2) locked[e.a] = locked[e.b] = 1;

    std::vector<Vec3> centroid_sum(nv), normal_sum(nv);
    std::vector<double> area_sum(nv, 0.0);
    for (size_t fi = 0; fi < ws.faces.size(); ++fi) {
        if (!ws.face_alive[fi]) continue;
        const Face& f = ws.faces[fi];
        Vec3 n = face_normal_raw(ws, f);
        double area = 0.5 * norm(n);
        Vec3 centroid = (ws.verts[f[0]] + ws.verts[f[1]] + ws.verts[f[2]]) / 3.0;
        for (int k = 0; k < 3; ++k) {
            centroid_sum[f[k]] += centroid * area;
            normal_sum[f[k]] += n;
            area_sum[f[k]] += area;
        }
    }
    std::vector<Vec3> out = ws.verts;
    for (int v = 0; v < nv; ++v) {
        if (locked[v] || area_sum[v] < 1e-18) continue;
        Vec3 target = centroid_sum[v] / area_sum[v];
        Vec3 n = normalized(normal_sum[v]);
        Vec3 d = target - ws.verts[v];
        Vec3 tangential = d - n * dot(n, d);
        out[v] = ws.verts[v] + tangential * weight;
    }
    ws.verts = std::move(out);
}

}  // namespace

std::pair<Mesh, OptimState> remesh_pass(const Mesh& mesh, const OptimState& state,
                                        const RemeshParams& params) {
    if (state.size() != size_t(mesh.vertex_count()))
        throw_data("remesh_pass: state rows do not match vertex count");
    if (!(params.target_edge_length > 0)) throw_usage("remesh: target edge length must be > 0");

    Workspace ws;
    ws.verts = mesh.vertices();
    ws.faces = mesh.faces();
    ws.face_alive.assign(ws.faces.size(), 1);
    ws.state = state;

    split_pass(ws, RemeshParams::kSplitFactor * params.target_edge_length, params.max_ops);
    collapse_pass(ws, RemeshParams::kCollapseFactor * params.target_edge_length, params.max_ops);
    if (params.enable_flips) flip_pass(ws, params.max_ops);
    relax_pass(ws, params.relaxation);

    // Compact: drop unreferenced vertices, preserving index order (a pass
    // with no structural ops keeps indices identical).
    std::vector<char> referenced(ws.verts.size(), 0);
    for (size_t fi = 0; fi < ws.faces.size(); ++fi) {
        if (!ws.face_alive[fi]) continue;
        for (int k = 0; k < 3; ++k) referenced[ws.faces[fi][k]] = 1;
    }
    std::vector<int> remap(ws.verts.size(), -1);
    std::vector<Vec3> verts;
    OptimState out_state;
    out_state.step = ws.state.step;
    for (size_t v = 0; v < ws.verts.size(); ++v) {
        if (!referenced[v]) continue;
        remap[v] = int(verts.size());
        verts.push_back(ws.verts[v]);
        out_state.m.push_back(ws.state.m[v]);
        out_state.v.push_back(ws.state.v[v]);
    }
    std::vector<Face> faces;
    for (size_t fi = 0; fi < ws.faces.size(); ++fi) {
        if (!ws.face_alive[fi]) continue;
        Face f = ws.faces[fi];
        for (int k = 0; k < 3; ++k) f[k] = remap[f[k]];
        faces.push_back(f);
    }
    return {Mesh(std::move(verts), std::move(faces)), std::move(out_state)};
}

}  // namespace meshrefine

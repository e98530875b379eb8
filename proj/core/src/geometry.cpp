#include "meshrefine/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "meshrefine/error.hpp"

namespace meshrefine {

namespace {

uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (uint64_t(uint32_t(a)) << 32) | uint32_t(b);
}

}  // namespace

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    const int nv = int(vertices_.size());
    for (size_t fi = 0; fi < faces_.size(); ++fi) {
        const Face& f = faces_[fi];
        for (int k = 0; k < 3; ++k) {
            if (f[k] < 0 || f[k] >= nv)
                throw_data("face " + std::to_string(fi) + " references vertex " +
                           std::to_string(f[k]) + " outside [0, " + std::to_string(nv) + ")");
        }
        if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
            throw_data("face " + std::to_string(fi) + " is degenerate (repeated vertex index)");
    }
    build_adjacency();
}

void Mesh::build_adjacency() {
    // Edges in deterministic first-seen order.
    std::unordered_map<uint64_t, int> edge_of;
    edge_of.reserve(faces_.size() * 2);
    edges_.clear();
    std::unordered_map<uint64_t, int> face_dedup;
    face_dedup.reserve(faces_.size());
    for (size_t fi = 0; fi < faces_.size(); ++fi) {
        const Face& f = faces_[fi];
        int s[3] = {f[0], f[1], f[2]};
        std::sort(s, s + 3);
        // Exact packed key; index range checked above (fits meshes < 2^21 verts).
        uint64_t fk = (uint64_t(s[0]) << 42) | (uint64_t(s[1]) << 21) | uint64_t(s[2]);
        auto [it, inserted] = face_dedup.emplace(fk, int(fi));
        if (!inserted)
            throw_data("duplicate face at index " + std::to_string(fi) +
                       " (same vertex set as face " + std::to_string(it->second) + ")");
        for (int k = 0; k < 3; ++k) {
            int a = f[k], b = f[(k + 1) % 3];
            uint64_t key = edge_key(a, b);
            auto [eit, fresh] = edge_of.emplace(key, int(edges_.size()));
            if (fresh) {
                Edge e;
                e.a = std::min(a, b);
                e.b = std::max(a, b);
                edges_.push_back(e);
            }
            Edge& e = edges_[eit->second];
            if (e.face_count < 2)
                e.faces[e.face_count] = int(fi);
            else
                e.extra.push_back(int(fi));
            e.face_count++;
        }
    }

    // CSR vertex->face and vertex->edge.
    const int nv = int(vertices_.size());
    vf_offsets_.assign(nv + 1, 0);
    for (const Face& f : faces_)
        for (int k = 0; k < 3; ++k) vf_offsets_[f[k] + 1]++;
    std::partial_sum(vf_offsets_.begin(), vf_offsets_.end(), vf_offsets_.begin());
    vf_list_.resize(vf_offsets_[nv]);
    {
        std::vector<int> cursor(vf_offsets_.begin(), vf_offsets_.end() - 1);
        for (size_t fi = 0; fi < faces_.size(); ++fi)
            for (int k = 0; k < 3; ++k) vf_list_[cursor[faces_[fi][k]]++] = int(fi);
    }

    ve_offsets_.assign(nv + 1, 0);
    for (const Edge& e : edges_) {
        ve_offsets_[e.a + 1]++;
        ve_offsets_[e.b + 1]++;
    }
    std::partial_sum(ve_offsets_.begin(), ve_offsets_.end(), ve_offsets_.begin());
    ve_list_.resize(ve_offsets_[nv]);
    {
        std::vector<int> cursor(ve_offsets_.begin(), ve_offsets_.end() - 1);
        for (size_t ei = 0; ei < edges_.size(); ++ei) {
            ve_list_[cursor[edges_[ei].a]++] = int(ei);
            ve_list_[cursor[edges_[ei].b]++] = int(ei);
        }
    }
}

int Mesh::edge_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    int lo = ve_offsets_[a], hi = ve_offsets_[a + 1];
    for (int i = lo; i < hi; ++i) {
        const Edge& e = edges_[ve_list_[i]];
        if (e.a == a && e.b == b) return ve_list_[i];
    }
    return -1;
}

namespace {

// Parses the vertex index out of an OBJ face corner token ("7", "7/1", "7//3").
bool parse_corner_index(std::string_view tok, long& out) {
    size_t slash = tok.find('/');
    std::string_view head = slash == std::string_view::npos ? tok : tok.substr(0, slash);
    if (head.empty()) return false;
    auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), out);
    return ec == std::errc() && p == head.data() + head.size();
}

}  // namespace

Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_data("cannot open OBJ file: " + path);

    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::string line;
    long line_no = 0;
    auto fail = [&](const std::string& what) {
        throw_data(path + ":" + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ss >> p.x >> p.y >> p.z)) fail("malformed vertex record");
            vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ss >> tok) {
                long idx;
                if (!parse_corner_index(tok, idx)) fail("malformed face corner '" + tok + "'");
                // OBJ indices are 1-based; negative counts from the end.
                long resolved = idx > 0 ? idx - 1 : long(vertices.size()) + idx;
                if (resolved < 0 || resolved >= long(vertices.size()))
                    fail("vertex index " + std::to_string(idx) + " out of range (have " +
                         std::to_string(vertices.size()) + " vertices)");
                poly.push_back(int(resolved));
            }
            if (poly.size() < 3) fail("face with fewer than 3 vertices");
            for (size_t k = 1; k + 1 < poly.size(); ++k)
                faces.push_back(Face{{poly[0], poly[k], poly[k + 1]}});
        }
        // vn, vt, usemtl, o, g, s, mtllib: ignored.
    }
    if (vertices.empty()) throw_data(path + ": no vertex records");

    try {
        return Mesh(std::move(vertices), std::move(faces));
    } catch (const Error& e) {
        throw_data(path + ": " + e.what());
    }
}

void save_obj(const Mesh& mesh, const std::string& path) {
    if (mesh.vertex_count() == 0 || mesh.face_count() == 0)
        throw_data("refusing to write empty mesh to " + path);
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw_data("cannot open for writing: " + path);
    for (const Vec3& v : mesh.vertices())
        std::fprintf(f, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
    for (const Face& face : mesh.faces())
        std::fprintf(f, "f %d %d %d\n", face[0] + 1, face[1] + 1, face[2] + 1);
    if (std::fclose(f) != 0) throw_data("write failed: " + path);
}

void bounding_box(const Mesh& mesh, Vec3& lo, Vec3& hi) {
    double inf = std::numeric_limits<double>::infinity();
    lo = {inf, inf, inf};
    hi = {-inf, -inf, -inf};
    for (const Vec3& v : mesh.vertices()) {
        for (int k = 0; k < 3; ++k) {
            lo[k] = std::min(lo[k], v[k]);
            hi[k] = std::max(hi[k], v[k]);
        }
    }
}

Mesh normalize(const Mesh& mesh, NormalizeTransform* transform_out) {
    if (mesh.vertex_count() < 3) throw_data("normalize: mesh has fewer than 3 vertices");
    Vec3 lo, hi;
    bounding_box(mesh, lo, hi);
    Vec3 extent = hi - lo;
    double longest = std::max({extent.x, extent.y, extent.z});
    if (!(longest > 0)) throw_data("normalize: mesh has zero extent");

    NormalizeTransform t;
    t.translation = (lo + hi) * -0.5;
    t.scale = 1.0 / longest;

    std::vector<Vec3> verts = mesh.vertices();
    for (Vec3& v : verts) v = t.apply(v);
    if (transform_out) *transform_out = t;
    return Mesh(std::move(verts), mesh.faces());
}

std::vector<Vec3> vertex_normal_sums(const Mesh& mesh) {
    std::vector<Vec3> sums(mesh.vertex_count(), Vec3{0, 0, 0});
    const auto& V = mesh.vertices();
    for (const Face& f : mesh.faces()) {
        // cross of two edges = 2 * area * unit normal, so summing it is
        // area weighting without ever normalizing per face.
        Vec3 c = cross(V[f[1]] - V[f[0]], V[f[2]] - V[f[0]]);
        sums[f[0]] += c;
        sums[f[1]] += c;
        sums[f[2]] += c;
    }
    return sums;
}

std::vector<Vec3> vertex_normals(const Mesh& mesh) {
    std::vector<Vec3> n = vertex_normal_sums(mesh);
    for (Vec3& v : n) v = normalized(v);
    return n;
}

MeshDiagnostics diagnostics(const Mesh& mesh) {
    MeshDiagnostics d;
    d.vertex_count = mesh.vertex_count();
    d.face_count = mesh.face_count();

    const auto& V = mesh.vertices();
    double mn = std::numeric_limits<double>::infinity(), mx = 0.0, sum = 0.0;
    for (const Edge& e : mesh.edges()) {
        if (e.face_count == 1) d.boundary_edge_count++;
        if (e.face_count > 2) d.nonmanifold_edge_count++;
        double len = norm(V[e.b] - V[e.a]);
        mn = std::min(mn, len);
        mx = std::max(mx, len);
        sum += len;
    }
    if (!mesh.edges().empty()) {
        d.min_edge_length = mn;
        d.max_edge_length = mx;
        d.mean_edge_length = sum / double(mesh.edges().size());
    }

    // Components over vertices referenced by at least one face.
    std::vector<int> parent(mesh.vertex_count());
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> used(mesh.vertex_count(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const Face& f : mesh.faces()) {
        used[f[0]] = used[f[1]] = used[f[2]] = 1;
        int r0 = find(f[0]);
        int r1 = find(f[1]);
        parent[find(r1)] = r0;
        parent[find(f[2])] = find(r0);
    }
    int comps = 0;
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (used[v] && find(v) == v) comps++;
    d.component_count = comps;
    return d;
}

double enclosed_volume(const Mesh& mesh) {
    const auto& V = mesh.vertices();
    double vol = 0.0;
    for (const Face& f : mesh.faces())
        vol += dot(V[f[0]], cross(V[f[1]], V[f[2]]));
    return vol / 6.0;
}

}  // namespace meshrefine

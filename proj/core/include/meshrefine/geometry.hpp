#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "meshrefine/vec.hpp"

namespace meshrefine {

struct Face {
    int v[3];
    int operator[](int i) const { return v[i]; }
    int& operator[](int i) { return v[i]; }
};

// Undirected edge with the faces incident to it. `faces` holds up to two
// entries inline; additional (non-manifold) incidences spill into `extra`.
struct Edge {
    int a, b;                 // a < b
    int face_count = 0;
    int faces[2] = {-1, -1};  // first two incident faces
    std::vector<int> extra;   // faces beyond the second, if any

    int incident(int i) const { return i < 2 ? faces[i] : extra[size_t(i) - 2]; }
};

// Indexed triangle mesh. Counterclockwise winding = outward normal.
// Immutable once built: adjacency is derived in the constructor and the
// vertex/face arrays are not meant to be mutated in place (remeshing builds
// a new Mesh).
class Mesh {
public:
    Mesh() = default;
    Mesh(std::vector<Vec3> vertices, std::vector<Face> faces);

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    int vertex_count() const { return int(vertices_.size()); }
    int face_count() const { return int(faces_.size()); }

    const std::vector<Edge>& edges() const { return edges_; }
    // Index into edges() for the undirected pair (a,b), or -1.
    int edge_index(int a, int b) const;

    // Faces incident to a vertex, CSR layout.
    const std::vector<int>& vertex_face_offsets() const { return vf_offsets_; }
    const std::vector<int>& vertex_face_list() const { return vf_list_; }

    // Edge indices incident to a vertex, CSR layout.
    const std::vector<int>& vertex_edge_offsets() const { return ve_offsets_; }
    const std::vector<int>& vertex_edge_list() const { return ve_list_; }

    bool empty() const { return faces_.empty(); }

private:
    void build_adjacency();

    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<Edge> edges_;
    std::vector<int> vf_offsets_, vf_list_;
    std::vector<int> ve_offsets_, ve_list_;
};

struct MeshDiagnostics {
    int vertex_count = 0;
    int face_count = 0;
    int boundary_edge_count = 0;
    int nonmanifold_edge_count = 0;  // edges with > 2 incident faces
    int component_count = 0;         // over vertices referenced by faces
    double min_edge_length = 0.0;
    double max_edge_length = 0.0;
    double mean_edge_length = 0.0;
};

// Uniform transform applied by normalize(): p' = scale * (p + translation).
struct NormalizeTransform {
    double scale = 1.0;
    Vec3 translation{0, 0, 0};

    Vec3 apply(const Vec3& p) const { return (p + translation) * scale; }
    Vec3 invert(const Vec3& p) const { return p / scale - translation; }
    bool is_identity() const {
        return scale == 1.0 && translation.x == 0 && translation.y == 0 && translation.z == 0;
    }
};

// Wavefront OBJ, ASCII. Reads `v`/`f` records, fan-triangulates polygons,
// resolves 1-based and negative indices, ignores vt/vn sub-indices.
Mesh load_obj(const std::string& path);

// Writes `v`/`f` records with enough digits that a reload reproduces the
// vertex positions. Refuses to write an empty mesh.
void save_obj(const Mesh& mesh, const std::string& path);

// Centers the bounding box at the origin and scales the longest axis to 1.
Mesh normalize(const Mesh& mesh, NormalizeTransform* transform_out = nullptr);

// Area-weighted average of incident face normals, unit length.
// Vertices with no incident non-degenerate face get (0,0,1).
std::vector<Vec3> vertex_normals(const Mesh& mesh);

// Unnormalized area-weighted normal sums (each face contributes its
// edge cross product). vertex_normals() is this, normalized.
std::vector<Vec3> vertex_normal_sums(const Mesh& mesh);

MeshDiagnostics diagnostics(const Mesh& mesh);

// Signed enclosed volume (exact for closed meshes; sums signed tetrahedra).
double enclosed_volume(const Mesh& mesh);

// Axis-aligned bounding box.
void bounding_box(const Mesh& mesh, Vec3& lo, Vec3& hi);

}  // namespace meshrefine

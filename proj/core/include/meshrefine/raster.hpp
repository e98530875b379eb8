#pragma once

#include <cstdint>
#include <vector>

#include "meshrefine/camera.hpp"
#include "meshrefine/geometry.hpp"
#include "meshrefine/image.hpp"

namespace meshrefine {

// Per-vertex dL/dv accumulator.
struct VertexGrads {
    std::vector<Vec3> g;

    VertexGrads() = default;
    explicit VertexGrads(int vertex_count) : g(vertex_count) {}
    void accumulate(const VertexGrads& o) {
        for (size_t i = 0; i < g.size(); ++i) g[i] += o.g[i];
    }
    double max_abs() const {
        double m = 0;
        for (const Vec3& v : g)
            for (int k = 0; k < 3; ++k) m = std::max(m, std::abs(v[k]));
        return m;
    }
    bool all_finite() const;
};

// Output of one render. The normal image holds camera-space normals scaled
// by coverage, so partially covered boundary pixels fade toward the zero
// vector and the image is a continuous function of the vertex positions.
// Background: normal = 0, silhouette = 0, depth = depth_sentinel.
struct RasterOutput {
    Image normal;      // 3ch, coverage-scaled camera-space normals in [-1,1]
    Image depth;       // 1ch, camera depth; background = depth_sentinel
    Image silhouette;  // 1ch, exact-area coverage in [0,1]
    std::vector<int32_t> triangle_id;  // per pixel, -1 where the center is uncovered
    std::vector<double> barycentric;   // 3 per pixel, valid where triangle_id >= 0
    double depth_sentinel = 0.0;

    // Boundary bookkeeping consumed by backward().
    // A surviving edge is one whose winding contribution does not cancel:
    // boundary edges and front/back folds. (vi, vj) is the canonical
    // traversal (positive screen winding), weight is the accumulation
    // weight, flip is the two-sided normal sign of the face that shades it.
    struct SurvivingEdge {
        int vi, vj;
        double weight;
        double flip;
    };
    std::vector<SurvivingEdge> silhouette_edges;

    // Pixels with fractional coverage but an uncovered center: shaded from
    // the nearest surviving edge at parameter t along (vi -> vj).
    struct BandPixel {
        int pixel;
        int edge;  // index into silhouette_edges
        double t;
    };
    std::vector<BandPixel> band_pixels;

    // Per face: sign of the projected screen area (+1/-1, 0 if degenerate).
    // Faces with negative sign are front-facing (y points down on screen).
    std::vector<int8_t> face_orient;

    int width() const { return silhouette.width; }
    int height() const { return silhouette.height; }
};

// Renders normals, depth and silhouette coverage from a viewpoint.
// Z-buffer hidden surface removal at pixel centers (top-left tie rule,
// equal depth keeps the lower face index), smooth shading from area-weighted
// vertex normals, two-sided (back faces shaded with the normal flipped
// toward the viewer).
RasterOutput rasterize(const Mesh& mesh, const Viewpoint& viewpoint);

// As above with precomputed vertex_normal_sums(mesh) (shared across views).
RasterOutput rasterize(const Mesh& mesh, const std::vector<Vec3>& normal_sums,
                       const Viewpoint& viewpoint);

// Maps per-pixel loss gradients back to vertex positions. Covers every
// continuous dependency of the forward pass: interpolation weights, the
// area-weighted vertex normal chain, coverage, and the boundary-band normal
// extension. Occlusion changes away from the outer silhouette are
// intentionally not differentiated.
VertexGrads backward(const RasterOutput& raster, const Mesh& mesh, const Viewpoint& viewpoint,
                     const Image& dL_dnormal, const Image& dL_dsilhouette);
VertexGrads backward(const RasterOutput& raster, const Mesh& mesh,
                     const std::vector<Vec3>& normal_sums, const Viewpoint& viewpoint,
                     const Image& dL_dnormal, const Image& dL_dsilhouette);

}  // namespace meshrefine

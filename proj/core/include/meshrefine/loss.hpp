#pragma once

#include <utility>
#include <vector>

#include "meshrefine/camera.hpp"
#include "meshrefine/image.hpp"
#include "meshrefine/raster.hpp"

namespace meshrefine {

// Per-view supervision: target normal image and foreground mask.
struct TargetView {
    Image normal;  // 3ch, background = zero vector
    Image mask;    // 1ch in [0,1]
};

struct LossWeights {
    double normal = 1.0;
    double normal_gradient = 1.0;
    double silhouette = 1.0;
};

struct TargetViews {
    std::vector<TargetView> views;
    LossWeights weights;
    // When set, the normal and normal-gradient terms are weighted per-pixel
    // by the foreground mask. The silhouette term always covers the image.
    bool foreground_only = false;

    size_t size() const { return views.size(); }
};

// Per-term values include the configured weights and the 1/|views| average;
// per_view rows are the raw per-view values.
struct LossReport {
    double total = 0.0;
    double normal = 0.0;
    double normal_gradient = 0.0;
    double silhouette = 0.0;
    struct PerView {
        double normal = 0.0, normal_gradient = 0.0, silhouette = 0.0;
    };
    std::vector<PerView> per_view;  // raw per-view values before 1/|views|

    bool finite() const;
};

// Raw per-view L1 between rendered and target normals; gradient is
// sign(rendered - target) with the subgradient at 0 taken as 0.
std::pair<double, Image> normal_loss(const Image& rendered, const Image& target,
                                     const Image* mask = nullptr);

// L1 between forward-difference image gradients; backward transposes the
// stencil.
std::pair<double, Image> normal_gradient_loss(const Image& rendered, const Image& target,
                                              const Image* mask = nullptr);

// L1 between rendered coverage and the foreground mask.
std::pair<double, Image> silhouette_loss(const Image& rendered_coverage, const Image& mask);

// Renders every view, evaluates the three terms, averages over views,
// applies the weights and chains all per-pixel gradients to the vertices.
// thread_count caps the per-view fan-out (0 = default).
std::pair<LossReport, VertexGrads> total_loss(const Mesh& mesh, const ViewSet& views,
                                              const TargetViews& targets, int thread_count = 0);

}  // namespace meshrefine

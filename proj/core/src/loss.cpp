#include "meshrefine/loss.hpp"

#include <cmath>

#include "meshrefine/error.hpp"
#include "meshrefine/parallel.hpp"

namespace meshrefine {

namespace {

double sign0(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

void check_shapes(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw_data(std::string(what) + ": image shapes differ");
}

}  // namespace

bool LossReport::finite() const {
    return std::isfinite(total) && std::isfinite(normal) && std::isfinite(normal_gradient) &&
           std::isfinite(silhouette);
}

std::pair<double, Image> normal_loss(const Image& rendered, const Image& target,
                                     const Image* mask) {
    check_shapes(rendered, target, "normal_loss");
    Image grad(rendered.width, rendered.height, rendered.channels);
    double value = 0.0;
    for (int y = 0; y < rendered.height; ++y)
        for (int x = 0; x < rendered.width; ++x) {
            double w = mask ? mask->at(y, x) : 1.0;
            if (w == 0.0) continue;
            for (int c = 0; c < rendered.channels; ++c) {
                double d = rendered.at(y, x, c) - target.at(y, x, c);
                value += w * std::abs(d);
                grad.at(y, x, c) = w * sign0(d);
            }
        }
    return {value, std::move(grad)};
}

std::pair<double, Image> normal_gradient_loss(const Image& rendered, const Image& target,
                                              const Image* mask) {
    check_shapes(rendered, target, "normal_gradient_loss");
    const int W = rendered.width, H = rendered.height, C = rendered.channels;
    if (W < 2 && H < 2) throw_data("normal_gradient_loss: image too small");
    Image grad(W, H, C);
    double value = 0.0;
    // Differences of differences: d(y,x) = r(y,x) - t(y,x); the x term at
    // (y,x) is |d(y,x+1) - d(y,x)|, weighted by the mask at (y,x).
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double w = mask ? mask->at(y, x) : 1.0;
            if (w == 0.0) continue;
            for (int c = 0; c < C; ++c) {
                double d0 = rendered.at(y, x, c) - target.at(y, x, c);
                if (x + 1 < W) {
                    double gx = (rendered.at(y, x + 1, c) - target.at(y, x + 1, c)) - d0;
                    value += w * std::abs(gx);
                    double s = w * sign0(gx);
                    grad.at(y, x + 1, c) += s;
                    grad.at(y, x, c) -= s;
                }
                if (y + 1 < H) {
                    double gy = (rendered.at(y + 1, x, c) - target.at(y + 1, x, c)) - d0;
                    value += w * std::abs(gy);
                    double s = w * sign0(gy);
                    grad.at(y + 1, x, c) += s;
                    grad.at(y, x, c) -= s;
                }
            }
        }
    return {value, std::move(grad)};
}

std::pair<double, Image> silhouette_loss(const Image& rendered_coverage, const Image& mask) {
    check_shapes(rendered_coverage, mask, "silhouette_loss");
    if (rendered_coverage.channels != 1) throw_data("silhouette_loss: need 1 channel");
    Image grad(rendered_coverage.width, rendered_coverage.height, 1);
    double value = 0.0;
    for (size_t i = 0; i < rendered_coverage.data.size(); ++i) {
        double d = rendered_coverage.data[i] - mask.data[i];
        value += std::abs(d);
        grad.data[i] = sign0(d);
    }
    return {value, std::move(grad)};
}

std::pair<LossReport, VertexGrads> total_loss(const Mesh& mesh, const ViewSet& views,
                                              const TargetViews& targets, int thread_count) {
    if (views.size() != targets.size())
        throw_data("total_loss: view count does not match target count");
    const int n = int(views.size());
    if (n == 0) throw_data("total_loss: no views");
    for (int i = 0; i < n; ++i) {
        const TargetView& tv = targets.views[i];
        if (tv.normal.width != views[i].resolution() || tv.normal.height != views[i].resolution())
            throw_data("total_loss: target resolution mismatch at view " + std::to_string(i));
        if (!tv.mask.same_shape(Image(tv.normal.width, tv.normal.height, 1)))
            throw_data("total_loss: mask shape mismatch at view " + std::to_string(i));
    }

    std::vector<Vec3> nsums = vertex_normal_sums(mesh);
    const double inv_n = 1.0 / double(n);
    const LossWeights& w = targets.weights;

    std::vector<LossReport::PerView> per_view(n);
    std::vector<VertexGrads> per_view_grads(n);

    parallel_for(n, thread_count, [&](int i) {
        const TargetView& tv = targets.views[i];
        RasterOutput raster = rasterize(mesh, nsums, views[i]);
        const Image* mask = targets.foreground_only ? &tv.mask : nullptr;

        auto [ln, gn] = normal_loss(raster.normal, tv.normal, mask);
        auto [lg, gg] = normal_gradient_loss(raster.normal, tv.normal, mask);
        auto [ls, gs] = silhouette_loss(raster.silhouette, tv.mask);
        per_view[i] = {ln, lg, ls};

        Image dN(gn.width, gn.height, 3);
        for (size_t k = 0; k < dN.data.size(); ++k)
            dN.data[k] = inv_n * (w.normal * gn.data[k] + w.normal_gradient * gg.data[k]);
        Image dS(gs.width, gs.height, 1);
        for (size_t k = 0; k < dS.data.size(); ++k)
            dS.data[k] = inv_n * w.silhouette * gs.data[k];
        per_view_grads[i] = backward(raster, mesh, nsums, views[i], dN, dS);
    });

    LossReport report;
    report.per_view = per_view;
    VertexGrads grads(mesh.vertex_count());
    for (int i = 0; i < n; ++i) {
        report.normal += per_view[i].normal * inv_n;
        report.normal_gradient += per_view[i].normal_gradient * inv_n;
        report.silhouette += per_view[i].silhouette * inv_n;
        grads.accumulate(per_view_grads[i]);
    }
    report.normal *= w.normal;
    report.normal_gradient *= w.normal_gradient;
    report.silhouette *= w.silhouette;
    report.total = report.normal + report.normal_gradient + report.silhouette;
    return {std::move(report), std::move(grads)};
}

}  // namespace meshrefine

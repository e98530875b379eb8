#include "meshrefine/camera.hpp"

#include "meshrefine/error.hpp"

namespace meshrefine {

Viewpoint::Viewpoint(double azimuth, double elevation, int resolution, double half_extent)
    : azimuth_(azimuth), elevation_(elevation), resolution_(resolution), half_extent_(half_extent) {
    if (resolution < 1) throw_usage("viewpoint resolution must be positive");
    if (!(half_extent > 0)) throw_usage("viewpoint half extent must be positive");
    // Rotate the object: azimuth about +y first, then elevation tilts the
    // camera above the object (positive looks down).
    rotation_ = Mat3::rotation_x(elevation) * Mat3::rotation_y(azimuth);
}

Vec3 Viewpoint::project(const Vec3& p) const {
    Vec3 q = rotation_ * p;
    double s = resolution_ / (2.0 * half_extent_);
    return {(q.x + half_extent_) * s, (half_extent_ - q.y) * s, -q.z};
}

Vec3 Viewpoint::camera_space_normal(const Vec3& n) const { return rotation_ * n; }

ViewSet canonical_viewset(int resolution, double half_extent) {
    if (resolution < 16) throw_usage("resolution must be at least 16");
    ViewSet vs;
    vs.resolution = resolution;
    for (double a : kCanonicalAzimuths) vs.views.emplace_back(a, 0.0, resolution, half_extent);
    return vs;
}

}  // namespace meshrefine

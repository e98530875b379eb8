#pragma once

#include <array>
#include <vector>

#include "meshrefine/vec.hpp"

namespace meshrefine {

// Orthographic viewpoint. Azimuth rotates the object about the world up axis
// (+y); the front view (azimuth 0) looks along -z, so camera space equals
// world space there: +x right, +y up, +z toward the viewer.
//
// Screen mapping: camera x in [-half_extent, +half_extent] spans [0, res]
// left to right; camera y spans [res, 0] (image y points down). Depth
// increases away from the viewer.
class Viewpoint {
public:
    Viewpoint(double azimuth, double elevation, int resolution, double half_extent = 0.55);

    double azimuth() const { return azimuth_; }
    double elevation() const { return elevation_; }
    int resolution() const { return resolution_; }
    double half_extent() const { return half_extent_; }

    // World -> camera rotation (orthonormal, det +1).
    const Mat3& rotation() const { return rotation_; }

    // World point -> (screen x px, screen y px, depth in model units).
    Vec3 project(const Vec3& world_point) const;

    // World direction -> camera frame, unit length preserved.
    Vec3 camera_space_normal(const Vec3& world_normal) const;

    // Pixels per model unit at this resolution / extent.
    double pixels_per_unit() const { return resolution_ / (2.0 * half_extent_); }

private:
    double azimuth_, elevation_;
    int resolution_;
    double half_extent_;
    Mat3 rotation_;
};

// The canonical six azimuths, in order.
constexpr std::array<double, 6> kCanonicalAzimuths = {
    0.0, M_PI / 4.0, M_PI / 2.0, M_PI, 3.0 * M_PI / 2.0, 7.0 * M_PI / 4.0};

struct ViewSet {
    std::vector<Viewpoint> views;
    int resolution = 0;

    size_t size() const { return views.size(); }
    const Viewpoint& operator[](size_t i) const { return views[i]; }
};

// Six viewpoints at the canonical azimuths, elevation 0.
ViewSet canonical_viewset(int resolution, double half_extent = 0.55);

}  // namespace meshrefine

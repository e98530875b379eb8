#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "meshrefine/camera.hpp"
#include "meshrefine/error.hpp"
#include "meshrefine/rng.hpp"

using namespace meshrefine;

TEST_CASE("canonical viewset: six views, quoted azimuths, elevation 0") {
    ViewSet vs = canonical_viewset(256);
    REQUIRE(vs.size() == 6);
    CHECK(vs.resolution == 256);
    const double expect[6] = {0.0, M_PI / 4, M_PI / 2, M_PI, 3 * M_PI / 2, 7 * M_PI / 4};
    for (int i = 0; i < 6; ++i) {
        CHECK(vs[i].azimuth() == doctest::Approx(expect[i]).epsilon(1e-15));
        CHECK(vs[i].elevation() == 0.0);
        CHECK(vs[i].resolution() == 256);
        CHECK(vs[i].half_extent() == doctest::Approx(0.55));
    }
    CHECK_THROWS_AS(canonical_viewset(8), Error);
}

TEST_CASE("rotation part is orthonormal with det +1") {
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        Viewpoint vp(rng.uniform(0, 2 * M_PI), rng.uniform(-1.0, 1.0), 64);
        const Mat3& R = vp.rotation();
        Mat3 RRt = R * R.transposed();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(RRt.m[r][c] - (r == c ? 1.0 : 0.0)) < 1e-9);
        double det =
            R.m[0][0] * (R.m[1][1] * R.m[2][2] - R.m[1][2] * R.m[2][1]) -
            R.m[0][1] * (R.m[1][0] * R.m[2][2] - R.m[1][2] * R.m[2][0]) +
            R.m[0][2] * (R.m[1][0] * R.m[2][1] - R.m[1][1] * R.m[2][0]);
        CHECK(det == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("projection: center, edges, depth direction") {
    Viewpoint front(0.0, 0.0, 256, 0.55);
    Vec3 origin = front.project({0, 0, 0});
    CHECK(origin.x == doctest::Approx(128.0));
    CHECK(origin.y == doctest::Approx(128.0));

    Vec3 right = front.project({0.55, 0, 0});
    CHECK(right.x == doctest::Approx(256.0));

    // y points down in image space.
    Vec3 up = front.project({0, 0.55, 0});
    CHECK(up.y == doctest::Approx(0.0));

    // Depth increases away from the viewer: the front view looks along -z.
    CHECK(front.project({0, 0, 0.3}).z < front.project({0, 0, -0.3}).z);
}

TEST_CASE("azimuth pi equals front view of a 180-degree rotated point") {
    Viewpoint back(M_PI, 0.0, 256);
    Viewpoint front(0.0, 0.0, 256);
    Rng rng(5);
    for (int i = 0; i < 10; ++i) {
        Vec3 p{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        Vec3 rotated = Mat3::rotation_y(M_PI) * p;
        Vec3 a = back.project(p), b = front.project(rotated);
        CHECK(std::abs(a.x - b.x) < 1e-9);
        CHECK(std::abs(a.y - b.y) < 1e-9);
        CHECK(std::abs(a.z - b.z) < 1e-9);
    }
}

TEST_CASE("projection invariant under joint rotation of point and camera") {
    Rng rng(17);
    for (int i = 0; i < 20; ++i) {
        double a = rng.uniform(0, 2 * M_PI), b = rng.uniform(0, 2 * M_PI);
        Viewpoint va(a, 0.0, 128), vab(std::fmod(a + b, 2 * M_PI), 0.0, 128);
        Vec3 p{rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4)};
        Vec3 pre = Mat3::rotation_y(b) * p;
        Vec3 lhs = vab.project(p);
        Vec3 rhs = va.project(pre);
        CHECK(std::abs(lhs.x - rhs.x) < 1e-6);
        CHECK(std::abs(lhs.y - rhs.y) < 1e-6);
    }
}

TEST_CASE("camera-space normals") {
    Viewpoint front(0.0, 0.0, 256);
    Vec3 n = front.camera_space_normal({0, 0, 1});
    CHECK(n.x == doctest::Approx(0.0));
    CHECK(n.y == doctest::Approx(0.0));
    CHECK(n.z == doctest::Approx(1.0));

    // Quarter turn: the fixed rotation matrix sends +x to -z in camera space.
    Viewpoint quarter(M_PI / 2, 0.0, 256);
    Vec3 q = quarter.camera_space_normal({1, 0, 0});
    CHECK(q.x == doctest::Approx(0.0));
    CHECK(q.z == doctest::Approx(-1.0));

    Rng rng(23);
    for (int i = 0; i < 20; ++i) {
        Viewpoint vp(rng.uniform(0, 2 * M_PI), rng.uniform(-1, 1), 64);
        Vec3 d = normalized({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        CHECK(norm(vp.camera_space_normal(d)) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("all canonical viewpoints share extent and resolution") {
    ViewSet vs = canonical_viewset(128, 0.6);
    for (const Viewpoint& v : vs.views) {
        CHECK(v.half_extent() == doctest::Approx(0.6));
        CHECK(v.resolution() == 128);
    }
}

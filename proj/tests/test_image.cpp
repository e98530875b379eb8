#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "meshrefine/error.hpp"
#include "meshrefine/image.hpp"
#include "meshrefine/rng.hpp"
#include "support.hpp"

using namespace meshrefine;
using test::TempDir;

namespace {

Image random_image(int w, int h, int ch, uint64_t seed, double lo = -1, double hi = 1) {
    Image img(w, h, ch);
    Rng rng(seed);
    for (double& v : img.data) v = rng.uniform(lo, hi);
    return img;
}

}  // namespace

TEST_CASE("gaussian blur: constant image unchanged, kernel 1 is identity") {
    Image constant(16, 16, 3, 0.7);
    Image blurred = gaussian_blur(constant, 7, 1.4);
    for (double v : blurred.data) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));

    Image noise = random_image(9, 9, 1, 3);
    Image same = gaussian_blur(noise, 1, 1.0);
    for (size_t i = 0; i < noise.data.size(); ++i) CHECK(same.data[i] == noise.data[i]);

    CHECK_THROWS_AS(gaussian_blur(constant, 4, 1.0), Error);
}

TEST_CASE("gaussian blur of a unit impulse matches the separable kernel product") {
    const int k = 7;
    const double sigma = 1.4;
    std::vector<double> kernel = gaussian_kernel(k, sigma);
    double sum = 0;
    for (double v : kernel) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    Image impulse(21, 21, 1, 0.0);
    impulse.at(10, 10) = 1.0;
    Image blurred = gaussian_blur(impulse, k, sigma);
    for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
            CHECK(blurred.at(10 + dy, 10 + dx) ==
                  doctest::Approx(kernel[dy + 3] * kernel[dx + 3]).epsilon(1e-12));
    double mass = 0;
    for (double v : blurred.data) mass += v;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("blurred impulse is antisymmetric about the impulse in x") {
    Image impulse(15, 15, 1, 0.0);
    impulse.at(7, 7) = 1.0;
    Image blurred = gaussian_blur(impulse, 5, 1.0);
    auto [gx, gy] = image_gradient(blurred);
    for (int d = 1; d <= 4; ++d)
        CHECK(gx.at(7, 7 - d) == doctest::Approx(-gx.at(7, 6 + d)).epsilon(1e-9));
}

TEST_CASE("blur commutes with channel slicing") {
    Image rgb = random_image(12, 10, 3, 9);
    Image blurred = gaussian_blur(rgb, 5, 1.2);
    for (int c = 0; c < 3; ++c) {
        Image channel(12, 10, 1);
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 12; ++x) channel.at(y, x) = rgb.at(y, x, c);
        Image bc = gaussian_blur(channel, 5, 1.2);
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 12; ++x)
                CHECK(bc.at(y, x) == doctest::Approx(blurred.at(y, x, c)).epsilon(1e-12));
    }
}

TEST_CASE("image gradient: constants and ramps") {
    Image constant(8, 8, 1, 3.0);
    auto [gx0, gy0] = image_gradient(constant);
    for (double v : gx0.data) CHECK(v == 0.0);
    for (double v : gy0.data) CHECK(v == 0.0);

    Image ramp(8, 8, 1);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) ramp.at(y, x) = double(x);
    auto [gx, gy] = image_gradient(ramp);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            CHECK(gx.at(y, x) == (x == 7 ? 0.0 : 1.0));
            CHECK(gy.at(y, x) == 0.0);
        }
}

TEST_CASE("image gradient is linear") {
    Image a = random_image(10, 9, 3, 1), b = random_image(10, 9, 3, 2);
    Image sum(10, 9, 3);
    for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] = a.data[i] + b.data[i];
    auto [gxa, gya] = image_gradient(a);
    auto [gxb, gyb] = image_gradient(b);
    auto [gxs, gys] = image_gradient(sum);
    for (size_t i = 0; i < sum.data.size(); ++i) {
        CHECK(gxs.data[i] == doctest::Approx(gxa.data[i] + gxb.data[i]).epsilon(1e-12));
        CHECK(gys.data[i] == doctest::Approx(gya.data[i] + gyb.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("l1_diff basics and properties") {
    Image a(2, 2, 1);
    a.data = {1.0, -1.0, 0.5, 0.0};
    Image zero(2, 2, 1, 0.0);
    CHECK(l1_diff(a, zero) == doctest::Approx(2.5));
    CHECK(l1_diff(a, a) == 0.0);

    Image b = random_image(6, 5, 2, 4), c = random_image(6, 5, 2, 5);
    Image d = random_image(6, 5, 2, 6);
    CHECK(l1_diff(b, c) == doctest::Approx(l1_diff(c, b)));
    CHECK(l1_diff(b, d) <= l1_diff(b, c) + l1_diff(c, d) + 1e-12);

    Image wrong(5, 5, 2);
    CHECK_THROWS_AS(l1_diff(b, wrong), Error);
}

TEST_CASE("normal PNG: quantization targets and round-trip error bound") {
    TempDir dir("png");
    Image img(4, 3, 3);
    // First pixel holds (0,0,1); the rest sample the range.
    img.at(0, 0, 0) = 0.0;
    img.at(0, 0, 1) = 0.0;
    img.at(0, 0, 2) = 1.0;
    Rng rng(12);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) {
            if (x == 0 && y == 0) continue;
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = rng.uniform(-1, 1);
        }
    encode_normal_png(img, dir.file("n.png"));
    Image back = decode_normal_png(dir.file("n.png"));
    // (0,0,1) lands on (32768, 32768, 65535).
    CHECK(std::lround((back.at(0, 0, 0) + 1.0) * 0.5 * 65535.0) == 32768);
    CHECK(std::lround((back.at(0, 0, 2) + 1.0) * 0.5 * 65535.0) == 65535);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 2.0 / 65535.0 + 1e-12);
}

TEST_CASE("normal PNG: background zero vector decodes near zero") {
    TempDir dir("png");
    Image img(2, 2, 3, 0.0);
    encode_normal_png(img, dir.file("bg.png"));
    Image back = decode_normal_png(dir.file("bg.png"));
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            Vec3 n{back.at(y, x, 0), back.at(y, x, 1), back.at(y, x, 2)};
            CHECK(norm(n) < 1e-4);
        }
}

TEST_CASE("mask PNG: binary exact, mid-gray, random round-trip") {
    TempDir dir("png");
    Image mask(5, 4, 1);
    mask.data = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0.501960784, 0, 1, 1, 0, 0, 0, 1, 0, 1};
    encode_mask_png(mask, dir.file("m.png"));
    Image back = decode_mask_png(dir.file("m.png"));
    CHECK(back.at(0, 0) == 0.0);
    CHECK(back.at(0, 1) == 1.0);
    CHECK(back.at(2, 0) == doctest::Approx(128.0 / 255.0).epsilon(1e-12));

    Image soft = random_image(8, 8, 1, 31, 0.0, 1.0);
    encode_mask_png(soft, dir.file("soft.png"));
    Image soft_back = decode_mask_png(dir.file("soft.png"));
    for (size_t i = 0; i < soft.data.size(); ++i)
        CHECK(std::abs(soft_back.data[i] - soft.data[i]) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("depth PNG round-trip") {
    TempDir dir("png");
    Image depth = random_image(8, 6, 1, 77, 0.0, 1.0);
    encode_depth_png(depth, dir.file("d.png"));
    Image back = decode_depth_png(dir.file("d.png"));
    for (size_t i = 0; i < depth.data.size(); ++i)
        CHECK(std::abs(back.data[i] - depth.data[i]) <= 0.5 / 65535.0 + 1e-12);
}

TEST_CASE("PNG codecs reject mismatched formats") {
    TempDir dir("png");
    Image mask(4, 4, 1, 0.5);
    encode_mask_png(mask, dir.file("m.png"));
    CHECK_THROWS_AS(decode_normal_png(dir.file("m.png")), Error);

    Image nrm(4, 4, 3, 0.0);
    encode_normal_png(nrm, dir.file("n.png"));
    CHECK_THROWS_AS(decode_mask_png(dir.file("n.png")), Error);
    CHECK_THROWS_AS(decode_depth_png(dir.file("n.png")), Error);

    CHECK_THROWS_AS(encode_mask_png(nrm, dir.file("x.png")), Error);
    CHECK_THROWS_AS(encode_normal_png(mask, dir.file("y.png")), Error);
}

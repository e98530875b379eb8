#include "meshrefine/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "meshrefine/error.hpp"

namespace meshrefine {

std::vector<double> gaussian_kernel(int kernel_size, double sigma) {
    if (kernel_size < 1 || kernel_size % 2 == 0)
        throw_usage("gaussian kernel size must be odd and >= 1");
    if (!(sigma > 0)) throw_usage("gaussian sigma must be positive");
    int r = kernel_size / 2;
    std::vector<double> k(kernel_size);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5 * (double(i) * i) / (sigma * sigma));
        sum += k[i + r];
    }
    for (double& v : k) v /= sum;
    return k;
}

Image gaussian_blur(const Image& image, int kernel_size, double sigma) {
    std::vector<double> k = gaussian_kernel(kernel_size, sigma);
    if (kernel_size == 1) return image;
    const int r = kernel_size / 2;
    const int W = image.width, H = image.height, C = image.channels;

    Image tmp(W, H, C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i) {
                    int xx = std::clamp(x + i, 0, W - 1);
                    s += k[i + r] * image.at(y, xx, c);
                }
                tmp.at(y, x, c) = s;
            }
    Image out(W, H, C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            for (int c = 0; c < C; ++c) {
                double s = 0.0;
                for (int i = -r; i <= r; ++i) {
                    int yy = std::clamp(y + i, 0, H - 1);
                    s += k[i + r] * tmp.at(yy, x, c);
                }
                out.at(y, x, c) = s;
            }
    return out;
}

std::pair<Image, Image> image_gradient(const Image& image) {
    if (image.width < 2 || image.height < 2)
        throw_usage("image_gradient needs width and height >= 2");
    Image gx(image.width, image.height, image.channels);
    Image gy(image.width, image.height, image.channels);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            for (int c = 0; c < image.channels; ++c) {
                if (x + 1 < image.width)
                    gx.at(y, x, c) = image.at(y, x + 1, c) - image.at(y, x, c);
                if (y + 1 < image.height)
                    gy.at(y, x, c) = image.at(y + 1, x, c) - image.at(y, x, c);
            }
    return {std::move(gx), std::move(gy)};
}

double l1_diff(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw_data("l1_diff: image shapes differ");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s;
}

namespace {

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* f = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (f) std::fclose(f);
    }
};

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* f = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (f) std::fclose(f);
    }
};

bool host_is_little_endian() {
    const uint16_t x = 1;
    return *reinterpret_cast<const uint8_t*>(&x) == 1;
}

void write_png(const std::string& path, int width, int height, int channels, int bit_depth,
               const void* rows_data, size_t row_bytes) {
    PngWriteCloser g;
    g.f = std::fopen(path.c_str(), "wb");
    if (!g.f) throw_data("cannot open for writing: " + path);
    g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw_data("png_create_write_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw_data("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(g.png))) throw_data("PNG write error: " + path);

    png_init_io(g.png, g.f);
    int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(g.png, g.info, width, height, bit_depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(g.png, g.info);
    if (bit_depth == 16 && host_is_little_endian()) png_set_swap(g.png);

    const uint8_t* base = static_cast<const uint8_t*>(rows_data);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(base + y * row_bytes);
    png_write_image(g.png, rows.data());
    png_write_end(g.png, nullptr);
}

// Reads a PNG, requiring the given channel count and bit depth.
std::vector<uint8_t> read_png(const std::string& path, int expect_channels, int expect_depth,
                              int& width, int& height) {
    PngReadCloser g;
    g.f = std::fopen(path.c_str(), "rb");
    if (!g.f) throw_data("cannot open PNG: " + path);
    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!g.png) throw_data("png_create_read_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw_data("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(g.png))) throw_data("PNG read error: " + path);

    png_init_io(g.png, g.f);
    png_read_info(g.png, g.info);
    int depth = png_get_bit_depth(g.png, g.info);
    int color = png_get_color_type(g.png, g.info);
    width = int(png_get_image_width(g.png, g.info));
    height = int(png_get_image_height(g.png, g.info));

    int channels = 0;
    if (color == PNG_COLOR_TYPE_GRAY) channels = 1;
    else if (color == PNG_COLOR_TYPE_RGB) channels = 3;
    else throw_data(path + ": unsupported PNG color type (need gray or RGB)");
    if (channels != expect_channels)
        throw_data(path + ": expected " + std::to_string(expect_channels) + " channel(s), got " +
                   std::to_string(channels));
    if (depth != expect_depth)
        throw_data(path + ": expected bit depth " + std::to_string(expect_depth) + ", got " +
                   std::to_string(depth));
    if (depth == 16 && host_is_little_endian()) png_set_swap(g.png);
    png_read_update_info(g.png, g.info);

    size_t row_bytes = png_get_rowbytes(g.png, g.info);
    std::vector<uint8_t> data(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = data.data() + y * row_bytes;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);
    return data;
}

uint16_t quantize16(double v01) {
    double q = std::lround(std::clamp(v01, 0.0, 1.0) * 65535.0);
    return uint16_t(q);
}

}  // namespace

void encode_normal_png(const Image& image, const std::string& path) {
    if (image.channels != 3) throw_data("encode_normal_png: need 3 channels");
    std::vector<uint16_t> buf(size_t(image.width) * image.height * 3);
    for (size_t i = 0; i < buf.size(); ++i)
        buf[i] = quantize16((image.data[i] + 1.0) * 0.5);
    write_png(path, image.width, image.height, 3, 16, buf.data(),
              size_t(image.width) * 3 * sizeof(uint16_t));
}

Image decode_normal_png(const std::string& path) {
    int w, h;
    std::vector<uint8_t> raw = read_png(path, 3, 16, w, h);
    const uint16_t* p = reinterpret_cast<const uint16_t*>(raw.data());
    Image img(w, h, 3);
    for (size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = 2.0 * double(p[i]) / 65535.0 - 1.0;
    return img;
}

void encode_mask_png(const Image& image, const std::string& path) {
    if (image.channels != 1) throw_data("encode_mask_png: need 1 channel");
    std::vector<uint8_t> buf(size_t(image.width) * image.height);
    for (size_t i = 0; i < buf.size(); ++i)
        buf[i] = uint8_t(std::lround(std::clamp(image.data[i], 0.0, 1.0) * 255.0));
    write_png(path, image.width, image.height, 1, 8, buf.data(), size_t(image.width));
}

Image decode_mask_png(const std::string& path) {
    int w, h;
    std::vector<uint8_t> raw = read_png(path, 1, 8, w, h);
    Image img(w, h, 1);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = double(raw[i]) / 255.0;
    return img;
}

void encode_depth_png(const Image& image, const std::string& path) {
    if (image.channels != 1) throw_data("encode_depth_png: need 1 channel");
    std::vector<uint16_t> buf(size_t(image.width) * image.height);
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = quantize16(image.data[i]);
    write_png(path, image.width, image.height, 1, 16, buf.data(),
              size_t(image.width) * sizeof(uint16_t));
}

Image decode_depth_png(const std::string& path) {
    int w, h;
    std::vector<uint8_t> raw = read_png(path, 1, 16, w, h);
    const uint16_t* p = reinterpret_cast<const uint16_t*>(raw.data());
    Image img(w, h, 1);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = double(p[i]) / 65535.0;
    return img;
}

}  // namespace meshrefine

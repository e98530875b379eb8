#pragma once

#include <string>
#include <utility>
#include <vector>

namespace meshrefine {

// Row-major floating point raster. channels is 1 (mask, depth, silhouette)
// or 3 (normals).
struct Image {
    int width = 0, height = 0, channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int ch, double fill = 0.0)
        : width(w), height(h), channels(ch), data(size_t(w) * h * ch, fill) {}

    double& at(int row, int col, int ch = 0) {
        return data[(size_t(row) * width + col) * channels + ch];
    }
    double at(int row, int col, int ch = 0) const {
        return data[(size_t(row) * width + col) * channels + ch];
    }
    size_t sample_count() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

// Separable Gaussian convolution, edge-clamped borders, kernel normalized to
// sum 1. kernel_size must be odd; kernel_size 1 is the identity.
Image gaussian_blur(const Image& image, int kernel_size, double sigma);

// The normalized 1-D kernel used by gaussian_blur.
std::vector<double> gaussian_kernel(int kernel_size, double sigma);

// Forward differences per channel: gx[r][c] = img[r][c+1] - img[r][c]
// (last column 0), gy analogous over rows.
std::pair<Image, Image> image_gradient(const Image& image);

// Sum of absolute differences over all samples (all channels).
double l1_diff(const Image& a, const Image& b);

// 16-bit RGB PNG; channel value = round((n+1)/2 * 65535). The zero vector
// (background) lands on mid-gray.
void encode_normal_png(const Image& image, const std::string& path);
Image decode_normal_png(const std::string& path);

// 8-bit grayscale PNG; 0 = background, 255 = foreground, soft values kept.
void encode_mask_png(const Image& image, const std::string& path);
Image decode_mask_png(const std::string& path);

// 16-bit grayscale PNG for depth control images; values expected in [0,1].
void encode_depth_png(const Image& image, const std::string& path);
Image decode_depth_png(const std::string& path);

}  // namespace meshrefine

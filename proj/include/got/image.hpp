#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace got {

/// Interleaved float image, values nominally in [0, 255].
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<std::size_t>(width) * height * channels, fill) {
        if (width < 0 || height < 0 || channels <= 0) {
            throw std::invalid_argument("Image: invalid dimensions");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }
    std::size_t size() const { return data_.size(); }

    float& at(int x, int y, int c = 0) {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    float at(int x, int y, int c = 0) const {
        assert(x >= 0 && x < width_ && y >= 0 && y < height_ && c >= 0 && c < channels_);
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    /// Pixel access with edge replication outside the image.
    float clamped(int x, int y, int c = 0) const {
        x = std::clamp(x, 0, width_ - 1);
        y = std::clamp(y, 0, height_ - 1);
        return at(x, y, c);
    }

    /// Bilinear sample at continuous index coordinates (pixel k sits at k),
    /// edge-replicated.
    float bilinear(double u, double v, int c = 0) const {
        const double fu = std::floor(u);
        const double fv = std::floor(v);
        const int x0 = static_cast<int>(fu);
        const int y0 = static_cast<int>(fv);
        const double ax = u - fu;
        const double ay = v - fv;
        const double top = (1.0 - ax) * clamped(x0, y0, c) + ax * clamped(x0 + 1, y0, c);
        const double bot = (1.0 - ax) * clamped(x0, y0 + 1, c) + ax * clamped(x0 + 1, y0 + 1, c);
        return static_cast<float>((1.0 - ay) * top + ay * bot);
    }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Luma (BT.601) of a 3-channel image; single-channel input is copied.
inline Image to_gray(const Image& img) {
    if (img.channels() == 1) return img;
    Image out(img.width(), img.height(), 1);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(x, y) = 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) +
                           0.114f * img.at(x, y, 2);
        }
    }
    return out;
}

/// Area-averaging downsample by an arbitrary factor in (0, 1].
inline Image downsample(const Image& img, double factor) {
    if (factor >= 1.0) return img;
    const int w = std::max(1, static_cast<int>(std::lround(img.width() * factor)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height() * factor)));
    Image out(w, h, img.channels());
    const double sx = static_cast<double>(img.width()) / w;
    const double sy = static_cast<double>(img.height()) / h;
    for (int y = 0; y < h; ++y) {
        const int y0 = static_cast<int>(std::floor(y * sy));
        const int y1 = std::max(y0 + 1, static_cast<int>(std::floor((y + 1) * sy)));
        for (int x = 0; x < w; ++x) {
            const int x0 = static_cast<int>(std::floor(x * sx));
            const int x1 = std::max(x0 + 1, static_cast<int>(std::floor((x + 1) * sx)));
            for (int c = 0; c < img.channels(); ++c) {
                double acc = 0.0;
                int n = 0;
                for (int yy = y0; yy < std::min(y1, img.height()); ++yy) {
                    for (int xx = x0; xx < std::min(x1, img.width()); ++xx) {
                        acc += img.at(xx, yy, c);
                        ++n;
                    }
                }
                out.at(x, y, c) = static_cast<float>(n > 0 ? acc / n : 0.0);
            }
        }
    }
    return out;
}

}  // namespace got

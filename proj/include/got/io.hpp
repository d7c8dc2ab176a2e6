#pragma once

// Image file I/O through OpenCV (RGB channel order in memory) and box drawing.

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "got/geometry.hpp"
#include "got/image.hpp"

namespace got {

inline Image load_image(const std::string& path) {
    const cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
    if (m.empty()) throw std::runtime_error("cannot read image " + path);
    Image img(m.cols, m.rows, 3);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<cv::Vec3b>(y);
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = row[x][2 - c];
    }
    return img;
}

/// Writes 8-bit BGR; values are rounded and clamped to [0, 255].
inline void save_image(const std::string& path, const Image& img) {
    if (img.channels() != 3 && img.channels() != 1) throw std::invalid_argument("save_image: 1 or 3 channels");
    cv::Mat m(img.height(), img.width(), img.channels() == 3 ? CV_8UC3 : CV_8UC1);
    for (int y = 0; y < img.height(); ++y) {
        auto* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                const int src = img.channels() == 3 ? 2 - c : 0;
                row[x * img.channels() + c] =
                    static_cast<unsigned char>(std::clamp(std::lround(img.at(x, y, src)), 0L, 255L));
            }
    }
    if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write image " + path);
}

/// Outline a box in place; the stroke lies inside the box.
inline void draw_box(Image& img, const BoundingBox& b, std::array<float, 3> color, int thickness = 2) {
    const int x0 = static_cast<int>(std::floor(b.x)), y0 = static_cast<int>(std::floor(b.y));
    const int x1 = static_cast<int>(std::ceil(b.right())) - 1, y1 = static_cast<int>(std::ceil(b.bottom())) - 1;
    auto put = [&](int x, int y) {
        if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
        for (int c = 0; c < std::min(3, img.channels()); ++c) img.at(x, y, c) = color[static_cast<std::size_t>(c)];
    };
    for (int k = 0; k < thickness; ++k) {
        for (int x = x0; x <= x1; ++x) {
            put(x, y0 + k);
            put(x, y1 - k);
        }
        for (int y = y0; y <= y1; ++y) {
            put(x0 + k, y);
            put(x1 - k, y);
        }
    }
}

}  // namespace got

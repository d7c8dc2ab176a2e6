#pragma once

// Felzenszwalb-Huttenlocher graph segmentation of the working patch and
// heat-map-guided grouping of segments into box proposals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "got/geometry.hpp"
#include "got/image.hpp"

namespace got {

struct SegmentMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;  // row-major, ids 0..count-1 in raster order of first pixel
    std::vector<int> sizes;

    int count() const { return static_cast<int>(sizes.size()); }
    int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

namespace detail {

class DisjointSet {
public:
    explicit DisjointSet(int n) : parent_(static_cast<std::size_t>(n)), size_(static_cast<std::size_t>(n), 1),
                                  internal_(static_cast<std::size_t>(n), 0.0) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[static_cast<std::size_t>(x)] != x) {
            parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
            x = parent_[static_cast<std::size_t>(x)];
        }
        return x;
    }
    /// Union by size; the merged component's internal difference becomes `w`.
    int join(int a, int b, double w) {
        if (size_[static_cast<std::size_t>(a)] < size_[static_cast<std::size_t>(b)]) std::swap(a, b);
        parent_[static_cast<std::size_t>(b)] = a;
        size_[static_cast<std::size_t>(a)] += size_[static_cast<std::size_t>(b)];
        internal_[static_cast<std::size_t>(a)] = w;
        return a;
    }
    int size(int x) const { return size_[static_cast<std::size_t>(x)]; }
    double internal(int x) const { return internal_[static_cast<std::size_t>(x)]; }

private:
    std::vector<int> parent_;
    std::vector<int> size_;
    std::vector<double> internal_;
};

struct Edge {
    double w;
    int a;
    int b;
};

inline Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[static_cast<std::size_t>(i + radius)];
    }
    for (auto& v : k) v /= sum;
    Image tmp(img.width(), img.height(), img.channels());
    Image out(img.width(), img.height(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * img.clamped(x + i, y, c);
                tmp.at(x, y, c) = static_cast<float>(acc);
            }
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) acc += k[static_cast<std::size_t>(i + radius)] * tmp.clamped(x, y + i, c);
                out.at(x, y, c) = static_cast<float>(acc);
            }
    return out;
}

}  // namespace detail

struct SegmentationParams {
    double k = 100.0;
    int min_size = 20;
    double sigma = 0.5;
};

/// Graph-based segmentation on the 8-connected pixel grid with Euclidean
/// color edge weights, merge predicate w <= Int(C) + k/|C|, then merging of
/// components smaller than min_size.
inline SegmentMap segment(const Image& img, const SegmentationParams& params = {}) {
    const Image smooth = detail::gaussian_blur(img, params.sigma);
    const int w = img.width(), h = img.height();
    auto id = [w](int x, int y) { return y * w + x; };
    auto dist = [&](int x0, int y0, int x1, int y1) {
        double s = 0.0;
        for (int c = 0; c < smooth.channels(); ++c) {
            const double d = smooth.at(x0, y0, c) - smooth.at(x1, y1, c);
            s += d * d;
        }
        return std::sqrt(s);
    };

    std::vector<detail::Edge> edges;
    edges.reserve(static_cast<std::size_t>(w) * h * 4);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (x + 1 < w) edges.push_back({dist(x, y, x + 1, y), id(x, y), id(x + 1, y)});
            if (y + 1 < h) edges.push_back({dist(x, y, x, y + 1), id(x, y), id(x, y + 1)});
            if (x + 1 < w && y + 1 < h) edges.push_back({dist(x, y, x + 1, y + 1), id(x, y), id(x + 1, y + 1)});
            if (x + 1 < w && y > 0) edges.push_back({dist(x, y, x + 1, y - 1), id(x, y), id(x + 1, y - 1)});
        }
    }
    std::stable_sort(edges.begin(), edges.end(), [](const detail::Edge& a, const detail::Edge& b) { return a.w < b.w; });

    detail::DisjointSet ds(w * h);
    for (const auto& e : edges) {
        const int a = ds.find(e.a), b = ds.find(e.b);
        if (a == b) continue;
        const double ta = ds.internal(a) + params.k / ds.size(a);
        const double tb = ds.internal(b) + params.k / ds.size(b);
        if (e.w <= ta && e.w <= tb) ds.join(a, b, e.w);
    }
    for (const auto& e : edges) {
        const int a = ds.find(e.a), b = ds.find(e.b);
        if (a != b && (ds.size(a) < params.min_size || ds.size(b) < params.min_size)) ds.join(a, b, e.w);
    }

    SegmentMap seg;
    seg.width = w;
    seg.height = h;
    seg.labels.assign(static_cast<std::size_t>(w) * h, -1);
    std::vector<int> root_to_id(static_cast<std::size_t>(w) * h, -1);
    for (int p = 0; p < w * h; ++p) {
        const int r = ds.find(p);
        int& sid = root_to_id[static_cast<std::size_t>(r)];
        if (sid < 0) {
            sid = seg.count();
            seg.sizes.push_back(0);
        }
        seg.labels[static_cast<std::size_t>(p)] = sid;
        ++seg.sizes[static_cast<std::size_t>(sid)];
    }
    return seg;
}

/// Mean of a per-pixel score map (rows = y) over each segment.
inline std::vector<double> segment_scores(const SegmentMap& seg, const Eigen::ArrayXXd& pixel_scores) {
    std::vector<double> acc(static_cast<std::size_t>(seg.count()), 0.0);
    for (int y = 0; y < seg.height; ++y)
        for (int x = 0; x < seg.width; ++x) acc[static_cast<std::size_t>(seg.at(x, y))] += pixel_scores(y, x);
    for (int s = 0; s < seg.count(); ++s) acc[static_cast<std::size_t>(s)] /= seg.sizes[static_cast<std::size_t>(s)];
    return acc;
}

inline const std::vector<double>& default_grouping_thresholds() {
    static const std::vector<double> t{0.3, 0.5, 0.7};
    return t;
}

/// Pixel mask (row-major) of the union of segments scoring >= tau.
inline std::vector<char> grouped_union(const SegmentMap& seg, const std::vector<double>& scores, double tau) {
    std::vector<char> mask(seg.labels.size(), 0);
    for (std::size_t p = 0; p < seg.labels.size(); ++p) mask[p] = scores[static_cast<std::size_t>(seg.labels[p])] >= tau;
    return mask;
}

inline std::optional<BoundingBox> mask_box(const std::vector<char>& mask, int width, int height) {
    int x0 = width, y0 = height, x1 = -1, y1 = -1;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (mask[static_cast<std::size_t>(y) * width + x]) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return BoundingBox{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 - x0 + 1),
                       static_cast<double>(y1 - y0 + 1)};
}

/// Superpixel proposals: for each threshold, the tight box of the union of
/// segments whose mean heat is at least the threshold. Duplicates dropped.
inline std::vector<BoundingBox> group_proposals(const SegmentMap& seg, const Eigen::ArrayXXd& pixel_heat,
                                                const std::vector<double>& thresholds = default_grouping_thresholds()) {
    const auto scores = segment_scores(seg, pixel_heat);
    std::vector<BoundingBox> out;
    for (double tau : thresholds) {
        const auto box = mask_box(grouped_union(seg, scores, tau), seg.width, seg.height);
        if (box && std::find(out.begin(), out.end(), *box) == out.end()) out.push_back(*box);
    }
    return out;
}

}  // namespace got

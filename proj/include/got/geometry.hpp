#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "got/image.hpp"

namespace got {

/// Side of the square working patch every region is warped into.
inline constexpr int kPatchSide = 60;
/// Nominal object extent inside the working patch.
inline constexpr double kObjectSide = 32.0;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned box. Continuous coordinates: pixel k spans [k, k+1).
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    Point2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }
    double area() const { return w * h; }
    double right() const { return x + w; }
    double bottom() const { return y + h; }
    bool valid() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
               w > 0.0 && h > 0.0;
    }

    static BoundingBox from_center(Point2 c, double w, double h) {
        return {c.x - 0.5 * w, c.y - 0.5 * h, w, h};
    }

    bool operator==(const BoundingBox&) const = default;
};

inline BoundingBox translated(BoundingBox b, double dx, double dy) {
    b.x += dx;
    b.y += dy;
    return b;
}

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    return iw * ih;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

inline double center_distance(const BoundingBox& a, const BoundingBox& b) {
    const Point2 ca = a.center();
    const Point2 cb = b.center();
    return std::hypot(ca.x - cb.x, ca.y - cb.y);
}

/// Thrown when a requested region does not intersect the frame at all.
class LostRegionError : public std::runtime_error {
public:
    LostRegionError() : std::runtime_error("lost region: box lies fully outside the frame") {}
};

/// Similarity transform between frame coordinates and a square patch:
/// frame = center + (patch - side/2) * scale.
struct WarpParams {
    Point2 center;
    double scale = 1.0;  // frame px per patch px
    int side = kPatchSide;

    Point2 to_frame(Point2 p) const {
        return {center.x + (p.x - 0.5 * side) * scale, center.y + (p.y - 0.5 * side) * scale};
    }
    Point2 to_patch(Point2 f) const {
        return {(f.x - center.x) / scale + 0.5 * side, (f.y - center.y) / scale + 0.5 * side};
    }
};

/// Crop geometry for a box: centered on it, side (60/32)·max(w,h).
inline WarpParams warp_params_for(const BoundingBox& box, int side = kPatchSide) {
    return {box.center(), std::max(box.w, box.h) / kObjectSide, side};
}

/// Frame box -> patch box.
inline BoundingBox warp_box(const BoundingBox& b, const WarpParams& p) {
    const Point2 tl = p.to_patch({b.x, b.y});
    return {tl.x, tl.y, b.w / p.scale, b.h / p.scale};
}

/// Patch box -> frame box.
inline BoundingBox unwarp_box(const BoundingBox& b, const WarpParams& p) {
    const Point2 tl = p.to_frame({b.x, b.y});
    return {tl.x, tl.y, b.w * p.scale, b.h * p.scale};
}

/// Bilinearly resample the crop described by `p` into an out_side x out_side
/// image. Out-of-frame pixels replicate the frame edge.
inline Image sample_region(const Image& frame, const WarpParams& p, int out_side) {
    Image out(out_side, out_side, frame.channels());
    const double step = static_cast<double>(p.side) / out_side;
    for (int j = 0; j < out_side; ++j) {
        const double py = (j + 0.5) * step;
        for (int i = 0; i < out_side; ++i) {
            const double px = (i + 0.5) * step;
            const Point2 f = p.to_frame({px, py});
            for (int c = 0; c < frame.channels(); ++c) {
                out.at(i, j, c) = frame.bilinear(f.x - 0.5, f.y - 0.5, c);
            }
        }
    }
    return out;
}

inline bool intersects_frame(const BoundingBox& box, int width, int height) {
    return intersection_area(box, BoundingBox{0.0, 0.0, static_cast<double>(width),
                                              static_cast<double>(height)}) > 0.0;
}

/// Warp the context region of `box` into the 60x60 working patch.
inline std::pair<Image, WarpParams> warp_region(const Image& frame, const BoundingBox& box) {
    if (!box.valid()) throw std::invalid_argument("warp_region: invalid box");
    if (!intersects_frame(box, frame.width(), frame.height())) throw LostRegionError();
    const WarpParams p = warp_params_for(box);
    return {sample_region(frame, p, kPatchSide), p};
}

}  // namespace got

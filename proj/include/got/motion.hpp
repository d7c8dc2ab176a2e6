#pragma once

// Background motion model of the global correlator: affine camera motion
// from grid block matching, the motion residual map, and salient-motion
// proposals.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "got/geometry.hpp"
#include "got/image.hpp"

namespace got {

/// x_t = a0 x + b0 y + c0 ;  y_t = a1 x + b1 y + c1
struct AffineMotion {
    double a0 = 1.0, b0 = 0.0, c0 = 0.0;
    double a1 = 0.0, b1 = 1.0, c1 = 0.0;

    static AffineMotion identity() { return {}; }
    Point2 apply(Point2 p) const { return {a0 * p.x + b0 * p.y + c0, a1 * p.x + b1 * p.y + c1}; }
    bool is_finite() const {
        return std::isfinite(a0) && std::isfinite(b0) && std::isfinite(c0) && std::isfinite(a1) &&
               std::isfinite(b1) && std::isfinite(c1);
    }
};

struct ResidualMap {
    Eigen::ArrayXXd values;     // rows = y, nonnegative
    double frame_scale = 1.0;   // residual px -> frame px
};

struct MotionParams {
    int max_width = 720;
    int max_height = 480;
    int grid = 16;
    int search_radius = 8;
    int block_radius = 4;
    double min_block_std = 2.0;  // skip textureless blocks
};

struct MotionEstimate {
    AffineMotion motion;
    ResidualMap residual;
    bool degenerate = false;
    int inliers = 0;
};

namespace detail {

struct Correspondence {
    Point2 from;
    Point2 to;
};

inline std::optional<AffineMotion> fit_affine(const std::vector<Correspondence>& pts) {
    if (pts.size() < 3) return std::nullopt;
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    Eigen::Vector3d bx = Eigen::Vector3d::Zero(), by = Eigen::Vector3d::Zero();
    for (const auto& p : pts) {
        const Eigen::Vector3d v(p.from.x, p.from.y, 1.0);
        A += v * v.transpose();
        bx += v * p.to.x;
        by += v * p.to.y;
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(A);
    const auto& s = svd.singularValues();
    if (s[2] <= 1e-9 * s[0]) return std::nullopt;  // collinear points
    const Eigen::Vector3d sx = A.ldlt().solve(bx);
    const Eigen::Vector3d sy = A.ldlt().solve(by);
    AffineMotion m{sx[0], sx[1], sx[2], sy[0], sy[1], sy[2]};
    if (!m.is_finite()) return std::nullopt;
    return m;
}

}  // namespace detail

/// Warp the previous frame by the motion and take the absolute difference
/// with the current one. Pixels whose source falls outside the previous
/// frame get zero residual.
inline Eigen::ArrayXXd motion_residual(const Image& prev_gray, const Image& cur_gray, const AffineMotion& m) {
    Eigen::ArrayXXd res = Eigen::ArrayXXd::Zero(cur_gray.height(), cur_gray.width());
    Eigen::Matrix2d L;
    L << m.a0, m.b0, m.a1, m.b1;
    if (std::abs(L.determinant()) < 1e-12) return res;
    const Eigen::Matrix2d Li = L.inverse();
    for (int y = 0; y < cur_gray.height(); ++y) {
        for (int x = 0; x < cur_gray.width(); ++x) {
            const Eigen::Vector2d src = Li * Eigen::Vector2d(x - m.c0, y - m.c1);
            if (src.x() < 0.0 || src.y() < 0.0 || src.x() > prev_gray.width() - 1 || src.y() > prev_gray.height() - 1) {
                continue;
            }
            res(y, x) = std::abs(prev_gray.bilinear(src.x(), src.y()) - cur_gray.at(x, y));
        }
    }
    return res;
}

/// Affine background motion from block matching on a regular grid,
/// least-squares fit with one outlier-rejection refit, then residual map.
inline MotionEstimate estimate_motion(const Image& prev, const Image& cur, const MotionParams& params = {}) {
    if (prev.width() != cur.width() || prev.height() != cur.height()) {
        throw std::invalid_argument("estimate_motion: frame size mismatch");
    }
    const double factor = std::min({1.0, static_cast<double>(params.max_width) / prev.width(),
                                    static_cast<double>(params.max_height) / prev.height()});
    const Image g0 = downsample(to_gray(prev), factor);
    const Image g1 = downsample(to_gray(cur), factor);
    const int W = g0.width(), H = g0.height();
    const int margin = params.block_radius + params.search_radius;

    std::vector<detail::Correspondence> pts;
    if (W > 2 * margin && H > 2 * margin) {
        for (int gy = 0; gy < params.grid; ++gy) {
            for (int gx = 0; gx < params.grid; ++gx) {
                const int px = margin + static_cast<int>((W - 2 * margin) * (gx + 0.5) / params.grid);
                const int py = margin + static_cast<int>((H - 2 * margin) * (gy + 0.5) / params.grid);
                double mean = 0.0, sq = 0.0;
                const int br = params.block_radius;
                const int n = (2 * br + 1) * (2 * br + 1);
                for (int y = -br; y <= br; ++y)
                    for (int x = -br; x <= br; ++x) {
                        const double v = g0.at(px + x, py + y);
                        mean += v;
                        sq += v * v;
                    }
                mean /= n;
                if (std::sqrt(std::max(0.0, sq / n - mean * mean)) < params.min_block_std) continue;

                auto sad = [&](int dx, int dy) {
                    double s = 0.0;
                    for (int y = -br; y <= br; ++y)
                        for (int x = -br; x <= br; ++x) s += std::abs(g0.at(px + x, py + y) - g1.clamped(px + x + dx, py + y + dy));
                    return s;
                };
                double best = sad(0, 0);
                int bdx = 0, bdy = 0;
                for (int dy = -params.search_radius; dy <= params.search_radius; ++dy)
                    for (int dx = -params.search_radius; dx <= params.search_radius; ++dx) {
                        const double s = sad(dx, dy);
                        if (s < best) {
                            best = s;
                            bdx = dx;
                            bdy = dy;
                        }
                    }
                pts.push_back({{static_cast<double>(px), static_cast<double>(py)},
                               {static_cast<double>(px + bdx), static_cast<double>(py + bdy)}});
            }
        }
    }

    MotionEstimate out;
    out.residual.frame_scale = 1.0 / factor;
    auto fit = detail::fit_affine(pts);
    if (fit) {
        std::vector<double> err;
        for (const auto& p : pts) {
            const Point2 q = fit->apply(p.from);
            err.push_back(std::hypot(q.x - p.to.x, q.y - p.to.y));
        }
        std::vector<double> sorted = err;
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
        const double cut = std::max(1.0, 3.0 * sorted[sorted.size() / 2]);
        std::vector<detail::Correspondence> kept;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (err[i] <= cut) kept.push_back(pts[i]);
        if (auto refit = detail::fit_affine(kept)) {
            fit = refit;
            out.inliers = static_cast<int>(kept.size());
        } else {
            out.inliers = static_cast<int>(pts.size());
        }
        out.motion = *fit;
    } else {
        out.motion = AffineMotion::identity();
        out.degenerate = true;
    }
    out.residual.values = motion_residual(g0, g1, out.motion);
    return out;
}

/// Tight frame box of the largest 8-connected component of the residual
/// above mean + 2·std; none when that component is under `min_area` px.
inline std::optional<BoundingBox> motion_proposal(const ResidualMap& r, int min_area = 25) {
    const Eigen::ArrayXXd& v = r.values;
    if (v.size() == 0) return std::nullopt;
    const double mean = v.mean();
    const double stdev = std::sqrt(std::max(0.0, (v - mean).square().mean()));
    if (stdev <= 0.0) return std::nullopt;
    const double thr = mean + 2.0 * stdev;
    const int rows = static_cast<int>(v.rows()), cols = static_cast<int>(v.cols());
    std::vector<int> label(static_cast<std::size_t>(rows) * cols, -1);
    std::vector<std::pair<int, int>> stack;
    int best_area = 0;
    int bx0 = 0, by0 = 0, bx1 = 0, by1 = 0;
    int next_id = 0;
    for (int y = 0; y < rows; ++y) {
        for (int x = 0; x < cols; ++x) {
            if (!(v(y, x) > thr) || label[static_cast<std::size_t>(y) * cols + x] >= 0) continue;
            int area = 0, x0 = x, y0 = y, x1 = x, y1 = y;
            label[static_cast<std::size_t>(y) * cols + x] = next_id;
            stack.push_back({x, y});
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                ++area;
                x0 = std::min(x0, cx);
                y0 = std::min(y0, cy);
                x1 = std::max(x1, cx);
                y1 = std::max(y1, cy);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= cols || ny >= rows) continue;
                        auto& l = label[static_cast<std::size_t>(ny) * cols + nx];
                        if (l < 0 && v(ny, nx) > thr) {
                            l = next_id;
                            stack.push_back({nx, ny});
                        }
                    }
            }
            ++next_id;
            if (area > best_area) {
                best_area = area;
                bx0 = x0;
                by0 = y0;
                bx1 = x1;
                by1 = y1;
            }
        }
    }
    if (best_area < min_area) return std::nullopt;
    const double s = r.frame_scale;
    return BoundingBox{bx0 * s, by0 * s, (bx1 - bx0 + 1) * s, (by1 - by0 + 1) * s};
}

}  // namespace got

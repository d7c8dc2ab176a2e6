#pragma once

// Objectness heat map on the 27x27 block grid: assembly, noise suppression
// against the shape template, template update, box extraction and quality
// diagnostics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "got/features.hpp"
#include "got/geometry.hpp"

namespace got {

/// Grid cell (row i, col j) holds the block whose top-left is (2j, 2i).
using HeatMap = Eigen::ArrayXXd;
using ShapeTemplate = Eigen::ArrayXXd;

/// Patch-space center of grid cell index k (row or column).
inline constexpr double cell_center(int k) { return kBlockStride * k + 0.5 * kBlockSide; }

inline HeatMap assemble(const std::vector<double>& probs) {
    if (probs.size() != static_cast<std::size_t>(kBlockCount)) {
        throw std::invalid_argument("assemble: expected 729 probabilities");
    }
    HeatMap m(kGridSide, kGridSide);
    for (int i = 0; i < kGridSide; ++i)
        for (int j = 0; j < kGridSide; ++j) m(i, j) = probs[static_cast<std::size_t>(i * kGridSide + j)];
    return m;
}

/// Template S_0: 1 on cells whose center lies inside `box` (patch coords).
inline ShapeTemplate initial_template(const BoundingBox& box) {
    ShapeTemplate s = ShapeTemplate::Zero(kGridSide, kGridSide);
    for (int i = 0; i < kGridSide; ++i) {
        for (int j = 0; j < kGridSide; ++j) {
            const double cx = cell_center(j), cy = cell_center(i);
            if (cx >= box.x && cx < box.right() && cy >= box.y && cy < box.bottom()) s(i, j) = 1.0;
        }
    }
    return s;
}

/// P* = P · S where S < 0.5, P elsewhere.
inline HeatMap suppress(const HeatMap& p, const ShapeTemplate& s_prev) {
    return (s_prev < 0.5).select(p * s_prev, p);
}

/// Closed-form minimizer of ||X - P*||² + μ²||X - S||²:
/// X = P*/(1+μ²) + μ² S/(1+μ²).
inline ShapeTemplate update_template(const HeatMap& p_star, const ShapeTemplate& s_prev, double mu = 5.0) {
    const double m2 = mu * mu;
    return p_star / (1.0 + m2) + (m2 / (1.0 + m2)) * s_prev;
}

/// Circular shift: out(i + dy, j + dx) = in(i, j).
inline ShapeTemplate align(const ShapeTemplate& s, int dx, int dy) {
    const Eigen::Index rows = s.rows(), cols = s.cols();
    ShapeTemplate out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            const Eigen::Index ti = ((i + dy) % rows + rows) % rows;
            const Eigen::Index tj = ((j + dx) % cols + cols) % cols;
            out(ti, tj) = s(i, j);
        }
    }
    return out;
}

struct Component {
    std::vector<std::pair<int, int>> cells;  // (row, col)
    int min_row = 0, max_row = 0, min_col = 0, max_col = 0;

    std::size_t size() const { return cells.size(); }
};

/// 4-connected components of a boolean grid, ordered by first cell in
/// raster order.
inline std::vector<Component> connected_components(const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& mask) {
    const int rows = static_cast<int>(mask.rows()), cols = static_cast<int>(mask.cols());
    std::vector<int> label(static_cast<std::size_t>(rows) * cols, -1);
    std::vector<Component> comps;
    std::vector<std::pair<int, int>> stack;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            if (!mask(i, j) || label[static_cast<std::size_t>(i) * cols + j] >= 0) continue;
            Component c;
            c.min_row = c.max_row = i;
            c.min_col = c.max_col = j;
            const int id = static_cast<int>(comps.size());
            stack.push_back({i, j});
            label[static_cast<std::size_t>(i) * cols + j] = id;
            while (!stack.empty()) {
                auto [r, q] = stack.back();
                stack.pop_back();
                c.cells.push_back({r, q});
                c.min_row = std::min(c.min_row, r);
                c.max_row = std::max(c.max_row, r);
                c.min_col = std::min(c.min_col, q);
                c.max_col = std::max(c.max_col, q);
                constexpr int dr[4] = {-1, 1, 0, 0};
                constexpr int dc[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int nr = r + dr[k], nc = q + dc[k];
                    if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
                    auto& l = label[static_cast<std::size_t>(nr) * cols + nc];
                    if (mask(nr, nc) && l < 0) {
                        l = id;
                        stack.push_back({nr, nc});
                    }
                }
            }
            comps.push_back(std::move(c));
        }
    }
    return comps;
}

/// Patch-space box covered by a span of grid cells; each cell stands for
/// the stride-sized interval around its block center.
inline BoundingBox cells_to_box(int min_row, int max_row, int min_col, int max_col) {
    const double half = 0.5 * kBlockStride;
    const double x0 = cell_center(min_col) - half;
    const double y0 = cell_center(min_row) - half;
    return {x0, y0, cell_center(max_col) + half - x0, cell_center(max_row) + half - y0};
}

/// Tight box around the largest 4-connected component of {P* >= θ}.
/// Ties between equal-size components go to the first in raster order.
inline std::optional<BoundingBox> extract_box(const HeatMap& p_star, double theta = 0.5) {
    const auto comps = connected_components(p_star >= theta);
    if (comps.empty()) return std::nullopt;
    const Component* best = &comps.front();
    for (const auto& c : comps)
        if (c.size() > best->size()) best = &c;
    return cells_to_box(best->min_row, best->max_row, best->min_col, best->max_col);
}

/// Mean of the map over cells whose center falls inside `box`; 0 when none.
inline double mean_inside(const HeatMap& p, const BoundingBox& box) {
    double acc = 0.0;
    int n = 0;
    for (int i = 0; i < p.rows(); ++i) {
        const double cy = cell_center(i);
        if (cy < box.y || cy >= box.bottom()) continue;
        for (int j = 0; j < p.cols(); ++j) {
            const double cx = cell_center(j);
            if (cx < box.x || cx >= box.right()) continue;
            acc += p(i, j);
            ++n;
        }
    }
    return n > 0 ? acc / n : 0.0;
}

/// Bilinear upsampling of the grid to patch pixels (60x60, row = y).
inline Eigen::ArrayXXd upsample_to_patch(const HeatMap& m) {
    Eigen::ArrayXXd out(kPatchSide, kPatchSide);
    const int last = static_cast<int>(m.rows()) - 1;
    for (int y = 0; y < kPatchSide; ++y) {
        const double gy = std::clamp((y + 0.5 - 0.5 * kBlockSide) / kBlockStride, 0.0, static_cast<double>(last));
        const int y0 = std::min(static_cast<int>(gy), last - 1);
        const double ay = gy - y0;
        for (int x = 0; x < kPatchSide; ++x) {
            const double gx = std::clamp((x + 0.5 - 0.5 * kBlockSide) / kBlockStride, 0.0, static_cast<double>(last));
            const int x0 = std::min(static_cast<int>(gx), last - 1);
            const double ax = gx - x0;
            out(y, x) = (1 - ay) * ((1 - ax) * m(y0, x0) + ax * m(y0, x0 + 1)) +
                        ay * ((1 - ax) * m(y0 + 1, x0) + ax * m(y0 + 1, x0 + 1));
        }
    }
    return out;
}

// ---- Quality control diagnostics -----------------------------------------

struct QualityThresholds {
    double min_area = 0.03;
    double max_area = 0.75;
    double blob_ratio = 0.2;      // significant blob: >= this fraction of the largest
    int max_significant_blobs = 1;
    double max_size_cov = 0.15;
    std::size_t history = 5;
};

enum class QualityVerdict { stable, unsteady, too_small, too_large, fragmented };

inline bool is_failure(QualityVerdict v) {
    return v == QualityVerdict::too_small || v == QualityVerdict::too_large || v == QualityVerdict::fragmented;
}

inline const char* to_string(QualityVerdict v) {
    switch (v) {
        case QualityVerdict::stable: return "stable";
        case QualityVerdict::unsteady: return "unsteady";
        case QualityVerdict::too_small: return "too_small";
        case QualityVerdict::too_large: return "too_large";
        case QualityVerdict::fragmented: return "fragmented";
    }
    return "?";
}

struct QualityReport {
    double area_fraction = 0.0;
    int significant_components = 0;
    double size_variation = 0.0;  // max coefficient of variation of recent w, h
    QualityVerdict verdict = QualityVerdict::stable;
};

inline double coefficient_of_variation(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (mean <= 0.0) return 0.0;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return std::sqrt(var) / mean;
}

/// Blob-level checks on {P* > 0.5} plus size steadiness of the recent
/// objectness boxes (newest last).
inline QualityReport quality_check(const HeatMap& p_star, const std::deque<BoundingBox>& box_history,
                                   const QualityThresholds& t = {}) {
    QualityReport r;
    const auto mask = (p_star > 0.5).eval();
    r.area_fraction = static_cast<double>(mask.count()) / static_cast<double>(p_star.size());
    const auto comps = connected_components(mask);
    std::size_t largest = 0;
    for (const auto& c : comps) largest = std::max(largest, c.size());
    for (const auto& c : comps)
        if (static_cast<double>(c.size()) >= t.blob_ratio * static_cast<double>(largest)) ++r.significant_components;

    std::vector<double> ws, hs;
    const std::size_t start = box_history.size() > t.history ? box_history.size() - t.history : 0;
    for (std::size_t i = start; i < box_history.size(); ++i) {
        ws.push_back(box_history[i].w);
        hs.push_back(box_history[i].h);
    }
    r.size_variation = std::max(coefficient_of_variation(ws), coefficient_of_variation(hs));

    if (r.area_fraction < t.min_area) {
        r.verdict = QualityVerdict::too_small;
    } else if (r.area_fraction > t.max_area) {
        r.verdict = QualityVerdict::too_large;
    } else if (r.significant_components > t.max_significant_blobs) {
        r.verdict = QualityVerdict::fragmented;
    } else if (r.size_variation >= t.max_size_cov) {
        r.verdict = QualityVerdict::unsteady;
    } else {
        r.verdict = QualityVerdict::stable;
    }
    return r;
}

}  // namespace got

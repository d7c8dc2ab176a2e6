#pragma once

// Proposal fusion: superpixel proposal selection, simple IoU/probability
// fusion, MRF-mask fusion, the quality-control mode machine and
// re-identification scoring.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "got/dcf.hpp"
#include "got/geometry.hpp"
#include "got/heatmap.hpp"
#include "got/image.hpp"

namespace got {

struct FusionConfig {
    double alpha = 0.7;              // agreement threshold for simple fusion
    double size_tolerance = 0.2;     // per-axis relative size change counted as stable
    double mrf_gamma = 2.0;          // pairwise scale
    double mrf_sigma = 12.0;         // color sigma, intensity units
    int gmm_components = 3;
    int gmm_iterations = 10;
    int background_ring = 6;         // px around x_dcf used for background colors
    double objectness_clamp = 0.02;  // p_obj clamped to [c, 1 - c]
    double max_mask_coverage = 0.9;
};

/// λ of the selection rule: the DCF/objectness agreement, clamped to [0,1].
inline double adaptive_weight(const BoundingBox& x_dcf, const std::optional<BoundingBox>& x_obj) {
    if (!x_obj) return 0.0;
    return std::clamp(iou(x_dcf, *x_obj), 0.0, 1.0);
}

/// argmax over χ_spp of IoU(x, x_dcf) + λ IoU(x, x_obj). First wins ties.
inline std::optional<BoundingBox> select_spp(const std::vector<BoundingBox>& spp, const BoundingBox& x_dcf,
                                             const std::optional<BoundingBox>& x_obj) {
    if (spp.empty()) return std::nullopt;
    const double lambda = adaptive_weight(x_dcf, x_obj);
    std::optional<BoundingBox> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const auto& x : spp) {
        const double s = iou(x, x_dcf) + (x_obj ? lambda * iou(x, *x_obj) : 0.0);
        if (s > best_score) {
            best_score = s;
            best = x;
        }
    }
    return best;
}

inline bool size_stable(const BoundingBox& x, const BoundingBox& prev, double tolerance) {
    return std::abs(x.w - prev.w) / prev.w <= tolerance && std::abs(x.h - prev.h) / prev.h <= tolerance;
}

/// Minimum pairwise IoU among the available proposals.
inline double min_pairwise_iou(const std::vector<BoundingBox>& boxes) {
    double m = 1.0;
    for (std::size_t i = 0; i < boxes.size(); ++i)
        for (std::size_t j = i + 1; j < boxes.size(); ++j) m = std::min(m, iou(boxes[i], boxes[j]));
    return m;
}

/// The two simple-fusion steps, without the agreement precondition:
/// pick the flexible proposal closest to x_dcf, keep it if its size is
/// stable or it holds more objectness than x_dcf, otherwise keep x_dcf.
inline BoundingBox simple_fusion_steps(const BoundingBox& x_dcf, const BoundingBox& x_obj,
                                       const std::optional<BoundingBox>& x_spp, const HeatMap& p_star,
                                       const BoundingBox& x_prev, const FusionConfig& cfg = {}) {
    BoundingBox x_df = x_obj;
    if (x_spp && iou(*x_spp, x_dcf) > iou(x_obj, x_dcf)) x_df = *x_spp;
    if (size_stable(x_df, x_prev, cfg.size_tolerance) || mean_inside(p_star, x_df) > mean_inside(p_star, x_dcf)) {
        return x_df;
    }
    return x_dcf;
}

/// Simple fusion; requires min pairwise IoU >= α.
inline BoundingBox simple_fuse(const BoundingBox& x_dcf, const BoundingBox& x_obj, const std::optional<BoundingBox>& x_spp,
                               const HeatMap& p_star, const BoundingBox& x_prev, const FusionConfig& cfg = {}) {
    std::vector<BoundingBox> all{x_dcf, x_obj};
    if (x_spp) all.push_back(*x_spp);
    if (min_pairwise_iou(all) < cfg.alpha) {
        throw std::logic_error("simple_fuse: proposals disagree; use the MRF path");
    }
    return simple_fusion_steps(x_dcf, x_obj, x_spp, p_star, x_prev, cfg);
}

// ---- Gaussian mixture color model ----------------------------------------

struct DiagonalGmm {
    std::vector<double> weights;
    std::vector<std::array<double, 3>> means;
    std::vector<std::array<double, 3>> variances;

    double log_likelihood(const std::array<double, 3>& c) const {
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(weights.size());
        for (std::size_t k = 0; k < weights.size(); ++k) {
            double t = std::log(weights[k]);
            for (int d = 0; d < 3; ++d) {
                const double diff = c[d] - means[k][d];
                t += -0.5 * std::log(2.0 * std::numbers::pi * variances[k][d]) - 0.5 * diff * diff / variances[k][d];
            }
            terms[k] = t;
            mx = std::max(mx, t);
        }
        double s = 0.0;
        for (double t : terms) s += std::exp(t - mx);
        return mx + std::log(s);
    }
};

/// EM fit of a diagonal-covariance mixture. Components are seeded from
/// luminance-sorted equal chunks. None when there are fewer than two
/// samples per component.
inline std::optional<DiagonalGmm> fit_gmm(const std::vector<std::array<double, 3>>& samples, int components,
                                          int iterations, double var_floor = 4.0) {
    const std::size_t n = samples.size();
    const auto K = static_cast<std::size_t>(components);
    if (components <= 0 || n < 2 * K) return std::nullopt;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto luma = [&](std::size_t i) { return 0.299 * samples[i][0] + 0.587 * samples[i][1] + 0.114 * samples[i][2]; };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return luma(a) < luma(b); });

    DiagonalGmm g;
    g.weights.assign(K, 1.0 / static_cast<double>(K));
    g.means.assign(K, {});
    g.variances.assign(K, {});
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t lo = k * n / K, hi = (k + 1) * n / K;
        std::array<double, 3> m{}, v{};
        for (std::size_t i = lo; i < hi; ++i)
            for (int d = 0; d < 3; ++d) m[d] += samples[order[i]][d];
        for (int d = 0; d < 3; ++d) m[d] /= static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i)
            for (int d = 0; d < 3; ++d) v[d] += (samples[order[i]][d] - m[d]) * (samples[order[i]][d] - m[d]);
        for (int d = 0; d < 3; ++d) v[d] = std::max(var_floor, v[d] / static_cast<double>(hi - lo));
        g.means[k] = m;
        g.variances[k] = v;
    }

    std::vector<double> resp(n * K);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k) {
                double t = std::log(g.weights[k]);
                for (int d = 0; d < 3; ++d) {
                    const double diff = samples[i][d] - g.means[k][d];
                    t += -0.5 * std::log(g.variances[k][d]) - 0.5 * diff * diff / g.variances[k][d];
                }
                resp[i * K + k] = t;
                mx = std::max(mx, t);
            }
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) s += (resp[i * K + k] = std::exp(resp[i * K + k] - mx));
            for (std::size_t k = 0; k < K; ++k) resp[i * K + k] /= s;
        }
        for (std::size_t k = 0; k < K; ++k) {
            double nk = 0.0;
            std::array<double, 3> m{}, v{};
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * K + k];
                for (int d = 0; d < 3; ++d) m[d] += resp[i * K + k] * samples[i][d];
            }
            if (nk < 1e-9) continue;  // keep the previous parameters of an empty component
            for (int d = 0; d < 3; ++d) m[d] /= nk;
            for (std::size_t i = 0; i < n; ++i)
                for (int d = 0; d < 3; ++d) v[d] += resp[i * K + k] * (samples[i][d] - m[d]) * (samples[i][d] - m[d]);
            for (int d = 0; d < 3; ++d) v[d] = std::max(var_floor, v[d] / nk);
            g.weights[k] = nk / static_cast<double>(n);
            g.means[k] = m;
            g.variances[k] = v;
        }
    }
    return g;
}

// ---- MRF ------------------------------------------------------------------

/// Binary labelling energy on the pixel grid: unary costs plus Potts
/// penalties on the 4-connected neighbourhood.
struct MrfProblem {
    Eigen::ArrayXXd unary_bg;  // rows = y
    Eigen::ArrayXXd unary_fg;
    Eigen::ArrayXXd w_right;   // (y, x) -> (y, x+1)
    Eigen::ArrayXXd w_down;    // (y, x) -> (y+1, x)

    int rows() const { return static_cast<int>(unary_bg.rows()); }
    int cols() const { return static_cast<int>(unary_bg.cols()); }
};

using MrfLabels = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

inline double mrf_energy(const MrfProblem& p, const MrfLabels& l) {
    double e = 0.0;
    for (int y = 0; y < p.rows(); ++y)
        for (int x = 0; x < p.cols(); ++x) {
            e += l(y, x) ? p.unary_fg(y, x) : p.unary_bg(y, x);
            if (x + 1 < p.cols() && l(y, x) != l(y, x + 1)) e += p.w_right(y, x);
            if (y + 1 < p.rows() && l(y, x) != l(y + 1, x)) e += p.w_down(y, x);
        }
    return e;
}

/// Label each pixel by its cheaper unary term (ties -> background).
inline MrfLabels unary_argmin(const MrfProblem& p) {
    MrfLabels l(p.rows(), p.cols());
    for (int y = 0; y < p.rows(); ++y)
        for (int x = 0; x < p.cols(); ++x) l(y, x) = p.unary_fg(y, x) < p.unary_bg(y, x) ? 1 : 0;
    return l;
}

/// One raster-order sweep of local label updates. Each update picks the
/// label with the lower conditional energy (ties keep the current label),
/// so the total energy never increases.
inline void local_update_sweep(const MrfProblem& p, MrfLabels& l) {
    for (int y = 0; y < p.rows(); ++y) {
        for (int x = 0; x < p.cols(); ++x) {
            double cost[2] = {p.unary_bg(y, x), p.unary_fg(y, x)};
            auto add = [&](int ny, int nx, double w) {
                const int other = l(ny, nx);
                cost[1 - other] += w;
            };
            if (x > 0) add(y, x - 1, p.w_right(y, x - 1));
            if (x + 1 < p.cols()) add(y, x + 1, p.w_right(y, x));
            if (y > 0) add(y - 1, x, p.w_down(y - 1, x));
            if (y + 1 < p.rows()) add(y + 1, x, p.w_down(y, x));
            const int cur = l(y, x);
            if (cost[1 - cur] < cost[cur]) l(y, x) = static_cast<std::uint8_t>(1 - cur);
        }
    }
}

inline std::array<double, 3> pixel_color(const Image& img, int x, int y) {
    return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
}

/// Build the MRF: color likelihoods from foreground (inside x_dcf) and
/// background (ring around x_dcf) mixtures, objectness from the heat map.
/// None when either mixture cannot be fitted.
inline std::optional<MrfProblem> build_mrf(const Image& patch, const Eigen::ArrayXXd& heat_pixel, const BoundingBox& x_dcf,
                                           const FusionConfig& cfg = {}) {
    const int w = patch.width(), h = patch.height();
    std::vector<std::array<double, 3>> fg, bg;
    const double r = cfg.background_ring;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double cx = x + 0.5, cy = y + 0.5;
            const bool inside = cx >= x_dcf.x && cx < x_dcf.right() && cy >= x_dcf.y && cy < x_dcf.bottom();
            const bool in_ring = !inside && cx >= x_dcf.x - r && cx < x_dcf.right() + r && cy >= x_dcf.y - r &&
                                 cy < x_dcf.bottom() + r;
            if (inside) fg.push_back(pixel_color(patch, x, y));
            else if (in_ring) bg.push_back(pixel_color(patch, x, y));
        }
    }
    const auto gfg = fit_gmm(fg, cfg.gmm_components, cfg.gmm_iterations);
    const auto gbg = fit_gmm(bg, cfg.gmm_components, cfg.gmm_iterations);
    if (!gfg || !gbg) return std::nullopt;

    MrfProblem p;
    p.unary_bg.resize(h, w);
    p.unary_fg.resize(h, w);
    p.w_right = Eigen::ArrayXXd::Zero(h, w);
    p.w_down = Eigen::ArrayXXd::Zero(h, w);
    constexpr double eps = 1e-6;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto c = pixel_color(patch, x, y);
            const double lf = gfg->log_likelihood(c), lb = gbg->log_likelihood(c);
            const double pc = std::clamp(1.0 / (1.0 + std::exp(lb - lf)), eps, 1.0 - eps);
            const double po = std::clamp(heat_pixel(y, x), cfg.objectness_clamp, 1.0 - cfg.objectness_clamp);
            p.unary_fg(y, x) = -std::log(pc) - std::log(po);
            p.unary_bg(y, x) = -std::log(1.0 - pc) - std::log(1.0 - po);
        }
    }
    auto weight = [&](int x0, int y0, int x1, int y1) {
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = patch.at(x0, y0, c) - patch.at(x1, y1, c);
            d2 += d * d;
        }
        return cfg.mrf_gamma * std::exp(-d2 / (2.0 * cfg.mrf_sigma * cfg.mrf_sigma));
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x + 1 < w) p.w_right(y, x) = weight(x, y, x + 1, y);
            if (y + 1 < h) p.w_down(y, x) = weight(x, y, x, y + 1);
        }
    return p;
}

struct MrfMask {
    MrfLabels labels;
    BoundingBox wrapping_box;
    double coverage = 0.0;
};

/// Rough foreground mask from one local-update sweep after unary
/// initialization. None if the model cannot be built, or the mask is empty
/// or covers more than the allowed fraction of the patch.
inline std::optional<MrfMask> mrf_label(const Image& patch, const Eigen::ArrayXXd& heat_pixel, const BoundingBox& x_dcf,
                                        const FusionConfig& cfg = {}) {
    const auto problem = build_mrf(patch, heat_pixel, x_dcf, cfg);
    if (!problem) return std::nullopt;
    MrfMask m;
    m.labels = unary_argmin(*problem);
    local_update_sweep(*problem, m.labels);
    const auto count = static_cast<double>((m.labels != 0).count());
    m.coverage = count / static_cast<double>(m.labels.size());
    if (count == 0.0 || m.coverage > cfg.max_mask_coverage) return std::nullopt;
    int x0 = problem->cols(), y0 = problem->rows(), x1 = -1, y1 = -1;
    for (int y = 0; y < problem->rows(); ++y)
        for (int x = 0; x < problem->cols(); ++x)
            if (m.labels(y, x)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    m.wrapping_box = {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1 - x0 + 1),
                      static_cast<double>(y1 - y0 + 1)};
    return m;
}

// ---- Full fusion ----------------------------------------------------------

enum class FusionPath { dcf_only, simple, mrf, mrf_fallback };

inline const char* to_string(FusionPath p) {
    switch (p) {
        case FusionPath::dcf_only: return "dcf_only";
        case FusionPath::simple: return "simple";
        case FusionPath::mrf: return "mrf";
        case FusionPath::mrf_fallback: return "mrf_fallback";
    }
    return "?";
}

/// Everything in working-patch coordinates.
struct FusionInputs {
    BoundingBox x_dcf;
    std::optional<BoundingBox> x_obj;
    std::vector<BoundingBox> spp;
    HeatMap p_star;
    BoundingBox x_prev;
    const Image* patch = nullptr;                // required for the MRF path
    const Eigen::ArrayXXd* heat_pixel = nullptr;  // required for the MRF path
};

struct FusionResult {
    BoundingBox box;
    FusionPath path = FusionPath::dcf_only;
    std::optional<BoundingBox> x_spp;
    std::optional<BoundingBox> x_mrf;
};

/// Proposal fusion: the simple path when all proposals agree to within α,
/// otherwise the proposal best matching the MRF mask, falling back to the
/// simple steps when the MRF fails.
inline FusionResult fuse(const FusionInputs& in, const FusionConfig& cfg = {}) {
    FusionResult out;
    if (!in.x_obj) {
        out.box = in.x_dcf;
        out.path = FusionPath::dcf_only;
        return out;
    }
    out.x_spp = select_spp(in.spp, in.x_dcf, in.x_obj);
    std::vector<BoundingBox> trio{in.x_dcf, *in.x_obj};
    if (out.x_spp) trio.push_back(*out.x_spp);
    const bool agree = min_pairwise_iou(trio) >= cfg.alpha;

    if (!agree) {
        if (in.patch && in.heat_pixel) {
            if (auto mask = mrf_label(*in.patch, *in.heat_pixel, in.x_dcf, cfg)) {
                out.x_mrf = mask->wrapping_box;
                std::vector<BoundingBox> candidates{in.x_dcf, *in.x_obj};
                candidates.insert(candidates.end(), in.spp.begin(), in.spp.end());
                BoundingBox best = candidates.front();
                double best_iou = -1.0;
                for (const auto& c : candidates) {
                    const double v = iou(c, *out.x_mrf);
                    if (v > best_iou) {
                        best_iou = v;
                        best = c;
                    }
                }
                out.box = best;
                out.path = FusionPath::mrf;
                return out;
            }
        }
        out.path = FusionPath::mrf_fallback;
    } else {
        out.path = FusionPath::simple;
    }
    out.box = simple_fusion_steps(in.x_dcf, *in.x_obj, out.x_spp, in.p_star, in.x_prev, cfg);
    return out;
}

// ---- Quality-control mode machine ----------------------------------------

enum class TrackerMode { fusion_on, dcf_only };

inline const char* to_string(TrackerMode m) { return m == TrackerMode::fusion_on ? "fusion_on" : "dcf_only"; }

struct ModeState {
    TrackerMode mode = TrackerMode::fusion_on;
    int frames_in_mode = 0;
    int stable_streak = 0;
};

struct ModeTransition {
    ModeState state;
    bool reentered = false;  // DCF_ONLY -> FUSION_ON on this step
};

/// FUSION_ON drops to DCF_ONLY on any failed report; DCF_ONLY returns after
/// `required_stable` consecutive stable reports.
inline ModeTransition quality_control_step(const QualityReport& report, ModeState s, int required_stable = 5) {
    ModeTransition t;
    if (s.mode == TrackerMode::fusion_on) {
        if (is_failure(report.verdict)) {
            s = {TrackerMode::dcf_only, 0, 0};
        } else {
            ++s.frames_in_mode;
        }
    } else {
        s.stable_streak = report.verdict == QualityVerdict::stable ? s.stable_streak + 1 : 0;
        ++s.frames_in_mode;
        if (s.stable_streak >= required_stable) {
            s = {TrackerMode::fusion_on, 0, 0};
            t.reentered = true;
        }
    }
    t.state = s;
    return t;
}

// ---- Re-identification ----------------------------------------------------

struct ReidCandidate {
    BoundingBox box;         // frame coordinates
    FeatureMap appearance;   // DCF feature map of the region
    double objectness = 0.0; // mean objectness inside the box
};

struct ReidContext {
    const FeatureMap* template_map = nullptr;  // DCF appearance template
    double lambda = 0.0;                       // adaptive objectness weight
    Point2 predicted_center;                   // frame coordinates
    double frame_per_patch = 1.0;              // frame px per working-patch px
    double patch_side = kPatchSide;
};

/// Linear extrapolation of the last two centers, `steps` frames past the last.
inline Point2 predict_center(const Point2& before_last, const Point2& last, double steps = 1.0) {
    return {last.x + steps * (last.x - before_last.x), last.y + steps * (last.y - before_last.y)};
}

/// cosine(f(x), f_prev) + λ S_obj(x) - ||x_ct - x̂_ct||² / L_B², distances
/// measured in working-patch pixels.
inline double reid_score(const ReidCandidate& c, const ReidContext& ctx) {
    const double appearance = ctx.template_map ? map_cosine(c.appearance, *ctx.template_map) : 0.0;
    const Point2 ct = c.box.center();
    const double dx = (ct.x - ctx.predicted_center.x) / ctx.frame_per_patch;
    const double dy = (ct.y - ctx.predicted_center.y) / ctx.frame_per_patch;
    return appearance + ctx.lambda * c.objectness - (dx * dx + dy * dy) / (ctx.patch_side * ctx.patch_side);
}

/// Keep the DCF proposal unless the motion proposal scores strictly higher.
inline BoundingBox reid_choose(const ReidCandidate& dcf, const std::optional<ReidCandidate>& motion, const ReidContext& ctx) {
    if (!motion) return dcf.box;
    return reid_score(*motion, ctx) > reid_score(dcf, ctx) ? motion->box : dcf.box;
}

}  // namespace got

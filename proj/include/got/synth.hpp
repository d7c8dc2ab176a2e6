#pragma once

// Labelled synthetic sequences for desk-scale checks: a static scene, a
// translating square, a deforming ellipse and a square hidden for a while
// behind a panel.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "got/geometry.hpp"
#include "got/image.hpp"

namespace got {

enum class SynthKind { static_scene, translate, deform, occlude };

inline std::optional<SynthKind> parse_synth_kind(const std::string& s) {
    if (s == "static") return SynthKind::static_scene;
    if (s == "translate") return SynthKind::translate;
    if (s == "deform") return SynthKind::deform;
    if (s == "occlude") return SynthKind::occlude;
    return std::nullopt;
}

struct SynthOptions {
    SynthKind kind = SynthKind::translate;
    int frames = 100;
    int width = 320;
    int height = 240;
    unsigned seed = 7;
    double noise = 2.0;  // std of additive Gaussian pixel noise
};

struct SynthSequence {
    std::vector<Image> frames;
    std::vector<std::optional<BoundingBox>> truth;  // none while fully occluded
    int occlusion_begin = -1;  // first fully hidden frame
    int occlusion_end = -1;    // first frame visible again
};

namespace detail {

using Rgb = std::array<double, 3>;
using Painter = std::function<std::optional<Rgb>(double, double)>;

inline constexpr Rgb kBackground{120.0, 120.0, 120.0};

/// Render one frame with 4x4 supersampling of the painter over the plain
/// background, then add noise.
inline Image render(int width, int height, const Painter& paint, std::mt19937& rng, double noise) {
    Image img(width, height, 3);
    std::normal_distribution<double> gauss(0.0, noise);
    constexpr int ss = 4;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            Rgb acc{0.0, 0.0, 0.0};
            for (int sy = 0; sy < ss; ++sy)
                for (int sx = 0; sx < ss; ++sx) {
                    const auto c = paint(x + (sx + 0.5) / ss, y + (sy + 0.5) / ss);
                    const Rgb& v = c ? *c : kBackground;
                    for (int k = 0; k < 3; ++k) acc[static_cast<std::size_t>(k)] += v[static_cast<std::size_t>(k)];
                }
            for (int k = 0; k < 3; ++k) {
                const double v = acc[static_cast<std::size_t>(k)] / (ss * ss) + (noise > 0.0 ? gauss(rng) : 0.0);
                img.at(x, y, k) = static_cast<float>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return img;
}

/// 2x2 checkered square.
inline std::optional<Rgb> checker(const BoundingBox& b, double x, double y) {
    if (x < b.x || x >= b.right() || y < b.y || y >= b.bottom()) return std::nullopt;
    const bool left = x < b.x + 0.5 * b.w, top = y < b.y + 0.5 * b.h;
    return left == top ? Rgb{220.0, 50.0, 40.0} : Rgb{250.0, 220.0, 60.0};
}

}  // namespace detail

inline SynthSequence make_synthetic(const SynthOptions& opt) {
    if (opt.frames <= 0 || opt.width < 64 || opt.height < 64) throw std::invalid_argument("make_synthetic: bad size");
    SynthSequence seq;
    std::mt19937 rng(opt.seed);
    const double two_pi = 2.0 * std::numbers::pi;
    for (int t = 0; t < opt.frames; ++t) {
        detail::Painter paint;
        std::optional<BoundingBox> truth;
        switch (opt.kind) {
            case SynthKind::static_scene: {
                const BoundingBox b{0.5 * opt.width - 20.0, 0.5 * opt.height - 20.0, 40.0, 40.0};
                paint = [b](double x, double y) { return detail::checker(b, x, y); };
                truth = b;
                break;
            }
            case SynthKind::translate: {
                const BoundingBox b{40.0 + 2.0 * t, 80.0 + 0.5 * t, 40.0, 40.0};
                paint = [b](double x, double y) { return detail::checker(b, x, y); };
                truth = b;
                break;
            }
            case SynthKind::deform: {
                const double phase = std::sin(two_pi * t / 30.0);
                const double a = 28.0 + 12.0 * phase, bb = 28.0 - 12.0 * phase;
                const double cx = 0.5 * opt.width + 10.0 * std::sin(two_pi * t / 100.0), cy = 0.5 * opt.height;
                paint = [=](double x, double y) -> std::optional<detail::Rgb> {
                    const double u = (x - cx) / a, v = (y - cy) / bb;
                    const double r = u * u + v * v;
                    if (r > 1.0) return std::nullopt;
                    return r < 0.25 ? detail::Rgb{30.0, 80.0, 160.0} : detail::Rgb{40.0, 170.0, 220.0};
                };
                truth = BoundingBox{cx - a, cy - bb, 2.0 * a, 2.0 * bb};
                break;
            }
            case SynthKind::occlude: {
                // A panel covers the moving square for frames [36, 56).
                const BoundingBox b{8.0 + 2.5 * t, 0.5 * opt.height - 16.0, 32.0, 32.0};
                const int begin = std::min(36, opt.frames), end = std::min(56, opt.frames);
                const bool covered = t >= begin && t < end;
                const BoundingBox panel{90.0, 0.5 * opt.height - 40.0, 100.0, 80.0};
                paint = [=](double x, double y) -> std::optional<detail::Rgb> {
                    if (covered && x >= panel.x && x < panel.right() && y >= panel.y && y < panel.bottom()) {
                        return detail::Rgb{60.0, 140.0, 70.0};
                    }
                    return detail::checker(b, x, y);
                };
                if (begin < end) {
                    seq.occlusion_begin = begin;
                    seq.occlusion_end = end < opt.frames ? end : -1;
                }
                if (!covered) truth = b;
                break;
            }
        }
        seq.frames.push_back(detail::render(opt.width, opt.height, paint, rng, opt.noise));
        seq.truth.push_back(truth);
    }
    return seq;
}

/// Frames after the target reappears until the prediction first overlaps
/// it with IoU >= 0.5 (the rest of the sequence when it never does).
inline int recovery_frames(const SynthSequence& seq, const std::vector<BoundingBox>& preds) {
    if (seq.occlusion_end < 0) return 0;
    for (std::size_t t = static_cast<std::size_t>(seq.occlusion_end); t < preds.size(); ++t) {
        if (seq.truth[t] && iou(preds[t], *seq.truth[t]) >= 0.5) return static_cast<int>(t) - seq.occlusion_end;
    }
    return static_cast<int>(preds.size()) - seq.occlusion_end;
}

}  // namespace got

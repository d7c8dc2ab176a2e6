#pragma once

// Handcrafted descriptors shared by the local and global correlators:
// Felzenszwalb-style 31-channel HOG and a 10-d soft color-name histogram.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "got/image.hpp"

namespace got {

/// Dense rows x cols x depth feature tensor (depth fastest).
struct FeatureMap {
    int rows = 0;
    int cols = 0;
    int depth = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int r, int c, int d)
        : rows(r), cols(c), depth(d), data(static_cast<std::size_t>(r) * c * d, 0.0) {}

    double& at(int r, int c, int d) { return data[(static_cast<std::size_t>(r) * cols + c) * depth + d]; }
    double at(int r, int c, int d) const { return data[(static_cast<std::size_t>(r) * cols + c) * depth + d]; }
};

inline constexpr int kHogChannels = 31;
inline constexpr int kColorNameChannels = 10;

namespace detail {

inline constexpr int kSignedBins = 18;
inline constexpr int kUnsignedBins = 9;
inline constexpr double kHogClip = 0.2;

}  // namespace detail

/// 31-channel HOG (18 contrast-sensitive + 9 insensitive orientations + 4
/// texture energies) over non-overlapping cells of `cell` pixels. Each cell
/// is normalized against the four 2x2 cell groups containing it; groups
/// running past the border reuse the nearest interior cell.
inline FeatureMap fhog(const Image& img, int cell) {
    using namespace detail;
    const int cw = img.width() / cell;
    const int ch = img.height() / cell;
    FeatureMap out(ch, cw, kHogChannels);
    if (cw == 0 || ch == 0) return out;

    std::vector<double> hist(static_cast<std::size_t>(cw) * ch * kSignedBins, 0.0);
    const int w = cw * cell;
    const int h = ch * cell;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double best_gx = 0.0, best_gy = 0.0, best_m2 = -1.0;
            for (int c = 0; c < img.channels(); ++c) {
                const double gx = 0.5 * (img.clamped(x + 1, y, c) - img.clamped(x - 1, y, c));
                const double gy = 0.5 * (img.clamped(x, y + 1, c) - img.clamped(x, y - 1, c));
                const double m2 = gx * gx + gy * gy;
                if (m2 > best_m2) {
                    best_m2 = m2;
                    best_gx = gx;
                    best_gy = gy;
                }
            }
            const double mag = std::sqrt(best_m2);
            if (mag <= 0.0) continue;
            double angle = std::atan2(best_gy, best_gx);
            if (angle < 0.0) angle += 2.0 * std::numbers::pi;
            const double pos = angle / (2.0 * std::numbers::pi) * kSignedBins;
            const int b0 = static_cast<int>(std::floor(pos)) % kSignedBins;
            const int b1 = (b0 + 1) % kSignedBins;
            const double frac = pos - std::floor(pos);
            double* cell_hist = &hist[(static_cast<std::size_t>(y / cell) * cw + x / cell) * kSignedBins];
            cell_hist[b0] += (1.0 - frac) * mag;
            cell_hist[b1] += frac * mag;
        }
    }

    std::vector<double> energy(static_cast<std::size_t>(cw) * ch, 0.0);
    for (int i = 0; i < cw * ch; ++i) {
        const double* hc = &hist[static_cast<std::size_t>(i) * kSignedBins];
        double e = 0.0;
        for (int o = 0; o < kUnsignedBins; ++o) {
            const double u = hc[o] + hc[o + kUnsignedBins];
            e += u * u;
        }
        energy[i] = e;
    }
    auto cell_energy = [&](int r, int c) {
        r = std::clamp(r, 0, ch - 1);
        c = std::clamp(c, 0, cw - 1);
        return energy[static_cast<std::size_t>(r) * cw + c];
    };

    constexpr double eps = 1e-4;
    constexpr double texture_scale = 0.2357;
    for (int r = 0; r < ch; ++r) {
        for (int c = 0; c < cw; ++c) {
            std::array<double, 4> norm{};
            int k = 0;
            for (int dr = -1; dr <= 0; ++dr) {
                for (int dc = -1; dc <= 0; ++dc) {
                    const double s = cell_energy(r + dr, c + dc) + cell_energy(r + dr + 1, c + dc) +
                                     cell_energy(r + dr, c + dc + 1) +
                                     cell_energy(r + dr + 1, c + dc + 1);
                    norm[k++] = 1.0 / std::sqrt(s + eps);
                }
            }
            const double* hc = &hist[(static_cast<std::size_t>(r) * cw + c) * kSignedBins];
            std::array<double, 4> texture{};
            for (int o = 0; o < kSignedBins; ++o) {
                double v = 0.0;
                for (int n = 0; n < 4; ++n) v += 0.5 * std::min(hc[o] * norm[n], kHogClip);
                out.at(r, c, o) = v;
            }
            for (int o = 0; o < kUnsignedBins; ++o) {
                const double u = hc[o] + hc[o + kUnsignedBins];
                double v = 0.0;
                for (int n = 0; n < 4; ++n) {
                    const double t = std::min(u * norm[n], kHogClip);
                    v += 0.5 * t;
                    texture[n] += t;
                }
                out.at(r, c, kSignedBins + o) = v;
            }
            for (int n = 0; n < 4; ++n) {
                out.at(r, c, kSignedBins + kUnsignedBins + n) = texture_scale * texture[n];
            }
        }
    }
    return out;
}

namespace detail {

// black, blue, brown, grey, green, orange, pink, purple, red, white, yellow
inline constexpr std::array<std::array<double, 3>, 11> kColorPrototypes{{
    {0, 0, 0},
    {0, 0, 255},
    {139, 69, 19},
    {128, 128, 128},
    {0, 160, 0},
    {255, 165, 0},
    {255, 182, 193},
    {128, 0, 128},
    {220, 0, 0},
    {255, 255, 255},
    {255, 255, 0},
}};
inline constexpr double kColorNameSigma = 48.0;

}  // namespace detail

/// Soft membership of an RGB value in the 11 basic color names. The last
/// name is implied by the others (memberships sum to 1), so only the first
/// 10 are returned.
inline std::array<double, kColorNameChannels> color_name_memberships(double r, double g, double b) {
    using namespace detail;
    std::array<double, 11> d2{};
    double dmin = 1e300;
    for (std::size_t k = 0; k < kColorPrototypes.size(); ++k) {
        const double dr = r - kColorPrototypes[k][0];
        const double dg = g - kColorPrototypes[k][1];
        const double db = b - kColorPrototypes[k][2];
        d2[k] = dr * dr + dg * dg + db * db;
        dmin = std::min(dmin, d2[k]);
    }
    double total = 0.0;
    std::array<double, 11> p{};
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = std::exp(-(d2[k] - dmin) / (2.0 * kColorNameSigma * kColorNameSigma));
        total += p[k];
    }
    std::array<double, kColorNameChannels> out{};
    for (int k = 0; k < kColorNameChannels; ++k) out[k] = p[k] / total;
    return out;
}

/// Mean color-name membership over a rectangular pixel region.
inline std::array<double, kColorNameChannels> color_name_histogram(const Image& img, int x0, int y0,
                                                                   int w, int h) {
    std::array<double, kColorNameChannels> acc{};
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
            const auto m = img.channels() >= 3
                               ? color_name_memberships(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2))
                               : color_name_memberships(img.at(x, y), img.at(x, y), img.at(x, y));
            for (int k = 0; k < kColorNameChannels; ++k) acc[k] += m[k];
        }
    }
    const double n = static_cast<double>(w) * h;
    if (n > 0) {
        for (auto& v : acc) v /= n;
    }
    return acc;
}

}  // namespace got

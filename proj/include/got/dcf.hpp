#pragma once

// Global object-based correlator: a multi-channel correlation filter with
// a temporal regularizer, learned and matched in the Fourier domain.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "got/fft.hpp"
#include "got/geometry.hpp"
#include "got/handcrafted.hpp"
#include "got/image.hpp"

namespace got {

inline constexpr int kDcfCells = 50;
inline constexpr int kDcfCellSize = 2;
inline constexpr int kDcfSampleSide = kDcfCells * kDcfCellSize;  // 100
inline constexpr int kDcfChannels = kHogChannels + kColorNameChannels + 1;  // 42

struct DcfParams {
    double lambda = 1e-2;        // ridge term
    double mu = 15.0;            // temporal regularization
    double sigma_factor = 1.0 / 16.0;  // label sigma relative to object size
    std::vector<double> scales{0.98, 1.0, 1.02};
};

inline Eigen::MatrixXd hann_window(int n) {
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
    return w * w.transpose();
}

/// 42-channel map (31 HOG, 10 CN, 1 gray) of a 100x100 sample at 2 px per
/// cell, multiplied by a Hann window.
inline FeatureMap extract_dcf_map(const Image& sample) {
    if (sample.width() != kDcfSampleSide || sample.height() != kDcfSampleSide || sample.channels() != 3) {
        throw std::invalid_argument("extract_dcf_map: expected a 100x100x3 sample");
    }
    FeatureMap out = fhog(sample, kDcfCellSize);
    FeatureMap full(kDcfCells, kDcfCells, kDcfChannels);
    static const Eigen::MatrixXd window = hann_window(kDcfCells);
    for (int r = 0; r < kDcfCells; ++r) {
        for (int c = 0; c < kDcfCells; ++c) {
            const double win = window(r, c);
            for (int d = 0; d < kHogChannels; ++d) full.at(r, c, d) = win * out.at(r, c, d);
            const auto cn = color_name_histogram(sample, c * kDcfCellSize, r * kDcfCellSize, kDcfCellSize, kDcfCellSize);
            for (int d = 0; d < kColorNameChannels; ++d) full.at(r, c, kHogChannels + d) = win * cn[d];
            double gray = 0.0;
            for (int y = 0; y < kDcfCellSize; ++y)
                for (int x = 0; x < kDcfCellSize; ++x) {
                    const int px = c * kDcfCellSize + x, py = r * kDcfCellSize + y;
                    gray += 0.299 * sample.at(px, py, 0) + 0.587 * sample.at(px, py, 1) + 0.114 * sample.at(px, py, 2);
                }
            gray /= kDcfCellSize * kDcfCellSize;
            full.at(r, c, kDcfChannels - 1) = win * (gray / 255.0 - 0.5);
        }
    }
    return full;
}

/// Sample the DCF region for a crop geometry (same crop as the patch warp).
inline Image sample_dcf_region(const Image& frame, const WarpParams& p) {
    return sample_region(frame, p, kDcfSampleSide);
}

using Spectrum = std::vector<ComplexGrid>;

inline Spectrum map_spectrum(const FeatureMap& m) {
    Spectrum s;
    s.reserve(static_cast<std::size_t>(m.depth));
    Eigen::MatrixXd ch(m.rows, m.cols);
    for (int d = 0; d < m.depth; ++d) {
        for (int r = 0; r < m.rows; ++r)
            for (int c = 0; c < m.cols; ++c) ch(r, c) = m.at(r, c, d);
        s.push_back(fft2(ch));
    }
    return s;
}

/// Gaussian regression target with its peak at (0,0), wrapped circularly.
inline ComplexGrid gaussian_label(int rows, int cols, double sigma) {
    Eigen::MatrixXd y(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const int dr = r <= rows / 2 ? r : r - rows;
        for (int c = 0; c < cols; ++c) {
            const int dc = c <= cols / 2 ? c : c - cols;
            y(r, c) = std::exp(-0.5 * (dr * dr + dc * dc) / (sigma * sigma));
        }
    }
    return fft2(y);
}

/// Label sigma in cells for an object of the nominal patch size.
inline double label_sigma(const DcfParams& p) {
    const double object_cells = kObjectSide / kPatchSide * kDcfCells;
    return object_cells * p.sigma_factor;
}

/// Per-bin closed form of the temporally regularized ridge regression:
/// f = (conj(x)·y + μ f_prev) / (Σ_d |x_d|² + λ + μ).
/// Without a previous filter the temporal term is dropped.
inline Spectrum update_filter(const Spectrum& x, const ComplexGrid& y, const Spectrum* prev, double mu, double lambda) {
    if (prev && prev->size() != x.size()) throw std::invalid_argument("update_filter: channel mismatch");
    const double m = prev ? mu : 0.0;
    Eigen::MatrixXd denom = Eigen::MatrixXd::Constant(y.rows(), y.cols(), lambda + m);
    for (const auto& xd : x) denom += xd.cwiseAbs2();
    Spectrum f;
    f.reserve(x.size());
    for (std::size_t d = 0; d < x.size(); ++d) {
        ComplexGrid num = x[d].conjugate().cwiseProduct(y);
        if (prev) num += m * (*prev)[d];
        f.push_back(num.cwiseQuotient(denom.cast<std::complex<double>>()));
    }
    return f;
}

/// Spatial response: inverse DFT of Σ_d f_d · z_d.
inline Eigen::MatrixXd correlation_response(const Spectrum& filter, const Spectrum& z) {
    if (filter.size() != z.size()) throw std::invalid_argument("correlation_response: channel mismatch");
    ComplexGrid acc = ComplexGrid::Zero(z.front().rows(), z.front().cols());
    for (std::size_t d = 0; d < z.size(); ++d) acc += filter[d].cwiseProduct(z[d]);
    return ifft2_real(acc);
}

struct MatchResult {
    double dx = 0.0;  // displacement in cells, subpixel
    double dy = 0.0;
    int peak_col = 0;  // wrapped integer peak
    int peak_row = 0;
    double peak = 0.0;
    double similarity = 0.0;  // peak / ||response||
};

inline int wrap_offset(int k, int n) { return k <= n / 2 ? k : k - n; }

/// Locate the response peak. Displacements are signed (circularly wrapped)
/// and refined with a 1-D parabola on each axis.
inline MatchResult locate_peak(const Eigen::MatrixXd& r) {
    MatchResult m;
    Eigen::Index pr = 0, pc = 0;
    m.peak = r.maxCoeff(&pr, &pc);
    const int rows = static_cast<int>(r.rows()), cols = static_cast<int>(r.cols());
    m.peak_row = static_cast<int>(pr);
    m.peak_col = static_cast<int>(pc);
    auto refine = [](double left, double centre, double right) {
        const double den = left - 2.0 * centre + right;
        if (den >= 0.0) return 0.0;
        return std::clamp(0.5 * (left - right) / den, -0.5, 0.5);
    };
    const double sub_r = refine(r((pr - 1 + rows) % rows, pc), m.peak, r((pr + 1) % rows, pc));
    const double sub_c = refine(r(pr, (pc - 1 + cols) % cols), m.peak, r(pr, (pc + 1) % cols));
    m.dy = wrap_offset(m.peak_row, rows) + sub_r;
    m.dx = wrap_offset(m.peak_col, cols) + sub_c;
    const double norm = r.norm();
    m.similarity = (norm > 0.0 && m.peak > 0.0) ? m.peak / norm : 0.0;
    return m;
}

inline MatchResult match(const Spectrum& filter, const Spectrum& search) {
    return locate_peak(correlation_response(filter, search));
}

/// Filter state plus a running appearance template of the training maps.
class DcfModel {
public:
    explicit DcfModel(DcfParams params = {}) : params_(std::move(params)) {}

    const DcfParams& params() const { return params_; }
    bool trained() const { return !filter_.empty(); }
    const Spectrum& filter() const { return filter_; }
    const FeatureMap& appearance() const { return appearance_; }
    int updates() const { return updates_; }

    /// Fit (first call) or temporally update the filter on a training map
    /// centered on the object.
    void update(const FeatureMap& map) {
        if (label_.size() == 0) label_ = gaussian_label(map.rows, map.cols, label_sigma(params_));
        const Spectrum x = map_spectrum(map);
        filter_ = update_filter(x, label_, trained() ? &filter_ : nullptr, params_.mu, params_.lambda);
        if (appearance_.data.empty()) {
            appearance_ = map;
        } else {
            const double rate = 1.0 / (1.0 + params_.mu);
            for (std::size_t i = 0; i < map.data.size(); ++i)
                appearance_.data[i] = (1.0 - rate) * appearance_.data[i] + rate * map.data[i];
        }
        ++updates_;
    }

    MatchResult match_map(const FeatureMap& search) const {
        if (!trained()) throw std::logic_error("DcfModel: match before training");
        return match(filter_, map_spectrum(search));
    }

private:
    DcfParams params_;
    ComplexGrid label_;
    Spectrum filter_;
    FeatureMap appearance_;
    int updates_ = 0;
};

/// Cosine similarity of two feature maps.
inline double map_cosine(const FeatureMap& a, const FeatureMap& b) {
    if (a.data.size() != b.data.size()) throw std::invalid_argument("map_cosine: size mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        dot += a.data[i] * b.data[i];
        na += a.data[i] * a.data[i];
        nb += b.data[i] * b.data[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / std::sqrt(na * nb);
}

}  // namespace got

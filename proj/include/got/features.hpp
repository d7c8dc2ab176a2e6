#pragma once

// Local-correlator features: 8x8 block decomposition of the working patch,
// channel-wise Saab transform on color residuals, handcrafted HOG/CN, and
// discriminant feature test (DFT) selection.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "got/geometry.hpp"
#include "got/handcrafted.hpp"
#include "got/image.hpp"

namespace got {

inline constexpr int kBlockSide = 8;
inline constexpr int kBlockStride = 2;
inline constexpr int kGridSide = (kPatchSide - kBlockSide) / kBlockStride + 1;  // 27
inline constexpr int kBlockCount = kGridSide * kGridSide;                      // 729

inline constexpr int kSaabWindow = 5;
inline constexpr int kSaabOutputs = kBlockSide - kSaabWindow + 1;  // 4
inline constexpr int kSaabKernelsPerChannel = 4;
inline constexpr int kSaabResponses = 3 * kSaabKernelsPerChannel * kSaabOutputs * kSaabOutputs;  // 192

inline constexpr int kMeanColorOffset = 0;
inline constexpr int kSaabOffset = 3;
inline constexpr int kHogOffset = kSaabOffset + kSaabResponses;   // 195
inline constexpr int kCnOffset = kHogOffset + kHogChannels;       // 226
inline constexpr int kRawFeatureDim = kCnOffset + kColorNameChannels;  // 236

inline constexpr int kSelectedFeatures = 50;

using RawFeatureVector = std::array<double, kRawFeatureDim>;
using SpatialKernel = std::array<double, kSaabWindow * kSaabWindow>;

struct PatchGrid {
    std::vector<Image> blocks;            // 8x8x3 each
    std::vector<std::array<int, 2>> origins;  // (x, y) top-left in patch px, row-major
};

/// Split a 60x60x3 patch into 729 overlapping 8x8 blocks with stride 2.
inline PatchGrid decompose_patches(const Image& patch) {
    if (patch.width() != kPatchSide || patch.height() != kPatchSide || patch.channels() != 3) {
        throw std::invalid_argument("decompose_patches: expected a 60x60x3 patch");
    }
    PatchGrid grid;
    grid.blocks.reserve(kBlockCount);
    grid.origins.reserve(kBlockCount);
    for (int r = 0; r < kGridSide; ++r) {
        for (int c = 0; c < kGridSide; ++c) {
            const int x0 = c * kBlockStride;
            const int y0 = r * kBlockStride;
            Image b(kBlockSide, kBlockSide, 3);
            for (int y = 0; y < kBlockSide; ++y)
                for (int x = 0; x < kBlockSide; ++x)
                    for (int ch = 0; ch < 3; ++ch) b.at(x, y, ch) = patch.at(x0 + x, y0 + y, ch);
            grid.blocks.push_back(std::move(b));
            grid.origins.push_back({x0, y0});
        }
    }
    return grid;
}

/// Learned channel-wise Saab transform.
struct SaabKernels {
    Eigen::Matrix3d color_basis = Eigen::Matrix3d::Identity();  // rows: P, Q, R
    Eigen::Vector3d color_variances = Eigen::Vector3d::Zero();  // descending
    std::array<std::array<SpatialKernel, kSaabKernelsPerChannel>, 3> spatial{};
    std::array<std::array<double, kSaabKernelsPerChannel>, 3> spatial_variances{};
    bool degenerate = false;

    static constexpr int parameter_count() {
        return 3 * 3 + 3 * kSaabKernelsPerChannel * kSaabWindow * kSaabWindow;
    }
};

struct ColorResidual {
    std::array<double, 3> mean{};
    // Residual channels in PQR order, 8x8 row-major each.
    std::array<std::array<double, kBlockSide * kBlockSide>, 3> channels{};
};

inline std::array<double, 3> block_mean_color(const Image& block) {
    std::array<double, 3> m{};
    for (int y = 0; y < block.height(); ++y)
        for (int x = 0; x < block.width(); ++x)
            for (int c = 0; c < 3; ++c) m[c] += block.at(x, y, c);
    const double n = static_cast<double>(block.width()) * block.height();
    for (auto& v : m) v /= n;
    return m;
}

/// Mean color and PQR projection of the color residuals of one block.
inline ColorResidual to_pqr(const Image& block, const Eigen::Matrix3d& color_basis) {
    ColorResidual out;
    out.mean = block_mean_color(block);
    for (int y = 0; y < kBlockSide; ++y) {
        for (int x = 0; x < kBlockSide; ++x) {
            const Eigen::Vector3d r(block.at(x, y, 0) - out.mean[0], block.at(x, y, 1) - out.mean[1],
                                    block.at(x, y, 2) - out.mean[2]);
            const Eigen::Vector3d q = color_basis * r;
            for (int c = 0; c < 3; ++c) out.channels[c][y * kBlockSide + x] = q[c];
        }
    }
    return out;
}

/// Stride-1 5x5 responses of four kernels on one 8x8 channel:
/// result[k * 16 + wy * 4 + wx].
inline std::array<double, kSaabKernelsPerChannel * kSaabOutputs * kSaabOutputs> spatial_responses(
    const std::array<double, kBlockSide * kBlockSide>& channel,
    const std::array<SpatialKernel, kSaabKernelsPerChannel>& kernels) {
    std::array<double, kSaabKernelsPerChannel * kSaabOutputs * kSaabOutputs> out{};
    for (int k = 0; k < kSaabKernelsPerChannel; ++k) {
        for (int wy = 0; wy < kSaabOutputs; ++wy) {
            for (int wx = 0; wx < kSaabOutputs; ++wx) {
                double acc = 0.0;
                for (int y = 0; y < kSaabWindow; ++y)
                    for (int x = 0; x < kSaabWindow; ++x)
                        acc += kernels[k][y * kSaabWindow + x] * channel[(wy + y) * kBlockSide + wx + x];
                out[k * kSaabOutputs * kSaabOutputs + wy * kSaabOutputs + wx] = acc;
            }
        }
    }
    return out;
}

namespace detail {

/// Eigenvectors of a symmetric matrix, descending eigenvalue, sign fixed so
/// the largest-magnitude component is positive.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> sorted_eigen(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd vecs(n, n);
    Eigen::VectorXd vals(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - i);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        vecs.col(i) = v;
        vals[i] = solver.eigenvalues()[n - 1 - i];
    }
    return {vecs, vals};
}

}  // namespace detail

/// Fit the color (spectral) and spatial PCA kernels on the blocks of the
/// initial frame.
inline SaabKernels fit_saab(const PatchGrid& grid) {
    if (grid.blocks.size() < 12) throw std::invalid_argument("fit_saab: need at least 12 blocks");
    SaabKernels k;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    std::size_t n_pix = 0;
    for (const Image& b : grid.blocks) {
        const auto m = block_mean_color(b);
        for (int y = 0; y < kBlockSide; ++y) {
            for (int x = 0; x < kBlockSide; ++x) {
                const Eigen::Vector3d r(b.at(x, y, 0) - m[0], b.at(x, y, 1) - m[1], b.at(x, y, 2) - m[2]);
                cov += r * r.transpose();
                ++n_pix;
            }
        }
    }
    cov /= static_cast<double>(n_pix);
    auto [cvecs, cvals] = detail::sorted_eigen(cov);
    k.color_basis = cvecs.transpose();
    k.color_variances = cvals;
    const double ctol = 1e-12 * std::max(1.0, cvals[0]);
    if (cvals[2] <= ctol) k.degenerate = true;

    constexpr int dim = kSaabWindow * kSaabWindow;
    const Eigen::VectorXd dc = Eigen::VectorXd::Constant(dim, 1.0 / kSaabWindow);  // unit norm
    for (int ch = 0; ch < 3; ++ch) {
        Eigen::MatrixXd second = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
        std::size_t n = 0;
        for (const Image& b : grid.blocks) {
            const ColorResidual res = to_pqr(b, k.color_basis);
            for (int wy = 0; wy < kSaabOutputs; ++wy) {
                for (int wx = 0; wx < kSaabOutputs; ++wx) {
                    Eigen::VectorXd v(dim);
                    for (int y = 0; y < kSaabWindow; ++y)
                        for (int x = 0; x < kSaabWindow; ++x)
                            v[y * kSaabWindow + x] = res.channels[ch][(wy + y) * kBlockSide + wx + x];
                    v -= dc * dc.dot(v);  // AC part
                    second += v * v.transpose();
                    sum += v;
                    ++n;
                }
            }
        }
        const Eigen::VectorXd mean = sum / static_cast<double>(n);
        Eigen::MatrixXd scov = second / static_cast<double>(n) - mean * mean.transpose();
        // The DC direction is a null vector of scov; push it below every AC
        // eigenvalue so it can never be picked.
        scov -= (scov.trace() + 1.0) * dc * dc.transpose();
        auto [svecs, svals] = detail::sorted_eigen(scov);
        for (int i = 0; i < kSaabKernelsPerChannel; ++i) {
            for (int j = 0; j < dim; ++j) k.spatial[ch][i][j] = svecs(j, i);
            k.spatial_variances[ch][i] = svals[i];
        }
        if (svals[kSaabKernelsPerChannel - 1] <= 1e-12 * std::max(1.0, svals[0])) k.degenerate = true;
    }
    return k;
}

/// Raw 236-d descriptor of one 8x8x3 block: mean color | Saab | HOG | CN.
inline RawFeatureVector apply_features(const Image& block, const SaabKernels& k) {
    RawFeatureVector f{};
    const ColorResidual res = to_pqr(block, k.color_basis);
    for (int c = 0; c < 3; ++c) f[kMeanColorOffset + c] = res.mean[c];
    for (int ch = 0; ch < 3; ++ch) {
        const auto r = spatial_responses(res.channels[ch], k.spatial[ch]);
        std::copy(r.begin(), r.end(), f.begin() + kSaabOffset + ch * static_cast<int>(r.size()));
    }
    const FeatureMap hog = fhog(block, kBlockSide);
    for (int i = 0; i < kHogChannels; ++i) f[kHogOffset + i] = hog.at(0, 0, i);
    const auto cn = color_name_histogram(block, 0, 0, kBlockSide, kBlockSide);
    for (int i = 0; i < kColorNameChannels; ++i) f[kCnOffset + i] = cn[i];
    return f;
}

/// Raw features of every block, one row per block.
inline Eigen::MatrixXd extract_raw_features(const PatchGrid& grid, const SaabKernels& k) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(grid.blocks.size()), kRawFeatureDim);
    for (std::size_t i = 0; i < grid.blocks.size(); ++i) {
        const RawFeatureVector f = apply_features(grid.blocks[i], k);
        for (int j = 0; j < kRawFeatureDim; ++j) X(static_cast<Eigen::Index>(i), j) = f[j];
    }
    return X;
}

struct SelectionIndex {
    std::vector<int> indices;    // ascending loss
    std::vector<double> losses;  // loss of each selected feature

    static int parameter_count(int k = kSelectedFeatures) { return k; }
};

inline constexpr int kDftSplits = 31;

namespace detail {

inline double binary_entropy(double pos, double total) {
    if (total <= 0.0) return 0.0;
    const double p = pos / total;
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

}  // namespace detail

/// DFT loss of one feature: minimum weighted binary cross-entropy of the two
/// partitions induced by 31 uniform split points over the feature range.
/// Samples with x <= t go left.
inline double dft_feature_loss(const Eigen::Ref<const Eigen::VectorXd>& x, const std::vector<int>& y) {
    const Eigen::Index n = x.size();
    double n_pos = 0.0;
    for (int v : y) n_pos += v;
    const double prior = detail::binary_entropy(n_pos, static_cast<double>(n));
    const double lo = x.minCoeff();
    const double hi = x.maxCoeff();
    if (!(hi > lo)) return prior;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });

    double best = prior;
    std::size_t cursor = 0;
    double left_n = 0.0, left_pos = 0.0;
    for (int s = 1; s <= kDftSplits; ++s) {
        const double t = lo + (hi - lo) * s / (kDftSplits + 1);
        while (cursor < order.size() && x[order[cursor]] <= t) {
            left_n += 1.0;
            left_pos += y[static_cast<std::size_t>(order[cursor])];
            ++cursor;
        }
        const double right_n = static_cast<double>(n) - left_n;
        const double loss = (left_n * detail::binary_entropy(left_pos, left_n) +
                             right_n * detail::binary_entropy(n_pos - left_pos, right_n)) /
                            static_cast<double>(n);
        best = std::min(best, loss);
    }
    return best;
}

/// Rank all features by DFT loss (ties: lower index first) and keep k.
inline SelectionIndex dft_select(const Eigen::MatrixXd& X, const std::vector<int>& y, int k = kSelectedFeatures) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw std::invalid_argument("dft_select: size mismatch");
    if (X.rows() < 2) throw std::invalid_argument("dft_select: need at least 2 samples");
    const bool has_pos = std::any_of(y.begin(), y.end(), [](int v) { return v == 1; });
    const bool has_neg = std::any_of(y.begin(), y.end(), [](int v) { return v == 0; });
    if (!has_pos || !has_neg) throw std::invalid_argument("dft_select: both classes required");
    if (k <= 0 || k > X.cols()) throw std::invalid_argument("dft_select: k out of range");

    std::vector<double> loss(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) loss[static_cast<std::size_t>(j)] = dft_feature_loss(X.col(j), y);
    std::vector<int> order(loss.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return loss[a] < loss[b]; });

    SelectionIndex sel;
    for (int i = 0; i < k; ++i) {
        sel.indices.push_back(order[i]);
        sel.losses.push_back(loss[order[i]]);
    }
    return sel;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& X, const SelectionIndex& sel) {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(sel.indices.size()));
    for (std::size_t j = 0; j < sel.indices.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(sel.indices[j]);
    return out;
}

}  // namespace got

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "got/features.hpp"
#include "support.hpp"

using namespace got;

TEST(Decompose, GridLayout) {
    std::mt19937 rng(1);
    const Image patch = oracle::random_image(kPatchSide, kPatchSide, rng);
    const PatchGrid g = decompose_patches(patch);
    ASSERT_EQ(g.blocks.size(), 729u);
    for (std::size_t i = 0; i < g.blocks.size(); ++i) {
        const auto [x0, y0] = g.origins[i];
        EXPECT_EQ(x0, 2 * static_cast<int>(i % 27));
        EXPECT_EQ(y0, 2 * static_cast<int>(i / 27));
        EXPECT_LE(x0 + kBlockSide, kPatchSide);
        EXPECT_LE(y0 + kBlockSide, kPatchSide);
        EXPECT_EQ(g.blocks[i].at(3, 5, 1), patch.at(x0 + 3, y0 + 5, 1));
    }
    EXPECT_THROW(decompose_patches(Image(59, 60, 3)), std::invalid_argument);
}

TEST(Saab, ParameterCount) {
    EXPECT_EQ(SaabKernels::parameter_count(), 309);
    EXPECT_EQ(SaabKernels::parameter_count() + SelectionIndex::parameter_count(), 359);
    EXPECT_EQ(3 * kSaabKernelsPerChannel, 12);
}

TEST(Saab, MatchesJacobiReference) {
    std::mt19937 rng(2);
    for (int i = 0; i < 10; ++i) {
        const auto c = oracle::check_saab(oracle::random_image(kPatchSide, kPatchSide, rng));
        EXPECT_GE(c.color_alignment, 1.0 - 1e-8);
        EXPECT_GE(c.spatial_alignment, 1.0 - 1e-8);
        EXPECT_LT(c.orthonormality_error, 1e-9);
        EXPECT_LT(c.energy_error, 1e-9);
    }
}

TEST(Saab, DegenerateFlatPatch) {
    const Image flat(kPatchSide, kPatchSide, 3, 100.0f);
    const SaabKernels k = fit_saab(decompose_patches(flat));
    EXPECT_TRUE(k.degenerate);
}

TEST(Features, LayoutAndDeterminism) {
    std::mt19937 rng(3);
    const Image patch = oracle::random_image(kPatchSide, kPatchSide, rng);
    const PatchGrid g = decompose_patches(patch);
    const SaabKernels k = fit_saab(g);
    const Eigen::MatrixXd a = extract_raw_features(g, k), b = extract_raw_features(g, k);
    ASSERT_EQ(a.cols(), 236);
    ASSERT_EQ(a.rows(), 729);
    EXPECT_TRUE(a.allFinite());
    EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
    const auto m = block_mean_color(g.blocks[100]);
    for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(a(100, kMeanColorOffset + c), m[c]);
}

// Direct evaluation of the loss: for each of the 31 thresholds count both
// sides from scratch.
double reference_loss(const Eigen::VectorXd& x, const std::vector<int>& y) {
    auto H = [](double pos, double n) {
        if (n <= 0 || pos <= 0 || pos >= n) return 0.0;
        const double p = pos / n;
        return -p * std::log(p) - (1 - p) * std::log(1 - p);
    };
    const double n = static_cast<double>(x.size());
    double npos = 0;
    for (int v : y) npos += v;
    double best = H(npos, n);
    const double lo = x.minCoeff(), hi = x.maxCoeff();
    if (!(hi > lo)) return best;
    for (int s = 1; s <= 31; ++s) {
        const double t = lo + (hi - lo) * s / 32.0;
        double ln = 0, lp = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (x[i] <= t) {
                ln += 1;
                lp += y[static_cast<std::size_t>(i)];
            }
        best = std::min(best, (ln * H(lp, ln) + (n - ln) * H(npos - lp, n - ln)) / n);
    }
    return best;
}

TEST(Dft, LossMatchesDirectCount) {
    std::mt19937 rng(4);
    std::normal_distribution<double> g(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd x(200);
        std::vector<int> y(200);
        for (int i = 0; i < 200; ++i) {
            y[static_cast<std::size_t>(i)] = (rng() % 3 == 0);
            x[i] = g(rng) + (trial % 5) * 0.3 * y[static_cast<std::size_t>(i)];
            if (trial % 7 == 0) x[i] = std::round(x[i]);
        }
        EXPECT_NEAR(dft_feature_loss(x, y), reference_loss(x, y), 1e-12);
    }
}

TEST(Dft, SelectionProperties) {
    std::mt19937 rng(5);
    std::normal_distribution<double> g(0, 1);
    Eigen::MatrixXd X(300, 80);
    std::vector<int> y(300);
    for (int i = 0; i < 300; ++i) {
        y[static_cast<std::size_t>(i)] = i % 2;
        for (int j = 0; j < 80; ++j) X(i, j) = g(rng) + (j % 10 == 0 ? 3.0 * (i % 2) : 0.0);
    }
    const SelectionIndex s = dft_select(X, y);
    ASSERT_EQ(s.indices.size(), 50u);
    EXPECT_EQ(std::set<int>(s.indices.begin(), s.indices.end()).size(), 50u);
    for (std::size_t i = 1; i < s.losses.size(); ++i) EXPECT_LE(s.losses[i - 1], s.losses[i]);
    // The informative columns rank first.
    for (int i = 0; i < 8; ++i) EXPECT_EQ(s.indices[static_cast<std::size_t>(i)] % 10, 0);
    const Eigen::MatrixXd Xs = select_columns(X, s);
    EXPECT_EQ(Xs.cols(), 50);
    EXPECT_EQ(Xs.col(3), X.col(s.indices[3]));
}

TEST(Dft, RejectsOneClass) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 60);
    EXPECT_THROW(dft_select(X, std::vector<int>(10, 1)), std::invalid_argument);
}

#include <gtest/gtest.h>

#include <random>

#include "got/dcf.hpp"
#include "got/motion.hpp"
#include "support.hpp"

using namespace got;

namespace {

FeatureMap random_map(std::mt19937& rng, int rows = 20, int cols = 24, int depth = 3) {
    std::normal_distribution<double> g(0, 1);
    FeatureMap m(rows, cols, depth);
    for (auto& v : m.data) v = g(rng);
    return m;
}

FeatureMap circular_shift(const FeatureMap& m, int dr, int dc) {
    FeatureMap out(m.rows, m.cols, m.depth);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            for (int d = 0; d < m.depth; ++d)
                out.at(((r + dr) % m.rows + m.rows) % m.rows, ((c + dc) % m.cols + m.cols) % m.cols, d) = m.at(r, c, d);
    return out;
}

}  // namespace

TEST(Fft, MatchesDirectDft) {
    std::mt19937 rng(1);
    for (auto [r, c] : {std::pair{8, 8}, std::pair{6, 10}, std::pair{7, 5}}) {
        const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(r, c, [&] { return std::normal_distribution<double>()(rng); });
        EXPECT_LT((fft2(x) - oracle::naive_dft2(x)).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((ifft2_real(fft2(x)) - x).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(DcfFilter, LargeMuKeepsPreviousFilter) {
    std::mt19937 rng(2);
    const Spectrum x = map_spectrum(random_map(rng)), prev = map_spectrum(random_map(rng));
    const ComplexGrid y = gaussian_label(20, 24, 2.0);
    const Spectrum f = update_filter(x, y, &prev, 1e15, 1e-2);
    for (std::size_t d = 0; d < f.size(); ++d) EXPECT_LT((f[d] - prev[d]).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DcfFilter, PerBinFormula) {
    std::mt19937 rng(3);
    const Spectrum x = map_spectrum(random_map(rng)), prev = map_spectrum(random_map(rng));
    const ComplexGrid y = gaussian_label(20, 24, 2.0);
    const double mu = 15, lambda = 0.01;
    const Spectrum f = update_filter(x, y, &prev, mu, lambda);
    for (int r = 0; r < 20; r += 3)
        for (int c = 0; c < 24; c += 5) {
            double energy = 0;
            for (const auto& xd : x) energy += std::norm(xd(r, c));
            for (std::size_t d = 0; d < x.size(); ++d) {
                const auto expect = (std::conj(x[d](r, c)) * y(r, c) + mu * prev[d](r, c)) / (energy + lambda + mu);
                EXPECT_LT(std::abs(f[d](r, c) - expect), 1e-12);
            }
        }
}

TEST(DcfMatch, ShiftEquivariant) {
    std::mt19937 rng(4);
    const FeatureMap base = random_map(rng, 32, 32, 4);
    const ComplexGrid y = gaussian_label(32, 32, 1.5);
    const Spectrum f = update_filter(map_spectrum(base), y, nullptr, 0, 1e-4);
    for (auto [dr, dc] : {std::pair{0, 0}, std::pair{3, -5}, std::pair{-7, 2}, std::pair{10, 11}}) {
        const MatchResult m = match(f, map_spectrum(circular_shift(base, dr, dc)));
        EXPECT_EQ(m.peak_row, (dr + 32) % 32);
        EXPECT_EQ(m.peak_col, (dc + 32) % 32);
        EXPECT_NEAR(m.dy, dr, 0.5);
        EXPECT_NEAR(m.dx, dc, 0.5);
        EXPECT_GT(m.similarity, 0.0);
        EXPECT_LE(m.similarity, 1.0);
    }
}

TEST(DcfModel, UpdatesAndMatchesOnFrames) {
    std::mt19937 rng(5);
    const Image frame = oracle::random_image(200, 150, rng);
    const WarpParams p = warp_params_for({80, 60, 32, 32});
    DcfModel model;
    EXPECT_THROW(model.match_map(extract_dcf_map(sample_dcf_region(frame, p))), std::logic_error);
    const FeatureMap map = extract_dcf_map(sample_dcf_region(frame, p));
    EXPECT_EQ(map.rows, 50);
    EXPECT_EQ(map.cols, 50);
    EXPECT_EQ(map.depth, 42);
    model.update(map);
    model.update(map);
    EXPECT_EQ(model.updates(), 2);
    ASSERT_EQ(model.filter().size(), 42u);
    const MatchResult same = model.match_map(map);
    EXPECT_NEAR(same.dx, 0.0, 0.5);
    EXPECT_NEAR(same.dy, 0.0, 0.5);
    EXPECT_NEAR(map_cosine(model.appearance(), map), 1.0, 1e-12);
}

TEST(Affine, ExactFitFromCorrespondences) {
    const AffineMotion truth{1.01, 0.02, 3.0, -0.015, 0.99, -2.0};
    std::vector<detail::Correspondence> pts;
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
            const Point2 p{10.0 * x, 7.0 * y + x};
            pts.push_back({p, truth.apply(p)});
        }
    const auto fit = detail::fit_affine(pts);
    ASSERT_TRUE(fit);
    EXPECT_NEAR(fit->a0, truth.a0, 1e-9);
    EXPECT_NEAR(fit->b0, truth.b0, 1e-9);
    EXPECT_NEAR(fit->c0, truth.c0, 1e-9);
    EXPECT_NEAR(fit->a1, truth.a1, 1e-9);
    EXPECT_NEAR(fit->b1, truth.b1, 1e-9);
    EXPECT_NEAR(fit->c1, truth.c1, 1e-9);
    std::vector<detail::Correspondence> collinear{{{0, 0}, {0, 0}}, {{1, 1}, {1, 1}}, {{2, 2}, {2, 2}}};
    EXPECT_FALSE(detail::fit_affine(collinear));
}

TEST(Motion, ResidualNonnegativeAndZeroWhenStill) {
    std::mt19937 rng(6);
    const Image g = to_gray(oracle::random_image(64, 48, rng));
    const auto r = motion_residual(g, g, AffineMotion::identity());
    EXPECT_EQ(r.maxCoeff(), 0.0);
    const AffineMotion shift{1, 0, 1.5, 0, 1, -0.5};
    EXPECT_GE(motion_residual(g, g, shift).minCoeff(), 0.0);
}

TEST(Motion, RecoversTranslationAndFindsMover) {
    std::mt19937 rng(7);
    // Smooth random texture so block matching is well posed.
    const Image noise = oracle::random_image(40, 30, rng);
    Image bg(240, 180, 3);
    for (int y = 0; y < 180; ++y)
        for (int x = 0; x < 240; ++x)
            for (int c = 0; c < 3; ++c) bg.at(x, y, c) = noise.bilinear(x / 6.0, y / 6.0, c);
    Image prev = bg, cur(240, 180, 3);
    for (int y = 0; y < 180; ++y)
        for (int x = 0; x < 240; ++x)
            for (int c = 0; c < 3; ++c) cur.at(x, y, c) = bg.clamped(x - 3, y - 2, c);
    for (int y = 80; y < 100; ++y)
        for (int x = 150; x < 170; ++x)
            for (int c = 0; c < 3; ++c) cur.at(x, y, c) = c == 0 ? 255.f : 0.f;
    const MotionEstimate est = estimate_motion(prev, cur);
    ASSERT_FALSE(est.degenerate);
    EXPECT_NEAR(est.motion.c0, 3.0, 0.3);
    EXPECT_NEAR(est.motion.c1, 2.0, 0.3);
    EXPECT_NEAR(est.motion.a0, 1.0, 0.01);
    EXPECT_NEAR(est.motion.b1, 1.0, 0.01);
    const auto box = motion_proposal(est.residual);
    ASSERT_TRUE(box);
    EXPECT_GT(iou(*box, {150, 80, 20, 20}), 0.5);
}

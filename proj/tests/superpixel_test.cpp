#include <gtest/gtest.h>

#include <random>

#include "got/superpixel.hpp"
#include "support.hpp"

using namespace got;

TEST(Segment, PartitionAndMinSize) {
    std::mt19937 rng(1);
    for (int i = 0; i < 10; ++i) {
        const Image img = oracle::random_image(kPatchSide, kPatchSide, rng);
        const SegmentMap seg = segment(img);
        ASSERT_EQ(seg.labels.size(), 3600u);
        std::vector<int> count(static_cast<std::size_t>(seg.count()), 0);
        for (int id : seg.labels) {
            ASSERT_GE(id, 0);
            ASSERT_LT(id, seg.count());
            ++count[static_cast<std::size_t>(id)];
        }
        int total = 0;
        for (int s = 0; s < seg.count(); ++s) {
            EXPECT_EQ(count[static_cast<std::size_t>(s)], seg.sizes[static_cast<std::size_t>(s)]);
            EXPECT_GE(seg.sizes[static_cast<std::size_t>(s)], 20);
            total += seg.sizes[static_cast<std::size_t>(s)];
        }
        EXPECT_EQ(total, 3600);
    }
}

TEST(Segment, IdsInRasterOrder) {
    std::mt19937 rng(2);
    const SegmentMap seg = segment(oracle::random_image(kPatchSide, kPatchSide, rng));
    int next = 0;
    for (int id : seg.labels) {
        ASSERT_LE(id, next);
        if (id == next) ++next;
    }
}

TEST(Segment, SeparatesFlatRegions) {
    Image img(kPatchSide, kPatchSide, 3, 40.0f);
    for (int y = 20; y < 40; ++y)
        for (int x = 20; x < 40; ++x) img.at(x, y, 0) = 230.0f;
    SegmentationParams sharp;
    sharp.sigma = 0.0;
    const SegmentMap seg = segment(img, sharp);
    EXPECT_EQ(seg.count(), 2);
    EXPECT_NE(seg.at(30, 30), seg.at(5, 5));
    EXPECT_EQ(seg.sizes[static_cast<std::size_t>(seg.at(30, 30))], 400);

    // With smoothing, no segment straddles the edge by more than a pixel.
    const SegmentMap soft = segment(img);
    std::vector<int> inner(static_cast<std::size_t>(soft.count())), outer(inner.size());
    for (int y = 0; y < kPatchSide; ++y)
        for (int x = 0; x < kPatchSide; ++x) {
            const auto id = static_cast<std::size_t>(soft.at(x, y));
            if (x >= 21 && x < 39 && y >= 21 && y < 39) ++inner[id];
            if (x < 19 || x >= 41 || y < 19 || y >= 41) ++outer[id];
        }
    for (std::size_t i = 0; i < inner.size(); ++i) EXPECT_FALSE(inner[i] && outer[i]) << "segment " << i;
}

TEST(Grouping, UnionsShrinkWithThreshold) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 10; ++i) {
        const SegmentMap seg = segment(oracle::random_image(kPatchSide, kPatchSide, rng));
        const Eigen::ArrayXXd heat = Eigen::ArrayXXd::NullaryExpr(kPatchSide, kPatchSide, [&] { return u(rng); });
        const auto scores = segment_scores(seg, heat);
        std::vector<char> prev(3600, 1);
        for (double tau : {0.0, 0.3, 0.45, 0.5, 0.55, 0.7, 1.0}) {
            const auto m = grouped_union(seg, scores, tau);
            for (std::size_t p = 0; p < m.size(); ++p) EXPECT_LE(m[p], prev[p]);
            prev = m;
        }
    }
}

TEST(Grouping, ProposalsFollowHeat) {
    Image img(kPatchSide, kPatchSide, 3, 40.0f);
    for (int y = 20; y < 40; ++y)
        for (int x = 15; x < 45; ++x) img.at(x, y, 1) = 200.0f;
    const SegmentMap seg = segment(img);
    Eigen::ArrayXXd heat = Eigen::ArrayXXd::Zero(kPatchSide, kPatchSide);
    heat.block(20, 15, 20, 30) = 0.9;
    const auto boxes = group_proposals(seg, heat);
    ASSERT_EQ(boxes.size(), 1u);  // all three thresholds give the same box
    EXPECT_EQ(boxes[0], (BoundingBox{15, 20, 30, 20}));
    EXPECT_TRUE(group_proposals(seg, Eigen::ArrayXXd::Zero(kPatchSide, kPatchSide)).empty());
}

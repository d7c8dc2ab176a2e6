#include <gtest/gtest.h>

#include <sstream>

#include "got/eval.hpp"
#include "got/synth.hpp"
#include "got/tracker.hpp"

using namespace got;

namespace {

SynthSequence short_sequence(SynthKind kind, int frames) {
    SynthOptions o;
    o.kind = kind;
    o.frames = frames;
    return make_synthetic(o);
}

std::string log_text(const PredictionLog& log) {
    std::ostringstream os;
    write_log(os, log);
    return os.str();
}

}  // namespace

TEST(Tracker, InitValidation) {
    const Image frame(100, 80, 3, 50.0f);
    Tracker t;
    EXPECT_THROW(t.step(frame), std::logic_error);
    EXPECT_THROW(Tracker().init(frame, {10, 10, 3, 20}), std::invalid_argument);
    EXPECT_THROW(Tracker().init(frame, {200, 10, 20, 20}), std::invalid_argument);
    EXPECT_THROW(Tracker().init(Image(100, 80, 1), {10, 10, 20, 20}), std::invalid_argument);
}

TEST(Tracker, Deterministic) {
    const SynthSequence seq = short_sequence(SynthKind::translate, 15);
    const auto a = run_ope(seq.frames, *seq.truth.front());
    const auto b = run_ope(seq.frames, *seq.truth.front());
    EXPECT_EQ(log_text(a), log_text(b));
}

TEST(Tracker, StateUpdatesOncePerStep) {
    const SynthSequence seq = short_sequence(SynthKind::occlude, 50);
    Tracker t;
    t.init(seq.frames.front(), *seq.truth.front());
    ASSERT_EQ(t.dcf().updates(), 1);
    ASSERT_EQ(t.template_updates(), 0);
    int filter_updates = 1, suspected = 0;
    for (std::size_t i = 1; i < seq.frames.size(); ++i) {
        const StepResult r = t.step(seq.frames[i]);
        EXPECT_TRUE(r.template_updated);
        EXPECT_EQ(t.template_updates(), static_cast<int>(i));
        EXPECT_EQ(r.filter_updated, !t.suspected_loss());
        filter_updates += r.filter_updated;
        suspected += t.suspected_loss();
        EXPECT_EQ(t.dcf().updates(), filter_updates);
        const ShapeTemplate& s = t.shape_template();
        EXPECT_GE(s.minCoeff(), 0.0);
        EXPECT_LE(s.maxCoeff(), 1.0);
        EXPECT_TRUE(r.box.valid());
        EXPECT_GE(r.box.w, 4.0);
    }
    EXPECT_GT(suspected, 0);  // the panel hides the target for a while
}

TEST(Tracker, LearnedModelRespectsBounds) {
    const SynthSequence seq = short_sequence(SynthKind::static_scene, 2);
    Tracker t;
    t.init(seq.frames.front(), *seq.truth.front());
    EXPECT_LE(t.classifier().max_depth(), 4);
    EXPECT_LE(t.classifier().parameter_count(), 1840);
    EXPECT_EQ(t.selection().indices.size(), 50u);
    const Eigen::Matrix3d c = t.kernels().color_basis;
    EXPECT_LT((c * c.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Tracker, TracksStaticTarget) {
    const SynthSequence seq = short_sequence(SynthKind::static_scene, 12);
    const auto log = run_ope(seq.frames, *seq.truth.front());
    for (std::size_t i = 0; i < log.size(); ++i) {
        EXPECT_GT(iou(log[i].box, *seq.truth[i]), 0.8) << "frame " << i;
        EXPECT_GE(log[i].similarity, 0.1);
    }
}

TEST(Tracker, LostWhenBoxLeavesFrame) {
    const SynthSequence seq = short_sequence(SynthKind::static_scene, 2);
    Tracker t;
    t.init(seq.frames.front(), *seq.truth.front());
    const StepResult r = t.step(Image(80, 60, 3, 120.0f));  // smaller frame: box now outside
    EXPECT_TRUE(r.lost);
    EXPECT_FALSE(r.present);
    EXPECT_EQ(r.box, *seq.truth.front());
}

TEST(Tracker, DcfOnlyConfiguration) {
    TrackerConfig cfg;
    cfg.local_branch = false;
    const SynthSequence seq = short_sequence(SynthKind::translate, 10);
    Tracker t(cfg);
    t.init(seq.frames.front(), *seq.truth.front());
    for (std::size_t i = 1; i < seq.frames.size(); ++i) {
        const StepResult r = t.step(seq.frames[i]);
        EXPECT_FALSE(r.x_obj);
        EXPECT_FALSE(r.template_updated);
        EXPECT_EQ(r.path, FusionPath::dcf_only);
    }
}

TEST(Synth, Properties) {
    const SynthSequence occ = short_sequence(SynthKind::occlude, 80);
    EXPECT_EQ(occ.occlusion_begin, 36);
    EXPECT_EQ(occ.occlusion_end, 56);
    for (int t = 0; t < 80; ++t) EXPECT_EQ(occ.truth[static_cast<std::size_t>(t)].has_value(), t < 36 || t >= 56);
    const SynthSequence a = short_sequence(SynthKind::deform, 5), b = short_sequence(SynthKind::deform, 5);
    EXPECT_TRUE(a.frames[4] == b.frames[4]);
    EXPECT_FALSE(parse_synth_kind("spin"));
    std::vector<BoundingBox> perfect;
    for (const auto& t : occ.truth) perfect.push_back(t ? *t : BoundingBox{0, 0, 1, 1});
    EXPECT_EQ(recovery_frames(occ, perfect), 0);
}

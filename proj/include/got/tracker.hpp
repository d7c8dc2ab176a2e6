#pragma once

// Per-frame tracker: warps the working patch around the previous box, runs
// the correlator, the patch classifier and the superpixel grouping, gates
// them through quality control, fuses, re-identifies on suspected loss and
// updates every model.

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "got/config.hpp"
#include "got/dcf.hpp"
#include "got/features.hpp"
#include "got/fusion.hpp"
#include "got/gbdt.hpp"
#include "got/geometry.hpp"
#include "got/heatmap.hpp"
#include "got/image.hpp"
#include "got/motion.hpp"
#include "got/superpixel.hpp"

namespace got {

struct StepResult {
    BoundingBox box;           // frame coordinates
    double similarity = 0.0;
    bool present = true;
    bool lost = false;         // previous box left the frame; box is the last one
    BoundingBox x_dcf;
    std::optional<BoundingBox> x_obj;  // frame coordinates
    FusionPath path = FusionPath::dcf_only;
    TrackerMode mode = TrackerMode::fusion_on;
    std::optional<QualityVerdict> verdict;
    bool reid_override = false;
    bool retrained = false;
    bool filter_updated = false;
    bool template_updated = false;
};

/// Training rows of one frame: selected features and geometric labels.
struct SampleCache {
    Eigen::MatrixXd features;
    PatchLabelSet labels;
};

class Tracker {
public:
    explicit Tracker(TrackerConfig cfg = {}) : cfg_(std::move(cfg)), dcf_(cfg_.dcf) {}

    const TrackerConfig& config() const { return cfg_; }
    bool initialized() const { return initialized_; }
    const DcfModel& dcf() const { return dcf_; }
    const SaabKernels& kernels() const { return kernels_; }
    const SelectionIndex& selection() const { return selection_; }
    const TreeEnsemble& classifier() const { return classifier_; }
    const ShapeTemplate& shape_template() const { return template_; }
    const ModeState& mode() const { return mode_; }
    const BoundingBox& previous_box() const { return prev_box_; }
    int template_updates() const { return template_updates_; }
    bool suspected_loss() const { return suspected_loss_; }

    void init(const Image& frame, const BoundingBox& box) {
        if (initialized_) throw std::logic_error("Tracker::init: already initialized");
        if (frame.channels() != 3) throw std::invalid_argument("Tracker::init: expected an RGB frame");
        if (!(box.w >= cfg_.min_box_side && box.h >= cfg_.min_box_side)) {
            throw std::invalid_argument("Tracker::init: box side below the minimum");
        }
        if (!intersects_frame(box, frame.width(), frame.height())) {
            throw std::invalid_argument("Tracker::init: box outside the frame");
        }
        const WarpParams wp = warp_params_for(box);
        const BoundingBox box_p = warp_box(box, wp);

        if (cfg_.local_branch) {
            const Image patch = sample_region(frame, wp, kPatchSide);
            const PatchGrid grid = decompose_patches(patch);
            kernels_ = fit_saab(grid);
            const Eigen::MatrixXd raw = extract_raw_features(grid, kernels_);
            const PatchLabelSet labels = training_labels(grid, box_p);
            std::vector<Eigen::Index> rows;
            std::vector<int> y;
            for (std::size_t i = 0; i < labels.labels.size(); ++i) {
                if (labels.labels[i] == kIgnoreLabel) continue;
                rows.push_back(static_cast<Eigen::Index>(i));
                y.push_back(labels.labels[i]);
            }
            Eigen::MatrixXd labelled(static_cast<Eigen::Index>(rows.size()), raw.cols());
            for (std::size_t i = 0; i < rows.size(); ++i) labelled.row(static_cast<Eigen::Index>(i)) = raw.row(rows[i]);
            selection_ = dft_select(labelled, y);
            const Eigen::MatrixXd selected = select_columns(raw, selection_);
            classifier_ = two_stage_train(selected, labels, cfg_.boosting, cfg_.refine_threshold).model;
            cache_ = SampleCache{selected, labels};
            template_ = initial_template(box_p);
        }

        dcf_.update(extract_dcf_map(sample_dcf_region(frame, wp)));
        mode_ = ModeState{};
        centers_.assign({box.center(), box.center()});
        prev_box_ = box;
        prev_frame_ = frame;
        initialized_ = true;
    }

    StepResult step(const Image& frame) {
        if (!initialized_) throw std::logic_error("Tracker::step: not initialized");
        StepResult out;
        out.mode = mode_.mode;
        if (!intersects_frame(prev_box_, frame.width(), frame.height())) {
            out.box = prev_box_;
            out.x_dcf = prev_box_;
            out.present = false;
            out.lost = true;
            prev_frame_ = frame;
            return out;
        }

        // Global correlator over the scale set.
        const WarpParams wp = warp_params_for(prev_box_);
        MatchResult best;
        double best_scale = 1.0, best_score = 0.0;
        bool have = false;
        for (double s : cfg_.dcf.scales) {
            WarpParams ws = wp;
            ws.scale *= s;
            const MatchResult m = dcf_.match_map(extract_dcf_map(sample_dcf_region(frame, ws)));
            const double score = m.similarity * (s == 1.0 ? 1.0 : cfg_.scale_penalty);
            if (!have || score > best_score) {
                best = m;
                best_score = score;
                best_scale = s;
                have = true;
            }
        }
        const double cell = wp.scale * best_scale * kPatchSide / kDcfCells;
        const Point2 c0 = prev_box_.center();
        const BoundingBox x_dcf = BoundingBox::from_center({c0.x + best.dx * cell, c0.y + best.dy * cell},
                                                           prev_box_.w * best_scale, prev_box_.h * best_scale);
        out.x_dcf = x_dcf;
        out.similarity = best.similarity;
        // Suspected loss starts below the presence threshold and lasts until
        // the match is confident again.
        if (best.similarity < cfg_.presence_threshold) {
            suspected_loss_ = true;
        } else if (best.similarity >= cfg_.confident_similarity) {
            suspected_loss_ = false;
        }
        const bool suspected_loss = suspected_loss_;

        BoundingBox x_t = x_dcf;
        const BoundingBox x_dcf_p = warp_box(x_dcf, wp);
        std::optional<BoundingBox> x_obj_p;
        std::optional<HeatMap> p_star;
        std::optional<PatchGrid> grid;
        std::optional<Eigen::MatrixXd> selected;
        ShapeTemplate aligned;
        bool reentered = false;

        if (cfg_.local_branch) {
            const Image patch = sample_region(frame, wp, kPatchSide);
            grid = decompose_patches(patch);
            selected = select_columns(extract_raw_features(*grid, kernels_), selection_);
            const HeatMap p = assemble(predict_batch(classifier_, *selected));
            const Point2 dc = x_dcf_p.center();
            aligned = align(template_, cell_shift(dc.x), cell_shift(dc.y));
            // Suppression is part of shape estimation and is off in DCF_ONLY.
            const bool suppress_noise = cfg_.noise_suppression && mode_.mode == TrackerMode::fusion_on;
            p_star = suppress_noise ? suppress(p, aligned) : p;
            x_obj_p = extract_box(*p_star, cfg_.objectness_threshold);
            if (x_obj_p) {
                obj_history_.push_back(*x_obj_p);
                while (obj_history_.size() > cfg_.quality.history) obj_history_.pop_front();
                out.x_obj = unwarp_box(*x_obj_p, wp);
            }
            const QualityReport report = quality_check(*p_star, obj_history_, cfg_.quality);
            out.verdict = report.verdict;
            const ModeTransition tr = quality_control_step(report, mode_, cfg_.reentry_stable);
            mode_ = tr.state;
            reentered = tr.reentered;
            out.mode = mode_.mode;

            if (mode_.mode == TrackerMode::fusion_on && !reentered) {
                const Eigen::ArrayXXd heat_pixel = upsample_to_patch(*p_star);
                const SegmentMap seg = segment(patch, cfg_.segmentation);
                FusionInputs in;
                in.x_dcf = x_dcf_p;
                in.x_obj = x_obj_p;
                in.spp = group_proposals(seg, heat_pixel, cfg_.grouping_thresholds);
                in.p_star = *p_star;
                in.x_prev = warp_box(prev_box_, wp);
                in.patch = &patch;
                in.heat_pixel = &heat_pixel;
                const FusionResult fr = fuse(in, cfg_.fusion);
                out.path = fr.path;
                x_t = unwarp_box(fr.box, wp);
            }
        }

        if (suspected_loss && cfg_.reidentification) {
            const MotionEstimate me = estimate_motion(prev_frame_, frame, cfg_.motion);
            ResidualMap residual = me.residual;
            if (const auto blob = motion_proposal(residual, cfg_.motion_min_area)) {
                const BoundingBox motion_box = BoundingBox::from_center(blob->center(), prev_box_.w, prev_box_.h);
                ReidContext ctx;
                ctx.template_map = &dcf_.appearance();
                ctx.lambda = adaptive_weight(x_dcf_p, x_obj_p);
                ctx.predicted_center = predict_center(centers_[centers_.size() - 2], centers_.back(),
                                                       static_cast<double>(frames_since_center_ + 1));
                ctx.frame_per_patch = wp.scale;
                const ReidCandidate dcf_cand = candidate(frame, x_t);
                const ReidCandidate motion_cand = candidate(frame, motion_box);
                const BoundingBox chosen = reid_choose(dcf_cand, motion_cand, ctx);
                if (!(chosen == x_t)) {
                    x_t = chosen;
                    out.reid_override = true;
                }
            }
        }

        x_t = sanitize(x_t, frame);
        out.box = x_t;
        out.present = best.similarity >= cfg_.presence_threshold;

        // Model updates.
        if (cfg_.local_branch) {
            const BoundingBox x_t_p = warp_box(x_t, wp);
            const ShapeTemplate s = reentered ? initial_template(x_t_p) : update_template(*p_star, aligned, cfg_.template_mu);
            const Point2 ct = x_t_p.center();
            template_ = align(s, -cell_shift(ct.x), -cell_shift(ct.y));
            ++template_updates_;
            out.template_updated = true;

            const PatchLabelSet current = training_labels(*grid, x_t_p);
            const double agreement = x_obj_p ? iou(*x_obj_p, x_dcf_p) : 0.0;
            disagreement_ = agreement < cfg_.retrain_iou ? disagreement_ + 1 : 0;
            if (cfg_.classifier_update && !suspected_loss && (reentered || disagreement_ >= cfg_.retrain_frames)) {
                out.retrained = retrain(*selected, current);
                disagreement_ = 0;
            }
            if (out.verdict == QualityVerdict::stable && mode_.mode == TrackerMode::fusion_on &&
                best.similarity > cfg_.confident_similarity) {
                cache_ = SampleCache{*selected, current};
            }
        }
        if (!suspected_loss) {
            dcf_.update(extract_dcf_map(sample_dcf_region(frame, warp_params_for(x_t))));
            out.filter_updated = true;
        }

        if (!suspected_loss) {
            centers_.push_back(x_t.center());
            while (centers_.size() > 2) centers_.pop_front();
            frames_since_center_ = 0;
        } else {
            ++frames_since_center_;
        }
        prev_box_ = x_t;
        prev_frame_ = frame;
        return out;
    }

private:
    /// Patch displacement from the patch center in whole grid cells.
    static int cell_shift(double patch_coord) {
        return static_cast<int>(std::lround((patch_coord - 0.5 * kPatchSide) / kBlockStride));
    }

    /// Geometric block labels; boxes too thin to contain a whole block fall
    /// back to labelling by block center.
    static PatchLabelSet training_labels(const PatchGrid& grid, const BoundingBox& box_p) {
        PatchLabelSet labels = label_blocks(grid, box_p);
        if (labels.count(1) > 0) return labels;
        for (std::size_t i = 0; i < grid.origins.size(); ++i) {
            const double cx = grid.origins[i][0] + 0.5 * kBlockSide;
            const double cy = grid.origins[i][1] + 0.5 * kBlockSide;
            if (cx >= box_p.x && cx < box_p.right() && cy >= box_p.y && cy < box_p.bottom()) labels.labels[i] = 1;
        }
        return labels;
    }

    /// Keep the box at least min_box_side wide and its center inside the frame.
    BoundingBox sanitize(BoundingBox b, const Image& frame) const {
        const double w = std::max(b.w, cfg_.min_box_side);
        const double h = std::max(b.h, cfg_.min_box_side);
        Point2 c = b.center();
        c.x = std::clamp(c.x, 0.0, static_cast<double>(frame.width()));
        c.y = std::clamp(c.y, 0.0, static_cast<double>(frame.height()));
        return BoundingBox::from_center(c, w, h);
    }

    ReidCandidate candidate(const Image& frame, const BoundingBox& box) const {
        ReidCandidate c;
        c.box = box;
        const WarpParams wp = warp_params_for(box);
        c.appearance = extract_dcf_map(sample_dcf_region(frame, wp));
        if (cfg_.local_branch) {
            const PatchGrid g = decompose_patches(sample_region(frame, wp, kPatchSide));
            const HeatMap p = assemble(predict_batch(classifier_, select_columns(extract_raw_features(g, kernels_), selection_)));
            c.objectness = mean_inside(p, warp_box(box, wp));
        }
        return c;
    }

    /// Retrain on the cached confident frame plus the current one. Keeps
    /// the old model when the combined labels hold a single class.
    bool retrain(const Eigen::MatrixXd& current_features, const PatchLabelSet& current_labels) {
        Eigen::MatrixXd X(cache_.features.rows() + current_features.rows(), current_features.cols());
        X << cache_.features, current_features;
        PatchLabelSet labels = cache_.labels;
        labels.labels.insert(labels.labels.end(), current_labels.labels.begin(), current_labels.labels.end());
        if (labels.count(0) == 0 || labels.count(1) == 0) return false;
        classifier_ = two_stage_train(X, labels, cfg_.boosting, cfg_.refine_threshold).model;
        return true;
    }

    TrackerConfig cfg_;
    DcfModel dcf_;
    SaabKernels kernels_;
    SelectionIndex selection_;
    TreeEnsemble classifier_;
    ShapeTemplate template_;
    ModeState mode_;
    SampleCache cache_;
    std::deque<BoundingBox> obj_history_;
    std::deque<Point2> centers_;
    BoundingBox prev_box_;
    Image prev_frame_;
    int disagreement_ = 0;
    bool suspected_loss_ = false;
    int frames_since_center_ = 0;
    int template_updates_ = 0;
    bool initialized_ = false;
};

}  // namespace got

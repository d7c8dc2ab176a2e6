#pragma once

// Binary gradient-boosted decision trees (logistic loss, exact greedy
// splits, second-order leaf weights) for patch objectness.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "got/features.hpp"
#include "got/geometry.hpp"

namespace got {

struct BoostingConfig {
    int trees = 40;
    int max_depth = 4;
    double learning_rate = 0.3;
    double l2 = 1.0;
    double min_child_weight = 1.0;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const TreeNode& n = nodes[static_cast<std::size_t>(i)];
            i = x[n.feature] < n.threshold ? n.left : n.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }

    int depth() const { return depth_from(0); }

    /// Split nodes carry (feature, threshold); leaves carry one weight.
    int parameter_count() const {
        int p = 0;
        for (const TreeNode& n : nodes) p += n.is_leaf() ? 1 : 2;
        return p;
    }

private:
    int depth_from(int i) const {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth_from(n.left), depth_from(n.right));
    }
};

inline double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

struct TreeEnsemble {
    std::vector<Tree> trees;
    double base_margin = 0.0;
    double learning_rate = 0.3;

    double margin(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        double m = base_margin;
        for (const Tree& t : trees) m += t.evaluate(x);
        return m;
    }

    int parameter_count() const {
        int p = 0;
        for (const Tree& t : trees) p += t.parameter_count();
        return p;
    }

    int max_depth() const {
        int d = 0;
        for (const Tree& t : trees) d = std::max(d, t.depth());
        return d;
    }

    /// Upper bound on parameters for `trees` trees of depth `depth`.
    static constexpr int parameter_bound(int trees = 40, int depth = 4) {
        return trees * (2 * ((1 << depth) - 1) + (1 << depth));
    }
};

inline double predict_proba(const TreeEnsemble& m, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return sigmoid(m.margin(x));
}

inline std::vector<double> predict_batch(const TreeEnsemble& m, const Eigen::MatrixXd& X) {
    std::vector<double> p(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) p[static_cast<std::size_t>(i)] = predict_proba(m, X.row(i));
    return p;
}

namespace detail {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

inline double leaf_score(double g, double h, double l2) { return g * g / (h + l2); }

/// Grow one tree level by level. `order[j]` lists samples sorted by feature j.
inline Tree grow_tree(const Eigen::MatrixXd& X, const std::vector<std::vector<Eigen::Index>>& order,
                      const std::vector<double>& grad, const std::vector<double>& hess,
                      const BoostingConfig& cfg) {
    const std::size_t n = grad.size();
    Tree tree;
    tree.nodes.push_back({});
    std::vector<int> node_of(n, 0);
    std::vector<int> frontier{0};

    for (int depth = 0; !frontier.empty(); ++depth) {
        const std::size_t nf = frontier.size();
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t s = 0; s < nf; ++s) slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);

        std::vector<double> G(nf, 0.0), H(nf, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const int s = slot[static_cast<std::size_t>(node_of[i])];
            if (s >= 0) {
                G[static_cast<std::size_t>(s)] += grad[i];
                H[static_cast<std::size_t>(s)] += hess[i];
            }
        }

        std::vector<SplitCandidate> best(nf);
        if (depth < cfg.max_depth) {
            std::vector<double> gl(nf), hl(nf), last(nf);
            std::vector<char> seen(nf);
            for (Eigen::Index j = 0; j < X.cols(); ++j) {
                std::fill(gl.begin(), gl.end(), 0.0);
                std::fill(hl.begin(), hl.end(), 0.0);
                std::fill(seen.begin(), seen.end(), 0);
                for (Eigen::Index i : order[static_cast<std::size_t>(j)]) {
                    const int s = slot[static_cast<std::size_t>(node_of[static_cast<std::size_t>(i)])];
                    if (s < 0) continue;
                    const auto su = static_cast<std::size_t>(s);
                    const double v = X(i, j);
                    if (seen[su] && v > last[su]) {
                        const double gr = G[su] - gl[su];
                        const double hr = H[su] - hl[su];
                        if (hl[su] >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                            const double gain = 0.5 * (leaf_score(gl[su], hl[su], cfg.l2) +
                                                       leaf_score(gr, hr, cfg.l2) -
                                                       leaf_score(G[su], H[su], cfg.l2));
                            if (gain > best[su].gain + 1e-12) {
                                best[su] = {gain, static_cast<int>(j), last[su] + 0.5 * (v - last[su])};
                            }
                        }
                    }
                    gl[su] += grad[static_cast<std::size_t>(i)];
                    hl[su] += hess[static_cast<std::size_t>(i)];
                    last[su] = v;
                    seen[su] = 1;
                }
            }
        }

        std::vector<int> next;
        for (std::size_t s = 0; s < nf; ++s) {
            const int id = frontier[s];
            if (best[s].feature < 0) {
                TreeNode& leaf = tree.nodes[static_cast<std::size_t>(id)];
                leaf.feature = -1;
                leaf.value = -G[s] / (H[s] + cfg.l2) * cfg.learning_rate;
                continue;
            }
            const int left = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back({});
            tree.nodes.push_back({});
            TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
            node.feature = best[s].feature;
            node.threshold = best[s].threshold;
            node.left = left;
            node.right = left + 1;
            next.push_back(left);
            next.push_back(left + 1);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
            if (!node.is_leaf() && node.left >= 0) {
                node_of[i] = X(static_cast<Eigen::Index>(i), node.feature) < node.threshold ? node.left : node.right;
            }
        }
        frontier = std::move(next);
    }
    return tree;
}

inline void require_both_classes(const std::vector<int>& y, const char* who) {
    const bool pos = std::any_of(y.begin(), y.end(), [](int v) { return v == 1; });
    const bool neg = std::any_of(y.begin(), y.end(), [](int v) { return v == 0; });
    if (!pos || !neg) throw std::invalid_argument(std::string(who) + ": both classes required");
}

}  // namespace detail

/// Boosting on labels in {0, 1}. Single-class data is allowed here (the
/// model simply fits the constant); classifier-facing entry points enforce
/// both classes.
inline TreeEnsemble train_unchecked(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                    const BoostingConfig& cfg = {}) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw std::invalid_argument("train: size mismatch");
    const std::size_t n = y.size();
    std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        auto& o = order[static_cast<std::size_t>(j)];
        o.resize(n);
        std::iota(o.begin(), o.end(), Eigen::Index{0});
        std::stable_sort(o.begin(), o.end(), [&](Eigen::Index a, Eigen::Index b) { return X(a, j) < X(b, j); });
    }

    TreeEnsemble model;
    model.learning_rate = cfg.learning_rate;
    std::vector<double> margin(n, model.base_margin), grad(n), hess(n);
    for (int t = 0; t < cfg.trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(margin[i]);
            grad[i] = p - y[i];
            hess[i] = std::max(p * (1.0 - p), 1e-16);
        }
        Tree tree = detail::grow_tree(X, order, grad, hess, cfg);
        for (std::size_t i = 0; i < n; ++i) margin[i] += tree.evaluate(X.row(static_cast<Eigen::Index>(i)));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline TreeEnsemble train(const Eigen::MatrixXd& X, const std::vector<int>& y, const BoostingConfig& cfg = {}) {
    detail::require_both_classes(y, "train");
    return train_unchecked(X, y, cfg);
}

// ---- Patch labels ---------------------------------------------------------

inline constexpr int kIgnoreLabel = -1;

enum class LabelProvenance { geometric, refined };

struct PatchLabelSet {
    std::vector<int> labels;  // 0, 1 or kIgnoreLabel
    LabelProvenance provenance = LabelProvenance::geometric;

    std::size_t count(int v) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), v)); }
};

/// 1 for blocks fully inside `box` (patch coordinates), 0 for blocks fully
/// outside, ignore for blocks straddling its boundary.
inline PatchLabelSet label_blocks(const PatchGrid& grid, const BoundingBox& box) {
    PatchLabelSet out;
    out.labels.reserve(grid.origins.size());
    for (const auto& o : grid.origins) {
        const BoundingBox b{static_cast<double>(o[0]), static_cast<double>(o[1]), kBlockSide, kBlockSide};
        const double inter = intersection_area(b, box);
        if (inter <= 0.0) {
            out.labels.push_back(0);
        } else if (b.x >= box.x && b.y >= box.y && b.right() <= box.right() && b.bottom() <= box.bottom()) {
            out.labels.push_back(1);
        } else {
            out.labels.push_back(kIgnoreLabel);
        }
    }
    return out;
}

struct TwoStageResult {
    TreeEnsemble model;
    TreeEnsemble stage1;
    PatchLabelSet refined;  // labels stage 2 was trained on
    bool collapsed = false;  // refinement produced one class; model == stage1
};

/// Stage 1 learns geometric labels; its probabilities on the same labelled
/// blocks, binarized at `threshold`, become the stage-2 targets. Ignored
/// blocks stay ignored in both stages.
inline TwoStageResult two_stage_train(const Eigen::MatrixXd& X, const PatchLabelSet& geometric,
                                      const BoostingConfig& cfg = {}, double threshold = 0.5) {
    if (static_cast<std::size_t>(X.rows()) != geometric.labels.size()) {
        throw std::invalid_argument("two_stage_train: size mismatch");
    }
    std::vector<Eigen::Index> rows;
    std::vector<int> y;
    for (std::size_t i = 0; i < geometric.labels.size(); ++i) {
        if (geometric.labels[i] != kIgnoreLabel) {
            rows.push_back(static_cast<Eigen::Index>(i));
            y.push_back(geometric.labels[i]);
        }
    }
    detail::require_both_classes(y, "two_stage_train");
    Eigen::MatrixXd Xs(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) Xs.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);

    TwoStageResult out;
    out.stage1 = train_unchecked(Xs, y, cfg);
    out.refined.provenance = LabelProvenance::refined;
    out.refined.labels.assign(geometric.labels.size(), kIgnoreLabel);
    std::vector<int> y2(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        y2[i] = predict_proba(out.stage1, Xs.row(static_cast<Eigen::Index>(i))) >= threshold ? 1 : 0;
        out.refined.labels[static_cast<std::size_t>(rows[i])] = y2[i];
    }
    const bool pos = std::any_of(y2.begin(), y2.end(), [](int v) { return v == 1; });
    const bool neg = std::any_of(y2.begin(), y2.end(), [](int v) { return v == 0; });
    if (!pos || !neg) {
        out.collapsed = true;
        out.model = out.stage1;
        return out;
    }
    out.model = train_unchecked(Xs, y2, cfg);
    return out;
}

}  // namespace got

#pragma once

// Tracker configuration and its plain-text "key = value" form.

#include <charconv>
#include <functional>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "got/dcf.hpp"
#include "got/fusion.hpp"
#include "got/gbdt.hpp"
#include "got/heatmap.hpp"
#include "got/motion.hpp"
#include "got/superpixel.hpp"

namespace got {

struct TrackerConfig {
    FusionConfig fusion;
    DcfParams dcf;
    BoostingConfig boosting;
    QualityThresholds quality;
    SegmentationParams segmentation;
    MotionParams motion;
    std::vector<double> grouping_thresholds = default_grouping_thresholds();

    double template_mu = 5.0;
    double objectness_threshold = 0.5;
    double refine_threshold = 0.5;
    double scale_penalty = 0.99;        // weight on non-unit DCF scales
    double presence_threshold = 0.1;    // similarity below this = suspected loss
    double confident_similarity = 0.2;  // cache frames above this with a stable verdict
    double retrain_iou = 0.3;
    int retrain_frames = 3;
    int reentry_stable = 5;
    int motion_min_area = 25;
    double min_box_side = 4.0;

    // Ablation switches.
    bool local_branch = true;
    bool classifier_update = true;
    bool reidentification = true;
    bool noise_suppression = true;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("not a number: '" + v + "'");
    return out;
}

inline int parse_int(const std::string& v) {
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("not an integer: '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw ConfigError("not a boolean: '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string format_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

struct ConfigKey {
    const char* name;
    std::function<void(TrackerConfig&, const std::string&)> set;
    std::function<std::string(const TrackerConfig&)> get;
};

#define GOT_DOUBLE_KEY(name, field)                                                       \
    ConfigKey {                                                                           \
        name, [](TrackerConfig& c, const std::string& v) { c.field = parse_double(v); }, \
            [](const TrackerConfig& c) { return format_double(c.field); }                 \
    }
#define GOT_INT_KEY(name, field)                                                       \
    ConfigKey {                                                                        \
        name, [](TrackerConfig& c, const std::string& v) { c.field = parse_int(v); }, \
            [](const TrackerConfig& c) { return std::to_string(c.field); }             \
    }
#define GOT_BOOL_KEY(name, field)                                                       \
    ConfigKey {                                                                         \
        name, [](TrackerConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
            [](const TrackerConfig& c) { return std::string(c.field ? "true" : "false"); } \
    }
#define GOT_LIST_KEY(name, field)                                                       \
    ConfigKey {                                                                         \
        name, [](TrackerConfig& c, const std::string& v) { c.field = parse_list(v); }, \
            [](const TrackerConfig& c) { return format_list(c.field); }                 \
    }

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys{
        GOT_DOUBLE_KEY("alpha", fusion.alpha),
        GOT_DOUBLE_KEY("size_tolerance", fusion.size_tolerance),
        GOT_DOUBLE_KEY("mrf_gamma", fusion.mrf_gamma),
        GOT_DOUBLE_KEY("mrf_sigma", fusion.mrf_sigma),
        GOT_INT_KEY("gmm_components", fusion.gmm_components),
        GOT_INT_KEY("gmm_iterations", fusion.gmm_iterations),
        GOT_INT_KEY("background_ring", fusion.background_ring),
        GOT_DOUBLE_KEY("objectness_clamp", fusion.objectness_clamp),
        GOT_DOUBLE_KEY("max_mask_coverage", fusion.max_mask_coverage),
        GOT_DOUBLE_KEY("dcf_lambda", dcf.lambda),
        GOT_DOUBLE_KEY("dcf_mu", dcf.mu),
        GOT_DOUBLE_KEY("dcf_sigma_factor", dcf.sigma_factor),
        GOT_LIST_KEY("dcf_scales", dcf.scales),
        GOT_DOUBLE_KEY("dcf_scale_penalty", scale_penalty),
        GOT_INT_KEY("boost_trees", boosting.trees),
        GOT_INT_KEY("boost_depth", boosting.max_depth),
        GOT_DOUBLE_KEY("boost_learning_rate", boosting.learning_rate),
        GOT_DOUBLE_KEY("boost_l2", boosting.l2),
        GOT_DOUBLE_KEY("boost_min_child_weight", boosting.min_child_weight),
        GOT_DOUBLE_KEY("quality_min_area", quality.min_area),
        GOT_DOUBLE_KEY("quality_max_area", quality.max_area),
        GOT_DOUBLE_KEY("quality_blob_ratio", quality.blob_ratio),
        GOT_INT_KEY("quality_max_blobs", quality.max_significant_blobs),
        GOT_DOUBLE_KEY("quality_max_size_cov", quality.max_size_cov),
        GOT_INT_KEY("quality_history", quality.history),
        GOT_DOUBLE_KEY("superpixel_k", segmentation.k),
        GOT_INT_KEY("superpixel_min_size", segmentation.min_size),
        GOT_DOUBLE_KEY("superpixel_sigma", segmentation.sigma),
        GOT_LIST_KEY("grouping_thresholds", grouping_thresholds),
        GOT_INT_KEY("motion_max_width", motion.max_width),
        GOT_INT_KEY("motion_max_height", motion.max_height),
        GOT_INT_KEY("motion_grid", motion.grid),
        GOT_INT_KEY("motion_search_radius", motion.search_radius),
        GOT_INT_KEY("motion_block_radius", motion.block_radius),
        GOT_DOUBLE_KEY("motion_min_block_std", motion.min_block_std),
        GOT_INT_KEY("motion_min_area", motion_min_area),
        GOT_DOUBLE_KEY("template_mu", template_mu),
        GOT_DOUBLE_KEY("objectness_threshold", objectness_threshold),
        GOT_DOUBLE_KEY("refine_threshold", refine_threshold),
        GOT_DOUBLE_KEY("presence_threshold", presence_threshold),
        GOT_DOUBLE_KEY("confident_similarity", confident_similarity),
        GOT_DOUBLE_KEY("retrain_iou", retrain_iou),
        GOT_INT_KEY("retrain_frames", retrain_frames),
        GOT_INT_KEY("reentry_stable", reentry_stable),
        GOT_DOUBLE_KEY("min_box_side", min_box_side),
        GOT_BOOL_KEY("local_branch", local_branch),
        GOT_BOOL_KEY("classifier_update", classifier_update),
        GOT_BOOL_KEY("reidentification", reidentification),
        GOT_BOOL_KEY("noise_suppression", noise_suppression),
    };
    return keys;
}

#undef GOT_DOUBLE_KEY
#undef GOT_INT_KEY
#undef GOT_BOOL_KEY
#undef GOT_LIST_KEY

}  // namespace detail

/// Set one key. Throws ConfigError on unknown keys or bad values.
inline void set_config_value(TrackerConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : detail::config_keys()) {
        if (key == k.name) {
            k.set(cfg, value);
            return;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

/// Parse "key = value" lines over the defaults. '#' starts a comment.
inline TrackerConfig parse_config(std::istream& in) {
    TrackerConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            set_config_value(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

inline TrackerConfig parse_config(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

/// Every key with its current value, one "key = value" per line.
inline std::string format_config(const TrackerConfig& cfg) {
    std::string out;
    for (const auto& k : detail::config_keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
    return out;
}

}  // namespace got

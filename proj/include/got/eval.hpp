#pragma once

// Sequence datasets, the one-pass evaluation harness, prediction logs and
// tracking metrics.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "got/config.hpp"
#include "got/geometry.hpp"
#include "got/image.hpp"
#include "got/tracker.hpp"

namespace got {

/// Bad or missing input data (as opposed to a usage error).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SequenceDataset {
    std::string name;
    std::vector<std::string> frames;                  // ordered paths
    std::vector<std::optional<BoundingBox>> truth;    // per frame, or first frame only; none = absent
};

namespace detail {

/// Split on commas, tabs and spaces, dropping empty fields.
inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',' || ch == '\t' || ch == ' ' || ch == '\r') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double parse_field(const std::string& s, int lineno) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw DataError("line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return v;
}

inline bool numeric_less(const std::filesystem::path& a, const std::filesystem::path& b) {
    const std::string sa = a.stem().string(), sb = b.stem().string();
    const bool na = !sa.empty() && std::all_of(sa.begin(), sa.end(), ::isdigit);
    const bool nb = !sb.empty() && std::all_of(sb.begin(), sb.end(), ::isdigit);
    if (na && nb && sa.size() < 19 && sb.size() < 19) {
        const long long ia = std::stoll(sa), ib = std::stoll(sb);
        if (ia != ib) return ia < ib;
    }
    if (na != nb) return na;
    return a.filename().string() < b.filename().string();
}

}  // namespace detail

/// Ground-truth lines "x,y,w,h" (comma, tab or space separated), 1-indexed.
/// Lines whose values are all zero or contain NaN mark an absent target.
inline std::vector<std::optional<BoundingBox>> parse_groundtruth(std::istream& in) {
    std::vector<std::optional<BoundingBox>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = detail::split_fields(line);
        if (f.empty()) continue;
        if (f.size() != 4) throw DataError("line " + std::to_string(lineno) + ": expected 4 values");
        double v[4];
        bool nan = false;
        for (int i = 0; i < 4; ++i) {
            v[i] = detail::parse_field(f[static_cast<std::size_t>(i)], lineno);
            nan = nan || std::isnan(v[i]);
        }
        if (nan || (v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0 && v[3] == 0.0)) {
            out.emplace_back(std::nullopt);
            continue;
        }
        if (v[2] <= 0.0 || v[3] <= 0.0) throw DataError("line " + std::to_string(lineno) + ": non-positive size");
        out.emplace_back(BoundingBox{v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
    }
    return out;
}

inline std::vector<std::optional<BoundingBox>> read_groundtruth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return parse_groundtruth(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

/// OTB-style directory: img/ with numerically named frames plus
/// groundtruth_rect.txt.
inline SequenceDataset load_sequence(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    const fs::path img = root / "img";
    const fs::path gt = root / "groundtruth_rect.txt";
    if (!fs::is_directory(img)) throw DataError("missing frame directory " + img.string());
    if (!fs::is_regular_file(gt)) throw DataError("missing " + gt.string());

    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(img)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp" || ext == ".ppm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(), detail::numeric_less);

    SequenceDataset ds;
    ds.name = root.filename().string();
    if (ds.name.empty()) ds.name = root.parent_path().filename().string();
    for (const auto& f : files) ds.frames.push_back(f.string());
    ds.truth = read_groundtruth(gt.string());
    if (ds.frames.empty()) throw DataError("no frames in " + img.string());
    if (ds.truth.empty() || !ds.truth.front()) throw DataError("first ground-truth box missing in " + gt.string());
    if (ds.truth.size() != 1 && ds.truth.size() != ds.frames.size()) {
        throw DataError("ground truth has " + std::to_string(ds.truth.size()) + " lines for " +
                        std::to_string(ds.frames.size()) + " frames");
    }
    return ds;
}

// ---- Prediction logs ------------------------------------------------------

struct Prediction {
    BoundingBox box;
    double similarity = 0.0;
};

using PredictionLog = std::vector<Prediction>;

/// "x,y,w,h,similarity" per line, 1-indexed like the ground truth, two decimals.
inline void write_log(std::ostream& os, const PredictionLog& log) {
    char buf[160];
    for (const auto& p : log) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f,%.2f\n", p.box.x + 1.0, p.box.y + 1.0, p.box.w, p.box.h,
                      p.similarity);
        os << buf;
    }
}

/// Accepts 4 (similarity 1) or 5 columns.
inline PredictionLog read_log(std::istream& in) {
    PredictionLog log;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto f = detail::split_fields(line);
        if (f.empty()) continue;
        if (f.size() != 4 && f.size() != 5) throw DataError("line " + std::to_string(lineno) + ": expected 4 or 5 values");
        Prediction p;
        p.box = {detail::parse_field(f[0], lineno) - 1.0, detail::parse_field(f[1], lineno) - 1.0,
                 detail::parse_field(f[2], lineno), detail::parse_field(f[3], lineno)};
        p.similarity = f.size() == 5 ? detail::parse_field(f[4], lineno) : 1.0;
        log.push_back(p);
    }
    return log;
}

// ---- One-pass evaluation --------------------------------------------------

/// Initialize on the first frame, step through the rest, never
/// re-initialize. Step failures are logged as absent at the last box.
inline PredictionLog run_ope(const std::vector<Image>& frames, const BoundingBox& init_box,
                             const TrackerConfig& cfg = {}) {
    if (frames.empty()) throw std::invalid_argument("run_ope: no frames");
    PredictionLog log;
    log.push_back({init_box, 1.0});
    Tracker tracker(cfg);
    tracker.init(frames.front(), init_box);
    BoundingBox last = init_box;
    for (std::size_t i = 1; i < frames.size(); ++i) {
        try {
            const StepResult r = tracker.step(frames[i]);
            last = r.box;
            log.push_back({r.box, r.similarity});
        } catch (const std::exception&) {
            log.push_back({last, 0.0});
        }
    }
    return log;
}

using FrameLoader = std::function<Image(const std::string&)>;

/// Same, streaming frames from disk through `load`.
inline PredictionLog run_ope(const SequenceDataset& ds, const FrameLoader& load, const TrackerConfig& cfg = {}) {
    if (ds.frames.empty() || ds.truth.empty() || !ds.truth.front()) throw std::invalid_argument("run_ope: invalid dataset");
    const BoundingBox init_box = *ds.truth.front();
    PredictionLog log;
    log.push_back({init_box, 1.0});
    Tracker tracker(cfg);
    tracker.init(load(ds.frames.front()), init_box);
    BoundingBox last = init_box;
    for (std::size_t i = 1; i < ds.frames.size(); ++i) {
        try {
            const StepResult r = tracker.step(load(ds.frames[i]));
            last = r.box;
            log.push_back({r.box, r.similarity});
        } catch (const std::exception&) {
            log.push_back({last, 0.0});
        }
    }
    return log;
}

// ---- Metrics --------------------------------------------------------------

inline void require_same_length(std::size_t a, std::size_t b, const char* who) {
    if (a != b) throw std::invalid_argument(std::string(who) + ": length mismatch");
}

/// Fraction of frames whose center error is at most tau pixels.
inline double distance_precision(const std::vector<BoundingBox>& preds, const std::vector<BoundingBox>& gts,
                                 double tau = 20.0) {
    require_same_length(preds.size(), gts.size(), "distance_precision");
    if (preds.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (center_distance(preds[i], gts[i]) <= tau) ++hit;
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

inline constexpr int kSuccessPoints = 21;

struct SuccessCurve {
    double auc = 0.0;
    std::vector<double> thresholds;
    std::vector<double> success;  // fraction with IoU > threshold
};

inline SuccessCurve success_auc(const std::vector<BoundingBox>& preds, const std::vector<BoundingBox>& gts) {
    require_same_length(preds.size(), gts.size(), "success_auc");
    SuccessCurve c;
    std::vector<double> ious(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) ious[i] = iou(preds[i], gts[i]);
    std::size_t hits = 0;
    for (int k = 0; k < kSuccessPoints; ++k) {
        const double theta = k / 20.0;
        std::size_t n = 0;
        for (double v : ious)
            if (v > theta) ++n;
        hits += n;
        c.thresholds.push_back(theta);
        c.success.push_back(preds.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(preds.size()));
    }
    if (!preds.empty()) c.auc = static_cast<double>(hits) / (static_cast<double>(kSuccessPoints) * static_cast<double>(preds.size()));
    return c;
}

struct MetricsReport {
    double dp = 0.0;
    double auc = 0.0;
    std::vector<double> curve;
    std::vector<double> ious;
    std::vector<double> center_errors;
};

inline MetricsReport evaluate(const std::vector<BoundingBox>& preds, const std::vector<BoundingBox>& gts) {
    require_same_length(preds.size(), gts.size(), "evaluate");
    MetricsReport r;
    r.dp = distance_precision(preds, gts);
    const SuccessCurve c = success_auc(preds, gts);
    r.auc = c.auc;
    r.curve = c.success;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        r.ious.push_back(iou(preds[i], gts[i]));
        r.center_errors.push_back(center_distance(preds[i], gts[i]));
    }
    return r;
}

inline bool present_absent(double similarity, double theta = 0.1) { return similarity >= theta; }

struct PresenceRates {
    double tpr = 0.0;
    double tnr = 0.0;
    std::size_t present_frames = 0;
    std::size_t absent_frames = 0;
};

/// TPR: present frames predicted present with IoU >= 0.5. TNR: absent
/// frames predicted absent. A rate with no frames to count is 0.
inline PresenceRates presence_rates(const PredictionLog& log, const std::vector<std::optional<BoundingBox>>& truth,
                                    double theta = 0.1) {
    require_same_length(log.size(), truth.size(), "presence_rates");
    PresenceRates r;
    std::size_t tp = 0, tn = 0;
    for (std::size_t i = 0; i < log.size(); ++i) {
        const bool predicted = present_absent(log[i].similarity, theta);
        if (truth[i]) {
            ++r.present_frames;
            if (predicted && iou(log[i].box, *truth[i]) >= 0.5) ++tp;
        } else {
            ++r.absent_frames;
            if (!predicted) ++tn;
        }
    }
    if (r.present_frames) r.tpr = static_cast<double>(tp) / static_cast<double>(r.present_frames);
    if (r.absent_frames) r.tnr = static_cast<double>(tn) / static_cast<double>(r.absent_frames);
    return r;
}

inline double geometric_mean_at(double p, double tpr, double tnr) {
    return std::sqrt(std::max(0.0, (1.0 - p) * tpr * ((1.0 - p) * tnr + p)));
}

/// max over p in [0,1] of sqrt((1-p)·TPR·((1-p)·TNR + p)): a 1e-4 grid,
/// then golden-section refinement around the best grid point.
inline double max_gm(double tpr, double tnr) {
    constexpr int steps = 10000;
    int best_k = 0;
    double best = -1.0;
    for (int k = 0; k <= steps; ++k) {
        const double v = geometric_mean_at(static_cast<double>(k) / steps, tpr, tnr);
        if (v > best) {
            best = v;
            best_k = k;
        }
    }
    double lo = std::max(0.0, (best_k - 1.0) / steps), hi = std::min(1.0, (best_k + 1.0) / steps);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 60; ++it) {
        const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
        if (geometric_mean_at(a, tpr, tnr) < geometric_mean_at(b, tpr, tnr)) lo = a;
        else hi = b;
    }
    return std::max(best, geometric_mean_at(0.5 * (lo + hi), tpr, tnr));
}

}  // namespace got

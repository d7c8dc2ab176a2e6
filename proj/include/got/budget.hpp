#pragma once

// Model size and per-frame flop accounting of the whole tracker.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "got/features.hpp"
#include "got/gbdt.hpp"
#include "got/geometry.hpp"

namespace got {

/// Flops of a 3-D convolution: 2·Ci·Kh·Kw·Ho·Wo·Co, or Ci·Kh·Kw·Ho·Wo·Co
/// for a mean filter.
inline std::int64_t conv_flops(int ci, int kh, int kw, int ho, int wo, int co, bool is_mean) {
    if (ci <= 0 || kh <= 0 || kw <= 0 || ho <= 0 || wo <= 0 || co <= 0) {
        throw std::invalid_argument("conv_flops: dimensions must be positive");
    }
    const std::int64_t f = std::int64_t{ci} * kh * kw * ho * wo * co;
    return is_mean ? f : 2 * f;
}

struct ConvRow {
    std::string step;
    int ci, kh, kw, ho, wo, co;
    bool is_mean;
    std::int64_t flops;
};

/// Per-block Saab extraction: mean color, color transform, three AC convolutions.
inline std::vector<ConvRow> saab_block_rows() {
    std::vector<ConvRow> rows{
        {"Get mean color", 1, 5, 5, 4, 4, 3, true, 0},
        {"RGB2PQR", 3, 1, 1, 8, 8, 3, false, 0},
        {"Saab on P", 1, 5, 5, 4, 4, 4, false, 0},
        {"Saab on Q", 1, 5, 5, 4, 4, 4, false, 0},
        {"Saab on R", 1, 5, 5, 4, 4, 4, false, 0},
    };
    for (auto& r : rows) r.flops = conv_flops(r.ci, r.kh, r.kw, r.ho, r.wo, r.co, r.is_mean);
    return rows;
}

inline std::int64_t saab_block_flops() {
    std::int64_t t = 0;
    for (const auto& r : saab_block_rows()) t += r.flops;
    return t;
}

struct BudgetItem {
    std::string label;
    double flops = 0.0;
    bool derived = true;  // false: fixed constant or balancing remainder
};

struct BudgetModule {
    std::string name;
    int params = 0;
    std::vector<BudgetItem> items;

    double flops() const {
        double t = 0.0;
        for (const auto& i : items) t += i.flops;
        return t;
    }
    double mflops() const { return flops() / 1e6; }
};

struct BudgetReport {
    std::vector<BudgetModule> modules;
    std::vector<BudgetItem> notes;  // informational, not summed

    int total_params() const {
        int t = 0;
        for (const auto& m : modules) t += m.params;
        return t;
    }
    double total_mflops() const {
        double t = 0.0;
        for (const auto& m : modules) t += m.mflops();
        return t;
    }
    const BudgetModule* find(const std::string& name) const {
        for (const auto& m : modules)
            if (m.name == name) return &m;
        return nullptr;
    }
};

inline constexpr int kMotionMaxHeight = 720;
inline constexpr int kMotionMaxWidth = 480;

inline BudgetReport system_report() {
    BudgetReport r;
    const double lb2 = static_cast<double>(kPatchSide) * kPatchSide;

    BudgetModule global{"Global Correlator", 0, {}};
    global.items.push_back({"DCF template update and matching", 34e6, false});
    global.items.push_back({"affine warp and motion residual 9*H*W", 9.0 * kMotionMaxHeight * kMotionMaxWidth, true});
    r.modules.push_back(global);

    BudgetModule local{"Local Correlator", SaabKernels::parameter_count() + SelectionIndex::parameter_count() +
                                               TreeEnsemble::parameter_bound(), {}};
    const double saab = 2.0 * kBlockCount * static_cast<double>(saab_block_flops());
    const double trees = 4.0 * 40.0 * kBlockCount;
    const double align_fft = std::round(lb2 * std::log2(static_cast<double>(kPatchSide)));
    local.items.push_back({"Saab features, 729 blocks, 2 passes", saab, true});
    local.items.push_back({"classifier inference 4*40*729", trees, true});
    local.items.push_back({"template alignment FFT/IFFT", align_fft, true});
    local.items.push_back({"noise suppression", lb2, true});
    local.items.push_back({"template update", 3.0 * lb2, true});
    const double local_itemized = saab + trees + align_fft + lb2 + 3.0 * lb2;
    local.items.push_back({"unitemized remainder", 18.12e6 - local_itemized, false});
    r.modules.push_back(local);

    BudgetModule sp{"Super-pixel segmentation", 0, {}};
    sp.items.push_back({"graph segmentation", 1.132e6, false});
    r.modules.push_back(sp);

    BudgetModule mrf{"MRF", 0, {}};
    mrf.items.push_back({"element-wise matrix operations 20*60*60", 20.0 * lb2, true});
    mrf.items.push_back({"unitemized remainder (GMM fitting, likelihoods)", 1.20e6 - 20.0 * lb2, false});
    r.modules.push_back(mrf);

    r.notes.push_back({"DCF D*M*N*log2(M*N), (50,50,42)", 42.0 * 50 * 50 * std::log2(2500.0), true});
    r.notes.push_back({"2D FFT & IFFT, fixed estimate", 0.072e6, false});
    r.notes.push_back({"GMM fitting, fixed estimate", 1.634e6, false});
    return r;
}

inline std::string format_budget_table(const BudgetReport& r) {
    std::string out;
    char buf[256];
    out += "Saab feature extraction per 8x8 block\n";
    std::snprintf(buf, sizeof buf, "  %-16s %3s %3s %3s %3s %3s %3s %8s\n", "Step", "Ci", "Kh", "Kw", "Ho", "Wo", "Co", "Flops");
    out += buf;
    for (const auto& row : saab_block_rows()) {
        std::snprintf(buf, sizeof buf, "  %-16s %3d %3d %3d %3d %3d %3d %8lld\n", row.step.c_str(), row.ci, row.kh, row.kw,
                      row.ho, row.wo, row.co, static_cast<long long>(row.flops));
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "  %-16s %27s %8lld\n\n", "Total", "", static_cast<long long>(saab_block_flops()));
    out += buf;

    std::snprintf(buf, sizeof buf, "%-28s %10s %10s\n", "Module", "Params", "MFlops");
    out += buf;
    for (const auto& m : r.modules) {
        std::snprintf(buf, sizeof buf, "%-28s %10d %10.2f\n", m.name.c_str(), m.params, m.mflops());
        out += buf;
        for (const auto& i : m.items) {
            std::snprintf(buf, sizeof buf, "    %-52s %12.6f%s\n", i.label.c_str(), i.flops / 1e6, i.derived ? "" : " *");
            out += buf;
        }
    }
    const int p = r.total_params();
    std::snprintf(buf, sizeof buf, "%-28s %6d,%03d %10.2f\n", "Total", p / 1000, p % 1000, r.total_mflops());
    out += buf;
    out += "\nReference figures (not summed)\n";
    for (const auto& n : r.notes) {
        std::snprintf(buf, sizeof buf, "    %-52s %12.6f%s\n", n.label.c_str(), n.flops / 1e6, n.derived ? "" : " *");
        out += buf;
    }
    out += "\n* fixed constant or balancing remainder\n";
    return out;
}

inline std::string format_budget_kv(const BudgetReport& r) {
    std::string out;
    char buf[256];
    auto key = [](std::string s) {
        for (auto& c : s) c = (c == ' ' || c == '-') ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    for (const auto& row : saab_block_rows()) {
        std::snprintf(buf, sizeof buf, "saab.%s.flops=%lld\n", key(row.step).c_str(), static_cast<long long>(row.flops));
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "saab.total.flops=%lld\n", static_cast<long long>(saab_block_flops()));
    out += buf;
    std::snprintf(buf, sizeof buf, "classifier.param_bound=%d\n", TreeEnsemble::parameter_bound());
    out += buf;
    for (const auto& m : r.modules) {
        std::snprintf(buf, sizeof buf, "module.%s.params=%d\nmodule.%s.mflops=%.2f\n", key(m.name).c_str(), m.params,
                      key(m.name).c_str(), m.mflops());
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "total.params=%d\ntotal.mflops=%.2f\n", r.total_params(), r.total_mflops());
    out += buf;
    return out;
}

}  // namespace got

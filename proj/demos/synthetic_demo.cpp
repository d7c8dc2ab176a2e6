// Track the built-in synthetic sequences and print per-sequence scores.

#include <cstdio>
#include <string>
#include <vector>

#include "got/got.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> kinds = argc > 1 ? std::vector<std::string>(argv + 1, argv + argc)
                                                    : std::vector<std::string>{"static", "translate", "deform", "occlude"};
    for (const auto& name : kinds) {
        const auto kind = got::parse_synth_kind(name);
        if (!kind) {
            std::fprintf(stderr, "unknown kind %s\n", name.c_str());
            return 2;
        }
        got::SynthOptions opt;
        opt.kind = *kind;
        const got::SynthSequence seq = got::make_synthetic(opt);
        for (bool local : {true, false}) {
            got::TrackerConfig cfg;
            cfg.local_branch = local;
            const got::PredictionLog log = got::run_ope(seq.frames, *seq.truth.front(), cfg);
            double iou_sum = 0.0, iou_min = 1.0;
            int n = 0;
            for (std::size_t t = 0; t < log.size(); ++t) {
                if (!seq.truth[t]) continue;
                const double v = got::iou(log[t].box, *seq.truth[t]);
                iou_sum += v;
                iou_min = std::min(iou_min, v);
                ++n;
            }
            std::printf("%-10s %-9s mean IoU %.3f  min IoU %.3f\n", name.c_str(), local ? "full" : "dcf-only",
                        iou_sum / n, iou_min);
        }
    }
    return 0;
}

// got: track sequences, score prediction logs, print the cost budget,
// render predictions and write synthetic sequences.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "got/got.hpp"
#include "got/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;
constexpr int kDataError = 1;

got::TrackerConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw got::DataError("cannot open config " + path);
    try {
        return got::parse_config(in);
    } catch (const got::ConfigError& e) {
        throw got::DataError(path + ": " + e.what());
    }
}

got::PredictionLog read_log_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw got::DataError("cannot open " + path);
    try {
        return got::read_log(in);
    } catch (const got::DataError& e) {
        throw got::DataError(path + ": " + e.what());
    }
}

std::string frame_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04zu.png", i + 1);
    return buf;
}

int cmd_track(const std::string& seq_dir, const std::string& out, const std::string& config_path) {
    const got::TrackerConfig cfg = load_config(config_path);
    const got::SequenceDataset ds = got::load_sequence(seq_dir);
    const got::PredictionLog log = got::run_ope(ds, got::load_image, cfg);
    std::ofstream os(out);
    if (!os) throw got::DataError("cannot write " + out);
    got::write_log(os, log);
    std::cerr << ds.name << ": " << log.size() << " frames\n";
    return 0;
}

int cmd_eval(const std::string& preds_path, const std::string& gt_path, double theta) {
    const got::PredictionLog log = read_log_file(preds_path);
    const auto truth = got::read_groundtruth(gt_path);
    if (log.size() != truth.size()) {
        throw got::DataError("prediction log has " + std::to_string(log.size()) + " lines, ground truth has " +
                             std::to_string(truth.size()));
    }
    std::vector<got::BoundingBox> preds, gts;
    for (std::size_t i = 0; i < log.size(); ++i) {
        if (!truth[i]) continue;
        preds.push_back(log[i].box);
        gts.push_back(*truth[i]);
    }
    const got::MetricsReport m = got::evaluate(preds, gts);
    std::printf("frames=%zu\n", log.size());
    std::printf("dp=%.4f\n", m.dp);
    std::printf("auc=%.4f\n", m.auc);
    const got::PresenceRates r = got::presence_rates(log, truth, theta);
    if (r.absent_frames > 0) {
        std::printf("tpr=%.4f\n", r.tpr);
        std::printf("tnr=%.4f\n", r.tnr);
        std::printf("maxgm=%.4f\n", got::max_gm(r.tpr, r.tnr));
    }
    return 0;
}

int cmd_budget(const std::string& format) {
    const got::BudgetReport r = got::system_report();
    std::cout << (format == "kv" ? got::format_budget_kv(r) : got::format_budget_table(r));
    return 0;
}

int cmd_render(const std::string& seq_dir, const std::string& preds_path, const std::string& out_dir) {
    const got::SequenceDataset ds = got::load_sequence(seq_dir);
    const got::PredictionLog log = read_log_file(preds_path);
    if (log.size() != ds.frames.size()) {
        throw got::DataError("prediction log has " + std::to_string(log.size()) + " lines for " +
                             std::to_string(ds.frames.size()) + " frames");
    }
    fs::create_directories(out_dir);
    for (std::size_t i = 0; i < log.size(); ++i) {
        got::Image img = got::load_image(ds.frames[i]);
        if (ds.truth.size() == ds.frames.size() && ds.truth[i]) got::draw_box(img, *ds.truth[i], {0.f, 255.f, 0.f}, 1);
        const bool present = got::present_absent(log[i].similarity);
        got::draw_box(img, log[i].box, present ? std::array<float, 3>{255.f, 0.f, 0.f} : std::array<float, 3>{128.f, 128.f, 128.f});
        got::save_image((fs::path(out_dir) / frame_name(i)).string(), img);
    }
    return 0;
}

int cmd_synth(const std::string& kind_name, int frames, unsigned seed, const std::string& out_dir) {
    const auto kind = got::parse_synth_kind(kind_name);
    if (!kind) {
        std::cerr << "unknown kind '" << kind_name << "' (static, translate, deform, occlude)\n";
        return kUsageError;
    }
    got::SynthOptions opt;
    opt.kind = *kind;
    opt.frames = frames;
    opt.seed = seed;
    const got::SynthSequence seq = got::make_synthetic(opt);
    const fs::path img_dir = fs::path(out_dir) / "img";
    fs::create_directories(img_dir);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) got::save_image((img_dir / frame_name(i)).string(), seq.frames[i]);
    std::ofstream gt(fs::path(out_dir) / "groundtruth_rect.txt");
    if (!gt) throw got::DataError("cannot write ground truth in " + out_dir);
    char buf[160];
    for (const auto& b : seq.truth) {
        if (b) std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.2f\n", b->x + 1.0, b->y + 1.0, b->w, b->h);
        else std::snprintf(buf, sizeof buf, "0,0,0,0\n");
        gt << buf;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Green object tracker"};
    app.require_subcommand(1);

    std::string seq, out, config, preds, gt, format = "table", kind;
    double theta = 0.1;
    int frames = 100;
    unsigned seed = 7;

    auto* track = app.add_subcommand("track", "Track a sequence directory (img/ + groundtruth_rect.txt)");
    track->add_option("--seq", seq, "Sequence directory")->required();
    track->add_option("--out", out, "Prediction log to write")->required();
    track->add_option("--config", config, "key = value config file");

    auto* eval = app.add_subcommand("eval", "Score a prediction log against ground truth");
    eval->add_option("--preds", preds, "Prediction log")->required();
    eval->add_option("--gt", gt, "Ground-truth file")->required();
    eval->add_option("--theta", theta, "Presence threshold on similarity")->check(CLI::Range(0.0, 1.0));

    auto* budget = app.add_subcommand("budget", "Print parameter and FLOP budget");
    budget->add_option("--format", format, "table or kv")->check(CLI::IsMember({"table", "kv"}));

    auto* render = app.add_subcommand("render", "Draw predictions onto the frames");
    render->add_option("--seq", seq, "Sequence directory")->required();
    render->add_option("--preds", preds, "Prediction log")->required();
    render->add_option("--out", out, "Output directory")->required();

    auto* synth = app.add_subcommand("synth", "Write a labelled synthetic sequence");
    synth->add_option("--kind", kind, "static, translate, deform or occlude")->required();
    synth->add_option("--frames", frames, "Number of frames")->check(CLI::Range(1, 100000));
    synth->add_option("--seed", seed, "Noise seed");
    synth->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsageError;
    }

    try {
        if (*track) return cmd_track(seq, out, config);
        if (*eval) return cmd_eval(preds, gt, theta);
        if (*budget) return cmd_budget(format);
        if (*render) return cmd_render(seq, preds, out);
        if (*synth) return cmd_synth(kind, frames, seed, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsageError;
}

// Command-line front end: one subcommand per stage plus `run` for the whole pipeline.

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "avlsp/avlsp.hpp"

namespace fs = std::filesystem;
using namespace avlsp;

namespace {

struct Options {
    std::string config_path;
    std::string image, probs, fov, truth, od, labels, out_dir, name, manifest;
    int iterations = -1;
    bool centerline_only = false;
    bool write_roc = false;
    bool write_debug = false;
    int jobs = 1;
    std::uint64_t seed = 1;
    PhantomSpec phantom;
};

// Defaults, then the config file, then explicit flags.
PipelineConfig resolve(const Options& o) {
    PipelineConfig cfg;
    if (!o.config_path.empty()) load_config(cfg, o.config_path);
    auto set = [](std::string& dst, const std::string& v) {
        if (!v.empty()) dst = v;
    };
    set(cfg.image, o.image);
    set(cfg.probs, o.probs);
    set(cfg.fov, o.fov);
    set(cfg.truth, o.truth);
    set(cfg.od, o.od);
    set(cfg.out_dir, o.out_dir);
    set(cfg.name, o.name);
    if (o.iterations >= 0) cfg.iterations = o.iterations;
    if (o.centerline_only) cfg.centerline_only = true;
    if (o.write_roc) cfg.write_roc = true;
    if (o.write_debug) cfg.write_debug = true;
    cfg.validate();
    return cfg;
}

void require(const std::string& path, const char* flag) {
    if (path.empty()) throw Error(ErrorCode::InvalidArgument, std::string("missing required input --") + flag);
    if (!fs::exists(path)) throw Error(ErrorCode::IoFailure, std::string("--") + flag + " file not found: " + path);
}

FovMask load_fov(const std::string& path) {
    require(path, "fov");
    return run_stage("load", [&] { return read_fov_png(path); });
}

ProbabilityTriplet load_probs(const std::string& path) {
    require(path, "probs");
    return run_stage("load", [&] { return ProbabilityTriplet(read_avpm(path)); });
}

LabelMap load_labels(const std::string& path, const char* flag) {
    require(path, flag);
    return run_stage("load", [&] { return read_label_png(path); });
}

void cmd_preprocess(const Options& o) {
    auto cfg = resolve(o);
    require(cfg.image, "image");
    auto fov = load_fov(cfg.fov);
    auto rgb = run_stage("load", [&] { return read_rgb_png(cfg.image); });
    auto six = run_stage("preprocess", [&] { return assemble_six_channel(rgb, cfg.normalization, fov); });
    fs::create_directories(cfg.out_dir);
    run_stage("write", [&] {
        write_avpm(six, fs::path(cfg.out_dir) / "input6.avpm");
        return 0;
    });
}

void cmd_label(const Options& o) {
    auto cfg = resolve(o);
    auto fov = load_fov(cfg.fov);
    auto probs = load_probs(cfg.probs);
    auto labels = run_stage("label", [&] {
        probs.validate_simplex(fov);
        return argmax_labels(probs, fov);
    });
    fs::create_directories(cfg.out_dir);
    run_stage("write", [&] {
        write_label_png(labels, fs::path(cfg.out_dir) / "labels.png");
        return 0;
    });
}

void cmd_lsp(const Options& o) {
    auto cfg = resolve(o);
    PipelineInputs in{load_probs(cfg.probs), load_fov(cfg.fov), std::nullopt, std::nullopt, std::nullopt};
    auto res = run_pipeline(in, cfg);
    write_pipeline_outputs(res, cfg);
}

void cmd_eval(const Options& o) {
    auto cfg = resolve(o);
    auto fov = load_fov(cfg.fov);
    auto pred = load_labels(o.labels, "labels");
    auto truth = load_labels(cfg.truth, "truth");
    std::optional<ProbabilityTriplet> probs;
    if (!cfg.probs.empty()) probs = load_probs(cfg.probs);
    auto ev = evaluate(pred, truth, fov, probs ? &*probs : nullptr, cfg.centerline_only);
    fs::create_directories(cfg.out_dir);
    run_stage("write", [&] {
        write_text(fs::path(cfg.out_dir) / "metrics.csv", metrics_csv(cfg.name, ev));
        if (cfg.write_roc) write_text(fs::path(cfg.out_dir) / "roc.csv", roc_csv(ev));
        return 0;
    });
}

void cmd_avr(const Options& o) {
    auto cfg = resolve(o);
    auto fov = load_fov(cfg.fov);
    auto labels = load_labels(o.labels, "labels");
    require(cfg.od, "od");
    auto od = run_stage("load", [&] { return read_od_json(cfg.od); });
    auto rep = compute_avr(labels, fov, od, cfg.knudtson, cfg.avr_min_segment_px);
    fs::create_directories(cfg.out_dir);
    run_stage("write", [&] {
        write_text(fs::path(cfg.out_dir) / "avr.csv", avr_csv(cfg.name, rep));
        return 0;
    });
}

void cmd_phantom(const Options& o) {
    auto spec = o.phantom;
    spec.seed = o.seed;
    run_stage("phantom", [&] {
        spec.validate();
        write_phantom_bundle(spec, o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir));
        return 0;
    });
}

// Manifest lines: name,probs,fov[,truth[,od[,image]]]; '#' starts a comment.
std::vector<PipelineConfig> read_manifest(const Options& o) {
    std::ifstream in(o.manifest);
    if (!in) throw Error(ErrorCode::IoFailure, "--manifest file not found: " + o.manifest);
    auto base = resolve(o);
    std::vector<PipelineConfig> jobs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
        if (f.size() < 3) throw Error(ErrorCode::ConfigError, "manifest line needs name,probs,fov: " + line);
        auto cfg = base;
        cfg.name = f[0];
        cfg.probs = f[1];
        cfg.fov = f[2];
        cfg.truth = f.size() > 3 ? f[3] : "";
        cfg.od = f.size() > 4 ? f[4] : "";
        cfg.image = f.size() > 5 ? f[5] : "";
        cfg.out_dir = (fs::path(base.out_dir) / f[0]).string();
        jobs.push_back(cfg);
    }
    return jobs;
}

int cmd_run(const Options& o) {
    if (o.manifest.empty()) {
        auto cfg = resolve(o);
        write_pipeline_outputs(run_pipeline(load_inputs(cfg), cfg), cfg);
        return 0;
    }
    auto jobs = read_manifest(o);
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    std::mutex err_mutex;
    auto worker = [&] {
        for (std::size_t k; (k = next++) < jobs.size();) {
            try {
                write_pipeline_outputs(run_pipeline(load_inputs(jobs[k]), jobs[k]), jobs[k]);
            } catch (const std::exception& e) {
                ++failures;
                std::lock_guard lock(err_mutex);
                std::cerr << "error: " << jobs[k].name << ": " << e.what() << '\n';
            }
        }
    };
    int n = std::max(1, std::min<int>(o.jobs, int(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return failures ? 1 : 0;
}

void add_config_flags(CLI::App* app, Options& o) {
    app->add_option("--config", o.config_path, "key = value config file");
    app->add_option("--out-dir", o.out_dir, "output directory");
    app->add_option("--name", o.name, "image name used in report rows");
}

void add_lsp_flags(CLI::App* app, Options& o) {
    app->add_option("--iterations", o.iterations, "propagation iterations")->check(CLI::NonNegativeNumber);
    app->add_flag("--debug", o.write_debug, "write skeleton/branch PNGs and graph.csv");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Artery/vein label propagation on retinal vessel trees"};
    app.require_subcommand(1);
    Options o;

    auto* pre = app.add_subcommand("preprocess", "six-channel normalized input (input6.avpm)");
    pre->add_option("--image", o.image, "RGB fundus PNG");
    pre->add_option("--fov", o.fov, "FOV mask PNG");
    add_config_flags(pre, o);

    auto* label = app.add_subcommand("label", "argmax labels from probabilities (labels.png)");
    label->add_option("--probs", o.probs, "AVPM probability file");
    label->add_option("--fov", o.fov, "FOV mask PNG");
    add_config_flags(label, o);

    auto* lsp = app.add_subcommand("lsp", "propagate branch scores and relabel (labels.png)");
    lsp->add_option("--probs", o.probs, "AVPM probability file");
    lsp->add_option("--fov", o.fov, "FOV mask PNG");
    add_config_flags(lsp, o);
    add_lsp_flags(lsp, o);

    auto* eval = app.add_subcommand("eval", "metrics of a label map against truth (metrics.csv)");
    eval->add_option("--labels", o.labels, "predicted label PNG");
    eval->add_option("--truth", o.truth, "truth label PNG");
    eval->add_option("--fov", o.fov, "FOV mask PNG");
    eval->add_option("--probs", o.probs, "AVPM probabilities, enables AUC rows");
    eval->add_flag("--centerline-only", o.centerline_only, "score A/V on truth centerlines only");
    eval->add_flag("--roc", o.write_roc, "also write roc.csv");
    add_config_flags(eval, o);

    auto* avr = app.add_subcommand("avr", "arteriovenous ratio of a label map (avr.csv)");
    avr->add_option("--labels", o.labels, "label PNG");
    avr->add_option("--fov", o.fov, "FOV mask PNG");
    avr->add_option("--od", o.od, "optic disc JSON {cx, cy, dd}");
    add_config_flags(avr, o);

    auto* phantom = app.add_subcommand("phantom", "synthetic vessel tree bundle");
    phantom->add_option("--seed", o.seed, "generator seed");
    phantom->add_option("--out-dir", o.out_dir, "output directory");
    phantom->add_option("--depth", o.phantom.depth, "bifurcation levels");
    phantom->add_option("--size", o.phantom.width, "image width and height")->each([&](const std::string&) {
        o.phantom.height = o.phantom.width;
    });
    phantom->add_option("--flip", o.phantom.flip_fraction, "fraction of segments with swapped A/V");
    phantom->add_option("--noise", o.phantom.noise_sigma, "probability noise sigma");
    phantom->add_option("--margin", o.phantom.margin, "true-class probability above 0.5");
    phantom->add_flag("--crossings", o.phantom.allow_crossings, "allow artery/vein crossings");

    auto* run = app.add_subcommand("run", "whole pipeline");
    run->add_option("--image", o.image, "RGB fundus PNG (optional)");
    run->add_option("--probs", o.probs, "AVPM probability file");
    run->add_option("--fov", o.fov, "FOV mask PNG");
    run->add_option("--truth", o.truth, "truth label PNG, enables metrics.csv");
    run->add_option("--od", o.od, "optic disc JSON, enables avr.csv");
    run->add_flag("--centerline-only", o.centerline_only, "score A/V on truth centerlines only");
    run->add_flag("--roc", o.write_roc, "also write roc.csv");
    run->add_option("--manifest", o.manifest, "batch file: name,probs,fov[,truth[,od[,image]]] per line");
    run->add_option("--jobs", o.jobs, "images processed in parallel (with --manifest)")->check(CLI::PositiveNumber);
    add_config_flags(run, o);
    add_lsp_flags(run, o);

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) cmd_preprocess(o);
        if (label->parsed()) cmd_label(o);
        if (lsp->parsed()) cmd_lsp(o);
        if (eval->parsed()) cmd_eval(o);
        if (avr->parsed()) cmd_avr(o);
        if (phantom->parsed()) cmd_phantom(o);
        if (run->parsed()) return cmd_run(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

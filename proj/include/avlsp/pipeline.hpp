#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "avlsp/avr.hpp"
#include "avlsp/config.hpp"
#include "avlsp/error.hpp"
#include "avlsp/io.hpp"
#include "avlsp/lsp.hpp"
#include "avlsp/metrics.hpp"
#include "avlsp/phantom.hpp"
#include "avlsp/preprocess.hpp"
#include "avlsp/raster.hpp"
#include "avlsp/skeleton.hpp"
#include "avlsp/vessel_graph.hpp"

namespace avlsp {

/// Error raised by a pipeline stage; the message is prefixed with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.code(), stage + ": " + cause.what(), Verbatim{}), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e);
    }
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

// ------------------------------------------------------------------ LSP ---

struct LspOutput {
    LabelMap initial;  // argmax labels
    LabelMap labels;   // after propagation
    Skeleton skeleton;
    std::vector<Branch> branches;
    PropagationResult propagation;
    BranchAssignment assignment;
};

/**
 * @brief Argmax labels, skeleton, branches, propagation and relabeling.
 *
 * Without any branch there is nothing to propagate and the argmax labels
 * are returned unchanged.
 */
inline LspOutput run_lsp(const ProbabilityTriplet& probs, const FovMask& fov, const GraphParams& params,
                         int iterations) {
    LspOutput out;
    out.initial = run_stage("label", [&] { return argmax_labels(probs, fov); });
    auto vessels = out.initial.vessel_mask();
    out.skeleton = run_stage("skeletonize", [&] { return skeletonize(vessels); });
    out.branches = run_stage("skeletonize", [&] { return extract_branches(out.skeleton); });
    if (out.branches.empty()) {
        out.labels = out.initial;
        out.assignment = BranchAssignment{fov.width(), fov.height(), std::vector<std::int32_t>(fov.size(), -1)};
        return out;
    }
    out.propagation = run_stage("lsp", [&] {
        return propagate(score_branches(out.branches, likelihood_map(probs)), params, iterations);
    });
    out.assignment = run_stage("relabel", [&] { return assign_pixels_to_branches(vessels, out.branches); });
    out.labels = run_stage("relabel", [&] { return relabel(out.initial, out.propagation.scores, out.assignment); });
    return out;
}

// -------------------------------------------------------------- metrics ---

struct MetricRow {
    std::string stratum;
    std::string metric;
    std::optional<double> value;
};

struct Evaluation {
    std::vector<MetricRow> rows;
    std::optional<RocResult> vessel_roc;
    std::optional<RocResult> av_roc;
};

/**
 * @brief Every metric of a prediction against a truth label map.
 *
 * AUCs need the probability maps: vessel AUC ranks inside-FOV pixels by
 * vessel probability, A/V AUC ranks truth vessel pixels by artery
 * likelihood.
 */
inline Evaluation evaluate(const LabelMap& pred, const LabelMap& truth, const FovMask& fov,
                           const ProbabilityTriplet* probs, bool centerline_only) {
    return run_stage("eval", [&] {
        truth.validate(fov);
        Evaluation ev;
        ev.rows.push_back({"all", "accuracy_3class", three_class_accuracy(pred, truth, fov)});
        auto ss = av_sensitivity_specificity(pred, truth, fov, centerline_only);
        ev.rows.push_back({"all", "av_sensitivity", ss.sensitivity});
        ev.rows.push_back({"all", "av_specificity", ss.specificity});

        if (probs) {
            if (probs->width() != fov.width() || probs->height() != fov.height()) {
                throw Error(ErrorCode::DimensionMismatch, "probabilities and FOV differ in size");
            }
            std::vector<std::uint8_t> vessel(truth.size()), artery(truth.size()), truth_vessel(truth.size());
            for (std::size_t i = 0; i < truth.size(); ++i) {
                vessel[i] = is_vessel(truth[i]);
                artery[i] = truth[i] == kArtery;
                truth_vessel[i] = fov.inside(i) && is_vessel(truth[i]);
            }
            ev.vessel_roc = roc_auc(vessel_probability(*probs), vessel, fov);
            ev.rows.push_back({"all", "vessel_auc", ev.vessel_roc->auc});
            auto lik = likelihood_map(*probs);
            std::vector<double> s(lik.samples().begin(), lik.samples().end());
            ev.av_roc = roc_auc(s, artery, truth_vessel);
            ev.rows.push_back({"all", "av_auc", ev.av_roc->auc});
        }

        auto diameters = vessel_diameter_field(truth.vessel_mask());
        for (const auto& st : stratify_by_diameter(diameters, pred, truth, fov)) {
            std::string name(to_string(st.stratum));
            ev.rows.push_back({name, "pixels", double(st.pixels)});
            ev.rows.push_back({name, "fraction", st.fraction});
            ev.rows.push_back({name, "accuracy_3class", st.accuracy});
            ev.rows.push_back({name, "av_sensitivity",
                               st.av ? std::optional<double>(st.av->sensitivity) : std::nullopt});
            ev.rows.push_back({name, "av_specificity",
                               st.av ? std::optional<double>(st.av->specificity) : std::nullopt});
        }
        return ev;
    });
}

inline std::string metrics_csv(const std::string& image, const Evaluation& ev) {
    std::ostringstream os;
    os << "image,stratum,metric,value\n";
    for (const auto& r : ev.rows) os << image << ',' << r.stratum << ',' << r.metric << ',' << format_optional(r.value) << '\n';
    return os.str();
}

inline std::string roc_csv(const Evaluation& ev) {
    std::ostringstream os;
    os << "curve,threshold,tpr,fpr\n";
    auto emit = [&os](const char* name, const std::optional<RocResult>& r) {
        if (!r) return;
        for (std::size_t k = 0; k < r->curve.thresholds.size(); ++k) {
            os << name << ',' << format_number(r->curve.thresholds[k]) << ',' << format_number(r->curve.tpr[k]) << ','
               << format_number(1.0 - r->curve.tnr[k]) << '\n';
        }
    };
    emit("vessel", ev.vessel_roc);
    emit("av", ev.av_roc);
    return os.str();
}

// ------------------------------------------------------------------ AVR ---

struct AvrReport {
    std::optional<double> local_avr;
    std::optional<double> global_avr;
    std::size_t arteries_measured = 0;  // in the annulus, after keeping the six widest
    std::size_t veins_measured = 0;
    std::optional<double> mean_artery_diameter;  // centerline-pixel weighted, whole FOV
    std::optional<double> mean_vein_diameter;
};

/**
 * @brief Local and global AVR from a final A/V label map.
 *
 * Branches are re-derived from the label map's vessel mask; each takes the
 * majority class of its centerline pixels. Missing classes yield NA values
 * rather than errors.
 */
inline AvrReport compute_avr(const LabelMap& labels, const FovMask& fov, const OpticDiscSpec& od,
                             const KnudtsonConstants& k, std::size_t min_segment_px) {
    return run_stage("avr", [&] {
        od.validate(fov);
        k.validate();
        auto vessels = labels.vessel_mask();
        auto skeleton = skeletonize(vessels);
        auto branches = extract_branches(skeleton);
        std::vector<double> sign(branches.size());
        for (std::size_t b = 0; b < branches.size(); ++b) {
            long votes = 0;
            for (auto p : branches[b].pixels) votes += labels.at(p.x, p.y) == kArtery ? 1 : -1;
            sign[b] = votes > 0 ? 1.0 : -1.0;
        }
        auto diameters = diameter_map(vessels, skeleton);
        const int w = labels.width();

        AvrReport rep;
        auto all = measure_segments(branches, sign, diameters, w);
        double a_sum = 0.0, a_n = 0.0, v_sum = 0.0, v_n = 0.0;
        for (const auto& m : all) {
            if (!fov.inside(m.representative.x, m.representative.y)) continue;
            auto& sum = m.vessel_class == VesselClass::Artery ? a_sum : v_sum;
            auto& n = m.vessel_class == VesselClass::Artery ? a_n : v_n;
            sum += m.diameter * double(m.pixels);
            n += double(m.pixels);
        }
        if (a_n > 0.0) rep.mean_artery_diameter = a_sum / a_n;
        if (v_n > 0.0) rep.mean_vein_diameter = v_sum / v_n;
        if (a_n > 0.0 && v_n > 0.0) rep.global_avr = global_avr(all, fov);

        auto clipped = measure_segments(branches, sign, diameters, w, min_segment_px,
                                        [&](Point p) { return in_measurement_annulus(p, od); });
        auto sel = annulus_select(clipped, od);
        rep.arteries_measured = sel.arteries.size();
        rep.veins_measured = sel.veins.size();
        if (!sel.arteries.empty() && !sel.veins.empty()) rep.local_avr = local_avr(sel, k);
        return rep;
    });
}

inline std::string avr_csv(const std::string& image, const AvrReport& r) {
    std::ostringstream os;
    os << "image,local_avr,global_avr,arteries_measured,veins_measured,mean_artery_diameter,mean_vein_diameter\n";
    os << image << ',' << format_optional(r.local_avr) << ',' << format_optional(r.global_avr) << ','
       << r.arteries_measured << ',' << r.veins_measured << ',' << format_optional(r.mean_artery_diameter) << ','
       << format_optional(r.mean_vein_diameter) << '\n';
    return os.str();
}

// ----------------------------------------------------------------- JSON ---

inline OpticDiscSpec read_od_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open optic disc file " + path.string());
    try {
        auto j = nlohmann::json::parse(in);
        return OpticDiscSpec{j.at("cx").get<double>(), j.at("cy").get<double>(), j.at("dd").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
}

inline nlohmann::json od_json(const OpticDiscSpec& od) { return {{"cx", od.cx}, {"cy", od.cy}, {"dd", od.dd}}; }

inline nlohmann::json trace_json(const LspOutput& lsp) {
    nlohmann::json j;
    j["branches"] = lsp.branches.size();
    j["initial"] = lsp.propagation.initial;
    j["final"] = lsp.propagation.scores;
    j["iterations"] = nlohmann::json::array();
    for (const auto& it : lsp.propagation.iterations) {
        nlohmann::json step;
        step["root"] = it.tree.root;
        step["s_init"] = it.s_init;
        step["s_up"] = it.s_up;
        step["s_fin"] = it.s_fin;
        step["edges"] = nlohmann::json::array();
        for (const auto& e : it.tree.edges) step["edges"].push_back({e.i, e.j, e.cost_pos, e.cost_lab});
        j["iterations"].push_back(step);
    }
    return j;
}

inline std::string graph_csv(const VesselGraph& g) {
    std::ostringstream os;
    os << "i,j,cost_pos,cost_lab\n";
    for (const auto& e : g.edges) {
        os << e.i << ',' << e.j << ',' << format_number(e.cost_pos) << ',' << format_number(e.cost_lab) << '\n';
    }
    return os.str();
}

inline std::string branch_scores_csv(const LspOutput& lsp) {
    std::ostringstream os;
    os << "branch,pixels,x1,y1,x2,y2,initial,final\n";
    for (std::size_t b = 0; b < lsp.branches.size(); ++b) {
        const auto& br = lsp.branches[b];
        os << br.id << ',' << br.size() << ',' << br.front().x << ',' << br.front().y << ',' << br.back().x << ','
           << br.back().y << ',' << format_number(lsp.propagation.initial[b]) << ','
           << format_number(lsp.propagation.scores[b]) << '\n';
    }
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

// -------------------------------------------------------------- bundles ---

/// Phantom bundle: image.png, truth.png, fov.png, probs.avpm, branches.json, od.json.
inline void write_phantom_bundle(const PhantomSpec& spec, const std::filesystem::path& dir) {
    auto ph = generate(spec);
    auto corrupted = corrupt(ph, spec);
    std::filesystem::create_directories(dir);
    write_rgb_png(render_image(ph, spec.seed), dir / "image.png");
    write_label_png(ph.truth, dir / "truth.png");
    write_fov_png(ph.fov, dir / "fov.png");
    write_avpm(corrupted.probs.raster(), dir / "probs.avpm");

    nlohmann::json gt;
    gt["seed"] = spec.seed;
    gt["flip_fraction"] = spec.flip_fraction;
    gt["noise_sigma"] = spec.noise_sigma;
    gt["margin"] = spec.margin;
    gt["flipped"] = corrupted.flipped;
    gt["segments"] = nlohmann::json::array();
    for (const auto& s : ph.segments) {
        gt["segments"].push_back({{"id", s.id},
                                  {"parent", s.parent},
                                  {"class", s.vessel_class == VesselClass::Artery ? "artery" : "vein"},
                                  {"x0", s.x0},
                                  {"y0", s.y0},
                                  {"x1", s.x1},
                                  {"y1", s.y1},
                                  {"width", s.width}});
    }
    write_text(dir / "branches.json", gt.dump(2) + "\n");
    write_text(dir / "od.json", od_json(ph.od).dump(2) + "\n");
}

// ------------------------------------------------------------- pipeline ---

struct PipelineInputs {
    ProbabilityTriplet probs;
    FovMask fov;
    std::optional<Raster2D> image;
    std::optional<LabelMap> truth;
    std::optional<OpticDiscSpec> od;
};

struct PipelineResult {
    LspOutput lsp;
    std::optional<Evaluation> evaluation;
    std::optional<AvrReport> avr;
};

inline PipelineInputs load_inputs(const PipelineConfig& cfg) {
    auto require = [](const std::string& path, const char* what) {
        if (path.empty()) throw Error(ErrorCode::InvalidArgument, std::string("missing required input --") + what);
        if (!std::filesystem::exists(path)) {
            throw Error(ErrorCode::IoFailure, std::string(what) + " file not found: " + path);
        }
    };
    PipelineInputs in;
    run_stage("load", [&] {
        require(cfg.fov, "fov");
        require(cfg.probs, "probs");
        in.fov = read_fov_png(cfg.fov);
        in.probs = ProbabilityTriplet(read_avpm(cfg.probs));
        if (!cfg.image.empty()) {
            require(cfg.image, "image");
            in.image = read_rgb_png(cfg.image);
        }
        if (!cfg.truth.empty()) {
            require(cfg.truth, "truth");
            in.truth = read_label_png(cfg.truth);
        }
        if (!cfg.od.empty()) {
            require(cfg.od, "od");
            in.od = read_od_json(cfg.od);
        }
        return 0;
    });
    return in;
}

/// Labels, then metrics when a truth map is given, then AVR when an optic disc is given.
inline PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg) {
    run_stage("config", [&] {
        cfg.validate();
        return 0;
    });
    run_stage("load", [&] {
        in.probs.validate_simplex(in.fov);
        if (in.image && (in.image->width() != in.fov.width() || in.image->height() != in.fov.height())) {
            throw Error(ErrorCode::DimensionMismatch, "image and FOV differ in size");
        }
        if (in.truth && !in.truth->same_shape(in.fov)) {
            throw Error(ErrorCode::DimensionMismatch, "truth and FOV differ in size");
        }
        return 0;
    });
    PipelineResult res;
    res.lsp = run_lsp(in.probs, in.fov, cfg.graph, cfg.iterations);
    if (in.truth) res.evaluation = evaluate(res.lsp.labels, *in.truth, in.fov, &in.probs, cfg.centerline_only);
    if (in.od) res.avr = compute_avr(res.lsp.labels, in.fov, *in.od, cfg.knudtson, cfg.avr_min_segment_px);
    return res;
}

/**
 * @brief Write labels.png, branch_scores.csv, trace.json and the optional reports.
 *
 * metrics.csv (and roc.csv with write_roc) appear when a truth map was
 * evaluated, avr.csv when AVR was computed. write_debug adds skeleton.png,
 * branches.png and graph.csv.
 */
inline void write_pipeline_outputs(const PipelineResult& res, const PipelineConfig& cfg) {
    run_stage("write", [&] {
        std::filesystem::path dir(cfg.out_dir);
        std::filesystem::create_directories(dir);
        write_label_png(res.lsp.labels, dir / "labels.png");
        write_text(dir / "branch_scores.csv", branch_scores_csv(res.lsp));
        write_text(dir / "trace.json", trace_json(res.lsp).dump(1) + "\n");
        if (res.evaluation) {
            write_text(dir / "metrics.csv", metrics_csv(cfg.name, *res.evaluation));
            if (cfg.write_roc) write_text(dir / "roc.csv", roc_csv(*res.evaluation));
        }
        if (res.avr) write_text(dir / "avr.csv", avr_csv(cfg.name, *res.avr));
        if (cfg.write_debug) {
            Image8 skel{res.lsp.skeleton.width(), res.lsp.skeleton.height(), 1, res.lsp.skeleton.data()};
            for (auto& v : skel.pixels) v = v ? 255 : 0;
            write_png(skel, dir / "skeleton.png");
            Image8 ids{skel.width, skel.height, 1, std::vector<std::uint8_t>(skel.pixels.size(), 0)};
            for (const auto& b : res.lsp.branches) {
                for (auto p : b.pixels) ids.pixels[std::size_t(p.y) * ids.width + p.x] = std::uint8_t(1 + b.id % 255);
            }
            write_png(ids, dir / "branches.png");
            if (!res.lsp.branches.empty()) {
                std::vector<ScoredBranch> scored;
                for (std::size_t b = 0; b < res.lsp.branches.size(); ++b) {
                    scored.push_back({res.lsp.branches[b], res.lsp.propagation.initial[b]});
                }
                write_text(dir / "graph.csv", graph_csv(build_graph(scored, cfg.graph)));
            }
        }
        return 0;
    });
}

} // namespace avlsp

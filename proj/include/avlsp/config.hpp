#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "avlsp/avr.hpp"
#include "avlsp/error.hpp"
#include "avlsp/preprocess.hpp"
#include "avlsp/vessel_graph.hpp"

namespace avlsp {

struct PipelineConfig {
    GraphParams graph;
    NormalizationParams normalization;
    KnudtsonConstants knudtson;
    int iterations = 2;
    std::size_t avr_min_segment_px = 5;  // shorter annulus segments are not measured for local AVR
    bool centerline_only = false;
    bool write_roc = false;
    bool write_debug = false;

    std::string image;
    std::string probs;
    std::string fov;
    std::string truth;
    std::string od;
    std::string out_dir = ".";
    std::string name = "image";

    void validate() const {
        graph.validate();
        normalization.validate();
        knudtson.validate();
        if (iterations < 0) throw Error(ErrorCode::ConfigError, "iterations must be >= 0");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw Error(ErrorCode::ConfigError, key + ": not a number: " + v);
    return d;
}

inline long parse_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    long n = std::strtol(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size()) throw Error(ErrorCode::ConfigError, key + ": not an integer: " + v);
    return n;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::ConfigError, key + ": not a boolean: " + v);
}

using Setter = std::function<void(PipelineConfig&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
    static const std::map<std::string, Setter> setters = [] {
        std::map<std::string, Setter> m;
        m["sigma_pos"] = [](PipelineConfig& c, const std::string& v) { c.graph.sigma_pos = parse_double("sigma_pos", v); };
        m["sigma_lab"] = [](PipelineConfig& c, const std::string& v) { c.graph.sigma_lab = parse_double("sigma_lab", v); };
        m["sigma_prop"] = [](PipelineConfig& c, const std::string& v) { c.graph.sigma_prop = parse_double("sigma_prop", v); };
        m["lambda_angle"] = [](PipelineConfig& c, const std::string& v) {
            c.graph.lambda_angle = parse_double("lambda_angle", v);
        };
        m["max_link_distance"] = [](PipelineConfig& c, const std::string& v) {
            c.graph.max_link_distance = parse_double("max_link_distance", v);
        };
        m["sigma0"] = [](PipelineConfig& c, const std::string& v) { c.normalization.sigma0 = parse_double("sigma0", v); };
        m["kernel_fraction"] = [](PipelineConfig& c, const std::string& v) {
            c.normalization.kernel_fraction = parse_double("kernel_fraction", v);
        };
        m["epsilon"] = [](PipelineConfig& c, const std::string& v) { c.normalization.epsilon = parse_double("epsilon", v); };
        m["c_artery"] = [](PipelineConfig& c, const std::string& v) { c.knudtson.c_artery = parse_double("c_artery", v); };
        m["c_vein"] = [](PipelineConfig& c, const std::string& v) { c.knudtson.c_vein = parse_double("c_vein", v); };
        m["iterations"] = [](PipelineConfig& c, const std::string& v) { c.iterations = int(parse_int("iterations", v)); };
        m["avr_min_segment_px"] = [](PipelineConfig& c, const std::string& v) {
            long n = parse_int("avr_min_segment_px", v);
            if (n < 1) throw Error(ErrorCode::ConfigError, "avr_min_segment_px must be >= 1");
            c.avr_min_segment_px = std::size_t(n);
        };
        m["centerline_only"] = [](PipelineConfig& c, const std::string& v) {
            c.centerline_only = parse_bool("centerline_only", v);
        };
        m["write_roc"] = [](PipelineConfig& c, const std::string& v) { c.write_roc = parse_bool("write_roc", v); };
        m["write_debug"] = [](PipelineConfig& c, const std::string& v) { c.write_debug = parse_bool("write_debug", v); };
        m["image"] = [](PipelineConfig& c, const std::string& v) { c.image = v; };
        m["probs"] = [](PipelineConfig& c, const std::string& v) { c.probs = v; };
        m["fov"] = [](PipelineConfig& c, const std::string& v) { c.fov = v; };
        m["truth"] = [](PipelineConfig& c, const std::string& v) { c.truth = v; };
        m["od"] = [](PipelineConfig& c, const std::string& v) { c.od = v; };
        m["out_dir"] = [](PipelineConfig& c, const std::string& v) { c.out_dir = v; };
        m["name"] = [](PipelineConfig& c, const std::string& v) { c.name = v; };
        return m;
    }();
    return setters;
}

} // namespace detail

inline void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    const auto& setters = detail::config_setters();
    auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::ConfigError, "unknown config key '" + key + "'");
    it->second(cfg, value);
}

/**
 * @brief Apply a flat `key = value` text onto cfg.
 *
 * Blank lines and lines starting with '#' are ignored. Unknown keys are errors.
 */
inline void parse_config(PipelineConfig& cfg, std::istream& in, const std::string& source = "config") {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        try {
            set_config_value(cfg, detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigError, source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline void load_config(PipelineConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
    parse_config(cfg, in, path.string());
}

} // namespace avlsp

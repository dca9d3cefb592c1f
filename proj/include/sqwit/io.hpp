#pragma once

// Artifact layer for the command line tools: CSV tables, JSON configs and
// summaries with a stable key order, static SVG line plots, atomic file
// writes, and the run manifest that lets any finished run be reproduced from
// its own output directory.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqwit/protocol.hpp"
#include "sqwit/version.hpp"

namespace sqwit::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = schema_version;
inline constexpr const char* kEngineVersion = "sqwit " SQWIT_VERSION;

// ---------------------------------------------------------------- formatting

// shortest text that still round-trips the exact double
inline std::string fmt_g17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string cell(double v) { return fmt_g17(v); }
inline std::string cell(std::int64_t v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }

// ----------------------------------------------------------------------- csv

// RFC-4180 style: quote when the field holds a comma, quote, or newline, and
// double any embedded quotes
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) {
        if (row.size() != header.size())
            throw std::logic_error("csv: row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::string to_string() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out.push_back(',');
                out += csv_field(cells[i]);
            }
            out.push_back('\n');
        };
        line(header);
        for (const auto& r : rows) line(r);
        return out;
    }
};

// -------------------------------------------------------------- file writing

// write to a sibling temp file and rename into place, so readers never see a
// partially written artifact
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("io: cannot open " + tmp.string() + " for writing");
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("io: short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("io: cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string iso8601_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ------------------------------------------------------------------ svg plot

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct PlotSpec {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
};

inline std::string escape_xml(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

// self-contained static line plot; deterministic output for fixed input
inline std::string render_line_plot(const PlotSpec& spec) {
    const double w = 720, h = 460;
    const double x0 = 70, y0 = 42, x1 = 698, y1 = 402;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : spec.series) {
        std::size_t n = std::min(s.x.size(), s.y.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!(xmin <= xmax)) { xmin = 0; xmax = 1; }
    if (!(ymin <= ymax)) { ymin = 0; ymax = 1; }
    auto pad = [](double& lo, double& hi) {
        double span = hi - lo;
        if (span <= 0) span = std::max(1.0, std::abs(lo));
        lo -= 0.04 * span;
        hi += 0.04 * span;
    };
    pad(xmin, xmax);
    pad(ymin, ymax);
    auto px = [&](double x) { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); };
    auto py = [&](double y) { return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0); };
    auto num = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.2f", v);
        return std::string(b);
    };
    auto tick = [](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.6g", v);
        return std::string(b);
    };
    static const char* palette[] = {"#1667b8", "#c8452c", "#2d8a4e", "#8a57c9", "#b88616"};
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + num(w) + " " + num(h) +
           "\" font-family=\"sans-serif\">\n";
    svg += "<rect width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"#ffffff\"/>\n";
    svg += "<text x=\"" + num(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           escape_xml(spec.title) + "</text>\n";
    for (int k = 0; k < 5; ++k) {
        double tx = xmin + (xmax - xmin) * k / 4.0;
        double ty = ymin + (ymax - ymin) * k / 4.0;
        svg += "<line x1=\"" + num(px(tx)) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px(tx)) +
               "\" y2=\"" + num(y1) + "\" stroke=\"#e3e3e3\"/>\n";
        svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(py(ty)) + "\" x2=\"" + num(x1) +
               "\" y2=\"" + num(py(ty)) + "\" stroke=\"#e3e3e3\"/>\n";
        svg += "<text x=\"" + num(px(tx)) + "\" y=\"" + num(y1 + 18) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + escape_xml(tick(tx)) + "</text>\n";
        svg += "<text x=\"" + num(x0 - 6) + "\" y=\"" + num(py(ty) + 4) +
               "\" text-anchor=\"end\" font-size=\"11\">" + escape_xml(tick(ty)) + "</text>\n";
    }
    svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(x1 - x0) +
           "\" height=\"" + num(y1 - y0) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* color = palette[si % 5];
        std::size_t n = std::min(s.x.size(), s.y.size());
        std::string pts;
        auto flush = [&]() {
            if (pts.empty()) return;
            svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
                   "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
            pts.clear();
        };
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                flush();
                continue;
            }
            if (!pts.empty()) pts.push_back(' ');
            pts += num(px(s.x[i])) + "," + num(py(s.y[i]));
        }
        flush();
        double ly = y0 + 16 + 17 * double(si);
        svg += "<line x1=\"" + num(x1 - 150) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
               num(x1 - 126) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"1.8\"/>\n";
        svg += "<text x=\"" + num(x1 - 120) + "\" y=\"" + num(ly) + "\" font-size=\"12\">" +
               escape_xml(s.name) + "</text>\n";
    }
    svg += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(h - 14) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + escape_xml(spec.xlabel) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + num((y0 + y1) / 2) +
           "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 " +
           num((y0 + y1) / 2) + ")\">" + escape_xml(spec.ylabel) + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

inline void write_line_plot(const std::filesystem::path& path, const PlotSpec& spec) {
    write_atomic(path, render_line_plot(spec));
}

// --------------------------------------------------------------- json basics

inline json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json cx_to_json(cx v) { return json::array({v.real(), v.imag()}); }

inline cx cx_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(what + ": expected [re, im]");
    return cx(j[0].get<double>(), j[1].get<double>());
}

// strict object reader: missing keys fall back to defaults, present keys are
// type checked, and anything unrecognized is an error so config typos cannot
// silently revert a parameter to its default
class Fields {
public:
    Fields(const json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
        if (!j_.is_object()) throw ConfigError(scope_ + ": expected a JSON object");
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    double num(const char* key, double def) {
        const json* v = take_(key);
        if (!v) return def;
        if (!v->is_number()) throw ConfigError(path_(key) + ": expected a number");
        return v->get<double>();
    }

    std::int64_t integer(const char* key, std::int64_t def) {
        const json* v = take_(key);
        if (!v) return def;
        if (!v->is_number_integer() && !v->is_number_unsigned())
            throw ConfigError(path_(key) + ": expected an integer");
        return v->get<std::int64_t>();
    }

    std::uint64_t uinteger(const char* key, std::uint64_t def) {
        const json* v = take_(key);
        if (!v) return def;
        if (v->is_number_unsigned()) return v->get<std::uint64_t>();
        if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
            return std::uint64_t(v->get<std::int64_t>());
        throw ConfigError(path_(key) + ": expected a non-negative integer");
    }

    bool boolean(const char* key, bool def) {
        const json* v = take_(key);
        if (!v) return def;
        if (!v->is_boolean()) throw ConfigError(path_(key) + ": expected a boolean");
        return v->get<bool>();
    }

    std::string str(const char* key, std::string def) {
        const json* v = take_(key);
        if (!v) return def;
        if (!v->is_string()) throw ConfigError(path_(key) + ": expected a string");
        return v->get<std::string>();
    }

    cx complex(const char* key, cx def) {
        const json* v = take_(key);
        if (!v) return def;
        return cx_from_json(*v, path_(key));
    }

    json object(const char* key) {
        const json* v = take_(key);
        if (!v) return json::object();
        if (!v->is_object()) throw ConfigError(path_(key) + ": expected an object");
        return *v;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(scope_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json* take_(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) return nullptr;
        return &*it;
    }
    std::string path_(const char* key) const { return scope_ + "." + key; }

    const json& j_;
    std::string scope_;
    std::set<std::string> seen_;
};

// ------------------------------------------------------------ config <-> json

inline json source_to_json(const SourceConfig& s) {
    json j;
    j["alpha_mean"] = cx_to_json(s.alpha_mean);
    j["alpha_sigma"] = s.alpha_sigma;
    j["r_min"] = s.r_min;
    j["r_max"] = s.r_max;
    j["squeeze_phase"] = s.squeeze_phase;
    j["max_abs_alpha"] = s.max_abs_alpha;
    return j;
}

inline SourceConfig source_from_json(const json& j, const std::string& scope,
                                     const SourceConfig& def) {
    Fields f(j, scope);
    SourceConfig out;
    out.alpha_mean = f.complex("alpha_mean", def.alpha_mean);
    out.alpha_sigma = f.num("alpha_sigma", def.alpha_sigma);
    out.r_min = f.num("r_min", def.r_min);
    out.r_max = f.num("r_max", def.r_max);
    out.squeeze_phase = f.num("squeeze_phase", def.squeeze_phase);
    out.max_abs_alpha = f.num("max_abs_alpha", def.max_abs_alpha);
    f.finish();
    return out;
}

inline json guard_to_json(const GuardThresholds& g) {
    json j;
    j["min_occupation"] = g.min_occupation;
    j["commutator_tol"] = g.commutator_tol;
    j["leakage_bound"] = g.leakage_bound;
    return j;
}

inline GuardThresholds guard_from_json(const json& j, const std::string& scope,
                                       const GuardThresholds& def) {
    Fields f(j, scope);
    GuardThresholds out;
    out.min_occupation = f.num("min_occupation", def.min_occupation);
    out.commutator_tol = f.num("commutator_tol", def.commutator_tol);
    out.leakage_bound = f.num("leakage_bound", def.leakage_bound);
    f.finish();
    return out;
}

inline json detector_to_json(const DetectorConfig& d) {
    json j;
    j["kind"] = d.kind == DetectorConfig::Kind::spd ? "spd" : "nrpd";
    j["efficiency"] = d.efficiency;
    j["ceiling"] = d.ceiling;
    j["dark_rate"] = d.dark_rate;
    return j;
}

inline DetectorConfig detector_from_json(const json& j, const std::string& scope,
                                         const DetectorConfig& def) {
    Fields f(j, scope);
    DetectorConfig out;
    std::string kind =
        f.str("kind", def.kind == DetectorConfig::Kind::spd ? "spd" : "nrpd");
    if (kind == "nrpd")
        out.kind = DetectorConfig::Kind::nrpd;
    else if (kind == "spd")
        out.kind = DetectorConfig::Kind::spd;
    else
        throw ConfigError(scope + ".kind: expected \"nrpd\" or \"spd\"");
    out.efficiency = f.num("efficiency", def.efficiency);
    out.ceiling = int(f.integer("ceiling", def.ceiling));
    out.dark_rate = f.num("dark_rate", def.dark_rate);
    f.finish();
    return out;
}

inline json protocol_config_to_json(const ProtocolConfig& c) {
    json j;
    j["n_max1"] = c.n_max1;
    j["n_max2"] = c.n_max2;
    j["alpha"] = cx_to_json(c.alpha);
    j["theta"] = c.theta;
    j["phi"] = c.phi;
    j["port_amplitude"] = cx_to_json(c.port_amplitude);
    j["n_target"] = c.n_target;
    j["method"] = c.method;
    j["target_mean"] = c.target_mean;
    j["eta_att"] = c.eta_att;
    j["window"] = c.window;
    j["pulses"] = c.pulses;
    j["master_seed"] = c.master_seed;
    j["per_copy_counter"] = c.per_copy_counter;
    j["kernel_dim1"] = c.kernel_dim1;
    j["source"] = source_to_json(c.source);
    j["guard"] = guard_to_json(c.guard);
    j["detector"] = detector_to_json(c.detector);
    return j;
}

inline ProtocolConfig protocol_config_from_json(const json& j) {
    ProtocolConfig def, out;
    Fields f(j, "protocol");
    out.n_max1 = int(f.integer("n_max1", def.n_max1));
    out.n_max2 = int(f.integer("n_max2", def.n_max2));
    out.alpha = f.complex("alpha", def.alpha);
    out.theta = f.num("theta", def.theta);
    out.phi = f.num("phi", def.phi);
    out.port_amplitude = f.complex("port_amplitude", def.port_amplitude);
    out.n_target = f.num("n_target", def.n_target);
    out.method = f.str("method", def.method);
    out.target_mean = f.num("target_mean", def.target_mean);
    out.eta_att = f.num("eta_att", def.eta_att);
    out.window = f.num("window", def.window);
    out.pulses = f.integer("pulses", def.pulses);
    out.master_seed = f.uinteger("master_seed", def.master_seed);
    out.per_copy_counter = f.boolean("per_copy_counter", def.per_copy_counter);
    out.kernel_dim1 = int(f.integer("kernel_dim1", def.kernel_dim1));
    out.source = f.has("source") ? source_from_json(f.object("source"), "protocol.source", def.source)
                                 : def.source;
    out.guard = f.has("guard") ? guard_from_json(f.object("guard"), "protocol.guard", def.guard)
                               : def.guard;
    out.detector = f.has("detector")
                       ? detector_from_json(f.object("detector"), "protocol.detector", def.detector)
                       : def.detector;
    f.finish();
    return out;
}

inline json sweep_config_to_json(const SweepConfig& c) {
    json j;
    j["d1"] = c.d1;
    j["d2"] = c.d2;
    j["alpha1"] = cx_to_json(c.alpha1);
    j["xi1"] = cx_to_json(c.xi1);
    j["port_amplitude"] = cx_to_json(c.port_amplitude);
    j["theta_max"] = c.theta_max;
    j["theta_step"] = c.theta_step;
    j["phi"] = c.phi;
    j["guard"] = guard_to_json(c.guard);
    return j;
}

inline SweepConfig sweep_config_from_json(const json& j) {
    SweepConfig def, out;
    Fields f(j, "sweep");
    out.d1 = int(f.integer("d1", def.d1));
    out.d2 = int(f.integer("d2", def.d2));
    out.alpha1 = f.complex("alpha1", def.alpha1);
    out.xi1 = f.complex("xi1", def.xi1);
    out.port_amplitude = f.complex("port_amplitude", def.port_amplitude);
    out.theta_max = f.num("theta_max", def.theta_max);
    out.theta_step = f.num("theta_step", def.theta_step);
    out.phi = f.num("phi", def.phi);
    out.guard =
        f.has("guard") ? guard_from_json(f.object("guard"), "sweep.guard", def.guard) : def.guard;
    f.finish();
    return out;
}

inline json counter_config_to_json(const CounterConfig& c) {
    json j;
    j["n_max"] = c.n_max;
    j["port_amplitude"] = cx_to_json(c.port_amplitude);
    j["xi"] = cx_to_json(c.xi);
    j["final_ratio"] = c.final_ratio;
    j["points"] = c.points;
    return j;
}

inline CounterConfig counter_config_from_json(const json& j) {
    CounterConfig def, out;
    Fields f(j, "counter");
    out.n_max = int(f.integer("n_max", def.n_max));
    out.port_amplitude = f.complex("port_amplitude", def.port_amplitude);
    out.xi = f.complex("xi", def.xi);
    out.final_ratio = f.num("final_ratio", def.final_ratio);
    out.points = int(f.integer("points", def.points));
    f.finish();
    return out;
}

// One config file drives every command; each command reads its own section.
// `with_null` asks the protocol command to rerun the same settings with the
// squeezing law pinned to zero and report the comparison.
struct ConfigFile {
    std::string description;
    std::optional<ProtocolConfig> protocol;
    std::optional<SweepConfig> sweep;
    std::optional<CounterConfig> counter;
    bool with_null = false;
};

inline json config_file_to_json(const ConfigFile& c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    if (!c.description.empty()) j["description"] = c.description;
    if (c.protocol) j["protocol"] = protocol_config_to_json(*c.protocol);
    if (c.with_null) j["with_null"] = true;
    if (c.sweep) j["sweep"] = sweep_config_to_json(*c.sweep);
    if (c.counter) j["counter"] = counter_config_to_json(*c.counter);
    return j;
}

inline ConfigFile config_file_from_json(const json& j) {
    Fields f(j, "config");
    std::int64_t ver = f.integer("schema_version", kSchemaVersion);
    if (ver != kSchemaVersion)
        throw ConfigError("config: unsupported schema_version " + std::to_string(ver));
    ConfigFile out;
    out.description = f.str("description", "");
    if (f.has("protocol")) out.protocol = protocol_config_from_json(f.object("protocol"));
    if (f.has("sweep")) out.sweep = sweep_config_from_json(f.object("sweep"));
    if (f.has("counter")) out.counter = counter_config_from_json(f.object("counter"));
    out.with_null = f.boolean("with_null", false);
    f.finish();
    return out;
}

// ------------------------------------------------------------------ manifest

// Record of a finished run. The embedded config is fully resolved (defaults
// materialized, command line overrides applied), so pointing --config at the
// manifest reproduces the data artifacts byte for byte; only the wall clock
// field of a fresh manifest differs between such reruns.
struct RunManifest {
    std::string command;
    std::uint64_t master_seed = 0;
    std::string wall_clock_utc;
    json config;
    std::vector<std::pair<std::string, std::string>> artifacts;
};

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["engine_version"] = kEngineVersion;
    j["command"] = m.command;
    j["master_seed"] = m.master_seed;
    j["wall_clock_utc"] = m.wall_clock_utc;
    j["config"] = m.config;
    json a = json::object();
    for (const auto& [name, path] : m.artifacts) a[name] = path;
    j["artifacts"] = a;
    return j;
}

inline RunManifest manifest_from_json(const json& j) {
    Fields f(j, "manifest");
    std::int64_t ver = f.integer("schema_version", -1);
    if (ver != kSchemaVersion)
        throw ConfigError("manifest: unsupported schema_version " + std::to_string(ver));
    f.str("engine_version", "");
    RunManifest m;
    m.command = f.str("command", "");
    if (m.command.empty()) throw ConfigError("manifest: missing command");
    m.master_seed = f.uinteger("master_seed", 0);
    m.wall_clock_utc = f.str("wall_clock_utc", "");
    if (!f.has("config")) throw ConfigError("manifest: missing config");
    m.config = f.object("config");
    if (f.has("artifacts")) {
        json a = f.object("artifacts");
        for (const auto& item : a.items()) {
            if (!item.value().is_string())
                throw ConfigError("manifest.artifacts: expected string paths");
            m.artifacts.emplace_back(item.key(), item.value().get<std::string>());
        }
    }
    f.finish();
    return m;
}

inline bool is_manifest(const json& j) {
    return j.is_object() && j.contains("command") && j.contains("config");
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(what + ": invalid JSON (" + std::string(e.what()) + ")");
    }
}

// accepts either a plain config file or a manifest from an earlier run
inline ConfigFile load_config_file(const std::filesystem::path& path) {
    json j = parse_json_text(read_text_file(path), path.string());
    if (is_manifest(j)) j = manifest_from_json(j).config;
    return config_file_from_json(j);
}

// ------------------------------------------------------------ result tables

inline const StageRecord* find_stage(const PulseRecord& r, std::string_view name) {
    for (const auto& s : r.stages)
        if (s.stage == name) return &s;
    return nullptr;
}

inline Csv records_csv(const std::vector<PulseRecord>& records) {
    Csv t;
    t.header = {"index",       "alpha_re",     "alpha_im",      "r",
                "mean_t",      "fano_t",       "g2_t",          "mean_a",
                "fano_a",      "g2_a",         "mean_b",        "fano_b",
                "g2_b",        "vmin1_b",      "leakage_b",     "commutator_b",
                "mean_b_prime", "fano_b_prime", "g2_b_prime",   "mean_b_dprime",
                "fano_b_dprime", "g2_b_dprime", "n1",           "n2",
                "expected_mean", "detected",    "postselected",  "guard_failed",
                "leakage_failed", "flag"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : records) {
        auto stage3 = [&](std::string_view name, std::vector<std::string>& row) {
            const StageRecord* s = find_stage(r, name);
            row.push_back(cell(s ? s->mean_n : nan));
            row.push_back(cell(s ? s->fano : nan));
            row.push_back(cell(s ? s->g2 : nan));
        };
        std::vector<std::string> row;
        row.reserve(t.header.size());
        row.push_back(cell(r.index));
        row.push_back(cell(r.alpha_i.real()));
        row.push_back(cell(r.alpha_i.imag()));
        row.push_back(cell(r.r_i));
        stage3("t", row);
        stage3("a", row);
        stage3("b", row);
        const StageRecord* b = find_stage(r, "b");
        row.push_back(cell(b ? b->vmin1 : nan));
        row.push_back(cell(b ? b->leakage : nan));
        row.push_back(cell(b ? b->commutator_dev : nan));
        stage3("b_prime", row);
        stage3("b_dprime", row);
        row.push_back(cell(r.clicks.n1));
        row.push_back(cell(r.clicks.n2));
        row.push_back(cell(r.clicks.expected_mean));
        row.push_back(cell(r.detected));
        row.push_back(cell(r.postselected));
        row.push_back(cell(r.guard_failed));
        row.push_back(cell(r.leakage_failed));
        row.push_back(r.flag);
        t.add_row(std::move(row));
    }
    return t;
}

inline Csv sweep_csv(const std::vector<SweepPoint>& points) {
    Csv t;
    t.header = {"theta",     "g2_mode2",       "fano_mode2", "dx_mode1", "guard_status",
                "vmin_mode1", "mean_mode2",     "commutator_dev", "leakage"};
    for (const auto& p : points) {
        t.add_row({cell(p.theta), cell(p.g2_2), cell(p.fano2), cell(p.dx1),
                   p.guard_pass ? "pass" : "fail", cell(p.vmin1), cell(p.mean2),
                   cell(p.commutator_dev), cell(p.leakage)});
    }
    return t;
}

inline Csv counter_csv(const std::vector<CounterPoint>& points) {
    Csv t;
    t.header = {"alpha_prime_abs", "mean_n", "g2", "fano"};
    for (const auto& p : points)
        t.add_row({cell(p.alpha_prime_abs), cell(p.mean_n), cell(p.g2), cell(p.fano)});
    return t;
}

inline json summary_to_json(const EnsembleSummary& s) {
    json j;
    j["pulses"] = s.pulses;
    j["included"] = s.included;
    j["guard_trips"] = s.guard_trips;
    j["leakage_trips"] = s.leakage_trips;
    j["excluded_zero"] = s.excluded_zero;
    j["survival"] = num_or_null(s.survival);
    j["alpha_prime"] = cx_to_json(s.alpha_prime);
    j["eta"] = num_or_null(s.eta);
    j["rel_fluct_t"] = num_or_null(s.rel_fluct_t);
    j["rel_fluct_a"] = num_or_null(s.rel_fluct_a);
    j["rel_fluct_bprime"] = num_or_null(s.rel_fluct_bprime);
    j["mean_detected"] = num_or_null(s.mean_detected);
    j["op_copy_g2"] = num_or_null(s.op_copy_g2);
    j["op_aggregate_g2"] = num_or_null(s.op_aggregate_g2);
    j["copy_g2"] = num_or_null(s.copy_g2);
    j["copy_se"] = num_or_null(s.copy_se);
    j["aggregate_g2"] = num_or_null(s.aggregate_g2);
    j["hist_g2"] = num_or_null(s.hist_g2);
    j["hist_se"] = num_or_null(s.hist_se);
    return j;
}

inline json histogram_to_json(const Histogram& h) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["pulses"] = h.pulses;
    j["singles_rate_1"] = num_or_null(h.s1);
    j["singles_rate_2"] = num_or_null(h.s2);
    j["lag"] = h.lag;
    j["coincidences"] = h.coincidences;
    j["pairs"] = h.pairs;
    json g = json::array();
    for (double v : h.g2) g.push_back(num_or_null(v));
    j["g2"] = g;
    json se = json::array();
    for (double v : h.se) se.push_back(num_or_null(v));
    j["se"] = se;
    return j;
}

inline std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace sqwit::io

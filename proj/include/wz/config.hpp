/**
 * @file config.hpp
 * @brief INI-style experiment configuration: parsing, validation and model construction.
 *
 * Format: `[section]` headers, `key = value` lines, `#` or `;` comments. Lists are
 * comma separated; integer ranges may be written `a..b`. Unknown sections or keys,
 * duplicate keys and malformed values are rejected with the offending line number.
 */
#pragma once

#include "wz/analysis.hpp"
#include "wz/error.hpp"
#include "wz/models.hpp"
#include "wz/solvers.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace wz {

struct IniValue {
    std::string text;
    int line = 0;
};

using IniSection = std::map<std::string, IniValue>;

struct IniDocument {
    std::map<std::string, IniSection> sections;
    std::map<std::string, int> section_lines;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline IniDocument parse_ini(const std::string& text) {
    IniDocument doc;
    std::istringstream in(text);
    std::string raw, section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line_no);
            if (doc.sections.count(section)) throw ConfigError("duplicate section [" + section + "]", line_no);
            doc.sections[section];
            doc.section_lines[section] = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
        if (section.empty()) throw ConfigError("key outside of any section", line_no);
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);
        auto& sec = doc.sections[section];
        if (sec.count(key)) throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line_no);
        sec[key] = {value, line_no};
    }
    return doc;
}

/// Typed access to one section, remembering which keys were consumed.
class SectionReader {
public:
    SectionReader(const IniDocument& doc, const std::string& name) : name_(name) {
        if (auto it = doc.sections.find(name); it != doc.sections.end()) sec_ = &it->second;
    }

    bool present() const { return sec_ != nullptr; }
    bool has(const std::string& key) const { return sec_ && sec_->count(key); }

    std::string str(const std::string& key, const std::string& fallback) const {
        const IniValue* v = find(key);
        return v ? v->text : fallback;
    }

    double real(const std::string& key, double fallback) const {
        const IniValue* v = find(key);
        if (!v) return fallback;
        if (v->text == "inf" || v->text == "infinity") return std::numeric_limits<double>::infinity();
        double out = 0.0;
        const auto* b = v->text.data();
        const auto [p, ec] = std::from_chars(b, b + v->text.size(), out);
        if (ec != std::errc() || p != b + v->text.size() || std::isnan(out))
            throw ConfigError(key_name(key) + ": expected a real number, got '" + v->text + "'", v->line);
        return out;
    }

    long long integer(const std::string& key, long long fallback) const {
        const IniValue* v = find(key);
        if (!v) return fallback;
        return parse_int(v->text, *v, key);
    }

    bool boolean(const std::string& key, bool fallback) const {
        const IniValue* v = find(key);
        if (!v) return fallback;
        if (v->text == "true" || v->text == "yes" || v->text == "on" || v->text == "1") return true;
        if (v->text == "false" || v->text == "no" || v->text == "off" || v->text == "0") return false;
        throw ConfigError(key_name(key) + ": expected a boolean, got '" + v->text + "'", v->line);
    }

    std::vector<double> reals(const std::string& key, std::vector<double> fallback) const {
        const IniValue* v = find(key);
        if (!v) return fallback;
        std::vector<double> out;
        for (const auto& item : detail::split_list(v->text)) {
            double x = 0.0;
            const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
            if (ec != std::errc() || p != item.data() + item.size())
                throw ConfigError(key_name(key) + ": bad list entry '" + item + "'", v->line);
            out.push_back(x);
        }
        if (out.empty()) throw ConfigError(key_name(key) + ": empty list", v->line);
        return out;
    }

    /// Comma list of integers and inclusive ranges `a..b`.
    std::vector<int> integers(const std::string& key, std::vector<int> fallback) const {
        const IniValue* v = find(key);
        if (!v) return fallback;
        std::vector<int> out;
        for (const auto& item : detail::split_list(v->text)) {
            if (const auto r = item.find(".."); r != std::string::npos) {
                const auto lo = parse_int(detail::trim(item.substr(0, r)), *v, key);
                const auto hi = parse_int(detail::trim(item.substr(r + 2)), *v, key);
                if (hi < lo || hi - lo > 64) throw ConfigError(key_name(key) + ": bad range '" + item + "'", v->line);
                for (auto k = lo; k <= hi; ++k) out.push_back(static_cast<int>(k));
            } else {
                out.push_back(static_cast<int>(parse_int(item, *v, key)));
            }
        }
        if (out.empty()) throw ConfigError(key_name(key) + ": empty list", v->line);
        return out;
    }

    int line_of(const std::string& key) const {
        const IniValue* v = find(key);
        return v ? v->line : 0;
    }

    /// Throws on the first key that was never read.
    void reject_unknown() const {
        if (!sec_) return;
        for (const auto& [k, v] : *sec_)
            if (!used_.count(k)) throw ConfigError("unknown key '" + k + "' in [" + name_ + "]", v.line);
    }

private:
    const IniValue* find(const std::string& key) const {
        used_.insert(key);
        if (!sec_) return nullptr;
        const auto it = sec_->find(key);
        return it == sec_->end() ? nullptr : &it->second;
    }
    std::string key_name(const std::string& key) const { return "[" + name_ + "] " + key; }
    long long parse_int(const std::string& s, const IniValue& v, const std::string& key) const {
        long long out = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc() || p != s.data() + s.size())
            throw ConfigError(key_name(key) + ": expected an integer, got '" + s + "'", v.line);
        return out;
    }

    std::string name_;
    const IniSection* sec_ = nullptr;
    mutable std::set<std::string> used_;
};

struct ModelConfig {
    std::string name = "gbm";
    double mu = 0.1;
    double a = 0.5;
    double y0 = 1.0;
    std::size_t n_modes = 16;
    double length = 1.0;
    double nu = 1.0;
    double p = 3.0;
    double r = 2.0;
    std::vector<double> initial;
    NoiseSpec noise{NoiseSpec::Kind::linear, {0.4, 0.2, 0.1}};
};

struct ProbeConfig {
    std::size_t samples = 1000;
    double r_max = 10.0;
    double spectral_decay = 1.0;
    int correction_level = 8;
};

struct TailsConfig {
    double delta = 2.0;
    std::size_t samples = 2000;
};

struct SkeletonConfig {
    std::string control = "constant";  ///< constant | sine
    std::vector<double> values{0.3};
    double frequency = 1.0;
    int tabulation_level = 10;
};

struct IdentityConfig {
    std::size_t seeds = 50;
    double time = -1.0;  ///< negative selects T
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::string output = "out";
    ModelConfig model;
    StudyConfig study;
    ProbeConfig probe;
    TailsConfig tails;
    SkeletonConfig skeleton;
    IdentityConfig identity;
    std::vector<double> guard_levels{2.0, 5.0, 10.0, 20.0};
    std::string source_text;
};

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    return out;
}

inline ExperimentConfig parse_config(const std::string& text) {
    const IniDocument doc = parse_ini(text);
    static const std::set<std::string> known{"experiment", "model", "noise",    "solver", "verdict",
                                             "probe",      "tails", "skeleton", "identity", "guard"};
    for (const auto& [name, line] : doc.section_lines)
        if (!known.count(name)) throw ConfigError("unknown section [" + name + "]", line);

    ExperimentConfig c;
    c.source_text = text;
    StudyConfig& s = c.study;
    SolverConfig& sv = s.solver;
    VerdictConfig& v = s.verdict;

    SectionReader ex(doc, "experiment");
    c.name = ex.str("name", c.name);
    c.output = ex.str("output", c.output);
    s.horizon = ex.real("horizon", s.horizon);
    s.m_levels = ex.integers("m_levels", s.m_levels);
    const auto paths = ex.integer("n_paths", static_cast<long long>(s.n_paths));
    if (paths <= 0) throw ConfigError("[experiment] n_paths must be positive", ex.line_of("n_paths"));
    s.n_paths = static_cast<std::size_t>(paths);
    const auto seed = ex.integer("seed", static_cast<long long>(s.seed));
    if (seed < 0) throw ConfigError("[experiment] seed must be nonnegative", ex.line_of("seed"));
    s.seed = static_cast<std::uint64_t>(seed);
    s.threads = static_cast<int>(ex.integer("threads", s.threads));

    SectionReader md(doc, "model");
    ModelConfig& m = c.model;
    m.name = md.str("name", m.name);
    m.mu = md.real("mu", m.mu);
    m.a = md.real("a", m.a);
    m.y0 = md.real("y0", m.y0);
    const auto nm = md.integer("n_modes", static_cast<long long>(m.n_modes));
    if (nm <= 0) throw ConfigError("[model] n_modes must be positive", md.line_of("n_modes"));
    m.n_modes = static_cast<std::size_t>(nm);
    if (md.str("length", "") == "pi")
        m.length = std::numbers::pi;
    else
        m.length = md.real("length", m.length);
    m.nu = md.real("nu", m.nu);
    m.p = md.real("p", m.p);
    m.r = md.real("r", m.r);
    m.initial = md.reals("initial", m.initial);

    SectionReader nz(doc, "noise");
    if (nz.has("kind")) {
        try {
            m.noise.kind = noise_kind_from_string(nz.str("kind", "linear"));
        } catch (const ArgumentError& e) {
            throw ConfigError(e.what(), nz.line_of("kind"));
        }
    }
    m.noise.coefficients = nz.reals("coefficients", m.noise.coefficients);

    SectionReader so(doc, "solver");
    try {
        sv.scheme = scheme_from_string(so.str("scheme", to_string(sv.scheme)));
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what(), so.line_of("scheme"));
    }
    sv.dt_level = static_cast<int>(so.integer("dt_level", sv.dt_level));
    sv.substeps_per_varpi = static_cast<int>(so.integer("substeps", sv.substeps_per_varpi));
    sv.taming = so.boolean("taming", sv.taming);
    sv.taming_power = so.real("taming_power", sv.taming_power);
    sv.max_norm_guard = so.real("max_norm_guard", sv.max_norm_guard);
    sv.store_level = static_cast<int>(so.integer("store_level", sv.store_level));
    sv.wz_correction = so.boolean("correction", sv.wz_correction);
    s.ref_dt_level = static_cast<int>(so.integer("ref_dt_level", s.ref_dt_level));
    s.use_analytic = so.boolean("use_analytic", s.use_analytic);
    s.exit_delta = so.real("exit_delta", s.exit_delta);

    SectionReader vd(doc, "verdict");
    v.max_inversions = static_cast<int>(vd.integer("max_inversions", v.max_inversions));
    v.inversion_se = vd.real("inversion_se", v.inversion_se);
    v.reduction_factor = vd.real("reduction_factor", v.reduction_factor);
    v.blowup_quota = vd.real("blowup_quota", v.blowup_quota);
    v.modulus_slope = vd.real("modulus_slope", v.modulus_slope);
    v.energy_ratio = vd.real("energy_ratio", v.energy_ratio);
    v.tail_final = vd.real("tail_final", v.tail_final);
    v.identity_rel = vd.real("identity_rel", v.identity_rel);
    v.probe_tolerance = vd.real("probe_tolerance", v.probe_tolerance);

    SectionReader pr(doc, "probe");
    c.probe.samples = static_cast<std::size_t>(std::max<long long>(1, pr.integer("samples", 1000)));
    c.probe.r_max = pr.real("r_max", c.probe.r_max);
    c.probe.spectral_decay = pr.real("spectral_decay", c.probe.spectral_decay);
    c.probe.correction_level = static_cast<int>(pr.integer("correction_level", c.probe.correction_level));

    SectionReader tl(doc, "tails");
    c.tails.delta = tl.real("delta", c.tails.delta);
    c.tails.samples = static_cast<std::size_t>(std::max<long long>(1, tl.integer("samples", 2000)));

    SectionReader sk(doc, "skeleton");
    c.skeleton.control = sk.str("control", c.skeleton.control);
    if (c.skeleton.control != "constant" && c.skeleton.control != "sine")
        throw ConfigError("[skeleton] control must be 'constant' or 'sine'", sk.line_of("control"));
    c.skeleton.values = sk.reals("values", c.skeleton.values);
    c.skeleton.frequency = sk.real("frequency", c.skeleton.frequency);
    c.skeleton.tabulation_level = static_cast<int>(sk.integer("tabulation_level", c.skeleton.tabulation_level));

    SectionReader id(doc, "identity");
    c.identity.seeds = static_cast<std::size_t>(std::max<long long>(1, id.integer("seeds", 50)));
    c.identity.time = id.real("time", c.identity.time);

    SectionReader gd(doc, "guard");
    c.guard_levels = gd.reals("levels", c.guard_levels);

    for (const SectionReader* r : {&ex, &md, &nz, &so, &vd, &pr, &tl, &sk, &id, &gd}) r->reject_unknown();

    try {
        s.validate();
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline ModelSpec build_model(const ModelConfig& m) {
    try {
        if (m.name == "gbm") return make_gbm(m.mu, m.a, m.y0);
        if (m.name == "heat") return make_heat(m.n_modes, m.length, m.nu, m.noise, m.initial);
        if (m.name == "burgers") return make_burgers(m.n_modes, m.length, m.nu, m.noise, m.initial);
        if (m.name == "plaplace" || m.name == "p-laplace")
            return make_plaplace(m.n_modes, m.length, m.p, m.noise, m.initial);
        if (m.name == "porous" || m.name == "porous-media")
            return make_porous_media(m.n_modes, m.length, m.r, m.noise, m.initial);
    } catch (const ArgumentError& e) {
        throw ConfigError(std::string("[model] ") + e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(std::string("[model] ") + e.what());
    }
    throw ConfigError("[model] unknown model '" + m.name + "'");
}

/// Control path described by a [skeleton] section, with one entry per noise mode.
inline ControlPath build_control(const SkeletonConfig& s, std::size_t n_modes, double horizon) {
    std::vector<double> vals(n_modes, 0.0);
    for (std::size_t i = 0; i < std::min(n_modes, s.values.size()); ++i) vals[i] = s.values[i];
    if (s.control == "constant") return ControlPath::constant(horizon, vals);
    const double f = s.frequency;
    return ControlPath::from_function(horizon, s.tabulation_level, n_modes, [&](double t, MutVec out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = vals[i] * std::sin(2.0 * std::numbers::pi * f * t);
    });
}

}  // namespace wz

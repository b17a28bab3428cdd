/**
 * @file io.hpp
 * @brief JSON and CSV serialization of reports, and run manifests.
 */
#pragma once

#include "wz/analysis.hpp"
#include "wz/config.hpp"
#include "wz/noise.hpp"
#include "wz/operators.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace wz {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

namespace detail {

/// JSON has no inf/nan; they are written as strings.
inline Json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline Json nums(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

}  // namespace detail

inline Json to_json(const SlopeFit& f) {
    return {{"slope", detail::num(f.slope)},
            {"intercept", detail::num(f.intercept)},
            {"ci95", {detail::num(f.ci_low), detail::num(f.ci_high)}}};
}

inline Json to_json(const HypothesisReport& r) {
    Json j{{"kind", "probe"},
           {"drift", r.drift_name},
           {"noise", r.noise_name},
           {"tolerance", r.tolerance},
           {"r_max", r.r_max},
           {"n_trials", r.n_trials}};
    Json items = Json::array();
    for (const auto& q : r.results)
        items.push_back({{"name", q.name},
                         {"worst_margin", detail::num(q.worst_margin)},
                         {"worst_raw_margin", detail::num(q.worst_raw)},
                         {"argmax_sample_norms", detail::nums(q.argmax_sample_norms)},
                         {"non_finite", q.non_finite},
                         {"pass", q.pass}});
    j["inequalities"] = items;
    j["pass"] = r.all_pass;
    return j;
}

inline Json to_json(const ConvergenceReport& r) {
    Json j{{"kind", r.kind},
           {"model", r.model},
           {"reference", r.reference},
           {"m_levels", r.m_levels},
           {"mean_sq_sup_error", detail::nums(r.mean_sq_sup_error)},
           {"std_error", detail::nums(r.std_error)},
           {"energy_mean", detail::nums(r.energy_mean)},
           {"energy_se", detail::nums(r.energy_se)},
           {"terminal_bias", detail::nums(r.terminal_bias)},
           {"terminal_bias_se", detail::nums(r.terminal_bias_se)},
           {"exit_fraction", detail::nums(r.exit_fraction)},
           {"n_paths", r.n_paths},
           {"n_effective", r.n_effective},
           {"n_blowups", r.n_blowups},
           {"seed", r.seed},
           {"fitted_log2_slope", to_json(r.fit)},
           {"inversions", r.inversions},
           {"verdict", {{"trend", r.trend_ok}, {"reduction", r.reduction_ok}, {"blowup_quota", r.quota_ok}}},
           {"pass", r.pass}};
    if (!r.ito_bias.empty()) {
        j["ito_bias"] = detail::nums(r.ito_bias);
        j["ito_bias_se"] = detail::nums(r.ito_bias_se);
    }
    return j;
}

inline Json to_json(const EnergyReport& r) {
    return {{"kind", "energy"},       {"model", r.model},         {"m_levels", r.m_levels},
            {"mean", detail::nums(r.mean)}, {"std_error", detail::nums(r.se)}, {"ratio", detail::num(r.ratio)},
            {"n_paths", r.n_paths},   {"n_blowups", r.n_blowups}, {"pass", r.pass}};
}

inline Json to_json(const ModulusReport& r) {
    Json variants = Json::array();
    for (std::size_t v = 0; v < r.variants.size(); ++v)
        variants.push_back({{"name", r.variants[v]},
                            {"mean", detail::nums(r.mean[v])},
                            {"std_error", detail::nums(r.se[v])},
                            {"fit", to_json(r.fits[v])}});
    return {{"kind", "modulus"},
            {"model", r.model},
            {"m_levels", r.m_levels},
            {"variants", variants},
            {"reference_slope", r.reference_slope},
            {"threshold", r.threshold},
            {"n_paths", r.n_paths},
            {"n_blowups", r.n_blowups},
            {"pass", r.pass}};
}

inline Json to_json(const TailReport& r, double final_threshold) {
    Json levels = Json::array();
    for (const auto& e : r.levels)
        levels.push_back({{"m", e.m},
                          {"mode_sup_probability", e.mode_sup_probability},
                          {"mode_sup_stderr", e.mode_sup_stderr},
                          {"norm_sup_probability", e.norm_sup_probability},
                          {"norm_sup_stderr", e.norm_sup_stderr},
                          {"n_samples", e.n_samples}});
    const bool final_ok = !r.levels.empty() && r.levels.back().mode_sup_probability < final_threshold &&
                          r.levels.back().norm_sup_probability < final_threshold;
    return {{"kind", "tails"},
            {"horizon", r.horizon},
            {"delta", r.delta},
            {"levels", levels},
            {"mode_nonincreasing", r.mode_nonincreasing},
            {"norm_nonincreasing", r.norm_nonincreasing},
            {"final_threshold", final_threshold},
            {"pass", r.mode_nonincreasing && r.norm_nonincreasing && final_ok}};
}

inline Json to_json(const GuardTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"m", r.m}, {"M", detail::num(r.M)}, {"exit_fraction", r.exit_fraction},
                        {"std_error", r.std_error}, {"n", r.n}});
    return {{"kind", "guard"}, {"model", t.model}, {"rows", rows}, {"nonincreasing_in_M", t.nonincreasing_in_M},
            {"pass", t.nonincreasing_in_M}};
}

// --- CSV -------------------------------------------------------------------------------

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
    os << "m,error,stderr,n_effective,energy,energy_se,exit_fraction\n";
    os.precision(12);
    for (std::size_t j = 0; j < r.m_levels.size(); ++j)
        os << r.m_levels[j] << ',' << r.mean_sq_sup_error[j] << ',' << r.std_error[j] << ',' << r.n_effective << ','
           << r.energy_mean[j] << ',' << r.energy_se[j] << ',' << r.exit_fraction[j] << '\n';
}

inline void write_modulus_csv(std::ostream& os, const ModulusReport& r) {
    os << "variant,m,mean,stderr\n";
    os.precision(12);
    for (std::size_t v = 0; v < r.variants.size(); ++v)
        for (std::size_t j = 0; j < r.m_levels.size(); ++j)
            os << r.variants[v] << ',' << r.m_levels[j] << ',' << r.mean[v][j] << ',' << r.se[v][j] << '\n';
}

inline void write_tails_csv(std::ostream& os, const TailReport& r) {
    os << "m,mode_sup_probability,mode_sup_stderr,norm_sup_probability,norm_sup_stderr,n_samples\n";
    os.precision(12);
    for (const auto& e : r.levels)
        os << e.m << ',' << e.mode_sup_probability << ',' << e.mode_sup_stderr << ',' << e.norm_sup_probability << ','
           << e.norm_sup_stderr << ',' << e.n_samples << '\n';
}

inline void write_energy_csv(std::ostream& os, const EnergyReport& r) {
    os << "m,energy,stderr\n";
    os.precision(12);
    for (std::size_t j = 0; j < r.m_levels.size(); ++j) os << r.m_levels[j] << ',' << r.mean[j] << ',' << r.se[j] << '\n';
}

inline void write_guard_csv(std::ostream& os, const GuardTable& t) {
    os << "m,M,exit_fraction,stderr,n\n";
    os.precision(12);
    for (const auto& r : t.rows) os << r.m << ',' << r.M << ',' << r.exit_fraction << ',' << r.std_error << ',' << r.n << '\n';
}

inline void write_probe_csv(std::ostream& os, const HypothesisReport& r) {
    os << "inequality,worst_margin,non_finite,pass\n";
    os.precision(12);
    for (const auto& q : r.results) os << q.name << ',' << q.worst_margin << ',' << q.non_finite << ',' << q.pass << '\n';
}

// --- files -----------------------------------------------------------------------------

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
}

inline void write_json(const std::filesystem::path& p, const Json& j) { write_text(p, j.dump(2) + "\n"); }

struct Manifest {
    std::string command;
    const ExperimentConfig* config = nullptr;
    std::uint64_t seed = 0;
    int threads = 1;
    double wall_time_seconds = 0.0;
    std::vector<std::string> outputs;
    int exit_code = 0;
};

inline Json to_json(const Manifest& m) {
    Json j{{"artifact", "wzsim"},
           {"version", kVersion},
           {"command", m.command},
           {"seed", m.seed},
           {"threads", m.threads},
           {"wall_time_seconds", m.wall_time_seconds},
           {"exit_code", m.exit_code},
           {"outputs", m.outputs}};
    if (m.config) {
        j["config_hash"] = hex64(fnv1a64(m.config->source_text));
        j["config"] = m.config->source_text;
    }
    return j;
}

}  // namespace wz

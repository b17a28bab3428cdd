/**
 * @file cli.hpp
 * @brief The `wzsim` command-line front end.
 *
 * Exit codes: 0 pass, 1 verdict fail, 2 usage or configuration error,
 * 3 blow-up quota breach.
 */
#pragma once

#include "wz/analysis.hpp"
#include "wz/config.hpp"
#include "wz/io.hpp"
#include "wz/models.hpp"
#include "wz/solvers.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace wz {

enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_usage = 2, exit_blowup = 3 };

struct CliOptions {
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::string> out;
    int threads = 0;
    bool emit_trajectory = false;
    std::string report_dir;
};

namespace detail {

namespace fs = std::filesystem;

struct RunContext {
    const CliOptions& opt;
    ExperimentConfig cfg;
    fs::path out_dir;
    std::ostream& out;
    Manifest manifest;

    void save_json(const std::string& name, const Json& j) {
        write_json(out_dir / name, j);
        manifest.outputs.push_back(name);
    }
    template <class Writer>
    void save_csv(const std::string& name, Writer&& w) {
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw Error("cannot write '" + (out_dir / name).string() + "'");
        w(f);
        manifest.outputs.push_back(name);
    }
};

inline int verdict_code(bool pass) { return pass ? exit_pass : exit_fail; }

inline int cmd_simulate(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    const StudyConfig& s = c.cfg.study;
    const SolverConfig& sc = s.solver;
    const int m = s.max_m();
    const int level = std::max({m, sc.dt_level, sc.store_level});
    const BrownianPath path = BrownianPath::sample(s.seed, s.horizon, level, model.noise->n_modes());
    const Trajectory ito = solve_ito(model, path, sc);
    const Trajectory wz = solve_wong_zakai(model, path, m, sc);
    const double dist = sup_h_distance(ito, wz);
    Json j{{"kind", "simulate"},
           {"model", model.name},
           {"seed", s.seed},
           {"m", m},
           {"horizon", s.horizon},
           {"ito_terminal", ito.states.back().coeffs},
           {"wz_terminal", wz.states.back().coeffs},
           {"sup_h_distance", dist},
           {"ito_energy", ito.energy_functional()},
           {"wz_energy", wz.energy_functional()},
           {"ito_exited_at", ito.exited_at ? Json(*ito.exited_at) : Json(nullptr)},
           {"wz_exited_at", wz.exited_at ? Json(*wz.exited_at) : Json(nullptr)},
           {"pass", true}};
    c.save_json("summary.json", j);
    if (c.opt.emit_trajectory) {
        c.save_csv("trajectory_ito.csv", [&](std::ostream& os) { ito.write_csv(os); });
        c.save_csv("trajectory_wz.csv", [&](std::ostream& os) { wz.write_csv(os); });
        c.save_csv("path.csv", [&](std::ostream& os) { path.coarsened(std::min(level, sc.store_level)).write_csv(os); });
    }
    c.out << "simulate: " << model.name << " m=" << m << " sup_t |Y - Y^m|_H = " << dist << "\n";
    return exit_pass;
}

inline int finish_convergence(RunContext& c, const ConvergenceReport& r, const std::string& stem) {
    c.save_json(stem + ".json", to_json(r));
    c.save_csv(stem + ".csv", [&](std::ostream& os) { write_convergence_csv(os, r); });
    c.out << stem << ": " << r.model << " errors";
    for (double e : r.mean_sq_sup_error) c.out << ' ' << e;
    c.out << " -> " << (r.pass ? "pass" : "fail") << "\n";
    if (!r.quota_ok) return exit_blowup;
    return verdict_code(r.pass);
}

inline int cmd_converge(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    return finish_convergence(c, convergence_study(model, c.cfg.study), "converge");
}

inline int cmd_skeleton(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    const StudyConfig& s = c.cfg.study;
    const ControlPath g = build_control(c.cfg.skeleton, model.noise->n_modes(), s.horizon);
    ConvergenceReport r = skeleton_convergence_study(model, g, s);
    Json extra = Json::object();
    if (model.name == "gbm" && c.cfg.skeleton.control == "constant") {
        const Trajectory zg = solve_skeleton(model, g, s.horizon, s.solver);
        const auto& mc = c.cfg.model;
        const double gv = c.cfg.skeleton.values.front();
        double err = 0.0;
        for (std::size_t k = 0; k < zg.size(); ++k) {
            const double exact = mc.y0 * std::exp((mc.mu + mc.a * gv - 0.5 * mc.a * mc.a) * zg.times[k]);
            err = std::max(err, std::abs(zg.states[k].coeffs[0] - exact));
        }
        extra["closed_form_max_abs_error"] = err;
    }
    Json j = to_json(r);
    if (!extra.empty()) j["skeleton_closed_form"] = extra;
    c.save_json("skeleton.json", j);
    c.save_csv("skeleton.csv", [&](std::ostream& os) { write_convergence_csv(os, r); });
    c.out << "skeleton: " << r.model << " -> " << (r.pass ? "pass" : "fail") << "\n";
    if (!r.quota_ok) return exit_blowup;
    return verdict_code(r.pass);
}

inline int cmd_modulus(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    const ModulusReport r = increment_modulus(model, c.cfg.study);
    c.save_json("modulus.json", to_json(r));
    c.save_csv("modulus.csv", [&](std::ostream& os) { write_modulus_csv(os, r); });
    c.out << "modulus: " << r.model << " slopes";
    for (const auto& f : r.fits) c.out << ' ' << f.slope;
    c.out << " (reference " << r.reference_slope << ") -> " << (r.pass ? "pass" : "fail") << "\n";
    if (static_cast<double>(r.n_blowups) > c.cfg.study.verdict.blowup_quota * static_cast<double>(r.n_paths))
        return exit_blowup;
    return verdict_code(r.pass);
}

inline int cmd_energy(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    const EnergyReport r = energy_study(model, c.cfg.study);
    c.save_json("energy.json", to_json(r));
    c.save_csv("energy.csv", [&](std::ostream& os) { write_energy_csv(os, r); });
    c.out << "energy: " << r.model << " max/min = " << r.ratio << " -> " << (r.pass ? "pass" : "fail") << "\n";
    if (static_cast<double>(r.n_blowups) > c.cfg.study.verdict.blowup_quota * static_cast<double>(r.n_paths))
        return exit_blowup;
    return verdict_code(r.pass);
}

inline int cmd_probe(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    SamplerConfig sc;
    sc.r_max = c.cfg.probe.r_max;
    sc.spectral_decay = c.cfg.probe.spectral_decay;
    sc.horizon = c.cfg.study.horizon;
    sc.correction_level = c.cfg.probe.correction_level;
    sc.tolerance = c.cfg.study.verdict.probe_tolerance;
    const std::size_t n = c.opt.paths ? *c.opt.paths : c.cfg.probe.samples;
    const HypothesisReport r = probe_hypotheses(*model.drift, *model.noise, *model.space, sc, n, c.cfg.study.seed);
    c.save_json("probe.json", to_json(r));
    c.save_csv("probe.csv", [&](std::ostream& os) { write_probe_csv(os, r); });
    c.out << "probe: " << r.drift_name << "/" << r.noise_name << " -> " << (r.all_pass ? "all pass" : "violations") << "\n";
    for (const auto& q : r.results)
        if (!q.pass) c.out << "  " << q.name << " worst normalized margin " << q.worst_margin << "\n";
    return verdict_code(r.all_pass);
}

inline int cmd_identity(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    const StudyConfig& s = c.cfg.study;
    SolverConfig sc = s.solver;
    sc.store_level = std::max(sc.store_level, s.max_m());
    const std::size_t seeds = c.opt.paths ? *c.opt.paths : c.cfg.identity.seeds;
    const double t = c.cfg.identity.time < 0.0 ? s.horizon : c.cfg.identity.time;
    double worst = 0.0;
    bool pass = true, partial = false;
    std::size_t checks = 0;
    for (std::size_t k = 0; k < seeds; ++k) {
        for (int m : s.m_levels) {
            const BrownianPath path = BrownianPath::sample(rng::derive_seed(s.seed, k), s.horizon, m,
                                                           model.noise->n_modes());
            const Trajectory ym = solve_wong_zakai(model, path, m, sc);
            const std::size_t stride = std::size_t{1} << (sc.store_level - m);
            std::vector<Vec> frozen;
            for (std::size_t j = 0; j < ym.size(); j += stride) frozen.push_back(ym.states[j].coeffs);
            const IdentityResult r = identity_check(*model.noise, path, m, frozen, t);
            ++checks;
            partial = partial || r.partial_interval;
            const double rel = r.scale > 0.0 ? r.residual / r.scale : r.residual;
            worst = std::max(worst, rel);
            pass = pass && r.pass(s.verdict.identity_rel);
        }
    }
    Json j{{"kind", "identity"},     {"model", model.name},
           {"noise", model.noise->name()}, {"checks", checks},
           {"time", t},              {"partial_interval", partial},
           {"worst_relative_residual", worst}, {"threshold", s.verdict.identity_rel},
           {"pass", pass}};
    c.save_json("identity.json", j);
    c.out << "identity: worst residual/scale = " << worst << " -> " << (pass ? "pass" : "fail") << "\n";
    return verdict_code(pass);
}

inline int cmd_tails(RunContext& c) {
    const StudyConfig& s = c.cfg.study;
    const std::size_t n = c.opt.paths ? *c.opt.paths : c.cfg.tails.samples;
    const TailReport r = tail_probability_estimate(s.horizon, s.m_levels, c.cfg.tails.delta, n, s.seed);
    const Json j = to_json(r, s.verdict.tail_final);
    c.save_json("tails.json", j);
    c.save_csv("tails.csv", [&](std::ostream& os) { write_tails_csv(os, r); });
    const bool pass = j["pass"].get<bool>();
    c.out << "tails: delta=" << r.delta << " -> " << (pass ? "pass" : "fail") << "\n";
    return verdict_code(pass);
}

inline int cmd_guard(RunContext& c) {
    const ModelSpec model = build_model(c.cfg.model);
    const GuardTable t = guard_study(model, c.cfg.study, c.cfg.guard_levels);
    c.save_json("guard.json", to_json(t));
    c.save_csv("guard.csv", [&](std::ostream& os) { write_guard_csv(os, t); });
    c.out << "guard: exit fractions nonincreasing in M: " << (t.nonincreasing_in_M ? "yes" : "no") << "\n";
    return verdict_code(t.nonincreasing_in_M);
}

inline int cmd_report(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    const fs::path dir = !opt.report_dir.empty() ? fs::path(opt.report_dir) : fs::path(opt.out.value_or("out"));
    if (!fs::is_directory(dir)) {
        err << "report: '" << dir.string() << "' is not a directory\n";
        return exit_usage;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json" && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        err << "report: no report files in '" << dir.string() << "'\n";
        return exit_usage;
    }
    bool all = true;
    for (const auto& f : files) {
        std::ifstream in(f);
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::exception& e) {
            err << "report: cannot parse " << f.filename().string() << ": " << e.what() << "\n";
            return exit_usage;
        }
        const bool pass = j.value("pass", false);
        all = all && pass;
        out << f.filename().string() << "  kind=" << j.value("kind", "?") << "  model=" << j.value("model", "-")
            << "  " << (pass ? "PASS" : "FAIL") << "\n";
    }
    return verdict_code(all);
}

}  // namespace detail

/// Entry point shared by tools/wzsim and the CLI tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Wong-Zakai approximation experiments for monotone-type SPDE Galerkin models", "wzsim"};
    app.fallthrough();
    app.require_subcommand(1);
    CliOptions opt;
    long long seed = -1, paths = -1;
    std::string out_dir;
    app.add_option("--config", opt.config_path, "INI experiment configuration");
    app.add_option("--seed", seed, "override [experiment] seed")->check(CLI::NonNegativeNumber);
    app.add_option("--paths", paths, "override the number of paths / samples / seeds")->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", opt.threads, "worker threads (overrides WZ_THREADS)")->check(CLI::PositiveNumber);
    app.add_flag("--emit-trajectory", opt.emit_trajectory, "simulate: also write trajectory and path CSVs");
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "one Itô and one Wong-Zakai run on a single path"},
        {"converge", "mean-square sup-error study across levels m"},
        {"skeleton", "controlled Wong-Zakai system against the skeleton equation"},
        {"modulus", "time-increment moduli of Y and Y^m"},
        {"energy", "energy functional of Y^m across levels"},
        {"probe", "sampled audit of the drift and noise hypotheses"},
        {"identity", "summation identity for the delayed driver"},
        {"tails", "tail probabilities of the piecewise-constant driver"},
        {"guard", "exit fractions of the guard functional"},
        {"report", "summarize the JSON reports in a directory"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        if (name == "report") sub->add_option("dir", opt.report_dir, "report directory (defaults to --out)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_pass;
    } catch (const CLI::ParseError& e) {
        err << "wzsim: " << e.what() << "\n";
        return exit_usage;
    }
    for (auto* sub : app.get_subcommands()) opt.command = sub->get_name();
    if (seed >= 0) opt.seed = static_cast<std::uint64_t>(seed);
    if (paths > 0) opt.paths = static_cast<std::size_t>(paths);
    if (!out_dir.empty()) opt.out = out_dir;

    if (opt.command == "report") return detail::cmd_report(opt, out, err);

    const auto start = std::chrono::steady_clock::now();
    detail::RunContext ctx{opt, {}, {}, out, {}};
    int code = exit_pass;
    try {
        ctx.cfg = opt.config_path.empty() ? parse_config("") : load_config(opt.config_path);
        StudyConfig& s = ctx.cfg.study;
        if (opt.seed) s.seed = *opt.seed;
        if (opt.paths && opt.command != "tails" && opt.command != "identity" && opt.command != "probe")
            s.n_paths = *opt.paths;
        s.threads = resolve_threads(opt.threads > 0 ? opt.threads : s.threads);
        ctx.out_dir = opt.out.value_or(ctx.cfg.output);
        std::filesystem::create_directories(ctx.out_dir);
        ctx.manifest.command = opt.command;
        ctx.manifest.config = &ctx.cfg;
        ctx.manifest.seed = s.seed;
        ctx.manifest.threads = s.threads;

        if (opt.command == "simulate") code = detail::cmd_simulate(ctx);
        else if (opt.command == "converge") code = detail::cmd_converge(ctx);
        else if (opt.command == "skeleton") code = detail::cmd_skeleton(ctx);
        else if (opt.command == "modulus") code = detail::cmd_modulus(ctx);
        else if (opt.command == "energy") code = detail::cmd_energy(ctx);
        else if (opt.command == "probe") code = detail::cmd_probe(ctx);
        else if (opt.command == "identity") code = detail::cmd_identity(ctx);
        else if (opt.command == "tails") code = detail::cmd_tails(ctx);
        else if (opt.command == "guard") code = detail::cmd_guard(ctx);
    } catch (const ConfigError& e) {
        err << "wzsim: config error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ArgumentError& e) {
        err << "wzsim: invalid argument: " << e.what() << "\n";
        return exit_usage;
    } catch (const DimensionError& e) {
        err << "wzsim: invalid argument: " << e.what() << "\n";
        return exit_usage;
    } catch (const BlowUpError& e) {
        err << "wzsim: numerical blow-up at t = " << e.last_valid_time() << ": " << e.what() << "\n";
        code = exit_blowup;
    } catch (const std::exception& e) {
        err << "wzsim: " << e.what() << "\n";
        code = exit_fail;
    }
    ctx.manifest.exit_code = code;
    ctx.manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ctx.out_dir.empty()) return code;
    try {
        write_json(ctx.out_dir / "manifest.json", to_json(ctx.manifest));
    } catch (const std::exception& e) {
        err << "wzsim: " << e.what() << "\n";
        if (code == exit_pass) code = exit_fail;
    }
    return code;
}

}  // namespace wz

/**
 * @file analysis.hpp
 * @brief Monte-Carlo convergence studies, increment moduli, the summation identity for
 *        the delayed driver, guard statistics and the deterministic parallel runner.
 */
#pragma once

#include "wz/error.hpp"
#include "wz/models.hpp"
#include "wz/noise.hpp"
#include "wz/rng.hpp"
#include "wz/solvers.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <span>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace wz {

// --- parallel execution ---------------------------------------------------------

/// Thread count: a positive request wins, then $WZ_THREADS, then hardware concurrency.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("WZ_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Runs fn(i) for i in [0, n) on `threads` workers. Work items are claimed dynamically;
 * callers write into per-index slots so the result does not depend on the schedule.
 * The first exception is rethrown after all workers stop.
 */
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// --- small statistics -------------------------------------------------------------

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> x) {
    MeanSe r;
    r.n = x.size();
    if (x.empty()) return r;
    double s = 0.0;
    for (double v : x) s += v;
    r.mean = s / static_cast<double>(x.size());
    if (x.size() > 1) {
        double q = 0.0;
        for (double v : x) q += (v - r.mean) * (v - r.mean);
        r.se = std::sqrt(q / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
    }
    return r;
}

struct SlopeFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double ci_low = std::numeric_limits<double>::quiet_NaN();   ///< 95% interval
    double ci_high = std::numeric_limits<double>::quiet_NaN();
};

/// Least squares of log₂ y on x; points with y ≤ 0 are skipped.
inline SlopeFit fit_log2_slope(std::span<const int> x, std::span<const double> y) {
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < x.size(); ++j)
        if (y[j] > 0.0 && std::isfinite(y[j])) {
            xs.push_back(x[j]);
            ys.push_back(std::log2(y[j]));
        }
    SlopeFit f;
    const std::size_t n = xs.size();
    if (n < 2) return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        mx += xs[j];
        my += ys[j];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sxx += (xs[j] - mx) * (xs[j] - mx);
        sxy += (xs[j] - mx) * (ys[j] - my);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double r = ys[j] - f.intercept - f.slope * xs[j];
            rss += r * r;
        }
        const double se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
        const boost::math::students_t dist(static_cast<double>(n - 2));
        const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
        f.ci_low = f.slope - q * se;
        f.ci_high = f.slope + q * se;
    }
    return f;
}

// --- configuration ------------------------------------------------------------------

/// Verdict thresholds; all study verdicts read from here.
struct VerdictConfig {
    int max_inversions = 1;
    double inversion_se = 2.0;       ///< an inversion is tolerated within this many combined SEs
    double reduction_factor = 4.0;   ///< final error must be below first / factor
    double blowup_quota = 0.01;      ///< max fraction of excluded paths
    double modulus_slope = -0.5;     ///< increment-modulus slope threshold
    double energy_ratio = 2.0;       ///< max/min of the energy functional across levels
    double tail_final = 0.05;        ///< tail probabilities at the last level must be below this
    double identity_rel = 1e-12;     ///< identity residual relative to scale
    double probe_tolerance = 1e-8;
};

struct StudyConfig {
    SolverConfig solver;
    std::vector<int> m_levels{3, 4, 5, 6, 7, 8};
    std::size_t n_paths = 200;
    std::uint64_t seed = 1;
    double horizon = 1.0;
    int threads = 0;
    int ref_dt_level = 0;       ///< numerical Itô reference level; 0 selects max(m) + 4
    bool use_analytic = true;   ///< use a model's closed form as reference when available
    double exit_delta = 2.0;    ///< δ in the driver exit time used by the modulus study
    VerdictConfig verdict;

    void validate() const {
        solver.validate();
        if (m_levels.empty()) throw ArgumentError("study: m_levels must be nonempty");
        for (std::size_t j = 0; j < m_levels.size(); ++j) {
            if (m_levels[j] < 1) throw ArgumentError("study: m levels must be positive");
            if (j > 0 && m_levels[j] <= m_levels[j - 1])
                throw ArgumentError("study: m_levels must be strictly increasing");
        }
        if (n_paths == 0) throw ArgumentError("study: n_paths must be positive");
        if (!(horizon > 0.0)) throw ArgumentError("study: horizon must be positive");
    }
    int max_m() const { return m_levels.back(); }
};

// --- convergence ------------------------------------------------------------------------

struct ConvergenceReport {
    std::string kind = "convergence";
    std::string model;
    std::string reference;  ///< analytic-ito, analytic-stratonovich, numerical-ito, skeleton
    std::vector<int> m_levels;
    std::vector<double> mean_sq_sup_error;
    std::vector<double> std_error;
    std::vector<double> energy_mean;     ///< E[sup‖Y^m‖²_H + ∫‖Y^m‖^β_V]
    std::vector<double> energy_se;
    std::vector<double> terminal_bias;   ///< E[Y^m(T)₁ − Y_ref(T)₁]
    std::vector<double> terminal_bias_se;
    std::vector<double> ito_bias;        ///< against the analytic Itô solution, when available
    std::vector<double> ito_bias_se;
    std::vector<double> exit_fraction;
    std::size_t n_paths = 0;
    std::size_t n_effective = 0;
    std::size_t n_blowups = 0;
    std::uint64_t seed = 0;
    SlopeFit fit;
    int inversions = 0;
    bool trend_ok = false;
    bool reduction_ok = false;
    bool quota_ok = false;
    bool pass = false;
};

namespace detail {

/// Trajectory of a closed-form scalar solution on the store grid of `path`.
inline Trajectory analytic_trajectory(const ModelSpec& model, const BrownianPath& path, int store_level,
                                      const std::function<double(double, double)>& sol) {
    Trajectory tr;
    tr.space = model.space;
    tr.horizon = path.horizon();
    tr.step_level = store_level;
    const std::size_t n = std::size_t{1} << store_level;
    for (std::size_t k = 0; k <= n; ++k) {
        const double t = path.horizon() * static_cast<double>(k) / static_cast<double>(n);
        const double y = sol(t, path.at_level(0, store_level, static_cast<std::int64_t>(k)));
        tr.times.push_back(t);
        tr.states.push_back({{y}, t});
        tr.norms_h.push_back(std::abs(y));
        tr.norms_v.push_back(std::abs(y));
    }
    return tr;
}

inline void evaluate_trend(ConvergenceReport& r, const VerdictConfig& v) {
    r.inversions = 0;
    r.trend_ok = true;
    const auto& e = r.mean_sq_sup_error;
    for (std::size_t j = 1; j < e.size(); ++j) {
        if (e[j] <= e[j - 1]) continue;
        ++r.inversions;
        const double tol = v.inversion_se * std::hypot(r.std_error[j], r.std_error[j - 1]);
        if (e[j] - e[j - 1] > tol) r.trend_ok = false;
    }
    if (r.inversions > v.max_inversions) r.trend_ok = false;
    r.reduction_ok = !e.empty() && e.back() < e.front() / v.reduction_factor;
    const double excluded = static_cast<double>(r.n_blowups) / static_cast<double>(std::max<std::size_t>(1, r.n_paths));
    r.quota_ok = excluded <= v.blowup_quota;
    r.pass = r.trend_ok && r.reduction_ok && r.quota_ok && r.n_effective > 0;
}

struct PathOutcome {
    bool blown = false;
    std::vector<double> err, energy, bias, ito_bias, exited;
};

inline ConvergenceReport assemble(const std::vector<PathOutcome>& out, const StudyConfig& cfg,
                                  bool has_ito_bias) {
    ConvergenceReport r;
    r.m_levels = cfg.m_levels;
    r.n_paths = cfg.n_paths;
    r.seed = cfg.seed;
    const std::size_t L = cfg.m_levels.size();
    std::vector<std::vector<double>> err(L), en(L), bi(L), ib(L), ex(L);
    for (const auto& o : out) {
        if (o.blown) {
            ++r.n_blowups;
            continue;
        }
        for (std::size_t j = 0; j < L; ++j) {
            err[j].push_back(o.err[j]);
            en[j].push_back(o.energy[j]);
            bi[j].push_back(o.bias[j]);
            if (has_ito_bias) ib[j].push_back(o.ito_bias[j]);
            ex[j].push_back(o.exited[j]);
        }
    }
    r.n_effective = cfg.n_paths - r.n_blowups;
    for (std::size_t j = 0; j < L; ++j) {
        const auto e = mean_se(err[j]);
        r.mean_sq_sup_error.push_back(e.mean);
        r.std_error.push_back(e.se);
        const auto g = mean_se(en[j]);
        r.energy_mean.push_back(g.mean);
        r.energy_se.push_back(g.se);
        const auto b = mean_se(bi[j]);
        r.terminal_bias.push_back(b.mean);
        r.terminal_bias_se.push_back(b.se);
        if (has_ito_bias) {
            const auto c = mean_se(ib[j]);
            r.ito_bias.push_back(c.mean);
            r.ito_bias_se.push_back(c.se);
        }
        r.exit_fraction.push_back(mean_se(ex[j]).mean);
    }
    r.fit = fit_log2_slope(r.m_levels, r.mean_sq_sup_error);
    evaluate_trend(r, cfg.verdict);
    return r;
}

}  // namespace detail

/**
 * E[sup_t ‖Y − Y^m‖²_H] per level. Each path seed drives one reference (closed form or
 * numerical Itô at ref_dt_level) and one Wong–Zakai run per level, all on one BrownianPath.
 * Paths on which any run blows up are excluded from every level and counted.
 */
inline ConvergenceReport convergence_study(const ModelSpec& model, const StudyConfig& cfg) {
    cfg.validate();
    model.validate();
    const SolverConfig& sc = cfg.solver;
    const bool analytic = cfg.use_analytic && model.analytic.has_value();
    const int ref_level = cfg.ref_dt_level > 0 ? cfg.ref_dt_level : cfg.max_m() + 4;
    int path_level = std::max(cfg.max_m(), sc.store_level);
    if (!analytic) path_level = std::max({path_level, ref_level});
    const std::size_t L = cfg.m_levels.size();
    SolverConfig ref_cfg = sc;
    ref_cfg.dt_level = ref_level;

    std::vector<detail::PathOutcome> out(cfg.n_paths);
    parallel_for(cfg.n_paths, resolve_threads(cfg.threads), [&](std::size_t p) {
        auto& o = out[p];
        o.err.resize(L);
        o.energy.resize(L);
        o.bias.resize(L);
        o.ito_bias.resize(L);
        o.exited.resize(L);
        const BrownianPath path = BrownianPath::sample(rng::derive_seed(cfg.seed, p), cfg.horizon, path_level,
                                                       model.noise->n_modes());
        try {
            Trajectory ref;
            if (analytic)
                ref = detail::analytic_trajectory(model, path, sc.store_level,
                                                  sc.wz_correction ? model.analytic->ito
                                                                   : model.analytic->stratonovich);
            else
                ref = solve_ito(model, path, ref_cfg);
            std::optional<Trajectory> ito_ref;
            if (model.analytic)
                ito_ref = detail::analytic_trajectory(model, path, sc.store_level, model.analytic->ito);
            for (std::size_t j = 0; j < L; ++j) {
                const Trajectory wz = solve_wong_zakai(model, path, cfg.m_levels[j], sc);
                const double d = sup_h_distance(ref, wz);
                o.err[j] = d * d;
                o.energy[j] = wz.energy_functional();
                o.bias[j] = wz.states.back().coeffs[0] - ref.states.back().coeffs[0];
                if (ito_ref) o.ito_bias[j] = wz.states.back().coeffs[0] - ito_ref->states.back().coeffs[0];
                o.exited[j] = wz.exited_at ? 1.0 : 0.0;
            }
        } catch (const BlowUpError&) {
            o.blown = true;
        }
    });
    ConvergenceReport r = detail::assemble(out, cfg, model.analytic.has_value());
    r.model = model.name;
    r.reference = analytic ? (sc.wz_correction ? "analytic-ito" : "analytic-stratonovich") : "numerical-ito";
    return r;
}

/// Skeleton study: E[sup_t ‖Z_g^m − Z_g‖²_H] with Z_g computed once.
inline ConvergenceReport skeleton_convergence_study(const ModelSpec& model, const ControlPath& g,
                                                    const StudyConfig& cfg) {
    cfg.validate();
    model.validate();
    const SolverConfig& sc = cfg.solver;
    const Trajectory zg = solve_skeleton(model, g, cfg.horizon, sc);
    const ControlledBundle bundle = controlled_wz_bundle(model, g);
    const int path_level = std::max(wz_step_level(cfg.max_m(), sc), sc.store_level);
    const std::size_t L = cfg.m_levels.size();

    std::vector<detail::PathOutcome> out(cfg.n_paths);
    parallel_for(cfg.n_paths, resolve_threads(cfg.threads), [&](std::size_t p) {
        auto& o = out[p];
        o.err.resize(L);
        o.energy.resize(L);
        o.bias.resize(L);
        o.exited.resize(L);
        const BrownianPath path = BrownianPath::sample(rng::derive_seed(cfg.seed, p), cfg.horizon, path_level,
                                                       model.noise->n_modes());
        try {
            for (std::size_t j = 0; j < L; ++j) {
                const int m = cfg.m_levels[j];
                if (wz_step_level(m, sc) > path.max_level())
                    throw ArgumentError("skeleton study: path too coarse");
                const Trajectory z = solve_controlled(model, bundle, path, m, sc);
                const double d = sup_h_distance(zg, z);
                o.err[j] = d * d;
                o.energy[j] = z.energy_functional();
                o.bias[j] = z.states.back().coeffs[0] - zg.states.back().coeffs[0];
                o.exited[j] = z.exited_at ? 1.0 : 0.0;
            }
        } catch (const BlowUpError&) {
            o.blown = true;
        }
    });
    ConvergenceReport r = detail::assemble(out, cfg, false);
    r.kind = "skeleton";
    r.model = model.name;
    r.reference = "skeleton";
    return r;
}

// --- energy -------------------------------------------------------------------------

struct EnergyReport {
    std::string model;
    std::vector<int> m_levels;
    std::vector<double> mean;  ///< E[sup_t‖Y^m‖²_H + ∫₀^T‖Y^m‖^β_V]
    std::vector<double> se;
    std::size_t n_paths = 0;
    std::size_t n_blowups = 0;
    double ratio = 0.0;  ///< max/min of the means
    bool pass = false;
};

inline EnergyReport energy_study(const ModelSpec& model, const StudyConfig& cfg) {
    cfg.validate();
    model.validate();
    const std::size_t L = cfg.m_levels.size();
    std::vector<std::vector<double>> vals(cfg.n_paths, std::vector<double>(L));
    std::vector<char> blown(cfg.n_paths, 0);
    parallel_for(cfg.n_paths, resolve_threads(cfg.threads), [&](std::size_t p) {
        const BrownianPath path = BrownianPath::sample(rng::derive_seed(cfg.seed, p), cfg.horizon, cfg.max_m(),
                                                       model.noise->n_modes());
        try {
            for (std::size_t j = 0; j < L; ++j)
                vals[p][j] = solve_wong_zakai(model, path, cfg.m_levels[j], cfg.solver).energy_functional();
        } catch (const BlowUpError&) {
            blown[p] = 1;
        }
    });
    EnergyReport r;
    r.model = model.name;
    r.m_levels = cfg.m_levels;
    r.n_paths = cfg.n_paths;
    for (std::size_t j = 0; j < L; ++j) {
        std::vector<double> col;
        for (std::size_t p = 0; p < cfg.n_paths; ++p)
            if (!blown[p]) col.push_back(vals[p][j]);
        const auto s = mean_se(col);
        r.mean.push_back(s.mean);
        r.se.push_back(s.se);
    }
    for (char b : blown) r.n_blowups += b;
    const auto [lo, hi] = std::minmax_element(r.mean.begin(), r.mean.end());
    r.ratio = *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
    r.pass = r.ratio < cfg.verdict.energy_ratio &&
             static_cast<double>(r.n_blowups) <= cfg.verdict.blowup_quota * static_cast<double>(r.n_paths);
    return r;
}

// --- increment modulus ----------------------------------------------------------------

/// The six shifted-time variants; `ym` marks variants on the Wong–Zakai trajectory.
enum class ModulusVariant { y_floor, y_floor_prev, y_ceil, ym_floor, ym_floor_prev, ym_ceil };

inline const char* to_string(ModulusVariant v) {
    switch (v) {
        case ModulusVariant::y_floor: return "Y_floor";
        case ModulusVariant::y_floor_prev: return "Y_floor_minus_1";
        case ModulusVariant::y_ceil: return "Y_ceil";
        case ModulusVariant::ym_floor: return "Ym_floor";
        case ModulusVariant::ym_floor_prev: return "Ym_floor_minus_1";
        case ModulusVariant::ym_ceil: return "Ym_ceil";
    }
    return "unknown";
}

inline constexpr int kModulusVariants = 6;

struct ModulusReport {
    std::string model;
    std::vector<int> m_levels;
    std::vector<std::string> variants;
    std::vector<std::vector<double>> mean;  ///< [variant][level]
    std::vector<std::vector<double>> se;
    std::vector<SlopeFit> fits;             ///< per variant
    double reference_slope = -0.75;
    double threshold = -0.5;
    std::size_t n_paths = 0;
    std::size_t n_blowups = 0;
    bool pass = false;
};

/**
 * ∫₀^τ ‖y(l) − y(s(l))‖²_H dl on the store grid for the three shifts s(l) of one
 * trajectory at level m: ⌊l/ϖ⌋ϖ, (⌊l/ϖ⌋−1)ϖ ∨ 0 and ((⌊l/ϖ⌋+1)ϖ) ∧ T.
 * Within each store segment the shift is constant, so the trapezoid rule uses the
 * left limit at segment ends that coincide with ϖ-grid points.
 */
inline std::array<double, 3> shifted_moduli(const Trajectory& tr, int m, double tau) {
    const int store = static_cast<int>(std::lround(std::log2(static_cast<double>(tr.size() - 1))));
    if (store < m) throw ArgumentError("increment_modulus: store grid coarser than the varpi grid");
    const GalerkinSpace& space = *tr.space;
    const std::size_t per = std::size_t{1} << (store - m);
    const std::size_t last = tr.size() - 1;
    const double h = tr.horizon / static_cast<double>(last);
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    Vec d(tr.states.front().size());
    auto dist_sq = [&](std::size_t a, std::size_t b) {
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = tr.states[a].coeffs[k] - tr.states[b].coeffs[k];
        return space.inner_h(d, d);
    };
    for (std::size_t j = 0; j < last; ++j) {
        if (tr.times[j + 1] > tau * (1.0 + 1e-14)) break;
        const std::size_t k = j / per;  // ϖ interval of the segment
        const std::size_t anchors[3] = {k * per, k == 0 ? 0 : (k - 1) * per, std::min((k + 1) * per, last)};
        for (int v = 0; v < 3; ++v)
            acc[v] += 0.5 * h * (dist_sq(j, anchors[v]) + dist_sq(j + 1, anchors[v]));
    }
    return acc;
}

inline ModulusReport increment_modulus(const ModelSpec& model, const StudyConfig& cfg) {
    cfg.validate();
    model.validate();
    const SolverConfig& sc = cfg.solver;
    if (sc.store_level <= cfg.max_m())
        throw ArgumentError("increment_modulus: store_level must exceed the largest m");
    const bool analytic = cfg.use_analytic && model.analytic.has_value();
    const int ref_level = cfg.ref_dt_level > 0 ? cfg.ref_dt_level : std::max(sc.dt_level, sc.store_level);
    SolverConfig ref_cfg = sc;
    ref_cfg.dt_level = ref_level;
    const int path_level = analytic ? sc.store_level : std::max(ref_level, sc.store_level);
    const std::size_t L = cfg.m_levels.size();

    std::vector<std::vector<double>> vals(cfg.n_paths, std::vector<double>(L * kModulusVariants));
    std::vector<char> blown(cfg.n_paths, 0);
    parallel_for(cfg.n_paths, resolve_threads(cfg.threads), [&](std::size_t p) {
        const BrownianPath path = BrownianPath::sample(rng::derive_seed(cfg.seed, p), cfg.horizon, path_level,
                                                       model.noise->n_modes());
        try {
            const Trajectory y = analytic ? detail::analytic_trajectory(model, path, sc.store_level, model.analytic->ito)
                                          : solve_ito(model, path, ref_cfg);
            const double exit_y = y.exited_at.value_or(cfg.horizon);
            for (std::size_t j = 0; j < L; ++j) {
                const int m = cfg.m_levels[j];
                const Trajectory ym = solve_wong_zakai(model, path, m, sc);
                const double tau = std::min({exit_y, ym.exited_at.value_or(cfg.horizon),
                                             derivative_exit_time(WzDriver(path, m), cfg.exit_delta)});
                const auto a = shifted_moduli(y, m, tau);
                const auto b = shifted_moduli(ym, m, tau);
                for (int v = 0; v < 3; ++v) {
                    vals[p][j * kModulusVariants + v] = a[v];
                    vals[p][j * kModulusVariants + 3 + v] = b[v];
                }
            }
        } catch (const BlowUpError&) {
            blown[p] = 1;
        }
    });

    ModulusReport r;
    r.model = model.name;
    r.m_levels = cfg.m_levels;
    r.n_paths = cfg.n_paths;
    r.threshold = cfg.verdict.modulus_slope;
    for (char b : blown) r.n_blowups += b;
    r.pass = static_cast<double>(r.n_blowups) <= cfg.verdict.blowup_quota * static_cast<double>(r.n_paths);
    for (int v = 0; v < kModulusVariants; ++v) {
        r.variants.emplace_back(to_string(static_cast<ModulusVariant>(v)));
        std::vector<double> mean, se;
        for (std::size_t j = 0; j < L; ++j) {
            std::vector<double> col;
            for (std::size_t p = 0; p < cfg.n_paths; ++p)
                if (!blown[p]) col.push_back(vals[p][j * kModulusVariants + v]);
            const auto s = mean_se(col);
            mean.push_back(s.mean);
            se.push_back(s.se);
        }
        r.fits.push_back(fit_log2_slope(r.m_levels, mean));
        r.pass = r.pass && r.fits.back().slope <= r.threshold;
        r.mean.push_back(std::move(mean));
        r.se.push_back(std::move(se));
    }
    return r;
}

// --- summation identity for the delayed driver ------------------------------------

struct IdentityResult {
    double lhs_norm = 0.0;
    double residual = 0.0;  ///< ‖LHS − RHS‖_H
    double scale = 0.0;     ///< Σ of the H-norms of the LHS terms
    bool partial_interval = false;
    bool pass(double rel = 1e-12) const { return residual <= rel * scale; }
};

/**
 * Both sides of the rearrangement
 *   ∫₀^t σ(Y((⌊s/ϖ⌋−1)ϖ)) Ẇ^m(s) ds
 *     = Σ_j Σ_{i≤m} σ_i(Y(jϖ)) Δβ_i(j) · ϖ^{-1} |[(j+1)ϖ, (j+2)ϖ) ∩ [0, t]|
 * as finite sums. frozen_states[j] is Y(jϖ) for j = 0..2^m; negative indices read
 * frozen_states[0] (they multiply a zero driver). Partial intervals are allowed.
 */
inline IdentityResult identity_check(const NoiseOperator& noise, const BrownianPath& path, int m,
                                     std::span<const Vec> frozen_states, double t) {
    const WzDriver d(path, m);
    if (!(t >= 0.0) || t > path.horizon()) throw DomainError("identity_check: t outside [0, T]");
    const std::size_t nint = d.intervals();
    if (frozen_states.size() != nint + 1)
        throw DimensionError("identity_check: need 2^m + 1 frozen states");
    const GalerkinSpace& space = noise.space();
    const std::size_t n = space.n_modes();
    const double varpi = d.varpi();
    const std::size_t active = std::min(d.active_modes(), noise.n_modes());
    IdentityResult r;
    const double q = t / varpi;
    r.partial_interval = std::abs(q - std::round(q)) > 1e-12 * std::max(1.0, q);

    auto overlap = [&](double a, double b) { return std::max(0.0, std::min(b, t) - std::max(a, 0.0)); };

    Vec lhs(n, 0.0), rhs(n, 0.0), col(n), term(n);
    std::vector<double> w(path.n_modes());
    for (std::size_t k = 0; k < nint; ++k) {
        const double len = overlap(varpi * static_cast<double>(k), varpi * static_cast<double>(k + 1));
        if (len <= 0.0) break;
        d.vector_on_interval(static_cast<std::int64_t>(k), w);
        const Vec& y = frozen_states[k == 0 ? 0 : k - 1];
        std::fill(term.begin(), term.end(), 0.0);
        for (std::size_t i = 0; i < active; ++i) {
            noise.sigma(y, i, col);
            for (std::size_t c = 0; c < n; ++c) term[c] += col[c] * w[i] * len;
        }
        for (std::size_t c = 0; c < n; ++c) lhs[c] += term[c];
        r.scale += space.norm_h(term);
    }
    for (std::size_t i = 0; i < active; ++i) {
        for (std::size_t j = 0; j + 1 < nint; ++j) {
            const double weight =
                overlap(varpi * static_cast<double>(j + 1), varpi * static_cast<double>(j + 2)) / varpi;
            if (weight <= 0.0) break;
            const double dw = path.increment(i, m, static_cast<std::int64_t>(j));
            noise.sigma(frozen_states[j], i, col);
            for (std::size_t c = 0; c < n; ++c) rhs[c] += col[c] * dw * weight;
        }
    }
    r.lhs_norm = space.norm_h(lhs);
    for (std::size_t c = 0; c < n; ++c) lhs[c] -= rhs[c];
    r.residual = space.norm_h(lhs);
    return r;
}

// --- guard statistics --------------------------------------------------------------

struct GuardRow {
    int m = 0;  ///< 0 for the Itô solution
    double M = 0.0;
    double exit_fraction = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

struct GuardTable {
    std::string model;
    std::vector<GuardRow> rows;
    bool nonincreasing_in_M = true;
};

/**
 * Exit fractions P(sup_t ‖y‖_H + ∫₀^t‖y‖^β_V > M) from per-path guard peaks.
 * peaks[j] holds the peaks of level levels[j].
 */
inline GuardTable guard_statistics(std::span<const int> levels, const std::vector<std::vector<double>>& peaks,
                                   std::span<const double> M_values) {
    if (levels.size() != peaks.size()) throw DimensionError("guard_statistics: one peak list per level");
    GuardTable t;
    for (std::size_t j = 0; j < levels.size(); ++j) {
        double prev = 1.0;
        std::vector<double> sorted(M_values.begin(), M_values.end());
        std::sort(sorted.begin(), sorted.end());
        for (double M : sorted) {
            GuardRow row;
            row.m = levels[j];
            row.M = M;
            row.n = peaks[j].size();
            std::size_t hits = 0;
            for (double p : peaks[j]) hits += p > M;
            row.exit_fraction = row.n ? static_cast<double>(hits) / static_cast<double>(row.n) : 0.0;
            row.std_error = row.n ? std::sqrt(row.exit_fraction * (1.0 - row.exit_fraction) / static_cast<double>(row.n)) : 0.0;
            if (row.exit_fraction > prev) t.nonincreasing_in_M = false;
            prev = row.exit_fraction;
            t.rows.push_back(row);
        }
    }
    return t;
}

/// Runs the Itô solution (level 0 row) and Wong–Zakai runs per level, then tabulates exits.
inline GuardTable guard_study(const ModelSpec& model, const StudyConfig& cfg, std::span<const double> M_values) {
    cfg.validate();
    model.validate();
    const SolverConfig& sc = cfg.solver;
    const int path_level = std::max({cfg.max_m(), sc.dt_level, sc.store_level});
    const std::size_t L = cfg.m_levels.size() + 1;
    std::vector<std::vector<double>> peaks(cfg.n_paths, std::vector<double>(L));
    std::vector<char> blown(cfg.n_paths, 0);
    parallel_for(cfg.n_paths, resolve_threads(cfg.threads), [&](std::size_t p) {
        const BrownianPath path = BrownianPath::sample(rng::derive_seed(cfg.seed, p), cfg.horizon, path_level,
                                                       model.noise->n_modes());
        try {
            peaks[p][0] = solve_ito(model, path, sc).guard_peak;
            for (std::size_t j = 1; j < L; ++j)
                peaks[p][j] = solve_wong_zakai(model, path, cfg.m_levels[j - 1], sc).guard_peak;
        } catch (const BlowUpError&) {
            blown[p] = 1;  // an exploded path has left every finite ball
        }
    });
    std::vector<int> levels{0};
    levels.insert(levels.end(), cfg.m_levels.begin(), cfg.m_levels.end());
    std::vector<std::vector<double>> by_level(L);
    for (std::size_t p = 0; p < cfg.n_paths; ++p)
        for (std::size_t j = 0; j < L; ++j)
            by_level[j].push_back(blown[p] ? std::numeric_limits<double>::infinity() : peaks[p][j]);
    GuardTable t = guard_statistics(levels, by_level, M_values);
    t.model = model.name;
    return t;
}

}  // namespace wz

/**
 * @file solvers.hpp
 * @brief Explicit integrators for the Itô Galerkin system, the Wong–Zakai random ODE
 *        and the general controlled system, all reading one shared BrownianPath.
 *
 * Every solver is a specialization of one stepper for
 *
 *   dX = A(t,X) dt + σ₁(X) dW + s·σ₂(X) Ẇ^m dt + σ₃(X) g dt − G(X) dt,
 *
 * so the Wong–Zakai solver is literally the controlled solver with (0, σ, 0, ½T̂r_m).
 */
#pragma once

#include "wz/error.hpp"
#include "wz/models.hpp"
#include "wz/noise.hpp"
#include "wz/operators.hpp"
#include "wz/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wz {

enum class Scheme { explicit_euler, heun };

inline std::string to_string(Scheme s) { return s == Scheme::heun ? "heun" : "explicit-euler"; }

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "heun") return Scheme::heun;
    if (s == "explicit-euler" || s == "euler") return Scheme::explicit_euler;
    throw ArgumentError("unknown scheme '" + s + "'");
}

struct SolverConfig {
    Scheme scheme = Scheme::heun;
    int dt_level = 10;           ///< time step at most T/2^{dt_level}
    int substeps_per_varpi = 8;  ///< minimum steps inside each ϖ interval (rounded up to 2^j)
    bool taming = false;
    double taming_power = 1.0;
    double max_norm_guard = std::numeric_limits<double>::infinity();
    int store_level = 10;        ///< trajectories are stored at kT/2^{store_level}
    bool wz_correction = true;   ///< subtract ½T̂r_m in the Wong–Zakai equation

    void validate() const {
        if (dt_level < 1 || dt_level > 30) throw ArgumentError("solver: dt_level must lie in [1, 30]");
        if (store_level < 1 || store_level > 24) throw ArgumentError("solver: store_level must lie in [1, 24]");
        if (substeps_per_varpi < 1) throw ArgumentError("solver: substeps_per_varpi must be at least 1");
        if (!(taming_power > 0.0)) throw ArgumentError("solver: taming_power must be positive");
        if (!(max_norm_guard > 0.0)) throw ArgumentError("solver: max_norm_guard must be positive");
    }
};

/// States on the uniform store grid, with cached norms and guard bookkeeping.
struct Trajectory {
    SpacePtr space;
    double horizon = 1.0;
    int step_level = 0;  ///< integration used 2^{step_level} steps
    std::vector<double> times;
    std::vector<CoefState> states;
    std::vector<double> norms_h;
    std::vector<double> norms_v;
    std::optional<double> exited_at;  ///< first step time with ‖y‖_H + ∫‖y‖^β_V > M_guard
    double guard_peak = 0.0;          ///< max over step times of ‖y‖_H + ∫₀^t‖y‖^β_V
    double energy_integral = 0.0;     ///< ∫₀^T ‖y‖^β_V dt, left-point rule on the step grid

    std::size_t size() const noexcept { return times.size(); }

    /// sup_t ‖y(t)‖²_H over the stored grid.
    double sup_h_sq() const {
        double s = 0.0;
        for (double v : norms_h) s = std::max(s, v * v);
        return s;
    }

    /// sup_t ‖y‖²_H + ∫₀^T ‖y‖^β_V.
    double energy_functional() const { return sup_h_sq() + energy_integral; }

    void write_csv(std::ostream& os) const {
        const std::size_t n = states.empty() ? 0 : states.front().size();
        os << "t";
        for (std::size_t k = 1; k <= n; ++k) os << ",c_" << k;
        os << ",norm_h,norm_v\n";
        os.precision(17);
        for (std::size_t j = 0; j < times.size(); ++j) {
            os << times[j];
            for (double c : states[j].coeffs) os << ',' << c;
            os << ',' << norms_h[j] << ',' << norms_v[j] << '\n';
        }
    }
};

namespace detail {

inline int ceil_log2(int k) {
    int l = 0;
    while ((1 << l) < k) ++l;
    return l;
}

struct Integrator {
    const ModelSpec& model;
    const ControlledBundle& bundle;
    const BrownianPath* path;
    int m;            ///< Wong–Zakai level (0 when there is no Ẇ^m term)
    int total_level;  ///< 2^{total_level} steps on [0, T]
    double horizon;
    const SolverConfig& cfg;

    Trajectory run() const {
        const GalerkinSpace& space = *model.space;
        const std::size_t n = space.n_modes();
        const std::size_t steps = std::size_t{1} << total_level;
        const double h = horizon / static_cast<double>(steps);
        const std::size_t stride = std::size_t{1} << (total_level - cfg.store_level);
        const double beta = model.beta;
        const double tame_scale = cfg.taming ? std::pow(h, cfg.taming_power) : 0.0;

        std::optional<WzDriver> driver;
        if (bundle.sigma2) driver.emplace(*path, m);
        const std::size_t n2 = bundle.sigma2 ? bundle.sigma2->n_modes() : 0;
        const std::size_t n1 = bundle.sigma1 ? bundle.sigma1->n_modes() : 0;
        const std::size_t n3 = bundle.sigma3 ? bundle.sigma3->n_modes() : 0;
        const int shift = driver ? total_level - m : 0;

        Vec y = model.initial_state.coeffs;
        Vec k1(n), k2(n), ytil(n), col(n), gcorr(n), diff(n);
        Vec wdot(driver ? driver->n_noise_modes() : 0), gval(n3);
        std::int64_t wdot_interval = -1;

        auto rhs = [&](double t, const Vec& x, Vec& out) {
            model.drift->eval(t, x, out);
            if (cfg.taming) {
                const double s = 1.0 / (1.0 + tame_scale * space.norm_h(out));
                for (double& v : out) v *= s;
            }
            if (bundle.sigma2) {
                for (std::size_t i = 0; i < std::min(n2, driver->active_modes()); ++i) {
                    const double c = bundle.sigma2_sign * wdot[i];
                    if (c == 0.0) continue;
                    bundle.sigma2->sigma(x, i, col);
                    for (std::size_t k = 0; k < n; ++k) out[k] += c * col[k];
                }
            }
            if (bundle.sigma3) {
                bundle.g->eval(t, gval);
                for (std::size_t i = 0; i < n3; ++i) {
                    if (gval[i] == 0.0) continue;
                    bundle.sigma3->sigma(x, i, col);
                    for (std::size_t k = 0; k < n; ++k) out[k] += gval[i] * col[k];
                }
            }
            if (bundle.G) {
                bundle.G->apply(x, gcorr);
                for (std::size_t k = 0; k < n; ++k) out[k] -= gcorr[k];
            }
        };

        Trajectory tr;
        tr.space = model.space;
        tr.horizon = horizon;
        tr.step_level = total_level;
        const std::size_t n_store = (std::size_t{1} << cfg.store_level) + 1;
        tr.times.reserve(n_store);
        tr.states.reserve(n_store);
        tr.norms_h.reserve(n_store);
        tr.norms_v.reserve(n_store);

        auto store = [&](double t, double nh, double nv) {
            tr.times.push_back(t);
            tr.states.push_back({y, t});
            tr.norms_h.push_back(nh);
            tr.norms_v.push_back(nv);
        };

        double nh = space.norm_h(y);
        double nv = space.norm_v(y);
        double energy = 0.0;
        tr.guard_peak = nh;
        if (nh > cfg.max_norm_guard) tr.exited_at = 0.0;
        store(0.0, nh, nv);

        for (std::size_t j = 0; j < steps; ++j) {
            const double t = h * static_cast<double>(j);
            if (driver) {
                const auto k = static_cast<std::int64_t>(j >> shift);
                if (k != wdot_interval) {
                    driver->vector_on_interval(k, wdot);
                    wdot_interval = k;
                }
            }
            rhs(t, y, k1);
            const bool has_diff = n1 > 0;
            if (has_diff) {
                std::fill(diff.begin(), diff.end(), 0.0);
                for (std::size_t i = 0; i < n1; ++i) {
                    const double dw = path->increment(i, total_level, static_cast<std::int64_t>(j));
                    bundle.sigma1->sigma(y, i, col);
                    for (std::size_t k = 0; k < n; ++k) diff[k] += dw * col[k];
                }
            }
            energy += h * std::pow(nv, beta);
            if (cfg.scheme == Scheme::explicit_euler) {
                for (std::size_t k = 0; k < n; ++k) y[k] += h * k1[k];
                if (has_diff)
                    for (std::size_t k = 0; k < n; ++k) y[k] += diff[k];
            } else {
                for (std::size_t k = 0; k < n; ++k) ytil[k] = y[k] + h * k1[k];
                if (has_diff)
                    for (std::size_t k = 0; k < n; ++k) ytil[k] += diff[k];
                rhs(t + h, ytil, k2);
                for (std::size_t k = 0; k < n; ++k) y[k] += 0.5 * h * (k1[k] + k2[k]);
                if (has_diff)
                    for (std::size_t k = 0; k < n; ++k) y[k] += diff[k];
            }
            for (double v : y)
                if (!std::isfinite(v))
                    throw BlowUpError("solver: non-finite state after t = " + std::to_string(t), t);
            nh = space.norm_h(y);
            try {
                nv = space.norm_v(y);
            } catch (const NumericalError&) {
                throw BlowUpError("solver: V-norm overflow after t = " + std::to_string(t), t);
            }
            if (!std::isfinite(nh) || !std::isfinite(nv) || !std::isfinite(energy))
                throw BlowUpError("solver: norm overflow after t = " + std::to_string(t), t);
            const double functional = nh + energy;
            tr.guard_peak = std::max(tr.guard_peak, functional);
            if (!tr.exited_at && functional > cfg.max_norm_guard) tr.exited_at = t + h;
            if ((j + 1) % stride == 0) store(t + h, nh, nv);
        }
        tr.energy_integral = energy;
        return tr;
    }
};

inline void require_path_modes(const BrownianPath& path, const NoiseOperator* s) {
    if (s && path.n_modes() < s->n_modes())
        throw DimensionError("solver: path has fewer modes than the noise operator");
}

}  // namespace detail

/// Steps per ϖ interval used at level m: max(K_sub, 2^{max(dt_level, store_level) − m}), as a power of two.
inline int wz_step_level(int m, const SolverConfig& cfg) {
    return std::max({m + detail::ceil_log2(cfg.substeps_per_varpi), cfg.dt_level, cfg.store_level});
}

/**
 * Controlled system on [0, path.horizon()]. σ₁ reads path increments at the step level,
 * which must not exceed path.max_level(); σ₂ reads the level-m driver.
 */
inline Trajectory solve_controlled(const ModelSpec& model, const ControlledBundle& bundle,
                                   const BrownianPath& path, int m, const SolverConfig& cfg) {
    cfg.validate();
    model.validate();
    bundle.validate(*model.space, path.horizon());
    detail::require_path_modes(path, bundle.sigma1.get());
    detail::require_path_modes(path, bundle.sigma2.get());
    if (m < 1) throw ArgumentError("solve_controlled: m must be at least 1");
    const int level = wz_step_level(m, cfg);
    if (bundle.sigma1 && level > path.max_level())
        throw ArgumentError("solve_controlled: step level " + std::to_string(level) +
                            " exceeds the path's max_level");
    return detail::Integrator{model, bundle, &path, m, level, path.horizon(), cfg}.run();
}

/// Deterministic controlled system (no σ₁, σ₂ terms) on [0, T].
inline Trajectory solve_controlled(const ModelSpec& model, const ControlledBundle& bundle, double horizon,
                                   int m, const SolverConfig& cfg) {
    cfg.validate();
    model.validate();
    if (bundle.sigma1 || bundle.sigma2)
        throw ArgumentError("solve_controlled: stochastic terms need a Brownian path");
    bundle.validate(*model.space, horizon);
    if (m < 1) throw ArgumentError("solve_controlled: m must be at least 1");
    if (!(horizon > 0.0)) throw ArgumentError("solve_controlled: horizon must be positive");
    return detail::Integrator{model, bundle, nullptr, m, wz_step_level(m, cfg), horizon, cfg}.run();
}

/// Euler–Maruyama (or Heun drift with Euler diffusion) at step T/2^{max(dt_level, store_level)}.
inline Trajectory solve_ito(const ModelSpec& model, const BrownianPath& path, const SolverConfig& cfg) {
    cfg.validate();
    model.validate();
    detail::require_path_modes(path, model.noise.get());
    const int level = std::max(cfg.dt_level, cfg.store_level);
    if (level > path.max_level())
        throw ArgumentError("solve_ito: step level " + std::to_string(level) + " exceeds the path's max_level");
    ControlledBundle b;
    b.sigma1 = model.noise;
    return detail::Integrator{model, b, &path, 0, level, path.horizon(), cfg}.run();
}

/// Bundle (0, σ, 0, ½T̂r_m) of the Wong–Zakai equation; G is dropped when the correction is off.
inline ControlledBundle wong_zakai_bundle(const ModelSpec& model, int m, bool correction = true) {
    ControlledBundle b;
    b.sigma2 = model.noise;
    if (correction && !model.noise->additive()) b.G = half_correction(model.noise, m);
    return b;
}

inline Trajectory solve_wong_zakai(const ModelSpec& model, const BrownianPath& path, int m,
                                   const SolverConfig& cfg) {
    return solve_controlled(model, wong_zakai_bundle(model, m, cfg.wz_correction), path, m, cfg);
}

/// Skeleton bundle (0, 0, σ, ½T̂r_m) with the given control.
inline ControlledBundle skeleton_bundle(const ModelSpec& model, const ControlPath& g, int m_ref) {
    ControlledBundle b;
    b.sigma3 = model.noise;
    b.g = g;
    if (!model.noise->additive()) b.G = half_correction(model.noise, m_ref);
    return b;
}

/// Bundle of the controlled Wong–Zakai system: σ dW − σẆ^m dt + σ g dt, no G.
inline ControlledBundle controlled_wz_bundle(const ModelSpec& model, const ControlPath& g) {
    ControlledBundle b;
    b.sigma1 = model.noise;
    b.sigma2 = model.noise;
    b.sigma2_sign = -1.0;
    b.sigma3 = model.noise;
    b.g = g;
    return b;
}

inline Trajectory solve_skeleton(const ModelSpec& model, const ControlPath& g, double horizon,
                                 const SolverConfig& cfg) {
    const int m_ref = static_cast<int>(model.noise->n_modes());
    return solve_controlled(model, skeleton_bundle(model, g, m_ref), horizon, std::max(1, m_ref), cfg);
}

namespace detail {

inline void check_compatible(const Trajectory& a, const Trajectory& b) {
    if (a.states.empty() || b.states.empty()) throw ArgumentError("sup_h_distance: empty trajectory");
    if (a.states.front().size() != b.states.front().size())
        throw DimensionError("sup_h_distance: trajectories have different dimensions");
}

/// b evaluated at time t by piecewise-linear interpolation.
inline void interpolate(const Trajectory& b, double t, Vec& out) {
    const auto it = std::lower_bound(b.times.begin(), b.times.end(), t);
    if (it == b.times.begin()) {
        out = b.states.front().coeffs;
        return;
    }
    if (it == b.times.end()) {
        out = b.states.back().coeffs;
        return;
    }
    const std::size_t hi = static_cast<std::size_t>(it - b.times.begin());
    const double t0 = b.times[hi - 1], t1 = b.times[hi];
    const double w = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
    const auto& y0 = b.states[hi - 1].coeffs;
    const auto& y1 = b.states[hi].coeffs;
    out.resize(y0.size());
    for (std::size_t k = 0; k < y0.size(); ++k) out[k] = (1.0 - w) * y0[k] + w * y1[k];
}

}  // namespace detail

/// sup over the stored grid of ‖t1 − t2‖_H (t2 interpolated to t1's times if the grids differ).
inline double sup_h_distance(const Trajectory& t1, const Trajectory& t2) {
    detail::check_compatible(t1, t2);
    const GalerkinSpace& space = *t1.space;
    const bool same = t1.times == t2.times;
    double sup = 0.0;
    Vec other, diff(t1.states.front().size());
    for (std::size_t j = 0; j < t1.size(); ++j) {
        const Vec* b = &other;
        if (same)
            b = &t2.states[j].coeffs;
        else
            detail::interpolate(t2, t1.times[j], other);
        for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = t1.states[j].coeffs[k] - (*b)[k];
        sup = std::max(sup, space.norm_h(diff));
    }
    return sup;
}

}  // namespace wz

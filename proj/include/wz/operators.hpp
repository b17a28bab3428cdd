/**
 * @file operators.hpp
 * @brief Drift and noise interfaces, the Itô–Stratonovich correction term, the
 *        controlled-system coefficient bundle, and sampled hypothesis audits.
 */
#pragma once

#include "wz/error.hpp"
#include "wz/noise.hpp"
#include "wz/rng.hpp"
#include "wz/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wz {

using Vec = std::vector<double>;
using ConstVec = std::span<const double>;
using MutVec = std::span<double>;

/// Constants a drift declares for the monotonicity/coercivity/growth audits.
struct DriftConstants {
    double L_A = 1.0;       ///< coercivity constant
    double beta = 2.0;      ///< V-norm power
    double alpha = 0.0;     ///< H-norm power in the growth bound
    double zeta = 0.0;      ///< H-norm power in the ρ, η growth bound
    double C_weight = 0.0;  ///< constant bounding |ρ| + |η|
    double C_growth = 0.0;  ///< constant in the drift growth bound
    std::function<double(double)> f = [](double) { return 0.0; };
};

/**
 * DriftOperator: Galerkin-projected A(t, ·) acting on coefficients.
 *
 * `eval` returns the coefficient vector d with ⟨A(t,y), z⟩ = (d, z)_H for every z in
 * the Galerkin space, so dy/dt = d is the projected flow.
 */
class DriftOperator {
public:
    DriftOperator(SpacePtr space, DriftConstants c) : space_(std::move(space)), c_(std::move(c)) {
        if (!space_) throw ArgumentError("DriftOperator: null space");
        if (std::abs(c_.beta - space_->v_exponent()) > 1e-12)
            throw ArgumentError("DriftOperator: declared beta must equal the space's v_exponent");
    }
    virtual ~DriftOperator() = default;

    virtual std::string name() const = 0;
    virtual void eval(double t, ConstVec y, MutVec out) const = 0;

    Vec eval(double t, ConstVec y) const {
        space_->require_dim(y, "drift eval");
        Vec out(y.size());
        eval(t, y, out);
        return out;
    }

    /// ⟨A(t,y), z⟩.
    virtual double pairing(double t, ConstVec y, ConstVec z) const {
        return space_->pairing(eval(t, y), z);
    }

    /// ‖A(t,y)‖_{V*}; the default is the weighted dual norm of the quadratic V-norm.
    virtual double dual_norm(double t, ConstVec y) const { return space_->norm_vstar(eval(t, y)); }

    virtual double rho(ConstVec) const { return 0.0; }
    virtual double eta(ConstVec) const { return 0.0; }

    /// True when explicit stepping needs taming (growth faster than linear).
    virtual bool superlinear() const { return false; }

    const GalerkinSpace& space() const noexcept { return *space_; }
    const SpacePtr& space_ptr() const noexcept { return space_; }
    const DriftConstants& constants() const noexcept { return c_; }

private:
    SpacePtr space_;
    DriftConstants c_;
};

struct NoiseConstants {
    double K = 0.0;        ///< ‖σ(x)‖²_{L2} ≤ K(1 + ‖x‖²_H)
    double L = 0.0;        ///< ‖T̂r_m(x)‖²_H ≤ L(1 + ‖x‖²_H)
    double C_kappa = 0.0;  ///< |κ| + |ϰ| ≤ C_kappa(1 + ‖x‖_H^zeta)
    double zeta = 0.0;
};

/**
 * NoiseOperator: the columns σ_i(y) = σ(y)e_i with first and second Fréchet derivatives.
 * Mode indices are zero-based.
 */
class NoiseOperator {
public:
    NoiseOperator(SpacePtr space, std::size_t n_modes, NoiseConstants c)
        : space_(std::move(space)), n_modes_(n_modes), c_(c) {
        if (!space_) throw ArgumentError("NoiseOperator: null space");
    }
    virtual ~NoiseOperator() = default;

    virtual std::string name() const = 0;
    virtual void sigma(ConstVec y, std::size_t i, MutVec out) const = 0;
    virtual void d_sigma(ConstVec y, std::size_t i, ConstVec v, MutVec out) const = 0;
    virtual void d2_sigma(ConstVec y, std::size_t i, ConstVec v, ConstVec w, MutVec out) const = 0;
    virtual double kappa(ConstVec) const { return 0.0; }
    virtual double varkappa(ConstVec) const { return 0.0; }
    /// σ_i independent of y.
    virtual bool additive() const { return false; }

    Vec sigma(ConstVec y, std::size_t i) const {
        check(y, i);
        Vec out(y.size());
        sigma(y, i, out);
        return out;
    }
    Vec d_sigma(ConstVec y, std::size_t i, ConstVec v) const {
        check(y, i);
        Vec out(y.size());
        d_sigma(y, i, v, out);
        return out;
    }
    Vec d2_sigma(ConstVec y, std::size_t i, ConstVec v, ConstVec w) const {
        check(y, i);
        Vec out(y.size());
        d2_sigma(y, i, v, w, out);
        return out;
    }

    /// ‖σ(y)‖²_{L2} = Σ_i ‖σ_i(y)‖²_H over the first `modes` columns.
    double hs_norm_sq(ConstVec y, std::size_t modes) const {
        Vec col(y.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < std::min(modes, n_modes_); ++i) {
            sigma(y, i, col);
            acc += space_->inner_h(col, col);
        }
        return acc;
    }

    std::size_t n_modes() const noexcept { return n_modes_; }
    std::size_t dim() const noexcept { return space_->n_modes(); }
    const GalerkinSpace& space() const noexcept { return *space_; }
    const SpacePtr& space_ptr() const noexcept { return space_; }
    const NoiseConstants& constants() const noexcept { return c_; }

protected:
    void check(ConstVec y, std::size_t i) const {
        space_->require_dim(y, "noise eval");
        if (i >= n_modes_) throw IndexError("noise: mode index out of range");
    }

private:
    SpacePtr space_;
    std::size_t n_modes_;
    NoiseConstants c_;
};

/// σ ≡ 0 with a fixed number of (inactive) modes.
class ZeroNoise final : public NoiseOperator {
public:
    ZeroNoise(SpacePtr space, std::size_t n_modes) : NoiseOperator(std::move(space), n_modes, {}) {}
    std::string name() const override { return "zero"; }
    void sigma(ConstVec, std::size_t, MutVec out) const override { std::fill(out.begin(), out.end(), 0.0); }
    void d_sigma(ConstVec, std::size_t, ConstVec, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    void d2_sigma(ConstVec, std::size_t, ConstVec, ConstVec, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    bool additive() const override { return true; }
};

// --- correction term ------------------------------------------------------------

/// T̂r_m(y) = Σ_{i < min(m, n)} Dσ_i(y) σ_i(y), written into out. `scratch` needs two
/// vectors of the state dimension.
inline void correction_tr_into(const NoiseOperator& noise, int m, ConstVec y, MutVec out,
                               MutVec col, MutVec dcol) {
    std::fill(out.begin(), out.end(), 0.0);
    if (noise.additive()) return;
    const std::size_t active = std::min<std::size_t>(static_cast<std::size_t>(m), noise.n_modes());
    for (std::size_t i = 0; i < active; ++i) {
        noise.sigma(y, i, col);
        noise.d_sigma(y, i, col, dcol);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += dcol[k];
    }
}

inline Vec correction_tr(const NoiseOperator& noise, int m, ConstVec y) {
    if (m < 1) throw ArgumentError("correction_tr: m must be at least 1");
    noise.space().require_dim(y, "correction_tr");
    Vec out(y.size()), col(y.size()), dcol(y.size());
    correction_tr_into(noise, m, y, out, col, dcol);
    return out;
}

// --- controlled system ----------------------------------------------------------

/// U-valued control g tabulated on a uniform grid over [0, T], linearly interpolated.
class ControlPath {
public:
    ControlPath() = default;
    ControlPath(double horizon, std::vector<std::vector<double>> nodes)
        : horizon_(horizon), nodes_(std::move(nodes)) {
        if (nodes_.size() < 2) throw ArgumentError("ControlPath: need at least two nodes");
        if (!(horizon > 0.0)) throw ArgumentError("ControlPath: horizon must be positive");
        for (const auto& n : nodes_)
            if (n.size() != nodes_.front().size()) throw DimensionError("ControlPath: ragged nodes");
    }

    static ControlPath constant(double horizon, std::vector<double> value) {
        return ControlPath(horizon, {value, value});
    }

    static ControlPath from_function(double horizon, int level, std::size_t n_modes,
                                     const std::function<void(double, MutVec)>& g) {
        const std::size_t count = (std::size_t{1} << level) + 1;
        std::vector<std::vector<double>> nodes(count, std::vector<double>(n_modes));
        for (std::size_t k = 0; k < count; ++k)
            g(horizon * static_cast<double>(k) / static_cast<double>(count - 1), nodes[k]);
        return ControlPath(horizon, std::move(nodes));
    }

    std::size_t n_modes() const noexcept { return nodes_.empty() ? 0 : nodes_.front().size(); }
    double horizon() const noexcept { return horizon_; }

    void eval(double t, MutVec out) const {
        if (t < 0.0 || t > horizon_ * (1.0 + 1e-12))
            throw DomainError("ControlPath: time outside [0, T]");
        const double s = std::clamp(t / horizon_, 0.0, 1.0) * static_cast<double>(nodes_.size() - 1);
        const std::size_t k = std::min(static_cast<std::size_t>(s), nodes_.size() - 2);
        const double w = s - static_cast<double>(k);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (1.0 - w) * nodes_[k][i] + w * nodes_[k + 1][i];
    }

    /// ∫_0^T ‖g‖²_U dt by the trapezoid rule on the nodes.
    double energy() const {
        const double h = horizon_ / static_cast<double>(nodes_.size() - 1);
        double acc = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            double sq = 0.0;
            for (double v : nodes_[k]) sq += v * v;
            acc += (k == 0 || k + 1 == nodes_.size()) ? 0.5 * sq : sq;
        }
        return acc * h;
    }

private:
    double horizon_ = 1.0;
    std::vector<std::vector<double>> nodes_;
};

/// Map G : H → H with a declared growth bound ‖G(x)‖²_H ≤ L(1 + ‖x‖²_H).
struct CorrectionMap {
    std::function<void(ConstVec, MutVec)> apply;
    double bound_L = 0.0;
};

/// G = ½ T̂r_m.
inline CorrectionMap half_correction(std::shared_ptr<const NoiseOperator> noise, int m) {
    if (m < 1) throw ArgumentError("half_correction: m must be at least 1");
    CorrectionMap g;
    g.bound_L = 0.25 * noise->constants().L;
    g.apply = [noise, m](ConstVec y, MutVec out) {
        thread_local Vec col, dcol;
        col.resize(y.size());
        dcol.resize(y.size());
        correction_tr_into(*noise, m, y, out, col, dcol);
        for (double& v : out) v = 0.5 * v;
    };
    return g;
}

/**
 * Coefficients of dX = A dt + σ₁ dW + s·σ₂ Ẇ^m dt + σ₃ g dt − G dt.
 * A null noise pointer stands for the zero operator.
 */
struct ControlledBundle {
    std::shared_ptr<const NoiseOperator> sigma1;
    std::shared_ptr<const NoiseOperator> sigma2;
    std::shared_ptr<const NoiseOperator> sigma3;
    double sigma2_sign = 1.0;
    std::optional<ControlPath> g;
    std::optional<CorrectionMap> G;

    void validate(const GalerkinSpace& space, double horizon) const {
        for (const auto* s : {sigma1.get(), sigma2.get(), sigma3.get()})
            if (s && s->dim() != space.n_modes())
                throw DimensionError("ControlledBundle: noise dimension does not match the space");
        if (sigma3) {
            if (!g) throw ArgumentError("ControlledBundle: sigma3 requires a control path g");
            if (g->n_modes() != sigma3->n_modes())
                throw DimensionError("ControlledBundle: control has wrong number of modes");
            if (g->horizon() + 1e-12 < horizon)
                throw DomainError("ControlledBundle: control does not cover [0, T]");
        }
        if (G && !G->apply) throw ArgumentError("ControlledBundle: empty G map");
    }
};

// --- hypothesis audits ----------------------------------------------------------

/// One sampled instance of an inequality lhs ≤ rhs.
struct Margin {
    double lhs = 0.0;
    double rhs = 0.0;
    double raw() const { return lhs - rhs; }
    double normalized() const { return (lhs - rhs) / (1.0 + std::abs(rhs)); }
};

inline Vec axpy(double a, ConstVec x, ConstVec y) {
    Vec out(y.begin(), y.end());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += a * x[k];
    return out;
}

/// 2⟨A(t,x₁) − A(t,x₂), x₁ − x₂⟩ ≤ (f + ρ(x₁) + η(x₂))‖x₁ − x₂‖²_H
inline Margin monotonicity_margin(const DriftOperator& a, double t, ConstVec x1, ConstVec x2) {
    const Vec w = axpy(-1.0, x2, x1);
    const double lhs = 2.0 * (a.pairing(t, x1, w) - a.pairing(t, x2, w));
    const double wn = a.space().inner_h(w, w);
    return {lhs, (a.constants().f(t) + a.rho(x1) + a.eta(x2)) * wn};
}

/// ‖σ(x₁) − σ(x₂)‖²_{L2} ≤ (κ(x₁) + ϰ(x₂))‖x₁ − x₂‖²_H
inline Margin noise_lipschitz_margin(const NoiseOperator& s, ConstVec x1, ConstVec x2) {
    Vec c1(x1.size()), c2(x1.size());
    double lhs = 0.0;
    for (std::size_t i = 0; i < s.n_modes(); ++i) {
        s.sigma(x1, i, c1);
        s.sigma(x2, i, c2);
        for (std::size_t k = 0; k < c1.size(); ++k) c1[k] -= c2[k];
        lhs += s.space().inner_h(c1, c1);
    }
    const Vec w = axpy(-1.0, x2, x1);
    return {lhs, (s.kappa(x1) + s.varkappa(x2)) * s.space().inner_h(w, w)};
}

/// |ρ(x)| + |η(x)| ≤ C(1 + ‖x‖_V^β)(1 + ‖x‖_H^ζ)
inline Margin weight_growth_margin(const DriftOperator& a, ConstVec x) {
    const auto& c = a.constants();
    const double lhs = std::abs(a.rho(x)) + std::abs(a.eta(x));
    const double rhs = c.C_weight * (1.0 + std::pow(a.space().norm_v(x), c.beta)) *
                       (1.0 + std::pow(a.space().norm_h(x), c.zeta));
    return {lhs, rhs};
}

/// |κ(x)| + |ϰ(x)| ≤ C(1 + ‖x‖_H^ζ)
inline Margin noise_weight_growth_margin(const NoiseOperator& s, ConstVec x) {
    const auto& c = s.constants();
    return {std::abs(s.kappa(x)) + std::abs(s.varkappa(x)),
            c.C_kappa * (1.0 + std::pow(s.space().norm_h(x), c.zeta))};
}

/**
 * Coercivity in the doubled form 2⟨A(t,x), x⟩ ≤ f(t)(1 + ‖x‖²_H) − L_A‖x‖_V^β, which is
 * the form that enters the energy identity for ‖x‖²_H.
 */
inline Margin coercivity_margin(const DriftOperator& a, double t, ConstVec x) {
    const auto& c = a.constants();
    const double h2 = a.space().inner_h(x, x);
    return {2.0 * a.pairing(t, x, x),
            c.f(t) * (1.0 + h2) - c.L_A * std::pow(a.space().norm_v(x), c.beta)};
}

/// ‖A(t,x)‖_{V*}^{β/(β−1)} ≤ (f(t) + C‖x‖_V^β)(1 + ‖x‖_H^α)
inline Margin drift_growth_margin(const DriftOperator& a, double t, ConstVec x) {
    const auto& c = a.constants();
    const double lhs = std::pow(a.dual_norm(t, x), c.beta / (c.beta - 1.0));
    const double rhs = (c.f(t) + c.C_growth * std::pow(a.space().norm_v(x), c.beta)) *
                       (1.0 + std::pow(a.space().norm_h(x), c.alpha));
    return {lhs, rhs};
}

/// ‖σ(x)‖²_{L2} ≤ K(1 + ‖x‖²_H)
inline Margin noise_growth_margin(const NoiseOperator& s, ConstVec x) {
    return {s.hs_norm_sq(x, s.n_modes()), s.constants().K * (1.0 + s.space().inner_h(x, x))};
}

/// ‖T̂r_m(x)‖²_H ≤ L(1 + ‖x‖²_H)
inline Margin correction_growth_margin(const NoiseOperator& s, int m, ConstVec x) {
    const Vec tr = correction_tr(s, m, x);
    return {s.space().inner_h(tr, tr), s.constants().L * (1.0 + s.space().inner_h(x, x))};
}

/// (T̂r_m(x₂) − T̂r_m(x₁), x₁ − x₂)_H ≤ (κ(x₁) + ϰ(x₂))‖x₁ − x₂‖²_H
inline Margin correction_monotonicity_margin(const NoiseOperator& s, int m, ConstVec x1, ConstVec x2) {
    const Vec d = axpy(-1.0, correction_tr(s, m, x1), correction_tr(s, m, x2));
    const Vec w = axpy(-1.0, x2, x1);
    return {s.space().inner_h(d, w), (s.kappa(x1) + s.varkappa(x2)) * s.space().inner_h(w, w)};
}

/**
 * Hemicontinuity of λ ↦ ⟨A(t, x₁ + λx₂), x⟩ on λ ∈ [−1, 1]: the largest jump between
 * neighbouring grid values must contract under refinement. lhs is the jump on 2N
 * intervals, rhs is 3/4 of the jump on N intervals plus a roundoff allowance.
 */
inline Margin hemicontinuity_margin(const DriftOperator& a, double t, ConstVec x1, ConstVec x2,
                                    ConstVec x, std::size_t n_intervals = 32) {
    auto max_jump = [&](std::size_t n, double& scale) {
        double prev = 0.0, jump = 0.0;
        for (std::size_t j = 0; j <= n; ++j) {
            const double lambda = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n);
            const double g = a.pairing(t, axpy(lambda, x2, x1), x);
            if (!std::isfinite(g)) throw NumericalError("hemicontinuity: non-finite pairing");
            scale = std::max(scale, std::abs(g));
            if (j > 0) jump = std::max(jump, std::abs(g - prev));
            prev = g;
        }
        return jump;
    };
    double scale = 0.0;
    const double coarse = max_jump(n_intervals, scale);
    const double fine = max_jump(2 * n_intervals, scale);
    return {fine, 0.75 * coarse + 1e-12 * (1.0 + scale)};
}

/// Worst case of one inequality over all trials.
struct InequalityResult {
    std::string name;
    double worst_margin = -std::numeric_limits<double>::infinity();  ///< normalized
    double worst_raw = -std::numeric_limits<double>::infinity();
    std::vector<double> argmax_sample_norms;  ///< ‖·‖_H of the samples at the worst margin
    std::size_t trials = 0;
    std::size_t non_finite = 0;
    bool pass = false;
};

struct HypothesisReport {
    std::string drift_name;
    std::string noise_name;
    double tolerance = 1e-8;
    double r_max = 10.0;
    std::size_t n_trials = 0;
    std::vector<InequalityResult> results;
    bool all_pass = false;

    const InequalityResult* find(const std::string& name) const {
        for (const auto& r : results)
            if (r.name == name) return &r;
        return nullptr;
    }
};

struct SamplerConfig {
    double r_max = 10.0;
    double spectral_decay = 1.0;  ///< coefficient k scaled by (k+1)^{-decay} before normalising
    double horizon = 1.0;         ///< times sampled uniformly in [0, T]
    int correction_level = 8;     ///< m used for the T̂r_m audits
    double tolerance = 1e-8;      ///< normalized margin threshold
};

namespace detail {

class StateSampler {
public:
    StateSampler(const GalerkinSpace& space, const SamplerConfig& cfg, std::uint64_t seed)
        : space_(space), cfg_(cfg), seed_(seed) {}

    /// Random state with ‖y‖_H uniform in [0, R_max].
    Vec draw() {
        const std::size_t n = space_.n_modes();
        Vec y(n);
        for (std::size_t k = 0; k < n; ++k)
            y[k] = rng::normal(seed_, 1u, static_cast<std::uint32_t>(k), counter_) /
                   std::pow(static_cast<double>(k + 1), cfg_.spectral_decay);
        const double radius = cfg_.r_max * rng::uniform(seed_, 2u, 0u, counter_);
        ++counter_;
        const double nh = space_.norm_h(y);
        if (nh > 0.0)
            for (double& v : y) v *= radius / nh;
        return y;
    }

    double time() { return cfg_.horizon * (1.0 - rng::uniform(seed_, 3u, 0u, counter_++)); }

private:
    const GalerkinSpace& space_;
    SamplerConfig cfg_;
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

inline void record(InequalityResult& r, const Margin& mg, std::vector<double> norms) {
    ++r.trials;
    if (!std::isfinite(mg.lhs) || !std::isfinite(mg.rhs)) {
        ++r.non_finite;
        return;
    }
    const double nm = mg.normalized();
    if (nm > r.worst_margin) {
        r.worst_margin = nm;
        r.worst_raw = mg.raw();
        r.argmax_sample_norms = std::move(norms);
    }
}

}  // namespace detail

/// Margins of the two T̂r_m inequalities over consecutive sample pairs.
struct TrBoundReport {
    double growth_margin = -std::numeric_limits<double>::infinity();
    double monotonicity_margin = -std::numeric_limits<double>::infinity();
    double tolerance = 1e-8;
    bool pass = false;
};

inline TrBoundReport check_tr_bound(const NoiseOperator& noise, int m, std::span<const Vec> samples,
                                    double tolerance = 1e-8) {
    if (samples.empty()) throw ArgumentError("check_tr_bound: empty sample set");
    TrBoundReport r;
    r.tolerance = tolerance;
    for (std::size_t j = 0; j < samples.size(); ++j) {
        r.growth_margin = std::max(r.growth_margin, correction_growth_margin(noise, m, samples[j]).raw());
        if (j + 1 < samples.size())
            r.monotonicity_margin = std::max(
                r.monotonicity_margin,
                correction_monotonicity_margin(noise, m, samples[j], samples[j + 1]).raw());
    }
    r.pass = r.growth_margin <= tolerance && r.monotonicity_margin <= tolerance;
    return r;
}

/**
 * Sampled audit of the drift and noise hypotheses with the operators' declared
 * constants. Each trial draws fresh states y, y₁, y₂, z with ‖·‖_H ≤ R_max and a time
 * t ∈ (0, T]; each inequality records its worst normalized margin. Non-finite
 * operator output counts as a failure of that inequality.
 */
inline HypothesisReport probe_hypotheses(const DriftOperator& drift, const NoiseOperator& noise,
                                         const GalerkinSpace& space, const SamplerConfig& cfg,
                                         std::size_t n_trials, std::uint64_t seed) {
    if (drift.space().n_modes() != space.n_modes() || noise.dim() != space.n_modes())
        throw DimensionError("probe_hypotheses: operators and space disagree on dimension");
    const char* names[] = {"hemicontinuity",       "local_monotonicity", "noise_lipschitz",
                           "monotonicity_weights", "noise_weights",      "coercivity",
                           "drift_growth",         "noise_growth",       "correction_growth",
                           "correction_monotonicity"};
    HypothesisReport rep;
    rep.drift_name = drift.name();
    rep.noise_name = noise.name();
    rep.tolerance = cfg.tolerance;
    rep.r_max = cfg.r_max;
    rep.n_trials = n_trials;
    for (const char* n : names) {
        InequalityResult r;
        r.name = n;
        rep.results.push_back(std::move(r));
    }
    auto& res = rep.results;

    detail::StateSampler sampler(space, cfg, seed);
    for (std::size_t trial = 0; trial < n_trials; ++trial) {
        const Vec y1 = sampler.draw();
        const Vec y2 = sampler.draw();
        const Vec z = sampler.draw();
        const double t = sampler.time();
        const double n1 = space.norm_h(y1), n2 = space.norm_h(y2), nz = space.norm_h(z);
        auto guarded = [&](InequalityResult& r, auto&& fn, std::vector<double> norms) {
            try {
                detail::record(r, fn(), std::move(norms));
            } catch (const NumericalError&) {
                ++r.trials;
                ++r.non_finite;
            }
        };
        guarded(res[0], [&] { return hemicontinuity_margin(drift, t, y1, y2, z); }, {n1, n2, nz});
        guarded(res[1], [&] { return monotonicity_margin(drift, t, y1, y2); }, {n1, n2});
        guarded(res[2], [&] { return noise_lipschitz_margin(noise, y1, y2); }, {n1, n2});
        guarded(res[3], [&] { return weight_growth_margin(drift, y1); }, {n1});
        guarded(res[4], [&] { return noise_weight_growth_margin(noise, y1); }, {n1});
        guarded(res[5], [&] { return coercivity_margin(drift, t, y1); }, {n1});
        guarded(res[6], [&] { return drift_growth_margin(drift, t, y1); }, {n1});
        guarded(res[7], [&] { return noise_growth_margin(noise, y1); }, {n1});
        guarded(res[8], [&] { return correction_growth_margin(noise, cfg.correction_level, y1); }, {n1});
        guarded(res[9], [&] { return correction_monotonicity_margin(noise, cfg.correction_level, y1, y2); },
                {n1, n2});
    }
    rep.all_pass = true;
    for (auto& r : res) {
        r.pass = r.non_finite == 0 && r.worst_margin <= cfg.tolerance;
        rep.all_pass = rep.all_pass && r.pass;
    }
    return rep;
}

}  // namespace wz

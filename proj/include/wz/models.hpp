/**
 * @file models.hpp
 * @brief Shipped drift/noise/space instances with declared hypothesis constants.
 */
#pragma once

#include "wz/error.hpp"
#include "wz/operators.hpp"
#include "wz/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace wz {

// --- drifts ---------------------------------------------------------------------

/// A(y) = μy on the scalar space.
class LinearScalarDrift final : public DriftOperator {
public:
    LinearScalarDrift(SpacePtr space, double mu) : DriftOperator(std::move(space), constants_for(mu)), mu_(mu) {}
    std::string name() const override { return "linear-scalar"; }
    void eval(double, ConstVec y, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = mu_ * y[k];
    }
    double mu() const noexcept { return mu_; }

private:
    static DriftConstants constants_for(double mu) {
        DriftConstants c;
        c.L_A = 1.0;
        c.beta = 2.0;
        c.C_growth = mu * mu;
        const double f = std::max(0.0, 2.0 * mu + c.L_A);
        c.f = [f](double) { return f; };
        return c;
    }
    double mu_;
};

/// A = νΔ on a spectral basis: coefficient k is multiplied by −νκ_k².
class HeatDrift final : public DriftOperator {
public:
    HeatDrift(SpacePtr space, double nu) : DriftOperator(space, constants_for(nu)), nu_(nu) {
        if (!(nu > 0.0)) throw ArgumentError("heat: nu must be positive");
        if (space->kind() == BasisKind::scalar) throw ArgumentError("heat: needs a spatial basis");
        mult_.resize(space->n_modes());
        for (std::size_t k = 0; k < mult_.size(); ++k) {
            const double kk = space->wavenumber(k);
            mult_[k] = -nu * kk * kk;
        }
    }
    std::string name() const override { return "heat"; }
    void eval(double, ConstVec y, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = mult_[k] * y[k];
    }
    double nu() const noexcept { return nu_; }

private:
    static DriftConstants constants_for(double nu) {
        DriftConstants c;
        c.L_A = 2.0 * nu;
        c.beta = 2.0;
        c.C_growth = nu * nu;
        return c;
    }
    double nu_;
    std::vector<double> mult_;
};

/**
 * Viscous Burgers A(y) = νΔy − y∂_x y on sine-Dirichlet modes.
 *
 * The product y·∂_x y is formed on 2n midpoint nodes and projected back. With 2n
 * nodes the integrand of every retained coefficient has wavenumber < 4nπ/L, so the
 * quadrature is exact and the truncation acts as zero-padding dealiasing.
 *
 * Weights: ρ = 0, η(x₂) = ‖x₂‖_H‖x₂‖_V/(2ν). The convection difference against
 * w = x₁ − x₂ reduces to −∫∂_x x₂ w² = 2∫x₂ w ∂_x w, bounded by 2ν‖w‖²_V + ‖x₂‖²_∞‖w‖²_H/(2ν),
 * and ‖x₂‖²_∞ ≤ ‖x₂‖_H‖x₂‖_V in one dimension.
 */
class BurgersDrift final : public DriftOperator {
public:
    BurgersDrift(SpacePtr space, double nu)
        : DriftOperator(space, constants_for(nu, space->length())), nu_(nu) {
        if (!(nu > 0.0)) throw ArgumentError("burgers: nu must be positive");
        if (space->kind() != BasisKind::sine_dirichlet)
            throw ArgumentError("burgers: needs a sine-Dirichlet space");
        if (space->n_modes() < 4) throw ArgumentError("burgers: need at least 4 modes");
        table_ = space->nodal_table(2 * space->n_modes());
        mult_.resize(space->n_modes());
        for (std::size_t k = 0; k < mult_.size(); ++k) {
            const double kk = space->wavenumber(k);
            mult_[k] = -nu * kk * kk;
        }
    }
    std::string name() const override { return "burgers"; }

    void eval(double, ConstVec y, MutVec out) const override {
        thread_local std::vector<double> u, ux, conv;
        u.resize(table_.n_nodes);
        ux.resize(table_.n_nodes);
        conv.resize(y.size());
        convection_into(y, u, ux, conv);
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = mult_[k] * y[k] - conv[k];
    }

    /// Coefficients of P_n(y ∂_x y).
    std::vector<double> convection(ConstVec y) const {
        space().require_dim(y, "burgers convection");
        std::vector<double> u(table_.n_nodes), ux(table_.n_nodes), out(y.size());
        convection_into(y, u, ux, out);
        return out;
    }

    double eta(ConstVec y) const override {
        return space().norm_h(y) * space().norm_v(y) / (2.0 * nu_);
    }
    bool superlinear() const override { return true; }
    double nu() const noexcept { return nu_; }

private:
    static DriftConstants constants_for(double nu, double length) {
        DriftConstants c;
        c.L_A = 2.0 * nu;
        c.beta = 2.0;
        c.alpha = 2.0;
        c.zeta = 1.0;
        c.C_weight = 1.0 / (2.0 * nu);
        c.C_growth = std::max(2.0 * nu * nu, length / (2.0 * std::numbers::pi));
        return c;
    }

    void convection_into(ConstVec y, std::vector<double>& u, std::vector<double>& ux, MutVec out) const {
        table_.values(y, u);
        table_.gradients(y, ux);
        for (std::size_t j = 0; j < u.size(); ++j) {
            u[j] *= ux[j];
            if (!std::isfinite(u[j])) throw NumericalError("burgers: non-finite nodal product");
        }
        table_.project(u, out);
    }

    double nu_;
    NodalTable table_;
    std::vector<double> mult_;
};

/**
 * p-Laplacian A(y) = ∂_x(|∂_x y|^{p−2} ∂_x y) on sine-Dirichlet modes with
 * V = W^{1,p}_0 (gradient L^p seminorm) and H = L².
 *
 * Monotone, so ρ = η = f = 0; 2⟨A(y), y⟩ = −2‖y‖^p_V gives L_A = 2. The dual norm is
 * reported as ‖y‖_V^{p−1}, the exact V*-norm of the continuous operator, which bounds the
 * Galerkin one from above.
 */
class PLaplaceDrift final : public DriftOperator {
public:
    PLaplaceDrift(SpacePtr space, double p) : DriftOperator(space, constants_for(p)), p_(p) {
        if (!(p >= 2.0)) throw ArgumentError("p-Laplace: p must be at least 2");
        if (space->kind() == BasisKind::scalar || space->vnorm_kind() != VNormKind::gradient_lp)
            throw ArgumentError("p-Laplace: needs a gradient-L^p space");
    }
    std::string name() const override { return "p-laplace"; }

    void eval(double, ConstVec y, MutVec out) const override {
        const NodalTable& t = *space().table();
        thread_local std::vector<double> g;
        g.resize(t.n_nodes);
        flux(y, g);
        t.project_gradient(g, out);
        for (double& v : out) v = -v;
    }

    /// −∫|∂_x y|^{p−2} ∂_x y ∂_x z dx by quadrature.
    double pairing(double, ConstVec y, ConstVec z) const override {
        const NodalTable& t = *space().table();
        std::vector<double> g(t.n_nodes), zx(t.n_nodes);
        flux(y, g);
        t.gradients(z, zx);
        double acc = 0.0;
        for (std::size_t j = 0; j < t.n_nodes; ++j) acc += t.weights[j] * g[j] * zx[j];
        return -acc;
    }

    double dual_norm(double, ConstVec y) const override { return std::pow(space().norm_v(y), p_ - 1.0); }
    bool superlinear() const override { return p_ > 2.0; }
    double p() const noexcept { return p_; }

private:
    static DriftConstants constants_for(double p) {
        DriftConstants c;
        c.L_A = 2.0;
        c.beta = p;
        c.C_growth = 1.0;
        return c;
    }

    void flux(ConstVec y, std::vector<double>& g) const {
        space().table()->gradients(y, g);
        for (double& v : g) {
            v = std::pow(std::abs(v), p_ - 2.0) * v;
            if (!std::isfinite(v)) throw NumericalError("p-Laplace: non-finite flux at a node");
        }
    }

    double p_;
};

/**
 * Porous medium A(y) = Δ(|y|^{r−1} y) on sine-Dirichlet modes with H = H^{−1} and
 * V = L^{r+1}. Coefficient k is −κ_k² ∫Φ(y)φ_k with Φ(u) = |u|^{r−1}u, so that
 * (A(y), z)_{H^{−1}} = −∫Φ(y) z.
 */
class PorousMediaDrift final : public DriftOperator {
public:
    PorousMediaDrift(SpacePtr space, double r) : DriftOperator(space, constants_for(r)), r_(r) {
        if (!(r >= 1.0)) throw ArgumentError("porous media: r must be at least 1");
        if (space->kind() != BasisKind::sine_dirichlet || space->vnorm_kind() != VNormKind::value_lp)
            throw ArgumentError("porous media: needs a sine space with an L^{r+1} V-norm");
        mult_.resize(space->n_modes());
        for (std::size_t k = 0; k < mult_.size(); ++k) {
            const double kk = space->wavenumber(k);
            mult_[k] = -kk * kk;
        }
    }
    std::string name() const override { return "porous-media"; }

    void eval(double, ConstVec y, MutVec out) const override {
        const NodalTable& t = *space().table();
        thread_local std::vector<double> g;
        g.resize(t.n_nodes);
        nonlinearity(y, g);
        t.project(g, out);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] *= mult_[k];
    }

    double pairing(double, ConstVec y, ConstVec z) const override {
        const NodalTable& t = *space().table();
        std::vector<double> g(t.n_nodes), zv(t.n_nodes);
        nonlinearity(y, g);
        t.values(z, zv);
        double acc = 0.0;
        for (std::size_t j = 0; j < t.n_nodes; ++j) acc += t.weights[j] * g[j] * zv[j];
        return -acc;
    }

    double dual_norm(double, ConstVec y) const override { return std::pow(space().norm_v(y), r_); }
    bool superlinear() const override { return r_ > 1.0; }
    double r() const noexcept { return r_; }

private:
    static DriftConstants constants_for(double r) {
        DriftConstants c;
        c.L_A = 2.0;
        c.beta = r + 1.0;
        c.C_growth = 1.0;
        return c;
    }

    void nonlinearity(ConstVec y, std::vector<double>& g) const {
        space().table()->values(y, g);
        for (double& v : g) {
            v = std::pow(std::abs(v), r_ - 1.0) * v;
            if (!std::isfinite(v)) throw NumericalError("porous media: non-finite nodal value");
        }
    }

    double r_;
    std::vector<double> mult_;
};

// --- noises ---------------------------------------------------------------------

/// σ_i(y) = b_i ψ_i with ψ_i the (i mod n)-th coordinate vector.
class AdditiveNoise final : public NoiseOperator {
public:
    AdditiveNoise(SpacePtr space, std::vector<double> b)
        : NoiseOperator(space, b.size(), constants_for(*space, b)), b_(std::move(b)) {}
    std::string name() const override { return "additive"; }
    void sigma(ConstVec, std::size_t i, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
        out[i % out.size()] = b_[i];
    }
    void d_sigma(ConstVec, std::size_t, ConstVec, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    void d2_sigma(ConstVec, std::size_t, ConstVec, ConstVec, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    bool additive() const override { return true; }

private:
    static NoiseConstants constants_for(const GalerkinSpace& s, const std::vector<double>& b) {
        if (b.empty()) throw ArgumentError("additive noise: need at least one coefficient");
        NoiseConstants c;
        for (std::size_t i = 0; i < b.size(); ++i) c.K += b[i] * b[i] * s.h_weights()[i % s.n_modes()];
        return c;
    }
    std::vector<double> b_;
};

/// σ_i(y) = a_i y, so T̂r_m(y) = (Σ_{i<m} a_i²) y.
class LinearNoise final : public NoiseOperator {
public:
    LinearNoise(SpacePtr space, std::vector<double> a)
        : NoiseOperator(std::move(space), a.size(), constants_for(a)), a_(std::move(a)) {}
    std::string name() const override { return "linear"; }
    void sigma(ConstVec y, std::size_t i, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = a_[i] * y[k];
    }
    void d_sigma(ConstVec, std::size_t i, ConstVec v, MutVec out) const override {
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = a_[i] * v[k];
    }
    void d2_sigma(ConstVec, std::size_t, ConstVec, ConstVec, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }
    double kappa(ConstVec) const override { return 0.5 * sum_sq_; }
    double varkappa(ConstVec) const override { return 0.5 * sum_sq_; }

private:
    static NoiseConstants constants_for(const std::vector<double>& a) {
        if (a.empty()) throw ArgumentError("linear noise: need at least one coefficient");
        double s = 0.0;
        for (double v : a) s += v * v;
        return {.K = s, .L = s * s, .C_kappa = s, .zeta = 0.0};
    }
    std::vector<double> a_;
    double sum_sq_ = constants().K;
};

/**
 * Bounded nonlinear noise acting modewise: (σ_i(y))_k = b_i c_k tanh(y_k), c_k = 1/(1+k).
 *
 * Since |tanh'| ≤ 1 the Lipschitz weight is Σb_i² max c_k². The correction coefficient is
 * (T̂r(y))_k = Σ b_i² c_k² sech²(y_k) tanh(y_k), whose modulus is at most 2/(3√3)·Σb_i² c_k².
 */
class TanhNoise final : public NoiseOperator {
public:
    TanhNoise(SpacePtr space, std::vector<double> b)
        : NoiseOperator(space, b.size(), constants_for(*space, b)), b_(std::move(b)) {}
    std::string name() const override { return "tanh"; }

    static double profile(std::size_t k) { return 1.0 / (1.0 + static_cast<double>(k)); }

    void sigma(ConstVec y, std::size_t i, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = b_[i] * profile(k) * std::tanh(y[k]);
    }
    void d_sigma(ConstVec y, std::size_t i, ConstVec v, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double s = 1.0 / std::cosh(y[k]);
            out[k] = b_[i] * profile(k) * s * s * v[k];
        }
    }
    void d2_sigma(ConstVec y, std::size_t i, ConstVec v, ConstVec w, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double s = 1.0 / std::cosh(y[k]);
            out[k] = -2.0 * b_[i] * profile(k) * s * s * std::tanh(y[k]) * v[k] * w[k];
        }
    }
    double kappa(ConstVec) const override { return half_lip_; }
    double varkappa(ConstVec) const override { return half_lip_; }

private:
    static NoiseConstants constants_for(const GalerkinSpace& s, const std::vector<double>& b) {
        if (b.empty()) throw ArgumentError("tanh noise: need at least one coefficient");
        double bb = 0.0, hc2 = 0.0, hc4 = 0.0;
        for (double v : b) bb += v * v;
        for (std::size_t k = 0; k < s.n_modes(); ++k) {
            const double c2 = profile(k) * profile(k);
            hc2 += s.h_weights()[k] * c2;
            hc4 += s.h_weights()[k] * c2 * c2;
        }
        // max_k c_k² = 1 for the profile above.
        return {.K = bb * hc2, .L = bb * bb * (4.0 / 27.0) * hc4, .C_kappa = bb, .zeta = 0.0};
    }
    std::vector<double> b_;
    double half_lip_ = 0.5 * constants().C_kappa;
};

// --- model specs ----------------------------------------------------------------

struct NoiseSpec {
    enum class Kind { none, additive, linear, tanh };
    Kind kind = Kind::none;
    std::vector<double> coefficients;
};

inline std::string to_string(NoiseSpec::Kind k) {
    switch (k) {
        case NoiseSpec::Kind::none: return "none";
        case NoiseSpec::Kind::additive: return "additive";
        case NoiseSpec::Kind::linear: return "linear";
        case NoiseSpec::Kind::tanh: return "tanh";
    }
    return "unknown";
}

inline NoiseSpec::Kind noise_kind_from_string(const std::string& s) {
    if (s == "none" || s == "zero") return NoiseSpec::Kind::none;
    if (s == "additive") return NoiseSpec::Kind::additive;
    if (s == "linear") return NoiseSpec::Kind::linear;
    if (s == "tanh") return NoiseSpec::Kind::tanh;
    throw ArgumentError("unknown noise kind '" + s + "'");
}

inline std::shared_ptr<const NoiseOperator> make_noise(SpacePtr space, const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseSpec::Kind::none:
            return std::make_shared<ZeroNoise>(space, std::max<std::size_t>(1, spec.coefficients.size()));
        case NoiseSpec::Kind::additive: return std::make_shared<AdditiveNoise>(space, spec.coefficients);
        case NoiseSpec::Kind::linear: return std::make_shared<LinearNoise>(space, spec.coefficients);
        case NoiseSpec::Kind::tanh: return std::make_shared<TanhNoise>(space, spec.coefficients);
    }
    throw ArgumentError("make_noise: unknown kind");
}

/// Closed-form scalar solutions as functions of (t, β₁(t)).
struct AnalyticOracle {
    std::function<double(double, double)> ito;
    std::function<double(double, double)> stratonovich;
};

struct ModelSpec {
    std::string name;
    SpacePtr space;
    std::shared_ptr<const DriftOperator> drift;
    std::shared_ptr<const NoiseOperator> noise;
    double beta = 2.0;
    CoefState initial_state;
    std::optional<AnalyticOracle> analytic;

    void validate() const {
        if (!space || !drift || !noise) throw ArgumentError("ModelSpec: incomplete model");
        if (std::abs(drift->constants().beta - space->v_exponent()) > 1e-12)
            throw ArgumentError("ModelSpec: drift beta differs from the space's v_exponent");
        space->require_dim(initial_state.coeffs, "ModelSpec initial state");
        if (noise->dim() != space->n_modes()) throw DimensionError("ModelSpec: noise dimension mismatch");
    }
};

namespace detail {

inline CoefState initial_state_for(const GalerkinSpace& s, const std::vector<double>& given) {
    CoefState y;
    y.coeffs.assign(s.n_modes(), 0.0);
    if (given.empty()) {
        y.coeffs[0] = 1.0;
    } else {
        if (given.size() > s.n_modes()) throw DimensionError("initial state has more entries than modes");
        std::copy(given.begin(), given.end(), y.coeffs.begin());
    }
    return y;
}

inline ModelSpec finish(std::string name, SpacePtr space, std::shared_ptr<const DriftOperator> drift,
                        const NoiseSpec& noise, const std::vector<double>& y0) {
    ModelSpec m;
    m.name = std::move(name);
    m.space = space;
    m.drift = std::move(drift);
    m.noise = make_noise(space, noise);
    m.beta = space->v_exponent();
    m.initial_state = initial_state_for(*space, y0);
    m.validate();
    return m;
}

}  // namespace detail

/// Scalar dY = μY dt + aY dβ with closed-form Itô and Stratonovich solutions.
inline ModelSpec make_gbm(double mu, double a, double y0 = 1.0) {
    if (!std::isfinite(mu) || !std::isfinite(a) || !std::isfinite(y0))
        throw ArgumentError("gbm: parameters must be finite");
    auto space = make_scalar_space();
    ModelSpec m = detail::finish("gbm", space, std::make_shared<LinearScalarDrift>(space, mu),
                                 {NoiseSpec::Kind::linear, {a}}, {y0});
    m.analytic = AnalyticOracle{
        [=](double t, double b) { return y0 * std::exp((mu - 0.5 * a * a) * t + a * b); },
        [=](double t, double b) { return y0 * std::exp(mu * t + a * b); }};
    return m;
}

inline ModelSpec make_heat(std::size_t n_modes, double length, double nu, const NoiseSpec& noise,
                           const std::vector<double>& y0 = {}) {
    auto space = make_sine_space(n_modes, length);
    return detail::finish("heat", space, std::make_shared<HeatDrift>(space, nu), noise, y0);
}

inline ModelSpec make_burgers(std::size_t n_modes, double length, double nu, const NoiseSpec& noise,
                              const std::vector<double>& y0 = {}) {
    auto space = make_sine_space(n_modes, length);
    return detail::finish("burgers", space, std::make_shared<BurgersDrift>(space, nu), noise, y0);
}

inline ModelSpec make_plaplace(std::size_t n_modes, double length, double p, const NoiseSpec& noise,
                               const std::vector<double>& y0 = {}) {
    if (!(p > 2.0)) throw ArgumentError("p-Laplace: p must exceed 2");
    auto space = make_sine_space(n_modes, length, SineHilbert::l2, VNormKind::gradient_lp, p);
    return detail::finish("p-laplace", space, std::make_shared<PLaplaceDrift>(space, p), noise, y0);
}

inline ModelSpec make_porous_media(std::size_t n_modes, double length, double r, const NoiseSpec& noise,
                                   const std::vector<double>& y0 = {}) {
    if (!(r > 1.0)) throw ArgumentError("porous media: r must exceed 1");
    auto space = make_sine_space(n_modes, length, SineHilbert::h_minus1, VNormKind::value_lp, r + 1.0);
    return detail::finish("porous-media", space, std::make_shared<PorousMediaDrift>(space, r), noise, y0);
}

}  // namespace wz

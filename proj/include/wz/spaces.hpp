/**
 * @file spaces.hpp
 * @brief Finite-dimensional Gelfand triple V ⊂ H ⊂ V* on a spectral basis.
 *
 * A state is a coefficient vector in a basis {φ_k} that is orthogonal in both H
 * and V. The H, V and V* norms are weighted sums over coefficients. For V-norms
 * that are not quadratic (W^{1,p} seminorms, L^q norms) the coefficients are
 * mapped to a uniform midpoint grid and the integral is evaluated by quadrature.
 *
 * Coefficients in a sine space are taken against the L²-orthonormal functions
 * φ_k(x) = sqrt(2/L) sin(kπx/L), k = 1..n. The H weights select which Hilbert
 * norm these coordinates carry: unit weights give L², weights (kπ/L)^{-2} give H^{-1}.
 */
#pragma once

#include "wz/error.hpp"

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace wz {

enum class BasisKind { sine_dirichlet, fourier_periodic, scalar };

/// How ‖·‖_V is evaluated.
enum class VNormKind {
    weighted,     ///< (Σ v_k x_k²)^{1/2}
    gradient_lp,  ///< (∫ |∂_x y|^q dx)^{1/q}
    value_lp,     ///< (∫ |y|^q dx)^{1/q}
};

inline std::string to_string(BasisKind kind) {
    switch (kind) {
        case BasisKind::sine_dirichlet: return "sine-Dirichlet";
        case BasisKind::fourier_periodic: return "Fourier-periodic";
        case BasisKind::scalar: return "scalar";
    }
    return "unknown";
}

/// Coefficients of a Galerkin state at a given time.
struct CoefState {
    std::vector<double> coeffs;
    double time = 0.0;

    std::size_t size() const noexcept { return coeffs.size(); }
};

/// Basis functions and derivatives tabulated on a quadrature grid (row-major, nodes × modes).
struct NodalTable {
    std::size_t n_modes = 0;
    std::size_t n_nodes = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> phi;
    std::vector<double> dphi;

    /// y(x_j) = Σ_k c_k φ_k(x_j)
    void values(std::span<const double> coeffs, std::span<double> out) const {
        synthesize(phi, coeffs, out);
    }
    /// ∂_x y(x_j)
    void gradients(std::span<const double> coeffs, std::span<double> out) const {
        synthesize(dphi, coeffs, out);
    }
    /// out_k = Σ_j w_j g(x_j) φ_k(x_j)
    void project(std::span<const double> nodal, std::span<double> out) const {
        analyze(phi, nodal, out);
    }
    /// out_k = Σ_j w_j g(x_j) φ_k'(x_j)
    void project_gradient(std::span<const double> nodal, std::span<double> out) const {
        analyze(dphi, nodal, out);
    }

private:
    void synthesize(const std::vector<double>& table, std::span<const double> coeffs,
                    std::span<double> out) const {
        for (std::size_t j = 0; j < n_nodes; ++j) {
            const double* row = table.data() + j * n_modes;
            double acc = 0.0;
            for (std::size_t k = 0; k < n_modes; ++k) acc += row[k] * coeffs[k];
            out[j] = acc;
        }
    }
    void analyze(const std::vector<double>& table, std::span<const double> nodal,
                 std::span<double> out) const {
        for (std::size_t k = 0; k < n_modes; ++k) out[k] = 0.0;
        for (std::size_t j = 0; j < n_nodes; ++j) {
            const double wv = weights[j] * nodal[j];
            const double* row = table.data() + j * n_modes;
            for (std::size_t k = 0; k < n_modes; ++k) out[k] += wv * row[k];
        }
    }
};

/**
 * GalerkinSpace: discretized Gelfand triple.
 *
 * Invariants checked at construction: positive H weights, V weights bounded below
 * by a positive multiple of the H weights, and V* weights equal to h²/v.
 * Immutable after construction.
 */
class GalerkinSpace {
public:
    struct Options {
        BasisKind kind = BasisKind::sine_dirichlet;
        std::size_t n_modes = 1;
        double length = 1.0;
        std::vector<double> h_weights;
        std::vector<double> v_weights;
        VNormKind vnorm = VNormKind::weighted;
        double v_exponent = 2.0;
        std::size_t quadrature_nodes = 0;  ///< 0 selects 4·n_modes
    };

    explicit GalerkinSpace(Options opt) : opt_(std::move(opt)) {
        const std::size_t n = opt_.n_modes;
        if (n == 0) throw DimensionError("GalerkinSpace: n_modes must be positive");
        if (!(opt_.length > 0.0)) throw ArgumentError("GalerkinSpace: domain length must be positive");
        if (!(opt_.v_exponent > 1.0)) throw ArgumentError("GalerkinSpace: v_exponent must exceed 1");
        if (opt_.h_weights.size() != n || opt_.v_weights.size() != n)
            throw DimensionError("GalerkinSpace: weight tables must have n_modes entries");
        vstar_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double h = opt_.h_weights[k];
            const double v = opt_.v_weights[k];
            if (!(h > 0.0) || !(v > 0.0) || !std::isfinite(h) || !std::isfinite(v))
                throw ArgumentError("GalerkinSpace: weights must be positive and finite");
            vstar_[k] = h * h / v;
        }
        if (opt_.vnorm != VNormKind::weighted && opt_.kind == BasisKind::scalar)
            throw ArgumentError("GalerkinSpace: scalar space only supports weighted V-norm");
        if (opt_.kind != BasisKind::scalar) {
            const std::size_t m = opt_.quadrature_nodes ? opt_.quadrature_nodes : 4 * n;
            table_ = std::make_shared<NodalTable>(nodal_table(m));
        }
    }

    BasisKind kind() const noexcept { return opt_.kind; }
    VNormKind vnorm_kind() const noexcept { return opt_.vnorm; }
    std::size_t n_modes() const noexcept { return opt_.n_modes; }
    double length() const noexcept { return opt_.length; }
    double v_exponent() const noexcept { return opt_.v_exponent; }
    std::span<const double> h_weights() const noexcept { return opt_.h_weights; }
    std::span<const double> v_weights() const noexcept { return opt_.v_weights; }
    std::span<const double> vstar_weights() const noexcept { return vstar_; }
    bool quadratic_v() const noexcept { return opt_.vnorm == VNormKind::weighted; }

    /// Default quadrature table (4·n_modes midpoint nodes); null for the scalar space.
    const NodalTable* table() const noexcept { return table_.get(); }

    /// Wavenumber κ_k such that φ_k' has amplitude κ_k (zero-based k).
    double wavenumber(std::size_t k) const {
        switch (opt_.kind) {
            case BasisKind::sine_dirichlet:
                return static_cast<double>(k + 1) * std::numbers::pi / opt_.length;
            case BasisKind::fourier_periodic:
                return 2.0 * std::numbers::pi * static_cast<double>((k + 1) / 2) / opt_.length;
            case BasisKind::scalar: return 0.0;
        }
        return 0.0;
    }

    /// Basis value and derivative at x for zero-based mode k.
    double basis(std::size_t k, double x) const {
        const double L = opt_.length;
        switch (opt_.kind) {
            case BasisKind::sine_dirichlet:
                return std::sqrt(2.0 / L) * std::sin(wavenumber(k) * x);
            case BasisKind::fourier_periodic:
                if (k == 0) return 1.0 / std::sqrt(L);
                return std::sqrt(2.0 / L) *
                       ((k % 2 == 1) ? std::cos(wavenumber(k) * x) : std::sin(wavenumber(k) * x));
            case BasisKind::scalar: return 1.0;
        }
        return 0.0;
    }

    double basis_derivative(std::size_t k, double x) const {
        const double L = opt_.length;
        const double kk = wavenumber(k);
        switch (opt_.kind) {
            case BasisKind::sine_dirichlet: return std::sqrt(2.0 / L) * kk * std::cos(kk * x);
            case BasisKind::fourier_periodic:
                if (k == 0) return 0.0;
                return std::sqrt(2.0 / L) * kk *
                       ((k % 2 == 1) ? -std::sin(kk * x) : std::cos(kk * x));
            case BasisKind::scalar: return 0.0;
        }
        return 0.0;
    }

    /// Midpoint rule with m uniform nodes on [0, L]. Exact for trigonometric products of
    /// total wavenumber below 2m·π/L, which covers every Galerkin product used here.
    NodalTable nodal_table(std::size_t m) const {
        if (opt_.kind == BasisKind::scalar)
            throw ArgumentError("GalerkinSpace: scalar space has no spatial nodes");
        if (m == 0) throw ArgumentError("GalerkinSpace: quadrature needs at least one node");
        NodalTable t;
        t.n_modes = opt_.n_modes;
        t.n_nodes = m;
        t.nodes.resize(m);
        t.weights.assign(m, opt_.length / static_cast<double>(m));
        t.phi.resize(m * opt_.n_modes);
        t.dphi.resize(m * opt_.n_modes);
        for (std::size_t j = 0; j < m; ++j) {
            const double x = (static_cast<double>(j) + 0.5) * opt_.length / static_cast<double>(m);
            t.nodes[j] = x;
            for (std::size_t k = 0; k < opt_.n_modes; ++k) {
                t.phi[j * opt_.n_modes + k] = basis(k, x);
                t.dphi[j * opt_.n_modes + k] = basis_derivative(k, x);
            }
        }
        return t;
    }

    void require_dim(std::span<const double> x, const char* who) const {
        if (x.size() != opt_.n_modes)
            throw DimensionError(std::string(who) + ": expected " + std::to_string(opt_.n_modes) +
                                 " coefficients, got " + std::to_string(x.size()));
    }

    double inner_h(std::span<const double> x, std::span<const double> y) const {
        require_dim(x, "inner_h");
        require_dim(y, "inner_h");
        double acc = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) acc += opt_.h_weights[k] * x[k] * y[k];
        return acc;
    }

    /// Duality bracket ⟨x, y⟩ between V* and V. Coincides with (x, y)_H on H × V.
    double pairing(std::span<const double> x, std::span<const double> y) const {
        return inner_h(x, y);
    }

    double norm_h(std::span<const double> x) const { return std::sqrt(inner_h(x, x)); }

    double norm_v(std::span<const double> x) const {
        require_dim(x, "norm_v");
        if (opt_.vnorm == VNormKind::weighted) {
            double acc = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) acc += opt_.v_weights[k] * x[k] * x[k];
            return std::sqrt(acc);
        }
        thread_local std::vector<double> nodal;
        nodal.resize(table_->n_nodes);
        if (opt_.vnorm == VNormKind::gradient_lp)
            table_->gradients(x, nodal);
        else
            table_->values(x, nodal);
        return lp_norm(nodal, table_->weights, opt_.v_exponent);
    }

    /// Dual norm of the weighted quadratic V-norm: (Σ h_k²/v_k x_k²)^{1/2}.
    double norm_vstar(std::span<const double> x) const {
        require_dim(x, "norm_vstar");
        double acc = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) acc += vstar_[k] * x[k] * x[k];
        return std::sqrt(acc);
    }

    static double lp_norm(std::span<const double> nodal, std::span<const double> w, double q) {
        double scale = 0.0;
        for (double v : nodal) scale = std::max(scale, std::abs(v));
        if (scale == 0.0) return 0.0;
        double acc = 0.0;
        for (std::size_t j = 0; j < nodal.size(); ++j) acc += w[j] * std::pow(std::abs(nodal[j]) / scale, q);
        const double r = scale * std::pow(acc, 1.0 / q);
        if (!std::isfinite(r)) throw NumericalError("lp_norm: non-finite quadrature result");
        return r;
    }

private:
    Options opt_;
    std::vector<double> vstar_;
    std::shared_ptr<const NodalTable> table_;
};

using SpacePtr = std::shared_ptr<const GalerkinSpace>;

// --- factories ------------------------------------------------------------------

/// Hilbert norm carried by sine coefficients.
enum class SineHilbert { l2, h_minus1 };

/// Sine-Dirichlet space on (0, L). With `v = weighted` the V-norm is ‖∂_x y‖_{L²}.
inline SpacePtr make_sine_space(std::size_t n, double length, SineHilbert h = SineHilbert::l2,
                                VNormKind vnorm = VNormKind::weighted, double v_exponent = 2.0,
                                std::size_t quadrature_nodes = 0) {
    GalerkinSpace::Options o;
    o.kind = BasisKind::sine_dirichlet;
    o.n_modes = n;
    o.length = length;
    o.vnorm = vnorm;
    o.v_exponent = v_exponent;
    o.quadrature_nodes = quadrature_nodes;
    o.h_weights.resize(n);
    o.v_weights.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = static_cast<double>(k + 1) * std::numbers::pi / length;
        o.h_weights[k] = (h == SineHilbert::l2) ? 1.0 : 1.0 / (kk * kk);
        // For non-weighted V-norms the table holds the quadratic surrogate used for V*.
        if (vnorm == VNormKind::value_lp)
            o.v_weights[k] = 1.0;
        else
            o.v_weights[k] = kk * kk;
    }
    return std::make_shared<const GalerkinSpace>(std::move(o));
}

/// Periodic Fourier space on [0, L): modes 1, cos, sin, cos, ...; H = L², V = H¹ (full norm).
inline SpacePtr make_fourier_space(std::size_t n, double length) {
    GalerkinSpace::Options o;
    o.kind = BasisKind::fourier_periodic;
    o.n_modes = n;
    o.length = length;
    o.h_weights.assign(n, 1.0);
    o.v_weights.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double kk = 2.0 * std::numbers::pi * static_cast<double>((k + 1) / 2) / length;
        o.v_weights[k] = 1.0 + kk * kk;
    }
    return std::make_shared<const GalerkinSpace>(std::move(o));
}

/// One-dimensional space with all weights one; hosts scalar SDE models.
inline SpacePtr make_scalar_space() {
    GalerkinSpace::Options o;
    o.kind = BasisKind::scalar;
    o.n_modes = 1;
    o.h_weights = {1.0};
    o.v_weights = {1.0};
    return std::make_shared<const GalerkinSpace>(std::move(o));
}

// --- projections ----------------------------------------------------------------

/// Galerkin projection P_n: keep the first n coefficients.
inline CoefState project_pn(const CoefState& x, std::size_t n) {
    if (n == 0 || n > x.size())
        throw DimensionError("project_pn: n must lie in [1, " + std::to_string(x.size()) + "]");
    CoefState out;
    out.coeffs.assign(x.coeffs.begin(), x.coeffs.begin() + static_cast<std::ptrdiff_t>(n));
    out.time = x.time;
    return out;
}

/// Noise projection Π_m onto span{e_1, ..., e_m}.
inline std::vector<double> project_pim(std::span<const double> u, std::size_t m) {
    if (m == 0 || m > u.size())
        throw DimensionError("project_pim: m must lie in [1, " + std::to_string(u.size()) + "]");
    return {u.begin(), u.begin() + static_cast<std::ptrdiff_t>(m)};
}

/// Norm evaluators taking CoefState, checking dimensions against the space.
inline double norm_h(const GalerkinSpace& s, const CoefState& x) { return s.norm_h(x.coeffs); }
inline double norm_v(const GalerkinSpace& s, const CoefState& x) { return s.norm_v(x.coeffs); }
inline double norm_vstar(const GalerkinSpace& s, const CoefState& x) { return s.norm_vstar(x.coeffs); }

}  // namespace wz

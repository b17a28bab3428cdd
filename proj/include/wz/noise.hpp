/**
 * @file noise.hpp
 * @brief Dyadically refinable Brownian paths and the piecewise-constant driver Ẇ^m.
 */
#pragma once

#include "wz/error.hpp"
#include "wz/rng.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace wz {

/**
 * Finitely many independent scalar Brownian motions β_i sampled on the dyadic grid
 * kT/2^L, k = 0..2^L.
 *
 * Values are built by Lévy midpoint refinement: β_i(T) first, then each level fills
 * the midpoints with Brownian-bridge draws. The normal used for grid point j of level
 * ℓ is addressed by (seed, mode, ℓ, j), so a path sampled with a larger max_level
 * agrees with a coarser one on every shared grid point.
 */
class BrownianPath {
public:
    using ReadObserver = std::function<void(std::size_t mode, std::size_t fine_index)>;

    static BrownianPath sample(std::uint64_t seed, double horizon, int max_level,
                               std::size_t n_modes) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ArgumentError("sample_path: horizon T must be positive");
        if (max_level < 1 || max_level > 30)
            throw ArgumentError("sample_path: max_level must lie in [1, 30]");
        if (n_modes == 0) throw ArgumentError("sample_path: need at least one noise mode");
        BrownianPath p;
        p.horizon_ = horizon;
        p.max_level_ = max_level;
        p.seed_ = seed;
        const std::size_t n = std::size_t{1} << max_level;
        p.values_.assign(n_modes, std::vector<double>(n + 1, 0.0));
        for (std::size_t i = 0; i < n_modes; ++i) {
            auto& v = p.values_[i];
            const auto mode = static_cast<std::uint32_t>(i);
            v[n] = std::sqrt(horizon) * rng::normal(seed, mode, 0u, 0u);
            for (int level = 1; level <= max_level; ++level) {
                const std::size_t stride = n >> level;  // fine-index spacing of this level
                const double sd = std::sqrt(horizon / std::ldexp(1.0, level + 1));
                const std::size_t count = std::size_t{1} << level;
                for (std::size_t j = 1; j < count; j += 2) {
                    const std::size_t at = j * stride;
                    const double mid = 0.5 * (v[at - stride] + v[at + stride]);
                    v[at] = mid + sd * rng::normal(seed, mode, static_cast<std::uint32_t>(level), j);
                }
            }
        }
        return p;
    }

    /// Path from explicit grid values; each mode needs 2^L + 1 entries starting at 0.
    static BrownianPath from_values(double horizon, std::vector<std::vector<double>> values) {
        if (!(horizon > 0.0)) throw ArgumentError("BrownianPath: horizon T must be positive");
        if (values.empty()) throw ArgumentError("BrownianPath: need at least one noise mode");
        const std::size_t len = values.front().size();
        int level = 0;
        while ((std::size_t{1} << level) + 1 < len) ++level;
        if (level < 1 || (std::size_t{1} << level) + 1 != len)
            throw DimensionError("BrownianPath: grid length must be 2^L + 1 with L >= 1");
        for (const auto& v : values) {
            if (v.size() != len) throw DimensionError("BrownianPath: ragged mode tables");
            if (v.front() != 0.0) throw ArgumentError("BrownianPath: paths must start at 0");
        }
        BrownianPath p;
        p.horizon_ = horizon;
        p.max_level_ = level;
        p.values_ = std::move(values);
        return p;
    }

    double horizon() const noexcept { return horizon_; }
    int max_level() const noexcept { return max_level_; }
    std::size_t n_modes() const noexcept { return values_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t fine_steps() const noexcept { return std::size_t{1} << max_level_; }

    /// β_mode at fine grid index k.
    double value(std::size_t mode, std::size_t fine_index) const {
        if (observer_) observer_(mode, fine_index);
        return values_[mode][fine_index];
    }

    /// β_mode(kT/2^level) with the extension β = 0 for k ≤ 0 and β = β(T) for k ≥ 2^level.
    double at_level(std::size_t mode, int level, std::int64_t k) const {
        check_level(level);
        if (mode >= values_.size()) throw IndexError("BrownianPath: noise mode out of range");
        if (k <= 0) return 0.0;
        const auto count = std::int64_t{1} << level;
        if (k >= count) return value(mode, fine_steps());
        return value(mode, static_cast<std::size_t>(k) << (max_level_ - level));
    }

    /// β_mode((k+1)T/2^level) − β_mode(kT/2^level).
    double increment(std::size_t mode, int level, std::int64_t k) const {
        return at_level(mode, level, k + 1) - at_level(mode, level, k);
    }

    /// Same ω restricted to the level-`level` grid.
    BrownianPath coarsened(int level) const {
        check_level(level);
        std::vector<std::vector<double>> v(values_.size());
        const std::size_t stride = std::size_t{1} << (max_level_ - level);
        for (std::size_t i = 0; i < values_.size(); ++i) {
            v[i].resize((std::size_t{1} << level) + 1);
            for (std::size_t k = 0; k < v[i].size(); ++k) v[i][k] = values_[i][k * stride];
        }
        BrownianPath p = from_values(horizon_, std::move(v));
        p.seed_ = seed_;
        return p;
    }

    /// Raw table access for tests that perturb a path.
    std::vector<std::vector<double>>& mutable_values() noexcept { return values_; }
    const std::vector<std::vector<double>>& values() const noexcept { return values_; }

    /// Test instrumentation: every `value` read is reported. Not thread-safe.
    void set_read_observer(ReadObserver obs) { observer_ = std::move(obs); }

    /// CSV dump at the finest level: mode,k,t_k,beta_value
    void write_csv(std::ostream& os) const {
        os << "mode,k,t_k,beta_value\n";
        os.precision(17);
        const double h = horizon_ / static_cast<double>(fine_steps());
        for (std::size_t i = 0; i < values_.size(); ++i)
            for (std::size_t k = 0; k <= fine_steps(); ++k)
                os << (i + 1) << ',' << k << ',' << h * static_cast<double>(k) << ','
                   << values_[i][k] << '\n';
    }

private:
    void check_level(int level) const {
        if (level < 0 || level > max_level_)
            throw ArgumentError("BrownianPath: level " + std::to_string(level) +
                                " exceeds max_level " + std::to_string(max_level_));
    }

    double horizon_ = 1.0;
    int max_level_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<double>> values_;
    ReadObserver observer_;
};

inline BrownianPath sample_path(std::uint64_t seed, double horizon, int max_level,
                                std::size_t n_noise_modes) {
    return BrownianPath::sample(seed, horizon, max_level, n_noise_modes);
}

/**
 * Adapted piecewise-constant derivative at level m:
 *   β̇_i^m(t) = ϖ^{-1} [β_i(⌊t/ϖ⌋ϖ) − β_i((⌊t/ϖ⌋−1)ϖ)],  ϖ = T/2^m.
 * Only min(m, n_noise_modes) modes are active.
 */
class WzDriver {
public:
    WzDriver(const BrownianPath& path, int m) : path_(&path), m_(m) {
        if (m < 1) throw ArgumentError("WzDriver: level m must be at least 1");
        if (m > path.max_level())
            throw ArgumentError("WzDriver: level m exceeds the path's max_level");
        varpi_ = std::ldexp(path.horizon(), -m);
        active_ = std::min<std::size_t>(static_cast<std::size_t>(m), path.n_modes());
    }

    int level() const noexcept { return m_; }
    double varpi() const noexcept { return varpi_; }
    std::size_t intervals() const noexcept { return std::size_t{1} << m_; }
    std::size_t active_modes() const noexcept { return active_; }
    std::size_t n_noise_modes() const noexcept { return path_->n_modes(); }
    const BrownianPath& path() const noexcept { return *path_; }

    /// Index ⌊t/ϖ⌋ of the interval containing t.
    std::int64_t interval_of(double t) const {
        check_time(t);
        return static_cast<std::int64_t>(std::floor(t / varpi_));
    }

    /// β̇_i^m on interval k = ⌊t/ϖ⌋; reads grid values at kϖ and (k−1)ϖ only.
    double derivative_on_interval(std::int64_t k, std::size_t i) const {
        if (i >= path_->n_modes()) throw IndexError("wz_derivative: noise mode out of range");
        if (i >= active_) return 0.0;
        return path_->increment(i, m_, k - 1) / varpi_;
    }

    double derivative(double t, std::size_t i) const {
        return derivative_on_interval(interval_of(t), i);
    }

    /// Ẇ^m(t), zero-padded to n_noise_modes.
    void vector_on_interval(std::int64_t k, std::span<double> out) const {
        if (out.size() != path_->n_modes())
            throw DimensionError("wz_vector: output must have n_noise_modes entries");
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (i < active_) ? path_->increment(i, m_, k - 1) / varpi_ : 0.0;
    }

    std::vector<double> vector(double t) const {
        std::vector<double> out(path_->n_modes());
        vector_on_interval(interval_of(t), out);
        return out;
    }

private:
    void check_time(double t) const {
        if (!(t >= 0.0) || t > path_->horizon())
            throw DomainError("wz_derivative: t = " + std::to_string(t) + " outside [0, T]");
    }

    const BrownianPath* path_;
    int m_;
    double varpi_;
    std::size_t active_;
};

inline double wz_derivative(const WzDriver& d, double t, std::size_t i) { return d.derivative(t, i); }
inline std::vector<double> wz_vector(const WzDriver& d, double t) { return d.vector(t); }

/// ‖u‖_U for the ℓ² surrogate of U.
inline double norm_u(std::span<const double> u) {
    double acc = 0.0;
    for (double v : u) acc += v * v;
    return std::sqrt(acc);
}

/**
 * First time at which the driver leaves the tail-control set
 *   sup_{i≤m} |β̇_i^m| ∨ m^{-1/2} ‖Ẇ^m‖_U > δ m^{1/2} 2^{m/2},
 * reported at the left end of the offending interval; T when it never does.
 */
inline double derivative_exit_time(const WzDriver& d, double delta) {
    const double m = static_cast<double>(d.level());
    const double threshold = delta * std::sqrt(m) * std::sqrt(std::ldexp(1.0, d.level()));
    const std::size_t n = d.n_noise_modes();
    std::vector<double> w(n);
    for (std::size_t k = 0; k <= d.intervals(); ++k) {
        d.vector_on_interval(static_cast<std::int64_t>(k), w);
        double sup = 0.0;
        for (double v : w) sup = std::max(sup, std::abs(v));
        sup = std::max(sup, norm_u(w) / std::sqrt(m));
        if (sup > threshold)
            return std::min(d.path().horizon(), d.varpi() * static_cast<double>(k));
    }
    return d.path().horizon();
}

/// Monte-Carlo estimates of the two driver tail probabilities at each level.
struct TailEstimate {
    int m = 0;
    double mode_sup_probability = 0.0;  ///< P(sup_i sup_s |β̇_i^m(s)| > δ m^{1/2} 2^{m/2})
    double norm_sup_probability = 0.0;  ///< P(sup_s ‖Ẇ^m(s)‖_U > δ m 2^{m/2})
    double mode_sup_stderr = 0.0;
    double norm_sup_stderr = 0.0;
    std::size_t n_samples = 0;
};

struct TailReport {
    double horizon = 1.0;
    double delta = 0.0;
    std::vector<TailEstimate> levels;
    bool mode_nonincreasing = false;
    bool norm_nonincreasing = false;
};

/**
 * Each sample draws one path with max(m_list) modes on the level max(m_list) grid;
 * every level is evaluated on that same path. Suprema run over s ∈ [0, T].
 */
inline TailReport tail_probability_estimate(double horizon, std::span<const int> m_list,
                                            double delta, std::size_t n_samples,
                                            std::uint64_t seed) {
    if (m_list.empty()) throw ArgumentError("tail_probability_estimate: empty level list");
    if (n_samples == 0) throw ArgumentError("tail_probability_estimate: need samples");
    int top = 0;
    for (int m : m_list) {
        if (m < 1) throw ArgumentError("tail_probability_estimate: levels must be positive");
        top = std::max(top, m);
    }
    std::vector<std::size_t> hits_mode(m_list.size(), 0), hits_norm(m_list.size(), 0);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const BrownianPath path =
            BrownianPath::sample(rng::derive_seed(seed, s), horizon, top, static_cast<std::size_t>(top));
        for (std::size_t j = 0; j < m_list.size(); ++j) {
            const int m = m_list[j];
            const WzDriver d(path, m);
            const double two_half = std::sqrt(std::ldexp(1.0, m));
            const double thr_mode = delta * std::sqrt(static_cast<double>(m)) * two_half;
            const double thr_norm = delta * static_cast<double>(m) * two_half;
            double sup_mode = 0.0, sup_norm = 0.0;
            std::vector<double> w(path.n_modes());
            for (std::size_t k = 0; k <= d.intervals(); ++k) {
                d.vector_on_interval(static_cast<std::int64_t>(k), w);
                for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i)
                    sup_mode = std::max(sup_mode, std::abs(w[i]));
                sup_norm = std::max(sup_norm, norm_u(w));
            }
            hits_mode[j] += sup_mode > thr_mode;
            hits_norm[j] += sup_norm > thr_norm;
        }
    }
    TailReport r;
    r.horizon = horizon;
    r.delta = delta;
    const double n = static_cast<double>(n_samples);
    for (std::size_t j = 0; j < m_list.size(); ++j) {
        TailEstimate e;
        e.m = m_list[j];
        e.n_samples = n_samples;
        e.mode_sup_probability = static_cast<double>(hits_mode[j]) / n;
        e.norm_sup_probability = static_cast<double>(hits_norm[j]) / n;
        e.mode_sup_stderr = std::sqrt(e.mode_sup_probability * (1.0 - e.mode_sup_probability) / n);
        e.norm_sup_stderr = std::sqrt(e.norm_sup_probability * (1.0 - e.norm_sup_probability) / n);
        r.levels.push_back(e);
    }
    r.mode_nonincreasing = r.norm_nonincreasing = true;
    for (std::size_t j = 1; j < r.levels.size(); ++j) {
        if (r.levels[j].mode_sup_probability > r.levels[j - 1].mode_sup_probability)
            r.mode_nonincreasing = false;
        if (r.levels[j].norm_sup_probability > r.levels[j - 1].norm_sup_probability)
            r.norm_nonincreasing = false;
    }
    return r;
}

}  // namespace wz

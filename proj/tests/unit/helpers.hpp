#pragma once

#include "wz/wz.hpp"

#include <cmath>
#include <cstring>
#include <functional>
#include <random>
#include <vector>

namespace wz::testing {

/// A ≡ 0 on any space; isolates the noise terms in solver tests.
class ZeroDrift final : public DriftOperator {
public:
    explicit ZeroDrift(SpacePtr space) : DriftOperator(space, constants_for(*space)) {}
    std::string name() const override { return "zero"; }
    void eval(double, ConstVec, MutVec out) const override { std::fill(out.begin(), out.end(), 0.0); }

private:
    static DriftConstants constants_for(const GalerkinSpace& s) {
        DriftConstants c;
        c.beta = s.v_exponent();
        c.L_A = 0.0;
        return c;
    }
};

inline ModelSpec with_drift(ModelSpec m, std::shared_ptr<const DriftOperator> drift) {
    m.drift = std::move(drift);
    m.analytic.reset();
    return m;
}

inline ModelSpec with_noise(ModelSpec m, std::shared_ptr<const NoiseOperator> noise) {
    m.noise = std::move(noise);
    m.analytic.reset();
    return m;
}

inline Vec random_vec(std::mt19937_64& g, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Vec v(n);
    for (double& x : v) x = nd(g);
    return v;
}

/// Composite Simpson rule with `n` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int j = 1; j < n; ++j) s += f(a + j * h) * ((j % 2) ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline bool bitwise_equal(const Trajectory& a, const Trajectory& b) {
    if (a.times != b.times || a.states.size() != b.states.size()) return false;
    for (std::size_t j = 0; j < a.states.size(); ++j) {
        const auto& x = a.states[j].coeffs;
        const auto& y = b.states[j].coeffs;
        if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace wz::testing

#include "helpers.hpp"

#include <gtest/gtest.h>

using namespace wz;
using wz::testing::random_vec;
using wz::testing::simpson;

namespace {

/// Polynomial test noise: (σ_i(y))_k = c_i (y_k² + y_{k+1}) with y_n := 0.
class QuadraticNoise final : public NoiseOperator {
public:
    QuadraticNoise(SpacePtr s, std::vector<double> c) : NoiseOperator(s, c.size(), {}), c_(std::move(c)) {}
    std::string name() const override { return "quadratic"; }
    void sigma(ConstVec y, std::size_t i, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = c_[i] * (y[k] * y[k] + (k + 1 < y.size() ? y[k + 1] : 0.0));
    }
    void d_sigma(ConstVec y, std::size_t i, ConstVec v, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k)
            out[k] = c_[i] * (2 * y[k] * v[k] + (k + 1 < y.size() ? v[k + 1] : 0.0));
    }
    void d2_sigma(ConstVec, std::size_t i, ConstVec v, ConstVec w, MutVec out) const override {
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = 2 * c_[i] * v[k] * w[k];
    }

private:
    std::vector<double> c_;
};

/// Linear noise whose declared correction bound is a quarter of the true one.
class UnderdeclaredLinear final : public NoiseOperator {
public:
    UnderdeclaredLinear(SpacePtr s, double a) : NoiseOperator(s, 1, {a * a, 0.25 * a * a * a * a, 0.0, 0.0}), a_(a) {}
    std::string name() const override { return "underdeclared"; }
    void sigma(ConstVec y, std::size_t, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = a_ * y[k];
    }
    void d_sigma(ConstVec, std::size_t, ConstVec v, MutVec out) const override {
        for (std::size_t k = 0; k < v.size(); ++k) out[k] = a_ * v[k];
    }
    void d2_sigma(ConstVec, std::size_t, ConstVec, ConstVec, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
    }

private:
    double a_;
};

/// Heat drift that claims more dissipation than it has.
class OverclaimedHeat final : public DriftOperator {
public:
    explicit OverclaimedHeat(SpacePtr s) : DriftOperator(s, constants()) {}
    std::string name() const override { return "overclaimed-heat"; }
    void eval(double, ConstVec y, MutVec out) const override {
        for (std::size_t k = 0; k < y.size(); ++k) out[k] = -std::pow(space().wavenumber(k), 2) * y[k];
    }

private:
    static DriftConstants constants() {
        DriftConstants c;
        c.L_A = 3.0;
        c.C_growth = 1.0;
        return c;
    }
};

/// A drift with a jump: A(y) = −sign(y₀)·e₀.
class SignDrift final : public DriftOperator {
public:
    explicit SignDrift(SpacePtr s) : DriftOperator(s, {}) {}
    std::string name() const override { return "sign"; }
    void eval(double, ConstVec y, MutVec out) const override {
        std::fill(out.begin(), out.end(), 0.0);
        out[0] = y[0] > 0 ? -1.0 : (y[0] < 0 ? 1.0 : 0.0);
    }
};

std::vector<std::shared_ptr<const NoiseOperator>> shipped_noises(SpacePtr s) {
    return {make_noise(s, {NoiseSpec::Kind::additive, {0.3, 0.2}}),
            make_noise(s, {NoiseSpec::Kind::linear, {0.4, 0.2, 0.1}}),
            make_noise(s, {NoiseSpec::Kind::tanh, {0.5, 0.3}}),
            std::make_shared<QuadraticNoise>(s, std::vector<double>{0.7, -0.2})};
}

}  // namespace

TEST(CorrectionTerm, DiagonalLinearExample) {
    const auto s = make_sine_space(4, 1.0);
    const auto noise = make_noise(s, {NoiseSpec::Kind::linear, {0.1, 0.2}});
    const Vec y{1.0, -2.0, 0.5, 3.0};
    for (int m : {2, 3, 10}) {
        const Vec tr = correction_tr(*noise, m, y);
        for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(tr[k], 0.05 * y[k], 1e-15);
    }
    const Vec tr1 = correction_tr(*noise, 1, y);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(tr1[k], 0.01 * y[k], 1e-15);
    EXPECT_THROW(correction_tr(*noise, 0, y), ArgumentError);
}

TEST(CorrectionTerm, AdditiveNoiseGivesZero) {
    const auto s = make_sine_space(4, 1.0);
    const auto noise = make_noise(s, {NoiseSpec::Kind::additive, {1.0, 2.0, 3.0}});
    for (double v : correction_tr(*noise, 3, Vec{1, 2, 3, 4})) EXPECT_EQ(v, 0.0);
}

TEST(CorrectionTerm, FiniteDifferenceOracle) {
    // Σ_i (σ_i(y + hσ_i(y)) − σ_i(y))/h with h = 1e-6 agrees to O(h).
    std::mt19937_64 g(3);
    const auto s = make_sine_space(5, 1.0);
    for (const auto& noise : shipped_noises(s)) {
        for (int trial = 0; trial < 10; ++trial) {
            const Vec y = random_vec(g, 5);
            const int m = 2;
            const Vec tr = correction_tr(*noise, m, y);
            const double h = 1e-6;
            Vec fd(5, 0.0);
            for (std::size_t i = 0; i < std::min<std::size_t>(m, noise->n_modes()); ++i) {
                const Vec c = noise->sigma(y, i);
                Vec yp(y);
                for (std::size_t k = 0; k < 5; ++k) yp[k] += h * c[k];
                const Vec cp = noise->sigma(yp, i);
                for (std::size_t k = 0; k < 5; ++k) fd[k] += (cp[k] - c[k]) / h;
            }
            for (std::size_t k = 0; k < 5; ++k)
                EXPECT_NEAR(tr[k], fd[k], 1e-4 * (1 + std::abs(fd[k]))) << noise->name();
        }
    }
}

TEST(NoiseDerivatives, FirstDerivativeFiniteDifference) {
    std::mt19937_64 g(4);
    const auto s = make_sine_space(6, 1.0);
    for (const auto& noise : shipped_noises(s))
        for (std::size_t i = 0; i < noise->n_modes(); ++i)
            for (int trial = 0; trial < 5; ++trial) {
                const Vec y = random_vec(g, 6), v = random_vec(g, 6);
                const Vec d = noise->d_sigma(y, i, v);
                const double h = 1e-6;
                Vec yp(y), ym(y);
                for (std::size_t k = 0; k < 6; ++k) {
                    yp[k] += h * v[k];
                    ym[k] -= h * v[k];
                }
                const Vec sp = noise->sigma(yp, i), sm = noise->sigma(ym, i);
                for (std::size_t k = 0; k < 6; ++k)
                    EXPECT_NEAR(d[k], (sp[k] - sm[k]) / (2 * h), 1e-7 * (1 + std::abs(d[k]))) << noise->name();
            }
}

TEST(NoiseDerivatives, SecondDerivativeFiniteDifference) {
    std::mt19937_64 g(5);
    const auto s = make_sine_space(6, 1.0);
    for (const auto& noise : shipped_noises(s))
        for (std::size_t i = 0; i < noise->n_modes(); ++i) {
            const Vec y = random_vec(g, 6), v = random_vec(g, 6), w = random_vec(g, 6);
            const Vec d2 = noise->d2_sigma(y, i, v, w);
            const double h = 1e-5;
            Vec yp(y), ym(y);
            for (std::size_t k = 0; k < 6; ++k) {
                yp[k] += h * w[k];
                ym[k] -= h * w[k];
            }
            const Vec dp = noise->d_sigma(yp, i, v), dm = noise->d_sigma(ym, i, v);
            for (std::size_t k = 0; k < 6; ++k)
                EXPECT_NEAR(d2[k], (dp[k] - dm[k]) / (2 * h), 1e-6 * (1 + std::abs(d2[k]))) << noise->name();
        }
}

TEST(NoiseDerivatives, LinearityAndSymmetry) {
    std::mt19937_64 g(6);
    const auto s = make_sine_space(6, 1.0);
    for (const auto& noise : shipped_noises(s))
        for (int trial = 0; trial < 10; ++trial) {
            const Vec y = random_vec(g, 6), v = random_vec(g, 6), w = random_vec(g, 6);
            const double a = 1.7, b = -0.4;
            Vec comb(6);
            for (std::size_t k = 0; k < 6; ++k) comb[k] = a * v[k] + b * w[k];
            const Vec lhs = noise->d_sigma(y, 0, comb);
            const Vec dv = noise->d_sigma(y, 0, v), dw = noise->d_sigma(y, 0, w);
            const Vec s12 = noise->d2_sigma(y, 0, v, w), s21 = noise->d2_sigma(y, 0, w, v);
            for (std::size_t k = 0; k < 6; ++k) {
                EXPECT_NEAR(lhs[k], a * dv[k] + b * dw[k], 1e-13 * (1 + std::abs(lhs[k])));
                EXPECT_NEAR(s12[k], s21[k], 1e-14);
            }
        }
}

TEST(NoiseOperators, IndexAndDimensionChecks) {
    const auto s = make_sine_space(3, 1.0);
    const auto noise = make_noise(s, {NoiseSpec::Kind::linear, {0.1}});
    EXPECT_THROW(noise->sigma(Vec{1, 2, 3}, 1), IndexError);
    EXPECT_THROW(noise->sigma(Vec{1, 2}, 0), DimensionError);
    EXPECT_THROW(make_noise(s, {NoiseSpec::Kind::linear, {}}), ArgumentError);
    EXPECT_THROW(noise_kind_from_string("cubic"), ArgumentError);
    EXPECT_EQ(noise_kind_from_string(to_string(NoiseSpec::Kind::tanh)), NoiseSpec::Kind::tanh);
}

TEST(TrBound, LinearNoisePassesWithClosedFormConstant) {
    std::mt19937_64 g(7);
    const auto s = make_sine_space(5, 1.0);
    const auto noise = make_noise(s, {NoiseSpec::Kind::linear, {0.4, 0.2, 0.1}});
    std::vector<Vec> samples;
    for (int j = 0; j < 100; ++j) samples.push_back(random_vec(g, 5, 3.0));
    const auto r = check_tr_bound(*noise, 3, samples);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.growth_margin, 0.0);
    // (Σa²)²‖y‖² ≤ (Σa²)²(1 + ‖y‖²): margin is −(Σa²)² exactly at the worst sample.
    EXPECT_NEAR(r.growth_margin, -std::pow(0.21, 2), 1e-12);
}

TEST(TrBound, AdditiveNoisePasses) {
    const auto s = make_sine_space(3, 1.0);
    const auto noise = make_noise(s, {NoiseSpec::Kind::additive, {1.0}});
    const std::vector<Vec> samples{{1, 2, 3}, {0, 0, 0}};
    EXPECT_TRUE(check_tr_bound(*noise, 1, samples).pass);
    EXPECT_THROW(check_tr_bound(*noise, 1, std::span<const Vec>{}), ArgumentError);
}

TEST(TrBound, NegativeControlDetectsUnderdeclaredConstant) {
    const auto s = make_sine_space(3, 1.0);
    const UnderdeclaredLinear noise(s, 0.8);
    const std::vector<Vec> samples{{3, 0, 0}, {0, 2, 0}};
    const auto r = check_tr_bound(noise, 1, samples);
    EXPECT_FALSE(r.pass);
    EXPECT_GT(r.growth_margin, 0.0);
}

TEST(Margins, NormalizationAndRaw) {
    const Margin m{3.0, 1.0};
    EXPECT_EQ(m.raw(), 2.0);
    EXPECT_EQ(m.normalized(), 1.0);
}

TEST(Hemicontinuity, ContinuousDriftPassesJumpFails) {
    std::mt19937_64 g(8);
    const auto s = make_sine_space(4, 1.0);
    const HeatDrift heat(s, 1.0);
    const SignDrift sign(s);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec x1 = random_vec(g, 4), x2 = random_vec(g, 4), z = random_vec(g, 4);
        const Margin mh = hemicontinuity_margin(heat, 0.5, x1, x2, z);
        EXPECT_LE(mh.raw(), 0.0);
    }
    // y₀ crosses zero on the λ-grid; the jump does not shrink under refinement.
    const Vec x1{0.013, 0, 0, 0}, x2{-1.0, 0, 0, 0}, z{1.0, 0, 0, 0};
    EXPECT_GT(hemicontinuity_margin(sign, 0.5, x1, x2, z).raw(), 0.0);
}

TEST(Probe, HeatPassesAndOverclaimFails) {
    const auto s = make_sine_space(8, 1.0);
    const HeatDrift heat(s, 1.0);
    const OverclaimedHeat bad(s);
    const auto noise = make_noise(s, {NoiseSpec::Kind::linear, {0.4, 0.2, 0.1}});
    SamplerConfig cfg;
    const auto good = probe_hypotheses(heat, *noise, *s, cfg, 200, 1);
    EXPECT_TRUE(good.all_pass);
    ASSERT_NE(good.find("coercivity"), nullptr);
    EXPECT_EQ(good.results.size(), 10u);
    const auto r = probe_hypotheses(bad, *noise, *s, cfg, 200, 1);
    EXPECT_FALSE(r.all_pass);
    EXPECT_FALSE(r.find("coercivity")->pass);
    EXPECT_EQ(r.find("nonexistent"), nullptr);
}

TEST(Probe, DimensionMismatch) {
    const auto s8 = make_sine_space(8, 1.0), s4 = make_sine_space(4, 1.0);
    const HeatDrift heat(s8, 1.0);
    const auto noise = make_noise(s4, {NoiseSpec::Kind::linear, {0.4}});
    EXPECT_THROW(probe_hypotheses(heat, *noise, *s8, SamplerConfig{}, 10, 1), DimensionError);
}

TEST(ControlPath, ConstantInterpolationAndEnergy) {
    const auto g = ControlPath::constant(2.0, {0.3, -0.1});
    Vec out(2);
    g.eval(1.3, out);
    EXPECT_EQ(out, (Vec{0.3, -0.1}));
    EXPECT_NEAR(g.energy(), 2.0 * (0.09 + 0.01), 1e-15);
    EXPECT_THROW(g.eval(2.5, out), DomainError);

    const ControlPath lin(1.0, {{0.0}, {1.0}, {4.0}});
    Vec v(1);
    lin.eval(0.25, v);
    EXPECT_DOUBLE_EQ(v[0], 0.5);
    lin.eval(0.75, v);
    EXPECT_DOUBLE_EQ(v[0], 2.5);
    EXPECT_THROW(ControlPath(1.0, {{0.0}}), ArgumentError);
    EXPECT_THROW(ControlPath(1.0, {{0.0}, {1.0, 2.0}}), DimensionError);
}

TEST(ControlPath, TabulatedSineEnergy) {
    const auto g = ControlPath::from_function(1.0, 10, 1, [](double t, MutVec out) {
        out[0] = std::sin(2 * std::numbers::pi * t);
    });
    const double oracle = simpson([](double t) { return std::pow(std::sin(2 * std::numbers::pi * t), 2); }, 0, 1);
    EXPECT_NEAR(g.energy(), oracle, 1e-6);
    Vec v(1);
    g.eval(0.25, v);
    EXPECT_NEAR(v[0], 1.0, 1e-12);
}

TEST(ControlledBundle, Validation) {
    const auto s = make_sine_space(4, 1.0);
    const auto noise = make_noise(s, {NoiseSpec::Kind::linear, {0.4}});
    ControlledBundle b;
    b.sigma3 = noise;
    EXPECT_THROW(b.validate(*s, 1.0), ArgumentError);
    b.g = ControlPath::constant(1.0, {0.1, 0.2});
    EXPECT_THROW(b.validate(*s, 1.0), DimensionError);
    b.g = ControlPath::constant(0.5, {0.1});
    EXPECT_THROW(b.validate(*s, 1.0), DomainError);
    b.g = ControlPath::constant(1.0, {0.1});
    EXPECT_NO_THROW(b.validate(*s, 1.0));
    b.sigma1 = make_noise(make_sine_space(3, 1.0), {NoiseSpec::Kind::linear, {0.4}});
    EXPECT_THROW(b.validate(*s, 1.0), DimensionError);
}

TEST(HalfCorrection, IsHalfTheCorrectionTerm) {
    const auto s = make_sine_space(4, 1.0);
    const auto noise = make_noise(s, {NoiseSpec::Kind::tanh, {0.5, 0.3}});
    const auto G = half_correction(noise, 2);
    const Vec y{0.4, -1.2, 2.0, 0.1};
    Vec out(4);
    G.apply(y, out);
    const Vec tr = correction_tr(*noise, 2, y);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(out[k], 0.5 * tr[k]);
    EXPECT_DOUBLE_EQ(G.bound_L, 0.25 * noise->constants().L);
}

#include "helpers.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>

using namespace wz;
using wz::testing::bitwise_equal;
using wz::testing::ZeroDrift;

namespace {

const NoiseSpec kNone{NoiseSpec::Kind::none, {}};
const NoiseSpec kLinear{NoiseSpec::Kind::linear, {0.4, 0.2, 0.1}};

double max_mode_error(const Trajectory& tr, double nu, double L, const std::vector<double>& y0) {
    double err = 0.0;
    for (std::size_t k = 0; k < y0.size(); ++k) {
        const double kk = (k + 1) * std::numbers::pi / L;
        err = std::max(err, std::abs(tr.states.back().coeffs[k] - y0[k] * std::exp(-nu * kk * kk * tr.horizon)));
    }
    return err;
}

}  // namespace

TEST(SolveIto, HeatZeroNoiseMatchesExponentialDecay) {
    const double L = std::numbers::pi, nu = 1.0, T = 1.0;
    const std::vector<double> y0{1.0, 0.5, 0.25, 0.125};
    const ModelSpec m = make_heat(4, L, nu, kNone, y0);
    SolverConfig cfg;
    cfg.scheme = Scheme::explicit_euler;
    cfg.dt_level = 10;
    const auto path = sample_path(1, T, 10, 1);
    const Trajectory tr = solve_ito(m, path, cfg);
    const double dt = T / 1024.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double kk = (k + 1) * std::numbers::pi / L;
        const double exact = y0[k] * std::exp(-nu * kk * kk * T);
        EXPECT_NEAR(tr.states.back().coeffs[k], exact, 5.0 * dt * std::pow(kk, 4) * T) << k;
    }
}

TEST(SolveIto, AdditiveZeroDriftIsExact) {
    const std::vector<double> b{0.3, -0.2, 0.5};
    ModelSpec m = make_heat(4, 1.0, 1.0, {NoiseSpec::Kind::additive, b}, {0.1, 0.2, 0.3, 0.4});
    m = wz::testing::with_drift(m, std::make_shared<ZeroDrift>(m.space));
    const auto path = sample_path(5, 1.0, 10, 3);
    for (Scheme s : {Scheme::explicit_euler, Scheme::heun}) {
        SolverConfig cfg;
        cfg.scheme = s;
        const Trajectory tr = solve_ito(m, path, cfg);
        for (std::size_t k = 0; k < 4; ++k) {
            const double expected = m.initial_state.coeffs[k] + (k < 3 ? b[k] * path.values()[k].back() : 0.0);
            EXPECT_NEAR(tr.states.back().coeffs[k], expected, 1e-12);
        }
    }
}

TEST(Schemes, HeunIsSecondOrderOnHeat) {
    const double L = std::numbers::pi;
    const std::vector<double> y0{1.0, 0.5, 0.25, 0.125};
    const ModelSpec m = make_heat(4, L, 1.0, kNone, y0);
    std::vector<int> levels;
    std::vector<double> errors;
    for (int level = 5; level <= 9; ++level) {
        SolverConfig cfg;
        cfg.dt_level = level;
        cfg.store_level = level;
        const Trajectory tr = solve_controlled(m, ControlledBundle{}, 1.0, 1, cfg);
        levels.push_back(level);
        errors.push_back(max_mode_error(tr, 1.0, L, y0));
    }
    const SlopeFit f = fit_log2_slope(levels, errors);
    EXPECT_NEAR(f.slope, -2.0, 0.2);
}

TEST(Schemes, EulerIsFirstOrderOnHeat) {
    const double L = std::numbers::pi;
    const std::vector<double> y0{1.0, 0.5};
    const ModelSpec m = make_heat(2, L, 1.0, kNone, y0);
    std::vector<int> levels;
    std::vector<double> errors;
    for (int level = 6; level <= 10; ++level) {
        SolverConfig cfg;
        cfg.scheme = Scheme::explicit_euler;
        cfg.dt_level = cfg.store_level = level;
        levels.push_back(level);
        errors.push_back(max_mode_error(solve_controlled(m, ControlledBundle{}, 1.0, 1, cfg), 1.0, L, y0));
    }
    EXPECT_NEAR(fit_log2_slope(levels, errors).slope, -1.0, 0.1);
}

TEST(SolveIto, GbmStrongErrorHalfOrder) {
    const ModelSpec m = make_gbm(0.1, 0.5);
    std::vector<int> levels{8, 9, 10, 11, 12};
    std::vector<double> err(levels.size(), 0.0);
    const int n_paths = 300;
    for (int p = 0; p < n_paths; ++p) {
        const auto path = sample_path(rng::derive_seed(99, static_cast<std::uint64_t>(p)), 1.0, 12, 1);
        const double exact = m.analytic->ito(1.0, path.values()[0].back());
        for (std::size_t j = 0; j < levels.size(); ++j) {
            SolverConfig cfg;
            cfg.scheme = Scheme::explicit_euler;
            cfg.dt_level = levels[j];
            cfg.store_level = 4;
            err[j] += std::abs(solve_ito(m, path, cfg).states.back().coeffs[0] - exact) / n_paths;
        }
    }
    EXPECT_NEAR(fit_log2_slope(levels, err).slope, -0.5, 0.15);
}

TEST(SolveWongZakai, StaysAtInitialStateOnFirstInterval) {
    ModelSpec m = make_heat(4, 1.0, 1.0, kLinear, {1.0, -0.5});
    m = wz::testing::with_drift(m, std::make_shared<ZeroDrift>(m.space));
    SolverConfig cfg;
    cfg.wz_correction = false;
    const auto path = sample_path(2, 1.0, 10, 3);
    const int mlev = 4;
    const Trajectory tr = solve_wong_zakai(m, path, mlev, cfg);
    const double varpi = 1.0 / 16.0;
    for (std::size_t j = 0; j < tr.size(); ++j) {
        if (tr.times[j] <= varpi) {
            EXPECT_EQ(tr.states[j].coeffs, m.initial_state.coeffs) << tr.times[j];
        }
    }
    EXPECT_NE(tr.states.back().coeffs, m.initial_state.coeffs);
}

TEST(SolveControlled, WongZakaiSpecializationIsBitwise) {
    const ModelSpec heat = make_heat(8, 1.0, 1.0, kLinear);
    const ModelSpec gbm = make_gbm(0.1, 0.5);
    SolverConfig cfg;
    cfg.dt_level = 9;
    cfg.store_level = 8;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int m = 2 + static_cast<int>(seed % 5);
        for (const ModelSpec* model : {&heat, &gbm}) {
            const auto path = sample_path(seed, 1.0, 9, model->noise->n_modes());
            ControlledBundle b;
            b.sigma2 = model->noise;
            b.G = half_correction(model->noise, m);
            const Trajectory a = solve_wong_zakai(*model, path, m, cfg);
            const Trajectory c = solve_controlled(*model, b, path, m, cfg);
            EXPECT_TRUE(bitwise_equal(a, c)) << model->name << " seed " << seed;
        }
    }
}

TEST(SolveControlled, EmptyBundleIsDeterministicFlow) {
    const ModelSpec m = make_heat(6, 1.0, 0.5, kNone);
    SolverConfig cfg;
    const auto path = sample_path(3, 1.0, 10, 1);
    const Trajectory ito = solve_ito(m, path, cfg);
    const Trajectory det = solve_controlled(m, ControlledBundle{}, 1.0, 1, cfg);
    EXPECT_TRUE(bitwise_equal(ito, det));
    EXPECT_THROW(solve_controlled(make_heat(6, 1.0, 0.5, kLinear), wong_zakai_bundle(m, 2), 1.0, 2, cfg),
                 ArgumentError);
}

TEST(Coupling, ItoAndWongZakaiReadTheSameGrid) {
    const ModelSpec m = make_heat(4, 1.0, 1.0, kLinear);
    auto path = sample_path(8, 1.0, 10, 3);
    std::set<std::pair<std::size_t, std::size_t>> ito_reads, wz_reads;
    std::set<std::pair<std::size_t, std::size_t>>* sink = &ito_reads;
    path.set_read_observer([&](std::size_t i, std::size_t k) { sink->insert({i, k}); });
    SolverConfig cfg;
    const Trajectory ito = solve_ito(m, path, cfg);
    sink = &wz_reads;
    const Trajectory wz = solve_wong_zakai(m, path, 5, cfg);
    path.set_read_observer(nullptr);
    ASSERT_FALSE(wz_reads.empty());
    for (const auto& r : wz_reads) {
        EXPECT_TRUE(ito_reads.count(r)) << r.first << ":" << r.second;
        EXPECT_EQ(r.second % (1u << (10 - 5)), 0u);  // level-m grid points only
    }
    // Values the WZ run never read cannot influence it.
    auto perturbed = path;
    for (std::size_t k = 1; k < perturbed.fine_steps(); ++k)
        if (!wz_reads.count({0, k})) perturbed.mutable_values()[0][k] += 1.0;
    EXPECT_TRUE(bitwise_equal(wz, solve_wong_zakai(m, perturbed, 5, cfg)));
    EXPECT_FALSE(bitwise_equal(ito, solve_ito(m, perturbed, cfg)));
}

TEST(SolveWongZakai, GbmErrorDecreasesWithLevel) {
    const ModelSpec m = make_gbm(0.1, 0.5);
    const std::vector<int> levels{2, 4, 6, 8};
    std::vector<double> err(levels.size(), 0.0);
    for (std::uint64_t p = 0; p < 60; ++p) {
        const auto path = sample_path(p + 500, 1.0, 14, 1);
        for (std::size_t j = 0; j < levels.size(); ++j) {
            SolverConfig cfg;
            cfg.dt_level = levels[j] + 6;
            cfg.store_level = 10;
            const auto ref = detail::analytic_trajectory(m, path, 10, m.analytic->ito);
            const double d = sup_h_distance(ref, solve_wong_zakai(m, path, levels[j], cfg));
            err[j] += d * d;
        }
    }
    for (std::size_t j = 1; j < err.size(); ++j) EXPECT_LT(err[j], err[j - 1]);
}

TEST(SolveSkeleton, GbmConstantControlClosedForm) {
    const double mu = 0.1, a = 0.5, g = 0.3, y0 = 1.2;
    const ModelSpec m = make_gbm(mu, a, y0);
    SolverConfig cfg;
    const Trajectory z = solve_skeleton(m, ControlPath::constant(1.0, {g}), 1.0, cfg);
    double worst = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j)
        worst = std::max(worst, std::abs(z.states[j].coeffs[0] - y0 * std::exp((mu + a * g - 0.5 * a * a) * z.times[j])));
    EXPECT_LT(worst, 1e-6);
}

TEST(Taming, KeepsDeterministicAccuracyAndBoundsSteps) {
    const double L = std::numbers::pi;
    const std::vector<double> y0{1.0, 0.3};
    const ModelSpec m = make_heat(2, L, 1.0, kNone, y0);
    SolverConfig cfg;
    cfg.taming = true;
    cfg.dt_level = 12;
    cfg.store_level = 10;
    EXPECT_LT(max_mode_error(solve_controlled(m, ControlledBundle{}, 1.0, 1, cfg), 1.0, L, y0), 1e-3);
}

TEST(Solvers, BlowUpIsReported) {
    const ModelSpec m = make_gbm(1e6, 0.5);
    SolverConfig cfg;
    cfg.scheme = Scheme::explicit_euler;
    const auto path = sample_path(1, 1.0, 10, 1);
    try {
        (void)solve_ito(m, path, cfg);
        FAIL() << "expected a blow-up";
    } catch (const BlowUpError& e) {
        EXPECT_GE(e.last_valid_time(), 0.0);
        EXPECT_LT(e.last_valid_time(), 1.0);
    }
}

TEST(Solvers, GuardRecordsExitAndPeak) {
    const ModelSpec m = make_gbm(0.5, 0.0, 1.0);
    SolverConfig cfg;
    cfg.max_norm_guard = 2.0;
    const auto path = sample_path(1, 1.0, 10, 1);
    const Trajectory tr = solve_ito(m, path, cfg);
    ASSERT_TRUE(tr.exited_at.has_value());
    // y = e^{t/2}; the functional e^{t/2} + (e^t − 1) first exceeds 2 near t ≈ 0.49.
    const double t_star = 2.0 * std::log((-1.0 + std::sqrt(1.0 + 4.0 * 3.0)) / 2.0);
    EXPECT_NEAR(*tr.exited_at, t_star, 5e-3);
    EXPECT_NEAR(tr.guard_peak, std::exp(0.5) + std::exp(1.0) - 1.0, 5e-3);
    EXPECT_NEAR(tr.energy_integral, std::exp(1.0) - 1.0, 5e-3);
}

TEST(Solvers, ConfigAndLevelErrors) {
    SolverConfig bad;
    bad.dt_level = 0;
    EXPECT_THROW(bad.validate(), ArgumentError);
    bad = {};
    bad.taming_power = 0;
    EXPECT_THROW(bad.validate(), ArgumentError);
    const ModelSpec m = make_gbm(0.1, 0.5);
    const auto coarse = sample_path(1, 1.0, 6, 1);
    EXPECT_THROW(solve_ito(m, coarse, SolverConfig{}), ArgumentError);
    EXPECT_THROW(solve_wong_zakai(m, coarse, 0, SolverConfig{}), ArgumentError);
    EXPECT_EQ(scheme_from_string(to_string(Scheme::explicit_euler)), Scheme::explicit_euler);
    EXPECT_THROW(scheme_from_string("rk4"), ArgumentError);
}

TEST(Solvers, StepLevelRule) {
    SolverConfig cfg;
    cfg.dt_level = 6;
    cfg.store_level = 4;
    cfg.substeps_per_varpi = 5;
    EXPECT_EQ(wz_step_level(3, cfg), 6);
    EXPECT_EQ(wz_step_level(8, cfg), 11);
    const ModelSpec m = make_gbm(0.1, 0.5);
    const auto path = sample_path(1, 1.0, 12, 1);
    const Trajectory tr = solve_wong_zakai(m, path, 8, cfg);
    EXPECT_EQ(tr.step_level, 11);
    EXPECT_EQ(tr.size(), 17u);
}

TEST(SupDistance, MetricAxiomsAndInterpolation) {
    const auto s = make_sine_space(2, 1.0);
    auto make = [&](std::vector<double> times, std::vector<Vec> states) {
        Trajectory t;
        t.space = s;
        t.times = std::move(times);
        for (std::size_t j = 0; j < states.size(); ++j) t.states.push_back({states[j], t.times[j]});
        return t;
    };
    const Trajectory a = make({0, 0.5, 1}, {{0, 0}, {1, 0}, {0, 1}});
    const Trajectory b = make({0, 0.5, 1}, {{0.5, 0}, {1.5, 0}, {0.5, 1}});
    const Trajectory c = make({0, 0.5, 1}, {{0, 2}, {1, -1}, {3, 1}});
    EXPECT_EQ(sup_h_distance(a, a), 0.0);
    EXPECT_DOUBLE_EQ(sup_h_distance(a, b), 0.5);
    EXPECT_DOUBLE_EQ(sup_h_distance(a, b), sup_h_distance(b, a));
    EXPECT_LE(sup_h_distance(a, c), sup_h_distance(a, b) + sup_h_distance(b, c) + 1e-15);
    // Coarse grid interpolated onto a finer one.
    const Trajectory coarse = make({0, 1}, {{0, 0}, {2, 0}});
    const Trajectory fine = make({0, 0.25, 0.5, 1}, {{0, 0}, {0.5, 0}, {1, 0}, {2, 0}});
    EXPECT_NEAR(sup_h_distance(fine, coarse), 0.0, 1e-15);
    const Trajectory other = make({0}, {{1, 2, 3}});
    EXPECT_THROW(sup_h_distance(a, other), DimensionError);
}

TEST(Trajectory, CsvSchemaAndCaches) {
    const ModelSpec m = make_heat(3, 1.0, 1.0, kLinear);
    SolverConfig cfg;
    cfg.store_level = 3;
    const Trajectory tr = solve_wong_zakai(m, sample_path(1, 1.0, 10, 3), 3, cfg);
    ASSERT_EQ(tr.size(), 9u);
    for (std::size_t j = 0; j < tr.size(); ++j) {
        EXPECT_NEAR(tr.norms_h[j], m.space->norm_h(tr.states[j].coeffs), 1e-15);
        EXPECT_NEAR(tr.norms_v[j], m.space->norm_v(tr.states[j].coeffs), 1e-15);
        EXPECT_DOUBLE_EQ(tr.times[j], j / 8.0);
    }
    std::ostringstream os;
    tr.write_csv(os);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,c_1,c_2,c_3,norm_h,norm_v");
}

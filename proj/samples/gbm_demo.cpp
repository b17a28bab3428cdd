// One geometric Brownian motion path: Itô solution, Wong–Zakai approximations with and
// without the correction term, all driven by the same sampled Brownian path.
#include "wz/wz.hpp"

#include <cstdio>

int main() {
    const wz::ModelSpec gbm = wz::make_gbm(0.1, 0.5);
    const wz::BrownianPath path = wz::sample_path(2024, 1.0, 12, 1);
    const double beta_T = path.values()[0].back();
    std::printf("beta(T) = %.6f\n", beta_T);
    std::printf("Ito closed form        Y(T) = %.6f\n", gbm.analytic->ito(1.0, beta_T));
    std::printf("Stratonovich form      Y(T) = %.6f\n", gbm.analytic->stratonovich(1.0, beta_T));

    wz::SolverConfig cfg;
    for (int m = 2; m <= 10; m += 2) {
        const double with = wz::solve_wong_zakai(gbm, path, m, cfg).states.back().coeffs[0];
        cfg.wz_correction = false;
        const double without = wz::solve_wong_zakai(gbm, path, m, cfg).states.back().coeffs[0];
        cfg.wz_correction = true;
        std::printf("m = %2d  Y^m(T) = %.6f   uncorrected = %.6f\n", m, with, without);
    }
}

#include "catch_amalgamated.hpp"
#include "oracle_values.hpp"
#include "sigma/measure.hpp"
#include "sigma/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

using Catch::Approx;
using sigma::MeasureOnHalfLine;

TEST_CASE("survival functions of the measure families", "[measure]") {
    auto e1 = MeasureOnHalfLine::exponential(1.0);
    REQUIRE(e1.survival(0.0) == 1.0);
    auto u1 = MeasureOnHalfLine::uniform(1.0);
    REQUIRE(u1.survival(0.25) == Approx(0.75));
    REQUIRE(u1.survival(2.0) == 0.0);
    auto e2 = MeasureOnHalfLine::exponential(2.0);
    REQUIRE(e2.survival(1.0) == Approx(0.13533528323661269189).epsilon(1e-14));
}

TEST_CASE("exponential transform closed forms", "[measure]") {
    for (double rate : {1.0, 2.5}) {
        auto m = MeasureOnHalfLine::exponential(rate);
        for (double x : {1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
            const double expect = rate * x * x / 2.0;
            REQUIRE(m.dual_hl_psi(x) == Approx(expect).epsilon(1e-8));
        }
        for (double z : {1e-6, 1e-3, 0.25, 2.0, 40.0, 300.0}) {
            const double expect = std::sqrt(2.0 * z / rate);
            REQUIRE(m.dual_hl_phi(z) == Approx(expect).epsilon(1e-7));
        }
    }
    auto e1 = MeasureOnHalfLine::exponential(1.0);
    REQUIRE(e1.dual_hl_phi(2.0) == Approx(2.0).epsilon(1e-9));
    REQUIRE(e1.dual_hl_phi(0.0) == 0.0);
}

TEST_CASE("uniform primal transform values", "[measure]") {
    auto m = MeasureOnHalfLine::uniform(1.0);
    REQUIRE(m.dual_hl_psi(0.25) == Approx(oracle::psi_unif1_at_025).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi(0.5) == Approx(oracle::psi_unif1_at_05).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi(0.9) == Approx(oracle::psi_unif1_at_09).epsilon(1e-9));
    REQUIRE(std::isinf(m.dual_hl_psi(1.0)));
    REQUIRE(std::isinf(m.dual_hl_psi(3.0)));
    // inverse of the frozen value recovers the abscissa
    REQUIRE(m.dual_hl_phi(oracle::psi_unif1_at_05) == Approx(0.5).epsilon(1e-8));
}

TEST_CASE("second-family transform of the exponential law", "[measure]") {
    auto m = MeasureOnHalfLine::exponential(1.0);
    REQUIRE_FALSE(m.psi_bar_divergent());
    REQUIRE(m.dual_hl_psi_bar(0.0) == Approx(oracle::psi_bar_exp1_at_0).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi_bar(0.25) == Approx(oracle::psi_bar_exp1_at_025).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi_bar(0.5) == Approx(oracle::psi_bar_exp1_at_05).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi_bar(1.0) == Approx(oracle::psi_bar_exp1_at_1).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi_bar(1.5) == Approx(oracle::psi_bar_exp1_at_15).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi_bar(2.0) == Approx(oracle::psi_bar_exp1_at_2).epsilon(1e-9));
    REQUIRE(m.dual_hl_psi_bar(3.0) == Approx(oracle::psi_bar_exp1_at_3).epsilon(1e-9));
    // generalized inverse recovers the abscissa
    REQUIRE(m.dual_hl_phi_bar(oracle::psi_bar_exp1_at_1) == Approx(1.0).epsilon(1e-8));
    REQUIRE(std::isinf(m.dual_hl_phi_bar(0.0)));
}

TEST_CASE("second-family transform of the uniform law is b - x", "[measure]") {
    for (double b : {1.0, 2.5}) {
        auto m = MeasureOnHalfLine::uniform(b);
        REQUIRE_FALSE(m.psi_bar_divergent());
        for (double frac : {0.0, 0.1, 0.3, 0.5, 0.9, 1.0}) {
            const double x = b * frac;
            REQUIRE(m.dual_hl_psi_bar(x) == Approx(b - x).margin(1e-9));
        }
    }
    auto u1 = MeasureOnHalfLine::uniform(1.0);
    REQUIRE(u1.dual_hl_phi_bar(0.4) == Approx(0.6).epsilon(1e-8));
    REQUIRE(u1.dual_hl_phi_bar(1.0) == 0.0);
    REQUIRE(u1.dual_hl_phi_bar(7.0) == 0.0);
    REQUIRE(u1.dual_hl_phi_bar(0.0) == Approx(1.0));
}

TEST_CASE("divergent second-family transform is rejected at the wall", "[measure]") {
    // survival stays at 1 until 0.5: lower support bound a = 0.5 > 0
    auto m = MeasureOnHalfLine::tabulated({0.5, 1.0, 1.5}, {1.0, 0.4, 0.0});
    REQUIRE(m.a_lower() == Approx(0.5));
    REQUIRE(m.b_upper() == Approx(1.5));
    REQUIRE(m.psi_bar_divergent());
    REQUIRE_THROWS_AS(m.dual_hl_psi_bar(0.3), sigma::divergent_transform);
    REQUIRE_THROWS_AS(m.dual_hl_psi_bar(0.5), sigma::divergent_transform);
    REQUIRE(m.dual_hl_psi_bar(0.7) > 0.0);
    REQUIRE(m.dual_hl_psi_bar(1.4) > 0.0);
    REQUIRE(m.dual_hl_psi_bar(1.5) == 0.0);
    // the primal transform is still total: zero below a, +inf at b
    REQUIRE(m.dual_hl_psi(0.3) == 0.0);
    REQUIRE(std::isinf(m.dual_hl_psi(1.5)));
    REQUIRE(m.dual_hl_phi(0.0) == Approx(0.5));
}

TEST_CASE("generalized-inverse sandwich on a grid", "[measure]") {
    const double eps = 1e-6;
    auto check = [&](const MeasureOnHalfLine& m, const std::vector<double>& grid) {
        for (double x : grid) {
            const double psi = m.dual_hl_psi(x);
            REQUIRE(m.dual_hl_phi(psi + eps) >= x - 1e-7);
            if (psi > eps) REQUIRE(m.dual_hl_phi(psi - eps) <= x + 1e-7);
        }
    };
    check(MeasureOnHalfLine::exponential(1.0), {0.1, 0.5, 1.0, 2.0, 5.0});
    check(MeasureOnHalfLine::uniform(1.0), {0.1, 0.3, 0.5, 0.8, 0.95});
    check(MeasureOnHalfLine::tabulated({0.0, 0.5, 2.0}, {1.0, 0.6, 0.0}),
          {0.1, 0.4, 0.9, 1.5, 1.9});
}

TEST_CASE("tabulated sampling of an exactly piecewise-linear survival", "[measure]") {
    // uniform(0,1) has survival 1-x: any sampling grid reproduces it exactly,
    // so transform values must agree across refinements and with closed form
    std::vector<double> x11, s11, x21, s21;
    for (int i = 0; i <= 10; ++i) {
        x11.push_back(i / 10.0);
        s11.push_back(1.0 - i / 10.0);
    }
    for (int i = 0; i <= 20; ++i) {
        x21.push_back(i / 20.0);
        s21.push_back(1.0 - i / 20.0);
    }
    auto coarse = MeasureOnHalfLine::tabulated(x11, s11);
    auto fine = MeasureOnHalfLine::tabulated(x21, s21);
    auto exact = MeasureOnHalfLine::uniform(1.0);
    for (double x : {0.05, 0.25, 0.5, 0.77, 0.9}) {
        REQUIRE(coarse.dual_hl_psi(x) == Approx(exact.dual_hl_psi(x)).margin(1e-8));
        REQUIRE(std::fabs(coarse.dual_hl_psi(x) - fine.dual_hl_psi(x)) < 1e-8);
        REQUIRE(coarse.dual_hl_psi_bar(x) == Approx(1.0 - x).margin(1e-8));
    }
}

TEST_CASE("transform curve caches expose monotone data", "[measure]") {
    auto m = MeasureOnHalfLine::exponential(1.0);
    auto psi = m.psi_curve();
    REQUIRE(psi.x_grid.size() == psi.values.size());
    REQUIRE(psi.values.front() == 0.0);
    for (std::size_t i = 1; i < psi.x_grid.size(); ++i) {
        REQUIRE(psi.x_grid[i] > psi.x_grid[i - 1]);
        REQUIRE(psi.values[i] >= psi.values[i - 1]);
    }
    REQUIRE(std::isinf(psi.divergence_point));

    auto u = MeasureOnHalfLine::uniform(2.0);
    REQUIRE(u.psi_curve().divergence_point == Approx(2.0));

    auto bar = m.psi_bar_curve();
    for (std::size_t i = 1; i < bar.x_grid.size(); ++i) {
        REQUIRE(bar.x_grid[i] >= bar.x_grid[i - 1]);
        REQUIRE(bar.values[i] <= bar.values[i - 1]);
    }
}

TEST_CASE("quantiles invert the distribution functions", "[measure]") {
    auto ms = {MeasureOnHalfLine::exponential(1.7), MeasureOnHalfLine::uniform(2.0),
               MeasureOnHalfLine::tabulated({0.0, 0.5, 2.0}, {1.0, 0.6, 0.0})};
    for (const auto& m : ms) {
        for (double frac : {0.05, 0.3, 0.7, 0.95}) {
            const double x = (std::isfinite(m.b_upper()) ? m.b_upper() : 4.0) * frac;
            const double g = m.survival(x);
            if (g > 0.0 && g < 1.0)
                REQUIRE(m.quantile_survival(g) == Approx(x).margin(1e-12));
            const double f = m.cdf(x);
            if (f > 0.0 && f < 1.0)
                REQUIRE(m.quantile_cdf(f) == Approx(x).margin(1e-12));
        }
    }
}

TEST_CASE("CSV ingestion round-trips and rejects malformed input", "[measure]") {
    const char* path = "/tmp/sigma_measure_test.csv";
    {
        std::ofstream out(path);
        out << "x,survival\n";
        for (int i = 0; i <= 10; ++i)
            out << i / 10.0 << "," << 1.0 - i / 10.0 << "\n";
    }
    auto m = MeasureOnHalfLine::tabulated_from_csv(path);
    REQUIRE(m.dual_hl_psi_bar(0.3) == Approx(0.7).margin(1e-9));
    std::remove(path);

    {
        std::ofstream out(path);
        out << "x,value\n0,1\n1,0\n";
    }
    REQUIRE_THROWS_AS(MeasureOnHalfLine::tabulated_from_csv(path), sigma::invalid_spec);
    std::remove(path);
}

TEST_CASE("atom guard rejects boundary mass", "[measure]") {
    // first survival sample below 1 places an atom at the first grid point
    REQUIRE_THROWS_AS(MeasureOnHalfLine::tabulated({0.0, 1.0}, {0.9, 0.0}),
                      sigma::invalid_spec);
    // last sample above 0 places an atom at the last grid point
    REQUIRE_THROWS_AS(MeasureOnHalfLine::tabulated({0.0, 1.0}, {1.0, 0.2}),
                      sigma::invalid_spec);
    // non-monotone survival
    REQUIRE_THROWS_AS(MeasureOnHalfLine::tabulated({0.0, 0.5, 1.0}, {1.0, 1.0, 0.0}),
                      sigma::invalid_spec);
    // tiny endpoint slack within the guard is accepted and clamped
    REQUIRE_NOTHROW(MeasureOnHalfLine::tabulated({0.0, 1.0}, {1.0 - 1e-10, 1e-10}));
}

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "dem/errors.hpp"
#include "dem/ode_solver.hpp"
#include "support/oracles.hpp"

using namespace dem;

namespace {

DriftSystem unit_slope() {
    return DriftSystem({[](double, std::span<const double>) { return 1.0; }},
                       Domain({0.0, -10.0}, {10.0, 10.0}), 0.0, 1.0, "unit-slope");
}

double greedy_error(double sigma, double h) {
    const Trajectory traj =
        integrate(make_builtin_system("greedy-matching"), std::vector<double>{0.0}, sigma, h);
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        worst = std::max(worst, std::fabs(traj.values[k][0] - oracle::greedy_solution(traj.grid[k])));
    }
    return worst;
}

}  // namespace

TEST_CASE("greedy trajectory matches t/(1+2t)") {
    const Trajectory traj =
        integrate(make_builtin_system("greedy-matching"), std::vector<double>{0.0}, 1.0, 1e-3);
    CHECK(traj.size() == 1001);
    CHECK(traj.grid.back() == 1.0);
    CHECK(std::fabs(traj.values.back()[0] - 1.0 / 3.0) <= 1e-8);
    CHECK(greedy_error(2.0, 1e-3) <= 1e-8);
    CHECK(std::fabs(eval_trajectory(traj, 0.5)[0] - 0.25) <= 1e-6);
}

TEST_CASE("trivial right-hand sides") {
    const Trajectory flat =
        integrate(make_builtin_system("zero-drift"), std::vector<double>{0.7}, 3.0, 0.1);
    for (const auto& v : flat.values) CHECK(v[0] == 0.7);
    CHECK(lipschitz_of_solution(flat) == 0.0);

    const Trajectory line = integrate(unit_slope(), std::vector<double>{0.0}, 2.0, 1e-3);
    CHECK(line.values.back()[0] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(lipschitz_of_solution(line) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("grid layout") {
    const Trajectory traj = integrate(unit_slope(), std::vector<double>{0.0}, 1.05, 0.1);
    REQUIRE(traj.size() == 12);
    CHECK(traj.grid[10] == doctest::Approx(1.0));
    CHECK(traj.grid.back() == 1.05);
    for (std::size_t k = 1; k < traj.size(); ++k) CHECK(traj.grid[k] > traj.grid[k - 1]);
    CHECK_THROWS_AS(integrate(unit_slope(), std::vector<double>{0.0}, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("solution slope of the greedy system is about 1") {
    const Trajectory traj =
        integrate(make_builtin_system("greedy-matching"), std::vector<double>{0.0}, 1.0, 1e-3);
    const double l = lipschitz_of_solution(traj);
    CHECK(l <= 1.0);
    CHECK(l > 0.99);
}

TEST_CASE("dense output") {
    Trajectory t;
    t.grid = {0.0, 1.0};
    t.values = {{0.0}, {2.0}};
    t.step = 1.0;
    CHECK(eval_trajectory(t, 0.5)[0] == 1.0);
    CHECK(eval_trajectory(t, 1.0)[0] == 2.0);
    CHECK_THROWS_AS(eval_trajectory(t, 1.5), OutOfRange);
    CHECK_THROWS_AS(eval_trajectory(t, -0.1), OutOfRange);

    const Trajectory g =
        integrate(make_builtin_system("greedy-matching"), std::vector<double>{0.0}, 1.0, 0.01);
    for (std::size_t k = 0; k < g.size(); k += 7) CHECK(eval_trajectory(g, g.grid[k]) == g.values[k]);
}

TEST_CASE("leaving the domain reports the prefix") {
    // y' = y from 0.5 reaches the upper wall y = 1 at t = ln 2.
    try {
        integrate(make_builtin_system("linear-test"), std::vector<double>{0.5}, 1.0, 1e-3);
        FAIL("expected LeftDomain");
    } catch (const LeftDomain& e) {
        CHECK(e.t() == doctest::Approx(std::log(2.0)).epsilon(2e-3));
        CHECK(e.partial().sigma() < std::log(2.0));
        CHECK(e.partial().sigma() > std::log(2.0) - 2e-3);
        CHECK(e.kind() == "LeftDomain");
    }
    CHECK_THROWS_AS(integrate(make_builtin_system("greedy-matching"), std::vector<double>{0.7}, 1.0, 0.1),
                    Error);
}

TEST_CASE("fourth-order convergence") {
    double previous = greedy_error(2.0, 0.1);
    for (double h : {0.05, 0.025, 0.0125}) {
        const double e = greedy_error(2.0, h);
        CHECK(previous / e >= 8.0);
        previous = e;
    }
}

TEST_CASE("integration is bit-reproducible") {
    const DriftSystem g = make_builtin_system("coupled-cooperative-2d");
    const Trajectory a = integrate(g, std::vector<double>{0.1, 0.2}, 1.0, 1e-3);
    const Trajectory b = integrate(g, std::vector<double>{0.1, 0.2}, 1.0, 1e-3);
    CHECK(a.values == b.values);
    CHECK(a.grid == b.grid);
}

TEST_CASE("ordered initial data stays ordered for a cooperative system") {
    const DriftSystem g = make_builtin_system("coupled-cooperative-2d");
    Philox4x32 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::vector<double> lo{0.2 * rng.uniform01(), 0.2 * rng.uniform01()};
        const std::vector<double> hi{lo[0] + 0.1 * rng.uniform01(), lo[1] + 0.1 * rng.uniform01()};
        const Trajectory a = integrate(g, lo, 1.0, 1e-2);
        const Trajectory b = integrate(g, hi, 1.0, 1e-2);
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a.values[k][0] <= b.values[k][0] + 1e-9);
            CHECK(a.values[k][1] <= b.values[k][1] + 1e-9);
        }
    }
}

TEST_CASE("trajectory csv") {
    Trajectory t;
    t.grid = {0.0, 0.5};
    t.values = {{0.0, 1.0}, {0.1, 1.0 / 3.0}};
    std::ostringstream out;
    write_trajectory_csv(out, t);
    CHECK(out.str() == "t,y_1,y_2\n0,0,1\n0.5,0.10000000000000001,0.33333333333333331\n");
}

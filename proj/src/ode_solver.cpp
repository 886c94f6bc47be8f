#include "dem/ode_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dem {

LeftDomain::LeftDomain(double t, Trajectory partial)
    : Error("LeftDomain",
            [t] {
                std::ostringstream msg;
                msg << "integration left the domain at t=" << t;
                return msg.str();
            }()),
      t_(t),
      partial_(std::move(partial)) {}

namespace {

std::size_t step_count(double sigma, double h) {
    const double ratio = sigma / h;
    const double nearest = std::round(ratio);
    if (std::fabs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) {
        return static_cast<std::size_t>(nearest);
    }
    return static_cast<std::size_t>(std::ceil(ratio));
}

}  // namespace

Trajectory integrate(const DriftSystem& system, std::span<const double> y0, double sigma, double h) {
    if (!(sigma > 0.0) || !(h > 0.0) || h > sigma || !std::isfinite(sigma)) {
        throw std::invalid_argument("integrate: need 0 < h <= sigma");
    }
    const std::size_t a = system.dimension();
    if (y0.size() != a) throw ShapeMismatch("integrate: y0 has the wrong dimension");
    if (!system.domain().contains(0.0, y0)) {
        throw PointOutsideDomain("integrate: (0, y0) is outside the domain");
    }

    const std::size_t steps = step_count(sigma, h);
    Trajectory traj;
    traj.step = h;
    traj.grid.reserve(steps + 1);
    traj.values.reserve(steps + 1);
    traj.grid.push_back(0.0);
    traj.values.emplace_back(y0.begin(), y0.end());

    std::vector<double> k1(a), k2(a), k3(a), k4(a), stage(a), next(a);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = traj.grid.back();
        const double t_next = (k + 1 == steps) ? sigma : static_cast<double>(k + 1) * h;
        const double dt = t_next - t;
        const std::vector<double>& y = traj.values.back();

        system.evaluate_unchecked(t, y, k1);
        for (std::size_t j = 0; j < a; ++j) stage[j] = y[j] + 0.5 * dt * k1[j];
        system.evaluate_unchecked(t + 0.5 * dt, stage, k2);
        for (std::size_t j = 0; j < a; ++j) stage[j] = y[j] + 0.5 * dt * k2[j];
        system.evaluate_unchecked(t + 0.5 * dt, stage, k3);
        for (std::size_t j = 0; j < a; ++j) stage[j] = y[j] + dt * k3[j];
        system.evaluate_unchecked(t_next, stage, k4);
        for (std::size_t j = 0; j < a; ++j) {
            next[j] = y[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }

        const bool finite = std::all_of(next.begin(), next.end(), [](double v) { return std::isfinite(v); });
        if (!finite || !system.domain().contains(t_next, next)) {
            throw LeftDomain(t_next, std::move(traj));
        }
        traj.grid.push_back(t_next);
        traj.values.push_back(next);
    }
    return traj;
}

std::vector<double> eval_trajectory(const Trajectory& trajectory, double t) {
    if (trajectory.grid.empty() || !(t >= trajectory.grid.front() && t <= trajectory.grid.back())) {
        std::ostringstream msg;
        msg << "eval_trajectory: t=" << t << " outside [0, " << trajectory.sigma() << "]";
        throw OutOfRange(msg.str());
    }
    const auto it = std::lower_bound(trajectory.grid.begin(), trajectory.grid.end(), t);
    const auto k = static_cast<std::size_t>(it - trajectory.grid.begin());
    if (*it == t) return trajectory.values[k];

    const double t0 = trajectory.grid[k - 1];
    const double t1 = trajectory.grid[k];
    const double w = (t - t0) / (t1 - t0);
    const auto& v0 = trajectory.values[k - 1];
    const auto& v1 = trajectory.values[k];
    std::vector<double> out(v0.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = v0[j] + w * (v1[j] - v0[j]);
    return out;
}

double lipschitz_of_solution(const Trajectory& trajectory) {
    double best = 0.0;
    for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) {
        const double dt = trajectory.grid[k + 1] - trajectory.grid[k];
        double change = 0.0;
        for (std::size_t j = 0; j < trajectory.dimension(); ++j) {
            change = std::max(change, std::fabs(trajectory.values[k + 1][j] - trajectory.values[k][j]));
        }
        best = std::max(best, change / dt);
    }
    return best;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
    out << "t";
    for (std::size_t j = 0; j < trajectory.dimension(); ++j) out << ",y_" << (j + 1);
    out << '\n';
    char buf[32];
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", trajectory.grid[k]);
        out << buf;
        for (double v : trajectory.values[k]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace dem

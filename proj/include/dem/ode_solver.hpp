#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "dem/drift_system.hpp"
#include "dem/errors.hpp"

namespace dem {

/// Fixed-step numerical solution y(t) on [0, sigma] with linear dense output.
struct Trajectory {
    std::vector<double> grid;                 ///< 0 = t_0 < ... < t_K = sigma
    std::vector<std::vector<double>> values;  ///< values[k] = y(t_k), each of length a
    double step = 0.0;                        ///< configured h; the last step may be shorter

    std::size_t dimension() const noexcept { return values.empty() ? 0 : values.front().size(); }
    double sigma() const noexcept { return grid.empty() ? 0.0 : grid.back(); }
    std::size_t size() const noexcept { return grid.size(); }
};

/// Raised when an integration step leaves the domain before sigma. Carries
/// the prefix that stayed inside so callers can shrink sigma.
class LeftDomain : public Error {
public:
    LeftDomain(double t, Trajectory partial);
    double t() const noexcept { return t_; }
    const Trajectory& partial() const noexcept { return partial_; }

private:
    double t_;
    Trajectory partial_;
};

/// Classical RK4 with step h on [0, sigma]; grid points are k*h, with a final
/// shorter step landing exactly on sigma. Grid values are domain-checked;
/// intermediate stages are not.
Trajectory integrate(const DriftSystem& system, std::span<const double> y0, double sigma, double h);

/// Linear interpolation; exact at grid points. Throws OutOfRange outside [0, sigma].
std::vector<double> eval_trajectory(const Trajectory& trajectory, double t);

/// max_k ||values[k+1] - values[k]||_inf / (t_{k+1} - t_k).
double lipschitz_of_solution(const Trajectory& trajectory);

/// Header `t,y_1,...,y_a`; one row per grid point, 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace dem

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dem/drift_system.hpp"
#include "dem/ode_solver.hpp"

namespace dem {

/// Parameters of the one-/two-sided concentration theorem. L and B are
/// copied from the DriftSystem the parameters are paired with.
struct TheoremParams {
    std::int64_t n = 1;     ///< scaling parameter
    std::int64_t a = 1;     ///< number of tracked variables
    double beta = 0.0;      ///< one-step bound |dZ| <= beta
    double b = 0.0;         ///< conditional second-moment bound
    double lambda = 1.0;    ///< deviation parameter
    double delta = 0.0;     ///< drift slack
    double sigma = 1.0;     ///< time horizon
    double L = 0.0;
    double B = 0.0;
};

struct ParamValidation {
    bool ok = false;
    /// Smallest admissible lambda; +inf when none exists (L = 0 with delta > 0).
    double min_lambda = 0.0;
    std::string reason;
};

/// lambda >= max{beta + B, (L + B L + delta n) / (3 L)}. For L = 0 the
/// second branch is 0 when delta = 0 and unsatisfiable otherwise.
ParamValidation validate_params(const TheoremParams& p);

/// Smallest lambda satisfying validate_params (same rules).
double minimal_lambda(const TheoremParams& p);

/// Number of the last step covered, floor(sigma * n).
std::int64_t horizon_steps(double sigma, std::int64_t n);

/// g(t) = 3 lambda e^{2 L t}. Throws OutOfRange for t outside [0, sigma].
double envelope_width(const TheoremParams& p, double t);

struct ProbabilityBound {
    double raw = 0.0;    ///< 2a exp(-lambda^2 / (2(b sigma n + 2 beta lambda))), may exceed 1
    double value = 0.0;  ///< min(1, raw)
    double lambda_sq = 0.0;
    double b_sigma_n = 0.0;
    double beta_lambda = 0.0;
};

ProbabilityBound failure_probability(const TheoremParams& p);

/// Largest grid time sigma' <= p.sigma such that every grid point t < sigma'
/// keeps y(t) at l-infinity distance >= g(t)/n from the domain boundary.
/// Distance is measured over the state coordinates; time only has to lie in
/// the domain's time range.
double admissible_sigma(const DriftSystem& system, const Trajectory& trajectory,
                        const TheoremParams& p);

enum class EnvelopeSide { upper, two_sided, lower };

std::string to_string(EnvelopeSide side);
EnvelopeSide envelope_side_from_string(const std::string& name);

/// Per-step bounds on the integer grid i = 0..floor(sigma n), t_i = i / n.
struct Envelope {
    EnvelopeSide side = EnvelopeSide::upper;
    std::int64_t n = 1;
    std::int64_t steps = 0;                   ///< last index, floor(sigma n)
    std::vector<double> t;                    ///< t[i] = i / n
    std::vector<double> width;                ///< g(t_i)
    std::vector<std::vector<double>> center;  ///< center[j][i] = n y_j(t_i)
    std::vector<std::vector<double>> upper;   ///< empty for the lower side
    std::vector<std::vector<double>> lower;   ///< empty for the upper side

    std::size_t dimension() const noexcept { return center.size(); }
};

/// Throws InvalidParams when validate_params fails.
Envelope build_envelope(const Trajectory& trajectory, const TheoremParams& p, EnvelopeSide side);

/// `i,t,center_j,upper_j[,lower_j]` for every variable j.
void write_envelope_csv(std::ostream& out, const Envelope& envelope);

}  // namespace dem

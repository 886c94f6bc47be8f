#include "dem/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dem/csv.hpp"

namespace dem {

namespace {

bool finite_params(const TheoremParams& p) {
    for (double v : {p.beta, p.b, p.lambda, p.delta, p.sigma, p.L, p.B}) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

double minimal_lambda(const TheoremParams& p) {
    const double first = p.beta + p.B;
    double second = 0.0;
    if (p.L > 0.0) {
        second = (p.L + p.B * p.L + p.delta * static_cast<double>(p.n)) / (3.0 * p.L);
    } else if (p.delta > 0.0) {
        second = std::numeric_limits<double>::infinity();
    }
    return std::max(first, second);
}

ParamValidation validate_params(const TheoremParams& p) {
    ParamValidation v;
    if (!finite_params(p) || p.n < 1 || p.a < 1 || p.beta < 0.0 || p.b < 0.0 || p.delta < 0.0 ||
        p.L < 0.0 || p.B < 0.0 || !(p.sigma > 0.0) || !(p.lambda > 0.0)) {
        v.min_lambda = std::numeric_limits<double>::quiet_NaN();
        v.reason = "parameters must be finite with n, a >= 1, sigma, lambda > 0 and the rest >= 0";
        return v;
    }
    v.min_lambda = minimal_lambda(p);
    if (p.L == 0.0 && p.delta > 0.0) {
        v.reason = "L = 0 with delta > 0: no lambda satisfies the constraint";
        return v;
    }
    // Compare the second branch in multiplied-out form so the boundary case
    // (equality) is not lost to rounding in the division.
    const bool first_ok = p.lambda >= p.beta + p.B;
    const bool second_ok =
        p.L == 0.0 || 3.0 * p.L * p.lambda >= p.L + p.B * p.L + p.delta * static_cast<double>(p.n);
    v.ok = first_ok && second_ok;
    if (!v.ok) {
        std::ostringstream msg;
        msg << "lambda=" << p.lambda << " is below the minimal admissible value " << v.min_lambda;
        v.reason = msg.str();
    }
    return v;
}

std::int64_t horizon_steps(double sigma, std::int64_t n) {
    const double product = sigma * static_cast<double>(n);
    const double nearest = std::round(product);
    if (std::fabs(product - nearest) <= 1e-9 * std::max(1.0, product)) {
        return static_cast<std::int64_t>(nearest);
    }
    return static_cast<std::int64_t>(std::floor(product));
}

double envelope_width(const TheoremParams& p, double t) {
    if (!(t >= 0.0 && t <= p.sigma)) {
        std::ostringstream msg;
        msg << "envelope_width: t=" << t << " outside [0, " << p.sigma << "]";
        throw OutOfRange(msg.str());
    }
    return 3.0 * p.lambda * std::exp(2.0 * p.L * t);
}

ProbabilityBound failure_probability(const TheoremParams& p) {
    ProbabilityBound bound;
    bound.lambda_sq = p.lambda * p.lambda;
    bound.b_sigma_n = p.b * p.sigma * static_cast<double>(p.n);
    bound.beta_lambda = p.beta * p.lambda;
    const double denom = 2.0 * (bound.b_sigma_n + 2.0 * bound.beta_lambda);
    const double prefactor = 2.0 * static_cast<double>(p.a);
    if (denom > 0.0) {
        bound.raw = prefactor * std::exp(-bound.lambda_sq / denom);
    } else {
        bound.raw = bound.lambda_sq > 0.0 ? 0.0 : prefactor;
    }
    bound.value = std::min(1.0, bound.raw);
    return bound;
}

double admissible_sigma(const DriftSystem& system, const Trajectory& trajectory,
                        const TheoremParams& p) {
    const double sigma = p.sigma;
    if (trajectory.grid.empty() || trajectory.grid.front() != 0.0 ||
        trajectory.grid.back() < sigma - 1e-12 * std::max(1.0, sigma)) {
        throw TrajectoryNotCovering("admissible_sigma: trajectory does not span [0, sigma]");
    }
    if (trajectory.dimension() != system.dimension()) {
        throw ShapeMismatch("admissible_sigma: trajectory dimension differs from system");
    }
    const double n = static_cast<double>(p.n);
    for (std::size_t k = 0; k < trajectory.size() && trajectory.grid[k] < sigma; ++k) {
        const double t = trajectory.grid[k];
        const double required = 3.0 * p.lambda * std::exp(2.0 * p.L * t) / n;
        if (system.domain().state_boundary_distance(t, trajectory.values[k]) < required) {
            return t;
        }
    }
    return sigma;
}

std::string to_string(EnvelopeSide side) {
    switch (side) {
        case EnvelopeSide::upper: return "upper";
        case EnvelopeSide::two_sided: return "two-sided";
        case EnvelopeSide::lower: return "lower";
    }
    return "upper";
}

EnvelopeSide envelope_side_from_string(const std::string& name) {
    if (name == "upper") return EnvelopeSide::upper;
    if (name == "two-sided") return EnvelopeSide::two_sided;
    if (name == "lower") return EnvelopeSide::lower;
    throw std::invalid_argument("unknown envelope side: " + name);
}

Envelope build_envelope(const Trajectory& trajectory, const TheoremParams& p, EnvelopeSide side) {
    const ParamValidation validation = validate_params(p);
    if (!validation.ok) throw InvalidParams(validation.reason, validation.min_lambda);
    const std::int64_t steps = horizon_steps(p.sigma, p.n);
    const double n = static_cast<double>(p.n);
    const double t_last = static_cast<double>(steps) / n;
    if (trajectory.grid.empty() || trajectory.grid.back() < t_last - 1e-12 * std::max(1.0, t_last)) {
        throw TrajectoryNotCovering("build_envelope: trajectory does not reach floor(sigma n)/n");
    }
    if (static_cast<std::int64_t>(trajectory.dimension()) != p.a) {
        throw ShapeMismatch("build_envelope: trajectory dimension differs from params.a");
    }

    Envelope env;
    env.side = side;
    env.n = p.n;
    env.steps = steps;
    const auto count = static_cast<std::size_t>(steps + 1);
    const std::size_t a = trajectory.dimension();
    env.t.resize(count);
    env.width.resize(count);
    env.center.assign(a, std::vector<double>(count));
    if (side != EnvelopeSide::lower) env.upper.assign(a, std::vector<double>(count));
    if (side != EnvelopeSide::upper) env.lower.assign(a, std::vector<double>(count));

    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / n;
        env.t[i] = t;
        env.width[i] = 3.0 * p.lambda * std::exp(2.0 * p.L * t);
        const std::vector<double> y = eval_trajectory(trajectory, std::min(t, trajectory.sigma()));
        for (std::size_t j = 0; j < a; ++j) {
            const double c = n * y[j];
            env.center[j][i] = c;
            if (!env.upper.empty()) env.upper[j][i] = c + env.width[i];
            if (!env.lower.empty()) env.lower[j][i] = c - env.width[i];
        }
    }
    return env;
}

void write_envelope_csv(std::ostream& out, const Envelope& envelope) {
    const std::size_t a = envelope.dimension();
    out << "i,t";
    for (std::size_t j = 1; j <= a; ++j) {
        out << ",center_" << j;
        if (!envelope.upper.empty()) out << ",upper_" << j;
        if (!envelope.lower.empty()) out << ",lower_" << j;
    }
    out << '\n';
    for (std::size_t i = 0; i < envelope.t.size(); ++i) {
        out << i << ',' << format_double(envelope.t[i]);
        for (std::size_t j = 0; j < a; ++j) {
            out << ',' << format_double(envelope.center[j][i]);
            if (!envelope.upper.empty()) out << ',' << format_double(envelope.upper[j][i]);
            if (!envelope.lower.empty()) out << ',' << format_double(envelope.lower[j][i]);
        }
        out << '\n';
    }
}

}  // namespace dem

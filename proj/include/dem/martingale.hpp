#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dem/envelope.hpp"

namespace dem {

/// One realization Z_j(0..len-1) of a process together with the conditional
/// drifts E[dZ_j(i) | H_i] the process reported at each step.
struct ProcessTrace {
    std::int64_t n = 1;
    std::int64_t horizon = 0;    ///< m = floor(sigma n)
    std::int64_t stop_step = 0;  ///< I clipped to the horizon; equals horizon if never stopped
    bool stopped = false;        ///< the stopping rule fired at stop_step
    std::vector<std::vector<double>> values;  ///< values[j][i], i = 0..stop_step
    std::vector<std::vector<double>> drifts;  ///< drifts[j][i], i < stop_step
    /// E[(dZ_j(i))^2 | H_i] when the process knows it exactly.
    std::optional<std::vector<std::vector<double>>> second_moments;
    /// false: drifts came from a user-supplied approximation ("empirical mode").
    bool exact_drifts = true;
    /// Non-empty when the process raised an error and the trace was truncated.
    std::string diagnostic;

    std::size_t dimension() const noexcept { return values.size(); }
    std::size_t length() const noexcept { return values.empty() ? 0 : values.front().size(); }
};

/// S = X + M with S_j(i) = Z_j(i) - bound_j(i), X the summed conditional
/// drifts of S (X_j(0) = 0) and M the martingale residual (M_j(0) = S_j(0)).
struct DoobParts {
    std::vector<std::vector<double>> S;
    std::vector<std::vector<double>> X;
    std::vector<std::vector<double>> M;

    std::size_t dimension() const noexcept { return S.size(); }
    std::size_t length() const noexcept { return S.empty() ? 0 : S.front().size(); }
};

/// Decomposes S against the envelope's upper curve n y + g (the lower curve
/// n y - g for a lower-only envelope). Throws ShapeMismatch when the trace
/// and envelope disagree on n, dimension or length.
DoobParts doob_decompose(const ProcessTrace& trace, const Envelope& envelope);

/// tails * exp(-eps^2 / (2 (b m + beta eps))).
double freedman_bound(double epsilon, double beta, double b, std::int64_t m, int tails = 2);

/// max over 0 <= i <= upto and j of |M_j(i) - M_j(0)|.
double max_deviation(const DoobParts& parts, std::int64_t upto);

/// `i,S_1,X_1,M_1,...` one row per step.
void write_doob_csv(std::ostream& out, const DoobParts& parts);

}  // namespace dem

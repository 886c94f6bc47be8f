#include "dem/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dem/csv.hpp"

namespace dem {

DoobParts doob_decompose(const ProcessTrace& trace, const Envelope& envelope) {
    if (trace.n != envelope.n) throw ShapeMismatch("doob_decompose: trace and envelope differ in n");
    if (trace.dimension() != envelope.dimension()) {
        throw ShapeMismatch("doob_decompose: trace and envelope differ in dimension");
    }
    const std::size_t len = trace.length();
    if (len == 0 || len > envelope.t.size()) {
        throw ShapeMismatch("doob_decompose: trace is longer than the envelope");
    }
    for (const auto& d : trace.drifts) {
        if (d.size() + 1 < len) throw ShapeMismatch("doob_decompose: missing drifts");
    }

    const bool use_lower = envelope.side == EnvelopeSide::lower;
    // S = Z - (center + sign * g); sign = -1 for the lower curve.
    const double sign = use_lower ? -1.0 : 1.0;
    DoobParts parts;
    const std::size_t a = trace.dimension();
    parts.S.assign(a, std::vector<double>(len));
    parts.X.assign(a, std::vector<double>(len));
    parts.M.assign(a, std::vector<double>(len));
    for (std::size_t j = 0; j < a; ++j) {
        const auto& z = trace.values[j];
        const auto& center = envelope.center[j];
        for (std::size_t i = 0; i < len; ++i) {
            parts.S[j][i] = z[i] - (center[i] + sign * envelope.width[i]);
        }
        parts.X[j][0] = 0.0;
        for (std::size_t i = 0; i + 1 < len; ++i) {
            const double bound_change = (center[i + 1] - center[i]) +
                                        sign * (envelope.width[i + 1] - envelope.width[i]);
            parts.X[j][i + 1] = parts.X[j][i] + (trace.drifts[j][i] - bound_change);
        }
        for (std::size_t i = 0; i < len; ++i) parts.M[j][i] = parts.S[j][i] - parts.X[j][i];
    }
    return parts;
}

double freedman_bound(double epsilon, double beta, double b, std::int64_t m, int tails) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("freedman_bound: epsilon > 0 required");
    const double denom = 2.0 * (b * static_cast<double>(m) + beta * epsilon);
    if (denom <= 0.0) return 0.0;
    return static_cast<double>(tails) * std::exp(-epsilon * epsilon / denom);
}

double max_deviation(const DoobParts& parts, std::int64_t upto) {
    if (upto < 0 || static_cast<std::size_t>(upto) >= parts.length()) {
        std::ostringstream msg;
        msg << "max_deviation: upto=" << upto << " outside [0, " << parts.length() << ")";
        throw OutOfRange(msg.str());
    }
    double best = 0.0;
    for (const auto& m : parts.M) {
        for (std::int64_t i = 0; i <= upto; ++i) {
            best = std::max(best, std::fabs(m[static_cast<std::size_t>(i)] - m[0]));
        }
    }
    return best;
}

void write_doob_csv(std::ostream& out, const DoobParts& parts) {
    out << 'i';
    for (std::size_t j = 1; j <= parts.dimension(); ++j) {
        out << ",S_" << j << ",X_" << j << ",M_" << j;
    }
    out << '\n';
    for (std::size_t i = 0; i < parts.length(); ++i) {
        out << i;
        for (std::size_t j = 0; j < parts.dimension(); ++j) {
            out << ',' << format_double(parts.S[j][i]) << ',' << format_double(parts.X[j][i])
                << ',' << format_double(parts.M[j][i]);
        }
        out << '\n';
    }
}

}  // namespace dem

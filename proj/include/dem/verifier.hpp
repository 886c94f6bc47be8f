#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dem/drift_system.hpp"
#include "dem/envelope.hpp"
#include "dem/martingale.hpp"
#include "dem/ode_solver.hpp"
#include "dem/processes.hpp"

namespace dem {

/// One-sided binomial confidence bound (Wilson score). `half_width` is the
/// distance from the point estimate down to the lower limit.
struct WilsonInterval {
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    double half_width = 0.0;
    double z = 0.0;
};

/// Standard normal quantile, found by bisection on erfc.
double normal_quantile(double p);

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double confidence);

/// Which steps the hypothesis audit looks at.
///   always            every step i < min{I, sigma n}
///   inside-envelope   only while every Z_j' is inside the envelope; stops at
///                     the first exit
///   critical-interval as inside-envelope, and the Trend check for Z_j is
///                     further restricted to steps where Z_j >= n y_j(i/n)
enum class AuditMode { always, inside_envelope, critical_interval };

std::string to_string(AuditMode mode);
AuditMode audit_mode_from_string(const std::string& name);

struct AuditFailure {
    std::string condition;  ///< "boundedness", "variance", "trend", "domain" or "initial"
    std::int64_t step = 0;
    std::size_t variable = 0;  ///< 0-based
    double observed = 0.0;
    double limit = 0.0;
};

struct AuditResult {
    bool passed = true;
    bool trend_audited = true;     ///< false when the trace has no exact drifts
    bool variance_audited = true;  ///< false when second moments are unknown
    std::int64_t steps_checked = 0;
    std::int64_t failure_count = 0;
    /// The first few failures, in step order.
    std::vector<AuditFailure> failures;
};

struct AuditOptions {
    AuditMode mode = AuditMode::always;
    /// upper: one-sided Trend (drift <= f + delta) and Z(0) <= n y(0) + lambda.
    /// two_sided: |drift - f| <= delta where (t, Z/n) is in the domain, and
    /// |Z(0) - n y(0)| <= lambda. lower: the mirror of upper.
    EnvelopeSide side = EnvelopeSide::upper;
    /// Relative slack for floating-point comparisons.
    double tolerance = 1e-12;
    std::size_t max_recorded_failures = 8;
};

/// Post-hoc check of the Boundedness, Trend and Initial conditions on one
/// trace. `envelope` is needed by the inside-envelope modes and may be null
/// for AuditMode::always.
AuditResult audit_conditions(const ProcessTrace& trace, const DriftSystem& system,
                             const TheoremParams& params, const Trajectory& trajectory,
                             const Envelope* envelope, const AuditOptions& options = {});

struct VerifyOptions {
    std::int64_t trials = 100;
    std::uint64_t seed = 0;  ///< trial k runs from seed + k
    unsigned threads = 1;
    double gamma = 0.0;       ///< failure probability of the stopping event
    double confidence = 0.99;
    AuditMode audit_mode = AuditMode::always;
    /// Initial condition of the ODE; defaults to Z(0)/n of trial 0.
    std::optional<std::vector<double>> y0;
    /// ODE step; 0 picks 1/(n k) with k = max(1, ceil(1000/n)), so every i/n
    /// is a grid point and h <= 1e-3.
    double ode_step = 0.0;
    /// One-sided only: run anyway when the system is not cooperative.
    bool allow_noncooperative = false;
    std::int64_t cooperativity_budget = 20000;
    /// Sample budget for the post-hoc estimates of L and B.
    std::int64_t constant_budget = 4000;
    /// Called once per trial, serialized under a lock, in completion order.
    std::function<void(std::int64_t trial, std::uint64_t seed, const ProcessTrace&)> on_trace;
};

struct VerificationReport {
    EnvelopeSide side = EnvelopeSide::upper;
    std::int64_t trials = 0;
    std::uint64_t seed = 0;
    std::int64_t steps = 0;  ///< floor(sigma n)
    /// Trials whose hypothesis audit failed; excluded from the comparison.
    std::int64_t audit_failures = 0;
    std::int64_t clean_trials = 0;
    /// Clean trials that left the envelope at some i <= min{I, sigma n}.
    std::int64_t violations = 0;
    /// Envelope exits counted over every trial, audited or not.
    std::int64_t violations_all = 0;
    std::int64_t stopped_trials = 0;
    std::int64_t truncated_trials = 0;  ///< process errors cut the trace short
    double empirical_rate = 0.0;
    double ci_half_width = 0.0;
    double confidence = 0.99;
    ProbabilityBound theoretical_bound;
    double gamma = 0.0;
    bool verdict = false;  ///< empirical_rate - ci_half_width <= bound + gamma
    bool hypotheses_audited = true;
    bool variance_audited = true;
    double min_lambda = 0.0;
    TheoremParams params;
    /// worst_margin[i]: max over clean trials and j of the signed distance
    /// outside the envelope at step i (positive = exit); -inf when no clean
    /// trial reached step i.
    std::vector<double> worst_margin;
    std::optional<CooperativityReport> cooperativity;
    std::vector<std::string> warnings;
    /// Audit failures of the first failing trial, for diagnosis.
    std::vector<AuditFailure> sample_audit_failures;
};

/// Monte Carlo check of the upper envelope n y + 3 lambda e^{2Lt}.
/// Throws InvalidParams, ShapeMismatch, NotCooperative and LeftDomain.
VerificationReport verify_one_sided(const ProcessSpec& spec, const DriftSystem& system,
                                    const TheoremParams& params, const VerifyOptions& options);

/// Monte Carlo check of |Z - n y| <= 3 lambda e^{2Lt}. Additionally throws
/// SigmaInadmissible when the trajectory comes closer than g(t)/n to the
/// domain boundary before sigma.
VerificationReport verify_two_sided(const ProcessSpec& spec, const DriftSystem& system,
                                    const TheoremParams& params, const VerifyOptions& options);

/// Same rule as the report's verdict, exposed for tests.
bool verdict_rule(double empirical_rate, double ci_half_width, double bound, double gamma);

struct ComparisonOptions {
    double delta = 0.0;  ///< allowed perturbation in the data and the drift
    /// Slack schedule s(t) >= 0 subtracted from the perturbed drift; empty = 0.
    std::function<double(double)> slack;
    /// Achieved drift perturbation delta' (<= delta); defaults to delta.
    std::optional<double> perturbation;
    double tolerance = 1e-9;
    bool allow_noncooperative = false;
    std::int64_t cooperativity_budget = 20000;
    std::uint64_t seed = 0;
};

struct ComparisonReport {
    /// max over grid points and j of z_j(t) - y_j(t) - delta e^{Lt}
    double max_margin = 0.0;
    double argmax_t = 0.0;
    std::size_t argmax_variable = 0;
    double tolerance = 0.0;
    bool holds = false;  ///< max_margin <= tolerance
    bool cooperative = true;
    bool overridden = false;  ///< ran although the system is not cooperative
    std::optional<CooperativityWitness> witness;
    std::vector<double> grid;
    std::vector<double> margins;  ///< per grid point, max over j
};

/// Integrates y' = f(t, y) from y0 and z' = f(t, z) - s(t) + delta' from z0
/// on [0, sigma] with the same step and compares them on the grid.
/// Throws NotCooperative unless the override is set, and
/// std::invalid_argument when z0 > y0 + delta somewhere.
ComparisonReport check_comparison(const DriftSystem& system, const std::vector<double>& z0,
                                  const std::vector<double>& y0, double sigma, double h,
                                  const ComparisonOptions& options = {});

}  // namespace dem

#include "dem/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dem/errors.hpp"

namespace dem {

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
    double lo = -40.0;
    double hi = 40.0;
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
        (cdf < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double confidence) {
    if (trials < 0 || successes < 0 || successes > trials) {
        throw std::invalid_argument("wilson_interval: need 0 <= successes <= trials");
    }
    WilsonInterval w;
    w.z = normal_quantile(confidence);
    if (trials == 0) return w;
    const double t = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / t;
    const double z2 = w.z * w.z;
    const double centre = p + z2 / (2.0 * t);
    const double spread = w.z * std::sqrt(p * (1.0 - p) / t + z2 / (4.0 * t * t));
    const double denom = 1.0 + z2 / t;
    w.estimate = p;
    w.lower = std::max(0.0, (centre - spread) / denom);
    w.upper = std::min(1.0, (centre + spread) / denom);
    w.half_width = std::max(0.0, p - w.lower);
    return w;
}

std::string to_string(AuditMode mode) {
    switch (mode) {
        case AuditMode::always: return "always";
        case AuditMode::inside_envelope: return "inside-envelope";
        case AuditMode::critical_interval: return "critical-interval";
    }
    return "always";
}

AuditMode audit_mode_from_string(const std::string& name) {
    if (name == "always") return AuditMode::always;
    if (name == "inside-envelope") return AuditMode::inside_envelope;
    if (name == "critical-interval") return AuditMode::critical_interval;
    throw std::invalid_argument("unknown audit mode: " + name);
}

namespace {

double slack(double tolerance, double scale) { return tolerance * std::max(1.0, std::fabs(scale)); }

// Signed distance of Z(i) outside the envelope, maximized over j.
double envelope_margin(const ProcessTrace& trace, const Envelope& env, std::size_t i) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < trace.dimension(); ++j) {
        const double z = trace.values[j][i];
        if (!env.upper.empty()) worst = std::max(worst, z - env.upper[j][i]);
        if (!env.lower.empty()) worst = std::max(worst, env.lower[j][i] - z);
    }
    return worst;
}

}  // namespace

AuditResult audit_conditions(const ProcessTrace& trace, const DriftSystem& system,
                             const TheoremParams& params, const Trajectory& trajectory,
                             const Envelope* envelope, const AuditOptions& options) {
    const std::size_t a = trace.dimension();
    if (a != system.dimension() || trajectory.dimension() != a) {
        throw ShapeMismatch("audit_conditions: trace, system and trajectory dimensions differ");
    }
    if (trace.length() != static_cast<std::size_t>(trace.stop_step) + 1) {
        throw ShapeMismatch("audit_conditions: trace length does not match its stop step");
    }
    if (options.mode != AuditMode::always && envelope == nullptr) {
        throw std::invalid_argument("audit_conditions: this mode needs the envelope");
    }
    const std::int64_t limit = std::min(trace.stop_step, horizon_steps(params.sigma, params.n));
    if (envelope != nullptr && (envelope->dimension() != a || envelope->steps < limit)) {
        throw ShapeMismatch("audit_conditions: envelope does not cover the trace");
    }

    AuditResult result;
    result.trend_audited = trace.exact_drifts;
    result.variance_audited = trace.second_moments.has_value();
    const double n = static_cast<double>(params.n);
    const double tol = options.tolerance;

    auto fail = [&](const char* what, std::int64_t step, std::size_t j, double observed, double bound) {
        result.passed = false;
        ++result.failure_count;
        if (result.failures.size() < options.max_recorded_failures) {
            result.failures.push_back({what, step, j, observed, bound});
        }
    };

    for (std::size_t j = 0; j < a; ++j) {
        const double z0 = trace.values[j][0];
        const double c0 = n * trajectory.values.front()[j];
        const double excess = options.side == EnvelopeSide::upper       ? z0 - c0
                              : options.side == EnvelopeSide::lower     ? c0 - z0
                                                                        : std::fabs(z0 - c0);
        if (excess > params.lambda + slack(tol, c0 + params.lambda)) {
            fail("initial", 0, j, excess, params.lambda);
        }
    }

    std::vector<double> y(a), f(a);
    for (std::int64_t i = 0; i < limit; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (options.mode != AuditMode::always && envelope_margin(trace, *envelope, ii) > 0.0) break;
        ++result.steps_checked;

        for (std::size_t j = 0; j < a; ++j) {
            const double dz = trace.values[j][ii + 1] - trace.values[j][ii];
            if (std::fabs(dz) > params.beta + slack(tol, params.beta)) {
                fail("boundedness", i, j, std::fabs(dz), params.beta);
            }
            if (result.variance_audited) {
                const double m2 = (*trace.second_moments)[j][ii];
                if (m2 > params.b + slack(tol, params.b)) fail("variance", i, j, m2, params.b);
            }
        }

        const double t = static_cast<double>(i) / n;
        for (std::size_t j = 0; j < a; ++j) y[j] = trace.values[j][ii] / n;
        const bool in_domain = system.domain().contains(t, y);
        if (!in_domain) {
            // The two-sided Trend condition only applies inside the domain.
            if (options.side != EnvelopeSide::two_sided) fail("domain", i, 0, t, 0.0);
            continue;
        }
        if (!result.trend_audited) continue;
        system.evaluate_unchecked(t, y, f);
        for (std::size_t j = 0; j < a; ++j) {
            if (options.mode == AuditMode::critical_interval) {
                const double centre = envelope->center[j][ii];
                if (trace.values[j][ii] < centre) continue;
            }
            const double drift = trace.drifts[j][ii];
            const double allowed = params.delta + slack(tol, f[j] + params.delta);
            switch (options.side) {
                case EnvelopeSide::upper:
                    if (drift - f[j] > allowed) fail("trend", i, j, drift - f[j], params.delta);
                    break;
                case EnvelopeSide::lower:
                    if (f[j] - drift > allowed) fail("trend", i, j, f[j] - drift, params.delta);
                    break;
                case EnvelopeSide::two_sided:
                    if (std::fabs(drift - f[j]) > allowed) {
                        fail("trend", i, j, std::fabs(drift - f[j]), params.delta);
                    }
                    break;
            }
        }
    }
    return result;
}

bool verdict_rule(double empirical_rate, double ci_half_width, double bound, double gamma) {
    return empirical_rate - ci_half_width <= bound + gamma;
}

namespace {

// Per-worker accumulator. Every field combines with an order-insensitive
// operation so the reduction does not depend on thread scheduling.
struct Partial {
    std::int64_t audit_failures = 0;
    std::int64_t violations = 0;
    std::int64_t violations_all = 0;
    std::int64_t stopped = 0;
    std::int64_t truncated = 0;
    bool drifts_exact = true;
    bool moments_known = true;
    std::vector<double> worst_margin;
    std::int64_t first_failing_trial = std::numeric_limits<std::int64_t>::max();
    std::vector<AuditFailure> first_failures;
    std::int64_t first_error_trial = std::numeric_limits<std::int64_t>::max();
    std::exception_ptr error;
};

VerificationReport run_verification(const ProcessSpec& spec_in, const DriftSystem& system,
                                    const TheoremParams& params_in, const VerifyOptions& options,
                                    EnvelopeSide side) {
    if (options.trials < 0) throw std::invalid_argument("trials must be nonnegative");
    if (!(options.gamma >= 0.0 && options.gamma <= 1.0)) {
        throw std::invalid_argument("gamma must lie in [0, 1]");
    }
    if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
        throw std::invalid_argument("confidence must lie in (0, 1)");
    }

    VerificationReport report;
    report.side = side;
    report.trials = options.trials;
    report.seed = options.seed;
    report.gamma = options.gamma;
    report.confidence = options.confidence;

    const std::size_t a = system.dimension();
    if (spec_in.dimension != a || static_cast<std::size_t>(params_in.a) != a) {
        throw ShapeMismatch("process, system and parameter dimensions differ");
    }
    if (spec_in.n != params_in.n) throw ShapeMismatch("process and parameters disagree on n");

    TheoremParams params = params_in;
    if (params.L != system.lipschitz() || params.B != system.bound()) {
        std::ostringstream msg;
        msg << "parameters carried L=" << params.L << ", B=" << params.B
            << "; using the system's declared L=" << system.lipschitz() << ", B=" << system.bound();
        report.warnings.push_back(msg.str());
        params.L = system.lipschitz();
        params.B = system.bound();
    }
    const ParamValidation validation = validate_params(params);
    report.min_lambda = validation.min_lambda;
    if (!validation.ok) throw InvalidParams(validation.reason, validation.min_lambda);
    report.params = params;

    if (side != EnvelopeSide::two_sided) {
        CooperativityReport coop;
        if (system.declared_cooperative().has_value()) {
            coop.cooperative = *system.declared_cooperative();
        } else {
            coop = check_cooperative(system, options.cooperativity_budget, options.seed);
        }
        report.cooperativity = coop;
        if (!coop.cooperative) {
            if (!options.allow_noncooperative) {
                throw NotCooperative("the drift system is not cooperative; the one-sided theorem does not apply");
            }
            report.warnings.push_back("system is not cooperative; run forced by override");
        }
    }

    const double est_L = estimate_lipschitz(system, options.constant_budget, options.seed);
    const double est_B = estimate_bound(system, options.constant_budget, options.seed);
    if (est_L > system.lipschitz() * (1.0 + 1e-9) + 1e-12) {
        std::ostringstream msg;
        msg << "sampled Lipschitz quotient " << est_L << " exceeds declared L=" << system.lipschitz();
        report.warnings.push_back(msg.str());
    }
    if (est_B > system.bound() * (1.0 + 1e-9) + 1e-12) {
        std::ostringstream msg;
        msg << "sampled |f| " << est_B << " exceeds declared B=" << system.bound();
        report.warnings.push_back(msg.str());
    }

    const std::int64_t steps = horizon_steps(params.sigma, params.n);
    report.steps = steps;
    ProcessSpec spec = spec_in;
    if (spec.horizon != steps) {
        std::ostringstream msg;
        msg << "process horizon " << spec.horizon << " replaced by floor(sigma n) = " << steps;
        report.warnings.push_back(msg.str());
        spec.horizon = steps;
    }

    const double n = static_cast<double>(params.n);
    std::vector<double> y0;
    if (options.y0) {
        y0 = *options.y0;
        if (y0.size() != a) throw ShapeMismatch("y0 has the wrong dimension");
    } else {
        Philox4x32 probe_rng(options.seed);
        auto probe = spec.init(probe_rng);
        y0.assign(a, 0.0);
        probe->observe(y0);
        for (double& v : y0) v /= n;
    }

    double h = options.ode_step;
    if (h <= 0.0) {
        const double per_unit = std::max(1.0, std::ceil(1000.0 / n));
        h = 1.0 / (n * per_unit);
    }
    const Trajectory trajectory = integrate(system, y0, params.sigma, std::min(h, params.sigma));

    if (side == EnvelopeSide::two_sided) {
        const double admissible = admissible_sigma(system, trajectory, params);
        if (admissible < params.sigma) {
            std::ostringstream msg;
            msg << "trajectory comes within g(t)/n of the domain boundary at t=" << admissible;
            throw SigmaInadmissible(msg.str(), admissible);
        }
    }

    const Envelope envelope = build_envelope(trajectory, params, side);
    report.theoretical_bound = failure_probability(params);

    AuditOptions audit_options;
    audit_options.mode = options.audit_mode;
    audit_options.side = side;

    const unsigned threads = std::max(1u, options.threads);
    std::vector<Partial> partials(threads);
    std::atomic<std::int64_t> next{0};
    std::mutex callback_lock;

    auto worker = [&](Partial& part) {
        part.worst_margin.assign(static_cast<std::size_t>(steps) + 1,
                                 -std::numeric_limits<double>::infinity());
        for (;;) {
            const std::int64_t k = next.fetch_add(1);
            if (k >= options.trials) break;
            const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(k);
            try {
                const ProcessTrace trace = run_trace(spec, seed);
                if (options.on_trace) {
                    std::lock_guard<std::mutex> guard(callback_lock);
                    options.on_trace(k, seed, trace);
                }
                if (trace.stopped) ++part.stopped;
                if (!trace.diagnostic.empty()) ++part.truncated;
                part.drifts_exact = part.drifts_exact && trace.exact_drifts;
                part.moments_known = part.moments_known && trace.second_moments.has_value();

                const AuditResult audit =
                    audit_conditions(trace, system, params, trajectory, &envelope, audit_options);
                const auto upto = static_cast<std::size_t>(std::min(trace.stop_step, steps));
                bool exited = false;
                for (std::size_t i = 0; i <= upto; ++i) {
                    const double m = envelope_margin(trace, envelope, i);
                    if (m > 0.0) exited = true;
                    if (audit.passed) part.worst_margin[i] = std::max(part.worst_margin[i], m);
                }
                if (exited) ++part.violations_all;
                if (!audit.passed) {
                    ++part.audit_failures;
                    if (k < part.first_failing_trial) {
                        part.first_failing_trial = k;
                        part.first_failures = audit.failures;
                    }
                } else if (exited) {
                    ++part.violations;
                }
            } catch (...) {
                if (k < part.first_error_trial) {
                    part.first_error_trial = k;
                    part.error = std::current_exception();
                }
            }
        }
    };

    if (threads == 1) {
        worker(partials[0]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, std::ref(partials[w]));
        for (auto& th : pool) th.join();
    }

    report.worst_margin.assign(static_cast<std::size_t>(steps) + 1,
                               -std::numeric_limits<double>::infinity());
    std::int64_t first_failing = std::numeric_limits<std::int64_t>::max();
    std::int64_t first_error = std::numeric_limits<std::int64_t>::max();
    std::exception_ptr error;
    for (const Partial& part : partials) {
        report.audit_failures += part.audit_failures;
        report.violations += part.violations;
        report.violations_all += part.violations_all;
        report.stopped_trials += part.stopped;
        report.truncated_trials += part.truncated;
        report.hypotheses_audited = report.hypotheses_audited && part.drifts_exact;
        report.variance_audited = report.variance_audited && part.moments_known;
        for (std::size_t i = 0; i < part.worst_margin.size(); ++i) {
            report.worst_margin[i] = std::max(report.worst_margin[i], part.worst_margin[i]);
        }
        if (part.first_failing_trial < first_failing) {
            first_failing = part.first_failing_trial;
            report.sample_audit_failures = part.first_failures;
        }
        if (part.first_error_trial < first_error) {
            first_error = part.first_error_trial;
            error = part.error;
        }
    }
    if (error) std::rethrow_exception(error);

    if (!report.hypotheses_audited) {
        report.warnings.push_back("exact drifts unavailable: hypotheses unaudited, result is observational");
    }
    if (!report.variance_audited) {
        report.warnings.push_back("second moments unavailable: variance bound b unverified");
    }
    report.clean_trials = report.trials - report.audit_failures;
    const WilsonInterval ci =
        wilson_interval(report.violations, report.clean_trials, report.confidence);
    report.empirical_rate = ci.estimate;
    report.ci_half_width = ci.half_width;
    report.verdict = verdict_rule(report.empirical_rate, report.ci_half_width,
                                  report.theoretical_bound.value, report.gamma);
    return report;
}

}  // namespace

VerificationReport verify_one_sided(const ProcessSpec& spec, const DriftSystem& system,
                                    const TheoremParams& params, const VerifyOptions& options) {
    return run_verification(spec, system, params, options, EnvelopeSide::upper);
}

VerificationReport verify_two_sided(const ProcessSpec& spec, const DriftSystem& system,
                                    const TheoremParams& params, const VerifyOptions& options) {
    return run_verification(spec, system, params, options, EnvelopeSide::two_sided);
}

ComparisonReport check_comparison(const DriftSystem& system, const std::vector<double>& z0,
                                  const std::vector<double>& y0, double sigma, double h,
                                  const ComparisonOptions& options) {
    const std::size_t a = system.dimension();
    if (z0.size() != a || y0.size() != a) throw ShapeMismatch("check_comparison: initial values have the wrong dimension");
    if (!(options.delta >= 0.0)) throw std::invalid_argument("check_comparison: delta must be >= 0");
    const double perturbation = options.perturbation.value_or(options.delta);
    if (!(perturbation >= 0.0 && perturbation <= options.delta)) {
        throw std::invalid_argument("check_comparison: need 0 <= perturbation <= delta");
    }
    for (std::size_t j = 0; j < a; ++j) {
        if (z0[j] > y0[j] + options.delta) {
            throw std::invalid_argument("check_comparison: z0 must not exceed y0 + delta");
        }
    }

    ComparisonReport report;
    report.tolerance = options.tolerance;
    if (system.declared_cooperative().has_value() && *system.declared_cooperative()) {
        report.cooperative = true;
    } else {
        const CooperativityReport coop =
            check_cooperative(system, options.cooperativity_budget, options.seed);
        report.cooperative = coop.cooperative && system.declared_cooperative().value_or(true);
        report.witness = coop.witness;
    }
    if (!report.cooperative) {
        if (!options.allow_noncooperative) {
            throw NotCooperative("check_comparison: the system is not cooperative");
        }
        report.overridden = true;
    }

    const Trajectory y = integrate(system, y0, sigma, h);
    Trajectory z;
    if (perturbation == 0.0 && !options.slack) {
        z = integrate(system, z0, sigma, h);
    } else {
        auto s = options.slack;
        const DriftSystem perturbed = system.shifted([s, perturbation](double t) {
            return perturbation - (s ? s(t) : 0.0);
        });
        z = integrate(perturbed, z0, sigma, h);
    }

    report.grid = y.grid;
    report.margins.resize(y.size());
    report.max_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double t = y.grid[k];
        const double allowance = options.delta * std::exp(system.lipschitz() * t);
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < a; ++j) {
            const double m = z.values[k][j] - y.values[k][j] - allowance;
            if (m > worst) worst = m;
            if (m > report.max_margin) {
                report.max_margin = m;
                report.argmax_t = t;
                report.argmax_variable = j;
            }
        }
        report.margins[k] = worst;
    }
    report.holds = report.max_margin <= report.tolerance;
    return report;
}

}  // namespace dem

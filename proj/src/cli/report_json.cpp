#include "cli/report_json.hpp"

#include <cmath>

namespace dem::cli {

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& values) {
    json out = json::array();
    for (double v : values) out.push_back(number(v));
    return out;
}

}  // namespace

json to_json(const TheoremParams& p) {
    return {{"n", p.n},         {"a", p.a},         {"beta", number(p.beta)},
            {"b", number(p.b)}, {"lambda", number(p.lambda)}, {"delta", number(p.delta)},
            {"sigma", number(p.sigma)}, {"L", number(p.L)},   {"B", number(p.B)}};
}

json to_json(const ProbabilityBound& bound) {
    return {{"raw", number(bound.raw)},
            {"value", number(bound.value)},
            {"vacuous", !(bound.raw < 1.0)},
            {"lambda_sq", number(bound.lambda_sq)},
            {"b_sigma_n", number(bound.b_sigma_n)},
            {"beta_lambda", number(bound.beta_lambda)}};
}

json to_json(const CooperativityWitness& w) {
    return {{"component", w.component + 1},
            {"coordinate", w.coordinate},
            {"high_point", numbers(w.high_point)},
            {"low_point", numbers(w.low_point)},
            {"f_high", number(w.f_high)},
            {"f_low", number(w.f_low)}};
}

json to_json(const CooperativityReport& report) {
    json out = {{"cooperative", report.cooperative}, {"samples_used", report.samples_used}};
    out["witness"] = report.witness ? to_json(*report.witness) : json(nullptr);
    return out;
}

json to_json(const AuditFailure& f) {
    return {{"condition", f.condition},
            {"step", f.step},
            {"variable", f.variable + 1},
            {"observed", number(f.observed)},
            {"limit", number(f.limit)}};
}

json to_json(const VerificationReport& r) {
    json out;
    out["side"] = to_string(r.side);
    out["trials"] = r.trials;
    out["seed"] = r.seed;
    out["steps"] = r.steps;
    out["violations"] = r.violations;
    out["violations_all"] = r.violations_all;
    out["audit_failures"] = r.audit_failures;
    out["clean_trials"] = r.clean_trials;
    out["stopped_trials"] = r.stopped_trials;
    out["truncated_trials"] = r.truncated_trials;
    out["empirical_rate"] = number(r.empirical_rate);
    out["ci_half_width"] = number(r.ci_half_width);
    out["confidence"] = number(r.confidence);
    out["theoretical_bound"] = to_json(r.theoretical_bound);
    out["gamma"] = number(r.gamma);
    out["verdict"] = r.verdict ? "pass" : "fail";
    out["hypotheses_audited"] = r.hypotheses_audited;
    out["variance_audited"] = r.variance_audited;
    out["min_lambda"] = number(r.min_lambda);
    out["params"] = to_json(r.params);
    out["worst_margin"] = numbers(r.worst_margin);
    out["cooperativity"] = r.cooperativity ? to_json(*r.cooperativity) : json(nullptr);
    out["warnings"] = r.warnings;
    json failures = json::array();
    for (const auto& f : r.sample_audit_failures) failures.push_back(to_json(f));
    out["sample_audit_failures"] = failures;
    return out;
}

json to_json(const ComparisonReport& r) {
    json out;
    out["max_margin"] = number(r.max_margin);
    out["argmax_t"] = number(r.argmax_t);
    out["argmax_variable"] = r.argmax_variable + 1;
    out["tolerance"] = number(r.tolerance);
    out["holds"] = r.holds;
    out["cooperative"] = r.cooperative;
    out["overridden"] = r.overridden;
    out["witness"] = r.witness ? to_json(*r.witness) : json(nullptr);
    return out;
}

}  // namespace dem::cli

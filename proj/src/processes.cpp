#include "dem/processes.hpp"

#include <algorithm>
#include <bit>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "dem/csv.hpp"
#include "dem/envelope.hpp"
#include "dem/errors.hpp"

namespace dem {

namespace {

std::int64_t choose2(std::int64_t k) { return k < 2 ? 0 : k * (k - 1) / 2; }

}  // namespace

GraphProcessState::GraphProcessState(int n)
    : n_(n), adjacency_(static_cast<std::size_t>(std::max(n, 0))), matched_(static_cast<std::size_t>(std::max(n, 0)), 0) {
    if (n < 2) throw std::invalid_argument("GraphProcessState: n >= 2 required");
}

std::int64_t GraphProcessState::total_pairs() const noexcept { return choose2(n_); }

std::uint64_t GraphProcessState::key(int u, int v) const noexcept {
    if (u > v) std::swap(u, v);
    return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n_) + static_cast<std::uint64_t>(v);
}

bool GraphProcessState::has_edge(int u, int v) const { return present_.count(key(u, v)) != 0; }

std::int64_t GraphProcessState::matchable_unseen_pairs() const noexcept {
    return choose2(n_ - 2 * matching_size()) - unmatched_present_;
}

bool GraphProcessState::add_edge(Edge e, bool match) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.u == e.v || e.u < 0 || e.v >= n_) throw std::invalid_argument("add_edge: invalid pair");
    if (!present_.insert(key(e.u, e.v)).second) throw std::invalid_argument("add_edge: edge already present");
    arrivals_.push_back(e);

    const auto u = static_cast<std::size_t>(e.u);
    const auto v = static_cast<std::size_t>(e.v);
    const bool both_free = !matched_[u] && !matched_[v];
    const bool grows = match && both_free;
    if (grows) {
        for (std::size_t x : {u, v}) {
            for (int w : adjacency_[x]) {
                if (!matched_[static_cast<std::size_t>(w)]) --unmatched_present_;
            }
        }
        matched_[u] = 1;
        matched_[v] = 1;
        matching_.push_back(e);
    } else if (both_free) {
        ++unmatched_present_;
    }
    adjacency_[u].push_back(e.v);
    adjacency_[v].push_back(e.u);
    return grows;
}

Policy always_accept_policy() {
    return {"always-accept", [](const GraphProcessState&, Edge, std::uint64_t) { return true; },
            [](const GraphProcessState&) { return 1.0; }};
}

Policy always_reject_policy() {
    return {"always-reject", [](const GraphProcessState&, Edge, std::uint64_t) { return false; },
            [](const GraphProcessState&) { return 0.0; }};
}

Policy parity_thinned_policy() {
    return {"parity-thinned",
            [](const GraphProcessState&, Edge, std::uint64_t aux) { return std::popcount(aux) % 2 == 0; },
            [](const GraphProcessState&) { return 0.5; }};
}

Policy policy_by_name(const std::string& name) {
    if (name == "always-accept" || name == "greedy") return always_accept_policy();
    if (name == "always-reject") return always_reject_policy();
    if (name == "parity-thinned") return parity_thinned_policy();
    throw std::invalid_argument("unknown policy: " + name);
}

std::vector<std::string> builtin_policy_names() {
    return {"always-accept", "always-reject", "parity-thinned"};
}

Edge draw_unseen_edge(const GraphProcessState& state, Philox4x32& rng) {
    if (state.step() >= state.total_pairs()) {
        throw ExhaustedEdges("draw_unseen_edge: every pair is already present");
    }
    const auto n = static_cast<std::uint64_t>(state.n());
    for (;;) {
        const int u = static_cast<int>(rng.uniform_below(n));
        int v = static_cast<int>(rng.uniform_below(n - 1));
        if (v >= u) ++v;
        if (!state.has_edge(u, v)) return u < v ? Edge{u, v} : Edge{v, u};
    }
}

StepOutcome online_matcher_step(GraphProcessState& state, const Policy& policy, Philox4x32& rng) {
    StepOutcome outcome;
    outcome.edge = draw_unseen_edge(state, rng);
    const std::uint64_t aux = rng.next_u64();
    outcome.matchable = !state.is_matched(outcome.edge.u) && !state.is_matched(outcome.edge.v);
    const bool accept = outcome.matchable && policy.accept(state, outcome.edge, aux);
    outcome.matched = state.add_edge(outcome.edge, accept);
    return outcome;
}

StepOutcome greedy_matching_step(GraphProcessState& state, Philox4x32& rng) {
    static const Policy greedy = always_accept_policy();
    return online_matcher_step(state, greedy, rng);
}

double greedy_exact_drift(const GraphProcessState& state) {
    const std::int64_t pool = state.total_pairs() - state.step();
    if (pool <= 0) return 0.0;
    return static_cast<double>(choose2(state.n() - 2 * state.matching_size())) /
           static_cast<double>(pool);
}

double online_exact_drift(const GraphProcessState& state, const Policy& policy) {
    const std::int64_t pool = state.total_pairs() - state.step();
    if (pool <= 0) return 0.0;
    return policy.acceptance_rate(state) * static_cast<double>(state.matchable_unseen_pairs()) /
           static_cast<double>(pool);
}

void bounded_walk_step(BoundedWalkState& state, Philox4x32& rng) {
    state.z += (rng.next_u32() & 1u) ? 1.0 : -1.0;
}

namespace {

class GraphMatchingProcess final : public Process {
public:
    GraphMatchingProcess(int n, Policy policy) : state_(n), policy_(std::move(policy)) {}

    std::size_t dimension() const override { return 1; }
    void observe(std::span<double> z) const override {
        z[0] = static_cast<double>(state_.matching_size());
    }
    bool exact_drift(std::span<double> out) const override {
        if (!policy_.acceptance_rate) return false;
        out[0] = online_exact_drift(state_, policy_);
        return true;
    }
    // dZ is 0 or 1, so E[dZ^2 | H] = E[dZ | H].
    bool exact_second_moment(std::span<double> out) const override { return exact_drift(out); }
    void step(Philox4x32& rng) override { online_matcher_step(state_, policy_, rng); }

private:
    GraphProcessState state_;
    Policy policy_;
};

class BoundedWalkProcess final : public Process {
public:
    explicit BoundedWalkProcess(double z0) { state_.z = z0; }

    std::size_t dimension() const override { return 1; }
    void observe(std::span<double> z) const override { z[0] = state_.z; }
    bool exact_drift(std::span<double> out) const override {
        out[0] = 0.0;
        return true;
    }
    bool exact_second_moment(std::span<double> out) const override {
        out[0] = 1.0;
        return true;
    }
    void step(Philox4x32& rng) override { bounded_walk_step(state_, rng); }

private:
    BoundedWalkState state_;
};

}  // namespace

ProcessSpec online_matcher_spec(int n, double c, Policy policy) {
    if (n < 2 || !(c > 0.0)) throw std::invalid_argument("online_matcher_spec: n >= 2, c > 0");
    ProcessSpec spec;
    spec.name = "online-matcher/" + policy.name;
    spec.dimension = 1;
    spec.n = n;
    spec.horizon = horizon_steps(c, n);
    spec.init = [n, policy = std::move(policy)](Philox4x32&) {
        return std::make_unique<GraphMatchingProcess>(n, policy);
    };
    return spec;
}

ProcessSpec greedy_matching_spec(int n, double c) {
    ProcessSpec spec = online_matcher_spec(n, c, always_accept_policy());
    spec.name = "greedy-matching";
    return spec;
}

ProcessSpec bounded_walk_spec(std::int64_t n, std::int64_t horizon, double z0) {
    if (n < 1 || horizon < 0) throw std::invalid_argument("bounded_walk_spec: n >= 1, horizon >= 0");
    ProcessSpec spec;
    spec.name = "bounded-walk";
    spec.dimension = 1;
    spec.n = n;
    spec.horizon = horizon;
    spec.init = [z0](Philox4x32&) { return std::make_unique<BoundedWalkProcess>(z0); };
    return spec;
}

ProcessTrace run_trace(const ProcessSpec& spec, std::uint64_t seed) {
    if (!spec.init) throw std::invalid_argument("run_trace: spec has no init");
    Philox4x32 rng(seed);
    std::unique_ptr<Process> process = spec.init(rng);
    const std::size_t a = spec.dimension;
    if (process->dimension() != a) throw ShapeMismatch("run_trace: process dimension differs from spec");

    ProcessTrace trace;
    trace.n = spec.n;
    trace.horizon = spec.horizon;
    trace.values.assign(a, {});
    trace.drifts.assign(a, {});
    std::vector<std::vector<double>> second(a);
    bool have_second = true;

    std::vector<double> z(a), drift(a), moment(a);
    process->observe(z);
    for (std::size_t j = 0; j < a; ++j) trace.values[j].push_back(z[j]);

    std::int64_t i = 0;
    for (;; ++i) {
        if (spec.stop && spec.stop(i, z)) {
            trace.stopped = true;
            break;
        }
        if (i >= spec.horizon) break;

        if (process->exact_drift(drift)) {
            for (std::size_t j = 0; j < a; ++j) trace.drifts[j].push_back(drift[j]);
        } else {
            trace.exact_drifts = false;
            for (std::size_t j = 0; j < a; ++j) trace.drifts[j].push_back(0.0);
        }
        const bool moment_known = process->exact_second_moment(moment);
        have_second = have_second && moment_known;
        if (moment_known) {
            for (std::size_t j = 0; j < a; ++j) second[j].push_back(moment[j]);
        }

        try {
            process->step(rng);
        } catch (const std::exception& e) {
            for (auto& d : trace.drifts) d.pop_back();
            if (moment_known) {
                for (auto& s : second) s.pop_back();
            }
            trace.diagnostic = e.what();
            break;
        }
        process->observe(z);
        for (std::size_t j = 0; j < a; ++j) trace.values[j].push_back(z[j]);
    }
    trace.stop_step = i;
    if (have_second) trace.second_moments = std::move(second);
    return trace;
}

void write_trace_csv(std::ostream& out, const ProcessTrace& trace) {
    const std::size_t a = trace.dimension();
    out << 'i';
    for (std::size_t j = 1; j <= a; ++j) out << ",Z_" << j;
    for (std::size_t j = 1; j <= a; ++j) out << ",drift_" << j;
    out << ",stopped\n";
    const std::size_t len = trace.length();
    for (std::size_t i = 0; i < len; ++i) {
        out << i;
        for (std::size_t j = 0; j < a; ++j) out << ',' << format_double(trace.values[j][i]);
        for (std::size_t j = 0; j < a; ++j) {
            out << ',';
            if (i < trace.drifts[j].size()) out << format_double(trace.drifts[j][i]);
        }
        const bool stopped_here = trace.stopped && static_cast<std::int64_t>(i) == trace.stop_step;
        out << ',' << (stopped_here ? 1 : 0) << '\n';
    }
}

}  // namespace dem

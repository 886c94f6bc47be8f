#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "dem/martingale.hpp"
#include "dem/rng.hpp"

namespace dem {

/// A running realization of a discrete process. Implementations compute
/// drifts from their own realized history only, which keeps them adapted.
class Process {
public:
    virtual ~Process() = default;

    virtual std::size_t dimension() const = 0;
    /// Writes the current Z_1..Z_a.
    virtual void observe(std::span<double> z) const = 0;
    /// Writes E[dZ_j | H_i]; returns false when the process cannot compute it.
    virtual bool exact_drift(std::span<double> out) const = 0;
    /// Writes E[(dZ_j)^2 | H_i]; returns false when unavailable.
    virtual bool exact_second_moment(std::span<double>) const { return false; }
    virtual void step(Philox4x32& rng) = 0;
};

/// Behavioral contract of a process family: dimension, scaling, horizon,
/// a factory for fresh realizations and an optional stopping rule.
struct ProcessSpec {
    std::string name;
    std::size_t dimension = 1;
    std::int64_t n = 1;
    std::int64_t horizon = 0;  ///< m = floor(sigma n)
    std::function<std::unique_ptr<Process>(Philox4x32& rng)> init;
    /// Stopping rule evaluated on the step index and the observed values at
    /// that step. Empty means "never stop".
    std::function<bool(std::int64_t step, std::span<const double> z)> stop;
};

struct Edge {
    int u = 0;
    int v = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Erdos-Renyi random graph process on [n] together with an online matching
/// built on it.
class GraphProcessState {
public:
    explicit GraphProcessState(int n);

    int n() const noexcept { return n_; }
    std::int64_t step() const noexcept { return static_cast<std::int64_t>(arrivals_.size()); }
    std::int64_t total_pairs() const noexcept;
    std::int64_t matching_size() const noexcept { return static_cast<std::int64_t>(matching_.size()); }
    bool is_matched(int v) const { return matched_[static_cast<std::size_t>(v)] != 0; }
    bool has_edge(int u, int v) const;
    /// Present edges whose endpoints are both unmatched (always 0 for greedy).
    std::int64_t unmatched_present_edges() const noexcept { return unmatched_present_; }
    /// Unseen pairs whose endpoints are both unmatched.
    std::int64_t matchable_unseen_pairs() const noexcept;
    const std::vector<Edge>& matching() const noexcept { return matching_; }
    const std::vector<Edge>& arrivals() const noexcept { return arrivals_; }

    /// Appends an unseen edge; matches it when `match` is set and both
    /// endpoints are free. Returns whether the matching grew.
    bool add_edge(Edge e, bool match);

private:
    std::uint64_t key(int u, int v) const noexcept;

    int n_;
    std::unordered_set<std::uint64_t> present_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<char> matched_;
    std::vector<Edge> matching_;
    std::vector<Edge> arrivals_;
    std::int64_t unmatched_present_ = 0;
};

/// Online policy: a deterministic function of the history, the arriving
/// matchable edge and an auxiliary seeded word revealed with it.
struct Policy {
    std::string name;
    std::function<bool(const GraphProcessState&, Edge, std::uint64_t aux)> accept;
    /// P(accept | H_i, edge matchable); empty if unknown (drift unaudited).
    std::function<double(const GraphProcessState&)> acceptance_rate;
};

Policy always_accept_policy();
Policy always_reject_policy();
/// Accepts iff the auxiliary word has even parity: a fair coin per edge.
Policy parity_thinned_policy();
Policy policy_by_name(const std::string& name);
std::vector<std::string> builtin_policy_names();

struct StepOutcome {
    Edge edge;
    bool matchable = false;
    bool matched = false;
};

/// Draws e_{i+1} uniformly from the unseen pairs (rejection sampling).
/// Throws ExhaustedEdges when every pair is present.
Edge draw_unseen_edge(const GraphProcessState& state, Philox4x32& rng);

StepOutcome greedy_matching_step(GraphProcessState& state, Philox4x32& rng);
StepOutcome online_matcher_step(GraphProcessState& state, const Policy& policy, Philox4x32& rng);

/// binom(n - 2Y, 2) / (binom(n, 2) - i).
double greedy_exact_drift(const GraphProcessState& state);
/// rate * (unseen pairs between unmatched vertices) / (binom(n, 2) - i).
/// Equals greedy_exact_drift for greedy states and the always-accept policy.
double online_exact_drift(const GraphProcessState& state, const Policy& policy);

/// Symmetric +-1 walk: drift 0, second moment 1.
struct BoundedWalkState {
    double z = 0.0;
};
void bounded_walk_step(BoundedWalkState& state, Philox4x32& rng);

ProcessSpec greedy_matching_spec(int n, double c);
ProcessSpec online_matcher_spec(int n, double c, Policy policy);
ProcessSpec bounded_walk_spec(std::int64_t n, std::int64_t horizon, double z0 = 0.0);

/// Runs one realization for min{I, m} steps from Philox4x32(seed). Process
/// errors truncate the trace and are reported in `diagnostic`.
ProcessTrace run_trace(const ProcessSpec& spec, std::uint64_t seed);

/// `i,Z_1..Z_a,drift_1..drift_a,stopped`; the drift cells of the final row are empty.
void write_trace_csv(std::ostream& out, const ProcessTrace& trace);

}  // namespace dem

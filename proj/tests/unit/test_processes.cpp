#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "dem/errors.hpp"
#include "dem/processes.hpp"
#include "support/oracles.hpp"

using namespace dem;

TEST_CASE("two vertices: the only edge is matched") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        GraphProcessState s(2);
        Philox4x32 rng(seed);
        CHECK(greedy_exact_drift(s) == 1.0);
        const StepOutcome o = greedy_matching_step(s, rng);
        CHECK(o.matched);
        CHECK(s.matching_size() == 1);
        CHECK_THROWS_AS(greedy_matching_step(s, rng), ExhaustedEdges);
    }
}

TEST_CASE("hand-counted greedy drifts") {
    GraphProcessState s(4);
    s.add_edge({0, 1}, true);
    CHECK(greedy_exact_drift(s) == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
    s.add_edge({0, 2}, true);  // 0 is taken, so this edge cannot join the matching
    CHECK(s.matching_size() == 1);
    CHECK(greedy_exact_drift(s) == doctest::Approx(1.0 / 4.0).epsilon(1e-15));

    GraphProcessState t(10);
    t.add_edge({0, 1}, true);
    t.add_edge({2, 3}, true);
    t.add_edge({0, 2}, true);
    CHECK(t.step() == 3);
    CHECK(t.matching_size() == 2);
    CHECK(greedy_exact_drift(t) == doctest::Approx(15.0 / 42.0).epsilon(1e-15));
}

TEST_CASE("greedy drift equals brute-force enumeration along traces") {
    for (int n = 2; n <= 8; ++n) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            GraphProcessState s(n);
            Philox4x32 rng(seed);
            while (s.step() < s.total_pairs()) {
                const auto r = oracle::brute_force_greedy_drift(s);
                CHECK(std::fabs(greedy_exact_drift(s) - r.value()) <= 1e-12);
                const auto before = s.matching_size();
                greedy_matching_step(s, rng);
                const auto dy = s.matching_size() - before;
                CHECK((dy == 0 || dy == 1));
                CHECK(s.unmatched_present_edges() == 0);
            }
            CHECK(oracle::valid_matching(s));
        }
    }
}

TEST_CASE("online drift counts unseen matchable pairs exactly") {
    const Policy thinned = parity_thinned_policy();
    for (int n = 3; n <= 8; ++n) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            GraphProcessState s(n);
            Philox4x32 rng(seed);
            while (s.step() < s.total_pairs()) {
                const auto r = oracle::brute_force_greedy_drift(s);
                const double drift = online_exact_drift(s, thinned);
                CHECK(std::fabs(drift - 0.5 * r.value()) <= 1e-12);
                // Acceptance can only shrink the increment probability.
                CHECK(drift <= greedy_exact_drift(s) + 1e-15);
                online_matcher_step(s, thinned, rng);
                CHECK(oracle::valid_matching(s));
            }
        }
    }
}

TEST_CASE("always-reject keeps the matching empty") {
    GraphProcessState s(30);
    Philox4x32 rng(4);
    const Policy reject = always_reject_policy();
    for (int i = 0; i < 100; ++i) {
        CHECK(online_exact_drift(s, reject) == 0.0);
        const StepOutcome o = online_matcher_step(s, reject, rng);
        CHECK_FALSE(o.matched);
    }
    CHECK(s.matching_size() == 0);
    CHECK(s.unmatched_present_edges() == 100);
}

TEST_CASE("always-accept reproduces greedy exactly") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ProcessTrace g = run_trace(greedy_matching_spec(200, 1.0), seed);
        const ProcessTrace o = run_trace(online_matcher_spec(200, 1.0, always_accept_policy()), seed);
        CHECK(g.values == o.values);
        CHECK(g.drifts == o.drifts);
    }
}

TEST_CASE("parity thinning accepts about half of the matchable edges") {
    GraphProcessState s(4000);
    Philox4x32 rng(12);
    const Policy thinned = parity_thinned_policy();
    int matchable = 0, matched = 0;
    for (int i = 0; i < 4000; ++i) {
        const StepOutcome o = online_matcher_step(s, thinned, rng);
        matchable += o.matchable;
        matched += o.matched;
    }
    const double rate = static_cast<double>(matched) / matchable;
    const double se = std::sqrt(0.25 / matchable);
    CHECK(std::fabs(rate - 0.5) <= 5.0 * se);
}

TEST_CASE("unseen edges are drawn uniformly") {
    GraphProcessState base(5);
    base.add_edge({0, 1}, false);
    base.add_edge({2, 4}, false);
    std::map<std::pair<int, int>, int> counts;
    Philox4x32 rng(77);
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
        const Edge e = draw_unseen_edge(base, rng);
        CHECK(e.u < e.v);
        CHECK_FALSE(base.has_edge(e.u, e.v));
        ++counts[{e.u, e.v}];
    }
    REQUIRE(counts.size() == 8);
    const double p = 1.0 / 8.0;
    const double se = std::sqrt(p * (1 - p) / draws);
    for (const auto& [pair, c] : counts) {
        CHECK(std::fabs(static_cast<double>(c) / draws - p) <= 5.0 * se);
    }
}

TEST_CASE("run_trace stopping and reproducibility") {
    ProcessSpec spec = greedy_matching_spec(100, 1.0);
    CHECK(spec.horizon == 100);
    const ProcessTrace full = run_trace(spec, 1);
    CHECK(full.stop_step == 100);
    CHECK_FALSE(full.stopped);
    CHECK(full.length() == 101);
    CHECK(full.drifts[0].size() == 100);
    REQUIRE(full.second_moments.has_value());
    CHECK((*full.second_moments)[0] == full.drifts[0]);

    const ProcessTrace again = run_trace(spec, 1);
    CHECK(again.values == full.values);
    CHECK(again.drifts == full.drifts);

    spec.stop = [](std::int64_t, std::span<const double>) { return true; };
    const ProcessTrace immediate = run_trace(spec, 1);
    CHECK(immediate.stopped);
    CHECK(immediate.stop_step == 0);
    CHECK(immediate.length() == 1);
    CHECK(immediate.drifts[0].empty());

    spec.stop = [](std::int64_t, std::span<const double> z) { return z[0] >= 10.0; };
    const ProcessTrace capped = run_trace(spec, 1);
    CHECK(capped.stopped);
    CHECK(capped.values[0].back() == 10.0);
    CHECK(capped.values[0][capped.values[0].size() - 2] == 9.0);
}

TEST_CASE("process errors truncate the trace") {
    // Three vertices have three pairs; a horizon of 6 runs out of edges.
    const ProcessTrace t = run_trace(greedy_matching_spec(3, 2.0), 5);
    CHECK(t.stop_step == 3);
    CHECK(t.length() == 4);
    CHECK(t.drifts[0].size() == 3);
    CHECK_FALSE(t.diagnostic.empty());
    CHECK_FALSE(t.stopped);
}

TEST_CASE("greedy matching covers about a third of the vertices") {
    const ProcessTrace t = run_trace(greedy_matching_spec(1000, 1.0), 3);
    CHECK(std::fabs(t.values[0].back() / 1000.0 - 1.0 / 3.0) < 0.03);
}

TEST_CASE("bounded walk") {
    BoundedWalkState w;
    Philox4x32 rng(1);
    for (int i = 0; i < 100; ++i) {
        const double before = w.z;
        bounded_walk_step(w, rng);
        CHECK(std::fabs(w.z - before) == 1.0);
    }
    const ProcessSpec spec = bounded_walk_spec(100, 100, 3.0);
    double sum = 0.0;
    const int trials = 2000;
    for (int k = 0; k < trials; ++k) {
        const ProcessTrace t = run_trace(spec, static_cast<std::uint64_t>(k));
        CHECK(t.values[0][0] == 3.0);
        for (double d : t.drifts[0]) CHECK(d == 0.0);
        for (double m : (*t.second_moments)[0]) CHECK(m == 1.0);
        sum += t.values[0].back();
    }
    // sd of the mean is 10 / sqrt(2000).
    CHECK(std::fabs(sum / trials - 3.0) <= 5.0 * 10.0 / std::sqrt(trials));
}

TEST_CASE("trace csv") {
    ProcessSpec spec = bounded_walk_spec(10, 2);
    const ProcessTrace t = run_trace(spec, 0);
    std::ostringstream out;
    write_trace_csv(out, t);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "i,Z_1,drift_1,stopped");
    std::getline(in, line);
    CHECK(line == "0,0,0,0");
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line.rfind("2,", 0) == 0);
    CHECK(line.substr(line.size() - 3) == ",,0");
}

TEST_CASE("policies by name") {
    for (const auto& name : builtin_policy_names()) CHECK(policy_by_name(name).name == name);
    CHECK_THROWS_AS(policy_by_name("clairvoyant"), std::invalid_argument);
}

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dem {

struct Trajectory;

/// Closed axis-aligned box in (t, y_1, ..., y_a)-space. Coordinate 0 is time.
class Domain {
public:
    Domain(std::vector<double> lower, std::vector<double> upper);

    /// Number of coordinates, a + 1.
    std::size_t size() const noexcept { return lower_.size(); }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }

    bool contains(double t, std::span<const double> y) const noexcept;
    bool contains(std::span<const double> point) const noexcept;

    /// l-infinity distance from (t, y) to the box boundary, taken over the
    /// state coordinates y only; negative when y lies outside. Returns -inf
    /// when t itself is outside the time range.
    double state_boundary_distance(double t, std::span<const double> y) const noexcept;

private:
    std::vector<double> lower_;
    std::vector<double> upper_;
};

/// One drift component f_j(t, y).
using DriftComponent = std::function<double(double t, std::span<const double> y)>;

/// The right-hand side f_1..f_a of the limiting system together with its
/// domain and the declared constants: L (l-infinity Lipschitz) and B (sup
/// bound). Immutable after construction.
class DriftSystem {
public:
    DriftSystem(std::vector<DriftComponent> components, Domain domain, double lipschitz,
                double bound, std::string name = {},
                std::optional<bool> declared_cooperative = std::nullopt);

    std::size_t dimension() const noexcept { return components_.size(); }
    const Domain& domain() const noexcept { return domain_; }
    double lipschitz() const noexcept { return lipschitz_; }
    double bound() const noexcept { return bound_; }
    const std::string& name() const noexcept { return name_; }
    /// Analytic cooperativity claim supplied by the author of the system.
    std::optional<bool> declared_cooperative() const noexcept { return declared_cooperative_; }

    /// Evaluates every component without the domain check. Used for the
    /// intermediate Runge-Kutta stages.
    void evaluate_unchecked(double t, std::span<const double> y, std::span<double> out) const;
    double component(std::size_t j, double t, std::span<const double> y) const {
        return components_[j](t, y);
    }

    DriftSystem with_domain(Domain domain) const;
    DriftSystem with_constants(double lipschitz, double bound) const;
    /// System whose component j is f_j(t, y) + shift(t).
    DriftSystem shifted(std::function<double(double)> shift) const;

private:
    std::vector<DriftComponent> components_;
    Domain domain_;
    double lipschitz_;
    double bound_;
    std::string name_;
    std::optional<bool> declared_cooperative_;
};

/// (f_1(t,y), ..., f_a(t,y)). Throws PointOutsideDomain when (t, y) is not
/// in the system's domain.
std::vector<double> evaluate(const DriftSystem& system, double t, std::span<const double> y);

struct CooperativityWitness {
    std::size_t component = 0;       ///< j, 0-based
    std::size_t coordinate = 0;      ///< varied coordinate in (t, y) indexing; never 0 or j+1
    std::vector<double> high_point;  ///< p, larger in `coordinate`
    std::vector<double> low_point;   ///< p'
    double f_high = 0.0;             ///< f_j(p)
    double f_low = 0.0;              ///< f_j(p') > f_j(p)
};

struct CooperativityReport {
    bool cooperative = true;
    std::optional<CooperativityWitness> witness;
    std::int64_t samples_used = 0;
};

/// Randomized search for a monotonicity violation: f_j decreasing in some
/// y_k with k != j. `cooperative == true` means no violation was found within
/// the budget, not a proof. Always true for a = 1.
CooperativityReport check_cooperative(const DriftSystem& system, std::int64_t sample_budget,
                                      std::uint64_t seed);

/// Largest sampled l-infinity difference quotient; a lower estimate of L.
double estimate_lipschitz(const DriftSystem& system, std::int64_t sample_budget,
                          std::uint64_t seed);

/// Largest sampled |f_j|; a lower estimate of B.
double estimate_bound(const DriftSystem& system, std::int64_t sample_budget, std::uint64_t seed);

/// Bounding box of the tube {0 <= t <= sigma, y_j(t) <= z_j <= y_j(t) + width(t)/n},
/// the reduced set on which the Lipschitz condition is actually used.
Domain restrict_to_tube(const DriftSystem& system, const Trajectory& trajectory,
                        const std::function<double(double)>& width, double n, double sigma);

/// Named systems for the CLI, with time range [0, t_max]:
///   greedy-matching         (1 - 2y)^2 on y in [0, 1/2]
///   linear-test             y on [0, 1]
///   coupled-cooperative-2d  (y_2, y_1) on [0, 1]^2
///   rotation-2d             (-y_2, y_1) on [-2, 2]^2, not cooperative
///   zero-drift              0 on [-1, 1], L = B = 0
DriftSystem make_builtin_system(const std::string& name, double t_max = 10.0);
std::vector<std::string> builtin_system_names();

}  // namespace dem

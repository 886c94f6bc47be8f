#include "dem/drift_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dem/errors.hpp"
#include "dem/ode_solver.hpp"
#include "dem/rng.hpp"

namespace dem {

Domain::Domain(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.size() != upper_.size() || lower_.size() < 2) {
        throw std::invalid_argument("Domain: lower/upper must have equal length a+1 >= 2");
    }
    for (std::size_t k = 0; k < lower_.size(); ++k) {
        if (!(lower_[k] < upper_[k])) {
            throw std::invalid_argument("Domain: lower[k] < upper[k] required for every k");
        }
    }
}

bool Domain::contains(double t, std::span<const double> y) const noexcept {
    if (y.size() + 1 != lower_.size()) return false;
    if (!(t >= lower_[0] && t <= upper_[0])) return false;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (!(y[k] >= lower_[k + 1] && y[k] <= upper_[k + 1])) return false;
    }
    return true;
}

bool Domain::contains(std::span<const double> point) const noexcept {
    if (point.empty()) return false;
    return contains(point[0], point.subspan(1));
}

double Domain::state_boundary_distance(double t, std::span<const double> y) const noexcept {
    if (!(t >= lower_[0] && t <= upper_[0]) || y.size() + 1 != lower_.size()) {
        return -std::numeric_limits<double>::infinity();
    }
    double distance = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < y.size(); ++k) {
        distance = std::min({distance, y[k] - lower_[k + 1], upper_[k + 1] - y[k]});
    }
    return distance;
}

DriftSystem::DriftSystem(std::vector<DriftComponent> components, Domain domain, double lipschitz,
                         double bound, std::string name, std::optional<bool> declared_cooperative)
    : components_(std::move(components)),
      domain_(std::move(domain)),
      lipschitz_(lipschitz),
      bound_(bound),
      name_(std::move(name)),
      declared_cooperative_(declared_cooperative) {
    if (components_.empty()) throw std::invalid_argument("DriftSystem: at least one component");
    if (domain_.size() != components_.size() + 1) {
        throw std::invalid_argument("DriftSystem: domain must have a+1 coordinates");
    }
    if (!(lipschitz_ >= 0.0) || !(bound_ >= 0.0) || !std::isfinite(lipschitz_) ||
        !std::isfinite(bound_)) {
        throw std::invalid_argument("DriftSystem: L and B must be finite and nonnegative");
    }
    for (const auto& f : components_) {
        if (!f) throw std::invalid_argument("DriftSystem: empty component");
    }
}

void DriftSystem::evaluate_unchecked(double t, std::span<const double> y,
                                     std::span<double> out) const {
    for (std::size_t j = 0; j < components_.size(); ++j) out[j] = components_[j](t, y);
}

DriftSystem DriftSystem::with_domain(Domain domain) const {
    return DriftSystem(components_, std::move(domain), lipschitz_, bound_, name_,
                       declared_cooperative_);
}

DriftSystem DriftSystem::with_constants(double lipschitz, double bound) const {
    return DriftSystem(components_, domain_, lipschitz, bound, name_, declared_cooperative_);
}

DriftSystem DriftSystem::shifted(std::function<double(double)> shift) const {
    std::vector<DriftComponent> shifted_components;
    shifted_components.reserve(components_.size());
    for (const auto& f : components_) {
        shifted_components.emplace_back(
            [f, shift](double t, std::span<const double> y) { return f(t, y) + shift(t); });
    }
    return DriftSystem(std::move(shifted_components), domain_, lipschitz_, bound_, name_,
                       declared_cooperative_);
}

std::vector<double> evaluate(const DriftSystem& system, double t, std::span<const double> y) {
    if (y.size() != system.dimension() || !system.domain().contains(t, y)) {
        std::ostringstream msg;
        msg << "point (t=" << t << ", y[" << y.size() << "]) is outside the domain";
        throw PointOutsideDomain(msg.str());
    }
    std::vector<double> out(system.dimension());
    system.evaluate_unchecked(t, y, out);
    return out;
}

namespace {

void sample_point(const Domain& domain, Philox4x32& rng, std::vector<double>& point) {
    point.resize(domain.size());
    for (std::size_t k = 0; k < domain.size(); ++k) {
        const double lo = domain.lower()[k];
        const double hi = domain.upper()[k];
        point[k] = lo + rng.uniform01() * (hi - lo);
    }
}

double eval_at(const DriftSystem& system, std::size_t j, const std::vector<double>& point) {
    return system.component(j, point[0], std::span<const double>(point).subspan(1));
}

// Local pairs resolve the derivative near a point; global pairs catch
// secant slopes the local probe misses.
constexpr double kLocalRadius = 1e-5;

}  // namespace

CooperativityReport check_cooperative(const DriftSystem& system, std::int64_t sample_budget,
                                      std::uint64_t seed) {
    if (sample_budget < 1) throw std::invalid_argument("check_cooperative: sample_budget >= 1");
    CooperativityReport report;
    const std::size_t a = system.dimension();
    if (a == 1) return report;

    const Domain& domain = system.domain();
    Philox4x32 rng(seed);
    std::vector<double> base;
    for (std::int64_t s = 0; s < sample_budget; ++s) {
        report.samples_used = s + 1;
        sample_point(domain, rng, base);
        const auto j = static_cast<std::size_t>(rng.uniform_below(a));
        // y-coordinates other than y_j: indices 1..a minus j+1
        std::size_t k = 1 + static_cast<std::size_t>(rng.uniform_below(a - 1));
        if (k >= j + 1) ++k;

        const double lo = domain.lower()[k];
        const double hi = domain.upper()[k];
        double u = lo + rng.uniform01() * (hi - lo);
        double v;
        if (s % 2 == 0) {
            v = lo + rng.uniform01() * (hi - lo);
        } else {
            v = std::clamp(u + (2.0 * rng.uniform01() - 1.0) * kLocalRadius * (hi - lo), lo, hi);
        }
        if (u == v) continue;
        if (u < v) std::swap(u, v);

        std::vector<double> high = base;
        std::vector<double> low = base;
        high[k] = u;
        low[k] = v;
        const double f_high = eval_at(system, j, high);
        const double f_low = eval_at(system, j, low);
        const double tol = 1e-12 * std::max({1.0, std::fabs(f_high), std::fabs(f_low)});
        if (f_high < f_low - tol) {
            report.cooperative = false;
            report.witness = CooperativityWitness{j, k, std::move(high), std::move(low), f_high, f_low};
            return report;
        }
    }
    return report;
}

double estimate_lipschitz(const DriftSystem& system, std::int64_t sample_budget,
                          std::uint64_t seed) {
    if (sample_budget < 2) throw std::invalid_argument("estimate_lipschitz: sample_budget >= 2");
    const Domain& domain = system.domain();
    const std::size_t a = system.dimension();
    Philox4x32 rng(seed);
    std::vector<double> p;
    std::vector<double> q(domain.size());
    double best = 0.0;
    const std::int64_t pairs = sample_budget / 2;
    for (std::int64_t s = 0; s < pairs; ++s) {
        sample_point(domain, rng, p);
        if (s % 2 == 0) {
            sample_point(domain, rng, q);
        } else {
            for (std::size_t k = 0; k < domain.size(); ++k) {
                const double lo = domain.lower()[k];
                const double hi = domain.upper()[k];
                q[k] = std::clamp(p[k] + (2.0 * rng.uniform01() - 1.0) * kLocalRadius * (hi - lo),
                                  lo, hi);
            }
        }
        double dist = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) dist = std::max(dist, std::fabs(p[k] - q[k]));
        if (dist == 0.0) continue;
        for (std::size_t j = 0; j < a; ++j) {
            best = std::max(best, std::fabs(eval_at(system, j, p) - eval_at(system, j, q)) / dist);
        }
    }
    return best;
}

double estimate_bound(const DriftSystem& system, std::int64_t sample_budget, std::uint64_t seed) {
    if (sample_budget < 1) throw std::invalid_argument("estimate_bound: sample_budget >= 1");
    Philox4x32 rng(seed);
    std::vector<double> p;
    double best = 0.0;
    for (std::int64_t s = 0; s < sample_budget; ++s) {
        sample_point(system.domain(), rng, p);
        for (std::size_t j = 0; j < system.dimension(); ++j) {
            best = std::max(best, std::fabs(eval_at(system, j, p)));
        }
    }
    return best;
}

Domain restrict_to_tube(const DriftSystem& system, const Trajectory& trajectory,
                        const std::function<double(double)>& width, double n, double sigma) {
    const double tol = 1e-12 * std::max(1.0, sigma);
    if (trajectory.grid.empty() || trajectory.grid.front() != 0.0 ||
        trajectory.grid.back() < sigma - tol) {
        throw TrajectoryNotCovering("restrict_to_tube: trajectory does not span [0, sigma]");
    }
    if (trajectory.dimension() != system.dimension()) {
        throw ShapeMismatch("restrict_to_tube: trajectory dimension differs from system");
    }
    const std::size_t a = system.dimension();
    std::vector<double> lower(a + 1, std::numeric_limits<double>::infinity());
    std::vector<double> upper(a + 1, -std::numeric_limits<double>::infinity());
    lower[0] = 0.0;
    upper[0] = sigma;

    auto absorb = [&](double t, const std::vector<double>& y) {
        const double w = width(t) / n;
        for (std::size_t j = 0; j < a; ++j) {
            lower[j + 1] = std::min(lower[j + 1], y[j]);
            upper[j + 1] = std::max(upper[j + 1], y[j] + w);
        }
    };
    for (std::size_t k = 0; k < trajectory.size() && trajectory.grid[k] <= sigma; ++k) {
        absorb(trajectory.grid[k], trajectory.values[k]);
    }
    if (std::find(trajectory.grid.begin(), trajectory.grid.end(), sigma) == trajectory.grid.end()) {
        absorb(sigma, eval_trajectory(trajectory, std::min(sigma, trajectory.sigma())));
    }
    return Domain(std::move(lower), std::move(upper));
}

DriftSystem make_builtin_system(const std::string& name, double t_max) {
    if (name == "greedy-matching") {
        // y' = (1 - 2y)^2 on z in [0, 1/2]: |f| <= 1, |f'| = 4|1 - 2z| <= 4.
        return DriftSystem({[](double, std::span<const double> y) {
                               const double d = 1.0 - 2.0 * y[0];
                               return d * d;
                           }},
                           Domain({0.0, 0.0}, {t_max, 0.5}), 4.0, 1.0, name, true);
    }
    if (name == "linear-test") {
        return DriftSystem({[](double, std::span<const double> y) { return y[0]; }},
                           Domain({0.0, 0.0}, {t_max, 1.0}), 1.0, 1.0, name, true);
    }
    if (name == "coupled-cooperative-2d") {
        return DriftSystem({[](double, std::span<const double> y) { return y[1]; },
                            [](double, std::span<const double> y) { return y[0]; }},
                           Domain({0.0, 0.0, 0.0}, {t_max, 1.0, 1.0}), 1.0, 1.0, name, true);
    }
    if (name == "rotation-2d") {
        // f_1 decreases in y_2: deliberately not cooperative, and not declared.
        return DriftSystem({[](double, std::span<const double> y) { return -y[1]; },
                            [](double, std::span<const double> y) { return y[0]; }},
                           Domain({0.0, -2.0, -2.0}, {t_max, 2.0, 2.0}), 1.0, 2.0, name);
    }
    if (name == "zero-drift") {
        return DriftSystem({[](double, std::span<const double>) { return 0.0; }},
                           Domain({0.0, -1.0}, {t_max, 1.0}), 0.0, 0.0, name, true);
    }
    throw std::invalid_argument("unknown system: " + name);
}

std::vector<std::string> builtin_system_names() {
    return {"greedy-matching", "linear-test", "coupled-cooperative-2d", "rotation-2d", "zero-drift"};
}

}  // namespace dem

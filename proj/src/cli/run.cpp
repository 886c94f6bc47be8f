#include "cli/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cli/report_json.hpp"
#include "dem/csv.hpp"
#include "dem/martingale.hpp"
#include "dem/ode_solver.hpp"
#include "dem/verifier.hpp"

namespace dem::cli {

namespace fs = std::filesystem;

namespace {

struct Context {
    std::string command;
    Settings settings;
    std::ostream& out;
    std::ostream& err;

    bool has_out_dir() const { return !settings.out.empty(); }

    fs::path artifact(const std::string& name) const {
        fs::create_directories(settings.out);
        return fs::path(settings.out) / name;
    }

    json envelope_json(json result) const {
        json report;
        report["command"] = command;
        report["config"] = settings.config;
        report["effective"] = {{"seed", settings.seed}, {"trials", settings.trials}};
        report["result"] = std::move(result);
        return report;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ConfigError("cannot write '" + path.string() + "'");
    file << text;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

// With an output directory the report goes both to report.json and stdout;
// otherwise stdout receives the artifact in the requested format.
void emit(const Context& ctx, const json& result, const std::string& csv_text,
          const std::string& csv_name) {
    const json report = ctx.envelope_json(result);
    if (ctx.has_out_dir()) {
        if (!csv_name.empty()) write_text(ctx.artifact(csv_name), csv_text);
        write_text(ctx.artifact("report.json"), dump(report));
        ctx.out << dump(report);
        return;
    }
    if (ctx.settings.format == "csv") {
        ctx.out << csv_text;
    } else {
        ctx.out << dump(report);
    }
}

double ode_step_for(std::int64_t n) {
    const double nd = static_cast<double>(n);
    return 1.0 / (nd * std::max(1.0, std::ceil(1000.0 / nd)));
}

std::vector<double> initial_values(const json& config, const DriftSystem& system) {
    auto y0 = get_vector(section(config, "solve"), "y0");
    if (!y0) return std::vector<double>(system.dimension(), 0.0);
    if (y0->size() != system.dimension()) throw ConfigError("solve.y0 has the wrong dimension");
    return *y0;
}

int cmd_solve(const Context& ctx) {
    const json& cfg = ctx.settings.config;
    const DriftSystem system = system_from_config(cfg);
    const json& s = section(cfg, "solve");
    const double sigma = get_double(s, "sigma", 1.0);
    const double h = get_double(s, "h", 1e-3);
    if (!(sigma > 0.0) || !(h > 0.0) || h > sigma) throw ConfigError("solve needs 0 < h <= sigma");
    const Trajectory traj = integrate(system, initial_values(cfg, system), sigma, h);

    std::ostringstream csv;
    write_trajectory_csv(csv, traj);
    json values = json::array();
    for (const auto& row : traj.values) values.push_back(row);
    json result = {{"system", system.name()},
                   {"sigma", traj.sigma()},
                   {"step", traj.step},
                   {"points", traj.size()},
                   {"final", traj.values.back()}};
    if (!ctx.has_out_dir()) {
        result["grid"] = traj.grid;
        result["values"] = values;
    }
    emit(ctx, result, csv.str(), "trajectory.csv");
    return kSuccess;
}

int cmd_envelope(const Context& ctx) {
    const json& cfg = ctx.settings.config;
    const DriftSystem system = system_from_config(cfg);
    const TheoremParams params = params_from_config(cfg, system);
    const EnvelopeSide side =
        envelope_side_from_string(get_string(section(cfg, "envelope"), "side", "upper"));
    const double h = get_double(section(cfg, "solve"), "h", ode_step_for(params.n));
    const Trajectory traj =
        integrate(system, initial_values(cfg, system), params.sigma, std::min(h, params.sigma));
    const Envelope env = build_envelope(traj, params, side);
    const ParamValidation validation = validate_params(params);

    std::ostringstream csv;
    write_envelope_csv(csv, env);
    json result = {{"side", to_string(side)},
                   {"params", to_json(params)},
                   {"min_lambda", validation.min_lambda},
                   {"steps", env.steps},
                   {"failure_probability", to_json(failure_probability(params))}};
    if (side == EnvelopeSide::two_sided) {
        result["admissible_sigma"] = admissible_sigma(system, traj, params);
    }
    emit(ctx, result, csv.str(), "envelope.csv");
    return kSuccess;
}

int cmd_simulate(const Context& ctx) {
    const json& cfg = ctx.settings.config;
    const double sigma = get_double(section(cfg, "params"), "sigma", 1.0);
    const ProcessSpec spec = process_from_config(cfg, sigma);

    std::ostringstream summary_csv;
    summary_csv << "trial,seed,stop_step,stopped";
    for (std::size_t j = 1; j <= spec.dimension; ++j) summary_csv << ",Z_" << j;
    summary_csv << '\n';
    json trials = json::array();
    std::vector<double> mean(spec.dimension, 0.0);
    for (std::int64_t k = 0; k < ctx.settings.trials; ++k) {
        const std::uint64_t seed = ctx.settings.seed + static_cast<std::uint64_t>(k);
        const ProcessTrace trace = run_trace(spec, seed);
        if (ctx.has_out_dir()) {
            std::ostringstream csv;
            write_trace_csv(csv, trace);
            write_text(ctx.artifact("trace_" + std::to_string(k) + ".csv"), csv.str());
        }
        std::vector<double> last(spec.dimension);
        summary_csv << k << ',' << seed << ',' << trace.stop_step << ',' << (trace.stopped ? 1 : 0);
        for (std::size_t j = 0; j < spec.dimension; ++j) {
            last[j] = trace.values[j].back();
            mean[j] += last[j] / static_cast<double>(spec.n);
            summary_csv << ',' << format_double(last[j]);
        }
        summary_csv << '\n';
        json entry = {{"trial", k},
                      {"seed", seed},
                      {"stop_step", trace.stop_step},
                      {"stopped", trace.stopped},
                      {"final", last}};
        if (!trace.diagnostic.empty()) entry["diagnostic"] = trace.diagnostic;
        trials.push_back(entry);
    }
    if (ctx.settings.trials > 0) {
        for (double& m : mean) m /= static_cast<double>(ctx.settings.trials);
    }
    json result = {{"process", spec.name},
                   {"n", spec.n},
                   {"horizon", spec.horizon},
                   {"mean_final_over_n", mean},
                   {"trials", trials}};
    emit(ctx, result, summary_csv.str(), "summary.csv");
    return kSuccess;
}

int cmd_verify(const Context& ctx, bool two_sided) {
    const json& cfg = ctx.settings.config;
    const DriftSystem system = system_from_config(cfg);
    const TheoremParams params = params_from_config(cfg, system);
    const ProcessSpec spec = process_from_config(cfg, params.sigma);
    const json& v = section(cfg, "verify");

    VerifyOptions options;
    options.trials = ctx.settings.trials;
    options.seed = ctx.settings.seed;
    options.threads = ctx.settings.threads;
    options.gamma = get_double(v, "gamma", 0.0);
    options.confidence = get_double(v, "confidence", 0.99);
    options.audit_mode = audit_mode_from_string(get_string(v, "audit_mode", "always"));
    options.allow_noncooperative = get_bool(v, "allow_noncooperative", false);
    if (auto y0 = get_vector(section(cfg, "solve"), "y0")) options.y0 = *y0;
    if (get_bool(v, "dump_traces", false)) {
        if (!ctx.has_out_dir()) throw ConfigError("verify.dump_traces needs an output directory");
        const fs::path dir = ctx.artifact("traces");
        fs::create_directories(dir);
        options.on_trace = [dir](std::int64_t k, std::uint64_t, const ProcessTrace& trace) {
            std::ostringstream csv;
            write_trace_csv(csv, trace);
            write_text(dir / ("trace_" + std::to_string(k) + ".csv"), csv.str());
        };
    }

    const VerificationReport report = two_sided ? verify_two_sided(spec, system, params, options)
                                                : verify_one_sided(spec, system, params, options);
    std::ostringstream csv;
    csv << "i,worst_margin\n";
    for (std::size_t i = 0; i < report.worst_margin.size(); ++i) {
        csv << i << ',' << format_double(report.worst_margin[i]) << '\n';
    }
    json result = to_json(report);
    result["process"] = spec.name;
    result["system"] = system.name();
    emit(ctx, result, csv.str(), "margins.csv");
    return report.verdict ? kSuccess : kVerdictFail;
}

int cmd_compare(const Context& ctx) {
    const json& cfg = ctx.settings.config;
    const DriftSystem system = system_from_config(cfg);
    const json& c = section(cfg, "compare");
    auto z0 = get_vector(c, "z0");
    auto y0 = get_vector(c, "y0");
    if (!z0 || !y0) throw ConfigError("compare needs 'z0' and 'y0'");
    ComparisonOptions options;
    options.delta = get_double(c, "delta", 0.0);
    options.tolerance = get_double(c, "tolerance", 1e-9);
    options.allow_noncooperative = get_bool(c, "allow_noncooperative", false);
    options.seed = ctx.settings.seed;
    if (c.contains("perturbation")) options.perturbation = get_double(c, "perturbation", 0.0);
    const double slack = get_double(c, "slack", 0.0);
    if (slack < 0.0) throw ConfigError("compare.slack must be nonnegative");
    if (slack > 0.0) options.slack = [slack](double) { return slack; };
    const double sigma = get_double(c, "sigma", 1.0);
    const double h = get_double(c, "h", 1e-3);
    if (!(sigma > 0.0) || !(h > 0.0) || h > sigma) throw ConfigError("compare needs 0 < h <= sigma");

    const ComparisonReport report = check_comparison(system, *z0, *y0, sigma, h, options);
    std::ostringstream csv;
    csv << "t,margin\n";
    for (std::size_t k = 0; k < report.grid.size(); ++k) {
        csv << format_double(report.grid[k]) << ',' << format_double(report.margins[k]) << '\n';
    }
    json result = to_json(report);
    result["system"] = system.name();
    emit(ctx, result, csv.str(), "margins.csv");
    return report.holds ? kSuccess : kVerdictFail;
}

int cmd_freedman(const Context& ctx) {
    const json& f = section(ctx.settings.config, "freedman");
    const double eps = get_double(f, "epsilon", 100.0);
    const double beta = get_double(f, "beta", 1.0);
    const double b = get_double(f, "b", 1.0);
    const std::int64_t m = get_int(f, "m", 1000);
    const auto tails = static_cast<int>(get_int(f, "tails", 2));
    if (!(beta >= 0.0) || !(b >= 0.0) || m < 0 || tails < 1) {
        throw ConfigError("freedman needs beta, b, m >= 0 and tails >= 1");
    }
    const double value = freedman_bound(eps, beta, b, m, tails);
    const json result = {{"epsilon", eps}, {"beta", beta}, {"b", b},
                         {"m", m},         {"tails", tails}, {"value", value}};
    emit(ctx, result, "value\n" + format_double(value) + "\n", "freedman.csv");
    return kSuccess;
}

int cmd_lambda_min(const Context& ctx) {
    const json& cfg = ctx.settings.config;
    const DriftSystem system = system_from_config(cfg);
    const TheoremParams params = params_from_config(cfg, system);
    const double target = get_double(section(cfg, "lambda_min"), "target", 0.01);
    if (!(target > 0.0)) throw ConfigError("lambda_min.target must be positive");

    const double for_target = lambda_for_target(params, target);
    const double min_valid = minimal_lambda(params);
    TheoremParams chosen = params;
    chosen.lambda = std::max(for_target, min_valid);
    const ProbabilityBound bound = failure_probability(chosen);
    const json result = {{"target", target},
                         {"lambda_for_target", for_target},
                         {"min_valid_lambda", min_valid},
                         {"lambda", chosen.lambda},
                         {"failure_probability", to_json(bound)}};
    std::ostringstream csv;
    csv << "target,lambda_for_target,min_valid_lambda,lambda,bound\n"
        << format_double(target) << ',' << format_double(for_target) << ','
        << format_double(min_valid) << ',' << format_double(chosen.lambda) << ','
        << format_double(bound.raw) << '\n';
    emit(ctx, result, csv.str(), "lambda.csv");
    return kSuccess;
}

json error_json(const std::string& kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

int report_error(std::ostream& out, std::ostream& err, json doc) {
    err << "error: " << doc["error"]["message"].get<std::string>() << '\n';
    out << dump(doc);
    return kInvalid;
}

}  // namespace

double lambda_for_target(const TheoremParams& params, double target) {
    TheoremParams p = params;
    auto raw_at = [&](double lambda) {
        p.lambda = lambda;
        return failure_probability(p).raw;
    };
    // raw(lambda) = 2a exp(-lambda^2 / (2(b sigma n + 2 beta lambda))) is
    // nonincreasing in lambda.
    if (raw_at(0.0) <= target) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (raw_at(hi) > target) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-13 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (raw_at(mid) > target ? lo : hi) = mid;
    }
    return hi;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env) {
    CLI::App app{"Differential equation method toolkit: ODE limits, envelopes and Monte Carlo checks",
                 "demtool"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::int64_t trials = 0;
    std::string out_dir;
    unsigned threads = 0;
    std::string format;
    auto* o_config = app.add_option("--config", config_path, "JSON experiment config");
    auto* o_seed = app.add_option("--seed", seed, "base seed; trial k uses seed + k");
    auto* o_trials = app.add_option("--trials", trials, "number of Monte Carlo trials")
                         ->check(CLI::NonNegativeNumber);
    auto* o_out = app.add_option("--out", out_dir, "directory for CSV/JSON artifacts");
    auto* o_threads = app.add_option("--threads", threads, "worker threads (default: all cores)");
    auto* o_format = app.add_option("--format", format, "stdout format")
                         ->check(CLI::IsMember({"csv", "json"}));

    struct Command {
        const char* name;
        const char* help;
        const char* default_format;
    };
    const Command commands[] = {
        {"solve", "integrate the limiting ODE", "csv"},
        {"envelope", "deviation envelope and failure probability", "csv"},
        {"simulate", "sample process traces", "json"},
        {"verify-one-sided", "Monte Carlo check of the upper envelope", "json"},
        {"verify-two-sided", "Monte Carlo check of the two-sided envelope", "json"},
        {"compare", "deterministic comparison of two ODE solutions", "json"},
        {"freedman", "Freedman tail bound", "json"},
        {"lambda-min", "smallest lambda reaching a target failure probability", "json"},
    };
    for (const Command& c : commands) app.add_subcommand(c.name, c.help);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        return report_error(out, err, error_json("InvalidArguments", e.what()));
    }

    const CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    std::string default_format = "json";
    for (const Command& c : commands) {
        if (name == c.name) default_format = c.default_format;
    }

    Overrides flags;
    if (o_config->count()) flags.config_path = config_path;
    if (o_seed->count()) flags.seed = seed;
    if (o_trials->count()) flags.trials = trials;
    if (o_out->count()) flags.out = out_dir;
    if (o_threads->count()) flags.threads = threads;
    if (o_format->count()) flags.format = format;

    try {
        Context ctx{name, resolve_settings(flags, env, default_format), out, err};
        if (name == "solve") return cmd_solve(ctx);
        if (name == "envelope") return cmd_envelope(ctx);
        if (name == "simulate") return cmd_simulate(ctx);
        if (name == "verify-one-sided") return cmd_verify(ctx, false);
        if (name == "verify-two-sided") return cmd_verify(ctx, true);
        if (name == "compare") return cmd_compare(ctx);
        if (name == "freedman") return cmd_freedman(ctx);
        return cmd_lambda_min(ctx);
    } catch (const InvalidParams& e) {
        json doc = error_json(e.kind(), e.what());
        doc["error"]["min_lambda"] = std::isfinite(e.min_lambda()) ? json(e.min_lambda()) : json(nullptr);
        return report_error(out, err, doc);
    } catch (const SigmaInadmissible& e) {
        json doc = error_json(e.kind(), e.what());
        doc["error"]["admissible_sigma"] = e.admissible();
        return report_error(out, err, doc);
    } catch (const LeftDomain& e) {
        json doc = error_json(e.kind(), e.what());
        doc["error"]["t"] = e.t();
        doc["error"]["admissible_sigma"] = e.partial().sigma();
        return report_error(out, err, doc);
    } catch (const Error& e) {
        return report_error(out, err, error_json(e.kind(), e.what()));
    } catch (const std::invalid_argument& e) {
        return report_error(out, err, error_json("InvalidArgument", e.what()));
    } catch (const fs::filesystem_error& e) {
        return report_error(out, err, error_json("IOError", e.what()));
    }
}

}  // namespace dem::cli

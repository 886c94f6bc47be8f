#include "cli/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace dem::cli {

namespace {

const std::set<std::string> kTopLevelKeys = {
    "system", "process", "params", "solve", "envelope", "compare", "freedman", "lambda_min",
    "verify", "seed", "trials", "threads", "out", "format"};

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        if (text.empty() || text[0] == '-') throw std::invalid_argument(text);
        const unsigned long long v = std::stoull(text, &used, 10);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(what + ": expected a nonnegative integer, got '" + text + "'");
    }
}

std::string check_format(const std::string& format) {
    if (format != "csv" && format != "json") {
        throw ConfigError("format must be 'csv' or 'json', got '" + format + "'");
    }
    return format;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

EnvLookup process_environment() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* value = std::getenv(name.c_str());
        if (value == nullptr) return std::nullopt;
        return std::string(value);
    };
}

json parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& item : doc.items()) {
        if (!kTopLevelKeys.count(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
    }
    return doc;
}

Settings resolve_settings(const Overrides& flags, const EnvLookup& env,
                          const std::string& default_format) {
    Settings s;
    std::optional<std::string> path = flags.config_path;
    if (!path) path = env("DEM_CONFIG");
    if (path && !path->empty()) s.config = parse_config_text(read_file(*path));

    const json& c = s.config;
    if (c.contains("seed")) {
        if (!c.at("seed").is_number_unsigned()) throw ConfigError("'seed' must be a nonnegative integer");
        s.seed = c.at("seed").get<std::uint64_t>();
    }
    s.trials = get_int(c, "trials", 100);
    s.threads = static_cast<unsigned>(get_int(c, "threads", 0));
    s.out = get_string(c, "out", "");
    s.format = get_string(c, "format", default_format);

    if (auto v = env("DEM_SEED")) s.seed = parse_u64(*v, "DEM_SEED");
    if (auto v = env("DEM_TRIALS")) s.trials = static_cast<std::int64_t>(parse_u64(*v, "DEM_TRIALS"));
    if (auto v = env("DEM_THREADS")) s.threads = static_cast<unsigned>(parse_u64(*v, "DEM_THREADS"));
    if (auto v = env("DEM_OUT")) s.out = *v;
    if (auto v = env("DEM_FORMAT")) s.format = *v;

    if (flags.seed) s.seed = *flags.seed;
    if (flags.trials) s.trials = *flags.trials;
    if (flags.threads) s.threads = *flags.threads;
    if (flags.out) s.out = *flags.out;
    if (flags.format) s.format = *flags.format;

    if (s.trials < 0) throw ConfigError("trials must be nonnegative");
    if (s.threads == 0) s.threads = std::max(1u, std::thread::hardware_concurrency());
    s.format = check_format(s.format);
    return s;
}

const json& section(const json& config, const std::string& key) {
    static const json empty = json::object();
    if (!config.contains(key)) return empty;
    const json& value = config.at(key);
    if (!value.is_object()) throw ConfigError("'" + key + "' must be an object");
    return value;
}

double get_double(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
    return v.get<double>();
}

std::int64_t get_int(const json& obj, const std::string& key, std::int64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            throw ConfigError("'" + key + "' is too large");
        }
        return static_cast<std::int64_t>(u);
    }
    if (v.is_number_integer()) return v.get<std::int64_t>();
    throw ConfigError("'" + key + "' must be an integer");
}

bool get_bool(const json& obj, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError("'" + key + "' must be true or false");
    return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
    return v.get<std::string>();
}

std::optional<std::vector<double>> get_vector(const json& obj, const std::string& key) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (v.is_number()) return std::vector<double>{v.get<double>()};
    if (!v.is_array()) throw ConfigError("'" + key + "' must be a number or an array of numbers");
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number()) throw ConfigError("'" + key + "' must contain only numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

DriftSystem system_from_config(const json& config) {
    const json& s = section(config, "system");
    const std::string name = get_string(s, "name", "greedy-matching");
    const double t_max = get_double(s, "t_max", 10.0);
    DriftSystem system = [&] {
        try {
            return make_builtin_system(name, t_max);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }();
    if (s.contains("domain")) {
        const json& d = section(s, "domain");
        auto lower = get_vector(d, "lower");
        auto upper = get_vector(d, "upper");
        if (!lower || !upper) throw ConfigError("system.domain needs 'lower' and 'upper'");
        if (lower->size() != system.dimension() + 1 || upper->size() != system.dimension() + 1) {
            throw ConfigError("system.domain bounds need a + 1 entries (time first)");
        }
        try {
            system = system.with_domain(Domain(*lower, *upper));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    if (s.contains("L") || s.contains("B")) {
        const double L = get_double(s, "L", system.lipschitz());
        const double B = get_double(s, "B", system.bound());
        if (!(L >= 0.0) || !(B >= 0.0)) throw ConfigError("system L and B must be nonnegative");
        system = system.with_constants(L, B);
    }
    return system;
}

std::int64_t process_n(const json& config) {
    const std::int64_t n = get_int(section(config, "process"), "n", 1000);
    if (n < 1) throw ConfigError("process.n must be positive");
    return n;
}

ProcessSpec process_from_config(const json& config, double sigma) {
    const json& p = section(config, "process");
    const std::string name = get_string(p, "name", "greedy-matching");
    const std::int64_t n = process_n(config);
    try {
        if (name == "greedy-matching" || name == "online-matcher") {
            if (n < 2 || n > std::numeric_limits<int>::max()) throw ConfigError("process.n out of range for a graph process");
            const double c = get_double(p, "c", sigma);
            if (name == "greedy-matching") return greedy_matching_spec(static_cast<int>(n), c);
            return online_matcher_spec(static_cast<int>(n), c,
                                       policy_by_name(get_string(p, "policy", "always-accept")));
        }
        if (name == "bounded-walk") {
            const std::int64_t horizon = get_int(p, "horizon", horizon_steps(sigma, n));
            return bounded_walk_spec(n, horizon, get_double(p, "z0", 0.0));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("unknown process '" + name + "'");
}

TheoremParams params_from_config(const json& config, const DriftSystem& system) {
    const json& p = section(config, "params");
    TheoremParams params;
    params.n = process_n(config);
    params.a = static_cast<std::int64_t>(system.dimension());
    params.L = system.lipschitz();
    params.B = system.bound();
    params.beta = get_double(p, "beta", 1.0);
    params.b = get_double(p, "b", 1.0);
    params.sigma = get_double(p, "sigma", 1.0);
    if (p.contains("delta") && p.contains("delta_c")) {
        throw ConfigError("give either params.delta or params.delta_c, not both");
    }
    params.delta = p.contains("delta_c")
                       ? get_double(p, "delta_c", 0.0) / static_cast<double>(params.n)
                       : get_double(p, "delta", 0.0);
    if (p.contains("lambda") && p.at("lambda").is_string()) {
        if (p.at("lambda").get<std::string>() != "min") {
            throw ConfigError("params.lambda must be a number or \"min\"");
        }
        params.lambda = minimal_lambda(params);
    } else {
        params.lambda = p.contains("lambda") ? get_double(p, "lambda", 1.0) : minimal_lambda(params);
    }
    return params;
}

}  // namespace dem::cli

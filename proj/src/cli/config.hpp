#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dem/drift_system.hpp"
#include "dem/envelope.hpp"
#include "dem/errors.hpp"
#include "dem/processes.hpp"

namespace dem::cli {

using nlohmann::json;

/// Malformed or inconsistent configuration; exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("InvalidConfig", what) {}
};

/// Looks up an environment variable; returns nullopt when unset.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

EnvLookup process_environment();

/// Values given on the command line. Unset fields fall back to the
/// environment (DEM_SEED, DEM_TRIALS, DEM_THREADS, DEM_OUT, DEM_FORMAT,
/// DEM_CONFIG) and then to the config document.
struct Overrides {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> trials;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::optional<std::string> format;
};

struct Settings {
    json config = json::object();  ///< the parsed document, echoed into reports
    std::uint64_t seed = 0;
    std::int64_t trials = 100;
    std::string out;  ///< empty: no artifact directory
    unsigned threads = 1;
    std::string format;  ///< "csv" or "json"
};

/// Applies flags > env > config file. `default_format` is used when no
/// layer sets one.
Settings resolve_settings(const Overrides& flags, const EnvLookup& env,
                          const std::string& default_format);

json parse_config_text(const std::string& text);

// Typed accessors. Each throws ConfigError naming the offending key.
double get_double(const json& obj, const std::string& key, double fallback);
std::int64_t get_int(const json& obj, const std::string& key, std::int64_t fallback);
bool get_bool(const json& obj, const std::string& key, bool fallback);
std::string get_string(const json& obj, const std::string& key, const std::string& fallback);
std::optional<std::vector<double>> get_vector(const json& obj, const std::string& key);
const json& section(const json& config, const std::string& key);

/// "system": {"name", "t_max", "domain": {"lower", "upper"}, "L", "B"}.
DriftSystem system_from_config(const json& config);

/// "process": {"name", "n", "c", "policy", "z0", "horizon"}. The horizon of
/// the graph processes is floor(c n), c defaulting to params.sigma.
ProcessSpec process_from_config(const json& config, double sigma);

/// Scaling parameter n from "process".
std::int64_t process_n(const json& config);

/// "params": {"beta", "b", "lambda" (number or "min"), "delta" or "delta_c"
/// (delta = delta_c / n), "sigma"}, with n, a, L and B taken from the
/// process and system.
TheoremParams params_from_config(const json& config, const DriftSystem& system);

}  // namespace dem::cli

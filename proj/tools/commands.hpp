#pragma once

#include "drillabc/bitrock.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace drillabc::cli {

// Bad flag value or manifest content. Exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

struct GenDataConfig {
    std::string model = "m3";
    std::string params_from = "paper";  // paper | explicit
    std::vector<double> params;
    double noise = 0.8;
    std::uint64_t seed = 0;
    double wob = kReferenceWob;
    double w_ref = kReferenceWob;
    int n_points = 200;
    double speed_min = 0.5;
    double speed_max = 15.0;
};

struct FitConfig {
    std::string data;
    std::string speed_unit = "rad_s";
    std::vector<std::string> models{"m1", "m2", "m3", "m4"};
    double wob = 0.0;  // 0: the dataset's reference weight (r = 1)
    int starts = 1;
    double jitter = 0.1;
    std::uint64_t seed = 0;
};

struct AbcConfig {
    std::string data;
    std::string speed_unit = "rad_s";
    std::vector<std::string> models{"m1", "m2", "m3", "m4"};
    double wob = 0.0;
    double delta = 0.4;
    std::uint64_t n = 1000;
    double eps_floor = 0.014;
    std::uint64_t max_populations = 20;
    std::uint64_t seed = 0;
    double stall_rate = 1e-5;
    std::uint64_t stall_window = 2'000'000;
    double coverage = 0.98;
    int bins = 64;
};

struct MapConfig {
    std::string plant = "lumped";  // lumped | fem
    double i_eq = 383.33;
    double omega_n = 0.85;
    double xi = 0.25;
    int n_dp = 1;
    int n_bha = 1;
    double alpha = 0.5;
    double beta = 0.006;
    std::vector<std::string> models{"m1", "m2", "m3", "m4"};
    std::string params_from = "paper";  // paper | fit
    std::string fit_file;
    std::string abc_dir;
    std::uint64_t population = 0;  // 0: last population in abc_dir
    double percentile = 0.02;
    std::map<std::string, double> mixture;
    double omega_min = 1.0;
    double omega_max = 20.0;
    double wob_min_ratio = 0.2;
    double wob_max_ratio = 3.0;
    double w_ref = kReferenceWob;
    int n_omega = 80;
    int n_wob = 80;
};

struct FemModesConfig {
    int n_dp = 8;
    int n_bha = 2;
    double alpha = 0.5;
    double beta = 0.006;
};

using Config = std::variant<GenDataConfig, FitConfig, AbcConfig, MapConfig, FemModesConfig>;

std::string command_name(const Config& config);

// Strict conversions: every key must be known, every known key present.
Json config_to_json(const Config& config);
Config config_from_json(const std::string& command, const Json& json);

// Validates, makes file paths absolute. Throws ConfigError.
Config normalize(Config config);

struct RunResult {
    std::vector<std::string> outputs;  // relative to the output directory
    Json manifest;
};

// Runs the command, writes outputs and manifest.json into out_dir.
RunResult execute(const Config& config, const std::filesystem::path& out_dir, std::ostream& log);

// Re-reads a manifest and runs the same command into out_dir.
RunResult rerun(const std::filesystem::path& manifest, const std::filesystem::path& out_dir, std::ostream& log);

// Maps an exception to the documented exit code (2 config, 3 numeric,
// 4 data) and prints it.
int exit_code_for(const std::exception& e);

}  // namespace drillabc::cli

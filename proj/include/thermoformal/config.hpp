#pragma once
#include <cstdint>
#include <string>
#include <vector>
#include "thermoformal/base_map.hpp"
#include "thermoformal/solenoid.hpp"

namespace tf {

// One experiment, fully described: the system, the analysis parameters, the
// sampling schedules, and the budgets, in a sectioned key-value text format.
// Every run emits its resolved config next to the artifacts so results can
// be replayed without the original invocation.
struct ExperimentConfig {
    // [system]
    std::string kind = "linear";
    std::vector<int> factors{2};
    double delta = 0.0;
    double pert_radius = 0.2;
    double lambda_u = 0.7;
    double rho = 0.05;
    double lambda_s = 0.0; // 0 selects the model default 2^{-deg}
    double rot = 0.5;
    double fiber_override = 0.0;
    int n_h = 60;

    // [params]
    double alpha = 0.6;
    double holonomy_C = 0.0; // 0: measure it from attractor pairs
    double holder_amplitude = 0.1;
    double srb_obs_tol = 0.01;
    double srb_pesin_tol = 1e-4; // <= 0: report the residual without gating

    // [schedules]
    std::vector<double> epsilons{0.1, 0.05, 0.025};
    std::vector<int> n_values{4, 6, 8, 10, 12};
    double t_min = 0.0;
    double t_max = 1.25;
    int t_steps = 6;
    double glue_eps = 0.05;

    // [budgets]
    long candidate_target = 200000;
    long pair_budget = 40000000;
    long attractor_count = 20000;
    long burn_in = 60;
    long n_cells = 1024;
    long orbit_length = 1000000;
    long glue_pairs = 100;
    long samples = 1000;
    long horizon = 30;

    // [run]
    uint64_t seed = 1;
    std::string output_dir = "out";
    int threads = 1;

    // [verify] — row names that gate the exit code; empty means every
    // gating row of every check gates
    std::vector<std::string> gates;

    BaseMapConfig base_config() const;
    SkewConfig skew_config() const;

    bool operator==(const ExperimentConfig&) const = default;
};

// Parses the sectioned key-value format. Unknown sections or keys, duplicate
// keys, malformed numbers, and out-of-range values all throw ConfigError
// with a "line L, column C" prefix. Missing keys keep their defaults.
ExperimentConfig parse_experiment_config(const std::string& text);

// Reads a file and parses it; the filename is included in error messages.
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical text form: every key written explicitly, doubles at full
// precision, so emit -> parse is the identity on the struct.
std::string emit_experiment_config(const ExperimentConfig& cfg);

} // namespace tf

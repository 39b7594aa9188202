#pragma once
#include <string>
#include "thermoformal/config.hpp"

namespace tf {

// Flag-level overrides that the subcommands accept on top of the config.
struct PressureOptions {
    std::string collection = "all"; // all | G | S
    std::string potential = "zero"; // zero | holder | geo
};

struct CurveOptions {
    bool override_range = false;
    double t_min = 0.0;
    double t_max = 0.0;
    int steps = 0;
};

// Each command writes its artifacts (report.json, resolved.ini, and the
// command's CSV/JSON) into cfg.output_dir and returns the process exit code:
// 0 when every gated check passes, 1 when a check fails or an estimator
// aborts (the partial report is still written). Configuration errors are
// thrown as ConfigError and mapped to exit 2 by the caller.
int cmd_verify(const ExperimentConfig& cfg);
int cmd_pressure(const ExperimentConfig& cfg, const PressureOptions& opt);
int cmd_entropy(const ExperimentConfig& cfg);
int cmd_classify(const ExperimentConfig& cfg);
int cmd_spec(const ExperimentConfig& cfg);
int cmd_curve(const ExperimentConfig& cfg, const CurveOptions& opt);
int cmd_srb(const ExperimentConfig& cfg);

} // namespace tf

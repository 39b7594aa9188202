#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "thermoformal/base_map.hpp"
#include "thermoformal/config.hpp"
#include "thermoformal/orchestrator.hpp"

namespace {

// "a:b:n" -> CurveOptions override; false on any malformed piece
bool parse_t_range(const std::string& s, tf::CurveOptions& o) {
    size_t p1 = s.find(':');
    size_t p2 = p1 == std::string::npos ? std::string::npos : s.find(':', p1 + 1);
    if (p2 == std::string::npos) return false;
    const std::string a = s.substr(0, p1);
    const std::string b = s.substr(p1 + 1, p2 - p1 - 1);
    const std::string c = s.substr(p2 + 1);
    char* end = nullptr;
    o.t_min = std::strtod(a.c_str(), &end);
    if (a.empty() || *end != '\0') return false;
    o.t_max = std::strtod(b.c_str(), &end);
    if (b.empty() || *end != '\0') return false;
    long n = std::strtol(c.c_str(), &end, 10);
    if (c.empty() || *end != '\0' || n < 2 || n > 100000) return false;
    o.steps = static_cast<int>(n);
    if (!(o.t_max > o.t_min)) return false;
    o.override_range = true;
    return true;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermodynamic formalism on solenoid-like attractors"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed = 0;
    int threads = 1;
    std::string out_dir;
    std::string collection = "all";
    std::string potential = "zero";
    std::string t_range;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file")
            ->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "worker threads")
            ->check(CLI::Range(1, 4096));
        sub->add_option("--out", out_dir, "override the output directory");
    };

    CLI::App* c_verify = app.add_subcommand("verify", "hypothesis and certificate checks");
    CLI::App* c_classify = app.add_subcommand("classify", "sample and classify orbit segments");
    CLI::App* c_pressure = app.add_subcommand("pressure", "topological pressure estimate");
    CLI::App* c_entropy = app.add_subcommand("entropy", "entropy via pressure at the zero potential");
    CLI::App* c_spec = app.add_subcommand("spec", "glue segment pairs and re-verify shadowing");
    CLI::App* c_curve = app.add_subcommand("curve", "pressure along t times the geometric potential");
    CLI::App* c_srb = app.add_subcommand("srb", "physical-measure diagnostics");
    for (CLI::App* sub : {c_verify, c_classify, c_pressure, c_entropy, c_spec, c_curve, c_srb})
        add_common(sub);
    c_pressure->add_option("--collection", collection, "candidate collection")
        ->check(CLI::IsMember({"all", "G", "S"}));
    c_pressure->add_option("--potential", potential, "potential kind")
        ->check(CLI::IsMember({"zero", "holder", "geo"}));
    c_curve->add_option("--t-range", t_range, "grid as min:max:steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    CLI::App* sub = app.get_subcommands().front();

    try {
        tf::ExperimentConfig cfg = tf::load_experiment_config(config_path);

        if (const char* env = std::getenv("THERMOFORMAL_THREADS"); env && *env) {
            char* end = nullptr;
            long n = std::strtol(env, &end, 10);
            if (*end != '\0' || n < 1 || n > 4096) {
                std::cerr << "THERMOFORMAL_THREADS: want an integer in [1,4096], got '"
                          << env << "'\n";
                return 2;
            }
            cfg.threads = static_cast<int>(n);
        }
        if (sub->count("--seed")) cfg.seed = seed;
        if (sub->count("--threads")) cfg.threads = threads;
        if (sub->count("--out")) cfg.output_dir = out_dir;

        if (sub == c_verify) return tf::cmd_verify(cfg);
        if (sub == c_classify) return tf::cmd_classify(cfg);
        if (sub == c_entropy) return tf::cmd_entropy(cfg);
        if (sub == c_spec) return tf::cmd_spec(cfg);
        if (sub == c_srb) return tf::cmd_srb(cfg);
        if (sub == c_pressure) {
            tf::PressureOptions opt;
            opt.collection = collection;
            opt.potential = potential;
            return tf::cmd_pressure(cfg, opt);
        }
        // curve
        tf::CurveOptions opt;
        if (sub->count("--t-range") && !parse_t_range(t_range, opt)) {
            std::cerr << "--t-range: want min:max:steps with max > min and steps in [2,100000], got '"
                      << t_range << "'\n";
            return 2;
        }
        return tf::cmd_curve(cfg, opt);
    } catch (const tf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tf::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

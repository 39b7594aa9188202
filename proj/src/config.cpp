#include "thermoformal/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "thermoformal/numfmt.hpp"

namespace tf {

BaseMapConfig ExperimentConfig::base_config() const {
    BaseMapConfig b;
    b.m = (int)factors.size();
    b.kind = kind;
    b.factors = factors;
    b.delta = delta;
    b.pert_radius = pert_radius;
    b.lambda_u = lambda_u;
    b.rho = rho;
    return b;
}

SkewConfig ExperimentConfig::skew_config() const {
    SkewConfig s;
    s.lambda_s = lambda_s;
    s.rot = rot;
    s.fiber_override = fiber_override;
    s.n_h = n_h;
    return s;
}

namespace {

struct Cursor {
    int line = 0;
    int col = 1;
    [[noreturn]] void fail(const std::string& msg) const {
        std::ostringstream os;
        os << "line " << line << ", column " << col << ": " << msg;
        throw ConfigError(os.str());
    }
};

std::string trim(const std::string& s, size_t* lead = nullptr) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace((unsigned char)s[a])) ++a;
    while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
    if (lead) *lead = a;
    return s.substr(a, b - a);
}

double parse_double(const std::string& v, Cursor at) {
    errno = 0;
    const char* c = v.c_str();
    char* end = nullptr;
    double x = std::strtod(c, &end);
    if (end == c) at.fail("expected a number, got '" + v + "'");
    if (errno == ERANGE) at.fail("number out of range: '" + v + "'");
    while (*end && std::isspace((unsigned char)*end)) ++end;
    if (*end) {
        at.col += (int)(end - c);
        at.fail("trailing characters after number");
    }
    return x;
}

long long parse_int(const std::string& v, Cursor at) {
    errno = 0;
    const char* c = v.c_str();
    char* end = nullptr;
    long long x = std::strtoll(c, &end, 10);
    if (end == c) at.fail("expected an integer, got '" + v + "'");
    if (errno == ERANGE) at.fail("integer out of range: '" + v + "'");
    while (*end && std::isspace((unsigned char)*end)) ++end;
    if (*end) {
        at.col += (int)(end - c);
        at.fail("trailing characters after integer");
    }
    return x;
}

uint64_t parse_u64(const std::string& v, Cursor at) {
    errno = 0;
    const char* c = v.c_str();
    char* end = nullptr;
    unsigned long long x = std::strtoull(c, &end, 10);
    if (end == c || v.find('-') != std::string::npos)
        at.fail("expected a nonnegative integer, got '" + v + "'");
    if (errno == ERANGE) at.fail("integer out of range: '" + v + "'");
    while (*end && std::isspace((unsigned char)*end)) ++end;
    if (*end) {
        at.col += (int)(end - c);
        at.fail("trailing characters after integer");
    }
    return (uint64_t)x;
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= v.size()) {
        size_t c = v.find(',', pos);
        if (c == std::string::npos) c = v.size();
        out.push_back(trim(v.substr(pos, c - pos)));
        pos = c + 1;
    }
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::vector<std::string> seen; // section.key, for duplicate detection
    Cursor cur;

    while (std::getline(in, raw)) {
        ++cur.line;
        cur.col = 1;
        size_t lead = 0;
        std::string line = trim(raw, &lead);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        cur.col = (int)lead + 1;

        if (line.front() == '[') {
            if (line.back() != ']') cur.fail("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "system" && section != "params" &&
                section != "schedules" && section != "budgets" &&
                section != "run" && section != "verify")
                cur.fail("unknown section [" + section + "]");
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string::npos) cur.fail("expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) cur.fail("empty key");
        if (section.empty()) cur.fail("key '" + key + "' appears before any section");

        Cursor kat = cur; // column of the key
        Cursor vat = cur;
        size_t vlead = 0;
        std::string val = trim(line.substr(eq + 1), &vlead);
        vat.col = (int)(lead + eq + 1 + vlead) + 1;

        std::string id = section + "." + key;
        for (const std::string& s : seen)
            if (s == id) kat.fail("duplicate key '" + key + "'");
        seen.push_back(id);

        if (section == "system") {
            if (key == "kind") {
                if (val != "linear" && val != "pitchfork")
                    vat.fail("kind must be linear or pitchfork");
                cfg.kind = val;
            } else if (key == "factors") {
                std::vector<int> fs;
                for (const std::string& p : split_list(val)) {
                    long long k = parse_int(p, vat);
                    if (k < 2 || k > 1000000) vat.fail("factors must be >= 2");
                    fs.push_back((int)k);
                }
                if (fs.empty()) vat.fail("factors must be nonempty");
                if (fs.size() > 3) vat.fail("at most 3 base coordinates supported");
                cfg.factors = fs;
            } else if (key == "delta") {
                cfg.delta = parse_double(val, vat);
                if (cfg.delta < 0.0 || cfg.delta >= 2.0)
                    vat.fail("delta must lie in [0, 2)");
            } else if (key == "pert_radius") {
                cfg.pert_radius = parse_double(val, vat);
                if (cfg.pert_radius <= 0.0 || cfg.pert_radius > 0.25)
                    vat.fail("pert_radius must lie in (0, 0.25]");
            } else if (key == "lambda_u") {
                cfg.lambda_u = parse_double(val, vat);
                if (cfg.lambda_u <= 0.0 || cfg.lambda_u >= 1.0)
                    vat.fail("lambda_u must lie in (0, 1)");
            } else if (key == "rho") {
                cfg.rho = parse_double(val, vat);
                if (cfg.rho <= 0.0 || cfg.rho > 0.25)
                    vat.fail("rho must lie in (0, 0.25]");
            } else if (key == "lambda_s") {
                cfg.lambda_s = parse_double(val, vat);
                if (cfg.lambda_s < 0.0 || cfg.lambda_s >= 1.0)
                    vat.fail("lambda_s must lie in [0, 1)");
            } else if (key == "rot") {
                cfg.rot = parse_double(val, vat);
            } else if (key == "fiber_override") {
                cfg.fiber_override = parse_double(val, vat);
                if (cfg.fiber_override < 0.0 || cfg.fiber_override >= 1.0)
                    vat.fail("fiber_override must lie in [0, 1)");
            } else if (key == "n_h") {
                long long v = parse_int(val, vat);
                if (v < 1 || v > 100000) vat.fail("n_h must lie in [1, 100000]");
                cfg.n_h = (int)v;
            } else {
                kat.fail("unknown key '" + key + "' in [system]");
            }
        } else if (section == "params") {
            if (key == "alpha") {
                cfg.alpha = parse_double(val, vat);
                if (cfg.alpha <= 0.0 || cfg.alpha > 1.0)
                    vat.fail("alpha must lie in (0, 1]");
            } else if (key == "holonomy_C") {
                cfg.holonomy_C = parse_double(val, vat);
                if (cfg.holonomy_C < 0.0) vat.fail("holonomy_C must be >= 0");
            } else if (key == "holder_amplitude") {
                cfg.holder_amplitude = parse_double(val, vat);
            } else if (key == "srb_obs_tol") {
                cfg.srb_obs_tol = parse_double(val, vat);
                if (cfg.srb_obs_tol <= 0.0) vat.fail("srb_obs_tol must be > 0");
            } else if (key == "srb_pesin_tol") {
                cfg.srb_pesin_tol = parse_double(val, vat);
            } else {
                kat.fail("unknown key '" + key + "' in [params]");
            }
        } else if (section == "schedules") {
            if (key == "epsilons") {
                std::vector<double> es;
                for (const std::string& p : split_list(val)) {
                    double e = parse_double(p, vat);
                    if (e <= 0.0) vat.fail("epsilons must be positive");
                    if (!es.empty() && e >= es.back())
                        vat.fail("epsilons must be strictly decreasing");
                    es.push_back(e);
                }
                if (es.empty()) vat.fail("epsilons must be nonempty");
                cfg.epsilons = es;
            } else if (key == "n_values") {
                std::vector<int> ns;
                for (const std::string& p : split_list(val)) {
                    long long n = parse_int(p, vat);
                    if (n < 1 || n > 1000000) vat.fail("n_values must be >= 1");
                    if (!ns.empty() && n <= ns.back())
                        vat.fail("n_values must be strictly increasing");
                    ns.push_back((int)n);
                }
                if (ns.size() < 2) vat.fail("n_values needs at least two entries");
                cfg.n_values = ns;
            } else if (key == "t_range") {
                size_t c1 = val.find(':');
                size_t c2 = (c1 == std::string::npos) ? std::string::npos
                                                      : val.find(':', c1 + 1);
                if (c1 == std::string::npos || c2 == std::string::npos)
                    vat.fail("t_range must be min:max:steps");
                double a = parse_double(trim(val.substr(0, c1)), vat);
                double b = parse_double(trim(val.substr(c1 + 1, c2 - c1 - 1)), vat);
                long long s = parse_int(trim(val.substr(c2 + 1)), vat);
                if (!(b > a)) vat.fail("t_range needs max > min");
                if (s < 2 || s > 100000) vat.fail("t_range steps must lie in [2, 100000]");
                cfg.t_min = a;
                cfg.t_max = b;
                cfg.t_steps = (int)s;
            } else if (key == "glue_eps") {
                cfg.glue_eps = parse_double(val, vat);
                if (cfg.glue_eps <= 0.0) vat.fail("glue_eps must be > 0");
            } else {
                kat.fail("unknown key '" + key + "' in [schedules]");
            }
        } else if (section == "budgets") {
            long long v = parse_int(val, vat);
            if (key == "candidate_target") {
                if (v < 1) vat.fail("candidate_target must be >= 1");
                cfg.candidate_target = (long)v;
            } else if (key == "pair_budget") {
                if (v < 1) vat.fail("pair_budget must be >= 1");
                cfg.pair_budget = (long)v;
            } else if (key == "attractor_count") {
                if (v < 1) vat.fail("attractor_count must be >= 1");
                cfg.attractor_count = (long)v;
            } else if (key == "burn_in") {
                if (v < 1 || v > 100000) vat.fail("burn_in must lie in [1, 100000]");
                cfg.burn_in = (long)v;
            } else if (key == "n_cells") {
                if (v < 1 || v > 100000000) vat.fail("n_cells must lie in [1, 1e8]");
                cfg.n_cells = (long)v;
            } else if (key == "orbit_length") {
                if (v < 1) vat.fail("orbit_length must be >= 1");
                cfg.orbit_length = (long)v;
            } else if (key == "glue_pairs") {
                if (v < 0) vat.fail("glue_pairs must be >= 0");
                cfg.glue_pairs = (long)v;
            } else if (key == "samples") {
                if (v < 0) vat.fail("samples must be >= 0");
                cfg.samples = (long)v;
            } else if (key == "horizon") {
                if (v < 1 || v > 100000) vat.fail("horizon must lie in [1, 100000]");
                cfg.horizon = (long)v;
            } else {
                kat.fail("unknown key '" + key + "' in [budgets]");
            }
        } else if (section == "run") {
            if (key == "seed") {
                cfg.seed = parse_u64(val, vat);
            } else if (key == "output_dir") {
                if (val.empty()) vat.fail("output_dir must be nonempty");
                cfg.output_dir = val;
            } else if (key == "threads") {
                long long v = parse_int(val, vat);
                if (v < 1 || v > 4096) vat.fail("threads must lie in [1, 4096]");
                cfg.threads = (int)v;
            } else {
                kat.fail("unknown key '" + key + "' in [run]");
            }
        } else { // verify
            if (key == "gates") {
                cfg.gates = split_list(val);
                for (const std::string& gname : cfg.gates)
                    if (gname.empty()) vat.fail("empty name in gates list");
            } else {
                kat.fail("unknown key '" + key + "' in [verify]");
            }
        }
    }

    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_experiment_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string emit_experiment_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    auto list_i = [](const std::vector<int>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i)
            s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    auto list_d = [](const std::vector<double>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + g17(v[i]);
        return s;
    };
    auto list_s = [](const std::vector<std::string>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s;
    };

    os << "[system]\n";
    os << "kind = " << cfg.kind << "\n";
    os << "factors = " << list_i(cfg.factors) << "\n";
    os << "delta = " << g17(cfg.delta) << "\n";
    os << "pert_radius = " << g17(cfg.pert_radius) << "\n";
    os << "lambda_u = " << g17(cfg.lambda_u) << "\n";
    os << "rho = " << g17(cfg.rho) << "\n";
    os << "lambda_s = " << g17(cfg.lambda_s) << "\n";
    os << "rot = " << g17(cfg.rot) << "\n";
    os << "fiber_override = " << g17(cfg.fiber_override) << "\n";
    os << "n_h = " << cfg.n_h << "\n";
    os << "\n[params]\n";
    os << "alpha = " << g17(cfg.alpha) << "\n";
    os << "holonomy_C = " << g17(cfg.holonomy_C) << "\n";
    os << "holder_amplitude = " << g17(cfg.holder_amplitude) << "\n";
    os << "srb_obs_tol = " << g17(cfg.srb_obs_tol) << "\n";
    os << "srb_pesin_tol = " << g17(cfg.srb_pesin_tol) << "\n";
    os << "\n[schedules]\n";
    os << "epsilons = " << list_d(cfg.epsilons) << "\n";
    os << "n_values = " << list_i(cfg.n_values) << "\n";
    os << "t_range = " << g17(cfg.t_min) << ":" << g17(cfg.t_max) << ":"
       << cfg.t_steps << "\n";
    os << "glue_eps = " << g17(cfg.glue_eps) << "\n";
    os << "\n[budgets]\n";
    os << "candidate_target = " << cfg.candidate_target << "\n";
    os << "pair_budget = " << cfg.pair_budget << "\n";
    os << "attractor_count = " << cfg.attractor_count << "\n";
    os << "burn_in = " << cfg.burn_in << "\n";
    os << "n_cells = " << cfg.n_cells << "\n";
    os << "orbit_length = " << cfg.orbit_length << "\n";
    os << "glue_pairs = " << cfg.glue_pairs << "\n";
    os << "samples = " << cfg.samples << "\n";
    os << "horizon = " << cfg.horizon << "\n";
    os << "\n[run]\n";
    os << "seed = " << cfg.seed << "\n";
    os << "output_dir = " << cfg.output_dir << "\n";
    os << "threads = " << cfg.threads << "\n";
    os << "\n[verify]\n";
    os << "gates = " << list_s(cfg.gates) << "\n";
    return os.str();
}

} // namespace tf

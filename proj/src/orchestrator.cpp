#include "thermoformal/orchestrator.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "thermoformal/numfmt.hpp"
#include "thermoformal/potential.hpp"
#include "thermoformal/report.hpp"
#include "thermoformal/rng.hpp"
#include "thermoformal/segment.hpp"
#include "thermoformal/specification.hpp"
#include "thermoformal/thermo.hpp"
#include "thermoformal/transfer.hpp"

namespace tf {

namespace {

struct Workbench {
    BaseMap map;
    ExpansionProfile prof;
    Solenoid f;
    explicit Workbench(const ExperimentConfig& cfg)
        : map(cfg.base_config()),
          prof(build_expansion_profile(map, cfg.lambda_u, cfg.rho)),
          f(map, cfg.skew_config()) {}
};

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

void write_resolved(const ExperimentConfig& cfg) {
    write_text_file(out_path(cfg, "resolved.ini"), emit_experiment_config(cfg));
}

void write_report(const ExperimentConfig& cfg, const std::string& command,
                  const Report& rep, const json* extra = nullptr) {
    json j;
    j["schema_version"] = 1;
    j["command"] = command;
    j["seed"] = cfg.seed;
    if (extra) j["summary"] = *extra;
    j["rows"] = rep.to_json();
    write_text_file(out_path(cfg, "report.json"), j.dump(2) + "\n");
}

void write_rows_csv(const ExperimentConfig& cfg, const std::string& name,
                    const Report& rep) {
    CsvWriter csv(out_path(cfg, name),
                  {"schema_version", "name", "value", "bound", "margin", "pass"});
    for (const CheckRow& r : rep.rows)
        csv.row({"1", r.name, g17(r.value), g17(r.bound), g17(r.margin),
                 r.pass ? "1" : "0"});
}

// exit code from the configured gate list; an empty list gates every row the
// checkers themselves marked gating, and a listed name with no row fails
int exit_by_gates(const Report& rep, const std::vector<std::string>& gates) {
    if (gates.empty()) return rep.all_gating_pass() ? 0 : 1;
    for (const std::string& gname : gates) {
        const CheckRow* r = rep.find(gname);
        if (!r || !r->pass) return 1;
    }
    return 0;
}

void absorb(Report& into, const Report& from) {
    for (const CheckRow& r : from.rows) into.add(r);
}

Potential make_potential_by_name(const std::string& name, const BaseMap& map,
                                 double amplitude) {
    if (name == "zero") return make_zero_potential();
    if (name == "holder") return make_cosine_potential(amplitude);
    if (name == "geo") return make_geometric_potential(map);
    throw ConfigError("unknown potential '" + name + "' (want zero, holder, geo)");
}

Collection collection_by_name(const std::string& name) {
    if (name == "all") return Collection::ALL;
    if (name == "G") return Collection::G;
    if (name == "S") return Collection::S;
    throw ConfigError("unknown collection '" + name + "' (want all, G, S)");
}

PressureParams pressure_params(const ExperimentConfig& cfg, Collection col) {
    PressureParams pp;
    pp.collection = col;
    pp.epsilons = cfg.epsilons;
    pp.ns = cfg.n_values;
    pp.candidate_target = cfg.candidate_target;
    pp.pair_budget = cfg.pair_budget;
    pp.seed = cfg.seed;
    pp.threads = cfg.threads;
    return pp;
}

// spectral full-collection pressure at the zero potential: the transfer
// operator's leading eigenvalue is exact to rounding on these grids, so the
// certificate rests on a tight value instead of a sampled slope
PressureValue spectral_zero_pressure(const Workbench& wb, long n_cells) {
    TransferOperator op = build_transfer_operator(
        wb.map, [](double) { return 0.0; }, n_cells);
    return PressureValue{std::log(op.eigenvalue), 1e-9};
}

} // namespace

int cmd_verify(const ExperimentConfig& cfg) {
    Workbench wb(cfg);
    write_resolved(cfg);

    Report rep;
    try {
        BaseVerifyOpts bopts;
        bopts.alpha = cfg.alpha;
        absorb(rep, verify_base_hypotheses(wb.map, wb.prof, bopts));

        const CheckRow* arow = rep.find("alpha_bound");
        bool alpha_ok = arow && arow->pass;

        absorb(rep, verify_skew_hypotheses(wb.f, wb.prof, cfg.seed));

        if (alpha_ok) {
            Potential zero = make_zero_potential();

            PressureValue p_all;
            if (wb.map.dim() == 1 && cfg.n_cells % wb.map.degree() == 0) {
                p_all = spectral_zero_pressure(wb, cfg.n_cells);
            } else {
                PressureParams pp = pressure_params(cfg, Collection::ALL);
                pp.candidate_target = std::min(cfg.candidate_target, 200000L);
                DecompositionParams dp =
                    make_decomposition_params(wb.prof, wb.f, cfg.alpha);
                PressureEstimate est =
                    estimate_pressure(wb.f, wb.prof, dp, zero, pp);
                p_all = PressureValue{est.value, est.uncertainty};
            }

            PressureValue p_s{NEG_INF, 0.0};
            if (!wb.prof.omega_empty) {
                // certification only needs the margin to clear the estimator's
                // uncertainty band, so the slow-collection budget here is a
                // fraction of what the pressure command spends
                PressureParams pp = pressure_params(cfg, Collection::S);
                pp.candidate_target = std::min(cfg.candidate_target, 20000L);
                DecompositionParams dp =
                    make_decomposition_params(wb.prof, wb.f, cfg.alpha);
                PressureEstimate est =
                    estimate_pressure(wb.f, wb.prof, dp, zero, pp);
                p_s = PressureValue{est.value, est.uncertainty};
            }

            absorb(rep, uniqueness_certificate(zero, wb.prof, cfg.alpha, p_all, p_s));

            VariationGap vg = variation_gap(zero, wb.prof, cfg.alpha);
            rep.add("variation_gap", vg.variation, vg.rhs, vg.rhs - vg.variation,
                    vg.pass, false,
                    "small oscillation is sufficient for the ceiling gap, "
                    "not necessary");

            absorb(rep, srb_hypothesis_check(wb.map, wb.prof, cfg.alpha, false));
        }
    } catch (const NumericError& e) {
        rep.add("aborted", 0.0, 0.0, 0.0, false, true, e.what());
        write_rows_csv(cfg, "verify.csv", rep);
        write_report(cfg, "verify", rep);
        return 1;
    }

    write_rows_csv(cfg, "verify.csv", rep);
    write_report(cfg, "verify", rep);
    return exit_by_gates(rep, cfg.gates);
}

namespace {

int run_pressure_like(const ExperimentConfig& cfg, const std::string& command,
                      const PressureOptions& opt, const std::string& csv_name,
                      const std::string& json_name) {
    Workbench wb(cfg);
    write_resolved(cfg);

    Report rep;
    try {
        DecompositionParams dp = make_decomposition_params(wb.prof, wb.f, cfg.alpha);
        Potential phi =
            make_potential_by_name(opt.potential, wb.map, cfg.holder_amplitude);
        PressureParams pp =
            pressure_params(cfg, collection_by_name(opt.collection));
        PressureEstimate est = estimate_pressure(wb.f, wb.prof, dp, phi, pp);

        est.write_csv(out_path(cfg, csv_name));
        json summary = json::parse(est.to_json());
        summary["schema_version"] = 1;
        write_text_file(out_path(cfg, json_name), summary.dump(2) + "\n");

        std::string note = "collection=" + est.collection +
                           " potential=" + est.phi_kind +
                           (est.unreliable ? " unreliable" : "") +
                           (est.candidate_limited ? " candidate_limited" : "");
        rep.add("pressure_estimate", est.value, est.uncertainty, est.uncertainty,
                !est.empty_collection, true, note);

        json extra;
        extra["pressure"] = jnum(est.value);
        extra["uncertainty"] = jnum(est.uncertainty);
        write_report(cfg, command, rep, &extra);
    } catch (const NumericError& e) {
        rep.add("aborted", 0.0, 0.0, 0.0, false, true, e.what());
        write_report(cfg, command, rep);
        return 1;
    }
    return rep.all_gating_pass() ? 0 : 1;
}

} // namespace

int cmd_pressure(const ExperimentConfig& cfg, const PressureOptions& opt) {
    return run_pressure_like(cfg, "pressure", opt, "pressure.csv", "pressure.json");
}

int cmd_entropy(const ExperimentConfig& cfg) {
    PressureOptions opt; // zero potential over everything: the entropy run
    return run_pressure_like(cfg, "entropy", opt, "entropy.csv", "entropy.json");
}

int cmd_classify(const ExperimentConfig& cfg) {
    Workbench wb(cfg);
    write_resolved(cfg);

    Report rep;
    try {
        DecompositionParams dp = make_decomposition_params(wb.prof, wb.f, cfg.alpha);
        int n = cfg.n_values.back();

        std::vector<SolenoidPoint> starts =
            cfg.samples > 0
                ? sample_chains(wb.f, cfg.samples, (int)cfg.burn_in, cfg.seed,
                                STREAM_CHAINS, cfg.threads)
                : std::vector<SolenoidPoint>{};

        std::vector<OrbitSegment> segs;
        segs.reserve(starts.size());
        long in_g = 0, in_s = 0, neither = 0;
        for (const SolenoidPoint& p : starts) {
            OrbitSegment seg = make_segment(wb.f, wb.prof, p, n);
            SegmentClass cls = classify_segment(seg, dp);
            in_g += cls.in_G ? 1 : 0;
            in_s += cls.in_S ? 1 : 0;
            neither += (!cls.in_G && !cls.in_S) ? 1 : 0;
            segs.push_back(std::move(seg));
        }
        write_segments_csv(out_path(cfg, "segments.csv"), segs, dp);

        double total = (double)segs.size();
        rep.add("classify_total", total, (double)cfg.samples, 0.0,
                (long)segs.size() == cfg.samples, true,
                "segments sampled at length " + std::to_string(n));
        rep.add("classify_good", (double)in_g, total, 0.0, true, false, "");
        rep.add("classify_slow", (double)in_s, total, 0.0, true, false, "");
        rep.add("classify_neither", (double)neither, total, 0.0, true, false, "");

        json extra;
        extra["segments"] = (long)segs.size();
        extra["good"] = in_g;
        extra["slow"] = in_s;
        extra["neither"] = neither;
        extra["length"] = n;
        write_report(cfg, "classify", rep, &extra);
    } catch (const NumericError& e) {
        rep.add("aborted", 0.0, 0.0, 0.0, false, true, e.what());
        write_report(cfg, "classify", rep);
        return 1;
    }
    return rep.all_gating_pass() ? 0 : 1;
}

int cmd_spec(const ExperimentConfig& cfg) {
    Workbench wb(cfg);
    write_resolved(cfg);

    Report rep;
    try {
        DecompositionParams dp = make_decomposition_params(wb.prof, wb.f, cfg.alpha);
        int min_len = cfg.n_values.front();
        int max_len = cfg.n_values.back();
        GluePairSample gp =
            sample_glue_pairs(wb.f, wb.prof, dp, (int)cfg.glue_pairs, min_len,
                              max_len, cfg.glue_eps, cfg.seed);

        CsvWriter csv(out_path(cfg, "glue.csv"),
                      {"schema_version", "pair", "n_first", "n_second",
                       "transition", "shadow_error", "pass"});
        long failures = 0;
        double worst = 0.0;
        for (size_t i = 0; i < gp.pairs.size(); ++i) {
            const auto& pr = gp.pairs[i];
            double err = 0.0;
            int tau = -1;
            bool ok = true;
            try {
                GlueResult res = specification_glue(
                    wb.f, wb.prof, dp, {pr.first, pr.second}, cfg.glue_eps);
                for (double e : res.shadow_errors) err = std::max(err, e);
                tau = res.transitions.empty() ? -1 : res.transitions.back();
                ok = err <= cfg.glue_eps;
            } catch (const NumericError&) {
                ok = false;
            }
            failures += ok ? 0 : 1;
            worst = std::max(worst, err);
            csv.row({"1", std::to_string(i), std::to_string(pr.first.length),
                     std::to_string(pr.second.length), std::to_string(tau),
                     g17(err), ok ? "1" : "0"});
        }

        std::string note = "pairs=" + std::to_string(gp.pairs.size()) +
                           " rejected_not_good=" + std::to_string(gp.rejected_not_good) +
                           " rejected_junction=" + std::to_string(gp.rejected_junction) +
                           " rejected_horizon=" + std::to_string(gp.rejected_horizon);
        rep.add("specification_shadowing", worst, cfg.glue_eps,
                cfg.glue_eps - worst, failures == 0, true, note);

        json extra;
        extra["pairs"] = (long)gp.pairs.size();
        extra["failures"] = failures;
        extra["worst_shadow_error"] = jnum(worst);
        extra["eps"] = jnum(cfg.glue_eps);
        write_report(cfg, "spec", rep, &extra);
    } catch (const NumericError& e) {
        rep.add("aborted", 0.0, 0.0, 0.0, false, true, e.what());
        write_report(cfg, "spec", rep);
        return 1;
    }
    return rep.all_gating_pass() ? 0 : 1;
}

int cmd_curve(const ExperimentConfig& cfg, const CurveOptions& opt) {
    Workbench wb(cfg);
    write_resolved(cfg);

    double t0 = opt.override_range ? opt.t_min : cfg.t_min;
    double t1 = opt.override_range ? opt.t_max : cfg.t_max;
    int steps = opt.override_range ? opt.steps : cfg.t_steps;
    if (!(t1 > t0) || steps < 2)
        throw ConfigError("curve range needs max > min and at least 2 steps");

    Report rep;
    try {
        PressureCurve pc = pressure_curve(wb.f, wb.prof, cfg.alpha, t0, t1, steps,
                                          cfg.n_cells, cfg.threads);
        pc.write_csv(out_path(cfg, "curve.csv"));
        json cj = pc.to_json();
        cj["schema_version"] = 1;
        write_text_file(out_path(cfg, "curve.json"), cj.dump(2) + "\n");

        rep.add("curve_floor", pc.floor_ok ? 1.0 : 0.0, 1.0, 0.0, pc.floor_ok,
                true, "pressure stays above the degree-and-infimum floor");
        rep.add("curve_convex", pc.convex_ok ? 1.0 : 0.0, 1.0, 0.0, pc.convex_ok,
                true, "second differences nonnegative on the grid");
        rep.add("curve_decrease", pc.decrease_ok ? 1.0 : 0.0, 1.0, 0.0,
                pc.decrease_ok, pc.decrease_applicable,
                pc.decrease_applicable
                    ? "strictly decreasing (negative weight everywhere)"
                    : "not applicable: the weight reaches zero");
        rep.add("curve_stagnation", pc.stagnated_any ? 1.0 : 0.0, 0.0, 0.0,
                !pc.stagnated_any, true, "every grid solve converged");
        rep.add("curve_root", pc.root, 0.0, 0.0, true, false,
                pc.has_root ? "largest sign change of the pressure"
                            : "no sign change on the grid");

        json extra;
        extra["root"] = jnum(pc.root);
        extra["root_found"] = pc.has_root;
        extra["t_min"] = jnum(t0);
        extra["t_max"] = jnum(t1);
        extra["steps"] = steps;
        write_report(cfg, "curve", rep, &extra);
    } catch (const NumericError& e) {
        rep.add("aborted", 0.0, 0.0, 0.0, false, true, e.what());
        write_report(cfg, "curve", rep);
        return 1;
    }
    return rep.all_gating_pass() ? 0 : 1;
}

int cmd_srb(const ExperimentConfig& cfg) {
    Workbench wb(cfg);
    write_resolved(cfg);

    Report rep;
    try {
        absorb(rep, srb_check(wb.f, cfg.n_cells, cfg.orbit_length, cfg.seed,
                              cfg.srb_obs_tol, cfg.srb_pesin_tol, cfg.threads));
        absorb(rep, srb_hypothesis_check(wb.map, wb.prof, cfg.alpha, false));
        write_rows_csv(cfg, "srb.csv", rep);
        write_report(cfg, "srb", rep);
    } catch (const NumericError& e) {
        rep.add("aborted", 0.0, 0.0, 0.0, false, true, e.what());
        write_report(cfg, "srb", rep);
        return 1;
    }
    return exit_by_gates(rep, cfg.gates);
}

} // namespace tf

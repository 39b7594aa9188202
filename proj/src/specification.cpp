#include "thermoformal/specification.hpp"
#include <algorithm>
#include <cmath>

namespace tf {

namespace {

// preimage of y under coordinate map closest to a known reference preimage.
// Enumerating all branches and picking the nearest avoids the half-turn jump
// that raw branch-index inversion takes at a branch-image seam.
double nearest_preimage(const BaseMap& g, int coord, double y, double ref) {
    int k = g.factor(coord);
    double best = 0.0, bd = 2.0;
    for (int b = 0; b < k; ++b) {
        double c = g.inv1(coord, b, y);
        double d = circ_dist(c, ref);
        if (d < bd) { bd = d; best = c; }
    }
    return best;
}

Pt nearest_preimage_pt(const BaseMap& g, const Pt& y, const Pt& ref) {
    Pt w(y.size());
    for (size_t c = 0; c < y.size(); ++c)
        w[c] = nearest_preimage(g, (int)c, y[c], ref[c]);
    return w;
}

// pull w back through a segment's own branch structure, staying glued to the
// stored orbit; good-block itineraries make this a theta-contraction
void pull_through_segment(const BaseMap& g, const OrbitSegment& seg, Pt& w,
                          double guard) {
    for (int i = seg.length - 1; i >= 0; --i) {
        const Pt& ref = seg.orbit[(size_t)i].base;
        w = nearest_preimage_pt(g, w, ref);
        if (dist_torus(w, ref) > guard)
            throw NumericError("gluing pullback left the contraction neighborhood; "
                               "the shadowing scale is too large for this segment");
    }
}

bool arcs_contain(const std::vector<Arc>& arcs, const Pt& w) {
    for (size_t c = 0; c < w.size(); ++c)
        if (!arcs[c].contains_point(w[c])) return false;
    return true;
}

bool arcs_full(const std::vector<Arc>& arcs) {
    for (auto& a : arcs) if (!a.full()) return false;
    return true;
}

std::vector<Arc> arcs_image(const BaseMap& g, const std::vector<Arc>& arcs) {
    std::vector<Arc> out(arcs.size());
    for (size_t c = 0; c < arcs.size(); ++c)
        out[c] = g.arc_image((int)c, arcs[c]);
    return out;
}

std::vector<Arc> ball_arcs(const Pt& center, double radius) {
    std::vector<Arc> out(center.size());
    for (size_t c = 0; c < center.size(); ++c)
        out[c] = arc_around(center[c], radius);
    return out;
}

// forward time for the ball around `from` to fully cover the torus (the
// junction pre-check); -1 when the cap is exhausted, e.g. inside a basin
int time_to_full_cover(const BaseMap& g, const Pt& from, double radius, int cap) {
    std::vector<Arc> arcs = ball_arcs(from, radius);
    for (int t = 0; t <= cap; ++t) {
        if (arcs_full(arcs)) return t;
        arcs = arcs_image(g, arcs);
    }
    return -1;
}

} // namespace

GlueParams make_glue_params(const Solenoid& f, const ExpansionProfile& prof,
                            double eps, int tau_cap) {
    if (!(eps > 0.0)) throw ConfigError("gluing scale eps must be positive");
    const BaseMap& g = f.base_map();
    double delta0 = prof.rho;
    for (int c = 0; c < g.dim(); ++c)
        delta0 = std::min(delta0, 0.5 / g.factor(c));
    if (eps > delta0)
        throw ConfigError("eps = " + g17(eps) + " exceeds the largest gluable scale "
                          "delta_0 = " + g17(delta0) +
                          " (branch half-width and slow-region fattening)");

    GlueParams gp;
    gp.eps = eps;
    gp.delta0 = delta0;
    gp.tau_cap = tau_cap;

    double lam = f.lambda_s();
    double fiber_cap = 1.0;
    if (f.rot() > 0.0)
        fiber_cap = std::min(1.0, (1.0 - lam) / (4.0 * M_PI * f.rot()));
    gp.delta_base = std::min(eps, delta0) * fiber_cap;

    double slice = f.slice_radius();
    gp.tau_s = 1;
    if (slice > 0.0 && lam > 0.0)
        gp.tau_s = std::max(1, (int)std::ceil(std::log(8.0 * slice / eps) /
                                              std::log(1.0 / lam)));

    CoverEstimate est = covering_time(g, 0.5 * gp.delta_base, 0.5 * gp.delta_base,
                                      0.0, tau_cap);
    if (est.tau <= 0)
        throw NumericError("no ball of radius " + g17(0.5 * gp.delta_base) +
                           " covers the torus within " + std::to_string(tau_cap) +
                           " steps; the map is not topologically mixing at this scale");
    gp.tau_hat = est.tau;
    gp.tau_bound = gp.tau_hat + gp.tau_s;
    return gp;
}

GlueResult specification_glue(const Solenoid& f, const ExpansionProfile& prof,
                              const DecompositionParams& dparams,
                              const std::vector<OrbitSegment>& segments,
                              double eps, const GlueParams* pre) {
    if (segments.empty())
        throw ConfigError("specification_glue needs at least one segment");
    for (size_t j = 0; j < segments.size(); ++j) {
        SegmentClass sc = classify_segment(segments[j], dparams);
        if (!sc.in_G)
            throw ConfigError("segment " + std::to_string(j) +
                              " is not a good block; only good blocks glue");
    }
    GlueParams gp = pre ? *pre : make_glue_params(f, prof, eps, 400);
    if (gp.eps != eps)
        throw ConfigError("glue parameters were prepared for a different eps");

    const size_t ell = segments.size();
    GlueResult out;
    out.eps = eps;
    out.tau_bound = gp.tau_bound;

    if (ell == 1) {
        out.z = segments[0].start;
        out.offsets = {0};
        out.shadow_errors = {0.0};
        return out;
    }

    const BaseMap& g = f.base_map();
    // damage control bound for intermediate pullback distances: delta_base
    // stretched by at most L_global per prescribed step
    double guard = prof.rho * (1.0 + 1e-9);

    // backward chains of each target segment's start, used to prescribe the
    // final tau_s transition steps so the fiber aligns on arrival
    std::vector<BackChain> start_chains(ell);
    for (size_t j = 1; j < ell; ++j) {
        auto br = f.reconstruct_branches(segments[j].start);
        start_chains[j] = f.chain_with_branches(segments[j].start.base, br);
        if (start_chains[j].depth() < gp.tau_s)
            throw ConfigError("backward replay depth is smaller than tau_s");
    }

    out.transitions.assign(ell - 1, 0);
    Pt w = segments[ell - 1].orbit.back().base;

    for (size_t j = ell - 1; j >= 1; --j) {
        // through segment j itself: w enters its Bowen tube at level 0
        pull_through_segment(g, segments[j], w, guard);

        // prescribed steps along the start's own backward chain
        const BackChain& ch = start_chains[j];
        for (int t = 1; t <= gp.tau_s; ++t)
            w = nearest_preimage_pt(g, w, ch.points[(size_t)t]);

        // free covering steps from the previous segment's endpoint ball
        const Pt& prev_end = segments[j - 1].orbit.back().base;
        std::vector<std::vector<Arc>> tube;
        tube.push_back(ball_arcs(prev_end, gp.delta_base));
        int t_free = -1;
        for (int t = 0; t <= gp.tau_cap; ++t) {
            if (arcs_contain(tube.back(), w)) { t_free = t; break; }
            tube.push_back(arcs_image(g, tube.back()));
        }
        if (t_free < 0)
            throw NumericError(
                "transition search exhausted after " + std::to_string(gp.tau_cap) +
                " steps: the ball at base " + g17(prev_end[0]) +
                " never reaches the next segment (an endpoint inside an attracting "
                "basin cannot be glued)");
        out.transitions[j - 1] = t_free + gp.tau_s;

        // walk the free part backward, keeping every level inside its arc
        for (int t = t_free; t >= 1; --t) {
            Pt wprev(w.size());
            for (size_t c = 0; c < w.size(); ++c) {
                int k = g.factor((int)c);
                bool found = false;
                for (int b = 0; b < k && !found; ++b) {
                    double cand = g.inv1((int)c, b, w[c]);
                    if (tube[(size_t)t - 1][c].contains_point(cand)) {
                        wprev[c] = cand;
                        found = true;
                    }
                }
                if (!found)
                    throw NumericError("no inverse branch lands inside the covering "
                                       "tube; arc bookkeeping is inconsistent");
            }
            w = wprev;
        }
    }

    pull_through_segment(g, segments[0], w, guard);
    out.z = f.holonomy(segments[0].start.base, w, segments[0].start);

    // offsets and honest re-verification by direct forward iteration
    out.offsets.assign(ell, 0);
    for (size_t j = 1; j < ell; ++j)
        out.offsets[j] = out.offsets[j - 1] + segments[j - 1].length +
                         out.transitions[j - 1];

    out.shadow_errors.assign(ell, 0.0);
    SolenoidPoint p = out.z;
    long step = 0;
    for (size_t j = 0; j < ell; ++j) {
        while (step < out.offsets[j]) { p = f.eval(p); ++step; }
        double worst = 0.0;
        SolenoidPoint q = p;
        for (int m = 0; m <= segments[j].length; ++m) {
            worst = std::max(worst, f.metric(q, segments[j].orbit[(size_t)m]));
            if (m < segments[j].length) q = f.eval(q);
        }
        out.shadow_errors[j] = worst;
        if (worst > eps)
            throw NumericError("gluing re-verification failed: segment " +
                               std::to_string(j) + " shadow error " + g17(worst) +
                               " exceeds eps = " + g17(eps) +
                               " (a double holds the glue point to ~1e-16, and the "
                               "derivative product over the glued windows amplifies "
                               "that past eps; shorter windows stay representable)");
        if (out.transitions.size() > j && out.transitions[j] > gp.tau_bound)
            throw NumericError("transition length exceeded its reported bound");
    }
    return out;
}

json GlueResult::to_json() const {
    json o;
    o["eps"] = jnum(eps);
    o["tau_bound"] = tau_bound;
    json zb = json::array(), zr = json::array(), zi = json::array();
    for (double v : z.base) zb.push_back(jnum(v));
    for (auto& c : z.fiber) { zr.push_back(jnum(c.real())); zi.push_back(jnum(c.imag())); }
    o["z"] = {{"base", zb}, {"fiber_re", zr}, {"fiber_im", zi}};
    o["transitions"] = transitions;
    o["offsets"] = offsets;
    json se = json::array();
    for (double v : shadow_errors) se.push_back(jnum(v));
    o["shadow_errors"] = se;
    double worst = 0.0;
    for (double v : shadow_errors) worst = std::max(worst, v);
    o["max_shadow_error"] = jnum(worst);
    return o;
}

GluePairSample sample_glue_pairs(const Solenoid& f, const ExpansionProfile& prof,
                                 const DecompositionParams& dparams, int count,
                                 int min_len, int max_len, double eps,
                                 uint64_t seed, const GlueParams* pre) {
    if (count <= 0 || min_len < 1 || max_len < min_len)
        throw ConfigError("sample_glue_pairs: bad count or length range");
    GlueParams gp = pre ? *pre : make_glue_params(f, prof, eps, 400);
    const BaseMap& g = f.base_map();
    RngCursor rc(seed, STREAM_GLUE);
    GluePairSample out;

    auto draw_good = [&](long budget) -> OrbitSegment {
        for (long a = 0; a < budget; ++a) {
            Pt x0((size_t)g.dim());
            for (auto& c : x0) c = rc.uniform();
            BackChain ch = f.random_chain(x0, f.n_h(), rc);
            int n = min_len + (int)rc.below((uint64_t)(max_len - min_len + 1));
            OrbitSegment seg = make_segment(f, prof, f.point_from_chain(ch), n);
            if (classify_segment(seg, dparams).in_G) return seg;
            ++out.rejected_not_good;
        }
        throw NumericError("sample_glue_pairs: could not find a good block; "
                           "alpha may be too small for this map");
    };

    long budget = 200L * count + 1000;
    while ((int)out.pairs.size() < count) {
        OrbitSegment a = draw_good(budget);
        OrbitSegment b = draw_good(budget);
        // junction pre-check: the endpoint ball must cover within tau_hat,
        // which guarantees the glued transition respects tau_bound
        int tc = time_to_full_cover(g, a.orbit.back().base, gp.delta_base, gp.tau_hat);
        if (--budget <= 0)
            throw NumericError("sample_glue_pairs: rejection budget exhausted");
        if (tc < 0) { ++out.rejected_junction; continue; }
        try {
            (void)specification_glue(f, prof, dparams, {a, b}, eps, &gp);
        } catch (const NumericError&) {
            // total forward expansion beyond the double-precision horizon
            ++out.rejected_horizon;
            continue;
        }
        out.pairs.emplace_back(std::move(a), std::move(b));
    }
    return out;
}

Report contraction_bound_check(const Solenoid& f, const ExpansionProfile& prof,
                               const DecompositionParams& dparams, double C,
                               double eta, int num_samples, int max_n,
                               uint64_t seed) {
    if (!(C >= 1.0)) throw ConfigError("contraction_bound_check: C must be >= 1");
    if (!(eta > 0.0) || eta >= prof.rho / C)
        throw ConfigError("contraction_bound_check needs 0 < eta < rho / C");
    if (max_n < 1 || num_samples < 1)
        throw ConfigError("contraction_bound_check: bad sample parameters");

    const BaseMap& g = f.base_map();
    double lam = f.lambda_s();
    double slice = f.slice_radius();
    RngCursor rc(seed, STREAM_LEMMA);

    // depth past which re-randomized chain branches move the fiber by at most
    // eta/2: 2 * slice * lam^d <= eta/2
    int d_fiber = 1;
    if (slice > 0.0 && lam > 0.0)
        d_fiber = std::max(1, (int)std::ceil(std::log(4.0 * slice / eta) /
                                             std::log(1.0 / lam)));
    if (d_fiber >= f.n_h())
        throw ConfigError("replay depth too small for the requested eta");

    auto bowen = [&](const SolenoidPoint& x, const SolenoidPoint& y, int n,
                     std::vector<SolenoidPoint>* ox, std::vector<SolenoidPoint>* oy) {
        SolenoidPoint a = x, b = y;
        double d = 0.0;
        for (int k = 0; k < n; ++k) {
            if (ox) (*ox)[(size_t)k] = a;
            if (oy) (*oy)[(size_t)k] = b;
            d = std::max(d, f.metric(a, b));
            if (k + 1 < n) { a = f.eval(a); b = f.eval(b); }
        }
        return d;
    };

    long violations = 0, built = 0, fiber_kind = 0, base_kind = 0, mixed_kind = 0;
    double max_ratio = 0.0;
    long attempts_cap = 400L * num_samples + 1000;

    while (built < num_samples && attempts_cap-- > 0) {
        Pt x0((size_t)g.dim());
        for (auto& c : x0) c = rc.uniform();
        BackChain ch = f.random_chain(x0, f.n_h(), rc);
        SolenoidPoint x = f.point_from_chain(ch);
        int n = 1 + (int)rc.below((uint64_t)max_n);
        OrbitSegment seg = make_segment(f, prof, x, n);
        if (!classify_segment(seg, dparams).in_G) continue;

        int kind = (int)rc.below(4); // 0 fiber, 1 base, 2-3 mixed
        bool want_fiber = (kind != 1), want_base = (kind != 0);

        // fiber move: keep the first d_fiber backward branches, re-randomize
        // the rest (stays on the attractor, |fiber delta| <= 2 slice lam^d)
        std::vector<std::vector<int>> br = ch.branches;
        if (want_fiber)
            for (int t = d_fiber; t < (int)br.size(); ++t)
                for (size_t c = 0; c < br[(size_t)t].size(); ++c)
                    br[(size_t)t][c] = (int)rc.below((uint64_t)g.factor((int)c));

        double u = want_base ? eta * 0.5 : 0.0;
        int coord = (int)rc.below((uint64_t)g.dim());
        double sign = rc.uniform() < 0.5 ? -1.0 : 1.0;

        SolenoidPoint y;
        double dn = 0.0;
        bool ok = false;
        for (int half = 0; half < 200; ++half) {
            Pt yb = x.base;
            if (want_base) yb[(size_t)coord] = wrap01(yb[(size_t)coord] + sign * u);
            // matched backward chain over the shifted base
            BackChain cy;
            cy.points.push_back(yb);
            cy.branches = want_fiber ? br : ch.branches;
            for (int t = 0; t < (int)cy.branches.size(); ++t) {
                Pt prev = cy.points.back();
                Pt nxt((size_t)g.dim());
                for (size_t c = 0; c < nxt.size(); ++c) {
                    if (want_base)
                        nxt[c] = nearest_preimage(g, (int)c, prev[c],
                                                  ch.points[(size_t)t + 1][c]);
                    else
                        nxt[c] = g.inv1((int)c, cy.branches[(size_t)t][c], prev[c]);
                }
                cy.points.push_back(nxt);
            }
            if (want_base && want_fiber) {
                // replace the tail below d_fiber with the re-drawn branches
                for (int t = d_fiber; t < (int)cy.branches.size(); ++t) {
                    Pt prev = cy.points[(size_t)t];
                    Pt nxt((size_t)g.dim());
                    for (size_t c = 0; c < nxt.size(); ++c)
                        nxt[c] = g.inv1((int)c, cy.branches[(size_t)t][c], prev[c]);
                    cy.points[(size_t)t + 1] = nxt;
                }
            }
            y = f.point_from_chain(cy);
            dn = bowen(x, y, n, nullptr, nullptr);
            if (dn <= eta) { ok = true; break; }
            if (!want_base) break; // pure fiber either fits or the sample is skipped
            u *= 0.5;
        }
        if (!ok) continue;

        std::vector<SolenoidPoint> ox((size_t)n), oy((size_t)n);
        bowen(x, y, n, &ox, &oy);
        for (int k = 0; k < n; ++k) {
            double lhs = f.metric(ox[(size_t)k], oy[(size_t)k]);
            double rhs = C * eta * (std::pow(dparams.theta, n - k) +
                                    std::pow(lam, k));
            double r = lhs / rhs;
            if (r > max_ratio) max_ratio = r;
            if (lhs > rhs) ++violations;
        }
        ++built;
        if (kind == 0) ++fiber_kind;
        else if (kind == 1) ++base_kind;
        else ++mixed_kind;
    }

    Report rep;
    std::string mix = std::to_string(fiber_kind) + " fiber / " +
                      std::to_string(base_kind) + " base / " +
                      std::to_string(mixed_kind) + " mixed perturbations";
    rep.add("two_scale_ratio", max_ratio, 1.0, 1.0 - max_ratio, max_ratio <= 1.0,
            true, "max over k < n of d(f^k x, f^k y) / (C eta (theta^{n-k} + "
            "lambda_s^k)) across " + std::to_string(built) + " verified Bowen "
            "pairs, C = " + g17(C) + "; " + mix);
    rep.add("two_scale_violations", (double)violations, 0.0, -(double)violations,
            violations == 0, true,
            "pointwise exceedances of the two-scale envelope");
    if (built < num_samples)
        rep.add("two_scale_samples", (double)built, (double)num_samples,
                (double)(built - num_samples), false, true,
                "sample budget exhausted before reaching the request");
    return rep;
}

} // namespace tf

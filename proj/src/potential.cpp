#include "thermoformal/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tf {

static const double TWO_PI = 2.0 * M_PI;

Potential make_zero_potential() {
    Potential p;
    p.kind = "zero";
    p.eval = [](const SolenoidPoint&) { return 0.0; };
    p.holder_K = 0.0;
    p.holder_exponent = 1.0;
    p.sup_attractor = 0.0;
    p.inf_attractor = 0.0;
    p.sup_slow = 0.0;
    p.sups_estimated = true;
    return p;
}

Potential make_cosine_potential(double amplitude) {
    Potential p;
    p.kind = "holder_test";
    p.eval = [amplitude](const SolenoidPoint& x) {
        return amplitude * std::cos(TWO_PI * x.base[0]);
    };
    double a = std::fabs(amplitude);
    p.holder_K = a * 2.0 * M_PI; // |d/dx cos(2 pi x)| <= 2 pi, and d >= base gap
    p.holder_exponent = 1.0;
    p.sup_attractor = a;
    p.inf_attractor = -a;
    p.sup_slow = a; // safe without a profile; estimate_potential_sups refines
    p.sups_estimated = true;
    return p;
}

Potential make_geometric_potential(const BaseMap& g) {
    Potential p;
    p.kind = "geometric";
    const BaseMap* gp = &g;
    const int m = g.dim();
    p.eval = [gp, m](const SolenoidPoint& x) {
        double s = 0.0;
        for (int c = 0; c < m; ++c) s -= std::log(gp->deriv1(c, x.base[c]));
        return s;
    };
    p.holder_exponent = 1.0;

    // per-coordinate scan of v(x) = -log g_c'(x): the value range is exact up
    // to grid resolution and the Lipschitz constant comes from consecutive
    // differences, padded because the true slope can peak between nodes
    const int grid = 20001;
    double ksum = 0.0, sup = 0.0, inf = 0.0;
    for (int c = 0; c < m; ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo, kc = 0.0;
        double prev = 0.0, first = 0.0;
        for (int i = 0; i < grid; ++i) {
            double v = -std::log(g.deriv1(c, (double)i / grid));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            if (i == 0) first = v;
            else kc = std::max(kc, std::fabs(v - prev) * grid);
            prev = v;
        }
        kc = std::max(kc, std::fabs(first - prev) * grid); // wrap pair
        ksum += 1.5 * kc;
        sup += hi;
        inf += lo;
    }
    p.holder_K = ksum;
    p.sup_attractor = sup;
    p.inf_attractor = inf;
    p.sup_slow = sup; // conservative; the slow region only shrinks it
    p.sups_estimated = true;
    return p;
}

// depth at which a replayed fiber is settled to ~1e-13
static int settle_depth(const Solenoid& f) {
    double lam = f.lambda_s();
    double span = std::max(2.0 * f.slice_radius(), 1e-3);
    int d = (int)std::ceil(std::log(span / 1e-13) / std::log(1.0 / lam));
    return std::min(std::max(d, 8), 2 * f.n_h());
}

void estimate_potential_sups(const Solenoid& f, const ExpansionProfile& prof,
                             Potential& phi, long samples, int refine_steps,
                             uint64_t seed, int threads) {
    if (samples < 1) throw ConfigError("estimate_potential_sups: samples must be positive");
    const int D = settle_depth(f);
    const int m = f.dim();
    auto pts = sample_chains(f, samples, D, seed, STREAM_SUP, threads);

    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    double sup_slow = -std::numeric_limits<double>::infinity();
    long isup = -1, iinf = -1, islow = -1;
    for (long i = 0; i < (long)pts.size(); ++i) {
        double v = phi(pts[i]);
        if (v > sup) { sup = v; isup = i; }
        if (v < inf) { inf = v; iinf = i; }
        if (v > sup_slow && prof.in_omega_rho(pts[i].base)) { sup_slow = v; islow = i; }
    }

    // shrinking local proposals around each incumbent; slow-sup proposals must
    // stay inside the fattened slow region
    RngCursor rc(splitmix64(seed) + 0x7551, STREAM_SUP);
    SolenoidPoint bsup = isup >= 0 ? pts[isup] : SolenoidPoint{};
    SolenoidPoint binf = iinf >= 0 ? pts[iinf] : SolenoidPoint{};
    SolenoidPoint bslow = islow >= 0 ? pts[islow] : SolenoidPoint{};
    for (int k = 0; k < refine_steps; ++k) {
        double radius = 0.01 * std::pow(0.6, k);
        for (int t = 0; t < 16; ++t) {
            for (int which = 0; which < 3; ++which) {
                SolenoidPoint* inc = which == 0 ? &bsup : which == 1 ? &binf : &bslow;
                if (inc->base.empty()) {
                    rc.ctr += (uint64_t)m + (uint64_t)m * (D + 1);
                    continue;
                }
                Pt x(m);
                for (int c = 0; c < m; ++c)
                    x[c] = wrap01(inc->base[c] + radius * (2.0 * rc.uniform() - 1.0));
                BackChain ch = f.random_chain(x, D, rc);
                SolenoidPoint cand = f.point_from_chain(ch);
                double v = phi(cand);
                if (which == 0 && v > sup) { sup = v; bsup = cand; }
                else if (which == 1 && v < inf) { inf = v; binf = cand; }
                else if (which == 2 && v > sup_slow && prof.in_omega_rho(cand.base)) {
                    sup_slow = v;
                    bslow = cand;
                }
            }
        }
    }

    phi.sup_attractor = sup;
    phi.inf_attractor = inf;
    phi.sup_slow = sup_slow;
    phi.sups_estimated = true;
}

Report check_holder_data(const Solenoid& f, const Potential& phi, long pairs,
                         uint64_t seed) {
    if (pairs < 1) throw ConfigError("check_holder_data: pairs must be positive");
    auto pts = sample_chains(f, 2 * pairs, settle_depth(f), seed, STREAM_CHAINS, 1);
    double worst = 0.0;
    long used = 0;
    for (long i = 0; i + 1 < (long)pts.size(); i += 2) {
        double d = f.metric(pts[i], pts[i + 1]);
        if (d < 1e-9) continue;
        double gap = std::fabs(phi(pts[i]) - phi(pts[i + 1]));
        double cap = phi.holder_K * std::pow(d, phi.holder_exponent);
        double r;
        if (cap > 0.0) r = gap / cap;
        else r = gap <= 1e-14 ? 0.0 : std::numeric_limits<double>::infinity();
        worst = std::max(worst, r);
        ++used;
    }
    Report rep;
    rep.add("holder_ratio", worst, 1.0, 1.0 - worst, worst <= 1.0, true,
            "max |phi(x)-phi(y)| / (K d^beta) over " + std::to_string(used) +
                " sampled pairs");
    return rep;
}

} // namespace tf

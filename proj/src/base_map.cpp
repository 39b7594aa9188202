#include "thermoformal/base_map.hpp"
#include <cmath>
#include <algorithm>

namespace tf {

static const double TWO_PI = 2.0 * M_PI;

BaseMap::BaseMap(const BaseMapConfig& cfg) : cfg_(cfg) {
    m_ = cfg.m;
    if (m_ < 1 || m_ > 3)
        throw ConfigError("m must be between 1 and 3 (higher products are rejected)");
    if ((int)cfg.factors.size() != m_)
        throw ConfigError("factors must list exactly m integers");
    k_ = cfg.factors;
    for (int k : k_)
        if (k < 2) throw ConfigError("every factor must be an integer >= 2");
    deg_ = 1;
    for (int k : k_) deg_ *= k;
    for (int i = 0; i < m_ && !repeated_factors_; ++i)
        for (int j = i + 1; j < m_; ++j)
            if (k_[i] == k_[j]) { repeated_factors_ = true; break; }

    if (cfg.lambda_u <= 0.0 || cfg.lambda_u >= 1.0)
        throw ConfigError("lambda_u must lie in (0,1)");
    if (cfg.rho <= 0.0)
        throw ConfigError("rho must be positive");

    if (cfg.kind == "linear") {
        if (cfg.delta != 0.0)
            throw ConfigError("delta must be 0 for the linear family");
        pert_coord_ = -1;
    } else if (cfg.kind == "pitchfork") {
        if (cfg.delta <= 0.0)
            throw ConfigError("delta must be positive for the pitchfork family");
        // perturb the weakest coordinate only
        pert_coord_ = 0;
        for (int i = 1; i < m_; ++i)
            if (k_[i] < k_[pert_coord_]) pert_coord_ = i;
        delta_ = cfg.delta;
        r_ = cfg.pert_radius;
        double half_cell = 0.5 / k_[pert_coord_];
        if (r_ <= 0.0 || r_ > half_cell)
            throw ConfigError("pert_radius must lie in (0, 1/(2 k)] so branch domains stay injective");
        // the lift must stay strictly increasing
        double dmin = 1e300;
        for (int j = 0; j < 100000; ++j)
            dmin = std::min(dmin, deriv1(pert_coord_, j * 1e-5));
        if (dmin <= 1e-9)
            throw ConfigError("derivative not positive: delta too large for this factor");
    } else {
        throw ConfigError("kind must be 'linear' or 'pitchfork'");
    }
}

// quintic plateau: 1 within r/2 of 0, 0 beyond r, C^2 across both edges
double BaseMap::bump(double x) const {
    double d = circ_dist(x, 0.0);
    double w = (r_ - d) / (0.5 * r_);
    if (w <= 0.0) return 0.0;
    if (w >= 1.0) return 1.0;
    return ((6.0 * w - 15.0) * w + 10.0) * w * w * w;
}

double BaseMap::bump_deriv(double x) const {
    double s = circ_diff(x, 0.0);
    double d = std::fabs(s);
    double w = (r_ - d) / (0.5 * r_);
    if (w <= 0.0 || w >= 1.0) return 0.0;
    double s2p = 30.0 * w * w * (w - 1.0) * (w - 1.0);
    double sign = s >= 0.0 ? 1.0 : -1.0;
    return s2p * (-sign / (0.5 * r_));
}

double BaseMap::lift(int coord, double x) const {
    double v = (double)k_[coord] * x;
    if (coord == pert_coord_) {
        double xw = wrap01(x);
        v -= (delta_ / TWO_PI) * bump(xw) * std::sin(TWO_PI * xw);
    }
    return v;
}

double BaseMap::deriv1(int coord, double x) const {
    double v = (double)k_[coord];
    if (coord == pert_coord_) {
        double xw = wrap01(x);
        v -= delta_ * (bump(xw) * std::cos(TWO_PI * xw)
                       + bump_deriv(xw) * std::sin(TWO_PI * xw) / TWO_PI);
    }
    return v;
}

Pt BaseMap::eval(const Pt& x) const {
    Pt y(m_);
    for (int i = 0; i < m_; ++i) y[i] = map1(i, x[i]);
    return y;
}

int BaseMap::branch_of(int coord, double x) const {
    int k = k_[coord];
    double u = wrap01(x + 0.5 / k);
    int b = (int)std::floor(u * k);
    if (b < 0) b = 0;
    if (b >= k) b = k - 1;
    return b;
}

double BaseMap::inv1(int coord, int b, double y) const {
    int k = k_[coord];
    if (b < 0 || b >= k)
        throw NumericError("inverse branch index out of range: " + std::to_string(b));
    y = wrap01(y);
    double lo = domain_lo(coord, b);
    double hi = lo + 1.0 / k;
    double Glo = lift(coord, lo);
    double Ghi = lift(coord, hi); // = Glo + 1 when the bump vanishes at the seams
    double t = y + std::ceil(Glo - y);
    if (t > Ghi + 1e-12) t -= 1.0;
    if (t < Glo - 1e-12) t += 1.0;
    if (coord != pert_coord_)
        return wrap01(t / k);
    // strictly monotone lift: plain bisection
    double a = lo, c = hi;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (a + c);
        if (lift(coord, mid) < t) a = mid; else c = mid;
    }
    double x = 0.5 * (a + c);
    if (std::fabs(lift(coord, x) - t) > 1e-9)
        throw NumericError("inverse branch solve failed on branch " + std::to_string(b));
    return wrap01(x);
}

long BaseMap::branch_encode(const std::vector<int>& b) const {
    long idx = 0, stride = 1;
    for (int i = 0; i < m_; ++i) {
        idx += b[i] * stride;
        stride *= k_[i];
    }
    return idx;
}

std::vector<int> BaseMap::branch_decode(long idx) const {
    std::vector<int> b(m_);
    for (int i = 0; i < m_; ++i) {
        b[i] = (int)(idx % k_[i]);
        idx /= k_[i];
    }
    return b;
}

Pt BaseMap::inv_branch(const Pt& y, const std::vector<int>& b) const {
    Pt x(m_);
    for (int i = 0; i < m_; ++i) x[i] = inv1(i, b[i], y[i]);
    return x;
}

std::vector<Pt> BaseMap::inverse_branches(const Pt& y) const {
    std::vector<Pt> out;
    out.reserve(deg_);
    for (long idx = 0; idx < deg_; ++idx)
        out.push_back(inv_branch(y, branch_decode(idx)));
    return out;
}

double BaseMap::local_lipschitz(const Pt& x) const {
    double L = 0.0;
    for (int i = 0; i < m_; ++i) L = std::max(L, 1.0 / deriv1(i, x[i]));
    return L;
}

Arc BaseMap::arc_image(int coord, const Arc& a) const {
    if (a.full()) return Arc{0.0, 1.0};
    double glo = lift(coord, a.lo);
    double ghi = lift(coord, a.lo + a.len);
    double len = ghi - glo;
    if (len >= 1.0) return Arc{0.0, 1.0};
    return Arc{wrap01(glo), len};
}

double ExpansionProfile::alpha_bound() const {
    if (omega_empty) return 1.0;
    double lu = std::log(lambda_u), lL = std::log(L_global);
    return lu / (lu - lL);
}

json ExpansionProfile::to_json() const {
    json o;
    o["omega_boxes"] = omega_boxes;
    o["L_global"] = omega_empty ? json(nullptr) : jnum(L_global);
    o["lambda_u"] = jnum(lambda_u);
    o["q"] = q;
    o["deg"] = deg;
    o["rho"] = jnum(rho);
    json ivs = json::array();
    for (auto& coord : omega) {
        json c = json::array();
        for (auto& a : coord) c.push_back({{"lo", jnum(a.lo)}, {"len", jnum(a.len)}});
        ivs.push_back(c);
    }
    o["omega_intervals"] = ivs;
    return o;
}

static bool arcs_intersect(const Arc& a, const Arc& b) {
    if (a.full() || b.full()) return a.len > 1e-12 && b.len > 1e-12;
    double off = wrap01(b.lo - a.lo);
    if (off < a.len - 1e-12) return true;
    double off2 = wrap01(a.lo - b.lo);
    return off2 < b.len - 1e-12;
}

// merge a sorted-by-lo list of arcs on the circle
static std::vector<Arc> merge_arcs(std::vector<Arc> arcs) {
    double total = 0.0;
    for (auto& a : arcs) total += a.len;
    if (arcs.empty()) return arcs;
    if (total >= 1.0) return {Arc{0.0, 1.0}};
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.lo < y.lo; });
    std::vector<Arc> out;
    for (auto& a : arcs) {
        if (!out.empty()) {
            Arc& p = out.back();
            double gap = a.lo - (p.lo + p.len);
            if (gap <= 1e-12) {
                double hi = std::max(p.lo + p.len, a.lo + a.len);
                p.len = hi - p.lo;
                continue;
            }
        }
        out.push_back(a);
    }
    // wrap-around merge between last and first
    if (out.size() >= 2) {
        Arc& last = out.back();
        Arc& first = out.front();
        if (last.lo + last.len >= 1.0 + first.lo - 1e-12) {
            double hi = std::max(last.lo + last.len, 1.0 + first.lo + first.len);
            last.len = hi - last.lo;
            if (last.len >= 1.0) return {Arc{0.0, 1.0}};
            out.erase(out.begin());
        }
    }
    return out;
}

ExpansionProfile build_expansion_profile(const BaseMap& map, double lambda_u, double rho, int grid) {
    if (lambda_u <= 0.0 || lambda_u >= 1.0)
        throw ConfigError("lambda_u must lie in (0,1)");
    if (rho <= 0.0) throw ConfigError("rho must be positive");

    ExpansionProfile prof;
    prof.lambda_u = lambda_u;
    prof.rho = rho;
    prof.deg = map.degree();
    prof.omega.resize(map.dim());
    prof.omega_rho.resize(map.dim());

    double thr = 1.0 / lambda_u; // slow means g' <= thr
    double worst_inv_expansion = 0.0;
    bool any = false;

    for (int c = 0; c < map.dim(); ++c) {
        if (c != map.pert_coord()) {
            double k = map.factor(c);
            if (k <= thr) {
                prof.omega[c] = {Arc{0.0, 1.0}};
                worst_inv_expansion = std::max(worst_inv_expansion, 1.0 / k);
                any = true;
            }
            continue;
        }
        // scan the perturbed coordinate
        std::vector<char> slow(grid);
        double min_d_in_slow = 1e300;
        for (int j = 0; j < grid; ++j) {
            double d = map.deriv1(c, (double)j / grid);
            slow[j] = d <= thr;
            if (slow[j]) min_d_in_slow = std::min(min_d_in_slow, d);
        }
        int nslow = 0;
        for (char s : slow) nslow += s;
        if (nslow == 0) continue;
        any = true;
        if (nslow == grid) {
            prof.omega[c] = {Arc{0.0, 1.0}};
            worst_inv_expansion = std::max(worst_inv_expansion, 1.0 / min_d_in_slow);
            continue;
        }
        // maximal circular runs of slow points
        auto refine = [&](double a, double b) {
            // bisect derivative - thr between a fast point and a slow point
            for (int it = 0; it < 40; ++it) {
                double mid = 0.5 * (a + b);
                if (map.deriv1(c, mid) <= thr) b = mid; else a = mid;
            }
            return 0.5 * (a + b);
        };
        std::vector<Arc> arcs;
        int j = 0;
        while (j < grid) {
            if (!slow[j]) { ++j; continue; }
            if (j == 0 && slow[grid - 1]) {
                // run wraps; rotate start to the first fast->slow transition
                int s = 0;
                while (s < grid && slow[s]) ++s;
                while (s < grid && !slow[s]) ++s;
                if (s == grid) break;
                j = s;
            }
            int e = j;
            while (slow[e % grid] && e < j + grid) ++e;
            double step = 1.0 / grid;
            // refine(a,b) expects a fast and b slow
            double lo = refine((j - 1) * step, j * step);
            double hi = refine((double)e * step, (double)(e - 1) * step);
            double len = hi - lo;
            if (len < 0) len += 1.0;
            arcs.push_back(Arc{wrap01(lo), len});
            for (int t = j; t < e; ++t) {
                double d = map.deriv1(c, (double)(t % grid) / grid);
                min_d_in_slow = std::min(min_d_in_slow, d);
            }
            j = e;
        }
        prof.omega[c] = merge_arcs(arcs);
        worst_inv_expansion = std::max(worst_inv_expansion, 1.0 / min_d_in_slow);
    }

    prof.omega_empty = !any;
    if (!prof.omega_empty) {
        prof.L_global = worst_inv_expansion * (1.0 + 1e-6);
        if (prof.L_global <= 1.0)
            throw ConfigError("slow region is nonempty but never contracts under the inverse; "
                              "lambda_u is below 1/max factor");
    }

    // q <- partition elements meeting Omega, via complement product
    long miss_prod = 1;
    for (int c = 0; c < map.dim(); ++c) {
        int k = map.factor(c);
        int hit = 0;
        for (int b = 0; b < k; ++b) {
            Arc dom{wrap01(map.domain_lo(c, b)), 1.0 / k};
            bool meets = false;
            for (auto& s : prof.omega[c])
                if (arcs_intersect(dom, s)) { meets = true; break; }
            hit += meets;
        }
        miss_prod *= (k - hit);
    }
    prof.q = prof.deg - miss_prod;
    prof.omega_boxes = (int)prof.q;
    if (prof.q >= prof.deg && !prof.omega_empty)
        throw ConfigError("slow region meets every partition element (q = deg); "
                          "no expanding symbol remains");

    for (int c = 0; c < map.dim(); ++c) {
        std::vector<Arc> fat;
        for (auto& a : prof.omega[c]) {
            if (a.full() || a.len + 2 * rho >= 1.0) { fat = {Arc{0.0, 1.0}}; break; }
            fat.push_back(Arc{wrap01(a.lo - rho), a.len + 2 * rho});
        }
        prof.omega_rho[c] = merge_arcs(fat);
    }
    return prof;
}

CoverEstimate covering_time(const BaseMap& map, double radius, double net_spacing,
                            double target_gap, int cap) {
    CoverEstimate est;
    for (int c = 0; c < map.dim(); ++c) {
        int n = (int)std::ceil(1.0 / net_spacing);
        double spacing = 1.0 / n;
        est.centers += n;
        for (int j = 0; j < n; ++j) {
            Arc a = arc_around(j * spacing, radius);
            int t = -1;
            for (int it = 0; it <= cap; ++it) {
                if (1.0 - a.len <= target_gap + 1e-15) { t = it; break; }
                a = map.arc_image(c, a);
            }
            if (t < 0) {
                est.flagged++;
                if (est.flagged_examples.size() < 8)
                    est.flagged_examples.push_back(j * spacing);
            } else {
                est.tau = std::max(est.tau, t);
            }
        }
    }
    return est;
}

Report verify_base_hypotheses(const BaseMap& map, const ExpansionProfile& prof,
                              const BaseVerifyOpts& opts) {
    Report rep;

    // expansion away from the slow region: sup of L off Omega vs lambda_u
    double sup_off = 0.0, sup_on = 0.0;
    bool have_on = false;
    for (int c = 0; c < map.dim(); ++c) {
        for (int j = 0; j < opts.grid; ++j) {
            double x = (double)j / opts.grid;
            double invd = 1.0 / map.deriv1(c, x);
            bool in = prof.coord_in(prof.omega[c], x);
            if (in) { sup_on = std::max(sup_on, invd); have_on = true; }
            else sup_off = std::max(sup_off, invd);
        }
    }
    rep.add("h1_off_omega", sup_off, prof.lambda_u, prof.lambda_u - sup_off,
            sup_off < prof.lambda_u);
    if (prof.omega_empty) {
        rep.add("h1_on_omega", 0.0, 0.0, 0.0, true, true, "slow region empty");
        rep.add("h1_expansion", 0.0, 1.0, 0.0, true, true, "slow region empty");
    } else {
        rep.add("h1_on_omega", sup_on, prof.L_global, prof.L_global - sup_on,
                have_on ? sup_on <= prof.L_global : true);
        rep.add("h1_expansion", prof.L_global, 1.0, prof.L_global - 1.0,
                prof.L_global > 1.0);
    }
    double ab = prof.alpha_bound();
    rep.add("alpha_bound", opts.alpha, ab, ab - opts.alpha, opts.alpha < ab);
    rep.add("h2_q_lt_deg", (double)prof.q, (double)prof.deg,
            (double)(prof.deg - prof.q), prof.q < prof.deg);

    CoverEstimate ce = covering_time(map, opts.exact_eps, opts.exact_eps / 2,
                                     2 * opts.exact_eps, opts.exact_cap);
    std::string note = "tau=" + std::to_string(ce.tau);
    if (ce.flagged > 0) {
        note += "; " + std::to_string(ce.flagged) + " of " + std::to_string(ce.centers)
              + " centers never mixed (trapped near the sink)";
    }
    rep.add("exactness", (double)ce.tau, (double)opts.exact_cap,
            ce.flagged == 0 ? (double)(opts.exact_cap - ce.tau) : -(double)ce.flagged,
            ce.flagged == 0, true, note);
    return rep;
}

} // namespace tf

#include "thermoformal/solenoid.hpp"
#include "thermoformal/parallel.hpp"
#include "thermoformal/numfmt.hpp"
#include <cmath>
#include <algorithm>

namespace tf {

static const double TWO_PI = 2.0 * M_PI;

Solenoid::Solenoid(const BaseMap& g, const SkewConfig& sc) : g_(g) {
    lambda_s_ = sc.lambda_s > 0.0 ? sc.lambda_s : std::pow(2.0, -(double)g.degree());
    rot_ = sc.rot;
    if (sc.fiber_override > 0.0) {
        lambda_s_ = sc.fiber_override;
        rot_ = std::min(rot_, 1.0 - lambda_s_); // keep the disk invariant
    }
    n_h_ = sc.n_h;
    if (lambda_s_ <= 0.0 || lambda_s_ >= 1.0)
        throw ConfigError("fiber contraction must lie in (0,1)");
    if (rot_ < 0.0 || lambda_s_ + rot_ > 1.0 + 1e-12)
        throw ConfigError("fiber map must keep the unit disk invariant: lambda_s + rot <= 1");
    if (n_h_ < 1) throw ConfigError("n_h must be at least 1");
}

SolenoidPoint Solenoid::eval(const SolenoidPoint& p) const {
    SolenoidPoint q;
    q.base = g_.eval(p.base);
    q.fiber.resize(p.fiber.size());
    for (size_t i = 0; i < p.fiber.size(); ++i)
        q.fiber[i] = lambda_s_ * p.fiber[i]
                   + rot_ * std::polar(1.0, TWO_PI * p.base[i]);
    return q;
}

double Solenoid::metric(const SolenoidPoint& a, const SolenoidPoint& b) const {
    double d = dist_torus(a.base, b.base);
    for (size_t i = 0; i < a.fiber.size(); ++i)
        d = std::max(d, std::abs(a.fiber[i] - b.fiber[i]));
    return d;
}

BackChain Solenoid::random_chain(const Pt& x0, int depth, RngCursor& rc) const {
    BackChain ch;
    ch.points.push_back(wrap01(x0));
    for (int j = 0; j < depth; ++j) {
        std::vector<int> b(g_.dim());
        for (int c = 0; c < g_.dim(); ++c) b[c] = (int)rc.below(g_.factor(c));
        ch.points.push_back(g_.inv_branch(ch.points.back(), b));
        ch.branches.push_back(std::move(b));
    }
    return ch;
}

BackChain Solenoid::chain_with_branches(const Pt& x0,
                                        const std::vector<std::vector<int>>& branches) const {
    BackChain ch;
    ch.points.push_back(wrap01(x0));
    for (auto& b : branches) {
        ch.points.push_back(g_.inv_branch(ch.points.back(), b));
        ch.branches.push_back(b);
    }
    return ch;
}

cplx Solenoid::replay_fiber(int coord, const BackChain& ch) const {
    // z = rot * sum_j lambda_s^{j-1} e^{2 pi i x^{(-j)}}, truncated at depth
    cplx z = 0.0;
    double w = rot_;
    for (int j = 1; j < (int)ch.points.size(); ++j) {
        z += w * std::polar(1.0, TWO_PI * ch.points[j][coord]);
        w *= lambda_s_;
    }
    return z;
}

SolenoidPoint Solenoid::point_from_chain(const BackChain& ch) const {
    SolenoidPoint p;
    p.base = ch.points[0];
    p.fiber.resize(g_.dim());
    for (int c = 0; c < g_.dim(); ++c) p.fiber[c] = replay_fiber(c, ch);
    return p;
}

std::vector<std::vector<int>> Solenoid::reconstruct_branches(const SolenoidPoint& p) const {
    // Peel the geometric series one term at a time. With z the fiber value
    // over x, the predecessor fiber value is z' = (z - rot e^{2 pi i y})/lambda_s
    // where y is the true preimage; only the correct branch keeps |z'| inside
    // the attractor slice (the branch images are far apart after dividing by
    // lambda_s), so feasibility identifies the itinerary.
    int m = g_.dim();
    double slice = slice_radius();
    std::vector<std::vector<int>> branches(n_h_, std::vector<int>(m, 0));
    for (int c = 0; c < m; ++c) {
        cplx z = p.fiber[c];
        double cur = p.base[c];
        // tolerated distance to the slice; peeling amplifies both a genuine
        // offset from the attractor and roundoff by 1/lambda_s per level, so
        // the slack must grow at the same rate (deep levels stop being
        // informative, which is harmless: their fiber weight is lambda_s^j)
        double slack = 1e-7;
        for (int j = 0; j < n_h_; ++j) {
            int k = g_.factor(c);
            int best = -1;
            double best_excess = 1e300;
            double best_y = 0.0;
            cplx best_z{};
            for (int b = 0; b < k; ++b) {
                double y = g_.inv1(c, b, cur);
                cplx zp = (z - rot_ * std::polar(1.0, TWO_PI * y)) / lambda_s_;
                double excess = std::abs(zp) - slice;
                if (excess < best_excess) {
                    best_excess = excess; best = b; best_y = y; best_z = zp;
                }
            }
            if (best_excess > slack)
                throw NumericError("backward itinerary ambiguous or infeasible; "
                                   "the point needs more burn-in toward the attractor");
            branches[j][c] = best;
            cur = best_y;
            z = best_z;
            slack /= lambda_s_;
        }
    }
    return branches;
}

SolenoidPoint Solenoid::holonomy(const Pt& xhat, const Pt& yhat, const SolenoidPoint& p) const {
    if (dist_torus(p.base, xhat) > 1e-9)
        throw NumericError("holonomy requires a point in the fiber over xhat");
    // p's backward chain is the reference; the transported chain follows the
    // nearest preimage at every level, which commutes with f for nearby base
    // points (matching raw branch indices instead would break at the
    // partition seams)
    auto branches = reconstruct_branches(p);
    BackChain ref = chain_with_branches(p.base, branches);
    BackChain ch;
    ch.points.push_back(wrap01(yhat));
    for (int j = 0; j < n_h_; ++j) {
        std::vector<int> pick(g_.dim());
        Pt nxt(g_.dim());
        for (int c = 0; c < g_.dim(); ++c) {
            double best = 2.0;
            for (int b = 0; b < g_.factor(c); ++b) {
                double y = g_.inv1(c, b, ch.points[j][c]);
                double d = circ_dist(y, ref.points[j + 1][c]);
                if (d < best - 1e-15) { best = d; pick[c] = b; nxt[c] = y; }
            }
        }
        ch.points.push_back(nxt);
        ch.branches.push_back(pick);
    }
    return point_from_chain(ch);
}

AttractorSample sample_attractor(const Solenoid& f, int burn_in, long count,
                                 uint64_t seed, int threads) {
    // Sampled backward: a uniform base target plus a random backward chain of
    // depth burn_in, replayed into the fiber series. Forward burn-in is wrong
    // on both presets: a linear base shifts the entire mantissa out of the
    // coordinate (every orbit lands exactly on 0 after ~53 steps), and a base
    // with a sink traps almost every forward orbit.
    if (burn_in < 1) throw ConfigError("burn_in must be at least 1");
    AttractorSample out;
    out.burn_in = burn_in;
    out.seed = seed;
    out.points = sample_chains(f, count, burn_in, seed, STREAM_ATTRACTOR, threads);
    return out;
}

std::vector<SolenoidPoint> sample_chains(const Solenoid& f, long count, int depth,
                                         uint64_t seed, uint64_t stream, int threads,
                                         std::vector<BackChain>* chains) {
    std::vector<SolenoidPoint> out(count);
    if (chains) chains->resize(count);
    int m = f.dim();
    Rng rng(seed, stream);
    parallel_for(count, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            // index-keyed sub-cursor: each point draws from its own block
            uint64_t base_idx = (uint64_t)i * (uint64_t)(m * (depth + 2));
            Pt x0(m);
            for (int c = 0; c < m; ++c) x0[c] = rng.uniform(base_idx + c);
            BackChain ch;
            ch.points.push_back(x0);
            for (int j = 0; j < depth; ++j) {
                std::vector<int> b(m);
                for (int c = 0; c < m; ++c)
                    b[c] = (int)rng.below(base_idx + m + (uint64_t)j * m + c, f.base_map().factor(c));
                ch.points.push_back(f.base_map().inv_branch(ch.points.back(), b));
                ch.branches.push_back(std::move(b));
            }
            out[i] = f.point_from_chain(ch);
            if (chains) (*chains)[i] = std::move(ch);
        }
    });
    return out;
}

void write_attractor_csv(const std::string& path, const AttractorSample& s) {
    int m = s.points.empty() ? 0 : (int)s.points[0].base.size();
    std::vector<std::string> header;
    for (int c = 0; c < m; ++c) header.push_back("base_" + std::to_string(c));
    for (int c = 0; c < m; ++c) {
        header.push_back("re_fiber_" + std::to_string(c));
        header.push_back("im_fiber_" + std::to_string(c));
    }
    CsvWriter w(path, header);
    for (auto& p : s.points) {
        std::vector<std::string> row;
        for (int c = 0; c < m; ++c) row.push_back(g17(p.base[c]));
        for (int c = 0; c < m; ++c) {
            row.push_back(g17(p.fiber[c].real()));
            row.push_back(g17(p.fiber[c].imag()));
        }
        w.row(row);
    }
}

double measure_holonomy_C(const Solenoid& f, long pairs, uint64_t seed) {
    auto pts = sample_chains(f, 2 * pairs, f.n_h(), seed, STREAM_CHAINS, 1);
    double C = 1.0;
    for (long i = 0; i < pairs; ++i) {
        const auto& p = pts[2 * i];
        const auto& q = pts[2 * i + 1];
        double dm = f.metric(p, q);
        if (dm < 1e-12) continue;
        SolenoidPoint hp = f.holonomy(p.base, q.base, p);
        double rhs = dist_torus(p.base, q.base) + f.metric(hp, q);
        if (rhs < 1e-12) continue;
        double r = dm / rhs;
        C = std::max(C, std::max(r, 1.0 / r));
    }
    return C;
}

Report verify_skew_hypotheses(const Solenoid& f, const ExpansionProfile& prof,
                              uint64_t seed) {
    Report rep;
    int m = f.dim();
    RngCursor rc(seed, STREAM_CHAINS + 100);

    // fiber contraction measured on random same-fiber pairs
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        SolenoidPoint p, q;
        p.base.resize(m); p.fiber.resize(m); q.fiber.resize(m);
        for (int c = 0; c < m; ++c) {
            p.base[c] = rc.uniform();
            p.fiber[c] = std::polar(std::sqrt(rc.uniform()), TWO_PI * rc.uniform());
            q.fiber[c] = std::polar(std::sqrt(rc.uniform()), TWO_PI * rc.uniform());
        }
        q.base = p.base;
        double before = f.metric(p, q);
        if (before < 1e-12) continue;
        double after = f.metric(f.eval(p), f.eval(q));
        worst = std::max(worst, after / before);
    }
    rep.add("h3_fiber_contraction", worst, f.lambda_s(),
            f.lambda_s() - worst + 1e-12, worst <= f.lambda_s() + 1e-12);

    // semiconjugacy of the projection
    double semi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        SolenoidPoint p;
        p.base.resize(m); p.fiber.resize(m);
        for (int c = 0; c < m; ++c) {
            p.base[c] = rc.uniform();
            p.fiber[c] = std::polar(std::sqrt(rc.uniform()), TWO_PI * rc.uniform());
        }
        semi = std::max(semi, dist_torus(f.project(f.eval(p)), f.base_map().eval(f.project(p))));
    }
    rep.add("semiconjugacy", semi, 1e-12, 1e-12 - semi, semi <= 1e-12);

    // sandwich constant of the product metric. The transported fiber differs
    // from the original by at most E*d_N with E = 2*pi*rot*beta/(1-lambda_s*beta)
    // (beta = sup 1/g' bounds how fast matched backward orbits separate), and
    // chasing that through both sandwich inequalities caps the two-sided
    // constant at 2+E. The measured value must stay under that envelope.
    double beta = 0.0;
    for (int c = 0; c < m; ++c)
        for (int i = 0; i < 20000; ++i)
            beta = std::max(beta, 1.0 / f.base_map().deriv1(c, i / 20000.0));
    double C = measure_holonomy_C(f, 10000, seed);
    if (f.lambda_s() * beta < 1.0) {
        double env = 2.0 + TWO_PI * f.rot() * beta / (1.0 - f.lambda_s() * beta);
        rep.add("h4_sandwich", C, env, env - C, C <= env, true,
                "measured on 10^4 random attractor pairs; envelope 2 + "
                "2*pi*rot*beta/(1 - lambda_s*beta), beta = sup 1/g'");
    } else {
        rep.add("h4_sandwich", C, INFINITY, INFINITY, true, true,
                "measured on 10^4 random attractor pairs; no finite envelope: "
                "lambda_s * sup(1/g') >= 1");
    }

    // holonomy commutes with f up to replay truncation and roundoff; the
    // identity is local, so measure it on nearby base pairs
    double bound_inv = std::max(2.0 * std::pow(f.lambda_s(), f.n_h()), 1e-12);
    auto pts = sample_chains(f, 200, f.n_h() + 4, seed + 1, STREAM_CHAINS + 1, 1);
    int kmax = 2;
    for (int c = 0; c < m; ++c) kmax = std::max(kmax, f.base_map().factor(c));
    double near = 1.0 / (8.0 * kmax);
    double worst_inv = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        Pt yhat(m);
        for (int c = 0; c < m; ++c)
            yhat[c] = wrap01(p.base[c] + near * (2.0 * rc.uniform() - 1.0));
        SolenoidPoint lhs = f.eval(f.holonomy(p.base, yhat, p));
        SolenoidPoint fp = f.eval(p);
        SolenoidPoint rhs = f.holonomy(fp.base, f.base_map().eval(yhat), fp);
        worst_inv = std::max(worst_inv, f.metric(lhs, rhs));
    }
    rep.add("h4_invariance", worst_inv, bound_inv, bound_inv - worst_inv,
            worst_inv <= bound_inv, true,
            "f(holonomy(p)) vs holonomy(f(p)) on nearby base pairs");

    // fiber contraction must beat the worst base contraction
    if (prof.omega_empty) {
        rep.add("h5_domination", f.lambda_s(), 0.0, f.lambda_s(), true, true,
                "slow region empty: no base contraction to dominate");
    } else {
        double inv_L = 1.0 / prof.L_global;
        rep.add("h5_domination", f.lambda_s(), inv_L, f.lambda_s() - inv_L,
                f.lambda_s() > inv_L, true,
                "requires lambda_s > 1/L_global over the slow region");
    }

    // dominated splitting proxy: the fiber/base slope field is an iterated
    // contraction with per-step factor lambda_s / g'(t)
    {
        double max_ratio = 0.0;
        Pt t(m);
        for (int c = 0; c < m; ++c) t[c] = rc.uniform();
        std::vector<cplx> w1(m, cplx(0.9, 0.0)), w2(m, cplx(-0.4, 0.7));
        double prev_gap = 0.0;
        bool geometric = true;
        for (int it = 0; it < 40; ++it) {
            double gap = 0.0;
            for (int c = 0; c < m; ++c) {
                double d = f.base_map().deriv1(c, t[c]);
                cplx drive = f.rot() * TWO_PI * cplx(0, 1) * std::polar(1.0, TWO_PI * t[c]);
                w1[c] = (f.lambda_s() * w1[c] + drive) / d;
                w2[c] = (f.lambda_s() * w2[c] + drive) / d;
                gap = std::max(gap, std::abs(w1[c] - w2[c]));
                max_ratio = std::max(max_ratio, f.lambda_s() / d);
            }
            if (it > 0 && prev_gap > 1e-14 && gap > prev_gap * (1.0 - 1e-12))
                geometric = false;
            prev_gap = gap;
            t = f.base_map().eval(t);
        }
        rep.add("cone_contraction", max_ratio, 1.0, 1.0 - max_ratio,
                max_ratio < 1.0 && geometric, true,
                "slope-field iteration gap per step");
    }
    return rep;
}

} // namespace tf

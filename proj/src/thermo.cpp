#include "thermoformal/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "thermoformal/numfmt.hpp"
#include "thermoformal/parallel.hpp"

namespace tf {

double bowen_distance(const Solenoid& f, const SolenoidPoint& x,
                      const SolenoidPoint& y, int n) {
    if (n < 1) throw ConfigError("bowen_distance: n must be >= 1");
    double d = 0.0;
    SolenoidPoint u = x, v = y;
    for (int k = 0; k < n; ++k) {
        d = std::max(d, f.metric(u, v));
        if (k + 1 < n) { u = f.eval(u); v = f.eval(v); }
    }
    return d;
}

double birkhoff_sum(const Solenoid& f, const Potential& phi,
                    const SolenoidPoint& x, int n) {
    if (n < 0) throw ConfigError("birkhoff_sum: n must be >= 0");
    double s = 0.0;
    SolenoidPoint u = x;
    for (int k = 0; k < n; ++k) {
        s += phi(u);
        if (k + 1 < n) u = f.eval(u);
    }
    return s;
}

std::string collection_name(Collection c) {
    switch (c) {
        case Collection::G: return "G";
        case Collection::S: return "S";
        default: return "all";
    }
}

// backward depth at which a replayed fiber is settled to ~1e-13
static int settle_depth(const Solenoid& f) {
    double lam = f.lambda_s();
    double span = std::max(2.0 * f.slice_radius(), 1e-3);
    int d = (int)std::ceil(std::log(span / 1e-13) / std::log(1.0 / lam));
    return std::min(std::max(d, 8), 2 * f.n_h());
}

CandidateSource collection_source(const Solenoid& f, const ExpansionProfile& prof,
                                  const DecompositionParams& dp, Collection c,
                                  int n, long target, uint64_t seed, int threads) {
    (void)threads;
    if (n < 1) throw ConfigError("collection_source: n must be >= 1");
    if (target < 1) throw ConfigError("collection_source: target must be positive");
    const BaseMap& g = f.base_map();
    const int m = g.dim();
    const int D = settle_depth(f);

    if (c == Collection::ALL) {
        // Every grid point shares one seeded backward itinerary, so the
        // candidates lie on a single smooth slice of the attractor. Fiber
        // gaps are then comparable to base gaps instead of Cantor-packing
        // them, and separated counts scale in n with no fiber inflation.
        auto branches = std::make_shared<std::vector<std::vector<int>>>();
        RngCursor rc(seed, STREAM_CHAINS);
        for (int j = 0; j < D; ++j) {
            std::vector<int> b(m);
            for (int cc = 0; cc < m; ++cc) b[cc] = (int)rc.below(g.factor(cc));
            branches->push_back(std::move(b));
        }
        // extra coordinates walk a fixed irrational stride so products fill
        // the torus instead of a diagonal
        auto gamma = std::make_shared<std::vector<double>>();
        Rng gr(seed, STREAM_SEP);
        for (int cc = 1; cc < m; ++cc)
            gamma->push_back(0.5 * (std::sqrt(5.0) - 1.0) + 0.25 * gr.uniform(cc));
        const Solenoid* fp = &f;
        const long cnt = target;
        CandidateSource src;
        src.count = cnt;
        src.at = [fp, branches, gamma, cnt, m](long i) {
            Pt x0(m);
            x0[0] = (i + 0.5) / (double)cnt;
            for (int cc = 1; cc < m; ++cc)
                x0[cc] = wrap01((i + 0.5) * (*gamma)[cc - 1]);
            BackChain ch = fp->chain_with_branches(x0, *branches);
            return fp->point_from_chain(ch);
        };
        return src;
    }

    if (c == Collection::S && prof.omega_empty) return CandidateSource{0, nullptr};

    auto keep = std::make_shared<std::vector<SolenoidPoint>>();
    keep->reserve((size_t)target);

    // both restricted collections settle their fibers through one shared
    // itinerary (same rationale as the full collection: candidates on one
    // smooth slice, so separated counts are not inflated by fiber packing)
    auto draw_settle = [&](RngCursor& rc) {
        std::vector<std::vector<int>> settle((size_t)D, std::vector<int>(m));
        for (int j = 0; j < D; ++j)
            for (int cc = 0; cc < m; ++cc)
                settle[(size_t)j][cc] = (int)rc.below(g.factor(cc));
        return settle;
    };

    if (c == Collection::G) {
        RngCursor rc(seed, STREAM_SEGMENTS_G);
        auto settle = draw_settle(rc);
        long cap = std::max(60L * target, 20000L);
        for (long a = 0; a < cap && (long)keep->size() < target; ++a) {
            Pt x0(m);
            for (int cc = 0; cc < m; ++cc) x0[cc] = rc.uniform();
            SolenoidPoint p = f.point_from_chain(f.chain_with_branches(x0, settle));
            auto seg = make_segment(f, prof, p, n);
            if (classify_segment(seg, dp).in_G) keep->push_back(std::move(seg.start));
        }
    } else {
        // Steered backward sampling: walk n levels down from a uniform top
        // preferring preimages inside the fattened slow region, then D more
        // levels to settle the fiber. The candidate is the depth-n node with
        // its fiber replayed from the deeper part of the same chain, and
        // membership is re-checked honestly before keeping it.
        RngCursor rc(seed, STREAM_SEGMENTS_S);
        auto settle = draw_settle(rc);
        long cap = std::max(50L * target, 10000L);
        std::vector<int> slow_b;
        for (long a = 0; a < cap && (long)keep->size() < target; ++a) {
            double bias = dp.alpha + (0.97 - dp.alpha) * rc.uniform();
            std::vector<Pt> pts(1, Pt(m));
            for (int cc = 0; cc < m; ++cc) pts[0][cc] = rc.uniform();
            for (int j = 0; j < n; ++j) {
                std::vector<int> b(m);
                for (int cc = 0; cc < m; ++cc) {
                    int kc = g.factor(cc);
                    if (!prof.omega_rho[cc].empty() && rc.uniform() < bias) {
                        slow_b.clear();
                        for (int bb = 0; bb < kc; ++bb)
                            if (prof.coord_in(prof.omega_rho[cc],
                                              g.inv1(cc, bb, pts.back()[cc])))
                                slow_b.push_back(bb);
                        b[cc] = slow_b.empty() ? (int)rc.below(kc)
                                               : slow_b[(size_t)rc.below(slow_b.size())];
                    } else {
                        b[cc] = (int)rc.below(kc);
                    }
                }
                pts.push_back(g.inv_branch(pts.back(), b));
            }
            // the candidate is the depth-n node: its forward itinerary is the
            // steered slow block, and its fiber settles through the shared
            // itinerary below it
            BackChain sub;
            sub.points.push_back(pts.back());
            for (const auto& b : settle) sub.points.push_back(g.inv_branch(sub.points.back(), b));
            sub.branches = settle;
            SolenoidPoint p = f.point_from_chain(sub);
            auto seg = make_segment(f, prof, p, n);
            if (classify_segment(seg, dp).in_S) keep->push_back(std::move(seg.start));
        }
    }

    CandidateSource src;
    src.count = (long)keep->size();
    src.at = [keep](long i) { return (*keep)[(size_t)i]; };
    return src;
}

SeparatedSet build_separated_set(const Solenoid& f, const CandidateSource& src,
                                 int n, double eps, long pair_budget) {
    if (n < 1) throw ConfigError("build_separated_set: n must be >= 1");
    if (!(eps > 0.0)) throw ConfigError("build_separated_set: eps must be positive");
    SeparatedSet out;
    out.candidates = src.count;
    if (src.count <= 0 || !src.at) return out;

    const BaseMap& g = f.base_map();
    const int m = g.dim();
    const size_t rowlen = 3 * (size_t)m;
    const size_t stride = (size_t)n * rowlen;

    // One-directional window on the first base coordinate: a start gap of at
    // least w certifies n-step separation, but a smaller gap decides nothing
    // (the fiber can separate base-close points), so rejection always takes a
    // full scan. For power-of-two linear factors the coordinate orbit is
    // exact in floating point and a start gap grows by k0 per step until it
    // can wrap; as long as eps <= 1/(2 k0) the growing gap cannot jump over
    // [eps, 1/2] in one multiply, which tightens the window to eps/k0^(n-1).
    bool pow2linear = g.pert_coord() < 0;
    for (int c = 0; c < m && pow2linear; ++c)
        pow2linear = (g.factor(c) & (g.factor(c) - 1)) == 0;
    double w = eps;
    if (pow2linear && eps <= 0.5 / g.factor(0))
        w = eps / std::pow((double)g.factor(0), n - 1); // exact: power-of-two divisor

    // coordinate-0 buckets, width >= w, so a blocking point is always in the
    // candidate's own or adjacent bucket
    long B = std::min(2 * src.count,
                      (long)std::max(1.0, std::floor(1.0 / std::max(w, 1e-12))));
    B = std::max(1L, std::min(B, 1L << 21));
    std::vector<long> head((size_t)B, -1);
    std::vector<long> nxt;

    std::vector<double> kx0, kx1, kx2; // kept coord 0 at orbit steps 0,1,2
    std::vector<double> kstart;        // kept start points, 3m doubles each
    const size_t ring = 4096;          // direct-mapped kept-orbit cache
    std::vector<double> ring_buf(ring * stride);
    std::vector<long> ring_tag(ring, -1);
    std::vector<double> corb(stride);

    auto flat_point = [m](const double* row) {
        SolenoidPoint p;
        p.base.assign(row, row + m);
        p.fiber.resize(m);
        for (int c = 0; c < m; ++c)
            p.fiber[c] = cplx(row[m + 2 * c], row[m + 2 * c + 1]);
        return p;
    };
    auto fill_orbit = [&](const SolenoidPoint& p0, double* dst) {
        SolenoidPoint u = p0;
        for (int k = 0; k < n; ++k) {
            double* row = dst + (size_t)k * rowlen;
            for (int c = 0; c < m; ++c) row[c] = u.base[c];
            for (int c = 0; c < m; ++c) {
                row[m + 2 * c] = u.fiber[c].real();
                row[m + 2 * c + 1] = u.fiber[c].imag();
            }
            if (k + 1 < n) u = f.eval(u);
        }
    };
    // true iff the n-step distance is >= eps; computes exactly the same
    // per-step values the ambient metric produces
    auto rows_separated = [&](const double* a, const double* b) {
        for (int k = 0; k < n; ++k) {
            const double* ra = a + (size_t)k * rowlen;
            const double* rb = b + (size_t)k * rowlen;
            double d = 0.0;
            for (int c = 0; c < m; ++c) d = std::max(d, circ_dist(ra[c], rb[c]));
            for (int c = 0; c < m; ++c)
                d = std::max(d, std::abs(cplx(ra[m + 2 * c] - rb[m + 2 * c],
                                              ra[m + 2 * c + 1] - rb[m + 2 * c + 1])));
            if (d >= eps) return true;
        }
        return false;
    };
    auto ring_get = [&](long j) -> const double* {
        size_t slot = (size_t)j & (ring - 1);
        if (ring_tag[slot] != j) {
            fill_orbit(flat_point(&kstart[(size_t)j * rowlen]), &ring_buf[slot * stride]);
            ring_tag[slot] = j;
        }
        return &ring_buf[slot * stride];
    };

    bool stop = false;
    for (long i = 0; i < src.count && !stop; ++i) {
        SolenoidPoint p = src.at(i);
        double x0 = p.base[0];
        long b = (long)(x0 * (double)B);
        if (b < 0) b = 0;
        if (b >= B) b = B - 1;
        bool have_orbit = false;
        double cx1 = 0.0, cx2 = 0.0;
        bool sep = true;
        long nb[3] = {(b + B - 1) % B, b, (b + 1) % B};
        for (int t = 0; t < 3 && sep && !stop; ++t) {
            if (t == 1 && nb[1] == nb[0]) continue;
            if (t == 2 && (nb[2] == nb[0] || nb[2] == nb[1])) continue;
            for (long j = head[(size_t)nb[t]]; j != -1; j = nxt[(size_t)j]) {
                if (circ_dist(x0, kx0[(size_t)j]) >= w) continue;
                if (!have_orbit) {
                    fill_orbit(p, corb.data());
                    have_orbit = true;
                    if (n >= 2) cx1 = corb[rowlen];
                    if (n >= 3) cx2 = corb[2 * rowlen];
                }
                // scalar prefilters: a large step-1/2 base gap already proves
                // separation with the same numbers the full scan would see
                if (n >= 2 && circ_dist(cx1, kx1[(size_t)j]) >= eps) continue;
                if (n >= 3 && circ_dist(cx2, kx2[(size_t)j]) >= eps) continue;
                if (out.pair_evals >= pair_budget) {
                    out.saturated = true;
                    stop = true;
                    sep = false;
                    break;
                }
                ++out.pair_evals;
                if (!rows_separated(corb.data(), ring_get(j))) {
                    sep = false;
                    break;
                }
            }
        }
        if (stop || !sep) continue;

        long j = (long)out.kept.size();
        out.kept.push_back(i);
        kstart.resize(kstart.size() + rowlen);
        double* row = &kstart[(size_t)j * rowlen];
        for (int c = 0; c < m; ++c) row[c] = p.base[c];
        for (int c = 0; c < m; ++c) {
            row[m + 2 * c] = p.fiber[c].real();
            row[m + 2 * c + 1] = p.fiber[c].imag();
        }
        kx0.push_back(x0);
        if (have_orbit) {
            kx1.push_back(n >= 2 ? corb[rowlen] : 0.0);
            kx2.push_back(n >= 3 ? corb[2 * rowlen] : 0.0);
            size_t slot = (size_t)j & (ring - 1);
            std::copy(corb.begin(), corb.end(), ring_buf.begin() + (long)(slot * stride));
            ring_tag[slot] = j;
        } else {
            double a1 = 0.0, a2 = 0.0;
            if (n >= 2) {
                SolenoidPoint u = f.eval(p);
                a1 = u.base[0];
                if (n >= 3) a2 = f.eval(u).base[0];
            }
            kx1.push_back(a1);
            kx2.push_back(a2);
        }
        nxt.push_back(head[(size_t)b]);
        head[(size_t)b] = j;
    }

    // re-verify pairwise separation from scratch (all pairs when small, a
    // deterministic sample when large); any violation is an engine bug
    long K = (long)out.kept.size();
    if (K >= 2) {
        if (K <= 1200) {
            std::vector<double> all((size_t)K * stride);
            for (long j = 0; j < K; ++j)
                fill_orbit(flat_point(&kstart[(size_t)j * rowlen]),
                           &all[(size_t)j * stride]);
            for (long a = 0; a < K; ++a)
                for (long b2 = a + 1; b2 < K; ++b2)
                    if (!rows_separated(&all[(size_t)a * stride],
                                        &all[(size_t)b2 * stride]))
                        throw NumericError("separated set failed re-verification");
        } else {
            Rng vr(0x5eed, STREAM_SEP);
            std::vector<double> oa(stride), ob(stride);
            for (uint64_t t = 0; t < 200; ++t) {
                long a = (long)vr.below(2 * t, (uint64_t)K);
                long b2 = (long)vr.below(2 * t + 1, (uint64_t)K);
                if (a == b2) continue;
                fill_orbit(flat_point(&kstart[(size_t)a * rowlen]), oa.data());
                fill_orbit(flat_point(&kstart[(size_t)b2 * rowlen]), ob.data());
                if (!rows_separated(oa.data(), ob.data()))
                    throw NumericError("separated set failed re-verification");
            }
        }
    }
    return out;
}

double partition_sum(const Solenoid& f, const Potential& phi,
                     const CandidateSource& src, const SeparatedSet& set, int n,
                     const std::vector<double>* weights) {
    if (set.kept.empty()) return NEG_INF;
    std::vector<double> w;
    w.reserve(set.kept.size());
    if (weights) {
        for (long idx : set.kept) w.push_back((*weights)[(size_t)idx]);
    } else {
        for (long idx : set.kept) w.push_back(birkhoff_sum(f, phi, src.at(idx), n));
    }
    double M = *std::max_element(w.begin(), w.end());
    if (!std::isfinite(M)) return M;
    double s = 0.0;
    for (double v : w) s += std::exp(v - M);
    return M + std::log(s);
}

PressureEstimate estimate_pressure(const Solenoid& f, const ExpansionProfile& prof,
                                   const DecompositionParams& dp,
                                   const Potential& phi, const PressureParams& pp) {
    if (pp.epsilons.empty()) throw ConfigError("estimate_pressure: no scales given");
    for (size_t e = 0; e < pp.epsilons.size(); ++e) {
        if (!(pp.epsilons[e] > 0.0))
            throw ConfigError("estimate_pressure: scales must be positive");
        if (e > 0 && !(pp.epsilons[e] < pp.epsilons[e - 1]))
            throw ConfigError("estimate_pressure: scales must be strictly decreasing");
    }
    if (pp.ns.size() < 2)
        throw ConfigError("estimate_pressure: need at least two orbit lengths");
    for (size_t i = 0; i < pp.ns.size(); ++i) {
        if (pp.ns[i] < 1 || (i > 0 && pp.ns[i] <= pp.ns[i - 1]))
            throw ConfigError("estimate_pressure: orbit lengths must be strictly increasing");
    }
    if (pp.candidate_target < 1)
        throw ConfigError("estimate_pressure: candidate target must be positive");

    const size_t E = pp.epsilons.size(), R = pp.ns.size();
    const int m = f.dim();
    const size_t rowlen = 3 * (size_t)m;

    PressureEstimate est;
    est.collection = collection_name(pp.collection);
    est.phi_kind = phi.kind;
    est.epsilons = pp.epsilons;
    est.ns = pp.ns;
    est.log_sums.assign(E * R, NEG_INF);
    est.counts.assign(E * R, 0);
    est.saturated.assign(E * R, 0);

    const bool zero_phi = phi.kind == "zero";
    Rng seed_fold(pp.seed, STREAM_SEP);

    for (size_t i = 0; i < R; ++i) {
        const int n = pp.ns[i];
        uint64_t seed_n = seed_fold.bits((uint64_t)n);
        CandidateSource raw = collection_source(f, prof, dp, pp.collection, n,
                                                pp.candidate_target, seed_n,
                                                pp.threads);
        const long cnt = raw.count;
        if (cnt == 0) continue;

        // flatten once per n so the scales share one candidate set without
        // regenerating backward chains per cell
        auto flats = std::make_shared<std::vector<double>>((size_t)cnt * rowlen);
        {
            double* out = flats->data();
            parallel_for(cnt, pp.threads, [&](int64_t lo, int64_t hi) {
                for (int64_t j = lo; j < hi; ++j) {
                    SolenoidPoint p = raw.at((long)j);
                    double* row = out + (size_t)j * rowlen;
                    for (int c = 0; c < m; ++c) row[c] = p.base[c];
                    for (int c = 0; c < m; ++c) {
                        row[m + 2 * c] = p.fiber[c].real();
                        row[m + 2 * c + 1] = p.fiber[c].imag();
                    }
                }
            });
        }
        auto flat_at = [flats, m](long j) {
            const double* row = flats->data() + (size_t)j * 3 * m;
            SolenoidPoint p;
            p.base.assign(row, row + m);
            p.fiber.resize(m);
            for (int c = 0; c < m; ++c)
                p.fiber[c] = cplx(row[m + 2 * c], row[m + 2 * c + 1]);
            return p;
        };

        std::vector<double> weights;
        if (!zero_phi) {
            // heavy orbits first, ties in source order (a constant potential
            // therefore scans in the same order as the zero one)
            weights.resize((size_t)cnt);
            parallel_for(cnt, pp.threads, [&](int64_t lo, int64_t hi) {
                for (int64_t j = lo; j < hi; ++j)
                    weights[(size_t)j] = birkhoff_sum(f, phi, flat_at((long)j), n);
            });
            std::vector<long> ord((size_t)cnt);
            std::iota(ord.begin(), ord.end(), 0L);
            std::stable_sort(ord.begin(), ord.end(), [&](long a, long b) {
                return weights[(size_t)a] > weights[(size_t)b];
            });
            std::vector<double> pf((size_t)cnt * rowlen), pw((size_t)cnt);
            for (long j = 0; j < cnt; ++j) {
                const double* srcrow = flats->data() + (size_t)ord[(size_t)j] * rowlen;
                std::copy(srcrow, srcrow + rowlen, pf.data() + (size_t)j * rowlen);
                pw[(size_t)j] = weights[(size_t)ord[(size_t)j]];
            }
            *flats = std::move(pf);
            weights = std::move(pw);
        }
        CandidateSource scan;
        scan.count = cnt;
        scan.at = flat_at;

        for (size_t e = 0; e < E; ++e) {
            auto set = build_separated_set(f, scan, n, pp.epsilons[e], pp.pair_budget);
            size_t cell = e * R + i;
            est.log_sums[cell] =
                partition_sum(f, phi, scan, set, n, zero_phi ? nullptr : &weights);
            est.counts[cell] = (long)set.kept.size();
            est.saturated[cell] = set.saturated ? 1 : 0;
            if (set.saturated && i == R - 1) est.unreliable = true;
            if ((double)set.kept.size() >= 0.98 * (double)cnt)
                est.candidate_limited = true;
        }
    }

    // per-scale growth slope over the upper half of the n schedule
    const size_t fit = std::max<size_t>(2, (R + 1) / 2);
    est.value_at_scale.assign(E, NEG_INF);
    for (size_t e = 0; e < E; ++e) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        long k = 0;
        for (size_t i = R - fit; i < R; ++i) {
            double y = est.log_sums[e * R + i];
            if (!std::isfinite(y)) continue;
            double x = (double)pp.ns[i];
            sx += x; sy += y; sxx += x * x; sxy += x * y;
            ++k;
        }
        if (k >= 2) {
            double den = (double)k * sxx - sx * sx;
            if (den > 0) est.value_at_scale[e] = ((double)k * sxy - sx * sy) / den;
        }
    }
    est.value = est.value_at_scale[E - 1];
    if (E >= 2) {
        double a = est.value_at_scale[E - 1], b = est.value_at_scale[E - 2];
        if (std::isfinite(a) && std::isfinite(b)) est.uncertainty = std::fabs(a - b);
        else if (a == b) est.uncertainty = 0.0; // both scales empty: they agree
        else est.uncertainty = std::numeric_limits<double>::infinity();
    }
    est.empty_collection = true;
    for (double v : est.log_sums)
        if (std::isfinite(v)) { est.empty_collection = false; break; }
    return est;
}

std::string PressureEstimate::to_json() const {
    json o;
    o["collection"] = collection;
    o["phi_kind"] = phi_kind;
    o["pressure"] = jnum(value);
    o["uncertainty"] = jnum(uncertainty);
    o["epsilons"] = epsilons;
    o["ns"] = ns;
    json cells = json::array();
    for (size_t e = 0; e < epsilons.size(); ++e)
        for (size_t i = 0; i < ns.size(); ++i) {
            json c;
            c["epsilon"] = epsilons[e];
            c["n"] = ns[i];
            c["log_sum"] = jnum(log_sums[e * ns.size() + i]);
            c["count"] = counts[e * ns.size() + i];
            c["saturated"] = (bool)saturated[e * ns.size() + i];
            cells.push_back(std::move(c));
        }
    o["cells"] = std::move(cells);
    json vas = json::array();
    for (double v : value_at_scale) vas.push_back(jnum(v));
    o["value_at_scale"] = std::move(vas);
    json flags;
    flags["unreliable"] = unreliable;
    flags["empty_collection"] = empty_collection;
    flags["candidate_limited"] = candidate_limited;
    o["flags"] = std::move(flags);
    return o.dump(2);
}

void PressureEstimate::write_csv(const std::string& path) const {
    CsvWriter csv(path, {"epsilon", "n", "log_partition_sum", "slope"});
    for (size_t e = 0; e < epsilons.size(); ++e)
        for (size_t i = 0; i < ns.size(); ++i)
            csv.row({g17(epsilons[e]), std::to_string(ns[i]),
                     g17(log_sums[e * ns.size() + i]), g17(value_at_scale[e])});
}

double epsilon_alpha(double alpha, long deg, long q) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw ConfigError("epsilon_alpha: alpha must lie in (0,1]");
    if (q < 1 || q >= deg) throw ConfigError("epsilon_alpha: need 1 <= q < deg");
    double h = 0.0;
    if (alpha < 1.0)
        h = -alpha * std::log(alpha) - (1.0 - alpha) * std::log(1.0 - alpha);
    if (deg - q >= q)
        h += (1.0 - alpha) * std::log((double)(deg - q) / (double)q);
    return h;
}

double psi_bound(const Potential& phi, const ExpansionProfile& prof, double alpha) {
    if (prof.omega_empty || prof.q < 1) return NEG_INF;
    double m = (double)prof.omega.size();
    return std::log((double)prof.q) + epsilon_alpha(alpha, prof.deg, prof.q)
         + m * std::log(prof.L_global) + phi.sup_slow;
}

VariationGap variation_gap(const Potential& phi, const ExpansionProfile& prof,
                           double alpha) {
    VariationGap vg;
    vg.variation = phi.sup_attractor - phi.inf_attractor;
    if (prof.omega_empty || prof.q < 1) {
        vg.rhs = std::numeric_limits<double>::infinity();
        vg.pass = true;
        return vg;
    }
    double m = (double)prof.omega.size();
    vg.rhs = std::log((double)prof.deg) - std::log((double)prof.q)
           - epsilon_alpha(alpha, prof.deg, prof.q) - m * std::log(prof.L_global);
    vg.pass = vg.variation < vg.rhs;
    return vg;
}

Report uniqueness_certificate(const Potential& phi, const ExpansionProfile& prof,
                              double alpha, PressureValue p_all, PressureValue p_s) {
    Report rep;
    const double psi = psi_bound(phi, prof, alpha);

    double m1 = p_all.value - psi;
    bool pass1 = std::isfinite(m1) ? m1 > p_all.uncertainty : m1 > 0.0;
    std::string note1;
    if (!std::isfinite(psi))
        note1 = "empty slow region: the ceiling is vacuous";
    else if (m1 > 0.0 && m1 <= p_all.uncertainty)
        note1 = "inconclusive: margin sits inside the estimator uncertainty";
    rep.add("uniq_psi_vs_pressure", p_all.value, psi, m1, pass1, true, note1);

    double m2;
    bool pass2;
    std::string note2;
    if (std::isinf(psi) && psi < 0.0 && std::isinf(p_s.value) && p_s.value < 0.0) {
        m2 = std::numeric_limits<double>::infinity();
        pass2 = true;
        note2 = "empty collection: nothing carries slow pressure";
    } else {
        m2 = psi - p_s.value;
        pass2 = std::isfinite(m2) ? m2 > p_s.uncertainty : m2 > 0.0;
        if (std::isfinite(m2) && m2 > 0.0 && m2 <= p_s.uncertainty)
            note2 = "inconclusive: margin sits inside the estimator uncertainty";
    }
    rep.add("uniq_s_pressure_vs_psi", p_s.value, psi, m2, pass2, true, note2);

    bool both = pass1 && pass2;
    rep.add("uniq_certificate", both ? 1.0 : 0.0, 1.0, both ? 0.0 : -1.0, both,
            true, both ? "" : "see the margin rows");
    return rep;
}

Report bowen_variation(const Solenoid& f, const ExpansionProfile& prof,
                       const DecompositionParams& dp, const Potential& phi,
                       double holonomy_C, double eta, const std::vector<int>& ns,
                       long samples_per_n, uint64_t seed) {
    if (!(eta > 0.0)) throw ConfigError("bowen_variation: eta must be positive");
    if (ns.empty()) throw ConfigError("bowen_variation: empty n schedule");
    if (samples_per_n < 1)
        throw ConfigError("bowen_variation: samples_per_n must be positive");
    const double beta = phi.holder_exponent;
    if (!(beta > 0.0) || beta > 1.0)
        throw ConfigError("bowen_variation: holder exponent must lie in (0,1]");
    const double theta = std::max(dp.theta, f.lambda_s());
    if (theta >= 1.0) throw NumericError("bowen_variation: no contraction");
    const double V = std::pow(2.0, beta + 1.0) * holonomy_C * phi.holder_K
                   * std::pow(eta, beta) / (1.0 - std::pow(theta, beta));

    Report rep;
    const int D = settle_depth(f);
    const int m = f.dim();
    RngCursor rc(seed, STREAM_BOWEN);
    double first_obs = 0.0;
    for (size_t t = 0; t < ns.size(); ++t) {
        const int n = ns[t];
        double obs = 0.0;
        long made = 0;
        for (long s = 0; s < samples_per_n; ++s) {
            SolenoidPoint x;
            BackChain ch;
            bool ok = false;
            for (int tries = 0; tries < 40 && !ok; ++tries) {
                Pt x0(m);
                for (int c = 0; c < m; ++c) x0[c] = rc.uniform();
                ch = f.random_chain(x0, D, rc);
                x = f.point_from_chain(ch);
                ok = classify_segment(make_segment(f, prof, x, n), dp).in_G;
            }
            if (!ok) continue;
            // companion on the same smooth slice: shift the base start and
            // replay the same branches, halving the shift until the whole
            // n-block stays inside the eta-tube
            double sgn = rc.uniform() < 0.5 ? 1.0 : -1.0;
            double delta = eta;
            SolenoidPoint y;
            double d = 2.0;
            for (int it = 0; it < 80 && d > eta; ++it) {
                Pt y0 = ch.points[0];
                y0[0] = wrap01(y0[0] + sgn * delta);
                y = f.point_from_chain(f.chain_with_branches(y0, ch.branches));
                d = bowen_distance(f, x, y, n);
                delta *= 0.5;
            }
            if (d > eta) continue;
            ++made;
            obs = std::max(obs, std::fabs(birkhoff_sum(f, phi, x, n)
                                          - birkhoff_sum(f, phi, y, n)));
        }
        rep.add("bowen_var_n" + std::to_string(n), obs, V, V - obs, obs <= V, true,
                made < samples_per_n / 2 ? "over half the samples were discarded" : "");
        if (t == 0) first_obs = obs;
        if (t + 1 == ns.size()) {
            double tb = first_obs * 1.35 + 0.05 * V;
            rep.add("bowen_var_trend", obs, tb, tb - obs, obs <= tb, true,
                    "largest-n oscillation against the first-n level");
        }
    }
    return rep;
}

// half-open arc intersection with a strict tolerance so touching endpoints do
// not count as overlap
static bool arcs_meet(const Arc& a, const Arc& b) {
    if (a.full() || b.full()) return true;
    if (wrap01(b.lo - a.lo) < a.len - 1e-12) return true;
    return wrap01(a.lo - b.lo) < b.len - 1e-12;
}

CylinderCount cylinder_count(const BaseMap& g, const ExpansionProfile& prof,
                             int n, double alpha) {
    if (n < 1 || n > 20) throw ConfigError("cylinder_count: n must lie in [1,20]");
    if (alpha < 0.0 || alpha > 1.0)
        throw ConfigError("cylinder_count: alpha must lie in [0,1]");
    const long deg = g.degree();
    if (std::pow((double)deg, n) > 16777216.0)
        throw ConfigError("cylinder_count: deg^n exceeds the enumeration cap");
    const int m = g.dim();

    // a symbol is slow when some coordinate's branch domain meets that
    // coordinate's slow intervals
    std::vector<uint8_t> slow((size_t)deg, 0);
    long nslow = 0;
    for (long s = 0; s < deg; ++s) {
        auto b = g.branch_decode(s);
        bool sl = false;
        for (int c = 0; c < m && !sl; ++c) {
            Arc dom{wrap01(g.domain_lo(c, b[(size_t)c])), 1.0 / g.factor(c)};
            for (const auto& a : prof.omega[(size_t)c])
                if (arcs_meet(dom, a)) { sl = true; break; }
        }
        slow[(size_t)s] = sl ? 1 : 0;
        if (sl) ++nslow;
    }

    CylinderCount out;
    out.n = n;
    out.alpha = alpha;
    out.slow_symbols = nslow;

    long words = 1;
    for (int i = 0; i < n; ++i) words *= deg;

    if (alpha == 0.0) {
        out.count = words;
        out.log_count = n * std::log((double)deg);
        out.bound = std::numeric_limits<double>::infinity();
        out.pass = true;
        out.note = "alpha = 0 constrains nothing; count only";
        return out;
    }
    if (nslow == 0) {
        out.count = 0;
        out.log_count = NEG_INF;
        out.bound = 0.0;
        out.pass = true;
        out.note = "empty slow region: no word has a positive slow fraction";
        return out;
    }
    if (nslow >= deg)
        throw ConfigError("cylinder_count: every branch meets the slow region");

    long kmin = (long)std::ceil(alpha * n - 1e-12);
    if (kmin < 0) kmin = 0;

    // odometer over branch words with an incremental slow tally
    std::vector<int> word((size_t)n, 0);
    long cur = slow[0] ? n : 0;
    long cnt = 0;
    for (;;) {
        if (cur >= kmin) ++cnt;
        int p = 0;
        while (p < n) {
            cur -= slow[(size_t)word[(size_t)p]];
            if (++word[(size_t)p] < deg) {
                cur += slow[(size_t)word[(size_t)p]];
                break;
            }
            word[(size_t)p] = 0;
            cur += slow[0];
            ++p;
        }
        if (p == n) break;
    }

    out.count = cnt;
    out.log_count = cnt > 0 ? std::log((double)cnt) : NEG_INF;
    out.bound = std::exp(n * (std::log((double)nslow)
                              + epsilon_alpha(alpha, deg, nslow)));
    out.pass = (double)cnt <= out.bound * (1.0 + 1e-12);
    if (!out.pass)
        out.note = "alpha sits below the slow-symbol frequency, where the "
                   "binomial ceiling genuinely fails";
    if (nslow != prof.q)
        out.note += std::string(out.note.empty() ? "" : "; ")
                  + "slow-symbol count disagrees with the profile";
    return out;
}

} // namespace tf

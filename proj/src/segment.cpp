#include "thermoformal/segment.hpp"
#include "thermoformal/numfmt.hpp"
#include <algorithm>
#include <cmath>

namespace tf {

double beta_of_bits(const std::vector<uint8_t>& bits) {
    if (bits.empty()) throw NumericError("birkhoff fraction undefined for an empty segment");
    long ones = 0;
    for (uint8_t b : bits) ones += b;
    return (double)ones / (double)bits.size();
}

bool bits_in_G(const std::vector<uint8_t>& bits, double alpha) {
    // right-to-left running sum: suffix of length j has sum < alpha * j
    long sum = 0;
    for (size_t j = 1; j <= bits.size(); ++j) {
        sum += bits[bits.size() - j];
        if ((double)sum >= alpha * (double)j) return false;
    }
    return true;
}

bool bits_in_S(const std::vector<uint8_t>& bits, double alpha) {
    return beta_of_bits(bits) >= alpha;
}

int bits_max_good_prefix(const std::vector<uint8_t>& bits, double alpha) {
    for (int s = (int)bits.size(); s >= 1; --s) {
        std::vector<uint8_t> pre(bits.begin(), bits.begin() + s);
        if (bits_in_G(pre, alpha)) return s;
    }
    return 0;
}

OrbitSegment make_segment(const Solenoid& f, const ExpansionProfile& prof,
                          const SolenoidPoint& start, int n) {
    if (n < 0) throw ConfigError("segment length must be nonnegative");
    OrbitSegment seg;
    seg.start = start;
    seg.length = n;
    seg.orbit.reserve(n + 1);
    seg.orbit.push_back(start);
    seg.itinerary.reserve(n);
    for (int i = 0; i < n; ++i) {
        seg.itinerary.push_back(prof.in_omega_rho(f.project(seg.orbit.back())) ? 1 : 0);
        seg.orbit.push_back(f.eval(seg.orbit.back()));
    }
    return seg;
}

double birkhoff_fraction(const OrbitSegment& seg) {
    return beta_of_bits(seg.itinerary);
}

SegmentClass classify_segment(const OrbitSegment& seg, const DecompositionParams& params) {
    SegmentClass c;
    c.in_G = bits_in_G(seg.itinerary, params.alpha);
    c.in_S = seg.length >= 1 && bits_in_S(seg.itinerary, params.alpha);
    return c;
}

static OrbitSegment slice_segment(const OrbitSegment& seg, int from, int len) {
    OrbitSegment out;
    out.start = seg.orbit[from];
    out.length = len;
    out.itinerary.assign(seg.itinerary.begin() + from, seg.itinerary.begin() + from + len);
    out.orbit.assign(seg.orbit.begin() + from, seg.orbit.begin() + from + len + 1);
    return out;
}

SplitResult decompose(const OrbitSegment& seg, const DecompositionParams& params) {
    SplitResult r;
    r.s = bits_max_good_prefix(seg.itinerary, params.alpha);
    r.prefix = slice_segment(seg, 0, r.s);
    r.suffix = slice_segment(seg, r.s, seg.length - r.s);
    return r;
}

double theta_alpha(double L, double lambda_u, double alpha) {
    if (L < 1.0) throw ConfigError("theta_alpha: L must be >= 1");
    if (lambda_u <= 0.0 || lambda_u >= 1.0)
        throw ConfigError("theta_alpha: lambda_u must lie in (0,1)");
    if (alpha < 0.0 || alpha >= 1.0)
        throw ConfigError("theta_alpha: alpha must lie in [0,1)");
    double theta = std::pow(L, alpha) * std::pow(lambda_u, 1.0 - alpha);
    if (theta >= 1.0) throw NumericError("theta >= 1: alpha too large");
    return theta;
}

DecompositionParams make_decomposition_params(const ExpansionProfile& prof,
                                              const Solenoid& f, double alpha) {
    DecompositionParams p;
    p.alpha = alpha;
    p.rho = prof.rho;
    p.L_global = prof.omega_empty ? 1.0 : prof.L_global;
    p.lambda_u = prof.lambda_u;
    p.lambda_s = f.lambda_s();
    p.theta = theta_alpha(p.L_global, p.lambda_u, alpha);
    return p;
}

Report check_concatenation(const Solenoid& f, const ExpansionProfile& prof,
                           const DecompositionParams& params, int num_samples,
                           uint64_t seed) {
    Report rep;
    RngCursor rc(seed + 1, STREAM_SEGMENTS_G);
    long triples = 0, counterexamples = 0;
    std::string ce_note;
    auto starts = sample_chains(f, num_samples, f.n_h(), seed, STREAM_SEGMENTS_G, 1);
    for (int i = 0; i < num_samples; ++i) {
        int n = 2 + (int)rc.below(63); // lengths 2..64
        OrbitSegment seg = make_segment(f, prof, starts[i], n);
        bool whole = bits_in_G(seg.itinerary, params.alpha);
        for (int cut = 1; cut < n; ++cut) {
            std::vector<uint8_t> a(seg.itinerary.begin(), seg.itinerary.begin() + cut);
            std::vector<uint8_t> b(seg.itinerary.begin() + cut, seg.itinerary.end());
            ++triples;
            if (bits_in_G(a, params.alpha) && bits_in_G(b, params.alpha) && !whole) {
                ++counterexamples;
                if (ce_note.empty()) {
                    ce_note = "counterexample itinerary: ";
                    for (uint8_t bit : seg.itinerary) ce_note += char('0' + bit);
                    ce_note += " cut at " + std::to_string(cut);
                }
            }
        }
    }
    rep.add("concatenation", (double)counterexamples, 0.0, -(double)counterexamples,
            counterexamples == 0, true,
            ce_note.empty() ? std::to_string(triples) + " split triples checked"
                            : ce_note);
    return rep;
}

Report nonexpansive_scan(const Solenoid& f, const ExpansionProfile& prof,
                         const DecompositionParams& params, double eps,
                         int num_samples, int horizon, uint64_t seed) {
    if (eps <= 0.0 || horizon < 1) throw ConfigError("nonexpansive_scan: eps > 0 and horizon >= 1 required");
    Report rep;
    const int m = f.dim();
    const int T = horizon;
    // companion base offsets on a grid well below eps: the fiber coordinate
    // follows base separation with steady-state gain 2*pi*rot/(1-lambda_s),
    // so companions can only survive at base offsets a factor ~10 under eps
    int net = std::max(8, (int)std::ceil(16.0 / eps));
    std::vector<BackChain> chains;
    auto pts = sample_chains(f, num_samples, T + f.n_h(), seed, STREAM_NE, 1, &chains);

    long eligible = 0, survivors = 0;
    for (int i = 0; i < num_samples; ++i) {
        const auto& x = pts[i];
        const auto& xc = chains[i];
        // condition: some prefix average <= alpha within the horizon
        OrbitSegment seg = make_segment(f, prof, x, T);
        bool ok = false;
        long ones = 0;
        for (int n = 1; n <= T; ++n) {
            ones += seg.itinerary[n - 1];
            if ((double)ones <= params.alpha * (double)n) { ok = true; break; }
        }
        if (!ok) continue;
        ++eligible;

        // backward fiber history of x from its own chain suffix
        auto back_fiber = [&](const BackChain& ch, int j, int c) {
            cplx z = 0.0;
            double w = f.rot();
            for (int t = j + 1; t < (int)ch.points.size(); ++t) {
                z += w * std::polar(1.0, 2.0 * M_PI * ch.points[t][c]);
                w *= f.lambda_s();
            }
            return z;
        };

        bool found = false;
        std::vector<int> idx(m, 0);
        std::vector<long> strides(m, 1);
        long total = 1;
        for (int c = 0; c < m; ++c) { strides[c] = total; total *= net; }
        for (long t = 0; t < total && !found; ++t) {
            Pt yb(m);
            bool same = true;
            for (int c = 0; c < m; ++c) {
                long k = (t / strides[c]) % net;
                yb[c] = wrap01(x.base[c] + (double)(k) / net);
                if (k != 0) same = false;
            }
            if (same) continue; // y = x excluded
            if (dist_torus(yb, x.base) >= eps) continue;

            // base-only forward prefilter: expansion kills most candidates
            // before any inverse-branch work is needed
            {
                Pt xb = x.base, yb2 = yb;
                bool dead = false;
                for (int k = 0; k <= T && !dead; ++k) {
                    if (dist_torus(xb, yb2) >= eps) dead = true;
                    xb = f.base_map().eval(xb); yb2 = f.base_map().eval(yb2);
                }
                if (dead) continue;
            }

            // y's backward chain takes the nearest preimage to x's chain at
            // every level (raw branch-index matching would jump half a turn
            // whenever the pair straddles a branch-image seam); the fiber is
            // the replayed series (anything else separates backward at 1/lambda_s)
            BackChain yc;
            yc.points.push_back(yb);
            for (int j = 0; j < (int)xc.branches.size(); ++j) {
                Pt nxt(m);
                for (int c = 0; c < m; ++c) {
                    double best = 2.0;
                    for (int b = 0; b < f.base_map().factor(c); ++b) {
                        double cand = f.base_map().inv1(c, b, yc.points[j][c]);
                        double d = circ_dist(cand, xc.points[j + 1][c]);
                        if (d < best) { best = d; nxt[c] = cand; }
                    }
                }
                yc.points.push_back(nxt);
            }
            SolenoidPoint y = f.point_from_chain(yc);

            bool companion = true;
            SolenoidPoint xf = x, yf = y;
            for (int k = 0; k <= T && companion; ++k) {
                if (f.metric(xf, yf) >= eps) companion = false;
                xf = f.eval(xf); yf = f.eval(yf);
            }
            // backward half: matched chains with replayed fibers
            for (int j = 1; j <= T && companion; ++j) {
                double d = dist_torus(xc.points[j], yc.points[j]);
                for (int c = 0; c < m && d < eps; ++c)
                    d = std::max(d, std::abs(back_fiber(xc, j, c) - back_fiber(yc, j, c)));
                if (d >= eps) companion = false;
            }
            if (companion) found = true;
        }
        if (found) ++survivors;
    }
    double frac = eligible > 0 ? (double)survivors / (double)eligible : 0.0;
    rep.add("ne_survival_fraction", frac, 0.0, -frac, true, false,
            std::to_string(survivors) + " of " + std::to_string(eligible) +
            " eligible samples kept a two-sided companion at eps=" + fmt_fixed(eps, 4));
    return rep;
}

void write_segments_csv(const std::string& path,
                        const std::vector<OrbitSegment>& segs,
                        const DecompositionParams& params) {
    int m = segs.empty() ? 0 : (int)segs[0].start.base.size();
    std::vector<std::string> header;
    for (int c = 0; c < m; ++c) header.push_back("base_" + std::to_string(c));
    header.insert(header.end(), {"n", "beta", "in_G", "in_S", "s"});
    CsvWriter w(path, header);
    for (auto& seg : segs) {
        auto cls = classify_segment(seg, params);
        auto spl = decompose(seg, params);
        std::vector<std::string> row;
        for (int c = 0; c < m; ++c) row.push_back(g17(seg.start.base[c]));
        row.push_back(std::to_string(seg.length));
        row.push_back(seg.length ? g17(birkhoff_fraction(seg)) : "nan");
        row.push_back(cls.in_G ? "1" : "0");
        row.push_back(cls.in_S ? "1" : "0");
        row.push_back(std::to_string(spl.s));
        w.row(row);
    }
}

} // namespace tf

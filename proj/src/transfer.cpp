#include "thermoformal/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "thermoformal/numfmt.hpp"
#include "thermoformal/parallel.hpp"
#include "thermoformal/potential.hpp"
#include "thermoformal/rng.hpp"
#include "thermoformal/thermo.hpp"

namespace tf {

static const double TWO_PI = 2.0 * M_PI;
static const double POS_INF = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// assembly

namespace {

struct RawEntry {
    long row;
    double frac, mass, phiv;
};

} // namespace

TransferOperator build_transfer_operator(const BaseMap& g,
                                         const std::function<double(double)>& phi,
                                         long n_cells, int threads) {
    if (g.dim() != 1)
        throw ConfigError("transfer operator: grids are one-dimensional, got a product base");
    long deg = g.degree();
    if (n_cells <= 0 || n_cells % deg != 0)
        throw ConfigError("transfer operator: cell count must be a positive multiple of the branch count");

    const int k = g.factor(0);
    const long n = n_cells;
    const double w = 1.0 / (double)n;

    std::vector<std::vector<RawEntry>> cols((size_t)n);

    parallel_for(n, threads, [&](int64_t begin, int64_t end) {
        for (long j = begin; j < end; ++j) {
            auto& col = cols[(size_t)j];
            double y0 = (double)j * w;
            double y1 = (j + 1 == n) ? 0.0 : (double)(j + 1) * w;
            double ymid = ((double)j + 0.5) * w;
            for (int b = 0; b < k; ++b) {
                // Lift both ends of the inverse image into the branch domain
                // [dlo, dlo + 1/k); offsets just below a full turn are wrap
                // noise on the domain's left edge, not genuine positions.
                double dlo = g.domain_lo(0, b);
                double off0 = wrap01(g.inv1(0, b, y0) - dlo);
                double off1 = wrap01(g.inv1(0, b, y1) - dlo);
                if (off0 > 0.75) off0 -= 1.0;
                if (off1 > 0.75) off1 -= 1.0;
                double a0 = dlo + off0;
                double a1 = dlo + off1;
                double dhi = dlo + 1.0 / (double)k;

                // One monotone arc unless the image crosses the domain's
                // wrap end, which splits it into the two end pieces.
                double p0[2], p1[2];
                int pieces;
                if (off1 > off0) {
                    pieces = 1;
                    p0[0] = a0; p1[0] = a1;
                } else {
                    pieces = 2;
                    p0[0] = a0; p1[0] = dhi;
                    p0[1] = dlo; p1[1] = a1;
                }
                double len = 0.0;
                for (int pc = 0; pc < pieces; ++pc) len += p1[pc] - p0[pc];
                if (!(len > 0.0)) continue;

                double pv = phi(g.inv1(0, b, ymid));
                for (int pc = 0; pc < pieces; ++pc) {
                    long i0 = (long)std::floor(p0[pc] * (double)n);
                    long i1 = (long)std::ceil(p1[pc] * (double)n);
                    for (long ii = i0; ii < i1; ++ii) {
                        double lo = std::max(p0[pc], (double)ii * w);
                        double hi = std::min(p1[pc], (double)(ii + 1) * w);
                        if (hi <= lo) continue;
                        RawEntry e;
                        e.row = ((ii % n) + n) % n;
                        e.mass = hi - lo;
                        e.frac = (hi - lo) / len;
                        e.phiv = pv;
                        col.push_back(e);
                    }
                }
            }
        }
    }, 256);

    TransferOperator op;
    op.n_cells = n;
    op.col_ptr.resize((size_t)n + 1, 0);
    size_t nnz = 0;
    for (long j = 0; j < n; ++j) nnz += cols[(size_t)j].size();
    op.row.reserve(nnz);
    op.frac.reserve(nnz);
    op.mass.reserve(nnz);
    op.phiv.reserve(nnz);
    for (long j = 0; j < n; ++j) {
        for (const RawEntry& e : cols[(size_t)j]) {
            op.row.push_back(e.row);
            op.frac.push_back(e.frac);
            op.mass.push_back(e.mass);
            op.phiv.push_back(e.phiv);
        }
        op.col_ptr[(size_t)j + 1] = (long)op.row.size();
    }
    op.val.resize(nnz, 0.0);

    op.solve(1.0, true);
    return op;
}

// ---------------------------------------------------------------------------
// eigendata

namespace {

// out = M x over the CSC arrays (column j scatters into its rows)
void apply_matrix(const TransferOperator& op, const std::vector<double>& x,
                  std::vector<double>& out) {
    out.assign((size_t)op.n_cells, 0.0);
    for (long j = 0; j < op.n_cells; ++j) {
        double xj = x[(size_t)j];
        if (xj == 0.0) continue;
        for (long e = op.col_ptr[(size_t)j]; e < op.col_ptr[(size_t)j + 1]; ++e)
            out[(size_t)op.row[(size_t)e]] += op.val[(size_t)e] * xj;
    }
}

// out = M^T x (column j gathers from its rows)
void apply_transpose(const TransferOperator& op, const std::vector<double>& x,
                     std::vector<double>& out) {
    out.assign((size_t)op.n_cells, 0.0);
    for (long j = 0; j < op.n_cells; ++j) {
        long double s = 0.0L;
        for (long e = op.col_ptr[(size_t)j]; e < op.col_ptr[(size_t)j + 1]; ++e)
            s += (long double)op.val[(size_t)e] * x[(size_t)op.row[(size_t)e]];
        out[(size_t)j] = (double)s;
    }
}

struct PowerResult {
    double lambda = 0.0;
    long iterations = 0;
    double residual = 0.0;
    bool hit_cap = false;
};

// Power iteration on a positivity-preserving matrix, normalizing to unit sum
// each sweep (the iterate stays a probability vector, and the sum of the
// image is the eigenvalue estimate). Stops on an L1 increment below tol.
template <typename Apply>
PowerResult power_iterate(std::vector<double>& v, const Apply& apply, long n,
                          long cap, double tol) {
    std::vector<double> nv((size_t)n);
    PowerResult pr;
    double diff = POS_INF;
    double best = POS_INF;
    int flat = 0;
    long it = 0;
    while (it < cap) {
        apply(v, nv);
        ++it;
        long double s = 0.0L;
        for (double x : nv) s += x;
        if (!(s > 0.0L) || !std::isfinite((double)s))
            throw NumericError("leading eigenvalue lost positivity during iteration");
        double sd = (double)s;
        long double d = 0.0L;
        for (size_t i = 0; i < (size_t)n; ++i) {
            nv[i] /= sd;
            d += std::fabs(nv[i] - v[i]);
        }
        v.swap(nv);
        diff = (double)d;
        if (diff <= tol) break;
        // the increment stalls at rounding level when the iterate is as
        // converged as the arithmetic allows; genuine slow races through
        // near-equal eigenvalues keep shrinking it and are left alone
        if (diff < 0.999 * best) {
            best = diff;
            flat = 0;
        } else if (++flat >= 600) {
            break;
        }
    }
    pr.iterations = it;
    pr.hit_cap = it >= cap && diff > tol;
    apply(v, nv);
    long double lam = 0.0L, res = 0.0L;
    for (double x : nv) lam += x;
    pr.lambda = (double)lam;
    for (size_t i = 0; i < (size_t)n; ++i)
        res += std::fabs(nv[i] - pr.lambda * v[i]);
    pr.residual = (double)res;
    return pr;
}

// Magnitude of the first eigenvalue strictly below the leading cluster,
// from simultaneous iteration of a small orthonormal block. The leading
// column rides the dominant mode; the later columns, re-orthogonalized
// every sweep, grow like the next eigenvalue magnitudes. Exact copies of
// the leading rate are skipped: an attracting point sitting on a cell
// boundary splits into two one-sided chains whose twin modes share the
// leading rate bitwise, yet both discretize the same point mass, so the
// twin says nothing about mixing. A rate collapsing to rounding noise
// means the complement is nilpotent-grade and zero is reported.
double second_eigenvalue_magnitude(const TransferOperator& op,
                                   const std::vector<double>& v) {
    const long n = op.n_cells;
    const int k = 3;
    const int sweeps = 800;
    const int tail = 200;

    Rng probe(0xb5297a4dULL, 17); // fixed probe: reruns are bitwise identical
    std::vector<std::vector<double>> B((size_t)k,
                                       std::vector<double>((size_t)n));
    for (long i = 0; i < n; ++i) {
        B[0][(size_t)i] = v[(size_t)i];
        B[1][(size_t)i] = probe.uniform((uint64_t)i) - 0.5;
        B[2][(size_t)i] = probe.uniform((uint64_t)i + 0x40000000ULL) - 0.5;
    }

    auto orth_prev = [&](std::vector<double>& x, int c) {
        for (int p = 0; p < c; ++p) {
            long double dot = 0.0L;
            for (long i = 0; i < n; ++i)
                dot += (long double)x[(size_t)i] * B[(size_t)p][(size_t)i];
            double cd = (double)dot;
            for (long i = 0; i < n; ++i) x[(size_t)i] -= cd * B[(size_t)p][(size_t)i];
        }
    };
    auto norm2 = [&](const std::vector<double>& x) {
        long double s = 0.0L;
        for (double y : x) s += (long double)y * y;
        return std::sqrt((double)s);
    };

    std::vector<bool> dead((size_t)k, false);
    for (int c = 0; c < k; ++c) {
        orth_prev(B[(size_t)c], c);
        double nn = norm2(B[(size_t)c]);
        if (nn < 1e-12) { dead[(size_t)c] = true; continue; }
        for (long i = 0; i < n; ++i) B[(size_t)c][(size_t)i] /= nn;
    }

    std::vector<long double> acc((size_t)k, 0.0L);
    std::vector<int> cnt((size_t)k, 0);
    std::vector<double> w((size_t)n);
    for (int s = 0; s < sweeps; ++s) {
        for (int c = 0; c < k; ++c) {
            if (dead[(size_t)c]) continue;
            apply_matrix(op, B[(size_t)c], w);
            orth_prev(w, c);
            double nn = norm2(w);
            if (nn < 1e-10) { dead[(size_t)c] = true; continue; }
            if (s >= sweeps - tail) {
                acc[(size_t)c] += std::log((long double)nn);
                ++cnt[(size_t)c];
            }
            for (long i = 0; i < n; ++i) B[(size_t)c][(size_t)i] = w[(size_t)i] / nn;
        }
    }

    double m[3] = {0.0, 0.0, 0.0};
    for (int c = 0; c < k; ++c)
        if (!dead[(size_t)c] && cnt[(size_t)c] > 0)
            m[c] = (double)std::exp(acc[(size_t)c] / (long double)cnt[(size_t)c]);
    for (int c = 1; c < k; ++c)
        if (m[c] < m[0] * (1.0 - 1e-6)) return m[c];
    return m[k - 1];
}

} // namespace

void TransferOperator::solve(double t, bool full) {
    const long n = n_cells;
    scale = t;
    for (size_t e = 0; e < frac.size(); ++e)
        val[e] = frac[e] * std::exp(t * phiv[e]);

    if (right_vec.size() != (size_t)n) {
        right_vec.assign((size_t)n, 1.0 / (double)n);
    } else {
        long double s = 0.0L;
        bool ok = true;
        for (double x : right_vec) {
            if (!std::isfinite(x) || x < 0.0) { ok = false; break; }
            s += x;
        }
        if (!ok || !(s > 0.0L))
            right_vec.assign((size_t)n, 1.0 / (double)n);
    }

    // keep a uniform floor under reused starts: a cell whose only inflow is
    // itself can carry an exact zero from an earlier solve, and that zero is
    // invisible to the iteration forever
    auto blend_uniform = [n](std::vector<double>& x) {
        long double s = 0.0L;
        bool ok = true;
        for (double y : x) {
            if (!std::isfinite(y) || y < 0.0) { ok = false; break; }
            s += y;
        }
        if (!ok || !(s > 0.0L)) {
            x.assign((size_t)n, 1.0 / (double)n);
            return;
        }
        double sd = (double)s;
        double fl = 0.1 / (double)n;
        for (size_t i = 0; i < (size_t)n; ++i)
            x[i] = 0.9 * (x[i] / sd) + fl;
    };
    blend_uniform(right_vec);

    const long cap = 200000;
    const double tol = 1e-14;
    auto fwd = [this](const std::vector<double>& x, std::vector<double>& out) {
        apply_matrix(*this, x, out);
    };
    PowerResult pr = power_iterate(right_vec, fwd, n, cap, tol);
    eigenvalue = pr.lambda;
    iterations = pr.iterations;
    residual = pr.residual;
    stagnated = residual > 1e-10 * std::max(1.0, eigenvalue);

    if (!full) return;

    if (left_vec.size() != (size_t)n) left_vec.assign((size_t)n, 1.0 / (double)n);
    blend_uniform(left_vec);
    auto bwd = [this](const std::vector<double>& x, std::vector<double>& out) {
        apply_transpose(*this, x, out);
    };
    PowerResult pl = power_iterate(left_vec, bwd, n, cap, tol);
    stagnated = stagnated || pl.residual > 1e-10 * std::max(1.0, pl.lambda);

    double lam2 = second_eigenvalue_magnitude(*this, right_vec);
    double gp = (eigenvalue > 0.0) ? 1.0 - lam2 / eigenvalue : 0.0;
    spectral_gap = std::min(1.0, std::max(0.0, gp));

    weights.assign((size_t)n, 0.0);
    long double wsum = 0.0L;
    for (long i = 0; i < n; ++i) {
        weights[(size_t)i] = left_vec[(size_t)i] * right_vec[(size_t)i];
        wsum += weights[(size_t)i];
    }
    if (wsum > 0.0L) {
        double ws = (double)wsum;
        for (long i = 0; i < n; ++i) weights[(size_t)i] /= ws;
    } else {
        weights = right_vec;
    }

    // L1 gap between the forward-pushed cell weights and the weights: the
    // plain overlap masses give the cell-to-cell transition of the map
    // itself, so this measures dynamical invariance, not solver consistency.
    std::vector<double> push((size_t)n, 0.0);
    for (long j = 0; j < n; ++j)
        for (long e = col_ptr[(size_t)j]; e < col_ptr[(size_t)j + 1]; ++e)
            push[(size_t)j] += mass[(size_t)e] * (double)n * weights[(size_t)row[(size_t)e]];
    long double dsum = 0.0L;
    for (long j = 0; j < n; ++j)
        dsum += std::fabs(push[(size_t)j] - weights[(size_t)j]);
    invariance_defect = (double)dsum;
}

json TransferOperator::summary_json() const {
    json o;
    o["n_cells"] = n_cells;
    o["scale"] = jnum(scale);
    o["eigenvalue"] = jnum(eigenvalue);
    o["log_eigenvalue"] = jnum(std::log(eigenvalue));
    o["spectral_gap"] = jnum(spectral_gap);
    o["residual"] = jnum(residual);
    o["iterations"] = iterations;
    o["stagnated"] = stagnated;
    o["invariance_defect"] = jnum(invariance_defect);
    return o;
}

MeasureApprox equilibrium_measure(const TransferOperator& op) {
    MeasureApprox m;
    m.n_cells = op.n_cells;
    m.weights = op.weights;
    m.invariance_defect = op.invariance_defect;
    return m;
}

// ---------------------------------------------------------------------------
// geometric potential

double geometric_potential(const Solenoid& f, const SolenoidPoint& p, int steps) {
    const BaseMap& g = f.base_map();
    auto branches = f.reconstruct_branches(p);
    BackChain ch = f.chain_with_branches(p.base, branches);
    int lv = std::min(steps, ch.depth());

    // Graph-transform slope recursion along the backward itinerary: two far
    // apart seeds must collapse onto the invariant slope, otherwise the
    // contraction hypothesis fails at this point.
    const double ls = f.lambda_s();
    double sep = 0.0;
    for (int c = 0; c < g.dim(); ++c) {
        cplx w1(0.0, 0.0), w2(3.0, -2.0);
        for (int j = lv; j >= 1; --j) {
            double x = ch.points[(size_t)j][(size_t)c];
            double dg = g.deriv1(c, x);
            cplx drive = f.rot() * TWO_PI * cplx(0, 1) * std::polar(1.0, TWO_PI * x);
            w1 = (ls * w1 + drive) / dg;
            w2 = (ls * w2 + drive) / dg;
        }
        sep = std::max(sep, std::abs(w1 - w2));
    }
    if (sep > 1e-9)
        throw NumericError("center-unstable slope iteration failed to contract: separation "
                           + g17(sep));

    double s = 0.0;
    for (int c = 0; c < g.dim(); ++c)
        s -= std::log(g.deriv1(c, p.base[(size_t)c]));
    return s;
}

// ---------------------------------------------------------------------------
// pressure curve

PressureCurve pressure_curve(const Solenoid& f, const ExpansionProfile& prof,
                             double alpha, double t_min, double t_max, int steps,
                             long n_cells, int threads) {
    if (steps < 2)
        throw ConfigError("pressure curve needs at least two grid points");
    const BaseMap& g = f.base_map();

    PressureCurve pc;
    pc.n_cells = n_cells;
    pc.alpha = alpha;

    Potential pot = make_geometric_potential(g);
    pc.sup_geo = pot.sup_attractor;
    pc.inf_geo = pot.inf_attractor;

    // Range of the weight over the slow region: scan every interval on a
    // lattice plus its exact endpoints and centre. The perturbed family's
    // weight is critical at the interval centre, so including it keeps the
    // scanned sup within rounding of the true one.
    pc.sup_slow_geo = NEG_INF;
    pc.inf_slow_geo = POS_INF;
    if (!prof.omega_empty) {
        for (int c = 0; c < g.dim(); ++c) {
            for (const Arc& a : prof.omega[(size_t)c]) {
                const int S = 2000;
                for (int s = 0; s <= S; ++s) {
                    double x = wrap01(a.lo + a.len * ((double)s / (double)S));
                    double v = -std::log(g.deriv1(c, x));
                    pc.sup_slow_geo = std::max(pc.sup_slow_geo, v);
                    pc.inf_slow_geo = std::min(pc.inf_slow_geo, v);
                }
                double vm = -std::log(g.deriv1(c, a.mid()));
                pc.sup_slow_geo = std::max(pc.sup_slow_geo, vm);
                pc.inf_slow_geo = std::min(pc.inf_slow_geo, vm);
            }
        }
    }

    double cap_const = NEG_INF;
    if (!prof.omega_empty && prof.q >= 1)
        cap_const = std::log((double)prof.q) + epsilon_alpha(alpha, prof.deg, prof.q)
                    + (double)g.dim() * std::log(prof.L_global);

    auto op = build_transfer_operator(
        g, [&g](double x) { return -std::log(g.deriv1(0, x)); }, n_cells, threads);

    const double dt = (t_max - t_min) / (double)(steps - 1);
    for (int i = 0; i < steps; ++i) {
        double tt = t_min + dt * (double)i;
        op.solve(tt);
        pc.t.push_back(tt);
        pc.values.push_back(std::log(op.eigenvalue));
        pc.stagnated_any = pc.stagnated_any || op.stagnated;
        pc.floor_line.push_back(std::log((double)g.degree()) + tt * pc.inf_geo);
        if (cap_const == NEG_INF) {
            pc.slow_cap.push_back(NEG_INF);
            pc.psi.push_back(NEG_INF);
        } else {
            double sg = (tt >= 0.0) ? tt * pc.sup_geo : tt * pc.inf_geo;
            pc.slow_cap.push_back(sg + cap_const);
            double ss = (tt >= 0.0) ? tt * pc.sup_slow_geo : tt * pc.inf_slow_geo;
            pc.psi.push_back(ss + cap_const);
        }
    }

    // largest sign change of the pressure values, refined by bisection in t
    pc.root = std::nan("");
    pc.has_root = false;
    for (int i = steps - 2; i >= 0; --i) {
        double a = pc.values[(size_t)i], b = pc.values[(size_t)i + 1];
        if (b == 0.0) {
            pc.root = pc.t[(size_t)i + 1];
            pc.has_root = true;
            break;
        }
        if (a == 0.0) {
            pc.root = pc.t[(size_t)i];
            pc.has_root = true;
            break;
        }
        if ((a < 0.0) != (b < 0.0)) {
            double lo = pc.t[(size_t)i], hi = pc.t[(size_t)i + 1];
            bool neg_lo = a < 0.0;
            for (int bi = 0; bi < 60 && hi - lo > 1e-12; ++bi) {
                double tm = 0.5 * (lo + hi);
                op.solve(tm);
                double pm = std::log(op.eigenvalue);
                if (pm == 0.0) { lo = hi = tm; break; }
                if ((pm < 0.0) == neg_lo) lo = tm;
                else hi = tm;
            }
            pc.root = 0.5 * (lo + hi);
            pc.has_root = true;
            break;
        }
    }

    pc.t0 = (cap_const != NEG_INF && pc.sup_geo != 0.0) ? -cap_const / pc.sup_geo
                                                        : NEG_INF;

    pc.convex_ok = true;
    for (int i = 1; i + 1 < steps; ++i) {
        double dd = pc.values[(size_t)i + 1] - 2.0 * pc.values[(size_t)i]
                    + pc.values[(size_t)i - 1];
        if (dd < -1e-9) pc.convex_ok = false;
    }
    pc.decrease_applicable = pc.sup_geo < 0.0;
    pc.decrease_ok = true;
    if (pc.decrease_applicable)
        for (int i = 0; i + 1 < steps; ++i)
            if (!(pc.values[(size_t)i + 1] < pc.values[(size_t)i])) pc.decrease_ok = false;
    pc.floor_ok = true;
    for (int i = 0; i < steps; ++i)
        if (pc.floor_line[(size_t)i] > pc.values[(size_t)i] + 1e-9) pc.floor_ok = false;

    // longest grid run where the slow-region ceiling sits strictly below the
    // pressure: on that stretch the slow part cannot carry the supremum
    int best_len = 0, best_start = -1, cur_start = -1;
    for (int i = 0; i <= steps; ++i) {
        bool ok = i < steps && pc.psi[(size_t)i] < pc.values[(size_t)i];
        if (ok && cur_start < 0) cur_start = i;
        if (!ok && cur_start >= 0) {
            if (i - cur_start > best_len) {
                best_len = i - cur_start;
                best_start = cur_start;
            }
            cur_start = -1;
        }
    }
    if (best_len > 0) {
        pc.uniq_any = true;
        pc.uniq_lo = pc.t[(size_t)best_start];
        pc.uniq_hi = pc.t[(size_t)(best_start + best_len - 1)];
    }

    return pc;
}

void PressureCurve::write_csv(const std::string& path) const {
    CsvWriter csv(path, {"t", "pressure", "floor", "slow_cap"});
    for (size_t i = 0; i < t.size(); ++i)
        csv.row({g17(t[i]), g17(values[i]), g17(floor_line[i]), g17(slow_cap[i])});
}

json PressureCurve::to_json() const {
    auto jarr = [](const std::vector<double>& xs) {
        json a = json::array();
        for (double x : xs) a.push_back(jnum(x));
        return a;
    };
    json o;
    o["n_cells"] = n_cells;
    o["alpha"] = jnum(alpha);
    o["sup_geo"] = jnum(sup_geo);
    o["inf_geo"] = jnum(inf_geo);
    o["sup_slow_geo"] = jnum(sup_slow_geo);
    o["inf_slow_geo"] = jnum(inf_slow_geo);
    o["t"] = jarr(t);
    o["values"] = jarr(values);
    o["floor"] = jarr(floor_line);
    o["slow_cap"] = jarr(slow_cap);
    o["psi"] = jarr(psi);
    o["has_root"] = has_root;
    o["root"] = jnum(root);
    o["t0"] = jnum(t0);
    o["convex_ok"] = convex_ok;
    o["decrease_applicable"] = decrease_applicable;
    o["decrease_ok"] = decrease_ok;
    o["floor_ok"] = floor_ok;
    o["stagnated_any"] = stagnated_any;
    o["uniq_lo"] = jnum(uniq_lo);
    o["uniq_hi"] = jnum(uniq_hi);
    o["uniq_any"] = uniq_any;
    return o;
}

// ---------------------------------------------------------------------------
// Lyapunov spectrum

LyapunovSpectrum lyapunov_exponents(const Solenoid& f, long orbit_length,
                                    uint64_t seed) {
    const BaseMap& g = f.base_map();
    const int m = g.dim();
    const int n = 3 * m;
    if (orbit_length < 100)
        throw ConfigError("exponent averaging needs at least 100 orbit steps");

    RngCursor rc(seed, STREAM_LEMMA);

    // Linear coordinates advance as 64-bit integer phases fed fresh low
    // digits, so the expanding shift keeps full precision forever; the
    // perturbed coordinate iterates as a plain double.
    std::vector<uint64_t> xi((size_t)m, 0);
    std::vector<double> xd((size_t)m, 0.0);
    std::vector<char> integer_phase((size_t)m, 0);
    for (int c = 0; c < m; ++c) {
        integer_phase[(size_t)c] = (g.pert_coord() != c);
        if (integer_phase[(size_t)c]) {
            xi[(size_t)c] = rc.bits();
            xd[(size_t)c] = (double)xi[(size_t)c] * 0x1.0p-64;
        } else {
            xd[(size_t)c] = rc.uniform();
        }
    }

    // Coordinate order (re z_0, im z_0, ..., re z_{m-1}, im z_{m-1}, base_0,
    // ..., base_{m-1}) makes the Jacobian upper triangular, so the
    // orthonormal frame stays put and the diagonal growth rates are exact.
    std::vector<double> Q((size_t)n * (size_t)n, 0.0);
    for (int j = 0; j < n; ++j) Q[(size_t)j * (size_t)n + (size_t)j] = 1.0;
    std::vector<double> B((size_t)n * (size_t)n, 0.0);
    std::vector<long double> acc((size_t)n, 0.0L);

    const double ls = f.lambda_s();
    const double amp = f.rot() * TWO_PI;
    const long warm = std::min<long>(2000, orbit_length / 10);
    long counted = 0;

    for (long step = 0; step < orbit_length; ++step) {
        // B = J(x) Q with J upper triangular in the chosen order
        for (int j = 0; j < n; ++j) {
            const double* q = &Q[(size_t)j * (size_t)n];
            double* b = &B[(size_t)j * (size_t)n];
            for (int c = 0; c < m; ++c) {
                double x = xd[(size_t)c];
                double sc = std::sin(TWO_PI * x), cc = std::cos(TWO_PI * x);
                double qb = q[(size_t)(2 * m + c)];
                b[(size_t)(2 * c)] = ls * q[(size_t)(2 * c)] - amp * sc * qb;
                b[(size_t)(2 * c + 1)] = ls * q[(size_t)(2 * c + 1)] + amp * cc * qb;
                b[(size_t)(2 * m + c)] = g.deriv1(c, x) * qb;
            }
        }
        // modified Gram-Schmidt; log diagonal entries are the growth rates
        bool count = step >= warm;
        for (int j = 0; j < n; ++j) {
            double* bj = &B[(size_t)j * (size_t)n];
            for (int i = 0; i < j; ++i) {
                const double* bi = &B[(size_t)i * (size_t)n];
                double r = 0.0;
                for (int x = 0; x < n; ++x) r += bi[(size_t)x] * bj[(size_t)x];
                for (int x = 0; x < n; ++x) bj[(size_t)x] -= r * bi[(size_t)x];
            }
            double nrm2 = 0.0;
            for (int x = 0; x < n; ++x) nrm2 += bj[(size_t)x] * bj[(size_t)x];
            double rjj = std::sqrt(nrm2);
            if (!(rjj > 0.0))
                throw NumericError("frame degenerated during exponent iteration");
            for (int x = 0; x < n; ++x) bj[(size_t)x] /= rjj;
            if (count) acc[(size_t)j] += std::log((long double)rjj);
        }
        Q.swap(B);
        if (count) ++counted;

        for (int c = 0; c < m; ++c) {
            if (integer_phase[(size_t)c]) {
                uint64_t k = (uint64_t)g.factor(c);
                xi[(size_t)c] = xi[(size_t)c] * k + rc.below(k);
                xd[(size_t)c] = (double)xi[(size_t)c] * 0x1.0p-64;
            } else {
                xd[(size_t)c] = g.map1(c, xd[(size_t)c]);
            }
        }
    }

    LyapunovSpectrum ly;
    std::vector<double> raw((size_t)n, 0.0);
    for (int j = 0; j < n; ++j)
        raw[(size_t)j] = (double)(acc[(size_t)j] / (long double)counted);
    ly.exponents = raw;
    std::sort(ly.exponents.begin(), ly.exponents.end(), std::greater<double>());
    ly.base_exponent = raw[(size_t)(2 * m)];
    for (int c = 1; c < m; ++c)
        ly.base_exponent = std::max(ly.base_exponent, raw[(size_t)(2 * m + c)]);
    ly.fiber_exponent = raw[0];
    for (int j = 1; j < 2 * m; ++j)
        ly.fiber_exponent = std::min(ly.fiber_exponent, raw[(size_t)j]);
    ly.lambda_plus = 0.0;
    for (double e : ly.exponents)
        if (e > 0.0) ly.lambda_plus += e;
    return ly;
}

void add_margulis_ruelle(Report& rep, double h_est, double lambda_plus,
                         double slack) {
    double bound = lambda_plus + slack;
    rep.add("margulis_ruelle", h_est, bound, bound - h_est, h_est <= bound, true,
            "entropy estimate vs positive-exponent sum plus slack " + g17(slack));
}

// ---------------------------------------------------------------------------
// SRB diagnostics

Report srb_check(const Solenoid& f, long n_cells, long orbit_length, uint64_t seed,
                 double obs_tol, double pesin_tol, int threads) {
    const BaseMap& g = f.base_map();
    if (g.dim() != 1)
        throw ConfigError("srb check: time-average comparison is one-dimensional");
    if (n_cells < 8 || n_cells % 4 != 0 || (n_cells / 4) % g.degree() != 0)
        throw ConfigError("srb check: grid must stay a branch-count multiple through two halvings");

    Report rep;
    const double ls = f.lambda_s();
    const double rot = f.rot();

    // --- time averages along a Lebesgue-random forward orbit ---
    const long burn = 1000;
    RngCursor rc(seed, STREAM_SRB);
    const bool integer_phase = g.pert_coord() != 0;
    const uint64_t k = (uint64_t)g.factor(0);
    uint64_t xi = 0;
    double x;
    if (integer_phase) {
        xi = rc.bits();
        x = (double)xi * 0x1.0p-64;
    } else {
        x = rc.uniform();
    }
    cplx z(0.0, 0.0);
    long double s_cos = 0.0L, s_sin = 0.0L, s_cos2 = 0.0L, s_re = 0.0L, s_im = 0.0L;
    for (long step = 0; step < burn + orbit_length; ++step) {
        if (step >= burn) {
            double a = TWO_PI * x;
            s_cos += std::cos(a);
            s_sin += std::sin(a);
            s_cos2 += std::cos(2.0 * a);
            s_re += z.real();
            s_im += z.imag();
        }
        z = ls * z + rot * std::polar(1.0, TWO_PI * x);
        if (integer_phase) {
            xi = xi * k + rc.below(k);
            x = (double)xi * 0x1.0p-64;
        } else {
            x = g.map1(0, x);
        }
    }
    const double T = (double)orbit_length;
    double t_cos = (double)(s_cos / T), t_sin = (double)(s_sin / T);
    double t_cos2 = (double)(s_cos2 / T);
    double t_re = (double)(s_re / T), t_im = (double)(s_im / T);

    // --- operator measure at the geometric weight ---
    auto phi = [&g](double y) { return -std::log(g.deriv1(0, y)); };
    auto op = build_transfer_operator(g, phi, n_cells, threads);

    const long N = n_cells;
    std::vector<double> mids((size_t)N);
    for (long i = 0; i < N; ++i) mids[(size_t)i] = ((double)i + 0.5) / (double)N;

    long double m_cos = 0.0L, m_sin = 0.0L, m_cos2 = 0.0L;
    for (long i = 0; i < N; ++i) {
        double a = TWO_PI * mids[(size_t)i];
        m_cos += op.weights[(size_t)i] * std::cos(a);
        m_sin += op.weights[(size_t)i] * std::sin(a);
        m_cos2 += op.weights[(size_t)i] * std::cos(2.0 * a);
    }

    // Fiber integrals: replay fiber coordinates along backward cell chains
    // whose transitions are the operator's left-vector twist of the entry
    // weights; the start cell follows the equilibrium weights, so the chain
    // is stationary and the replayed coordinate is measure-distributed.
    std::vector<double> ccum(op.val.size(), 0.0);
    std::vector<double> ctot((size_t)N, 0.0);
    for (long j = 0; j < N; ++j) {
        long double run = 0.0L;
        for (long e = op.col_ptr[(size_t)j]; e < op.col_ptr[(size_t)j + 1]; ++e) {
            run += (long double)op.val[(size_t)e] * op.left_vec[(size_t)op.row[(size_t)e]];
            ccum[(size_t)e] = (double)run;
        }
        ctot[(size_t)j] = (double)run;
    }
    std::vector<double> wcum((size_t)N, 0.0);
    {
        long double run = 0.0L;
        for (long i = 0; i < N; ++i) {
            run += op.weights[(size_t)i];
            wcum[(size_t)i] = (double)run;
        }
    }

    const long K = 60000;
    const int D = f.n_h();
    RngCursor bc(seed, STREAM_BACKWARD);
    std::vector<long> path((size_t)D, 0);
    long double f_re = 0.0L, f_im = 0.0L;
    for (long chain = 0; chain < K; ++chain) {
        double u0 = bc.uniform();
        long cur = (long)(std::upper_bound(wcum.begin(), wcum.end(), u0) - wcum.begin());
        if (cur >= N) cur = N - 1;
        for (int d = 0; d < D; ++d) {
            double tot = ctot[(size_t)cur];
            if (!(tot > 0.0)) { path[(size_t)d] = cur; continue; }
            double u = bc.uniform() * tot;
            long e = op.col_ptr[(size_t)cur];
            long elast = op.col_ptr[(size_t)cur + 1] - 1;
            while (e < elast && ccum[(size_t)e] < u) ++e;
            cur = op.row[(size_t)e];
            path[(size_t)d] = cur;
        }
        cplx zz(0.0, 0.0);
        for (int d = D - 1; d >= 0; --d)
            zz = ls * zz + rot * std::polar(1.0, TWO_PI * mids[(size_t)path[(size_t)d]]);
        f_re += zz.real();
        f_im += zz.imag();
    }
    double m_re = (double)(f_re / (long double)K);
    double m_im = (double)(f_im / (long double)K);

    auto add_obs = [&](const char* name, double tavg, double integ) {
        double d = std::fabs(tavg - integ);
        rep.add(name, d, obs_tol, obs_tol - d, d <= obs_tol, true,
                "time=" + g17(tavg) + " measure=" + g17(integ));
    };
    add_obs("srb_cos_base", t_cos, (double)m_cos);
    add_obs("srb_sin_base", t_sin, (double)m_sin);
    add_obs("srb_cos2_base", t_cos2, (double)m_cos2);
    add_obs("srb_fiber_re", t_re, m_re);
    add_obs("srb_fiber_im", t_im, m_im);

    rep.add("srb_invariance_defect", op.invariance_defect, 1e-3,
            1e-3 - op.invariance_defect, op.invariance_defect <= 1e-3, true,
            "L1 gap of the pushed cell weights");

    // --- entropy identity residual and its refinement trend ---
    auto ly = lyapunov_exponents(f, orbit_length, seed);
    auto residual_at = [&](long nc) {
        const TransferOperator* o = &op;
        TransferOperator local;
        if (nc != n_cells) {
            local = build_transfer_operator(g, phi, nc, threads);
            o = &local;
        }
        long double integ = 0.0L;
        for (long i = 0; i < nc; ++i)
            integ += o->weights[(size_t)i] * phi(((double)i + 0.5) / (double)nc);
        double h = std::log(o->eigenvalue) - (double)integ;
        return std::fabs(h - ly.lambda_plus);
    };
    double rq = residual_at(n_cells / 4);
    double rh = residual_at(n_cells / 2);
    double rf = residual_at(n_cells);

    bool gate = pesin_tol > 0.0;
    double pbound = gate ? pesin_tol : POS_INF;
    rep.add("pesin_residual", rf, pbound, pbound - rf, rf <= pbound, gate,
            "pressure minus weight integral vs positive-exponent sum");
    bool mono_up = rq <= rh + 1e-9 && rh <= rf + 1e-9;
    bool mono_dn = rq >= rh - 1e-9 && rh >= rf - 1e-9;
    rep.add("pesin_trend", rf, rq, rq - rf, mono_up || mono_dn, false,
            "quarter=" + g17(rq) + " half=" + g17(rh) + " full=" + g17(rf));
    return rep;
}

Report srb_hypothesis_check(const BaseMap& g, const ExpansionProfile& prof,
                            double alpha, bool gating) {
    Report rep;
    double lhs = NEG_INF;
    if (!prof.omega_empty && prof.q >= 1)
        lhs = std::log((double)prof.q) + epsilon_alpha(alpha, prof.deg, prof.q)
              + (double)g.dim() * std::log(prof.L_global);
    Potential pot = make_geometric_potential(g);
    double rhs = std::min(std::log((double)g.degree()), -pot.sup_attractor);
    rep.add("srb_criterion", lhs, rhs, rhs - lhs, lhs < rhs, gating,
            "slow-branch growth plus distortion allowance vs expansion floor");
    return rep;
}

Report srb_parameter_search(const std::vector<double>& deltas,
                            const std::vector<double>& lambda_us,
                            const std::vector<double>& alphas, double rho) {
    Report rep;
    long hits = 0, vacuous = 0, rejected = 0, misses = 0, idx = 0;
    for (double d : deltas) {
        for (double lu : lambda_us) {
            for (double a : alphas) {
                std::string tag = "delta=" + g17(d) + " lambda_u=" + g17(lu)
                                  + " alpha=" + g17(a);
                std::string id = std::to_string(idx++);
                BaseMapConfig cfg;
                cfg.m = 1;
                cfg.kind = "pitchfork";
                cfg.factors = {2};
                cfg.delta = d;
                cfg.lambda_u = lu;
                cfg.rho = rho;
                try {
                    BaseMap g(cfg);
                    auto prof = build_expansion_profile(g, lu, rho);
                    if (prof.omega_empty) {
                        ++vacuous;
                        rep.add("srb_search_vacuous_" + id, 0.0, 0.0, 0.0, true,
                                false, tag + " vacuous: slow region empty");
                        continue;
                    }
                    Report sub = srb_hypothesis_check(g, prof, a);
                    const CheckRow* row = sub.find("srb_criterion");
                    if (row != nullptr && row->pass) {
                        ++hits;
                        rep.add("srb_search_hit_" + id, row->value, row->bound,
                                row->margin, true, false, tag);
                    } else {
                        ++misses;
                        double v = row ? row->value : 0.0;
                        double b = row ? row->bound : 0.0;
                        rep.add("srb_search_miss_" + id, v, b, b - v, false,
                                false, tag + " criterion not met");
                    }
                } catch (const ConfigError& e) {
                    ++rejected;
                    rep.add("srb_search_rejected_" + id, 0.0, 0.0, 0.0, true,
                            false, tag + " rejected: " + e.what());
                }
            }
        }
    }
    long total = idx;
    rep.add("srb_search", (double)hits, (double)total, 0.0, true, false,
            "hits=" + std::to_string(hits) + " vacuous=" + std::to_string(vacuous)
                + " rejected=" + std::to_string(rejected)
                + " miss=" + std::to_string(misses));
    return rep;
}

} // namespace tf

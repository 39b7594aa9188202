#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "thermoformal/thermo.hpp"
#include "thermoformal/numfmt.hpp"
#include "oracles.hpp"

using namespace tf;

static BaseMapConfig doubling_cfg() {
    BaseMapConfig c;
    c.m = 1; c.kind = "linear"; c.factors = {2};
    c.lambda_u = 0.7; c.rho = 0.05;
    return c;
}
static BaseMapConfig pitchfork_cfg() {
    BaseMapConfig c;
    c.m = 1; c.kind = "pitchfork"; c.factors = {2};
    c.delta = 1.05; c.pert_radius = 0.2;
    c.lambda_u = 0.9; c.rho = 0.06;
    return c;
}

// skew with the fiber switched off: the attractor fiber is identically zero,
// so orbit distances reduce to exact base arithmetic (dyadic for the linear
// family) and counts can be pinned without tolerance
static SkewConfig flat_skew() {
    SkewConfig sc;
    sc.lambda_s = 0.25;
    sc.rot = 0.0;
    return sc;
}

static SolenoidPoint base_point(double x) {
    SolenoidPoint p;
    p.base = {wrap01(x)};
    p.fiber = {cplx(0.0, 0.0)};
    return p;
}

// equispaced-base candidates with zero fiber (valid attractor points for
// flat_skew); a power-of-two count keeps every coordinate dyadic
static CandidateSource grid_src(long n_pts) {
    CandidateSource src;
    src.count = n_pts;
    src.at = [n_pts](long i) { return base_point((i + 0.5) / (double)n_pts); };
    return src;
}

static CandidateSource random_src(const Solenoid& f, long n_pts, uint64_t seed) {
    auto pts = std::make_shared<std::vector<SolenoidPoint>>(
        sample_chains(f, n_pts, 24, seed, STREAM_CHAINS, 1));
    CandidateSource src;
    src.count = n_pts;
    src.at = [pts](long i) { return (*pts)[i]; };
    return src;
}

static Potential const_pot(double c) {
    Potential p;
    p.kind = "holder_test";
    p.eval = [c](const SolenoidPoint&) { return c; };
    p.holder_K = 0.0;
    p.holder_exponent = 1.0;
    p.sup_attractor = c; p.inf_attractor = c; p.sup_slow = c;
    p.sups_estimated = true;
    return p;
}

// reference greedy scan, no pruning: the engine under test must reproduce its
// kept list exactly
static std::vector<long> brute_greedy(const Solenoid& f, const CandidateSource& src,
                                      int n, double eps) {
    std::vector<long> kept;
    std::vector<std::vector<SolenoidPoint>> orbits;
    for (long i = 0; i < src.count; ++i) {
        std::vector<SolenoidPoint> orb{src.at(i)};
        for (int k = 1; k < n; ++k) orb.push_back(f.eval(orb.back()));
        bool sep = true;
        for (auto& ko : orbits) {
            double d = 0.0;
            for (int k = 0; k < n; ++k) d = std::max(d, f.metric(orb[k], ko[k]));
            if (d < eps) { sep = false; break; }
        }
        if (sep) { kept.push_back(i); orbits.push_back(std::move(orb)); }
    }
    return kept;
}

TEST_CASE("bowen distance: linear orbit gaps double until they wrap") {
    BaseMap g(doubling_cfg());
    Solenoid f(g, flat_skew());
    SolenoidPoint x = base_point(0.5);
    SolenoidPoint y = base_point(0.5 + std::pow(2.0, -10));

    CHECK(bowen_distance(f, x, y, 1) == std::pow(2.0, -10));
    // gap after k steps is exactly 2^(k-10); the max over k = 0..7 is 2^-3
    CHECK(bowen_distance(f, x, y, 8) == 0.125);
    CHECK(bowen_distance(f, y, x, 8) == 0.125);
    CHECK(bowen_distance(f, x, x, 12) == 0.0);

    double prev = 0.0;
    for (int n = 1; n <= 10; ++n) {
        double d = bowen_distance(f, x, y, n);
        CHECK(d >= prev);
        prev = d;
    }

    // against a fresh orbit walk, fiber active
    SkewConfig sc;
    Solenoid fr(g, sc);
    auto pts = sample_chains(fr, 6, 24, 77, STREAM_CHAINS, 1);
    for (int i = 0; i + 1 < (int)pts.size(); i += 2) {
        SolenoidPoint a = pts[i], b = pts[i + 1];
        double ref = 0.0;
        SolenoidPoint u = a, v = b;
        for (int k = 0; k < 9; ++k) {
            ref = std::max(ref, fr.metric(u, v));
            u = fr.eval(u); v = fr.eval(v);
        }
        CHECK(bowen_distance(fr, a, b, 9) == doctest::Approx(ref).epsilon(1e-15));
    }
}

TEST_CASE("birkhoff sums: additivity and the expansion observable") {
    BaseMap g(doubling_cfg());
    SkewConfig sc;
    Solenoid f(g, sc);

    Potential zero = make_zero_potential();
    Potential geo = make_geometric_potential(g);
    Potential cosp = make_cosine_potential(0.4);

    auto pts = sample_chains(f, 4, 24, 5, STREAM_CHAINS, 1);
    for (auto& p : pts) {
        CHECK(birkhoff_sum(f, zero, p, 10) == 0.0);
        CHECK(birkhoff_sum(f, geo, p, 10)
              == doctest::Approx(-10.0 * std::log(2.0)).epsilon(1e-13));

        double manual = 0.0;
        SolenoidPoint u = p;
        for (int k = 0; k < 7; ++k) { manual += cosp(u); u = f.eval(u); }
        CHECK(birkhoff_sum(f, cosp, p, 7) == doctest::Approx(manual).epsilon(1e-14));

        // S_{a+b}(x) = S_a(x) + S_b(f^a x)
        SolenoidPoint mid = p;
        for (int k = 0; k < 4; ++k) mid = f.eval(mid);
        CHECK(birkhoff_sum(f, cosp, p, 9)
              == doctest::Approx(birkhoff_sum(f, cosp, p, 4)
                                 + birkhoff_sum(f, cosp, mid, 5)).epsilon(1e-12));
    }
}

TEST_CASE("separated sets: exact counts on a dyadic grid") {
    BaseMap g(doubling_cfg());
    Solenoid f(g, flat_skew());
    auto src = grid_src(16384);

    // n = 3, eps = 1/4: separation needs an index gap of eps/2^(n-1) * 16384
    // = 1024, every quantity dyadic and exact
    auto s3 = build_separated_set(f, src, 3, 0.25, 1L << 40);
    REQUIRE((long)s3.kept.size() == 16);
    for (int i = 0; i < 16; ++i) CHECK(s3.kept[i] == 1024L * i);
    CHECK_FALSE(s3.saturated);

    auto s1 = build_separated_set(f, src, 1, 0.5, 1L << 40);
    REQUIRE((long)s1.kept.size() == 2);
    CHECK(s1.kept[0] == 0);
    CHECK(s1.kept[1] == 8192);

    Potential zero = make_zero_potential();
    CHECK(partition_sum(f, zero, src, s3, 3)
          == doctest::Approx(std::log(16.0)).epsilon(1e-15));
    CHECK(partition_sum(f, zero, src, s1, 1)
          == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    // constant weight shifts the log sum by n*c
    Potential c37 = const_pot(0.37);
    CHECK(partition_sum(f, c37, src, s3, 3)
          == doctest::Approx(std::log(16.0) + 3 * 0.37).epsilon(1e-12));

    // precomputed weights must agree with the recompute path
    std::vector<double> w(src.count);
    for (long i = 0; i < src.count; ++i) w[i] = birkhoff_sum(f, c37, src.at(i), 3);
    CHECK(partition_sum(f, c37, src, s3, 3, &w)
          == doctest::Approx(partition_sum(f, c37, src, s3, 3)).epsilon(1e-15));
}

TEST_CASE("separated sets: engine matches the unpruned scan exactly") {
    SUBCASE("linear base, active fiber, random candidates") {
        BaseMap g(doubling_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto src = random_src(f, 1500, 42);
        auto fast = build_separated_set(f, src, 6, 0.07, 1L << 40);
        CHECK(fast.kept == brute_greedy(f, src, 6, 0.07));
    }
    SUBCASE("perturbed base, random candidates") {
        BaseMap g(pitchfork_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto src = random_src(f, 1000, 43);
        auto fast = build_separated_set(f, src, 5, 0.06, 1L << 40);
        CHECK(fast.kept == brute_greedy(f, src, 5, 0.06));
    }
    SUBCASE("perturbed base, ordered grid candidates") {
        BaseMap g(pitchfork_cfg());
        Solenoid f(g, flat_skew());
        auto src = grid_src(3000);
        auto fast = build_separated_set(f, src, 8, 0.1, 1L << 40);
        auto ref = brute_greedy(f, src, 8, 0.1);
        CHECK(fast.kept == ref);
        CHECK((long)fast.kept.size() == (long)ref.size());
    }
}

TEST_CASE("separated sets: pair budget exhaustion is flagged, result lower-bounds") {
    BaseMap g(doubling_cfg());
    SkewConfig sc;
    Solenoid f(g, sc);
    auto src = random_src(f, 4000, 99);

    auto full = build_separated_set(f, src, 8, 0.05, 1L << 40);
    CHECK_FALSE(full.saturated);
    CHECK(full.pair_evals > 0);

    auto cut = build_separated_set(f, src, 8, 0.05, 200);
    CHECK(cut.saturated);
    CHECK(cut.pair_evals <= 200);
    CHECK((long)cut.kept.size() <= (long)full.kept.size());
    CHECK((long)cut.kept.size() >= 1);
}

TEST_CASE("collection sources: deterministic, on the attractor, class-pure") {
    SUBCASE("full collection: grid bases with a shared seeded past") {
        BaseMap g(doubling_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto prof = build_expansion_profile(g, 0.7, 0.05);
        auto dp = make_decomposition_params(prof, f, 0.6);

        auto src = collection_source(f, prof, dp, Collection::ALL, 8, 5000, 11);
        REQUIRE(src.count == 5000);
        auto p7a = src.at(7), p7b = src.at(7);
        CHECK(p7a.base[0] == p7b.base[0]);
        CHECK(p7a.fiber[0] == p7b.fiber[0]);
        CHECK(p7a.base[0] == (7 + 0.5) / 5000.0);
        CHECK(std::abs(p7a.fiber[0]) <= f.slice_radius() + 1e-9);

        auto src2 = collection_source(f, prof, dp, Collection::ALL, 8, 5000, 11);
        CHECK(src2.at(3).fiber[0] == src.at(3).fiber[0]);
        auto src3 = collection_source(f, prof, dp, Collection::ALL, 8, 5000, 12);
        CHECK(src3.at(3).fiber[0] != src.at(3).fiber[0]);
    }
    SUBCASE("good and slow collections on the perturbed base") {
        BaseMap g(pitchfork_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto prof = build_expansion_profile(g, 0.9, 0.06);
        auto dp = make_decomposition_params(prof, f, 0.667);

        auto gs = collection_source(f, prof, dp, Collection::G, 10, 300, 21);
        REQUIRE(gs.count >= 1);
        CHECK(gs.count <= 300);
        for (long i = 0; i < gs.count; i += 37) {
            auto seg = make_segment(f, prof, gs.at(i), 10);
            CHECK(classify_segment(seg, dp).in_G);
        }

        auto ss = collection_source(f, prof, dp, Collection::S, 10, 300, 22);
        REQUIRE(ss.count >= 1);
        for (long i = 0; i < ss.count; i += 23) {
            auto seg = make_segment(f, prof, ss.at(i), 10);
            CHECK(classify_segment(seg, dp).in_S);
            CHECK(oracle::oin_S(seg.itinerary, 0.667));
            CHECK(std::abs(ss.at(i).fiber[0]) <= f.slice_radius() + 1e-9);
        }

        auto ss2 = collection_source(f, prof, dp, Collection::S, 10, 300, 22);
        REQUIRE(ss2.count == ss.count);
        CHECK(ss2.at(0).base[0] == ss.at(0).base[0]);
        CHECK(ss2.at(0).fiber[0] == ss.at(0).fiber[0]);
    }
    SUBCASE("slow collection is empty when the slow region is empty") {
        BaseMap g(doubling_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto prof = build_expansion_profile(g, 0.7, 0.05);
        auto dp = make_decomposition_params(prof, f, 0.6);
        auto ss = collection_source(f, prof, dp, Collection::S, 8, 200, 5);
        CHECK(ss.count == 0);
    }
}

TEST_CASE("epsilon_alpha: pins, limits, errors") {
    CHECK(epsilon_alpha(0.75, 2, 1) == doctest::Approx(0.5623351446188083).epsilon(1e-12));
    CHECK(epsilon_alpha(0.6, 4, 1) == doctest::Approx(1.1124565824765005).epsilon(1e-12));
    CHECK(epsilon_alpha(0.9, 8, 3) == doctest::Approx(0.3761655357680473).epsilon(1e-12));
    CHECK(epsilon_alpha(1.0, 2, 1) == 0.0);
    CHECK(epsilon_alpha(1.0 - 1e-9, 2, 1) < 1e-7);

    for (double a = 0.05; a < 1.0001; a += 0.05) {
        double aa = std::min(a, 1.0);
        CHECK(epsilon_alpha(aa, 2, 1) == doctest::Approx(oracle::oeps_alpha(aa, 2, 1)).epsilon(1e-14));
        CHECK(epsilon_alpha(aa, 4, 1) == doctest::Approx(oracle::oeps_alpha(aa, 4, 1)).epsilon(1e-14));
        CHECK(epsilon_alpha(aa, 8, 3) == doctest::Approx(oracle::oeps_alpha(aa, 8, 3)).epsilon(1e-14));
    }
    double prev = epsilon_alpha(0.55, 2, 1);
    for (double a = 0.6; a < 1.0001; a += 0.05) {
        double cur = epsilon_alpha(std::min(a, 1.0), 2, 1);
        CHECK(cur < prev);
        prev = cur;
    }

    CHECK_THROWS_AS(epsilon_alpha(0.0, 2, 1), ConfigError);
    CHECK_THROWS_AS(epsilon_alpha(-0.1, 2, 1), ConfigError);
    CHECK_THROWS_AS(epsilon_alpha(1.0 + 1e-9, 2, 1), ConfigError);
    CHECK_THROWS_AS(epsilon_alpha(0.5, 2, 0), ConfigError);
    CHECK_THROWS_AS(epsilon_alpha(0.5, 2, 2), ConfigError);
}

TEST_CASE("psi bound: ceiling for slow-dominated pressure") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    REQUIRE(prof.q == 1);
    REQUIRE(prof.deg == 2);

    Potential zero = make_zero_potential();
    double psi = psi_bound(zero, prof, 0.667);
    double want = std::log((double)prof.q) + oracle::oeps_alpha(0.667, 2, 1)
                + std::log(prof.L_global);
    CHECK(psi == doctest::Approx(want).epsilon(1e-12));
    CHECK(psi == doctest::Approx(0.6875771635799786).epsilon(1e-5));
    CHECK(psi_bound(zero, prof, 0.8) == doctest::Approx(0.5516967179252382).epsilon(1e-5));

    // shifting the potential shifts the ceiling by the same constant
    CHECK(psi_bound(const_pot(0.3), prof, 0.667)
          == doctest::Approx(psi + 0.3).epsilon(1e-12));

    // ceiling reads the slow-region sup, not the global one
    Potential lop = const_pot(0.0);
    lop.sup_attractor = 5.0;
    lop.sup_slow = 0.1;
    CHECK(psi_bound(lop, prof, 0.667) == doctest::Approx(psi + 0.1).epsilon(1e-12));

    BaseMap gl(doubling_cfg());
    auto prof_l = build_expansion_profile(gl, 0.7, 0.05);
    double pl = psi_bound(zero, prof_l, 0.6);
    CHECK(std::isinf(pl));
    CHECK(pl < 0);
}

TEST_CASE("variation gap: small oscillation forces the ceiling below the pressure") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);

    Potential zero = make_zero_potential();
    auto vg8 = variation_gap(zero, prof, 0.8);
    double want = std::log(2.0) - oracle::oeps_alpha(0.8, 2, 1) - std::log(prof.L_global);
    CHECK(vg8.rhs == doctest::Approx(want).epsilon(1e-12));
    CHECK(vg8.rhs == doctest::Approx(0.1414504626347071).epsilon(1e-5));
    CHECK(vg8.variation == 0.0);
    CHECK(vg8.pass);

    // at alpha = 0.667 the gap equals the zero-potential pressure margin
    auto vg = variation_gap(zero, prof, 0.667);
    CHECK(vg.rhs == doctest::Approx(0.00557001697996673).epsilon(1e-4));
    CHECK(vg.pass);

    Potential cosp = make_cosine_potential(0.2); // oscillation 0.4 exceeds the gap
    auto vgc = variation_gap(cosp, prof, 0.8);
    CHECK(vgc.variation == doctest::Approx(0.4).epsilon(1e-12));
    CHECK_FALSE(vgc.pass);

    BaseMap gl(doubling_cfg());
    auto prof_l = build_expansion_profile(gl, 0.7, 0.05);
    auto vgl = variation_gap(cosp, prof_l, 0.6);
    CHECK(std::isinf(vgl.rhs));
    CHECK(vgl.pass);
}

TEST_CASE("uniqueness certificate: margins against the slow ceiling") {
    BaseMap gp(pitchfork_cfg());
    auto prof = build_expansion_profile(gp, 0.9, 0.06);
    Potential zero = make_zero_potential();
    double psi = psi_bound(zero, prof, 0.667);

    SUBCASE("clear pass") {
        Report r = uniqueness_certificate(zero, prof, 0.667,
                                          {std::log(2.0), 1e-9}, {0.62, 0.01});
        auto* a = r.find("uniq_psi_vs_pressure");
        auto* b = r.find("uniq_s_pressure_vs_psi");
        auto* c = r.find("uniq_certificate");
        REQUIRE(a); REQUIRE(b); REQUIRE(c);
        CHECK(a->margin == doctest::Approx(std::log(2.0) - psi).epsilon(1e-12));
        CHECK(a->pass);
        CHECK(b->margin == doctest::Approx(psi - 0.62).epsilon(1e-12));
        CHECK(b->pass);
        CHECK(c->pass);
        CHECK(r.all_gating_pass());
    }
    SUBCASE("inconclusive when the margin sits inside the uncertainty") {
        Report r = uniqueness_certificate(zero, prof, 0.667,
                                          {psi + 0.001, 0.01}, {0.62, 0.005});
        auto* a = r.find("uniq_psi_vs_pressure");
        REQUIRE(a);
        CHECK_FALSE(a->pass);
        CHECK(a->margin > 0.0);
        CHECK(a->note.find("inconclusive") != std::string::npos);
        CHECK_FALSE(r.find("uniq_certificate")->pass);
    }
    SUBCASE("outright failure when the ceiling exceeds the pressure") {
        Potential big = const_pot(0.0);
        big.sup_slow = 10.0;
        Report r = uniqueness_certificate(big, prof, 0.667,
                                          {std::log(2.0), 1e-9}, {0.62, 0.01});
        auto* a = r.find("uniq_psi_vs_pressure");
        REQUIRE(a);
        CHECK_FALSE(a->pass);
        CHECK(a->margin < 0.0);
        CHECK(a->note.find("inconclusive") == std::string::npos);
    }
    SUBCASE("empty slow region passes vacuously") {
        BaseMap gl(doubling_cfg());
        auto prof_l = build_expansion_profile(gl, 0.7, 0.05);
        Report r = uniqueness_certificate(zero, prof_l, 0.6,
                                          {std::log(2.0), 1e-9}, {NEG_INF, 0.0});
        CHECK(r.all_gating_pass());
        auto* b = r.find("uniq_s_pressure_vs_psi");
        REQUIRE(b);
        CHECK(b->pass);
        CHECK(std::isinf(b->margin));
        CHECK(b->margin > 0);
        CHECK(!b->note.empty());
    }
}

TEST_CASE("cylinder counts: exhaustive enumeration against the binomial ceiling") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    REQUIRE(prof.q == 1);

    SUBCASE("pinned case n=12 alpha=0.75") {
        auto cc = cylinder_count(g, prof, 12, 0.75);
        CHECK(cc.count == 299);
        CHECK(cc.slow_symbols == prof.q);
        CHECK(cc.bound == doctest::Approx(852.370878423004).epsilon(1e-9));
        CHECK(cc.pass);
        CHECK(cc.log_count == doctest::Approx(std::log(299.0)).epsilon(1e-15));
    }
    SUBCASE("sweep matches the closed-form count") {
        for (int n = 1; n <= 14; ++n)
            for (double a : {0.6, 0.75, 0.9}) {
                auto cc = cylinder_count(g, prof, n, a);
                long want = (long)(oracle::ocylinder(n, a, 1, 2) + 0.5L);
                CHECK(cc.count == want);
                CHECK((double)cc.count <= cc.bound * (1 + 1e-12));
                CHECK(cc.pass);
            }
    }
    SUBCASE("degenerate exponents") {
        auto all = cylinder_count(g, prof, 12, 0.0);
        CHECK(all.count == 4096);
        CHECK(std::isinf(all.bound));
        CHECK(all.pass);
        CHECK(!all.note.empty());

        auto one = cylinder_count(g, prof, 12, 1.0);
        CHECK(one.count == 1);
        CHECK(one.pass);

        // below the slow-symbol frequency the ceiling genuinely fails and the
        // result must say so
        auto low = cylinder_count(g, prof, 10, 0.3);
        CHECK(low.count == 968);
        CHECK_FALSE(low.pass);
        CHECK(!low.note.empty());
    }
    SUBCASE("size guards") {
        CHECK_THROWS_AS(cylinder_count(g, prof, 21, 0.75), ConfigError);
        CHECK_THROWS_AS(cylinder_count(g, prof, 0, 0.75), ConfigError);
        BaseMapConfig big;
        big.m = 2; big.kind = "linear"; big.factors = {8, 8};
        BaseMap gb(big);
        auto prof_b = build_expansion_profile(gb, 0.7, 0.05);
        CHECK_THROWS_AS(cylinder_count(gb, prof_b, 5, 0.75), ConfigError);
    }
    SUBCASE("empty slow region") {
        BaseMap gl(doubling_cfg());
        auto prof_l = build_expansion_profile(gl, 0.7, 0.05);
        auto cc = cylinder_count(gl, prof_l, 10, 0.6);
        CHECK(cc.count == 0);
        CHECK(cc.bound == 0.0);
        CHECK(cc.pass);
        auto cc0 = cylinder_count(gl, prof_l, 10, 0.0);
        CHECK(cc0.count == 1024);
        CHECK(cc0.pass);
    }
    SUBCASE("two perturbed-coordinate cells in a product base") {
        BaseMapConfig c2;
        c2.m = 2; c2.kind = "pitchfork"; c2.factors = {2, 2};
        c2.delta = 1.05; c2.pert_radius = 0.2; c2.lambda_u = 0.9; c2.rho = 0.06;
        BaseMap g2(c2);
        auto prof2 = build_expansion_profile(g2, 0.9, 0.06);
        REQUIRE(prof2.deg == 4);
        auto cc = cylinder_count(g2, prof2, 6, 0.75);
        CHECK(cc.slow_symbols == prof2.q);
        CHECK(cc.count == (long)(oracle::ocylinder(6, 0.75, prof2.q, 4) + 0.5L));
        CHECK(cc.pass);
    }
}

TEST_CASE("potentials: constructors, sup estimation, holder data") {
    BaseMap gd(doubling_cfg());
    BaseMap gp(pitchfork_cfg());
    SkewConfig sc;
    Solenoid fd(gd, sc);
    Solenoid fp(gp, sc);

    SUBCASE("zero and cosine") {
        Potential z = make_zero_potential();
        CHECK(z.kind == "zero");
        CHECK(z(base_point(0.3)) == 0.0);
        CHECK(z.sup_attractor == 0.0);
        CHECK(z.sups_estimated);

        Potential c = make_cosine_potential(0.3);
        CHECK(c.kind == "holder_test");
        CHECK(c(base_point(0.0)) == doctest::Approx(0.3).epsilon(1e-15));
        CHECK(c(base_point(0.25)) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(c.holder_K == doctest::Approx(0.3 * 2 * M_PI).epsilon(1e-15));
        CHECK(c.holder_exponent == 1.0);
        CHECK(c.sup_attractor == doctest::Approx(0.3).epsilon(1e-12));
        CHECK(c.inf_attractor == doctest::Approx(-0.3).epsilon(1e-12));
    }
    SUBCASE("expansion observable") {
        Potential gz = make_geometric_potential(gd);
        CHECK(gz.kind == "geometric");
        auto pts = sample_chains(fd, 5, 24, 7, STREAM_CHAINS, 1);
        for (auto& p : pts)
            CHECK(gz(p) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
        CHECK(gz.holder_K == 0.0);
        CHECK(gz.sup_attractor == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

        Potential gq = make_geometric_potential(gp);
        CHECK(gq(base_point(0.0)) == doctest::Approx(-std::log(0.95)).epsilon(1e-12));
        CHECK(gq.holder_K > 0.0);
        // the weakest expansion sits at the origin, so the sup is -log g'(0)
        CHECK(gq.sup_attractor == doctest::Approx(-std::log(0.95)).epsilon(1e-6));
        CHECK(gq.sup_slow == doctest::Approx(-std::log(0.95)).epsilon(1e-6));
        // derivative check against the finite-difference oracle at a few spots
        for (double x : {0.03, 0.11, 0.37, 0.71}) {
            double want = -std::log(oracle::oderiv_fd(x, 2, 1.05, 0.2));
            CHECK(gq(base_point(x)) == doctest::Approx(want).epsilon(1e-6));
        }
    }
    SUBCASE("sampled sups over the attractor and its slow part") {
        auto prof_d = build_expansion_profile(gd, 0.7, 0.05);
        Potential c = make_cosine_potential(0.3);
        estimate_potential_sups(fd, prof_d, c, 20000, 10, 31);
        CHECK(c.sups_estimated);
        CHECK(c.sup_attractor <= 0.3 + 1e-12);
        CHECK(c.sup_attractor >= 0.297);
        CHECK(c.inf_attractor >= -0.3 - 1e-12);
        CHECK(c.inf_attractor <= -0.297);
        CHECK(std::isinf(c.sup_slow)); // no slow region anywhere
        CHECK(c.sup_slow < 0);

        // a potential whose slow-region sup is genuinely below the global one
        auto prof_p = build_expansion_profile(gp, 0.9, 0.06);
        Potential mc;
        mc.kind = "holder_test";
        mc.eval = [](const SolenoidPoint& p) { return -std::cos(2 * M_PI * p.base[0]); };
        mc.holder_K = 2 * M_PI;
        mc.holder_exponent = 1.0;
        estimate_potential_sups(fp, prof_p, mc, 20000, 10, 32);
        CHECK(mc.sup_attractor >= 0.98);
        CHECK(mc.sup_slow <= -0.55);
        CHECK(mc.sup_slow >= -0.65);
    }
    SUBCASE("holder ratio stays below one") {
        Potential c = make_cosine_potential(0.5);
        Report r = check_holder_data(fd, c, 800, 17);
        CHECK(r.all_gating_pass());
        auto* row = r.find("holder_ratio");
        REQUIRE(row);
        CHECK(row->value <= 1.0);
        CHECK(row->value > 0.0);
    }
}

TEST_CASE("bowen variation: observed oscillation under the analytic ceiling") {
    BaseMap g(doubling_cfg());
    SkewConfig sc;
    Solenoid f(g, sc);
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    auto dp = make_decomposition_params(prof, f, 0.6);

    Potential c = make_cosine_potential(1.0);
    double C = 3.56391; // measured transport constant for this preset
    double eta = 0.01;
    Report r = bowen_variation(f, prof, dp, c, C, eta, {1, 5, 10, 20, 30}, 120, 404);

    double theta = oracle::otheta(1.0, 0.7, 0.6);
    double V = 4.0 * C * (2 * M_PI) * eta / (1.0 - theta);
    CHECK(V == doctest::Approx(6.736683102496633).epsilon(1e-9));

    for (int n : {1, 5, 10, 20, 30}) {
        auto* row = r.find("bowen_var_n" + std::to_string(n));
        REQUIRE(row);
        CHECK(row->bound == doctest::Approx(V).epsilon(1e-9));
        CHECK(row->value <= V);
        CHECK(row->value > 0.004);
        CHECK(row->pass);
    }
    // one-step oscillation can never exceed K * eta
    auto* r1 = r.find("bowen_var_n1");
    CHECK(r1->value <= 2 * M_PI * eta * (1 + 1e-9));

    auto* tr = r.find("bowen_var_trend");
    REQUIRE(tr);
    CHECK(tr->pass);

    // smoke on the perturbed preset: the ceiling is huge but finite
    BaseMap gp(pitchfork_cfg());
    Solenoid fp(gp, sc);
    auto prof_p = build_expansion_profile(gp, 0.9, 0.06);
    auto dp_p = make_decomposition_params(prof_p, fp, 0.667);
    Report rp = bowen_variation(fp, prof_p, dp_p, c, 3.69498, eta, {6}, 40, 405);
    auto* rowp = rp.find("bowen_var_n6");
    REQUIRE(rowp);
    CHECK(rowp->pass);
    CHECK(rowp->bound > 100.0);
    CHECK(std::isfinite(rowp->bound));
}

TEST_CASE("pressure estimator: orbit growth on the full attractor") {
    BaseMap g(doubling_cfg());
    SkewConfig sc;
    Solenoid f(g, sc);
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    auto dp = make_decomposition_params(prof, f, 0.6);
    Potential zero = make_zero_potential();

    PressureParams pp;
    pp.collection = Collection::ALL;
    pp.epsilons = {0.1, 0.05};
    pp.ns = {4, 6, 8, 10};
    pp.candidate_target = 120000;
    pp.seed = 2026;

    auto est = estimate_pressure(f, prof, dp, zero, pp);
    CHECK(std::fabs(est.value - std::log(2.0)) <= 0.05);
    CHECK_FALSE(est.unreliable);
    CHECK_FALSE(est.empty_collection);
    CHECK_FALSE(est.candidate_limited);
    CHECK(est.uncertainty == std::fabs(est.value_at_scale[1] - est.value_at_scale[0]));

    for (size_t i = 0; i < pp.ns.size(); ++i) {
        CHECK(est.cell_count(0, i) > 0);
        // shrinking the scale can only keep more of the same candidates
        CHECK(est.cell_log_sum(1, i) >= est.cell_log_sum(0, i) - 1e-12);
        if (i + 1 < pp.ns.size())
            CHECK(est.cell_log_sum(0, i + 1) > est.cell_log_sum(0, i));
    }

    SUBCASE("reruns and thread counts are bit-identical") {
        auto est2 = estimate_pressure(f, prof, dp, zero, pp);
        CHECK(est2.value == est.value);
        CHECK(est2.log_sums == est.log_sums);
        CHECK(est2.counts == est.counts);

        PressureParams pt = pp;
        pt.threads = 3;
        auto est3 = estimate_pressure(f, prof, dp, zero, pt);
        CHECK(est3.value == est.value);
        CHECK(est3.log_sums == est.log_sums);
    }
    SUBCASE("constant shift moves every cell by n*c and the value by c") {
        auto estc = estimate_pressure(f, prof, dp, const_pot(0.37), pp);
        CHECK(estc.value == doctest::Approx(est.value + 0.37).epsilon(1e-12));
        for (size_t e = 0; e < pp.epsilons.size(); ++e)
            for (size_t i = 0; i < pp.ns.size(); ++i) {
                CHECK(estc.cell_count(e, i) == est.cell_count(e, i));
                CHECK(estc.cell_log_sum(e, i)
                      == doctest::Approx(est.cell_log_sum(e, i) + pp.ns[i] * 0.37)
                             .epsilon(1e-11));
            }
    }
    SUBCASE("schedule validation") {
        PressureParams bad = pp;
        bad.epsilons = {};
        CHECK_THROWS_AS(estimate_pressure(f, prof, dp, zero, bad), ConfigError);
        bad = pp; bad.epsilons = {0.05, 0.1};
        CHECK_THROWS_AS(estimate_pressure(f, prof, dp, zero, bad), ConfigError);
        bad = pp; bad.ns = {8};
        CHECK_THROWS_AS(estimate_pressure(f, prof, dp, zero, bad), ConfigError);
        bad = pp; bad.ns = {8, 8};
        CHECK_THROWS_AS(estimate_pressure(f, prof, dp, zero, bad), ConfigError);
    }
    SUBCASE("too few candidates trips the diagnostic") {
        PressureParams tiny = pp;
        tiny.candidate_target = 500;
        tiny.epsilons = {0.01};
        tiny.ns = {4, 6};
        auto lim = estimate_pressure(f, prof, dp, zero, tiny);
        CHECK(lim.candidate_limited);
    }
    SUBCASE("budget exhaustion marks the estimate unreliable") {
        PressureParams cut = pp;
        cut.candidate_target = 20000;
        cut.pair_budget = 50;
        auto est_cut = estimate_pressure(f, prof, dp, zero, cut);
        CHECK(est_cut.unreliable);
    }
}

TEST_CASE("pressure estimator: restricted collections") {
    SUBCASE("slow collection over an empty slow region is negative-infinite") {
        BaseMap g(doubling_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto prof = build_expansion_profile(g, 0.7, 0.05);
        auto dp = make_decomposition_params(prof, f, 0.6);
        PressureParams pp;
        pp.collection = Collection::S;
        pp.epsilons = {0.1, 0.05};
        pp.ns = {4, 6};
        pp.candidate_target = 1000;
        auto est = estimate_pressure(f, prof, dp, make_zero_potential(), pp);
        CHECK(est.empty_collection);
        CHECK(std::isinf(est.value));
        CHECK(est.value < 0);
    }
    SUBCASE("good collection on the linear preset carries full growth") {
        BaseMap g(doubling_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto prof = build_expansion_profile(g, 0.7, 0.05);
        auto dp = make_decomposition_params(prof, f, 0.6);
        PressureParams pp;
        pp.collection = Collection::G;
        pp.epsilons = {0.1, 0.05};
        pp.ns = {4, 6, 8};
        pp.candidate_target = 40000;
        pp.seed = 7;
        auto est = estimate_pressure(f, prof, dp, make_zero_potential(), pp);
        CHECK(std::fabs(est.value - std::log(2.0)) <= 0.1);
    }
    SUBCASE("slow collection stays under its ceiling on the perturbed preset") {
        BaseMap g(pitchfork_cfg());
        SkewConfig sc;
        Solenoid f(g, sc);
        auto prof = build_expansion_profile(g, 0.9, 0.06);
        auto dp = make_decomposition_params(prof, f, 0.667);
        PressureParams pp;
        pp.collection = Collection::S;
        pp.epsilons = {0.1, 0.05};
        pp.ns = {4, 6, 8, 10};
        pp.candidate_target = 12000;
        pp.seed = 9;
        auto est = estimate_pressure(f, prof, dp, make_zero_potential(), pp);
        CHECK_FALSE(est.empty_collection);
        double ceiling = psi_bound(make_zero_potential(), prof, 0.667) + 0.05;
        CHECK(est.value <= ceiling);
        CHECK(est.value >= 0.30);
    }
}

TEST_CASE("pressure artifacts: csv and json render deterministically") {
    BaseMap g(doubling_cfg());
    SkewConfig sc;
    Solenoid f(g, sc);
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    auto dp = make_decomposition_params(prof, f, 0.6);
    PressureParams pp;
    pp.epsilons = {0.1, 0.05};
    pp.ns = {3, 5};
    pp.candidate_target = 3000;
    auto est = estimate_pressure(f, prof, dp, make_zero_potential(), pp);

    std::string p1 = "/tmp/tf_press_a.csv", p2 = "/tmp/tf_press_b.csv";
    est.write_csv(p1);
    est.write_csv(p2);
    std::string t1 = read_text_file(p1), t2 = read_text_file(p2);
    CHECK(t1 == t2);
    CHECK(t1.rfind("epsilon,n,log_partition_sum,slope", 0) == 0);
    long rows = std::count(t1.begin(), t1.end(), '\n');
    CHECK(rows == 1 + 2 * 2);

    std::string j1 = est.to_json(), j2 = est.to_json();
    CHECK(j1 == j2);
    CHECK(j1.find("\"collection\"") != std::string::npos);
    CHECK(j1.find("\"phi_kind\"") != std::string::npos);
    CHECK(j1.find("\"pressure\"") != std::string::npos);
    CHECK(j1.find("\"uncertainty\"") != std::string::npos);
    CHECK(j1.find("\"flags\"") != std::string::npos);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include "thermoformal/segment.hpp"
#include "thermoformal/specification.hpp"
#include "oracles.hpp"
#include <cstdio>

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
    c.delta = 1.05; c.pert_radius = 0.2; c.lambda_u = 0.9; c.rho = 0.06;
    return c;
}

static std::vector<uint8_t> word(std::initializer_list<int> bits) {
    std::vector<uint8_t> w;
    for (int b : bits) w.push_back((uint8_t)b);
    return w;
}

TEST_CASE("indicator averages") {
    CHECK(beta_of_bits(word({0, 0, 0, 0})) == 0.0);
    CHECK(beta_of_bits(word({1, 1, 1, 1})) == 1.0);
    CHECK(beta_of_bits(word({0, 0, 1, 1})) == 0.5);
    CHECK_THROWS_AS(beta_of_bits({}), NumericError);
}

TEST_CASE("good and slow classification on words") {
    DecompositionParams p;
    p.alpha = 0.6;
    OrbitSegment seg;
    seg.length = 4;
    seg.itinerary = word({0, 0, 0, 0});
    auto c = classify_segment(seg, p);
    CHECK(c.in_G);
    CHECK(!c.in_S);

    seg.itinerary = word({1, 1, 1, 1});
    c = classify_segment(seg, p);
    CHECK(!c.in_G);
    CHECK(c.in_S);

    // beta = 0.5 < 0.6 so not slow-heavy, but the final 1-bit is a suffix
    // with average 1, so not a good block either
    seg.itinerary = word({0, 0, 1, 1});
    c = classify_segment(seg, p);
    CHECK(!c.in_G);
    CHECK(!c.in_S);

    // empty segment is always a good block and never slow-heavy
    seg.length = 0;
    seg.itinerary.clear();
    c = classify_segment(seg, p);
    CHECK(c.in_G);
    CHECK(!c.in_S);
}

TEST_CASE("maximal good prefix split") {
    CHECK(bits_max_good_prefix(word({0, 0, 0, 0}), 0.6) == 4);
    CHECK(bits_max_good_prefix(word({1, 1, 1, 1}), 0.6) == 0);
    CHECK(bits_max_good_prefix(word({0, 0, 1, 1}), 0.6) == 2);

    // on a real segment, decompose slices both the bits and the orbit
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    auto params = make_decomposition_params(prof, f, 0.667);

    // the fixed point at 0 sits inside the slow region: all-ones itinerary
    std::vector<std::vector<int>> zeros(f.n_h(), std::vector<int>{0});
    auto p0 = f.point_from_chain(f.chain_with_branches({0.0}, zeros));
    auto seg1 = make_segment(f, prof, p0, 4);
    CHECK(seg1.itinerary == word({1, 1, 1, 1}));
    auto sp = decompose(seg1, params);
    CHECK(sp.s == 0);
    CHECK(sp.prefix.length == 0);
    CHECK(sp.suffix.length == 4);
    CHECK(bits_in_S(sp.suffix.itinerary, params.alpha));
    CHECK(f.metric(sp.suffix.start, p0) == 0.0);

    // a start far from the slow region gives a leading good block
    RngCursor rc(11, 31);
    auto ch = f.random_chain({0.35}, f.n_h(), rc);
    auto seg2 = make_segment(f, prof, f.point_from_chain(ch), 12);
    CHECK(seg2.itinerary[0] == 0);
    auto sp2 = decompose(seg2, params);
    CHECK(sp2.s == bits_max_good_prefix(seg2.itinerary, params.alpha));
    CHECK(f.metric(sp2.suffix.start, seg2.orbit[sp2.s]) == 0.0);
    CHECK((int)sp2.prefix.orbit.size() == sp2.s + 1);
}

TEST_CASE("segment cache coherence") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    RngCursor rc(7, 41);
    for (int rep = 0; rep < 20; ++rep) {
        auto ch = f.random_chain({rc.uniform()}, f.n_h(), rc);
        auto seg = make_segment(f, prof, f.point_from_chain(ch), 30);
        REQUIRE((int)seg.itinerary.size() == 30);
        REQUIRE((int)seg.orbit.size() == 31);
        for (int i = 0; i < 30; ++i) {
            CHECK((seg.itinerary[i] == 1) == prof.in_omega_rho(f.project(seg.orbit[i])));
            CHECK(f.metric(seg.orbit[i + 1], f.eval(seg.orbit[i])) == 0.0);
        }
        CHECK(beta_of_bits(seg.itinerary) == doctest::Approx(birkhoff_fraction(seg)));
    }
}

TEST_CASE("full word enumeration at length 12 agrees with the brute oracle") {
    for (double alpha : {0.5, 0.6, 0.75}) {
        for (int w = 0; w < (1 << 12); ++w) {
            std::vector<uint8_t> bits(12);
            for (int i = 0; i < 12; ++i) bits[i] = (w >> i) & 1;
            CHECK(bits_in_G(bits, alpha) == oracle::oin_G(bits, alpha));
            CHECK(bits_in_S(bits, alpha) == oracle::oin_S(bits, alpha));
            int s = bits_max_good_prefix(bits, alpha);
            CHECK(s == oracle::osplit(bits, alpha));
            // maximality and the slow-heavy remainder, as theorems
            if (s < 12) {
                std::vector<uint8_t> pre(bits.begin(), bits.begin() + s + 1);
                CHECK(!bits_in_G(pre, alpha));
                std::vector<uint8_t> suf(bits.begin() + s, bits.end());
                CHECK(bits_in_S(suf, alpha));
            }
            // concatenation closure at every cut
            for (int cut = 1; cut < 12; ++cut) {
                std::vector<uint8_t> a(bits.begin(), bits.begin() + cut);
                std::vector<uint8_t> b(bits.begin() + cut, bits.end());
                if (bits_in_G(a, alpha) && bits_in_G(b, alpha))
                    CHECK(bits_in_G(bits, alpha));
            }
        }
    }
}

TEST_CASE("contraction mixing rate") {
    CHECK(theta_alpha(2.0, 0.7, 0.0) == 0.7); // exact: pure fast-region rate
    CHECK(theta_alpha(1.25, 0.9, 0.3) == doctest::Approx(oracle::otheta(1.25, 0.9, 0.3)).epsilon(1e-15));
    CHECK(theta_alpha(1.25, 0.9, 0.3) == doctest::Approx(0.993214).epsilon(1e-5));
    CHECK_THROWS_AS(theta_alpha(2.0, 0.5, 0.5), NumericError); // admissibility bound is exactly 0.5
    CHECK_THROWS_WITH(theta_alpha(2.0, 0.5, 0.5), "theta >= 1: alpha too large");
    CHECK_THROWS_AS(theta_alpha(0.9, 0.7, 0.3), ConfigError);
    CHECK_THROWS_AS(theta_alpha(2.0, 1.1, 0.3), ConfigError);
    CHECK_THROWS_AS(theta_alpha(2.0, 0.7, 1.0), ConfigError);

    // strictly increasing in alpha, and < 1 exactly below the bound
    double L = 1.0 / 0.95 * (1.0 + 1e-6), lu = 0.9;
    double bound = oracle::oalpha_bound(L, lu);
    double prev = 0.0;
    for (int i = 0; i < 60; ++i) {
        double a = 0.999 * bound * i / 59.0;
        double th = theta_alpha(L, lu, a);
        CHECK(th < 1.0);
        if (i > 0) CHECK(th > prev);
        prev = th;
    }
    CHECK_THROWS_AS(theta_alpha(L, lu, bound + 1e-6), NumericError);
}

TEST_CASE("parameter assembly from profiles") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    auto p = make_decomposition_params(prof, f, 0.667);
    CHECK(p.alpha == 0.667);
    CHECK(p.rho == 0.06);
    CHECK(p.lambda_u == 0.9);
    CHECK(p.lambda_s == 0.25);
    CHECK(p.L_global == prof.L_global);
    CHECK(p.theta == doctest::Approx(oracle::otheta(prof.L_global, 0.9, 0.667)).epsilon(1e-15));
    CHECK(p.theta < 1.0);
    CHECK_THROWS_AS(make_decomposition_params(prof, f, 0.68), NumericError);

    // empty slow region: the fast rate fully controls the mix
    BaseMap g2(doubling_cfg());
    auto prof2 = build_expansion_profile(g2, 0.7, 0.05);
    auto p2 = make_decomposition_params(prof2, Solenoid(g2, SkewConfig{}), 0.6);
    CHECK(p2.L_global == 1.0);
    CHECK(p2.theta == doctest::Approx(std::pow(0.7, 0.4)).epsilon(1e-15));
}

TEST_CASE("good-block concatenation holds on sampled dynamics") {
    BaseMap g(doubling_cfg());
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    Solenoid f(g, SkewConfig{});
    auto params = make_decomposition_params(prof, f, 0.6);
    auto rep = check_concatenation(f, prof, params, 10000, 13);
    REQUIRE(rep.find("concatenation"));
    CHECK(rep.find("concatenation")->value == 0.0);
    CHECK(rep.find("concatenation")->pass);

    BaseMap g2(pitchfork_cfg());
    auto prof2 = build_expansion_profile(g2, 0.9, 0.06);
    Solenoid f2(g2, SkewConfig{});
    auto params2 = make_decomposition_params(prof2, f2, 0.667);
    auto rep2 = check_concatenation(f2, prof2, params2, 2000, 13);
    CHECK(rep2.find("concatenation")->pass);
}

TEST_CASE("companion scan: linear solenoid is expansive at these scales") {
    BaseMap g(doubling_cfg());
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    Solenoid f(g, SkewConfig{});
    auto params = make_decomposition_params(prof, f, 0.6);
    for (double eps : {0.05, 1e-3}) {
        auto rep = nonexpansive_scan(f, prof, params, eps, 200, 30, 17);
        auto* row = rep.find("ne_survival_fraction");
        REQUIRE(row);
        INFO("eps=", eps, " note=", row->note);
        CHECK(row->value == 0.0);
    }
    CHECK_THROWS_AS(nonexpansive_scan(f, prof, params, 0.0, 10, 10, 1), ConfigError);
}

TEST_CASE("companion scan: sink absorption keeps companions alive") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    auto params = make_decomposition_params(prof, f, 0.667);
    auto rep = nonexpansive_scan(f, prof, params, 0.05, 300, 40, 17);
    auto* row = rep.find("ne_survival_fraction");
    REQUIRE(row);
    MESSAGE("pitchfork survival: ", row->value, " (", row->note, ")");
    // orbits absorbed by the sink keep their companions forever; the scan
    // must report them rather than claim expansivity
    CHECK(row->value > 0.03);
    CHECK(row->value < 0.4);
}

TEST_CASE("segment csv export") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    auto params = make_decomposition_params(prof, f, 0.667);
    RngCursor rc(3, 91);
    std::vector<OrbitSegment> segs;
    for (int i = 0; i < 10; ++i) {
        auto ch = f.random_chain({rc.uniform()}, 40, rc);
        segs.push_back(make_segment(f, prof, f.point_from_chain(ch), 8 + i));
    }
    std::string path = "/tmp/tf_segs_test.csv";
    write_segments_csv(path, segs, params);
    auto text = read_text_file(path);
    CHECK(text.substr(0, text.find('\n')) == "base_0,n,beta,in_G,in_S,s");
    CHECK(std::count(text.begin(), text.end(), '\n') == 11);
    write_segments_csv(path, segs, params);
    CHECK(read_text_file(path) == text);
    std::remove(path.c_str());
}

// ---- specification gluing ----

static OrbitSegment chain_segment(const Solenoid& f, const ExpansionProfile& prof,
                                  double x0, int n, uint64_t seed) {
    RngCursor rc(seed, STREAM_CHAINS);
    auto ch = f.random_chain({x0}, f.n_h(), rc);
    return make_segment(f, prof, f.point_from_chain(ch), n);
}

// independent audit of a glued orbit on the degree-2 linear solenoid: own
// base arithmetic, own fiber recursion, own max metric
static double oracle_shadow_linear(const Solenoid& f, const GlueResult& r,
                                   const std::vector<OrbitSegment>& segs) {
    double lam = f.lambda_s(), rot = f.rot();
    double base = r.z.base[0];
    std::complex<double> fib = r.z.fiber[0];
    long step = 0;
    double worst = 0.0;
    for (size_t j = 0; j < segs.size(); ++j) {
        while (step < r.offsets[j]) {
            fib = lam * fib + rot * std::polar(1.0, 2.0 * M_PI * base);
            base = oracle::owrap(2.0 * base);
            ++step;
        }
        double b2 = base;
        std::complex<double> f2 = fib;
        for (int m = 0; m <= segs[j].length; ++m) {
            const auto& tgt = segs[j].orbit[(size_t)m];
            worst = std::max(worst, oracle::ocircdist(b2, tgt.base[0]));
            worst = std::max(worst, std::abs(f2 - tgt.fiber[0]));
            f2 = lam * f2 + rot * std::polar(1.0, 2.0 * M_PI * b2);
            b2 = oracle::owrap(2.0 * b2);
        }
    }
    return worst;
}

TEST_CASE("glue parameter derivation") {
    BaseMap g(doubling_cfg());
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    Solenoid f(g, SkewConfig{});

    auto gp = make_glue_params(f, prof, 0.05);
    CHECK(gp.delta0 == 0.05); // min of rho and half branch width 0.25
    double fiber_cap = (1.0 - 0.25) / (4.0 * M_PI * 0.5);
    CHECK(gp.delta_base == doctest::Approx(0.05 * fiber_cap).epsilon(1e-15));
    // unknown fiber decays below eps/8 after tau_s steps
    CHECK(gp.tau_s == 4);
    // a length-delta_base arc needs ceil(log2(1/delta_base)) doublings to wrap
    int tau_oracle = (int)std::ceil(std::log2(1.0 / gp.delta_base));
    CHECK(gp.tau_hat == tau_oracle);
    CHECK(gp.tau_hat == 8);
    CHECK(gp.tau_bound == gp.tau_hat + gp.tau_s);

    CHECK_THROWS_AS(make_glue_params(f, prof, 0.06), ConfigError); // above rho
    CHECK_THROWS_AS(make_glue_params(f, prof, 0.0), ConfigError);

    BaseMap g2(pitchfork_cfg());
    auto prof2 = build_expansion_profile(g2, 0.9, 0.06);
    Solenoid f2(g2, SkewConfig{});
    auto gp2 = make_glue_params(f2, prof2, 0.05);
    CHECK(gp2.delta0 == 0.06);
    CHECK(gp2.tau_s == 4);
    // sink-basin centers are flagged, straddling ones cover slowly but finitely
    CHECK(gp2.tau_hat >= 8);
    CHECK(gp2.tau_hat <= 400);
    MESSAGE("pitchfork covering time at radius ", gp2.delta_base / 2, ": ",
            gp2.tau_hat);
}

TEST_CASE("single segment glue is the identity") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    auto dp = make_decomposition_params(prof, f, 0.667);
    // the forward orbit of 0.41 stays out of the fattened slow region for 7 steps
    auto seg = chain_segment(f, prof, 0.41, 7, 21);
    REQUIRE(classify_segment(seg, dp).in_G);

    auto r = specification_glue(f, prof, dp, {seg}, 0.05);
    CHECK(r.z.base[0] == seg.start.base[0]);
    CHECK(r.z.fiber[0] == seg.start.fiber[0]);
    CHECK(r.transitions.empty());
    CHECK(r.offsets == std::vector<long>{0});
    CHECK(r.shadow_errors == std::vector<double>{0.0});
}

TEST_CASE("linear gluing with independent audit") {
    BaseMap g(doubling_cfg());
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    Solenoid f(g, SkewConfig{});
    auto dp = make_decomposition_params(prof, f, 0.6);
    const double eps = 0.05;
    auto gp = make_glue_params(f, prof, eps);

    // the slow region is empty, so every sampled segment is a good block
    auto s0 = chain_segment(f, prof, 0.137, 8, 31);
    auto s1 = chain_segment(f, prof, 0.642, 6, 32);
    auto s2 = chain_segment(f, prof, 0.901, 11, 33);

    auto r = specification_glue(f, prof, dp, {s0, s1}, eps, &gp);
    REQUIRE(r.transitions.size() == 1);
    CHECK(r.transitions[0] <= gp.tau_bound);
    CHECK(r.transitions[0] >= gp.tau_s);
    CHECK(r.offsets == std::vector<long>({0, 8 + r.transitions[0]}));
    REQUIRE(r.shadow_errors.size() == 2);
    for (double e : r.shadow_errors) CHECK(e <= eps);
    // the last window is retraced from its exact endpoint, so its error is
    // pure floating-point amplification of the glue point's rounding, far
    // below the geometric delta_base scale of the first window
    CHECK(r.shadow_errors[1] < 1e-4);
    CHECK(std::abs(r.z.fiber[0]) <= f.slice_radius() + 1e-9);

    double audited = oracle_shadow_linear(f, r, {s0, s1});
    CHECK(audited <= eps);
    double claimed = std::max(r.shadow_errors[0], r.shadow_errors[1]);
    CHECK(audited == doctest::Approx(claimed).epsilon(1e-9));

    // three segments: offsets accumulate segment lengths plus transitions
    auto r3 = specification_glue(f, prof, dp, {s0, s1, s2}, eps, &gp);
    REQUIRE(r3.transitions.size() == 2);
    CHECK(r3.offsets[1] == 8 + r3.transitions[0]);
    CHECK(r3.offsets[2] == r3.offsets[1] + 6 + r3.transitions[1]);
    for (int t : r3.transitions) {
        CHECK(t <= gp.tau_bound);
    }
    for (double e : r3.shadow_errors) CHECK(e <= eps);
    CHECK(oracle_shadow_linear(f, r3, {s0, s1, s2}) <= eps);

    // byte-identical rerun
    auto r3b = specification_glue(f, prof, dp, {s0, s1, s2}, eps, &gp);
    CHECK(r3.to_json().dump() == r3b.to_json().dump());
}

TEST_CASE("pitchfork pair gluing at the working scale") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    auto dp = make_decomposition_params(prof, f, 0.667);
    const double eps = 0.05;
    auto gp = make_glue_params(f, prof, eps);

    auto sample = sample_glue_pairs(f, prof, dp, 40, 3, 15, eps, 4242, &gp);
    REQUIRE((int)sample.pairs.size() == 40);
    MESSAGE("pair sampling rejections: ", sample.rejected_not_good,
            " not good, ", sample.rejected_junction, " trapped junctions, ",
            sample.rejected_horizon, " beyond the fp horizon");

    int failures = 0;
    double worst = 0.0;
    for (auto& pr : sample.pairs) {
        auto r = specification_glue(f, prof, dp, {pr.first, pr.second}, eps, &gp);
        for (int t : r.transitions) {
            CHECK(t <= gp.tau_bound);
        }
        for (double e : r.shadow_errors) {
            worst = std::max(worst, e);
            if (e > eps) ++failures;
        }
    }
    CHECK(failures == 0);
    MESSAGE("worst pitchfork shadow error over 40 pairs: ", worst);

    auto r0 = specification_glue(f, prof, dp,
                                 {sample.pairs[0].first, sample.pairs[0].second},
                                 eps, &gp);
    auto r0b = specification_glue(f, prof, dp,
                                  {sample.pairs[0].first, sample.pairs[0].second},
                                  eps, &gp);
    CHECK(r0.to_json().dump() == r0b.to_json().dump());
}

TEST_CASE("gluing rejects what it must") {
    BaseMap g(pitchfork_cfg());
    auto prof = build_expansion_profile(g, 0.9, 0.06);
    Solenoid f(g, SkewConfig{});
    auto dp = make_decomposition_params(prof, f, 0.667);

    auto good = chain_segment(f, prof, 0.41, 7, 51);
    REQUIRE(classify_segment(good, dp).in_G);

    // scale above delta_0
    CHECK_THROWS_AS(specification_glue(f, prof, dp, {good, good}, 0.2), ConfigError);
    CHECK_THROWS_AS(specification_glue(f, prof, dp, {}, 0.05), ConfigError);

    // parameters prepared for a different scale
    auto gp = make_glue_params(f, prof, 0.05);
    CHECK_THROWS_AS(specification_glue(f, prof, dp, {good, good}, 0.025, &gp),
                    ConfigError);

    // slow-heavy segments do not glue
    std::vector<std::vector<int>> zeros(f.n_h(), std::vector<int>{0});
    auto p0 = f.point_from_chain(f.chain_with_branches({0.0}, zeros));
    auto slow = make_segment(f, prof, p0, 4);
    REQUIRE(classify_segment(slow, dp).in_S);
    CHECK_THROWS_AS(specification_glue(f, prof, dp, {slow, good}, 0.05), ConfigError);

    // a good block whose endpoint lies deep in the sink basin: its forward
    // ball contracts toward the sink, so no transition time exists
    double cur = 0.02;
    for (int i = 0; i < 6; ++i) {
        double best = 0.0, bd = -1.0;
        for (int b = 0; b < 2; ++b) {
            double c = g.inv1(0, b, cur);
            double d = oracle::ocircdist(c, 0.0);
            if (d > bd) { bd = d; best = c; }
        }
        cur = best;
    }
    RngCursor rc(5, STREAM_CHAINS);
    auto st = f.point_from_chain(f.random_chain({cur}, f.n_h(), rc));
    auto trapped = make_segment(f, prof, st, 6);
    REQUIRE(classify_segment(trapped, dp).in_G);
    REQUIRE(oracle::ocircdist(trapped.orbit.back().base[0], 0.02) < 1e-9);
    bool threw = false;
    try {
        specification_glue(f, prof, dp, {trapped, good}, 0.05, &gp);
    } catch (const NumericError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("basin") != std::string::npos);
    }
    CHECK(threw);

    // the canonical pair sampler refuses such junctions instead of failing
    auto sample = sample_glue_pairs(f, prof, dp, 10, 3, 12, 0.05, 7, &gp);
    CHECK((int)sample.pairs.size() == 10);
    for (auto& pr : sample.pairs) {
        auto r = specification_glue(f, prof, dp, {pr.first, pr.second}, 0.05, &gp);
        CHECK(r.shadow_errors[1] <= 0.05);
    }
}

TEST_CASE("two-scale contraction bound along good blocks") {
    BaseMap g(doubling_cfg());
    auto prof = build_expansion_profile(g, 0.7, 0.05);
    Solenoid f(g, SkewConfig{});
    auto dp = make_decomposition_params(prof, f, 0.6);

    double C = measure_holonomy_C(f, 3000, 999);
    REQUIRE(C >= 2.0);
    REQUIRE(C < 5.0); // eta = 0.01 must satisfy eta < rho / C
    auto rep = contraction_bound_check(f, prof, dp, C, 0.01, 300, 20, 31337);
    auto* ratio = rep.find("two_scale_ratio");
    auto* bad = rep.find("two_scale_violations");
    REQUIRE(ratio);
    REQUIRE(bad);
    MESSAGE("linear two-scale ratio ", ratio->value, " with C=", C,
            " (", ratio->note, ")");
    CHECK(ratio->value > 0.0);
    CHECK(ratio->value <= 1.0);
    CHECK(bad->value == 0.0);
    CHECK(rep.find("two_scale_samples") == nullptr); // full quota was built

    BaseMap g2(pitchfork_cfg());
    auto prof2 = build_expansion_profile(g2, 0.9, 0.06);
    Solenoid f2(g2, SkewConfig{});
    auto dp2 = make_decomposition_params(prof2, f2, 0.667);
    double C2 = measure_holonomy_C(f2, 3000, 999);
    REQUIRE(C2 < 6.0);
    auto rep2 = contraction_bound_check(f2, prof2, dp2, C2, 0.01, 300, 20, 31337);
    MESSAGE("pitchfork two-scale ratio ", rep2.find("two_scale_ratio")->value,
            " with C=", C2);
    CHECK(rep2.find("two_scale_ratio")->pass);
    CHECK(rep2.find("two_scale_violations")->value == 0.0);

    CHECK_THROWS_AS(contraction_bound_check(f, prof, dp, 0.5, 0.01, 10, 10, 1),
                    ConfigError);
    CHECK_THROWS_AS(contraction_bound_check(f, prof, dp, C, 0.05, 10, 10, 1),
                    ConfigError);
}

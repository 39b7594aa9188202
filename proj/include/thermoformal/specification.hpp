#pragma once
#include "thermoformal/segment.hpp"

namespace tf {

// Scale bookkeeping for the gluing construction. delta0 is the largest scale
// at which good-block pullbacks are guaranteed to contract (slow-region
// fattening and branch-domain half-width); delta_base shrinks it further so
// the fiber, which tracks base offsets with gain 2*pi*rot/(1-lambda_s), stays
// within eps; tau_s is the burn-in making an unknown fiber eps/4-accurate;
// tau_hat is the empirical covering time of delta_base/2-balls.
struct GlueParams {
    double eps = 0.0;
    double delta0 = 0.0;
    double delta_base = 0.0;
    int tau_s = 0;
    int tau_hat = 0;
    int tau_bound = 0;   // tau_hat + tau_s
    int tau_cap = 400;
};

struct GlueResult {
    SolenoidPoint z;
    std::vector<int> transitions;    // tau_j between segment j-1 and j
    int tau_bound = 0;
    std::vector<double> shadow_errors; // per segment: max_m d(f^{r_j+m} z, f^m x_j)
    std::vector<long> offsets;       // r_0 = 0, r_j = r_{j-1} + n_{j-1} + tau_{j-1->j}
    double eps = 0.0;
    json to_json() const;
};

GlueParams make_glue_params(const Solenoid& f, const ExpansionProfile& prof,
                            double eps, int tau_cap = 400);

// glues good orbit segments into one eps-shadowing orbit, paper-style:
// backward point assembly through forward-covering transitions, with the
// final tau_s transition steps following the next segment's own backward
// chain so the fiber aligns. Every claimed shadow distance is re-verified by
// direct forward iteration before returning.
GlueResult specification_glue(const Solenoid& f, const ExpansionProfile& prof,
                              const DecompositionParams& dparams,
                              const std::vector<OrbitSegment>& segments,
                              double eps, const GlueParams* pre = nullptr);

// canonical source of gluable segment pairs: random backward-chain starts,
// both segments required to be good blocks, the junction required to reach
// full covering within tau_hat (a sink-basin endpoint never covers), and the
// glue itself validated end to end. The last filter exists because a double
// carries at least half-ulp error at the glue point and forward expansion
// multiplies it by the derivative product along the orbit, so windows whose
// total expansion exceeds roughly eps/1e-15 cannot be shadowed by any
// representable point; such pairs are rejected and honestly counted.
struct GluePairSample {
    std::vector<std::pair<OrbitSegment, OrbitSegment>> pairs;
    long rejected_not_good = 0;
    long rejected_junction = 0;
    long rejected_horizon = 0;
};
GluePairSample sample_glue_pairs(const Solenoid& f, const ExpansionProfile& prof,
                                 const DecompositionParams& dparams, int count,
                                 int min_len, int max_len, double eps,
                                 uint64_t seed, const GlueParams* pre = nullptr);

// two-scale contraction estimate along good segments: samples (x,n) good,
// builds y inside the n-step eta-Bowen ball (verified, bisected down), and
// checks d(f^k x, f^k y) <= C eta (theta^{n-k} + lambda_s^k) for 0 <= k < n
Report contraction_bound_check(const Solenoid& f, const ExpansionProfile& prof,
                               const DecompositionParams& dparams, double C,
                               double eta, int num_samples, int max_n,
                               uint64_t seed);

} // namespace tf

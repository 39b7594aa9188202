#pragma once
#include "thermoformal/solenoid.hpp"
#include "thermoformal/report.hpp"
#include <cstdint>
#include <string>
#include <vector>

namespace tf {

// Orbit segment (x, n): the point, its forward orbit to depth n, and the
// slow-region indicator bit of each of the n orbit points before f^n.
struct OrbitSegment {
    SolenoidPoint start;
    int length = 0;
    std::vector<uint8_t> itinerary;       // bit i = indicator at f^i(start)
    std::vector<SolenoidPoint> orbit;     // f^0 .. f^length (length+1 points)
};

struct DecompositionParams {
    double alpha = 0.0;
    double rho = 0.0;
    double theta = 0.0;   // contraction rate of good-prefix pullbacks
    double L_global = 1.0;
    double lambda_u = 0.0;
    double lambda_s = 0.0;
};

struct SegmentClass {
    bool in_S = false;
    bool in_G = false;
};

struct SplitResult {
    int s = 0;
    OrbitSegment prefix;  // (x, s), a good block
    OrbitSegment suffix;  // (f^s x, n-s), slow-heavy or empty
};

// ---- pure bit calculus (no dynamics; shared by the segment ops and the
// exhaustive enumeration tests) ----

// fraction of 1-bits; n >= 1
double beta_of_bits(const std::vector<uint8_t>& bits);
// every suffix of length j in {1..n} has 1-bit average < alpha (true for n=0)
bool bits_in_G(const std::vector<uint8_t>& bits, double alpha);
// 1-bit average >= alpha; n >= 1
bool bits_in_S(const std::vector<uint8_t>& bits, double alpha);
// largest s in {0..n} with the length-s prefix in G
int bits_max_good_prefix(const std::vector<uint8_t>& bits, double alpha);

// ---- segment operations ----

OrbitSegment make_segment(const Solenoid& f, const ExpansionProfile& prof,
                          const SolenoidPoint& start, int n);

double birkhoff_fraction(const OrbitSegment& seg);
SegmentClass classify_segment(const OrbitSegment& seg, const DecompositionParams& params);
SplitResult decompose(const OrbitSegment& seg, const DecompositionParams& params);

// theta_alpha = L^alpha * lambda_u^{1-alpha}; throws when the mix is not a
// contraction (alpha at or above the admissibility bound). L = 1 encodes an
// empty slow region.
double theta_alpha(double L, double lambda_u, double alpha);

DecompositionParams make_decomposition_params(const ExpansionProfile& prof,
                                              const Solenoid& f, double alpha);

// samples random segments and asserts the good-block concatenation law on
// every interior cut
Report check_concatenation(const Solenoid& f, const ExpansionProfile& prof,
                           const DecompositionParams& params, int num_samples,
                           uint64_t seed);

// two-sided companion scan: fraction of sampled points (conditioned on some
// prefix average <= alpha within the horizon) that keep an eps-companion for
// all |k| <= horizon
Report nonexpansive_scan(const Solenoid& f, const ExpansionProfile& prof,
                         const DecompositionParams& params, double eps,
                         int num_samples, int horizon, uint64_t seed);

void write_segments_csv(const std::string& path,
                        const std::vector<OrbitSegment>& segs,
                        const DecompositionParams& params);

} // namespace tf

#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>
#include "thermoformal/potential.hpp"
#include "thermoformal/report.hpp"
#include "thermoformal/segment.hpp"
#include "thermoformal/solenoid.hpp"

namespace tf {

// n-step orbit distance: max of the ambient metric over the first n points
// (k = 0 .. n-1)
double bowen_distance(const Solenoid& f, const SolenoidPoint& x,
                      const SolenoidPoint& y, int n);

// sum of phi over the first n orbit points
double birkhoff_sum(const Solenoid& f, const Potential& phi,
                    const SolenoidPoint& x, int n);

enum class Collection { ALL, G, S };

std::string collection_name(Collection c);

// Lazy indexed candidate stream. at(i) must be a pure function of i so that
// runs are reproducible and candidates never need to be stored up front.
struct CandidateSource {
    long count = 0;
    std::function<SolenoidPoint(long)> at;
};

// Candidates for a separated-set search restricted to one orbit-segment
// collection. ALL uses an equispaced base grid with seeded backward chains
// (lazy); G and S are materialized by rejection / steered backward sampling
// and may return fewer than `target` points if acceptance is poor. An empty
// slow region makes S empty.
CandidateSource collection_source(const Solenoid& f, const ExpansionProfile& prof,
                                  const DecompositionParams& dp, Collection c,
                                  int n, long target, uint64_t seed,
                                  int threads = 1);

struct SeparatedSet {
    std::vector<long> kept;  // indices into the candidate source, keep order
    long candidates = 0;     // candidates scanned
    long pair_evals = 0;     // full orbit-distance evaluations spent
    bool saturated = false;  // budget ran out: kept is only a lower bound
};

// Greedy first-fit scan: keep candidate i when its n-step distance to every
// kept point is >= eps. Exact (matches the brute-force greedy in source
// order); cheap sufficient separation criteria and an orbit cache only speed
// it up. `pair_budget` caps full distance evaluations; on exhaustion the scan
// stops and the result is flagged saturated.
SeparatedSet build_separated_set(const Solenoid& f, const CandidateSource& src,
                                 int n, double eps, long pair_budget);

// log sum over kept points of exp(S_n phi); -inf for an empty set. `weights`
// may pass precomputed Birkhoff sums (indexed like src) to avoid a recompute.
double partition_sum(const Solenoid& f, const Potential& phi,
                     const CandidateSource& src, const SeparatedSet& set, int n,
                     const std::vector<double>* weights = nullptr);

struct PressureParams {
    Collection collection = Collection::ALL;
    std::vector<double> epsilons;  // strictly decreasing
    std::vector<int> ns;           // strictly increasing, at least two entries
    long candidate_target = 200000;
    long pair_budget = 40000000;  // per (n, eps) cell
    uint64_t seed = 1;
    int threads = 1;
};

struct PressureEstimate {
    std::string collection = "all";
    std::string phi_kind = "zero";
    double value = 0.0;        // growth rate at the smallest scale
    double uncertainty = 0.0;  // spread between the two smallest scales
    std::vector<double> epsilons;
    std::vector<int> ns;
    // row-major over (epsilon index, n index)
    std::vector<double> log_sums;
    std::vector<long> counts;
    std::vector<char> saturated;
    std::vector<double> value_at_scale;  // per-epsilon growth slope
    bool unreliable = false;        // a largest-n cell hit the pair budget
    bool empty_collection = false;  // no candidate produced a finite sum
    bool candidate_limited = false; // a cell kept nearly every candidate

    double cell_log_sum(size_t e, size_t i) const { return log_sums[e * ns.size() + i]; }
    long cell_count(size_t e, size_t i) const { return counts[e * ns.size() + i]; }
    std::string to_json() const;
    void write_csv(const std::string& path) const;
};

// Candidates are drawn once per n (seed folded with n) and shared across all
// scales; for each epsilon the per-n log partition sums are fit by least
// squares over the upper half of the n schedule, and the smallest scale's
// slope is reported with the gap to the next scale as its uncertainty.
// Non-zero potentials scan candidates in order of decreasing Birkhoff sum so
// the greedy prefers heavy orbits.
PressureEstimate estimate_pressure(const Solenoid& f, const ExpansionProfile& prof,
                                   const DecompositionParams& dp,
                                   const Potential& phi, const PressureParams& pp);

// itinerary entropy defect: H(alpha) + (1-alpha) log((deg-q)/q), with the
// second term dropped when slow branches are in the majority. alpha in (0,1],
// 1 <= q < deg.
double epsilon_alpha(double alpha, long deg, long q);

// upper bound for the pressure carried by slow-dominated segments:
// log q + epsilon_alpha + m log L + sup of phi over the fattened slow part.
// -inf when the slow region is empty.
double psi_bound(const Potential& phi, const ExpansionProfile& prof, double alpha);

struct VariationGap {
    double variation = 0.0;  // sup - inf of phi over the attractor
    double rhs = 0.0;        // log deg - log q - epsilon_alpha - m log L
    bool pass = false;       // variation < rhs forces the bound gap
};

// sufficient condition for psi_bound(phi) < P(phi): small oscillation
VariationGap variation_gap(const Potential& phi, const ExpansionProfile& prof,
                           double alpha);

struct PressureValue {
    double value = 0.0;
    double uncertainty = 0.0;
};

// Compares estimated pressures against the slow-segment ceiling. Rows:
// uniq_psi_vs_pressure   margin = P(phi) - Psi(phi),   pass when > uncertainty
// uniq_s_pressure_vs_psi margin = Psi(phi) - P(S,phi), pass when > uncertainty
// uniq_certificate       conjunction
// A margin inside the uncertainty band is reported as inconclusive (fail with
// note). An empty slow region passes vacuously.
Report uniqueness_certificate(const Potential& phi, const ExpansionProfile& prof,
                              double alpha, PressureValue p_all, PressureValue p_s);

// Empirical check of the bounded-variation property on Bowen balls: samples
// pairs with d_n <= eta inside the good collection and compares the largest
// observed |S_n phi(x) - S_n phi(y)| per n against the analytic ceiling
// 2^(beta+1) C K eta^beta / (1 - theta^beta), theta = max(theta_alpha,
// lambda_s). Adds a no-growth trend row across the n schedule.
Report bowen_variation(const Solenoid& f, const ExpansionProfile& prof,
                       const DecompositionParams& dp, const Potential& phi,
                       double holonomy_C, double eta, const std::vector<int>& ns,
                       long samples_per_n, uint64_t seed);

struct CylinderCount {
    int n = 0;
    double alpha = 0.0;
    long slow_symbols = 0;  // branch tuples whose domain meets the slow region
    long count = 0;         // words with slow fraction >= alpha
    double log_count = 0.0;
    double bound = 0.0;     // exp(n (log q + epsilon_alpha))
    bool pass = false;
    std::string note;
};

// Exhaustive enumeration of branch words of length n (deg^n <= 2^24, n <= 20)
// counting those whose slow-symbol fraction is at least alpha, against the
// combinatorial ceiling. alpha = 0 or an empty slow region degenerate to a
// count-only report.
CylinderCount cylinder_count(const BaseMap& g, const ExpansionProfile& prof,
                             int n, double alpha);

} // namespace tf

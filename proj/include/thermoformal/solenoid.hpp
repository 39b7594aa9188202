#pragma once
#include <complex>
#include <vector>
#include "thermoformal/base_map.hpp"
#include "thermoformal/rng.hpp"
#include "thermoformal/report.hpp"

namespace tf {

using cplx = std::complex<double>;

struct SolenoidPoint {
    Pt base;                 // m circle coordinates
    std::vector<cplx> fiber; // m disk coordinates, |fiber_i| <= 1
};

struct SkewConfig {
    double lambda_s = 0.0;          // <= 0 selects the default 2^{-deg}
    double rot = 0.5;               // coefficient of e^{2 pi i t}
    double fiber_override = 0.0;    // > 0: replace lambda_s (shrinks rot to fit the disk)
    int n_h = 60;                   // backward replay depth for holonomies
};

// backward base orbit with the branch choices that produced it:
// points[0] = x and g(points[j+1]) = points[j] via branch tuple branches[j]
struct BackChain {
    std::vector<Pt> points;
    std::vector<std::vector<int>> branches;
    int depth() const { return (int)branches.size(); }
};

// f(t, z) = (g(t), lambda_s z_i + rot e^{2 pi i t_i}); the attractor is the
// nested intersection of forward images, with fiber coordinate the geometric
// series over the backward base orbit.
class Solenoid {
public:
    Solenoid(const BaseMap& g, const SkewConfig& sc);

    const BaseMap& base_map() const { return g_; }
    double lambda_s() const { return lambda_s_; }
    double rot() const { return rot_; }
    int n_h() const { return n_h_; }
    int dim() const { return g_.dim(); }
    double holonomy_C() const { return c_holonomy_; }
    void set_holonomy_C(double c) { c_holonomy_ = c; }
    // radius of the disk slice actually occupied by the attractor
    double slice_radius() const { return rot_ / (1.0 - lambda_s_); }

    SolenoidPoint eval(const SolenoidPoint& p) const;
    Pt project(const SolenoidPoint& p) const { return p.base; }
    double metric(const SolenoidPoint& a, const SolenoidPoint& b) const;

    BackChain random_chain(const Pt& x0, int depth, RngCursor& rc) const;
    BackChain chain_with_branches(const Pt& x0,
                                  const std::vector<std::vector<int>>& branches) const;
    cplx replay_fiber(int coord, const BackChain& ch) const;
    SolenoidPoint point_from_chain(const BackChain& ch) const;

    // recover the branch tuples of p's backward itinerary from its fiber
    // value; throws NumericError when p is too far from the attractor
    std::vector<std::vector<int>> reconstruct_branches(const SolenoidPoint& p) const;

    // transports p in the fiber over xhat to the fiber over yhat along the
    // shared backward itinerary; error <= lambda_s^{n_h}
    SolenoidPoint holonomy(const Pt& xhat, const Pt& yhat, const SolenoidPoint& p) const;

private:
    const BaseMap& g_;
    double lambda_s_, rot_;
    int n_h_;
    double c_holonomy_ = 2.0;
};

struct AttractorSample {
    std::vector<SolenoidPoint> points;
    int burn_in = 0;
    uint64_t seed = 0;
};

// uniform random starts in M pushed forward burn_in times
AttractorSample sample_attractor(const Solenoid& f, int burn_in, long count,
                                 uint64_t seed, int threads);

// points synthesized directly from random backward chains (covers the whole
// attractor even when forward orbits collapse onto a sink); optionally
// returns the chains for callers that need the itineraries
std::vector<SolenoidPoint> sample_chains(const Solenoid& f, long count, int depth,
                                         uint64_t seed, uint64_t stream, int threads,
                                         std::vector<BackChain>* chains = nullptr);

void write_attractor_csv(const std::string& path, const AttractorSample& s);

// measured sandwich constant of the product metric against base distance
// plus fiber distance after holonomy transport, over random attractor pairs
double measure_holonomy_C(const Solenoid& f, long pairs, uint64_t seed);

Report verify_skew_hypotheses(const Solenoid& f, const ExpansionProfile& prof,
                              uint64_t seed);

} // namespace tf

#pragma once
#include <vector>
#include <string>
#include <stdexcept>
#include "thermoformal/torus.hpp"
#include "thermoformal/report.hpp"

namespace tf {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BaseMapConfig {
    int m = 1;
    std::string kind = "linear"; // "linear" or "pitchfork"
    std::vector<int> factors;    // k_i >= 2, one per coordinate
    double delta = 0.0;          // pitchfork perturbation strength
    double pert_radius = 0.2;    // support radius of the bump around 0
    double lambda_u = 0.7;       // slow-expansion threshold
    double rho = 0.05;           // fattening radius for the slow region
};

// Product of degree-k_i circle maps. In the pitchfork family only the weakest
// coordinate (smallest k_i, first on ties) is perturbed:
//   g(x) = k x - (delta/2pi) * bump(x) * sin(2 pi x)   (mod 1)
// where bump is a C^2 plateau equal to 1 within pert_radius/2 of 0 and 0
// beyond pert_radius. For delta > 1 the fixed point at 0 becomes attracting.
class BaseMap {
public:
    explicit BaseMap(const BaseMapConfig& cfg);

    int dim() const { return m_; }
    long degree() const { return deg_; }
    int factor(int coord) const { return k_[coord]; }
    int pert_coord() const { return pert_coord_; }
    double delta() const { return delta_; }
    bool repeated_factors() const { return repeated_factors_; }
    const BaseMapConfig& config() const { return cfg_; }

    // lift of coordinate map: strictly increasing, G(x+1) = G(x) + k
    double lift(int coord, double x) const;
    double map1(int coord, double x) const { return wrap01(lift(coord, x)); }
    double deriv1(int coord, double x) const;

    Pt eval(const Pt& x) const;

    // branch b of coordinate `coord` inverts map1 on the centered domain
    //   D_b = [-1/(2k) + b/k, -1/(2k) + (b+1)/k)
    // chosen so the slow region around 0 stays interior to D_0.
    double domain_lo(int coord, int b) const { return -0.5 / k_[coord] + (double)b / k_[coord]; }
    int branch_of(int coord, double x) const;
    double inv1(int coord, int b, double y) const;

    // all deg preimages of y, mixed-radix branch order (coordinate 0 least
    // significant digit)
    std::vector<Pt> inverse_branches(const Pt& y) const;
    Pt inv_branch(const Pt& y, const std::vector<int>& b) const;
    long branch_encode(const std::vector<int>& b) const;
    std::vector<int> branch_decode(long idx) const;

    // local inverse-expansion factor under the max metric
    double local_lipschitz(const Pt& x) const;

    // image of a circular arc in coordinate `coord` (map is orientation
    // preserving, so the image of an arc is an arc)
    Arc arc_image(int coord, const Arc& a) const;

    double bump(double x) const;
    double bump_deriv(double x) const;

private:
    BaseMapConfig cfg_;
    int m_;
    std::vector<int> k_;
    double delta_ = 0.0, r_ = 0.2;
    int pert_coord_ = -1; // -1: no perturbed coordinate (linear family)
    long deg_ = 1;
    bool repeated_factors_ = false;
};

// Slow region Omega = closure{ L(x) >= lambda_u } described per coordinate:
// x is in Omega iff some coordinate lies in that coordinate's interval list.
struct ExpansionProfile {
    double lambda_u = 0.0, rho = 0.0;
    long deg = 1;
    long q = 0;            // partition elements meeting Omega
    int omega_boxes = 0;   // same as q, kept for reporting
    bool omega_empty = true;
    double L_global = 0.0; // sup of L over Omega (only valid when !omega_empty)
    std::vector<std::vector<Arc>> omega;     // per coordinate
    std::vector<std::vector<Arc>> omega_rho; // per coordinate, fattened by rho

    bool coord_in(const std::vector<Arc>& ivs, double x) const {
        for (auto& a : ivs) if (a.contains_point(x)) return true;
        return false;
    }
    bool in_omega(const Pt& x) const {
        for (size_t i = 0; i < x.size(); ++i)
            if (coord_in(omega[i], x[i])) return true;
        return false;
    }
    bool in_omega_rho(const Pt& x) const {
        for (size_t i = 0; i < x.size(); ++i)
            if (coord_in(omega_rho[i], x[i])) return true;
        return false;
    }
    // admissible alpha must stay below this (derived from theta_alpha < 1)
    double alpha_bound() const;
    json to_json() const;
};

// Scans a fine grid (plus one bisection refinement per interval endpoint) to
// locate the slow region, then counts covering partition elements.
// Throws ConfigError when the data is inconsistent: nonempty Omega with
// L_global <= 1, or q >= deg.
ExpansionProfile build_expansion_profile(const BaseMap& map, double lambda_u, double rho,
                                         int grid = 100000);

struct CoverEstimate {
    int tau = 0;           // max forward time over centers that reach the target gap
    int flagged = 0;       // centers that never reached it within the cap
    int centers = 0;
    std::vector<double> flagged_examples; // a few non-covering centers (coord 0)
};

// Smallest n such that g^n(B(c, radius)) has complement gap <= target_gap for
// every center c on a net of the given spacing, per coordinate, reported as
// the max over coordinates. target_gap = 0 asks for full covering.
CoverEstimate covering_time(const BaseMap& map, double radius, double net_spacing,
                            double target_gap, int cap);

struct BaseVerifyOpts {
    double alpha = 0.6;
    double exact_eps = 0.01;
    int exact_cap = 200;
    int grid = 4096;
};

Report verify_base_hypotheses(const BaseMap& map, const ExpansionProfile& prof,
                              const BaseVerifyOpts& opts);

} // namespace tf

#pragma once
#include <functional>
#include <string>
#include "thermoformal/solenoid.hpp"
#include "thermoformal/report.hpp"

namespace tf {

// Observable phi: M -> R together with its Holder data and the sup/inf
// statistics the pressure bounds need. The evaluator owns any map references
// it captures, so a Potential must not outlive the map it was built from.
struct Potential {
    std::string kind = "zero"; // "zero" | "holder_test" | "geometric" | custom
    std::function<double(const SolenoidPoint&)> eval;
    double holder_K = 0.0;
    double holder_exponent = 1.0; // in (0,1]

    // sup/inf over attractor samples and sup over the fiber above the
    // fattened slow region; see estimate_potential_sups
    double sup_attractor = 0.0;
    double inf_attractor = 0.0;
    double sup_slow = 0.0;
    bool sups_estimated = false;

    double operator()(const SolenoidPoint& p) const { return eval ? eval(p) : 0.0; }
};

Potential make_zero_potential();

// amplitude * cos(2 pi base_0); Holder constant 2 pi |amplitude| is exact
Potential make_cosine_potential(double amplitude);

// -sum_i log g_i'(base_i): the expansion observable along the center-unstable
// graph direction, which projects to the base derivative coordinate-wise.
// Holder constant measured by a derivative scan of the map.
Potential make_geometric_potential(const BaseMap& g);

// Fills the sup/inf fields from `samples` backward-chain attractor points
// followed by `refine_steps` rounds of shrinking local proposals around each
// incumbent. sup_slow scans only points whose base lies in the fattened slow
// region and is -inf when no such point is seen (empty slow region).
void estimate_potential_sups(const Solenoid& f, const ExpansionProfile& prof,
                             Potential& phi, long samples, int refine_steps,
                             uint64_t seed, int threads = 1);

// samples random attractor pairs and checks |phi(x)-phi(y)| <= K d(x,y)^beta
Report check_holder_data(const Solenoid& f, const Potential& phi, long pairs,
                         uint64_t seed);

} // namespace tf

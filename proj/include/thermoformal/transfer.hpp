#pragma once
#include <functional>
#include <string>
#include <vector>
#include "thermoformal/base_map.hpp"
#include "thermoformal/potential.hpp"
#include "thermoformal/report.hpp"
#include "thermoformal/solenoid.hpp"

namespace tf {

// Weighted pull-back operator discretized on n_cells congruent circle cells
// (one-dimensional bases only). Column j spreads each inverse-branch image of
// cell j over the rows it meets, weighted by e^{phi} at the branch point of
// the cell midpoint, so every column sums to the operator applied to the
// constant function 1 at that midpoint. On grids the branch images align
// with, the split is exact and so is the leading eigenvalue.
struct TransferOperator {
    long n_cells = 0;
    double scale = 1.0; // entries carry e^{scale * phi}

    // CSC layout; frac/mass/phiv persist so the weights can be re-scaled
    // without re-assembly (frac: share of the branch image, sums to one per
    // column and branch; mass: plain overlap length, the phi-independent
    // forward transition; phiv: phi at the branch point).
    std::vector<long> col_ptr;
    std::vector<long> row;
    std::vector<double> frac;
    std::vector<double> mass;
    std::vector<double> phiv;
    std::vector<double> val;

    double eigenvalue = 0.0;
    std::vector<double> right_vec; // sum-1 normalized
    std::vector<double> left_vec;  // sum-1 normalized
    double spectral_gap = 0.0;     // 1 - |lambda_2|/lambda_max
    double residual = 0.0;
    long iterations = 0;
    bool stagnated = false;

    std::vector<double> weights;    // equilibrium cell weights, left*right renormalized
    double invariance_defect = 0.0; // L1 gap between push-forward of weights and weights

    // re-weight entries as frac * e^{t phi} and re-solve the leading pair;
    // gap, weights and defect refresh only when full is set (the curve scan
    // needs eigenvalues alone)
    void solve(double t, bool full = false);

    json summary_json() const;
};

TransferOperator build_transfer_operator(const BaseMap& g,
                                         const std::function<double(double)>& phi,
                                         long n_cells, int threads = 1);

struct MeasureApprox {
    long n_cells = 0;
    std::vector<double> weights;
    double invariance_defect = 0.0;
};

MeasureApprox equilibrium_measure(const TransferOperator& op);

// -sum_c log g_c' at p's base: the expansion rate along the center-unstable
// graph direction, whose projection to the base is the coordinate derivative.
// Verifies first that the graph-transform iteration over p's backward
// itinerary contracts (two seeds must collapse within `steps` levels) and
// throws NumericError with the residual separation when domination fails.
double geometric_potential(const Solenoid& f, const SolenoidPoint& p, int steps = 40);

struct PressureCurve {
    long n_cells = 0;
    double alpha = 0.0;
    double sup_geo = 0.0, inf_geo = 0.0;      // over the attractor
    double sup_slow_geo = 0.0, inf_slow_geo = 0.0; // over the slow region (-inf/+inf when empty)
    std::vector<double> t;
    std::vector<double> values;   // log leading eigenvalue at t
    std::vector<double> floor_line; // log deg + t inf_geo, a lower envelope
    std::vector<double> slow_cap;   // t sup_geo + log q + eps(alpha) + m log L
    std::vector<double> psi;        // slow-region ceiling with sup/inf over the slow set
    bool has_root = false;
    double root = 0.0;          // largest sign change of values, refined by bisection
    double t0 = 0.0;            // zero of slow_cap (meaningless and -inf when q = 0)
    bool convex_ok = true;      // second differences >= -1e-9
    bool decrease_applicable = false; // strict decrease is only promised when sup_geo < 0
    bool decrease_ok = true;
    bool floor_ok = true;       // floor_line <= values + 1e-9 on the grid
    bool stagnated_any = false;
    double uniq_lo = 0.0, uniq_hi = 0.0; // longest grid run with psi < values
    bool uniq_any = false;
    void write_csv(const std::string& path) const; // t,pressure,floor,slow_cap
    json to_json() const;
};

PressureCurve pressure_curve(const Solenoid& f, const ExpansionProfile& prof,
                             double alpha, double t_min, double t_max, int steps,
                             long n_cells, int threads = 1);

struct LyapunovSpectrum {
    std::vector<double> exponents; // all m + 2m of them, descending
    double lambda_plus = 0.0;      // sum of the positive exponents
    double base_exponent = 0.0;    // leading exponent (base direction dominates)
    double fiber_exponent = 0.0;   // trailing exponent (= log lambda_s for the skew model)
};

// QR iteration of the full Jacobian along a typical forward orbit. Linear
// coordinates advance on a 64-bit integer phase fed by fresh random bits so
// the expanding shift never exhausts the mantissa; perturbed coordinates use
// plain iteration after burn-in.
LyapunovSpectrum lyapunov_exponents(const Solenoid& f, long orbit_length, uint64_t seed);

// entropy estimate against the sum of positive exponents for the same
// measure; slack absorbs both estimators' bias
void add_margulis_ruelle(Report& rep, double h_est, double lambda_plus,
                         double slack = 0.05);

// Compares time averages of five observables (cos/sin/double-frequency in the
// base, real/imaginary fiber coordinate) along a Lebesgue-random orbit with
// integrals against the geometric-scale operator measure; fiber integrals
// replay fiber coordinates along operator-distributed backward cell chains.
// Adds the entropy-identity residual |h - lambda_plus| (report-only when
// pesin_tol <= 0) and its trend across n_cells/4, n_cells/2, n_cells.
Report srb_check(const Solenoid& f, long n_cells, long orbit_length, uint64_t seed,
                 double obs_tol, double pesin_tol, int threads = 1);

// Smallness test for the slow region against the geometric potential:
//   log q + eps(alpha) + m log L  <  min(log deg, -sup phi_geo).
Report srb_hypothesis_check(const BaseMap& g, const ExpansionProfile& prof,
                            double alpha, bool gating = false);

// Scans pitchfork parameters for configurations passing the smallness test.
// Configurations whose slow region is empty pass vacuously and are flagged;
// configurations the expansion profile rejects are recorded as skipped.
Report srb_parameter_search(const std::vector<double>& deltas,
                            const std::vector<double>& lambda_us,
                            const std::vector<double>& alphas, double rho);

} // namespace tf

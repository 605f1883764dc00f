// Littlewood-Paley cutoffs, Fourier multipliers, free flows, modulation projections.
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "kgs/radial_spectral.hpp"

namespace kgs {

// ---- cutoffs ----------------------------------------------------------------

double rho0(double s);
double rho_k(int k, double y);        // rho0(2^-k |y|) - rho0(2^{-k+1} |y|), support [2^{k-1}, 2^{k+1}]
double rho_tilde(int k, double y);    // rho_{k-1} + rho_k + rho_{k+1}
double rho_below(int k, double y);    // sum_{j<k} rho_j = rho0(2^{1-k} |y|)
double lp_profile(int k, double y);   // P_k for k >= 1, complement rho0(|y|) for k = 0

// P_k with k >= 0 (P_0 = I - sum_{k>=1} P_k).
FrequencyField littlewood_paley(const FrequencyField& F, int k);
RadialField littlewood_paley(const RadialField& f, int k);
// Pure annular rho_k, any integer k.
FrequencyField annular_projection(const FrequencyField& F, int k);
RadialField annular_projection(const RadialField& f, int k);
RadialField fattened_projection(const RadialField& f, int k);   // P~_k
RadialField low_projection(const RadialField& f, int k);        // P_{<k}

// Number of dual nodes with rho_k > 0.
std::size_t annulus_nodes(const RadialGrid& g, int k);
// Highest k whose support [2^{k-1}, 2^{k+1}] lies below xi_max.
int nyquist_octave(const RadialGrid& g);

// ---- multipliers and flows --------------------------------------------------

enum class Flow { Schrodinger, KGPlus, KGMinus };
const char* flow_name(Flow f);
Flow parse_flow(const std::string& s);

inline double japanese(double x) { return std::sqrt(1.0 + x * x); }

// Phase omega(xi) such that the flow multiplies by exp(i t omega(xi)).
double flow_symbol(Flow f, double xi);
// Group velocity |d omega / d xi|.
double group_velocity(Flow f, double xi);

struct MultiplierSymbol {
    enum class Kind { BesselPower, SchrodingerPhase, KGPhase } kind = Kind::BesselPower;
    double s = 0.0;   // bessel power
    double t = 0.0;   // time
    int sign = +1;    // kg branch

    static MultiplierSymbol bessel(double s);
    static MultiplierSymbol schrodinger(double t);
    static MultiplierSymbol kg(double t, int sign = +1);
    static MultiplierSymbol flow(Flow f, double t);
    cplx operator()(double xi) const;
};

FrequencyField apply_multiplier(const FrequencyField& F, const MultiplierSymbol& m);
RadialField apply_multiplier(const RadialField& f, const MultiplierSymbol& m);

// ---- space-time fields --------------------------------------------------------

struct TimeGrid {
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t n_t = 1;
    double t(std::size_t l) const { return t0 + static_cast<double>(l) * dt; }
    double t_end() const { return t(n_t - 1); }
};

// Snapshots of one grid on a uniform time grid. If `window` is non-empty the
// values already carry the taper weights.
struct SpaceTimeField {
    GridPtr grid;
    TimeGrid times;
    std::vector<CVec> values;
    std::vector<double> window;

    bool windowed() const { return !window.empty(); }
    RadialField snapshot(std::size_t l) const { return RadialField(grid, values[l]); }
    void check() const;
};

// Smooth taper: rho0 rescaled to the window, flat on the middle 50%.
std::vector<double> taper_weights(const TimeGrid& tg);
double taper_at(double t, double t_lo, double t_hi);
SpaceTimeField apply_window(const SpaceTimeField& F);

SpaceTimeField free_wave(const RadialField& data, Flow flow, const TimeGrid& times);

// ---- random test data ------------------------------------------------------

// Independent complex Gaussian draws, localized in space to r <= loc_radius
// (default 8 * 2^-k; infinity disables it) and filtered by rho_k in frequency; unit L2 norm.
RadialField random_annular_data(const GridPtr& grid, int k, std::uint64_t seed, double loc_radius = -1.0);

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::int64_t> tags);

// ---- modulation projections -------------------------------------------------

enum class Surface { Schrodinger, KGPlus, KGMinus };
enum class ModMode { Band, AtMost };   // Q_j, Q_{<=j}
Surface parse_surface(const std::string& s);
double surface_symbol(Surface s, double xi);  // tau position of the free waves: xi^2, +<xi>, -<xi>

// Modulation variable is tau - surface(xi); computed after removing the surface phase so
// frequencies above the time Nyquist never alias.
SpaceTimeField modulation_project(const SpaceTimeField& F, int j, Surface surface, ModMode mode);

// Lowest band resolvable by a window of length T, highest by the step dt.
int modulation_j_min(const TimeGrid& tg);
int modulation_j_max(const TimeGrid& tg);

// Squared L2_{t,x} norm with rectangle weights dt.
double spacetime_l2_sq(const SpaceTimeField& F);
cplx spacetime_inner(const SpaceTimeField& F, const SpaceTimeField& G);

}  // namespace kgs

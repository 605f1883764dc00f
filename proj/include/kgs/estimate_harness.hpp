// Probes of the linear, bilinear and trilinear estimates on random free waves, plus the
// transversality quantities and the dyadic summation check.
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "kgs/function_norms.hpp"

namespace kgs {

// ---- Lebesgue pairs ---------------------------------------------------------------

enum class Family { Schrodinger, Wave };
const char* family_name(Family f);

struct LebesguePair {
    double p = 2.0, q = 2.0;
    Family family = Family::Schrodinger;
    std::string label() const;  // e.g. "(8/3,3)"
};

double sigma(const LebesguePair& pair);
double sigma_S(double p, double q);
double sigma_W(double p, double q);

struct Admissibility {
    bool ok = false;
    bool excluded_endpoint = false;
    std::string reason;
};
Admissibility admissible(const LebesguePair& pair);

struct TableRow {
    LebesguePair pair;
    double sigma = 0.0;
};
// Reference values: seven Schrodinger rows and three wave rows.
std::vector<TableRow> reference_table();

// ---- windows and grids ----------------------------------------------------------------

enum class GridMode { Fixed, Adaptive };

struct WindowConfig {
    GridMode mode = GridMode::Fixed;
    double T = 16.0;          // fixed: window length; adaptive: half-window in units of t*
    double r_max = 64.0;      // fixed grid
    std::size_t n = 4096;
    double loc = 8.0;         // data localization radius at k = 0 (scales as 2^-k)
    double t_max = std::numeric_limits<double>::infinity();  // cap on the half-window
    double reflect_tol = 1e-6;
    int n_core = 64;          // uniform core intervals of the composite time grid
    double tail_ratio = 1.05; // geometric growth of the tail steps
};

struct WaveSpec {
    Flow flow = Flow::Schrodinger;
    int k = 0;
};

struct WindowPlan {
    GridPtr grid;
    double t_half = 0.0;     // window is [-t_half, t_half]
    double t_star = 0.0;     // interaction or dispersal time
    std::vector<double> loc_radius;
};

// Group-velocity range of the annulus k for the flow.
std::pair<double, double> velocity_range(Flow flow, int k);
WindowPlan plan_window(const std::vector<WaveSpec>& waves, const WindowConfig& cfg);

struct TimeQuadrature {
    std::vector<double> t, w;
};
// Uniform core |t| <= t_core, geometric tails out to the window edge, trapezoid weights.
TimeQuadrature composite_quadrature(double t_half, double t_core, int n_core, double ratio);
TimeQuadrature uniform_quadrature(double t_half, double dt_max);

// Free wave evaluated on demand: S(t) data, optionally times the window taper.
class WaveSampler {
public:
    WaveSampler(const RadialField& data, Flow flow);
    void at(double t, CVec& out) const;
    const CVec& hat() const { return hat_; }
    const RadialGrid& grid() const { return *grid_; }
    Flow flow() const { return flow_; }
    double omega(std::size_t m) const { return omega_[m]; }

private:
    GridPtr grid_;
    Flow flow_;
    CVec hat_;
    std::vector<double> omega_;
};

class reflectivity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- Strichartz ---------------------------------------------------------------------------

enum class Weight { SigmaS, SigmaW };
const char* weight_name(Weight w);

struct StrichartzProbe {
    LebesguePair pair;   // exponents; the weight picks sigma_S or sigma_W
    Weight weight = Weight::SigmaS;
};

struct StrichartzRow {
    Flow flow = Flow::Schrodinger;
    int k = 0;
    StrichartzProbe probe;
    double sigma = 0.0;
    double ratio = 0.0;       // max over trials of 2^{k sigma} ||u||_{L^p L^q} / ||data||
    int trials = 0;
    std::uint64_t seed = 0;
    double t_half = 0.0, r_max = 0.0;
    std::size_t n = 0;
    double boundary = 0.0;    // worst end-time boundary energy fraction
    bool asserted = true;     // false for the excluded endpoint
};

// All probes share the same random waves.
std::vector<StrichartzRow> strichartz_ratio(Flow flow, int k, const std::vector<StrichartzProbe>& probes, int trials,
                                            std::uint64_t seed, const WindowConfig& cfg);

// ---- transversality -----------------------------------------------------------------------

enum class BilinearCase { I, II, III };
const char* bilinear_case_name(BilinearCase c);
BilinearCase parse_bilinear_case(const std::string& s);

struct RadialRegion {
    double r_lo = 0.0, r_hi = 0.0;
};

struct TransversalityData {
    BilinearCase which = BilinearCase::I;
    int k = 0, k1 = 0, k2 = 0;
    RadialRegion lambda1, lambda2;
    double V_max = 0.0, H1 = 0.0, H2 = 0.0, d0 = 0.0;
    double V_scale = 1.0;      // the proof's predicted size of V_max
    double a1_ratio = 0.0;     // min |(H v) ^ w| / (H_j V_max |v|) over samples
    double a2_curv = 0.0;      // min_j min_m (H_j / ||grad^m Phi_j||)^{1/(m-2)}
    double a2_ratio = 0.0;     // min_j V_max / H_j
    bool a1_pass = false, a2_pass = false;
    bool h_order = false;      // H2 <= H1
};

// `low` is k1 for case I, k for case II, k2 for case III; `high` the other index.
TransversalityData transversality(BilinearCase c, int high, int low, double a1_threshold = 1e-2);

// ---- bilinear ------------------------------------------------------------------------------

struct BilinearRow {
    BilinearCase which = BilinearCase::I;
    int k = 0, k1 = 0, k2 = 0;
    bool has_k = false, has_k2 = false;
    double raw = 0.0;           // max over trials of ||w1 w2||_{L^{8/5} L^{3/2}} / (||d1|| ||d2||)
    double coefficient = 1.0;   // 2^{k1/12}, 2^{k/12 - k1/3}, 2^{k2/12}
    double control_coefficient = 1.0;  // coefficient without its high-frequency factor
    double normalized = 0.0;
    double control = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
    double t_half = 0.0, r_max = 0.0;
    std::size_t n = 0;
    double boundary = 0.0;
};

// Case I: (k, k1) with N at k and u at k1. Case II: same labels. Case III: (k1, k2).
BilinearRow bilinear_ratio(BilinearCase c, int a, int b, int trials, std::uint64_t seed, const WindowConfig& cfg);

// Least-squares slope of log2(values) against x.
double log2_slope(const std::vector<double>& x, const std::vector<double>& values);

// ---- trilinear ------------------------------------------------------------------------------

enum class TrilinearKind { Schrodinger, KleinGordon };  // pairing of the u- or the N-equation

struct TrilinearOptions {
    double eps = 0.1;
    bool conj_u2 = true;    // N u1 conj(u2)
    bool conj_N = true;     // <D>^{-1}(u1 conj u2) conj(N)
    bool atom_mode = false; // V^2 factor replaced by a multi-step atom
    int atom_steps = 4;
};

struct TrilinearRow {
    TrilinearKind kind = TrilinearKind::Schrodinger;
    std::string tag;
    int k = 0, k1 = 0, k2 = 0;
    double raw = 0.0;          // max over trials of |integral| / norms
    double coefficient = 1.0;  // min{1, 2^{(-1/2+eps/2)k}} or <2^k>^{-1}
    double normalized = 0.0;
    double v2_normalized = 0.0;  // atom mode: divided by the V^2 lower bound instead of the atomic bound
    double relative = 0.0;     // max over trials of |integral| / integral of |integrand|
    bool compatible = true;    // fattened annuli admit a triangle
    int trials = 0;
    std::uint64_t seed = 0;
    double t_half = 0.0, dt = 0.0, r_max = 0.0;
    std::size_t n = 0;
};

bool annuli_compatible(int k, int k1, int k2);
TrilinearRow trilinear(TrilinearKind kind, int k, int k1, int k2, int trials, std::uint64_t seed, const WindowConfig& cfg,
                       const TrilinearOptions& opt = {});

// ---- summation --------------------------------------------------------------------------------

struct SummationResult {
    double delta = 0.0;
    int length = 0;
    int trials = 0;
    double C = 0.0;            // max over trials of sum / (|x||y||z|)
    double constant_seq = 0.0; // same sum for constant normalized sequences
    std::size_t triples = 0;
};

// Triples (k, k1, k2) in [0, L)^3 with max - med <= gap, weight 2^{-delta min}.
double summation_sum(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& z, double delta,
                     int gap = 10);
SummationResult summation_check(double delta, int length, int trials, std::uint64_t seed, int gap = 10);

}  // namespace kgs

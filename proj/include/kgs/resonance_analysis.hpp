// Resonance functions Phi_+, Phi_-, Psi in radial variables and their extremization
// over dyadic regions.
#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace kgs {

// a = |xi|, b = |eta|, c = cos of the angle between them.
struct ResonancePoint {
    double a = 0.0, b = 0.0, c = 0.0;
    double d() const;  // |xi - eta|
};

enum class ResFn { PhiPlus, PhiMinus, Psi };
const char* resfn_name(ResFn f);

double phi(const ResonancePoint& p, int sign);  // sign = +1 gives Phi_+
double psi(const ResonancePoint& p);
// Same functions in (a, b, d) with d = |xi - eta|.
double eval_abd(ResFn f, double a, double b, double d);

struct Interval {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    bool bounded() const { return hi < std::numeric_limits<double>::infinity(); }
    static Interval annulus(int k);  // [2^{k-1}, 2^{k+1}]
    static Interval ball(int k);     // [0, 2^{k+1}]
    static Interval any() { return {}; }
};

// Constraints on |xi|, |eta|, |xi - eta|; at least two must be bounded.
struct RegionSpec {
    Interval a, b, d;
    int resolution = 200;
    int refinements = 2;
};

struct MinResult {
    bool feasible = false;
    double min_abs = std::numeric_limits<double>::infinity();
    ResonancePoint arg;
    double arg_d = 0.0;
};

MinResult region_min_abs(ResFn f, const RegionSpec& region);

enum class LemmaCase {
    Sch_i,         // k1, k <= -3: |Phi| >= 1/2
    Sch_ii,        // k > 7, k1 = k - gap: |Phi| >~ 2^{2k}
    Sch_iii,       // k = k1, k2 = k1 - gap: |Phi| >~ 2^{2k}
    KG_i,          // k1, k2 <= -3: |Psi| >= 1/2
    KG_ii,         // k1 > 10, k2 = k1 - gap: |Psi| >~ 2^{2k1}
    KG_ii_swap,    // same with the small frequency on eta (eta <-> xi - eta)
    KG_ii_literal  // |xi| ~ 2^{k2}, |xi - eta| ~ 2^{k1}: reported only
};
const char* lemma_case_name(LemmaCase c);
LemmaCase parse_lemma_case(const std::string& s);

struct LemmaRow {
    std::string tag;
    int sign = 0;  // +1 / -1 for Phi, 0 for Psi
    std::optional<int> k, k1, k2;
    bool feasible = true;
    double min_abs = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    double scale = 1.0;     // 2^{2k} for the scaling cases, 1 otherwise
    double c0 = 0.0;        // min_abs / scale
    ResonancePoint arg;
    std::string status;     // pass | fail | infeasible | info
};

struct LemmaSweep {
    LemmaCase which = LemmaCase::Sch_i;
    std::vector<int> first;   // k (Sch), k1 (KG)
    std::vector<int> second;  // k1 (Sch_i), k2 (KG_i); unused by scaling cases
    int gap = 10;
    int resolution = 200;
    int refinements = 2;
    double stability = 0.2;   // fitted constants within +-20% of their median
};

// Rows for the sweep; scaling cases get c0 fits and a stability verdict per sign.
std::vector<LemmaRow> verify_lemma(const LemmaSweep& sweep);

}  // namespace kgs

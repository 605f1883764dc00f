// Space-time norms: L^p_t L^q_x, H^s, X^{0,b,inf}, p-variation, U^2 atoms and Z^s upper bounds.
#pragma once

#include <map>
#include <vector>

#include "kgs/frequency_tools.hpp"

namespace kgs {

double mixed_norm(const SpaceTimeField& F, double p, double q);

// Streaming version with arbitrary time weights (quadrature on non-uniform grids).
class MixedNormAccumulator {
public:
    MixedNormAccumulator(double p, double q);
    void add(const RadialGrid& g, const CVec& values, double weight);
    double value() const;

private:
    double p_, q_;
    double acc_ = 0.0;
};

double sobolev_norm(const RadialField& f, double s);

struct XsbResult {
    double value = 0.0;
    int j_min = 0, j_max = 0;      // resolvable range; j_min stands for Q_{<=j_min}
    int argmax_j = 0;
    std::vector<double> band_norms;  // ||Q_j F||_{L2}, j = j_min..j_max
};
XsbResult xsb_norm(const SpaceTimeField& F, double b, Surface surface);

// Exact sup over sub-partitions of sum ||x_{t_k} - x_{t_{k-1}}||^p, to the power 1/p.
double p_variation(const RadialGrid& g, const std::vector<CVec>& snapshots, double p);
double p_variation(const std::vector<RadialField>& snapshots, double p);
// Pairwise-distance form; dist[i][j] for i < j.
double p_variation_from_distances(const std::vector<std::vector<double>>& dist, double p);
// Exhaustive enumeration (n <= 24).
double p_variation_bruteforce(const std::vector<std::vector<double>>& dist, double p);

// Pull back by the inverse flow and take the 2-variation. `conjugate` uses the
// conjugate flow (symbol -omega).
double v2_norm(const SpaceTimeField& F, Flow flow, bool conjugate = false);

struct AtomicDecomposition {
    Flow flow = Flow::Schrodinger;
    std::vector<double> partition;         // t_1 < ... < t_{K-1}
    std::vector<RadialField> pieces;       // phi_1 = 0, ..., phi_K
    std::vector<double> weights{1.0};      // lambda

    double u2_upper() const;
    void check() const;
};

struct Atom {
    SpaceTimeField field;
    AtomicDecomposition decomp;
};

// Normalizes sum ||phi_k||^2 = 1 and samples sum_k 1_[t_{k-1},t_k)(t) S(t) phi_k.
Atom build_atom(const std::vector<double>& partition, std::vector<RadialField> pieces, Flow flow, const TimeGrid& times);

// ||P_{<-10} u||_{U2} + (sum_{k >= -10} 2^{2ks} ||P_k u||_{U2}^2)^{1/2}, each block
// replaced by its decomposition bound; blocks k < -10 are summed into the first term.
double z_norm_upper(const std::map<int, AtomicDecomposition>& blocks, double s);

struct RegularityParams {
    double s = 0.0;
    double r = 0.0;
    double eps = 0.1;
    double delta = 0.01;
    void validate() const;
};

}  // namespace kgs

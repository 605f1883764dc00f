#include "kgs/function_norms.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace kgs {

static void check_exponent(double e, const char* name) {
    if (!(e >= 1.0)) throw std::invalid_argument(std::string("mixed_norm: ") + name + " must lie in [1, inf]");
}

MixedNormAccumulator::MixedNormAccumulator(double p, double q) : p_(p), q_(q) {
    check_exponent(p, "p");
    check_exponent(q, "q");
}

void MixedNormAccumulator::add(const RadialGrid& g, const CVec& values, double weight) {
    const double a = lq_norm_raw(g, values, q_);
    if (std::isinf(p_))
        acc_ = std::max(acc_, a);
    else
        acc_ += std::pow(a, p_) * weight;
}

double MixedNormAccumulator::value() const { return std::isinf(p_) ? acc_ : std::pow(acc_, 1.0 / p_); }

double mixed_norm(const SpaceTimeField& F, double p, double q) {
    MixedNormAccumulator acc(p, q);
    for (const auto& v : F.values) acc.add(*F.grid, v, F.times.dt);
    return acc.value();
}

double sobolev_norm(const RadialField& f, double s) {
    if (s == 0.0) return lq_norm(f, 2.0);
    return lq_norm(apply_multiplier(f, MultiplierSymbol::bessel(s)), 2.0);
}

XsbResult xsb_norm(const SpaceTimeField& F, double b, Surface surface) {
    XsbResult res;
    res.j_min = modulation_j_min(F.times);
    res.j_max = modulation_j_max(F.times);
    res.argmax_j = res.j_min;
    for (int j = res.j_min; j <= res.j_max; ++j) {
        const auto Q = modulation_project(F, j, surface, j == res.j_min ? ModMode::AtMost : ModMode::Band);
        const double nrm = std::sqrt(spacetime_l2_sq(Q));
        res.band_norms.push_back(nrm);
        const double v = std::pow(2.0, b * j) * nrm;
        if (v > res.value) {
            res.value = v;
            res.argmax_j = j;
        }
    }
    return res;
}

// ---- p-variation --------------------------------------------------------------

double p_variation_from_distances(const std::vector<std::vector<double>>& dist, double p) {
    const std::size_t n = dist.size();
    if (n == 0) throw std::invalid_argument("p_variation: empty sequence");
    if (!(p >= 1.0)) throw std::invalid_argument("p_variation: p must be >= 1");
    // Including both endpoints never lowers the sum, so V[0] = 0 and the answer is V[n-1].
    std::vector<double> V(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) {
        double best = 0.0;
        for (std::size_t i = 0; i < j; ++i) best = std::max(best, V[i] + std::pow(dist[i][j], p));
        V[j] = best;
    }
    return std::pow(V[n - 1], 1.0 / p);
}

double p_variation_bruteforce(const std::vector<std::vector<double>>& dist, double p) {
    const std::size_t n = dist.size();
    if (n == 0) throw std::invalid_argument("p_variation: empty sequence");
    if (n > 24) throw std::invalid_argument("p_variation_bruteforce: too many points");
    if (n == 1) return 0.0;
    const std::size_t inner = n - 2;
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << inner); ++mask) {
        double s = 0.0;
        std::size_t prev = 0;
        for (std::size_t b = 0; b < inner; ++b)
            if (mask >> b & 1) {
                s += std::pow(dist[prev][b + 1], p);
                prev = b + 1;
            }
        s += std::pow(dist[prev][n - 1], p);
        best = std::max(best, s);
    }
    return std::pow(best, 1.0 / p);
}

static std::vector<std::vector<double>> pairwise(const RadialGrid& g, const std::vector<CVec>& x) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    CVec diff(g.n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            for (std::size_t m = 0; m < g.n; ++m) diff[m] = x[j][m] - x[i][m];
            d[i][j] = d[j][i] = lq_norm_raw(g, diff, 2.0);
        }
    return d;
}

double p_variation(const RadialGrid& g, const std::vector<CVec>& snapshots, double p) {
    if (snapshots.empty()) throw std::invalid_argument("p_variation: empty sequence");
    if (snapshots.size() > 4096) throw std::invalid_argument("p_variation: more than 4096 snapshots");
    return p_variation_from_distances(pairwise(g, snapshots), p);
}

double p_variation(const std::vector<RadialField>& snapshots, double p) {
    if (snapshots.empty()) throw std::invalid_argument("p_variation: empty sequence");
    std::vector<CVec> x;
    for (const auto& s : snapshots) {
        require_same_grid(s.grid, snapshots.front().grid);
        x.push_back(s.values);
    }
    return p_variation(*snapshots.front().grid, x, p);
}

double v2_norm(const SpaceTimeField& F, Flow flow, bool conjugate) {
    F.check();
    const RadialGrid& g = *F.grid;
    std::vector<CVec> pulled(F.times.n_t);
    CVec hat;
    const double sgn = conjugate ? -1.0 : 1.0;
    for (std::size_t l = 0; l < F.times.n_t; ++l) {
        forward_raw(g, F.values[l], hat);
        const double t = F.times.t(l);
        for (std::size_t m = 0; m < g.n; ++m) hat[m] *= std::polar(1.0, -sgn * t * flow_symbol(flow, g.xi(m)));
        inverse_raw(g, hat, pulled[l]);
    }
    return p_variation(g, pulled, 2.0);
}

// ---- atoms --------------------------------------------------------------------------

void AtomicDecomposition::check() const {
    if (pieces.size() != partition.size() + 1) throw std::invalid_argument("atom: need K pieces for K-1 partition points");
    for (std::size_t i = 1; i < partition.size(); ++i)
        if (!(partition[i] > partition[i - 1])) throw std::invalid_argument("atom: partition must be strictly increasing");
    if (pieces.empty()) throw std::invalid_argument("atom: no pieces");
    if (lq_norm(pieces.front(), 2.0) != 0.0) throw std::invalid_argument("atom: phi_1 must vanish");
    for (double w : weights)
        if (!std::isfinite(w)) throw std::invalid_argument("atom: weights must be finite");
}

double AtomicDecomposition::u2_upper() const {
    double s = 0.0;
    for (double w : weights) s += std::abs(w);
    return s;
}

Atom build_atom(const std::vector<double>& partition, std::vector<RadialField> pieces, Flow flow, const TimeGrid& times) {
    Atom a;
    a.decomp.flow = flow;
    a.decomp.partition = partition;
    if (pieces.empty()) throw std::invalid_argument("build_atom: no pieces");
    double tot = 0.0;
    for (const auto& p : pieces) tot += std::pow(lq_norm(p, 2.0), 2);
    if (!(tot > 0.0)) throw std::invalid_argument("build_atom: all pieces vanish");
    const double c = 1.0 / std::sqrt(tot);
    for (auto& p : pieces)
        for (auto& z : p.values) z *= c;
    a.decomp.pieces = std::move(pieces);
    a.decomp.check();

    const GridPtr& grid = a.decomp.pieces.front().grid;
    a.field.grid = grid;
    a.field.times = times;
    a.field.values.assign(times.n_t, CVec(grid->n, cplx(0.0, 0.0)));
    std::vector<CVec> hats;
    for (const auto& p : a.decomp.pieces) {
        CVec h;
        forward_raw(*grid, p.values, h);
        hats.push_back(std::move(h));
    }
    CVec work(grid->n);
    for (std::size_t l = 0; l < times.n_t; ++l) {
        const double t = times.t(l);
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(partition.begin(), partition.end(), t) - partition.begin());
        if (k == 0) continue;  // phi_1 = 0
        for (std::size_t m = 0; m < grid->n; ++m) work[m] = hats[k][m] * std::polar(1.0, t * flow_symbol(flow, grid->xi(m)));
        inverse_raw(*grid, work, a.field.values[l]);
    }
    return a;
}

double z_norm_upper(const std::map<int, AtomicDecomposition>& blocks, double s) {
    if (blocks.empty()) throw std::invalid_argument("z_norm_upper: missing blocks");
    double low = 0.0, high = 0.0;
    for (const auto& [k, d] : blocks) {
        const double u = d.u2_upper();
        if (k < -10)
            low += u;
        else
            high += std::pow(2.0, 2.0 * k * s) * u * u;
    }
    return low + std::sqrt(high);
}

void RegularityParams::validate() const {
    if (!(s >= 0.0)) throw std::invalid_argument("regularity: s must be >= 0");
    if (!(r > s - 0.5 && r < s + 2.0)) throw std::invalid_argument("regularity: need s - 1/2 < r < s + 2");
    if (!(eps > 0.0 && eps <= 0.25)) throw std::invalid_argument("regularity: eps must lie in (0, 1/4]");
    if (!(delta > 0.0)) throw std::invalid_argument("regularity: delta must be > 0");
}

}  // namespace kgs

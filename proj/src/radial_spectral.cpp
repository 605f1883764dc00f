#include "kgs/radial_spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <string>

namespace kgs {

RadialGrid::RadialGrid(double r_max_, std::size_t n_) : r_max(r_max_), n(n_) {
    if (!(r_max_ > 0.0) || !std::isfinite(r_max_)) throw std::invalid_argument("r_max must be positive");
    if (n_ < 1) throw std::invalid_argument("grid needs at least one node");
    dr = r_max / static_cast<double>(n + 1);
}

std::vector<double> RadialGrid::nodes() const {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = r(i);
    return out;
}

std::vector<double> RadialGrid::dual_nodes() const {
    std::vector<double> out(n);
    for (std::size_t m = 0; m < n; ++m) out[m] = xi(m);
    return out;
}

GridPtr make_grid(double r_max, std::size_t n_points) {
    if (!(r_max > 0.0)) throw std::invalid_argument("make_grid: r_max must be > 0");
    if (n_points < 16) throw std::invalid_argument("make_grid: n_points must be >= 16 (unusable resolution)");
    return std::make_shared<const RadialGrid>(r_max, n_points);
}

void require_same_grid(const GridPtr& a, const GridPtr& b) {
    if (!a || !b) throw grid_mismatch("missing grid");
    if (a != b && !a->same_as(*b)) throw grid_mismatch("fields live on different grids");
}

static void check_finite(const CVec& v, std::size_t n, const char* what) {
    if (v.size() != n) throw std::invalid_argument(std::string(what) + ": length does not match grid");
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

RadialField::RadialField(GridPtr g) : grid(std::move(g)), values(grid->n, cplx(0.0, 0.0)) {}
RadialField::RadialField(GridPtr g, CVec v) : grid(std::move(g)), values(std::move(v)) { check(); }
void RadialField::check() const { check_finite(values, grid->n, "RadialField"); }

FrequencyField::FrequencyField(GridPtr g) : grid(std::move(g)), coeffs(grid->n, cplx(0.0, 0.0)) {}
FrequencyField::FrequencyField(GridPtr g, CVec c) : grid(std::move(g)), coeffs(std::move(c)) { check(); }
void FrequencyField::check() const { check_finite(coeffs, grid->n, "FrequencyField"); }

// ---- FFTW plan cache --------------------------------------------------------
// Planning is not thread-safe in FFTW; execution through fftw_execute_r2r is.

namespace {

struct PlanCache {
    std::mutex mu;
    std::map<std::size_t, fftw_plan> plans;

    fftw_plan get(std::size_t n) {
        std::lock_guard<std::mutex> lock(mu);
        auto it = plans.find(n);
        if (it != plans.end()) return it->second;
        std::vector<double> scratch(2 * n);
        int nn = static_cast<int>(n);
        fftw_r2r_kind kind = FFTW_RODFT00;
        // two transforms (re, im) over interleaved complex storage
        fftw_plan p = fftw_plan_many_r2r(1, &nn, 2, scratch.data(), nullptr, 2, 1, scratch.data(), nullptr, 2, 1,
                                         &kind, FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("FFTW planning failed");
        plans.emplace(n, p);
        return p;
    }
    ~PlanCache() {
        for (auto& kv : plans) fftw_destroy_plan(kv.second);
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

void dst1_inplace(CVec& data) {
    if (data.empty()) return;
    fftw_plan p = cache().get(data.size());
    double* d = reinterpret_cast<double*>(data.data());
    fftw_execute_r2r(p, d, d);
}

void forward_raw(const RadialGrid& g, const CVec& values, CVec& coeffs) {
    const std::size_t n = g.n;
    coeffs.resize(n);
    for (std::size_t i = 0; i < n; ++i) coeffs[i] = values[i] * g.r(i);
    dst1_inplace(coeffs);
    // RODFT00 gives 2*sum; F_m = (4 pi / xi_m) dr * sum_i v_i sin(...)
    const double c = 2.0 * kPi * g.dr;
    for (std::size_t m = 0; m < n; ++m) coeffs[m] *= c / g.xi(m);
}

void inverse_raw(const RadialGrid& g, const CVec& coeffs, CVec& values) {
    const std::size_t n = g.n;
    values.resize(n);
    const double c = 1.0 / (4.0 * kPi * g.dr);
    for (std::size_t m = 0; m < n; ++m) values[m] = coeffs[m] * (g.xi(m) * c);
    dst1_inplace(values);
    const double s = 1.0 / static_cast<double>(n + 1);
    for (std::size_t i = 0; i < n; ++i) values[i] *= s / g.r(i);
}

FrequencyField forward_transform(const RadialField& f) {
    f.check();
    FrequencyField F(f.grid);
    forward_raw(*f.grid, f.values, F.coeffs);
    return F;
}

RadialField inverse_transform(const FrequencyField& F) {
    F.check();
    RadialField f(F.grid);
    inverse_raw(*F.grid, F.coeffs, f.values);
    return f;
}

cplx l2_inner(const RadialField& f, const RadialField& g) {
    require_same_grid(f.grid, g.grid);
    const RadialGrid& gr = *f.grid;
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < gr.n; ++i) {
        const double r = gr.r(i);
        acc += f.values[i] * std::conj(g.values[i]) * (r * r);
    }
    return 4.0 * kPi * gr.dr * acc;
}

double lq_norm_raw(const RadialGrid& g, const CVec& values, double q) {
    if (std::isinf(q) && q > 0) {
        double m = 0.0;
        for (const auto& z : values) m = std::max(m, std::abs(z));
        return m;
    }
    if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
    double acc = 0.0;
    if (q == 2.0) {
        for (std::size_t i = 0; i < g.n; ++i) {
            const double r = g.r(i);
            acc += std::norm(values[i]) * r * r;
        }
        return std::sqrt(4.0 * kPi * g.dr * acc);
    }
    const double h = 0.5 * q;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double a2 = std::norm(values[i]);
        if (a2 == 0.0) continue;
        const double r = g.r(i);
        acc += std::pow(a2, h) * r * r;
    }
    return std::pow(4.0 * kPi * g.dr * acc, 1.0 / q);
}

double lq_norm(const RadialField& f, double q) { return lq_norm_raw(*f.grid, f.values, q); }

double dual_l2_norm(const FrequencyField& F) {
    const RadialGrid& g = *F.grid;
    double acc = 0.0;
    for (std::size_t m = 0; m < g.n; ++m) {
        const double x = g.xi(m);
        acc += std::norm(F.coeffs[m]) * x * x;
    }
    return std::sqrt(4.0 * kPi * acc * g.dxi() / std::pow(2.0 * kPi, 3));
}

double boundary_fraction(const RadialGrid& g, const CVec& values, double frac) {
    double tot = 0.0, edge = 0.0;
    const double rc = frac * g.r_max;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double r = g.r(i);
        const double e = std::norm(values[i]) * r * r;
        tot += e;
        if (r > rc) edge += e;
    }
    return tot > 0.0 ? edge / tot : 0.0;
}

}  // namespace kgs

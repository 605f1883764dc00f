#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kgs/frequency_tools.hpp"

using namespace kgs;

namespace {

RadialField random_field(const GridPtr& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CVec v(g->n);
    for (std::size_t i = 0; i < g->n; ++i) v[i] = cplx(nd(rng), nd(rng)) * std::exp(-g->r(i) / 4.0);
    return RadialField(g, v);
}

double rel(const RadialField& a, const RadialField& b) {
    CVec d(a.values.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.values[i] - b.values[i];
    return lq_norm_raw(*a.grid, d, 2.0) / lq_norm(b, 2.0);
}

double st_rel(const SpaceTimeField& a, const SpaceTimeField& b) {
    double num = 0, den = 0;
    for (std::size_t l = 0; l < a.values.size(); ++l) {
        CVec d(a.values[l].size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.values[l][i] - b.values[l][i];
        num += std::pow(lq_norm_raw(*a.grid, d, 2.0), 2);
        den += std::pow(lq_norm_raw(*b.grid, b.values[l], 2.0), 2);
    }
    return std::sqrt(num / den);
}

// |w^(tau)|^2 of the taper by direct quadrature of int w(t) e^{-i t tau} dt.
double window_spectrum_sq(const TimeGrid& tg, double tau) {
    cplx acc = 0;
    for (std::size_t l = 0; l < tg.n_t; ++l) acc += taper_at(tg.t(l), tg.t0, tg.t_end()) * std::polar(1.0, -tg.t(l) * tau);
    return std::norm(acc * tg.dt);
}

}  // namespace

TEST_CASE("rho0 profile") {
    CHECK(rho0(0.5) == 1.0);
    CHECK(rho0(-3.0) == 0.0);
    CHECK(rho0(1.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(rho0(-1.3) == rho0(1.3));
    double prev = 1.0;
    for (double s = 1.0; s <= 2.0; s += 1e-3) {
        CHECK(rho0(s) <= prev + 1e-15);
        CHECK(rho0(s) >= 0.0);
        prev = rho0(s);
    }
}

TEST_CASE("telescoping and fattened cutoff") {
    for (double y : {0.01, 0.3, 1.7, 5.0, 33.0}) {
        double s = 0;
        for (int k = -3; k <= 4; ++k) s += rho_k(k, y);
        CHECK(s == doctest::Approx(rho0(std::ldexp(y, -4)) - rho0(std::ldexp(y, 4))).epsilon(1e-14));
        for (int k = -3; k <= 4; ++k)
            if (rho_k(k, y) > 0) CHECK(rho_tilde(k, y) == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("littlewood-paley projections") {
    auto g = make_grid(32.0, 1024);
    auto f = random_field(g, 1);
    CHECK_THROWS(littlewood_paley(f, -1));
    // disjoint annuli
    for (int k = 1; k < 5; ++k) {
        auto pp = littlewood_paley(littlewood_paley(f, k), k + 2);
        CHECK(lq_norm(pp, 2) / lq_norm(f, 2) <= 1e-12);
    }
    // partition of unity past the Nyquist octave
    const int K = nyquist_octave(*g) + 2;
    CVec acc(g->n, 0.0);
    for (int k = 0; k <= K; ++k) {
        auto p = littlewood_paley(f, k);
        for (std::size_t i = 0; i < g->n; ++i) acc[i] += p.values[i];
    }
    CHECK(rel(RadialField(g, acc), f) <= 1e-10);
    // fattened projection fixes P_k output
    auto pk = annular_projection(f, 2);
    CHECK(rel(fattened_projection(pk, 2), pk) <= 1e-12);
    // low projection equals the sum of the annuli below
    CVec low(g->n, 0.0);
    for (int k = -12; k < 1; ++k) {
        auto p = annular_projection(f, k);
        for (std::size_t i = 0; i < g->n; ++i) low[i] += p.values[i];
    }
    CHECK(rel(RadialField(g, low), low_projection(f, 1)) <= 1e-10);
}

TEST_CASE("multipliers") {
    auto g = make_grid(32.0, 1024);
    auto f = random_field(g, 2);
    CHECK(rel(apply_multiplier(f, MultiplierSymbol::bessel(0.0)), f) <= 1e-12);
    CHECK(rel(apply_multiplier(f, MultiplierSymbol::schrodinger(0.0)), f) <= 1e-12);
    for (double t : {0.1, 1.0, 10.0}) {
        CHECK(std::abs(lq_norm(apply_multiplier(f, MultiplierSymbol::schrodinger(t)), 2) / lq_norm(f, 2) - 1) <= 1e-11);
        CHECK(std::abs(lq_norm(apply_multiplier(f, MultiplierSymbol::kg(t, -1)), 2) / lq_norm(f, 2) - 1) <= 1e-11);
    }
    for (double xi : g->dual_nodes()) {
        CHECK(std::abs(std::abs(MultiplierSymbol::schrodinger(3.7)(xi)) - 1.0) < 1e-15);
        CHECK(std::abs(std::abs(MultiplierSymbol::kg(3.7, 1)(xi)) - 1.0) < 1e-15);
    }
    auto up = apply_multiplier(apply_multiplier(f, MultiplierSymbol::bessel(1.5)), MultiplierSymbol::bessel(-1.5));
    CHECK(rel(up, f) <= 1e-10);
    // commutation with P_k
    auto a = littlewood_paley(apply_multiplier(f, MultiplierSymbol::kg(2.0)), 2);
    auto b = apply_multiplier(littlewood_paley(f, 2), MultiplierSymbol::kg(2.0));
    CHECK(rel(a, b) <= 1e-12);
    // unit mode at xi = 1: <1> = sqrt 2
    CHECK(MultiplierSymbol::bessel(1.0)(1.0).real() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("free waves") {
    auto g = make_grid(32.0, 1024);
    auto f = random_field(g, 3);
    auto one = free_wave(f, Flow::Schrodinger, TimeGrid{0.0, 1.0, 1});
    CHECK(rel(one.snapshot(0), f) <= 1e-12);
    for (Flow fl : {Flow::Schrodinger, Flow::KGPlus, Flow::KGMinus}) {
        TimeGrid tg{0.0, 0.25, 16};
        auto w = free_wave(f, fl, tg);
        for (std::size_t l = 0; l < tg.n_t; ++l) CHECK(std::abs(lq_norm(w.snapshot(l), 2) / lq_norm(f, 2) - 1) <= 1e-11);
        // group law: evolve snapshot 5 by 6*dt and compare with snapshot 11
        auto moved = apply_multiplier(w.snapshot(5), MultiplierSymbol::flow(fl, 6 * tg.dt));
        CHECK(rel(moved, w.snapshot(11)) <= 1e-11);
    }
}

TEST_CASE("random annular data") {
    auto g = make_grid(64.0, 4096);
    auto f = random_annular_data(g, 1, 42);
    CHECK(std::abs(lq_norm(f, 2) - 1.0) <= 1e-12);
    CHECK(rel(fattened_projection(f, 1), f) <= 1e-10);
    auto h = random_annular_data(g, 1, 42);
    CHECK(f.values == h.values);
    auto other = random_annular_data(g, 1, 43);
    CHECK(f.values != other.values);
    CHECK_THROWS(random_annular_data(g, -9, 1));  // too few dual nodes
    CHECK_THROWS(random_annular_data(g, 8, 1));   // beyond Nyquist
    auto unloc = random_annular_data(g, 0, 5, INFINITY);
    CHECK(std::abs(lq_norm(unloc, 2) - 1.0) <= 1e-12);
    CHECK(derive_seed(7, {1, 2}) == derive_seed(7, {1, 2}));
    CHECK(derive_seed(7, {1, 2}) != derive_seed(7, {2, 1}));
}

TEST_CASE("modulation projections") {
    auto g = make_grid(64.0, 1024);
    const TimeGrid tg{0.0, 1.0 / 8.0, 128};  // T = 16
    auto data = random_annular_data(g, 0, 9);
    auto raw = free_wave(data, Flow::Schrodinger, tg);
    CHECK_THROWS(modulation_project(raw, 0, Surface::Schrodinger, ModMode::Band));
    auto F = apply_window(raw);
    const int jmin = modulation_j_min(tg), jmax = modulation_j_max(tg);
    const double T = tg.n_t * tg.dt;

    // partition of unity: Q_{<=jmin} + sum_{j>jmin} Q_j = I
    std::vector<SpaceTimeField> parts;
    parts.push_back(modulation_project(F, jmin, Surface::Schrodinger, ModMode::AtMost));
    for (int j = jmin + 1; j <= jmax; ++j) parts.push_back(modulation_project(F, j, Surface::Schrodinger, ModMode::Band));
    SpaceTimeField sum = F;
    for (auto& v : sum.values) std::fill(v.begin(), v.end(), cplx(0));
    for (auto& p : parts)
        for (std::size_t l = 0; l < tg.n_t; ++l)
            for (std::size_t i = 0; i < g->n; ++i) sum.values[l][i] += p.values[l][i];
    CHECK(st_rel(sum, F) <= 1e-8);

    // disjoint tau supports
    for (std::size_t a = 1; a < parts.size(); ++a)
        for (std::size_t b = a + 2; b < parts.size(); ++b)
            CHECK(std::abs(spacetime_inner(parts[a], parts[b])) <= 1e-10 * spacetime_l2_sq(F));

    // leakage: mass at 2^j >= 8 * 2pi/T against the window oracle
    const double thresh = 8.0 * 2.0 * kPi / T;
    double high = 0;
    for (int j = jmin + 1; j <= jmax; ++j)
        if (std::ldexp(1.0, j) >= thresh) high += spacetime_l2_sq(modulation_project(F, j, Surface::Schrodinger, ModMode::Band));
    const double frac = high / spacetime_l2_sq(F);
    double num = 0, den = 0;
    // discrete tau_p = 2 pi p / T of the periodized window, p in [-n_t/2, n_t/2)
    for (long p = -static_cast<long>(tg.n_t) / 2; p < static_cast<long>(tg.n_t) / 2; ++p) {
        const double tau = 2.0 * kPi * p / T;
        const double s = window_spectrum_sq(tg, tau);
        double band = 0;
        for (int j = jmin + 1; j <= jmax; ++j)
            if (std::ldexp(1.0, j) >= thresh) band += std::pow(rho_k(j, tau), 2);
        num += s * band;
        den += s;
    }
    const double oracle = num / den;
    MESSAGE("leakage measured " << frac << " oracle " << oracle);
    CHECK(frac <= 0.05);
    CHECK(std::abs(frac - oracle) <= 1e-9);

    // disposability proxy across k
    for (int k = -2; k <= 3; ++k) {
        auto w = apply_window(free_wave(random_annular_data(g, k, 100 + k), Flow::Schrodinger, tg));
        int j = jmin;
        while (std::ldexp(1.0, j) < thresh) ++j;
        auto q = modulation_project(w, j, Surface::Schrodinger, ModMode::AtMost);
        CHECK(st_rel(q, w) <= 0.1);
    }
}

TEST_CASE("kg waves sit on their surface") {
    auto g = make_grid(64.0, 1024);
    const TimeGrid tg{0.0, 1.0 / 8.0, 128};
    // k = 3: the opposite surface is at distance 2<xi> >= 8
    auto F = apply_window(free_wave(random_annular_data(g, 3, 4), Flow::KGPlus, tg));
    auto on = modulation_project(F, 1, Surface::KGPlus, ModMode::AtMost);
    auto off = modulation_project(F, 1, Surface::KGMinus, ModMode::AtMost);
    CHECK(st_rel(on, F) <= 0.1);
    CHECK(spacetime_l2_sq(off) <= 1e-4 * spacetime_l2_sq(F));
}

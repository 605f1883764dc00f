#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>

#include "kgs/estimate_harness.hpp"

using namespace kgs;

namespace {

WindowConfig adaptive(double T) {
    WindowConfig c;
    c.mode = GridMode::Adaptive;
    c.T = T;
    return c;
}

}  // namespace

TEST_CASE("sigma weights reproduce the reference table") {
    const double inf = INFINITY;
    // exponent pair -> weight as printed in the reference table
    struct R {
        double p, q, s;
        Family f;
    };
    const R expect[] = {{inf, 2, 0.0, Family::Schrodinger},   {4, 4, -0.25, Family::Schrodinger}, {8.0 / 3, 3, 0.25, Family::Schrodinger},
                        {2, 6, 0.0, Family::Schrodinger},     {2, 5, 0.1, Family::Schrodinger},   {2, 4, 0.25, Family::Schrodinger},
                        {2, 10.0 / 3, 0.4, Family::Schrodinger}, {inf, 2, 0.0, Family::Wave},     {4, 4, -0.5, Family::Wave},
                        {8.0 / 3, 3, -0.125, Family::Wave}};
    const auto tab = reference_table();
    REQUIRE(tab.size() == 10);
    for (std::size_t i = 0; i < tab.size(); ++i) {
        CHECK(tab[i].pair.p == expect[i].p);
        CHECK(tab[i].pair.family == expect[i].f);
        CHECK(sigma(tab[i].pair) == doctest::Approx(expect[i].s).epsilon(1e-14));
        CHECK(tab[i].sigma == doctest::Approx(expect[i].s).epsilon(1e-14));
    }
    CHECK(LebesguePair{8.0 / 3, 3}.label() == "(8/3,3)");
    CHECK(LebesguePair{inf, 2}.label() == "(inf,2)");
}

TEST_CASE("admissibility") {
    CHECK(admissible({4, 4, Family::Schrodinger}).ok);
    CHECK(admissible({2, 4, Family::Schrodinger}).ok);
    CHECK(admissible({2, 10.0 / 3, Family::Schrodinger}).excluded_endpoint);
    CHECK_FALSE(admissible({2, 3, Family::Schrodinger}).ok);
    CHECK(admissible({4, 4, Family::Wave}).ok);
    CHECK(admissible({2, 4, Family::Wave}).excluded_endpoint);
    CHECK_FALSE(admissible({8.0 / 3, 3, Family::Wave}).ok);  // 3/8 + 2/3 > 1
    CHECK_FALSE(admissible({1.5, 4, Family::Schrodinger}).ok);
}

TEST_CASE("time quadratures") {
    const auto q = composite_quadrature(40.0, 2.0, 64, 1.05);
    CHECK(q.t.front() == doctest::Approx(-40.0));
    CHECK(q.t.back() == doctest::Approx(40.0));
    CHECK(std::is_sorted(q.t.begin(), q.t.end()));
    double W = 0, G = 0;
    for (std::size_t i = 0; i < q.t.size(); ++i) {
        W += q.w[i];
        G += q.w[i] * std::exp(-q.t[i] * q.t[i]);
    }
    CHECK(W == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(G == doctest::Approx(std::sqrt(kPi)).epsilon(1e-4));
    const auto u = uniform_quadrature(3.0, 0.07);
    CHECK(u.t[1] - u.t[0] <= 0.07);
    double Wu = 0;
    for (double w : u.w) Wu += w;
    CHECK(Wu == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("window planning") {
    const auto p = plan_window({{Flow::Schrodinger, 2}}, adaptive(16));
    // dispersal time R / v_lo with R = 8 * 2^-2 and v_lo = 2 * 2^1
    CHECK(p.t_star == doctest::Approx(0.5));
    CHECK(p.t_half == doctest::Approx(8.0));
    CHECK(p.grid->xi_max() >= 2.0 * 8.0);
    CHECK(annulus_nodes(*p.grid, 2) >= 8);
    const auto n1 = p.grid->n + 1;
    std::size_t m = n1;
    while (m % 2 == 0) m /= 2;
    CHECK((m == 1 || m == 3 || m == 5));

    WindowConfig f;
    const auto pf = plan_window({{Flow::Schrodinger, 0}}, f);
    CHECK(pf.grid->r_max == 64.0);
    CHECK(pf.t_half == 8.0);

    WindowConfig capped = adaptive(16);
    capped.t_max = 1.0;
    CHECK(plan_window({{Flow::KGPlus, 0}}, capped).t_half == 1.0);
}

TEST_CASE("wave sampler matches the free wave") {
    auto g = make_grid(40.0, 511);
    const auto d = random_annular_data(g, 1, 5);
    const WaveSampler w(d, Flow::KGPlus);
    TimeGrid tg{-1.0, 0.5, 5};
    const auto F = free_wave(d, Flow::KGPlus, tg);
    CVec v;
    for (std::size_t l = 0; l < tg.n_t; ++l) {
        w.at(tg.t(l), v);
        double e = 0;
        for (std::size_t i = 0; i < v.size(); ++i) e = std::max(e, std::abs(v[i] - F.values[l][i]));
        CHECK(e < 1e-12);
    }
}

TEST_CASE("strichartz energy rows") {
    const auto cfg = adaptive(16);
    const double inf = INFINITY;
    std::vector<StrichartzProbe> pr{{{inf, 2, Family::Schrodinger}, Weight::SigmaS}, {{2, 2, Family::Schrodinger}, Weight::SigmaS}};
    for (int k : {-2, 3}) {
        const auto rows = strichartz_ratio(Flow::Schrodinger, k, pr, 3, 11, cfg);
        CHECK(std::abs(rows[0].ratio - 1.0) <= 1e-10);
        // L2_t L2_x of the windowed wave is ||taper||_{L2}, times 2^{k sigma(2,2)} = 2^{k}
        const double th = rows[1].t_half;
        double tap = 0;
        const int M = 200000;
        for (int i = 0; i <= M; ++i) {
            const double t = -th + 2 * th * i / M;
            const double w = taper_at(t, -th, th);
            tap += w * w * (i == 0 || i == M ? 0.5 : 1.0) * 2 * th / M;
        }
        CHECK(rows[1].ratio == doctest::Approx(std::ldexp(1.0, k) * std::sqrt(tap)).epsilon(2e-3));
        CHECK(rows[0].boundary <= 1e-6);
    }
    WindowConfig bad;
    bad.r_max = 16.0;
    bad.n = 1023;
    CHECK_THROWS_AS(strichartz_ratio(Flow::Schrodinger, 3, pr, 1, 1, bad), reflectivity_error);
}

TEST_CASE("strichartz scaling on the Schrodinger flow") {
    // the same exponents at two octaves stay within a modest factor
    const auto cfg = adaptive(16);
    std::vector<StrichartzProbe> pr{{{4, 4, Family::Schrodinger}, Weight::SigmaS}, {{2, 6, Family::Schrodinger}, Weight::SigmaS}};
    const auto a = strichartz_ratio(Flow::Schrodinger, -2, pr, 4, 1, cfg);
    const auto b = strichartz_ratio(Flow::Schrodinger, 4, pr, 4, 1, cfg);
    for (int i = 0; i < 2; ++i) CHECK(a[i].ratio / b[i].ratio == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("transversality quantities") {
    // two paraboloids: all quantities in closed form
    for (int k1 : {0, 3}) {
        const int k2 = -8;
        const auto d = transversality(BilinearCase::III, k1, k2);
        const double P1 = std::ldexp(1.0, k1), P2 = std::ldexp(1.0, k2);
        const double Vmax = 2 * (2 * P1 + P2) + 2 * (2 * P2);
        CHECK(d.V_max == doctest::Approx(Vmax).epsilon(1e-14));
        CHECK(d.H1 == 2.0);
        CHECK(d.H2 == 2.0);
        // Hessian 2I: |2v ^ w| = 2|w|, minimal |w| at parallel gradients of the extreme radii
        const double wmin = 2 * (P1 / 2 - P2) - 2 * (2 * P2);
        CHECK(d.a1_ratio == doctest::Approx(wmin / Vmax).epsilon(1e-12));
        CHECK(std::isinf(d.a2_curv));
        CHECK(d.a2_pass);
        CHECK(d.h_order);
    }
    const auto d1 = transversality(BilinearCase::I, 0, -10);
    CHECK(d1.H1 == doctest::Approx(1.0 / std::sqrt(1.0 + std::pow(0.5 - std::ldexp(1.0, -10), 2))).epsilon(1e-14));
    CHECK(d1.d0 == std::ldexp(1.0, -10));
    CHECK_FALSE(d1.h_order);
    CHECK(d1.a1_pass);
    CHECK(d1.a2_pass);
    // fourth derivative of <x> at the origin along a line is -3 and the Hessian sup is 1
    const auto d2 = transversality(BilinearCase::II, 5, -12);
    CHECK(d2.H1 == 1.0);
    CHECK(d2.a2_curv <= std::sqrt(1.0 / 3.0) + 1e-12);
    CHECK(d2.V_max / d2.V_scale == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("slope fit") {
    std::vector<double> x{-3, -2, -1, 0}, y;
    for (double v : x) y.push_back(3.0 * std::pow(2.0, 0.37 * v));
    CHECK(log2_slope(x, y) == doctest::Approx(0.37).epsilon(1e-12));
    CHECK_THROWS(log2_slope({1.0}, {1.0}));
}

TEST_CASE("bilinear ratio: coefficients and determinism") {
    auto cfg = adaptive(2);
    const auto a = bilinear_ratio(BilinearCase::III, 3, 0, 2, 9, cfg);
    const auto b = bilinear_ratio(BilinearCase::III, 3, 0, 2, 9, cfg);
    CHECK(a.raw > 0);
    CHECK(a.raw == b.raw);
    CHECK(a.coefficient == 1.0);
    CHECK(a.normalized == a.raw);
    const auto c = bilinear_ratio(BilinearCase::II, -2, 2, 1, 9, cfg);
    CHECK(c.coefficient == doctest::Approx(std::pow(2.0, -2.0 / 12 - 2.0 / 3)));
    CHECK(c.control == doctest::Approx(c.raw / std::pow(2.0, -2.0 / 12)));
    CHECK(c.boundary <= 1e-6);
}

TEST_CASE("trilinear: support incompatibility and the KG pairing") {
    CHECK_FALSE(annuli_compatible(6, 0, 0));
    CHECK(annuli_compatible(2, 2, 2));
    CHECK(annuli_compatible(0, -11, 0));
    auto cfg = adaptive(4);
    const auto z = trilinear(TrilinearKind::Schrodinger, 5, 0, 0, 1, 3, cfg);
    CHECK_FALSE(z.compatible);
    CHECK(z.relative <= 1e-8);

    // KG pairing recomputed in physical space with the Bessel multiplier
    const int k = 1, k1 = 2, k2 = 2;
    const std::uint64_t seed = 21;
    const auto row = trilinear(TrilinearKind::KleinGordon, k, k1, k2, 1, seed, cfg);
    WindowConfig wc = cfg;
    wc.t_max = 8.0;
    const auto plan = plan_window({{Flow::KGPlus, k}, {Flow::Schrodinger, k1}, {Flow::Schrodinger, k2}}, wc);
    const auto dN = random_annular_data(plan.grid, k, derive_seed(seed, {10, k, k1, k2, 0}), plan.loc_radius[0]);
    const auto d1 = random_annular_data(plan.grid, k1, derive_seed(seed, {11, k, k1, k2, 0}), plan.loc_radius[1]);
    const auto d2 = random_annular_data(plan.grid, k2, derive_seed(seed, {12, k, k1, k2, 0, 0}), plan.loc_radius[2]);
    const std::size_t steps = static_cast<std::size_t>(std::llround(2 * row.t_half / row.dt));
    TimeGrid tg{-row.t_half, row.dt, steps + 1};
    const auto N = free_wave(dN, Flow::KGPlus, tg), U1 = free_wave(d1, Flow::Schrodinger, tg), U2 = free_wave(d2, Flow::Schrodinger, tg);
    const RadialGrid& g = *plan.grid;
    cplx I = 0;
    for (std::size_t l = 0; l < tg.n_t; ++l) {
        RadialField P(plan.grid);
        for (std::size_t i = 0; i < g.n; ++i) P.values[i] = U1.values[l][i] * std::conj(U2.values[l][i]);
        const auto Q = apply_multiplier(P, MultiplierSymbol::bessel(-1.0));
        cplx s = 0;
        for (std::size_t i = 0; i < g.n; ++i) s += Q.values[i] * std::conj(N.values[l][i]) * g.r(i) * g.r(i);
        const double tw = (l == 0 || l + 1 == tg.n_t) ? 0.5 : 1.0;
        I += s * 4.0 * kPi * g.dr * tg.dt * tw * taper_at(tg.t(l), -row.t_half, row.t_half);
    }
    CHECK(row.raw == doctest::Approx(std::abs(I)).epsilon(1e-9));
    CHECK(row.coefficient == doctest::Approx(1.0 / std::sqrt(5.0)));
}

TEST_CASE("trilinear atom mode") {
    auto cfg = adaptive(4);
    TrilinearOptions o;
    o.atom_mode = true;
    o.atom_steps = 3;
    const auto r = trilinear(TrilinearKind::Schrodinger, 3, 3, 3, 2, 4, cfg, o);
    CHECK(r.raw > 0);
    // the V2 lower bound of a normalized atom is at most sqrt(2)
    CHECK(r.v2_normalized >= r.normalized / std::sqrt(2.0) - 1e-15);
}

TEST_CASE("summation sums") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    const int L = 14, gap = 3;
    std::vector<double> x(L), y(L), z(L);
    for (int i = 0; i < L; ++i) {
        x[i] = u(rng);
        y[i] = u(rng);
        z[i] = u(rng);
    }
    double direct = 0;
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b)
            for (int c = 0; c < L; ++c) {
                const int mx = std::max({a, b, c}), mn = std::min({a, b, c}), md = a + b + c - mx - mn;
                if (mx - md <= gap) direct += std::pow(2.0, -0.3 * mn) * x[a] * y[b] * z[c];
            }
    CHECK(summation_sum(x, y, z, 0.3, gap) == doctest::Approx(direct).epsilon(1e-13));

    // every triple counts when L <= gap + 1: constant unit sequences give L^{3/2}
    const auto s = summation_check(0.0, 8, 3, 1);
    CHECK(s.triples == 512);
    CHECK(s.constant_seq == doctest::Approx(std::pow(8.0, 1.5)).epsilon(1e-13));
    CHECK(summation_check(0.1, 12, 50, 2).C == summation_check(0.1, 12, 50, 2).C);
}

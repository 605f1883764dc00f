#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kgs/function_norms.hpp"

using namespace kgs;

namespace {

RadialField random_field(const GridPtr& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    CVec v(g->n);
    for (std::size_t i = 0; i < g->n; ++i) v[i] = cplx(nd(rng), nd(rng)) * std::exp(-g->r(i) / 2.0);
    return RadialField(g, v);
}

SpaceTimeField constant_field(const RadialField& f, const TimeGrid& tg) {
    SpaceTimeField F;
    F.grid = f.grid;
    F.times = tg;
    F.values.assign(tg.n_t, f.values);
    return F;
}

std::vector<std::vector<double>> scalar_distances(const std::vector<double>& x) {
    std::vector<std::vector<double>> d(x.size(), std::vector<double>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) d[i][j] = std::abs(x[i] - x[j]);
    return d;
}

}  // namespace

TEST_CASE("mixed norms") {
    auto g = make_grid(16.0, 256);
    const TimeGrid tg{0.0, 0.125, 32};
    auto f = random_field(g, 1);
    SpaceTimeField Z = constant_field(RadialField(g), tg);
    CHECK(mixed_norm(Z, 2, 2) == 0.0);
    auto C = constant_field(f, tg);
    const double T = tg.n_t * tg.dt;
    for (auto [p, q] : {std::pair{2.0, 2.0}, std::pair{4.0, 4.0}, std::pair{8.0 / 3.0, 3.0}})
        CHECK(mixed_norm(C, p, q) == doctest::Approx(std::pow(T, 1 / p) * lq_norm(f, q)).epsilon(1e-12));
    CHECK(mixed_norm(C, INFINITY, 2) == doctest::Approx(lq_norm(f, 2)));
    CHECK_THROWS(mixed_norm(C, 0.5, 2));
    CHECK_THROWS(mixed_norm(C, 2, 0.9));

    auto A = free_wave(random_field(g, 2), Flow::Schrodinger, tg);
    auto B = free_wave(random_field(g, 3), Flow::KGPlus, tg);
    SpaceTimeField P = A;
    for (std::size_t l = 0; l < tg.n_t; ++l)
        for (std::size_t i = 0; i < g->n; ++i) P.values[l][i] = A.values[l][i] * B.values[l][i];
    CHECK(mixed_norm(P, 1, 1) <= mixed_norm(A, 2, 2) * mixed_norm(B, 2, 2) * (1 + 1e-10));
}

TEST_CASE("sobolev norms") {
    auto g = make_grid(kPi * 32, 1024);  // xi_m = (m+1)/32, so m = 31 sits at xi = 1
    auto f = random_field(g, 4);
    CHECK(std::abs(sobolev_norm(f, 0) - lq_norm(f, 2)) <= 1e-12 * lq_norm(f, 2));
    FrequencyField e(g);
    e.coeffs[31] = 1.0;
    auto mode = inverse_transform(e);
    for (auto& z : mode.values) z /= lq_norm(inverse_transform(e), 2);
    CHECK(sobolev_norm(mode, 1.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    double prev = 0;
    for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
        const double v = sobolev_norm(f, s);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("xsb norm") {
    auto g = make_grid(64.0, 1024);
    const TimeGrid tg{0.0, 1.0 / 8.0, 128};
    auto zero = apply_window(constant_field(RadialField(g), tg));
    CHECK(xsb_norm(zero, 0.5, Surface::Schrodinger).value == 0.0);

    auto data = random_annular_data(g, 1, 3);
    auto F = apply_window(free_wave(data, Flow::Schrodinger, tg));
    auto r0 = xsb_norm(F, 0.0, Surface::Schrodinger);
    CHECK(r0.value <= std::sqrt(spacetime_l2_sq(F)) * (1 + 1e-10));

    // Oracle: ||Q_j F||^2 = dt ||data||^2 (1/n_t) sum_p |w^(tau_p)|^2 rho_j(tau_p)^2,
    // with w^ evaluated by direct summation.
    auto r = xsb_norm(F, 0.5, Surface::Schrodinger);
    const double T = tg.n_t * tg.dt;
    double oracle = 0;
    int oracle_j = 0;
    for (int j = r.j_min; j <= r.j_max; ++j) {
        double s = 0;
        for (long p = -64; p < 64; ++p) {
            const double tau = 2 * kPi * p / T;
            cplx W = 0;
            for (std::size_t l = 0; l < tg.n_t; ++l) W += taper_at(tg.t(l), tg.t0, tg.t_end()) * std::polar(1.0, -tau * tg.t(l));
            const double prof = j == r.j_min ? rho0(std::ldexp(tau, -j)) : rho_k(j, tau);
            s += std::norm(W) * prof * prof;
        }
        const double v = std::pow(2.0, 0.5 * j) * std::sqrt(tg.dt * s / tg.n_t) * lq_norm(data, 2);
        if (v > oracle) {
            oracle = v;
            oracle_j = j;
        }
    }
    MESSAGE("xsb " << r.value << " oracle " << oracle << " argmax " << r.argmax_j << " j_min " << r.j_min);
    CHECK(r.value / oracle <= 2.0);
    CHECK(r.value / oracle >= 0.5);
    CHECK(r.argmax_j == oracle_j);
    CHECK(r.argmax_j <= r.j_min + 1);
}

TEST_CASE("p-variation basics") {
    CHECK_THROWS(p_variation_from_distances({}, 2));
    CHECK(p_variation_from_distances(scalar_distances({3, 3, 3, 3}), 2) == 0.0);
    CHECK(p_variation_from_distances(scalar_distances({0, 1, 0}), 2) == doctest::Approx(std::sqrt(2.0)));
    CHECK(p_variation_bruteforce(scalar_distances({0, 1, 0}), 2) == doctest::Approx(std::sqrt(2.0)));
    CHECK(p_variation_from_distances(scalar_distances({0, 0, 0, 0.7, 0.7, 0.7}), 2) == doctest::Approx(0.7));
    // (0,1,0) as multiples of a unit field
    auto g = make_grid(8.0, 64);
    auto u = random_field(g, 5);
    const double n = lq_norm(u, 2);
    for (auto& z : u.values) z /= n;
    RadialField zero(g);
    CHECK(p_variation(std::vector<RadialField>{zero, u, zero}, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("p-variation DP equals exhaustive enumeration") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> len(1, 12);
    auto g = make_grid(4.0, 16);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = len(rng);
        std::vector<CVec> x(n, CVec(g->n));
        for (auto& v : x)
            for (auto& z : v) z = {nd(rng), nd(rng)};
        const double p = trial % 3 == 0 ? 1.0 : (trial % 3 == 1 ? 2.0 : 3.0);
        std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
        CVec diff(g->n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                for (std::size_t m = 0; m < g->n; ++m) diff[m] = x[j][m] - x[i][m];
                d[i][j] = lq_norm_raw(*g, diff, 2.0);
            }
        const double dp = p_variation_from_distances(d, p);
        const double bf = p_variation_bruteforce(d, p);
        REQUIRE(std::abs(dp - bf) <= 1e-12 * std::max(1.0, bf));
        CHECK(std::abs(p_variation(*g, x, p) - dp) <= 1e-12 * std::max(1.0, dp));
        // random partitions never beat the DP
        std::bernoulli_distribution coin(0.5);
        for (int rs = 0; rs < 5 && n > 1; ++rs) {
            double s = 0;
            int prev = 0;
            for (int i = 1; i < n - 1; ++i)
                if (coin(rng)) {
                    s += std::pow(d[prev][i], p);
                    prev = i;
                }
            s += std::pow(d[prev][n - 1], p);
            CHECK(std::pow(s, 1 / p) <= dp * (1 + 1e-12));
        }
    }
}

TEST_CASE("atoms and V2") {
    auto g = make_grid(32.0, 512);
    const TimeGrid tg{0.0, 0.125, 64};
    auto data = random_annular_data(g, 0, 7);

    auto fw = free_wave(data, Flow::Schrodinger, tg);
    CHECK(v2_norm(fw, Flow::Schrodinger) <= 1e-12);

    // K = 2: zero then the free wave from t_1 on
    auto a = build_atom({2.0}, {RadialField(g), data}, Flow::Schrodinger, tg);
    for (std::size_t l = 0; l < tg.n_t; ++l) {
        if (tg.t(l) < 2.0) {
            CHECK(lq_norm_raw(*g, a.field.values[l], 2) == 0.0);
        } else {
            CVec d(g->n);
            for (std::size_t i = 0; i < g->n; ++i) d[i] = a.field.values[l][i] - fw.values[l][i];
            CHECK(lq_norm_raw(*g, d, 2) <= 1e-12);
        }
    }
    CHECK(v2_norm(a.field, Flow::Schrodinger) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_THROWS(build_atom({1.0}, {RadialField(g), RadialField(g)}, Flow::Schrodinger, tg));
    CHECK_THROWS(build_atom({1.0}, {data, data}, Flow::Schrodinger, tg));  // phi_1 != 0

    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> kdist(2, 16);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int K = kdist(rng);
        std::vector<double> part;
        std::uniform_real_distribution<double> ud(0.0, tg.t_end());
        while (static_cast<int>(part.size()) < K - 1) {
            // jump points on grid nodes so the grid-restricted V^2 is exact
            const double t = std::round(ud(rng) / tg.dt) * tg.dt;
            if (std::find(part.begin(), part.end(), t) == part.end()) part.push_back(t);
        }
        std::sort(part.begin(), part.end());
        std::vector<RadialField> pieces{RadialField(g)};
        for (int k = 1; k < K; ++k) pieces.push_back(random_field(g, 1000 + trial * 20 + k));
        const Flow fl = trial % 2 ? Flow::KGPlus : Flow::Schrodinger;
        auto at = build_atom(part, pieces, fl, tg);
        double tot = 0;
        for (auto& p : at.decomp.pieces) tot += std::pow(lq_norm(p, 2), 2);
        CHECK(std::abs(tot - 1.0) <= 1e-12);
        const double v2 = v2_norm(at.field, fl);
        worst = std::max(worst, v2);
        CHECK(v2 <= 2.0);
        CHECK(v2 <= 2.0 * at.decomp.u2_upper());
        if (trial < 10) {
            SpaceTimeField cf = at.field;
            for (auto& v : cf.values)
                for (auto& z : v) z = std::conj(z);
            CHECK(std::abs(v2_norm(cf, fl, true) - v2) <= 1e-12);
        }
    }
    MESSAGE("largest V2 over random atoms: " << worst);
}

TEST_CASE("xsb stability under time refinement") {
    auto g = make_grid(32.0, 512);
    auto data = random_annular_data(g, 0, 12);
    std::vector<double> vals;
    for (std::size_t nt : {128u, 256u}) {
        const TimeGrid tg{0.0, 16.0 / nt, nt};
        auto at = build_atom({4.0, 8.0}, {RadialField(g), data, apply_multiplier(data, MultiplierSymbol::bessel(-1))},
                             Flow::Schrodinger, tg);
        auto r = xsb_norm(apply_window(at.field), 0.5, Surface::Schrodinger);
        CHECK(std::isfinite(r.value));
        vals.push_back(r.value);
    }
    MESSAGE("xsb atom n_t=128: " << vals[0] << " n_t=256: " << vals[1]);
    CHECK(std::abs(vals[1] / vals[0] - 1) <= 0.05);
}

TEST_CASE("Z^s upper bound") {
    auto g = make_grid(8.0, 64);
    AtomicDecomposition d;
    d.pieces = {RadialField(g)};
    CHECK(z_norm_upper({{0, d}}, 3.7) == doctest::Approx(1.0));
    CHECK(z_norm_upper({{0, d}, {1, d}}, 1.0) == doctest::Approx(std::sqrt(5.0)));
    CHECK(z_norm_upper({{-12, d}, {-11, d}, {0, d}}, 1.0) == doctest::Approx(3.0));
    CHECK_THROWS(z_norm_upper({}, 1.0));
}

TEST_CASE("regularity parameters") {
    RegularityParams ok{0.0, 0.0, 0.1, 0.01};
    CHECK_NOTHROW(ok.validate());
    CHECK_THROWS(RegularityParams{0.0, -0.6, 0.1, 0.01}.validate());
    CHECK_THROWS(RegularityParams{0.0, 2.0, 0.1, 0.01}.validate());
    CHECK_THROWS(RegularityParams{0.0, 0.0, 0.3, 0.01}.validate());
    CHECK_THROWS(RegularityParams{-1.0, 0.0, 0.1, 0.01}.validate());
}

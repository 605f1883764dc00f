#include "kgs/resonance_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kgs {

double ResonancePoint::d() const { return std::sqrt(std::max(0.0, a * a + b * b - 2.0 * a * b * c)); }

const char* resfn_name(ResFn f) {
    switch (f) {
        case ResFn::PhiPlus: return "phi+";
        case ResFn::PhiMinus: return "phi-";
        case ResFn::Psi: return "psi";
    }
    return "?";
}

double phi(const ResonancePoint& p, int sign) {
    // a^2 -+ <b> - (a^2 + b^2 - 2abc)
    return -static_cast<double>(sign >= 0 ? 1 : -1) * std::sqrt(1.0 + p.b * p.b) - p.b * p.b + 2.0 * p.a * p.b * p.c;
}

double psi(const ResonancePoint& p) { return std::sqrt(1.0 + p.a * p.a) - p.a * p.a + 2.0 * p.a * p.b * p.c; }

double eval_abd(ResFn f, double a, double b, double d) {
    switch (f) {
        case ResFn::PhiPlus: return a * a - std::sqrt(1.0 + b * b) - d * d;
        case ResFn::PhiMinus: return a * a + std::sqrt(1.0 + b * b) - d * d;
        case ResFn::Psi: return std::sqrt(1.0 + a * a) - d * d + b * b;
    }
    return 0.0;
}

Interval Interval::annulus(int k) { return {std::ldexp(1.0, k - 1), std::ldexp(1.0, k + 1)}; }
Interval Interval::ball(int k) { return {0.0, std::ldexp(1.0, k + 1)}; }

namespace {

// Outer pair (x, y) scanned on a box, inner z on its triangle-admissible range.
struct Layout {
    int ix, iy, iz;  // indices into (a, b, d)
};

Layout choose_layout(const RegionSpec& r) {
    if (r.a.bounded() && r.b.bounded()) return {0, 1, 2};
    if (r.a.bounded() && r.d.bounded()) return {0, 2, 1};
    if (r.b.bounded() && r.d.bounded()) return {1, 2, 0};
    throw std::invalid_argument("region_min_abs: at least two of |xi|, |eta|, |xi-eta| must be bounded");
}

}  // namespace

MinResult region_min_abs(ResFn f, const RegionSpec& region) {
    if (region.resolution < 2) throw std::invalid_argument("region_min_abs: resolution must be >= 2");
    const Interval iv[3] = {region.a, region.b, region.d};
    const Layout L = choose_layout(region);
    const Interval X = iv[L.ix], Y = iv[L.iy], Z = iv[L.iz];
    for (const auto& I : iv)
        if (I.lo < 0.0 || I.hi < I.lo) throw std::invalid_argument("region_min_abs: bad interval");

    const int N = region.resolution;
    MinResult res;
    double box[3][2] = {{0, 1}, {0, 1}, {0, 1}};
    double best_u[3] = {0.5, 0.5, 0.5};

    for (int round = 0; round <= region.refinements; ++round) {
        if (round > 0) {
            const double half = 0.5 * std::pow(10.0, -round);
            for (int c = 0; c < 3; ++c) {
                box[c][0] = std::max(0.0, best_u[c] - half);
                box[c][1] = std::min(1.0, best_u[c] + half);
            }
        }
        for (int i = 0; i < N; ++i) {
            const double u = box[0][0] + (box[0][1] - box[0][0]) * i / (N - 1);
            const double x = X.lo + u * (X.hi - X.lo);
            for (int j = 0; j < N; ++j) {
                const double v = box[1][0] + (box[1][1] - box[1][0]) * j / (N - 1);
                const double y = Y.lo + v * (Y.hi - Y.lo);
                const double zl = std::max(Z.lo, std::abs(x - y));
                const double zh = std::min(Z.hi, x + y);
                if (zl > zh) continue;
                for (int l = 0; l < N; ++l) {
                    const double w = box[2][0] + (box[2][1] - box[2][0]) * l / (N - 1);
                    const double z = zl + w * (zh - zl);
                    double abd[3];
                    abd[L.ix] = x;
                    abd[L.iy] = y;
                    abd[L.iz] = z;
                    const double val = std::abs(eval_abd(f, abd[0], abd[1], abd[2]));
                    if (val < res.min_abs) {
                        res.min_abs = val;
                        res.feasible = true;
                        best_u[0] = u;
                        best_u[1] = v;
                        best_u[2] = w;
                        res.arg.a = abd[0];
                        res.arg.b = abd[1];
                        res.arg_d = abd[2];
                    }
                }
            }
        }
        if (!res.feasible) break;
    }
    if (res.feasible) {
        const double a = res.arg.a, b = res.arg.b, d = res.arg_d;
        res.arg.c = (a > 0.0 && b > 0.0) ? std::clamp((a * a + b * b - d * d) / (2.0 * a * b), -1.0, 1.0) : 0.0;
    }
    return res;
}

const char* lemma_case_name(LemmaCase c) {
    switch (c) {
        case LemmaCase::Sch_i: return "sch-i";
        case LemmaCase::Sch_ii: return "sch-ii";
        case LemmaCase::Sch_iii: return "sch-iii";
        case LemmaCase::KG_i: return "kg-i";
        case LemmaCase::KG_ii: return "kg-ii";
        case LemmaCase::KG_ii_swap: return "kg-ii-swap";
        case LemmaCase::KG_ii_literal: return "kg-ii-literal-swap";
    }
    return "?";
}

LemmaCase parse_lemma_case(const std::string& s) {
    for (LemmaCase c : {LemmaCase::Sch_i, LemmaCase::Sch_ii, LemmaCase::Sch_iii, LemmaCase::KG_i, LemmaCase::KG_ii,
                        LemmaCase::KG_ii_swap, LemmaCase::KG_ii_literal})
        if (s == lemma_case_name(c)) return c;
    throw std::invalid_argument("unknown lemma case '" + s + "'");
}

namespace {

LemmaRow run_row(const std::string& tag, ResFn fn, int sign, const RegionSpec& reg) {
    LemmaRow row;
    row.tag = tag;
    row.sign = sign;
    const auto m = region_min_abs(fn, reg);
    row.feasible = m.feasible;
    if (!m.feasible) {
        row.status = "infeasible";
        row.min_abs = NAN;
        return row;
    }
    row.min_abs = m.min_abs;
    row.arg = m.arg;
    return row;
}

}  // namespace

std::vector<LemmaRow> verify_lemma(const LemmaSweep& sw) {
    std::vector<LemmaRow> rows;
    const std::string tag = lemma_case_name(sw.which);
    auto region = [&](Interval a, Interval b, Interval d) {
        RegionSpec r{a, b, d, sw.resolution, sw.refinements};
        return r;
    };
    const bool is_phi = sw.which == LemmaCase::Sch_i || sw.which == LemmaCase::Sch_ii || sw.which == LemmaCase::Sch_iii;
    const std::vector<std::pair<ResFn, int>> fns =
        is_phi ? std::vector<std::pair<ResFn, int>>{{ResFn::PhiPlus, +1}, {ResFn::PhiMinus, -1}}
               : std::vector<std::pair<ResFn, int>>{{ResFn::Psi, 0}};

    if (sw.which == LemmaCase::Sch_i || sw.which == LemmaCase::KG_i) {
        for (int x : sw.first)
            for (int y : sw.second)
                for (auto [fn, sign] : fns) {
                    LemmaRow row;
                    if (sw.which == LemmaCase::Sch_i) {
                        row = run_row(tag, fn, sign, region(Interval::annulus(y), Interval::annulus(x), Interval::any()));
                        row.k = x;
                        row.k1 = y;
                    } else {
                        row = run_row(tag, fn, sign, region(Interval::annulus(x), Interval::any(), Interval::annulus(y)));
                        row.k1 = x;
                        row.k2 = y;
                    }
                    row.bound = 0.5;
                    if (row.feasible) {
                        row.c0 = row.min_abs;
                        row.margin = row.min_abs - row.bound;
                        row.status = row.margin >= 0.0 ? "pass" : "fail";
                    }
                    rows.push_back(row);
                }
        return rows;
    }

    // scaling cases
    for (int x : sw.first)
        for (auto [fn, sign] : fns) {
            LemmaRow row;
            switch (sw.which) {
                case LemmaCase::Sch_ii:
                    row = run_row(tag, fn, sign, region(Interval::annulus(x - sw.gap), Interval::annulus(x), Interval::any()));
                    row.k = x;
                    row.k1 = x - sw.gap;
                    break;
                case LemmaCase::Sch_iii:
                    row = run_row(tag, fn, sign, region(Interval::annulus(x), Interval::annulus(x), Interval::annulus(x - sw.gap)));
                    row.k = x;
                    row.k1 = x;
                    row.k2 = x - sw.gap;
                    break;
                case LemmaCase::KG_ii:
                    row = run_row(tag, fn, sign, region(Interval::annulus(x), Interval::any(), Interval::annulus(x - sw.gap)));
                    row.k1 = x;
                    row.k2 = x - sw.gap;
                    break;
                case LemmaCase::KG_ii_swap:
                    row = run_row(tag, fn, sign, region(Interval::annulus(x), Interval::annulus(x - sw.gap), Interval::any()));
                    row.k1 = x;
                    row.k2 = x - sw.gap;
                    break;
                case LemmaCase::KG_ii_literal:
                    row = run_row(tag, fn, sign, region(Interval::annulus(x - sw.gap), Interval::any(), Interval::annulus(x)));
                    row.k1 = x;
                    row.k2 = x - sw.gap;
                    break;
                default: break;
            }
            row.scale = std::ldexp(1.0, 2 * x);
            if (row.feasible) row.c0 = row.min_abs / row.scale;
            rows.push_back(row);
        }

    for (auto [fn, sign] : fns) {
        std::vector<double> c0s;
        for (const auto& r : rows)
            if (r.sign == sign && r.feasible) c0s.push_back(r.c0);
        if (c0s.empty()) continue;
        std::sort(c0s.begin(), c0s.end());
        const std::size_t n = c0s.size();
        const double med = n % 2 ? c0s[n / 2] : 0.5 * (c0s[n / 2 - 1] + c0s[n / 2]);
        for (auto& r : rows) {
            if (r.sign != sign || !r.feasible) continue;
            r.bound = (1.0 - sw.stability) * med * r.scale;
            r.margin = r.min_abs - r.bound;
            const bool stable = med > 0.0 && std::abs(r.c0 / med - 1.0) <= sw.stability;
            if (sw.which == LemmaCase::KG_ii_literal)
                r.status = "info";
            else
                r.status = stable ? "pass" : "fail";
        }
    }
    return rows;
}

}  // namespace kgs

#include "kgs/estimate_harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace kgs {

// ---- Lebesgue pairs ---------------------------------------------------------------

const char* family_name(Family f) { return f == Family::Schrodinger ? "schrodinger" : "wave"; }

namespace {

std::string exponent_label(double x) {
    if (std::isinf(x)) return "inf";
    // small denominators cover every exponent in use
    for (int d = 1; d <= 12; ++d) {
        const double nnum = x * d;
        if (std::abs(nnum - std::round(nnum)) < 1e-9) {
            std::ostringstream os;
            os << static_cast<long>(std::round(nnum));
            if (d > 1) os << '/' << d;
            return os.str();
        }
    }
    std::ostringstream os;
    os << x;
    return os.str();
}

double inv(double x) { return std::isinf(x) ? 0.0 : 1.0 / x; }

bool close(double a, double b) { return std::abs(a - b) < 1e-12 || (std::isinf(a) && std::isinf(b)); }

}  // namespace

std::string LebesguePair::label() const { return "(" + exponent_label(p) + "," + exponent_label(q) + ")"; }

double sigma_S(double p, double q) { return 2.0 * inv(p) + 3.0 * inv(q) - 1.5; }
double sigma_W(double p, double q) { return inv(p) + 3.0 * inv(q) - 1.5; }
double sigma(const LebesguePair& pr) { return pr.family == Family::Schrodinger ? sigma_S(pr.p, pr.q) : sigma_W(pr.p, pr.q); }

Admissibility admissible(const LebesguePair& pr) {
    Admissibility a;
    if (!(pr.p >= 2.0) || !(pr.q >= 2.0) || std::isinf(pr.q)) {
        a.reason = "need 2 <= p <= inf and 2 <= q < inf";
        return a;
    }
    if (pr.family == Family::Schrodinger) {
        if (close(pr.p, 2.0) && close(pr.q, 10.0 / 3.0)) {
            a.excluded_endpoint = true;
            a.reason = "excluded endpoint (2,10/3)";
            return a;
        }
        a.ok = 2.0 * inv(pr.p) + 5.0 * inv(pr.q) <= 2.5 + 1e-12;
        if (!a.ok) a.reason = "2/p + 5/q > 5/2";
    } else {
        if (close(pr.p, 2.0) && close(pr.q, 4.0)) {
            a.excluded_endpoint = true;
            a.reason = "excluded endpoint (2,4)";
            return a;
        }
        a.ok = inv(pr.p) + 2.0 * inv(pr.q) <= 1.0 + 1e-12;
        if (!a.ok) a.reason = "1/p + 2/q > 1";
    }
    return a;
}

std::vector<TableRow> reference_table() {
    const double inf = std::numeric_limits<double>::infinity();
    const auto S = Family::Schrodinger, W = Family::Wave;
    return {
        {{inf, 2, S}, 0.0},         {{4, 4, S}, -0.25},   {{8.0 / 3, 3, S}, 0.25}, {{2, 6, S}, 0.0},
        {{2, 5, S}, 0.1},           {{2, 4, S}, 0.25},    {{2, 10.0 / 3, S}, 0.4}, {{inf, 2, W}, 0.0},
        {{4, 4, W}, -0.5},          {{8.0 / 3, 3, W}, -0.125},
    };
}

// ---- windows ------------------------------------------------------------------------------------

std::pair<double, double> velocity_range(Flow flow, int k) {
    return {group_velocity(flow, std::ldexp(1.0, k - 1)), group_velocity(flow, std::ldexp(1.0, k + 1))};
}

namespace {

// n + 1 = 2^a * {1, 3, 5}: sizes FFTW handles quickly
std::size_t good_size(double need) {
    std::size_t best = 0;
    for (std::size_t f : {1, 3, 5}) {
        std::size_t m = f;
        while (static_cast<double>(m - 1) < need) m *= 2;
        if (best == 0 || m - 1 < best) best = m - 1;
    }
    return std::max<std::size_t>(best, 16);
}

}  // namespace

WindowPlan plan_window(const std::vector<WaveSpec>& waves, const WindowConfig& cfg) {
    if (waves.empty()) throw std::invalid_argument("plan_window: no waves");
    if (!(cfg.T > 0.0)) throw std::invalid_argument("plan_window: T must be positive");
    WindowPlan plan;
    const std::size_t nw = waves.size();
    std::vector<double> vlo(nw), vhi(nw);
    int kmax = waves[0].k, kmin = waves[0].k;
    for (std::size_t i = 0; i < nw; ++i) {
        plan.loc_radius.push_back(cfg.loc * std::ldexp(1.0, -waves[i].k));
        std::tie(vlo[i], vhi[i]) = velocity_range(waves[i].flow, waves[i].k);
        kmax = std::max(kmax, waves[i].k);
        kmin = std::min(kmin, waves[i].k);
    }
    // first separation time over pairs with disjoint speed ranges, else slowest dispersal
    double ts = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nw; ++i)
        for (std::size_t j = 0; j < nw; ++j)
            if (i != j && vlo[i] > vhi[j])
                ts = std::min(ts, (plan.loc_radius[i] + plan.loc_radius[j]) / (vlo[i] - vhi[j]));
    if (std::isinf(ts)) {
        ts = 0.0;
        for (std::size_t i = 0; i < nw; ++i) ts = std::max(ts, plan.loc_radius[i] / vlo[i]);
    }
    plan.t_star = ts;

    if (cfg.mode == GridMode::Fixed) {
        plan.grid = make_grid(cfg.r_max, cfg.n);
        plan.t_half = 0.5 * cfg.T;
        return plan;
    }
    plan.t_half = std::min(cfg.T * ts, cfg.t_max);
    double r_max = 0.0;
    for (std::size_t i = 0; i < nw; ++i) {
        const double front = plan.loc_radius[i] + vhi[i] * plan.t_half;
        r_max = std::max(r_max, std::max(1.3 * front, (front + 6.0 * plan.loc_radius[i]) / 0.9));
    }
    r_max = std::max(r_max, 1.05 * 8.0 * kPi * std::ldexp(1.0, -kmin));  // >= 8 nodes in the lowest annulus
    const double need = 2.0 * std::ldexp(1.0, kmax + 1) * r_max / kPi;
    plan.grid = make_grid(r_max, good_size(need));
    return plan;
}

TimeQuadrature composite_quadrature(double t_half, double t_core, int n_core, double ratio) {
    if (!(t_half > 0.0) || n_core < 2 || !(ratio > 1.0)) throw std::invalid_argument("composite_quadrature: bad parameters");
    t_core = std::min(t_core, t_half);
    std::vector<double> pos;  // t >= 0 nodes
    const double h = t_core / n_core;
    for (int i = 0; i <= n_core; ++i) pos.push_back(i * h);
    double t = t_core;
    while (t < t_half) {
        t = std::min(t_half, std::max(t * ratio, t + h));
        pos.push_back(t);
    }
    if (t_half - pos[pos.size() - 2] < 1e-9 * t_half && pos.size() > 2) pos.erase(pos.end() - 2);
    TimeQuadrature q;
    for (std::size_t i = pos.size(); i-- > 1;) q.t.push_back(-pos[i]);
    for (double x : pos) q.t.push_back(x);
    q.w.assign(q.t.size(), 0.0);
    for (std::size_t i = 0; i + 1 < q.t.size(); ++i) {
        const double d = 0.5 * (q.t[i + 1] - q.t[i]);
        q.w[i] += d;
        q.w[i + 1] += d;
    }
    return q;
}

TimeQuadrature uniform_quadrature(double t_half, double dt_max) {
    if (!(t_half > 0.0) || !(dt_max > 0.0)) throw std::invalid_argument("uniform_quadrature: bad parameters");
    const std::size_t steps = static_cast<std::size_t>(std::ceil(2.0 * t_half / dt_max));
    const double dt = 2.0 * t_half / static_cast<double>(steps);
    TimeQuadrature q;
    for (std::size_t i = 0; i <= steps; ++i) {
        q.t.push_back(-t_half + i * dt);
        q.w.push_back((i == 0 || i == steps) ? 0.5 * dt : dt);
    }
    return q;
}

WaveSampler::WaveSampler(const RadialField& data, Flow flow) : grid_(data.grid), flow_(flow) {
    data.check();
    forward_raw(*grid_, data.values, hat_);
    omega_.resize(grid_->n);
    for (std::size_t m = 0; m < grid_->n; ++m) omega_[m] = flow_symbol(flow, grid_->xi(m));
}

void WaveSampler::at(double t, CVec& out) const {
    CVec c(hat_.size());
    for (std::size_t m = 0; m < c.size(); ++m) c[m] = hat_[m] * std::polar(1.0, t * omega_[m]);
    inverse_raw(*grid_, c, out);
}

namespace {

double end_boundary(const WaveSampler& w, double t_half) {
    CVec v;
    double worst = 0.0;
    for (double t : {-t_half, t_half}) {
        w.at(t, v);
        worst = std::max(worst, boundary_fraction(w.grid(), v, 0.9));
    }
    return worst;
}

void check_reflect(double b, double tol, const char* who) {
    if (b > tol) {
        std::ostringstream os;
        os << who << ": boundary energy fraction " << b << " exceeds " << tol << " (grid too small for the window)";
        throw reflectivity_error(os.str());
    }
}

}  // namespace

// ---- Strichartz ---------------------------------------------------------------------------

const char* weight_name(Weight w) { return w == Weight::SigmaS ? "sigma_S" : "sigma_W"; }

std::vector<StrichartzRow> strichartz_ratio(Flow flow, int k, const std::vector<StrichartzProbe>& probes, int trials,
                                            std::uint64_t seed, const WindowConfig& cfg) {
    if (trials < 1) throw std::invalid_argument("strichartz_ratio: trials must be >= 1");
    const WindowPlan plan = plan_window({{flow, k}}, cfg);
    const auto quad = composite_quadrature(plan.t_half, plan.t_star, cfg.n_core, cfg.tail_ratio);

    std::vector<StrichartzRow> rows(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
        auto& r = rows[i];
        r.flow = flow;
        r.k = k;
        r.probe = probes[i];
        r.sigma = probes[i].weight == Weight::SigmaS ? sigma_S(probes[i].pair.p, probes[i].pair.q)
                                                      : sigma_W(probes[i].pair.p, probes[i].pair.q);
        r.trials = trials;
        r.seed = seed;
        r.t_half = plan.t_half;
        r.r_max = plan.grid->r_max;
        r.n = plan.grid->n;
        r.asserted = !admissible(probes[i].pair).excluded_endpoint;
    }
    CVec v;
    for (int tr = 0; tr < trials; ++tr) {
        const auto data = random_annular_data(plan.grid, k, derive_seed(seed, {k, tr, static_cast<int>(flow)}), plan.loc_radius[0]);
        const WaveSampler w(data, flow);
        const double b = end_boundary(w, plan.t_half);
        check_reflect(b, cfg.reflect_tol, "strichartz_ratio");
        std::vector<MixedNormAccumulator> acc;
        for (auto& p : probes) acc.emplace_back(p.pair.p, p.pair.q);
        for (std::size_t l = 0; l < quad.t.size(); ++l) {
            w.at(quad.t[l], v);
            const double tp = taper_at(quad.t[l], -plan.t_half, plan.t_half);
            for (auto& z : v) z *= tp;
            for (auto& a : acc) a.add(*plan.grid, v, quad.w[l]);
        }
        for (std::size_t i = 0; i < probes.size(); ++i) {
            auto& r = rows[i];
            r.boundary = std::max(r.boundary, b);
            r.ratio = std::max(r.ratio, std::pow(2.0, k * r.sigma) * acc[i].value());
        }
    }
    return rows;
}

// ---- transversality -------------------------------------------------------------------------

const char* bilinear_case_name(BilinearCase c) {
    switch (c) {
        case BilinearCase::I: return "i";
        case BilinearCase::II: return "ii";
        case BilinearCase::III: return "iii";
    }
    return "?";
}

BilinearCase parse_bilinear_case(const std::string& s) {
    if (s == "i" || s == "1") return BilinearCase::I;
    if (s == "ii" || s == "2") return BilinearCase::II;
    if (s == "iii" || s == "3") return BilinearCase::III;
    throw std::invalid_argument("unknown bilinear case '" + s + "'");
}

namespace {

struct Phase {
    bool kg = false;  // <xi> or |xi|^2
    double d1(double r) const { return kg ? r / japanese(r) : 2.0 * r; }
    double d2(double r) const { return kg ? std::pow(japanese(r), -3) : 2.0; }
    double d1_over_r(double r) const { return kg ? 1.0 / japanese(r) : 2.0; }
};

using V3 = std::array<double, 3>;
V3 cross(const V3& a, const V3& b) { return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]}; }
double norm3(const V3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

V3 grad(const Phase& ph, const V3& x) {
    const double r = norm3(x);
    if (r == 0.0) return {0, 0, 0};
    const double s = ph.d1(r) / r;
    return {s * x[0], s * x[1], s * x[2]};
}

V3 hess_apply(const Phase& ph, const V3& x, const V3& v) {
    const double r = norm3(x);
    if (r == 0.0) {
        const double c = ph.d2(0.0);
        return {c * v[0], c * v[1], c * v[2]};
    }
    const V3 e{x[0] / r, x[1] / r, x[2] / r};
    const double ev = e[0] * v[0] + e[1] * v[1] + e[2] * v[2];
    const double a = ph.d2(r), b = ph.d1_over_r(r);
    return {b * v[0] + (a - b) * ev * e[0], b * v[1] + (a - b) * ev * e[1], b * v[2] + (a - b) * ev * e[2]};
}

double hess_sup(const Phase& ph, const RadialRegion& R) {
    if (!ph.kg) return 2.0;
    return 1.0 / japanese(R.r_lo);  // both eigenvalues decrease in r and 1/<r> dominates
}

// m-th derivative of sqrt(1 + y^2) at y0 from its Taylor series.
double sqrt_jb_derivative(double y0, int m) {
    std::vector<double> p(m + 1, 0.0), s(m + 1, 0.0);
    p[0] = 1.0 + y0 * y0;
    if (m >= 1) p[1] = 2.0 * y0;
    if (m >= 2) p[2] = 1.0;
    s[0] = std::sqrt(p[0]);
    for (int j = 1; j <= m; ++j) {
        double acc = p[j];
        for (int i = 1; i < j; ++i) acc -= s[i] * s[j - i];
        s[j] = acc / (2.0 * s[0]);
    }
    return std::tgamma(m + 1.0) * s[m];
}

// sup over the region and unit directions of |d^m/ds^m <x0 + s e>| at s = 0
double kg_derivative_sup(const RadialRegion& R, int m) {
    double best = 0.0;
    const int nr = 48, nb = 97;
    for (int i = 0; i < nr; ++i) {
        const double r = R.r_lo + (R.r_hi - R.r_lo) * i / (nr - 1);
        for (int j = 0; j < nb; ++j) {
            const double B = -r + 2.0 * r * j / (nb - 1);
            const double C = std::max(0.0, r * r - B * B);
            const double sc = std::sqrt(1.0 + C);
            const double v = std::pow(sc, 1.0 - m) * std::abs(sqrt_jb_derivative(B / sc, m));
            best = std::max(best, v);
        }
    }
    return best;
}

}  // namespace

TransversalityData transversality(BilinearCase c, int high, int low, double a1_threshold) {
    TransversalityData d;
    d.which = c;
    auto P = [](int k) { return std::ldexp(1.0, k); };
    Phase ph1, ph2;
    switch (c) {
        case BilinearCase::I:  // N at k = high, u at k1 = low
            d.k = high;
            d.k1 = low;
            ph1.kg = true;
            d.lambda1 = {std::max(0.0, P(high - 1) - P(low)), P(high + 1) + P(low)};
            d.lambda2 = {0.0, P(low + 1)};
            d.d0 = P(low);
            d.V_scale = 1.0;
            break;
        case BilinearCase::II:  // N at k = low, u at k1 = high
            d.k = low;
            d.k1 = high;
            ph1.kg = true;
            d.lambda1 = {0.0, P(low + 1)};
            d.lambda2 = {std::max(0.0, P(high - 1) - P(low)), P(high + 1) + P(low)};
            d.d0 = P(low);
            d.V_scale = P(high);
            break;
        case BilinearCase::III:  // u1 at k1 = high, u2 at k2 = low
            d.k1 = high;
            d.k2 = low;
            d.lambda1 = {std::max(0.0, P(high - 1) - P(low)), P(high + 1) + P(low)};
            d.lambda2 = {0.0, P(low + 1)};
            d.d0 = P(low);
            d.V_scale = P(high);
            break;
    }
    // antiparallel gradients of maximal size
    d.V_max = ph1.d1(d.lambda1.r_hi) + ph2.d1(d.lambda2.r_hi);
    d.H1 = hess_sup(ph1, d.lambda1);
    d.H2 = hess_sup(ph2, d.lambda2);
    d.h_order = d.H2 <= d.H1;

    // transversality of the curvature: sampled over radii, angle and directions orthogonal to w
    double a1 = std::numeric_limits<double>::infinity();
    const int nr = 24, nth = 25, npsi = 16;
    for (int i = 0; i < nr; ++i) {
        const double r1 = d.lambda1.r_lo + (d.lambda1.r_hi - d.lambda1.r_lo) * i / (nr - 1);
        for (int j = 0; j < nr; ++j) {
            const double r2 = d.lambda2.r_lo + (d.lambda2.r_hi - d.lambda2.r_lo) * j / (nr - 1);
            for (int a = 0; a < nth; ++a) {
                const double th = kPi * a / (nth - 1);
                const V3 xi{r1, 0, 0}, eta{r2 * std::cos(th), r2 * std::sin(th), 0};
                const V3 g1 = grad(ph1, xi), g2 = grad(ph2, eta);
                const V3 w{g1[0] - g2[0], g1[1] - g2[1], g1[2] - g2[2]};
                const double wn = norm3(w);
                if (wn < 1e-300) continue;
                const V3 e{w[0] / wn, w[1] / wn, w[2] / wn};
                // orthonormal basis of w-perp
                V3 t = std::abs(e[2]) < 0.9 ? V3{0, 0, 1} : V3{1, 0, 0};
                V3 ea = cross(e, t);
                const double ean = norm3(ea);
                ea = {ea[0] / ean, ea[1] / ean, ea[2] / ean};
                const V3 eb = cross(e, ea);
                for (int s = 0; s < npsi; ++s) {
                    const double ps = kPi * s / npsi;
                    const V3 v{std::cos(ps) * ea[0] + std::sin(ps) * eb[0], std::cos(ps) * ea[1] + std::sin(ps) * eb[1],
                               std::cos(ps) * ea[2] + std::sin(ps) * eb[2]};
                    a1 = std::min(a1, norm3(cross(hess_apply(ph1, xi, v), w)) / (d.H1 * d.V_max));
                    a1 = std::min(a1, norm3(cross(hess_apply(ph2, eta, v), w)) / (d.H2 * d.V_max));
                }
            }
        }
    }
    d.a1_ratio = a1;
    d.a1_pass = a1 >= a1_threshold;

    double curv = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 2; ++j) {
        const Phase& ph = j == 0 ? ph1 : ph2;
        if (!ph.kg) continue;  // quadratic: all higher derivatives vanish
        const RadialRegion& R = j == 0 ? d.lambda1 : d.lambda2;
        const double H = j == 0 ? d.H1 : d.H2;
        for (int m = 3; m <= 15; ++m) {
            const double dm = kg_derivative_sup(R, m);
            if (dm > 0.0) curv = std::min(curv, std::pow(H / dm, 1.0 / (m - 2)));
        }
    }
    d.a2_curv = curv;
    d.a2_ratio = std::min(d.V_max / d.H1, d.V_max / d.H2);
    d.a2_pass = d.a2_curv >= d.d0 && d.a2_ratio >= d.d0;
    return d;
}

// ---- bilinear -----------------------------------------------------------------------------

double log2_slope(const std::vector<double>& x, const std::vector<double>& values) {
    const std::size_t n = x.size();
    if (n < 2 || values.size() != n) throw std::invalid_argument("log2_slope: need >= 2 matching points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += std::log2(values[i]);
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (std::log2(values[i]) - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

BilinearRow bilinear_ratio(BilinearCase c, int a, int b, int trials, std::uint64_t seed, const WindowConfig& cfg) {
    if (trials < 1) throw std::invalid_argument("bilinear_ratio: trials must be >= 1");
    BilinearRow row;
    row.which = c;
    row.trials = trials;
    row.seed = seed;
    std::vector<WaveSpec> waves;
    switch (c) {
        case BilinearCase::I:
        case BilinearCase::II:
            row.k = a;
            row.k1 = b;
            row.has_k = true;
            waves = {{Flow::KGPlus, a}, {Flow::Schrodinger, b}};
            break;
        case BilinearCase::III:
            row.k1 = a;
            row.k2 = b;
            row.has_k2 = true;
            waves = {{Flow::Schrodinger, a}, {Flow::Schrodinger, b}};
            break;
    }
    switch (c) {
        case BilinearCase::I:
            row.coefficient = std::pow(2.0, b / 12.0);
            row.control_coefficient = 1.0;
            break;
        case BilinearCase::II:
            row.coefficient = std::pow(2.0, a / 12.0 - b / 3.0);
            row.control_coefficient = std::pow(2.0, a / 12.0);
            break;
        case BilinearCase::III:
            row.coefficient = std::pow(2.0, b / 12.0);
            row.control_coefficient = 1.0;
            break;
    }
    const WindowPlan plan = plan_window(waves, cfg);
    row.t_half = plan.t_half;
    row.r_max = plan.grid->r_max;
    row.n = plan.grid->n;
    double core = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < waves.size(); ++i)
        core = std::min(core, plan.loc_radius[i] / velocity_range(waves[i].flow, waves[i].k).first);
    const auto quad = composite_quadrature(plan.t_half, core, cfg.n_core, cfg.tail_ratio);

    CVec v1, v2;
    for (int tr = 0; tr < trials; ++tr) {
        const auto d1 = random_annular_data(plan.grid, waves[0].k, derive_seed(seed, {1, waves[0].k, tr}), plan.loc_radius[0]);
        const auto d2 = random_annular_data(plan.grid, waves[1].k, derive_seed(seed, {2, waves[1].k, tr}), plan.loc_radius[1]);
        const WaveSampler w1(d1, waves[0].flow), w2(d2, waves[1].flow);
        const double bd = std::max(end_boundary(w1, plan.t_half), end_boundary(w2, plan.t_half));
        check_reflect(bd, cfg.reflect_tol, "bilinear_ratio");
        row.boundary = std::max(row.boundary, bd);
        MixedNormAccumulator acc(8.0 / 5.0, 1.5);
        for (std::size_t l = 0; l < quad.t.size(); ++l) {
            w1.at(quad.t[l], v1);
            w2.at(quad.t[l], v2);
            const double tp = taper_at(quad.t[l], -plan.t_half, plan.t_half);
            for (std::size_t i = 0; i < v1.size(); ++i) v1[i] *= v2[i] * (tp * tp);
            acc.add(*plan.grid, v1, quad.w[l]);
        }
        row.raw = std::max(row.raw, acc.value());
    }
    row.normalized = row.raw / row.coefficient;
    row.control = row.raw / row.control_coefficient;
    return row;
}

// ---- trilinear ------------------------------------------------------------------------------

bool annuli_compatible(int k, int k1, int k2) {
    const double lo[3] = {std::ldexp(1.0, k - 1), std::ldexp(1.0, k1 - 1), std::ldexp(1.0, k2 - 1)};
    const double hi[3] = {std::ldexp(1.0, k + 1), std::ldexp(1.0, k1 + 1), std::ldexp(1.0, k2 + 1)};
    for (int i = 0; i < 3; ++i)
        if (lo[i] > hi[(i + 1) % 3] + hi[(i + 2) % 3]) return false;
    return true;
}

namespace {

double top_symbol(Flow f, int k) { return std::abs(flow_symbol(f, std::ldexp(1.0, k + 1))); }

}  // namespace

TrilinearRow trilinear(TrilinearKind kind, int k, int k1, int k2, int trials, std::uint64_t seed, const WindowConfig& cfg,
                       const TrilinearOptions& opt) {
    if (trials < 1) throw std::invalid_argument("trilinear: trials must be >= 1");
    if (opt.atom_mode && opt.atom_steps < 2) throw std::invalid_argument("trilinear: atom_steps must be >= 2");
    TrilinearRow row;
    row.kind = kind;
    row.k = k;
    row.k1 = k1;
    row.k2 = k2;
    row.trials = trials;
    row.seed = seed;
    row.compatible = annuli_compatible(k, k1, k2);
    row.coefficient = kind == TrilinearKind::Schrodinger ? std::min(1.0, std::pow(2.0, (-0.5 + 0.5 * opt.eps) * k))
                                                         : 1.0 / japanese(std::ldexp(1.0, k));
    const std::vector<WaveSpec> waves{{Flow::KGPlus, k}, {Flow::Schrodinger, k1}, {Flow::Schrodinger, k2}};
    WindowConfig wc = cfg;
    if (std::isinf(wc.t_max)) wc.t_max = 8.0;
    const WindowPlan plan = plan_window(waves, wc);
    const GridPtr grid = plan.grid;
    const RadialGrid& g = *grid;
    double omax = 0.0;
    for (auto& w : waves) omax += top_symbol(w.flow, w.k);
    const auto quad = uniform_quadrature(plan.t_half, std::min(kPi / omax, plan.t_half / 32.0));
    row.t_half = plan.t_half;
    row.dt = quad.t.size() > 1 ? quad.t[1] - quad.t[0] : 0.0;
    row.r_max = g.r_max;
    row.n = g.n;

    const double c3 = 4.0 * kPi / std::pow(2.0 * kPi, 3);  // Plancherel weight of the radial dual sum
    CVec vN, v1, v2, P, Q, c;
    for (int tr = 0; tr < trials; ++tr) {
        const auto dN = random_annular_data(grid, k, derive_seed(seed, {10, k, k1, k2, tr}), plan.loc_radius[0]);
        const auto d1 = random_annular_data(grid, k1, derive_seed(seed, {11, k, k1, k2, tr}), plan.loc_radius[1]);
        const WaveSampler wN(dN, Flow::KGPlus), w1(d1, Flow::Schrodinger);

        // V^2 factor: a free wave, or a step atom with pieces renormalized to sum ||phi||^2 = 1
        std::vector<WaveSampler> pieces;
        std::vector<double> cuts;
        double v2_lower = 1.0;
        const int K = opt.atom_mode ? opt.atom_steps : 1;
        {
            std::vector<RadialField> raw;
            for (int j = 0; j < K; ++j)
                raw.push_back(random_annular_data(grid, k2, derive_seed(seed, {12, k, k1, k2, tr, j}), plan.loc_radius[2]));
            const double s = 1.0 / std::sqrt(static_cast<double>(K));
            for (auto& f : raw)
                for (auto& z : f.values) z *= s;
            for (int j = 1; j < K; ++j) cuts.push_back(-plan.t_half + 2.0 * plan.t_half * j / K);
            if (opt.atom_mode) {
                // pulled-back sequence 0, phi_1, ..., phi_K
                std::vector<std::vector<double>> dist(K + 1, std::vector<double>(K + 1, 0.0));
                for (int i = 0; i <= K; ++i)
                    for (int j = i + 1; j <= K; ++j) {
                        CVec dd(g.n);
                        for (std::size_t m = 0; m < g.n; ++m)
                            dd[m] = (j > 0 ? raw[j - 1].values[m] : cplx(0.0)) - (i > 0 ? raw[i - 1].values[m] : cplx(0.0));
                        dist[i][j] = lq_norm_raw(g, dd, 2.0);
                    }
                v2_lower = p_variation_from_distances(dist, 2.0);
            }
            for (auto& f : raw) pieces.emplace_back(f, Flow::Schrodinger);
        }
        double bd = std::max(end_boundary(wN, plan.t_half), end_boundary(w1, plan.t_half));
        for (auto& p : pieces) bd = std::max(bd, end_boundary(p, plan.t_half));
        check_reflect(bd, cfg.reflect_tol, "trilinear");

        cplx I = 0.0;
        double absI = 0.0;
        for (std::size_t l = 0; l < quad.t.size(); ++l) {
            const double t = quad.t[l];
            const double wt = quad.w[l] * taper_at(t, -plan.t_half, plan.t_half);
            if (wt == 0.0) continue;
            const std::size_t piece = std::upper_bound(cuts.begin(), cuts.end(), t) - cuts.begin();
            w1.at(t, v1);
            pieces[piece].at(t, v2);
            wN.at(t, vN);
            if (kind == TrilinearKind::Schrodinger) {
                cplx s = 0.0;
                double sa = 0.0;
                for (std::size_t i = 0; i < g.n; ++i) {
                    const cplx b = opt.conj_u2 ? std::conj(v2[i]) : v2[i];
                    const double r2 = g.r(i) * g.r(i);
                    const cplx z = vN[i] * v1[i] * b;
                    s += z * r2;
                    sa += std::abs(z) * r2;
                }
                I += s * (4.0 * kPi * g.dr * wt);
                absI += sa * 4.0 * kPi * g.dr * wt;
            } else {
                P.resize(g.n);
                for (std::size_t i = 0; i < g.n; ++i) P[i] = v1[i] * std::conj(v2[i]);
                forward_raw(g, P, c);
                cplx s = 0.0;
                for (std::size_t m = 0; m < g.n; ++m) {
                    const double xi = g.xi(m);
                    c[m] /= japanese(xi);
                    const cplx nh = wN.hat()[m] * std::polar(1.0, t * wN.omega(m));
                    s += c[m] * (opt.conj_N ? std::conj(nh) : nh) * (xi * xi);
                }
                I += s * (c3 * g.dxi() * wt);
                inverse_raw(g, c, Q);
                double sa = 0.0;
                for (std::size_t i = 0; i < g.n; ++i) sa += std::abs(Q[i] * vN[i]) * g.r(i) * g.r(i);
                absI += sa * 4.0 * kPi * g.dr * wt;
            }
        }
        const double val = std::abs(I);
        row.raw = std::max(row.raw, val);
        row.relative = std::max(row.relative, absI > 0.0 ? val / absI : 0.0);
        if (opt.atom_mode) row.v2_normalized = std::max(row.v2_normalized, val / (v2_lower * row.coefficient));
    }
    row.normalized = row.raw / row.coefficient;
    if (!opt.atom_mode) row.v2_normalized = row.normalized;
    return row;
}

// ---- summation --------------------------------------------------------------------------------

double summation_sum(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& z, double delta,
                     int gap) {
    const int L = static_cast<int>(x.size());
    if (y.size() != x.size() || z.size() != x.size()) throw std::invalid_argument("summation_sum: length mismatch");
    double s = 0.0;
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b)
            for (int c = 0; c < L; ++c) {
                int t[3] = {a, b, c};
                std::sort(t, t + 3);
                if (t[2] - t[1] > gap) continue;
                s += std::pow(2.0, -delta * t[0]) * x[a] * y[b] * z[c];
            }
    return s;
}

SummationResult summation_check(double delta, int length, int trials, std::uint64_t seed, int gap) {
    if (length < 1 || trials < 1) throw std::invalid_argument("summation_check: length and trials must be >= 1");
    SummationResult res;
    res.delta = delta;
    res.length = length;
    res.trials = trials;
    for (int a = 0; a < length; ++a)
        for (int b = 0; b < length; ++b)
            for (int c = 0; c < length; ++c) {
                int t[3] = {a, b, c};
                std::sort(t, t + 3);
                if (t[2] - t[1] <= gap) ++res.triples;
            }
    auto unit = [](std::vector<double> v) {
        double n = 0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
        for (double& x : v) x /= n;
        return v;
    };
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    for (int tr = 0; tr < trials; ++tr) {
        std::vector<double> s[3];
        for (auto& v : s) {
            v.resize(length);
            for (double& x : v) x = std::abs(nd(rng));
            v = unit(v);
        }
        res.C = std::max(res.C, summation_sum(s[0], s[1], s[2], delta, gap));
    }
    const auto one = unit(std::vector<double>(length, 1.0));
    res.constant_seq = summation_sum(one, one, one, delta, gap);
    return res;
}

}  // namespace kgs

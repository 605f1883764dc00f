#include "kgs/frequency_tools.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <random>
#include <stdexcept>

namespace kgs {

// ---- cutoffs ----------------------------------------------------------------

namespace {
double q_exp(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double smooth_step(double x) {
    const double a = q_exp(x), b = q_exp(1.0 - x);
    return a / (a + b);
}
}  // namespace

double rho0(double s) {
    const double a = std::abs(s);
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    const double u = 2.0 - a, v = a - 1.0;
    return smooth_step(u / (u + v));
}

double rho_k(int k, double y) {
    const double a = std::abs(y);
    return rho0(std::ldexp(a, -k)) - rho0(std::ldexp(a, -k + 1));
}

double rho_tilde(int k, double y) { return rho_k(k - 1, y) + rho_k(k, y) + rho_k(k + 1, y); }

double rho_below(int k, double y) { return rho0(std::ldexp(std::abs(y), 1 - k)); }

double lp_profile(int k, double y) {
    if (k < 0) throw std::invalid_argument("littlewood_paley: k must be >= 0 (use annular_projection)");
    return k == 0 ? rho0(std::abs(y)) : rho_k(k, y);
}

template <class Prof>
static FrequencyField multiply_profile(const FrequencyField& F, Prof prof) {
    FrequencyField out(F.grid, F.coeffs);
    const RadialGrid& g = *F.grid;
    for (std::size_t m = 0; m < g.n; ++m) out.coeffs[m] *= prof(g.xi(m));
    return out;
}

template <class Prof>
static RadialField multiply_profile(const RadialField& f, Prof prof) {
    return inverse_transform(multiply_profile(forward_transform(f), prof));
}

FrequencyField littlewood_paley(const FrequencyField& F, int k) {
    return multiply_profile(F, [k](double x) { return lp_profile(k, x); });
}
RadialField littlewood_paley(const RadialField& f, int k) {
    return multiply_profile(f, [k](double x) { return lp_profile(k, x); });
}
FrequencyField annular_projection(const FrequencyField& F, int k) {
    return multiply_profile(F, [k](double x) { return rho_k(k, x); });
}
RadialField annular_projection(const RadialField& f, int k) {
    return multiply_profile(f, [k](double x) { return rho_k(k, x); });
}
RadialField fattened_projection(const RadialField& f, int k) {
    return multiply_profile(f, [k](double x) { return rho_tilde(k, x); });
}
RadialField low_projection(const RadialField& f, int k) {
    return multiply_profile(f, [k](double x) { return rho_below(k, x); });
}

std::size_t annulus_nodes(const RadialGrid& g, int k) {
    std::size_t c = 0;
    for (std::size_t m = 0; m < g.n; ++m)
        if (rho_k(k, g.xi(m)) > 0.0) ++c;
    return c;
}

int nyquist_octave(const RadialGrid& g) {
    return static_cast<int>(std::floor(std::log2(g.xi_max()))) - 1;
}

// ---- flows --------------------------------------------------------------------

const char* flow_name(Flow f) {
    switch (f) {
        case Flow::Schrodinger: return "schrodinger";
        case Flow::KGPlus: return "kg+";
        case Flow::KGMinus: return "kg-";
    }
    return "?";
}

Flow parse_flow(const std::string& s) {
    if (s == "schrodinger" || s == "delta") return Flow::Schrodinger;
    if (s == "kg" || s == "kg+" || s == "kg_plus") return Flow::KGPlus;
    if (s == "kg-" || s == "kg_minus") return Flow::KGMinus;
    throw std::invalid_argument("unknown flow '" + s + "'");
}

double flow_symbol(Flow f, double xi) {
    switch (f) {
        case Flow::Schrodinger: return xi * xi;
        case Flow::KGPlus: return japanese(xi);
        case Flow::KGMinus: return -japanese(xi);
    }
    return 0.0;
}

double group_velocity(Flow f, double xi) {
    if (f == Flow::Schrodinger) return 2.0 * std::abs(xi);
    return std::abs(xi) / japanese(xi);
}

MultiplierSymbol MultiplierSymbol::bessel(double s) {
    MultiplierSymbol m;
    m.kind = Kind::BesselPower;
    m.s = s;
    return m;
}
MultiplierSymbol MultiplierSymbol::schrodinger(double t) {
    MultiplierSymbol m;
    m.kind = Kind::SchrodingerPhase;
    m.t = t;
    return m;
}
MultiplierSymbol MultiplierSymbol::kg(double t, int sign) {
    MultiplierSymbol m;
    m.kind = Kind::KGPhase;
    m.t = t;
    m.sign = sign >= 0 ? +1 : -1;
    return m;
}
MultiplierSymbol MultiplierSymbol::flow(Flow f, double t) {
    if (f == Flow::Schrodinger) return schrodinger(t);
    return kg(t, f == Flow::KGPlus ? +1 : -1);
}

cplx MultiplierSymbol::operator()(double xi) const {
    switch (kind) {
        case Kind::BesselPower: return {std::pow(1.0 + xi * xi, 0.5 * s), 0.0};
        case Kind::SchrodingerPhase: return std::polar(1.0, t * xi * xi);
        case Kind::KGPhase: return std::polar(1.0, sign * t * japanese(xi));
    }
    return {1.0, 0.0};
}

FrequencyField apply_multiplier(const FrequencyField& F, const MultiplierSymbol& m) {
    return multiply_profile(F, [&m](double x) { return m(x); });
}

RadialField apply_multiplier(const RadialField& f, const MultiplierSymbol& m) {
    return inverse_transform(apply_multiplier(forward_transform(f), m));
}

// ---- space-time ---------------------------------------------------------------

void SpaceTimeField::check() const {
    if (values.size() != times.n_t) throw std::invalid_argument("SpaceTimeField: snapshot count mismatch");
    for (const auto& v : values)
        if (v.size() != grid->n) throw std::invalid_argument("SpaceTimeField: snapshot on a different grid");
    if (!window.empty()) {
        if (window.size() != times.n_t) throw std::invalid_argument("SpaceTimeField: window length mismatch");
        for (double w : window)
            if (w < 0.0 || w > 1.0) throw std::invalid_argument("SpaceTimeField: window weight outside [0,1]");
    }
}

double taper_at(double t, double t_lo, double t_hi) {
    const double c = 0.5 * (t_lo + t_hi), h = 0.5 * (t_hi - t_lo);
    if (h <= 0.0) return 1.0;
    return rho0(2.0 * (t - c) / h);
}

std::vector<double> taper_weights(const TimeGrid& tg) {
    std::vector<double> w(tg.n_t);
    for (std::size_t l = 0; l < tg.n_t; ++l) w[l] = taper_at(tg.t(l), tg.t0, tg.t_end());
    return w;
}

SpaceTimeField apply_window(const SpaceTimeField& F) {
    if (F.windowed()) return F;
    SpaceTimeField out = F;
    out.window = taper_weights(F.times);
    for (std::size_t l = 0; l < F.times.n_t; ++l)
        for (auto& z : out.values[l]) z *= out.window[l];
    return out;
}

SpaceTimeField free_wave(const RadialField& data, Flow flow, const TimeGrid& times) {
    data.check();
    SpaceTimeField out;
    out.grid = data.grid;
    out.times = times;
    out.values.resize(times.n_t);
    const RadialGrid& g = *data.grid;
    CVec hat, work;
    forward_raw(g, data.values, hat);
    std::vector<double> om(g.n);
    for (std::size_t m = 0; m < g.n; ++m) om[m] = flow_symbol(flow, g.xi(m));
    for (std::size_t l = 0; l < times.n_t; ++l) {
        const double t = times.t(l);
        work.resize(g.n);
        for (std::size_t m = 0; m < g.n; ++m) work[m] = hat[m] * std::polar(1.0, t * om[m]);
        inverse_raw(g, work, out.values[l]);
    }
    return out;
}

// ---- random data ----------------------------------------------------------------

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::int64_t> tags) {
    std::vector<std::uint32_t> words;
    words.push_back(static_cast<std::uint32_t>(seed));
    words.push_back(static_cast<std::uint32_t>(seed >> 32));
    for (auto t : tags) {
        auto u = static_cast<std::uint64_t>(t);
        words.push_back(static_cast<std::uint32_t>(u));
        words.push_back(static_cast<std::uint32_t>(u >> 32));
    }
    std::seed_seq sq(words.begin(), words.end());
    std::uint32_t out[2];
    sq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

RadialField random_annular_data(const GridPtr& grid, int k, std::uint64_t seed, double loc_radius) {
    const RadialGrid& g = *grid;
    if (std::ldexp(1.0, k + 1) > g.xi_max())
        throw std::invalid_argument("random_annular_data: annulus k=" + std::to_string(k) + " exceeds the grid Nyquist octave " +
                                    std::to_string(nyquist_octave(g)));
    if (annulus_nodes(g, k) < 8)
        throw std::invalid_argument("random_annular_data: annulus k=" + std::to_string(k) + " has fewer than 8 dual nodes");
    if (loc_radius <= 0.0) loc_radius = 8.0 * std::ldexp(1.0, -k);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    CVec v(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double re = nd(rng);
        const double im = nd(rng);
        const double r = g.r(i);
        const double env = std::isinf(loc_radius) ? 1.0 : rho0(2.0 * r / loc_radius);
        v[i] = cplx(re, im) * (env / r);
    }
    CVec hat;
    forward_raw(g, v, hat);
    for (std::size_t m = 0; m < g.n; ++m) hat[m] *= rho_k(k, g.xi(m));
    inverse_raw(g, hat, v);
    const double nrm = lq_norm_raw(g, v, 2.0);
    if (!(nrm > 0.0)) throw std::runtime_error("random_annular_data: degenerate draw");
    for (auto& z : v) z /= nrm;
    return RadialField(grid, std::move(v));
}

// ---- modulation ---------------------------------------------------------------------

Surface parse_surface(const std::string& s) {
    if (s == "delta" || s == "schrodinger") return Surface::Schrodinger;
    if (s == "+<D>" || s == "kg+" || s == "kg") return Surface::KGPlus;
    if (s == "-<D>" || s == "kg-") return Surface::KGMinus;
    throw std::invalid_argument("unknown surface '" + s + "'");
}

double surface_symbol(Surface s, double xi) {
    switch (s) {
        case Surface::Schrodinger: return xi * xi;
        case Surface::KGPlus: return japanese(xi);
        case Surface::KGMinus: return -japanese(xi);
    }
    return 0.0;
}

int modulation_j_min(const TimeGrid& tg) {
    const double T = static_cast<double>(tg.n_t) * tg.dt;
    return static_cast<int>(std::floor(std::log2(2.0 * kPi / T)));
}

int modulation_j_max(const TimeGrid& tg) { return static_cast<int>(std::ceil(std::log2(kPi / tg.dt))); }

namespace {
std::mutex g_dft_plan_mu;
}

SpaceTimeField modulation_project(const SpaceTimeField& F, int j, Surface surface, ModMode mode) {
    if (!F.windowed()) throw std::invalid_argument("modulation_project: input must be windowed (apply the taper first)");
    F.check();
    const RadialGrid& g = *F.grid;
    const std::size_t n = g.n, nt = F.times.n_t;
    std::vector<cplx> buf(n * nt);
    CVec hat;
    for (std::size_t l = 0; l < nt; ++l) {
        forward_raw(g, F.values[l], hat);
        const double t = F.times.t(l);
        for (std::size_t m = 0; m < n; ++m) buf[l * n + m] = hat[m] * std::polar(1.0, -t * surface_symbol(surface, g.xi(m)));
    }
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lock(g_dft_plan_mu);
        int len = static_cast<int>(nt);
        auto* p = reinterpret_cast<fftw_complex*>(buf.data());
        fwd = fftw_plan_many_dft(1, &len, static_cast<int>(n), p, nullptr, static_cast<int>(n), 1, p, nullptr,
                                 static_cast<int>(n), 1, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_many_dft(1, &len, static_cast<int>(n), p, nullptr, static_cast<int>(n), 1, p, nullptr,
                                 static_cast<int>(n), 1, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(fwd);
    const double T = static_cast<double>(nt) * F.times.dt;
    for (std::size_t pidx = 0; pidx < nt; ++pidx) {
        const double p = pidx < (nt + 1) / 2 ? static_cast<double>(pidx) : static_cast<double>(pidx) - static_cast<double>(nt);
        const double tau = 2.0 * kPi * p / T;
        const double w = (mode == ModMode::Band ? rho_k(j, tau) : rho0(std::ldexp(tau, -j))) / static_cast<double>(nt);
        for (std::size_t m = 0; m < n; ++m) buf[pidx * n + m] *= w;
    }
    fftw_execute(bwd);
    {
        std::lock_guard<std::mutex> lock(g_dft_plan_mu);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    SpaceTimeField out;
    out.grid = F.grid;
    out.times = F.times;
    out.window = F.window;
    out.values.resize(nt);
    for (std::size_t l = 0; l < nt; ++l) {
        const double t = F.times.t(l);
        for (std::size_t m = 0; m < n; ++m) hat[m] = buf[l * n + m] * std::polar(1.0, t * surface_symbol(surface, g.xi(m)));
        inverse_raw(g, hat, out.values[l]);
    }
    return out;
}

double spacetime_l2_sq(const SpaceTimeField& F) {
    double acc = 0.0;
    for (const auto& v : F.values) {
        const double a = lq_norm_raw(*F.grid, v, 2.0);
        acc += a * a;
    }
    return acc * F.times.dt;
}

cplx spacetime_inner(const SpaceTimeField& F, const SpaceTimeField& G) {
    require_same_grid(F.grid, G.grid);
    cplx acc(0.0, 0.0);
    for (std::size_t l = 0; l < F.values.size(); ++l)
        acc += l2_inner(F.snapshot(l), G.snapshot(l));
    return acc * F.times.dt;
}

}  // namespace kgs

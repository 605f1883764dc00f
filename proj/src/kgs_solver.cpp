#include "kgs/kgs_solver.hpp"

#include <cmath>
#include <stdexcept>

namespace kgs {

namespace {

// Plancherel weight of the radial dual sum: ||f||^2 = c3 sum |F_m|^2 xi_m^2 dxi
const double c3 = 4.0 * kPi / std::pow(2.0 * kPi, 3);

double hs_norm_hat(const RadialGrid& g, const CVec& F, double s) {
    double acc = 0.0;
    for (std::size_t m = 0; m < g.n; ++m) {
        const double xi = g.xi(m);
        acc += std::norm(F[m]) * std::pow(1.0 + xi * xi, s) * xi * xi;
    }
    return std::sqrt(c3 * g.dxi() * acc);
}

double l2(const RadialGrid& g, const CVec& v) { return lq_norm_raw(g, v, 2.0); }

void linear_hat(const RadialGrid& g, double t, CVec& U, CVec& N) {
    for (std::size_t m = 0; m < g.n; ++m) {
        const double xi = g.xi(m);
        U[m] *= std::polar(1.0, -t * xi * xi);
        N[m] *= std::polar(1.0, t * japanese(xi));
    }
}

double state_size(const RadialGrid& g, const KGSState& s) { return l2(g, s.u.values) + l2(g, s.N.values); }

}  // namespace

void KGSState::check() const {
    if (!u.grid || !N.grid) throw std::invalid_argument("KGSState: missing grid");
    require_same_grid(u.grid, N.grid);
    u.check();
    N.check();
}

void SecondOrderData::check() const {
    if (!n0.grid || !n1.grid) throw std::invalid_argument("SecondOrderData: missing grid");
    require_same_grid(n0.grid, n1.grid);
    for (const RadialField* f : {&n0, &n1}) {
        f->check();
        double re = 0.0, im = 0.0;
        for (const auto& z : f->values) {
            re = std::max(re, std::abs(z.real()));
            im = std::max(im, std::abs(z.imag()));
        }
        if (im > 1e-12 * std::max(re, 1e-300)) throw std::invalid_argument("SecondOrderData: n0 and n1 must be real-valued");
    }
}

RadialField to_first_order(const SecondOrderData& data) {
    data.check();
    const auto m = apply_multiplier(data.n1, MultiplierSymbol::bessel(-1.0));
    RadialField N(data.n0.grid);
    for (std::size_t i = 0; i < N.size(); ++i) N.values[i] = cplx(data.n0.values[i].real(), 0.0) - cplx(0.0, 1.0) * m.values[i].real();
    return N;
}

SecondOrderData from_first_order(const RadialField& N) {
    N.check();
    SecondOrderData d{RadialField(N.grid), RadialField(N.grid)};
    RadialField im(N.grid);
    for (std::size_t i = 0; i < N.size(); ++i) {
        d.n0.values[i] = N.values[i].real();
        im.values[i] = N.values[i].imag();
    }
    const auto m = apply_multiplier(im, MultiplierSymbol::bessel(1.0));
    for (std::size_t i = 0; i < N.size(); ++i) d.n1.values[i] = -m.values[i].real();
    return d;
}

const char* method_name(Method m) { return m == Method::Strang ? "strang_split" : "exponential_rk2"; }

Method parse_method(const std::string& s) {
    if (s == "strang_split" || s == "strang") return Method::Strang;
    if (s == "exponential_rk2" || s == "exprk2") return Method::ExpRK2;
    throw std::invalid_argument("unknown method '" + s + "'");
}

void linear_flow(const RadialGrid& g, double t, CVec& u, CVec& N) {
    CVec U, Nh;
    forward_raw(g, u, U);
    forward_raw(g, N, Nh);
    linear_hat(g, t, U, Nh);
    inverse_raw(g, U, u);
    inverse_raw(g, Nh, N);
}

namespace {

// Phase tables for a fixed dt.
class Stepper {
public:
    Stepper(const RadialGrid& g, double dt, Method method, const SolverOptions& opt) : g_(g), dt_(dt), method_(method), opt_(opt) {
        const std::size_t n = g.n;
        hu_.resize(n);
        hn_.resize(n);
        inv_jb_.resize(n);
        for (std::size_t m = 0; m < n; ++m) {
            const double xi = g.xi(m), jb = japanese(xi);
            hu_[m] = std::polar(1.0, -0.5 * dt * xi * xi);
            hn_[m] = std::polar(1.0, 0.5 * dt * jb);
            inv_jb_[m] = 1.0 / jb;
        }
    }

    void advance(const CVec& u_in, const CVec& N_in, CVec& u_out, CVec& N_out) {
        const std::size_t n = g_.n;
        forward_raw(g_, u_in, U_);
        forward_raw(g_, N_in, Nh_);
        if (method_ == Method::Strang) {
            half(U_, Nh_);
            inverse_raw(g_, U_, u_);
            inverse_raw(g_, Nh_, N_);
            // exact nonlinear flow: |u| and Re N are both frozen during the substep
            tmp_.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                u_[i] *= std::polar(1.0, -dt_ * opt_.coupling * N_[i].real());
                tmp_[i] = std::norm(u_[i]);
            }
            forward_raw(g_, tmp_, S_);
            forward_raw(g_, u_, U_);
            const cplx mi(0.0, -dt_ * opt_.coupling * opt_.kg_sign);
            for (std::size_t m = 0; m < n; ++m) Nh_[m] += mi * S_[m] * inv_jb_[m];
            half(U_, Nh_);
        } else {
            // Lawson midpoint: y+ = E(h) y + h E(h/2) F(E(h/2)(y + h/2 F(y)))
            nonlin(U_, Nh_, FU_, FN_);
            YU_.resize(n);
            YN_.resize(n);
            for (std::size_t m = 0; m < n; ++m) {
                YU_[m] = U_[m] + 0.5 * dt_ * FU_[m];
                YN_[m] = Nh_[m] + 0.5 * dt_ * FN_[m];
            }
            half(YU_, YN_);
            nonlin(YU_, YN_, FU_, FN_);
            half(FU_, FN_);
            half(U_, Nh_);
            half(U_, Nh_);
            for (std::size_t m = 0; m < n; ++m) {
                U_[m] += dt_ * FU_[m];
                Nh_[m] += dt_ * FN_[m];
            }
        }
        inverse_raw(g_, U_, u_out);
        inverse_raw(g_, Nh_, N_out);
    }

private:
    void half(CVec& U, CVec& N) const {
        for (std::size_t m = 0; m < g_.n; ++m) {
            U[m] *= hu_[m];
            N[m] *= hn_[m];
        }
    }

    // F(Y) = (-i c FT(u Re N), -i c sign FT(|u|^2) / <xi>)
    void nonlin(const CVec& U, const CVec& Nh, CVec& FU, CVec& FN) {
        const std::size_t n = g_.n;
        inverse_raw(g_, U, u_);
        inverse_raw(g_, Nh, N_);
        tmp_.resize(n);
        const cplx mi(0.0, -opt_.coupling);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = u_[i] * N_[i].real();
        forward_raw(g_, tmp_, FU);
        for (auto& z : FU) z *= mi;
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = std::norm(u_[i]);
        forward_raw(g_, tmp_, FN);
        for (std::size_t m = 0; m < n; ++m) FN[m] *= mi * static_cast<double>(opt_.kg_sign) * inv_jb_[m];
    }

    const RadialGrid& g_;
    double dt_;
    Method method_;
    SolverOptions opt_;
    CVec hu_, hn_;
    std::vector<double> inv_jb_;
    CVec U_, Nh_, u_, N_, tmp_, S_, FU_, FN_, YU_, YN_;
};

}  // namespace

KGSState step(const KGSState& s, double dt, Method method, const SolverOptions& opt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be positive");
    s.check();
    KGSState out{RadialField(s.u.grid), RadialField(s.N.grid), s.t + dt};
    Stepper st(*s.u.grid, dt, method, opt);
    st.advance(s.u.values, s.N.values, out.u.values, out.N.values);
    return out;
}

Trajectory solve(const RadialField& u0, const RadialField& N0, double T, double dt, Method method, const SolverOptions& opt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("solve: T and dt must be positive");
    if (opt.save_every < 1) throw std::invalid_argument("solve: save_every must be >= 1");
    KGSState s{u0, N0, 0.0};
    s.check();
    const RadialGrid& g = *u0.grid;
    Trajectory tr;
    tr.dt = dt;
    tr.save_every = opt.save_every;
    tr.method = method;
    tr.grid = u0.grid;
    tr.states.push_back(s);
    const double m0 = l2(g, s.u.values);
    tr.mass.push_back(m0);
    const long steps = std::lround(T / dt);
    if (std::abs(steps * dt - T) > 1e-9 * T) throw std::invalid_argument("solve: T must be a multiple of dt");
    double size = state_size(g, s);
    Stepper st(g, dt, method, opt);
    KGSState next{RadialField(u0.grid), RadialField(u0.grid), 0.0};
    for (long n = 1; n <= steps; ++n) {
        st.advance(s.u.values, s.N.values, next.u.values, next.N.values);
        next.t = n * dt;
        const double ns = state_size(g, next);
        if (!std::isfinite(ns) || ns > opt.growth_limit * std::max(size, 1e-300)) {
            tr.status = "unstable";
            tr.final_state = s;
            return tr;
        }
        const double m = l2(g, next.u.values);
        tr.mass.push_back(m);
        tr.mass_drift = std::max(tr.mass_drift, std::abs(m - m0));
        std::swap(s, next);
        size = ns;
        if (n % opt.save_every == 0) {
            const double b = std::max(boundary_fraction(g, s.u.values), boundary_fraction(g, s.N.values));
            tr.max_boundary = std::max(tr.max_boundary, b);
            tr.states.push_back(s);
            if (b > opt.reflect_tol) {
                tr.status = "reflect";
                tr.final_state = s;
                return tr;
            }
        }
    }
    tr.final_state = s;
    return tr;
}

double residual(const Trajectory& traj, const SolverOptions& opt) {
    if (traj.states.size() < 3) throw std::invalid_argument("residual: trajectory needs >= 3 snapshots");
    const RadialGrid& g = *traj.grid;
    const double h = traj.snapshot_dt();
    const auto& s0 = traj.states.front();
    const double scale = l2(g, s0.u.values) + l2(g, s0.N.values);
    if (!(scale > 0.0)) return 0.0;
    double worst = 0.0;
    CVec Up, Um, U, Np, Nm, Nh, P, S, tmp(g.n);
    for (std::size_t l = 1; l + 1 < traj.states.size(); ++l) {
        const auto& a = traj.states[l - 1];
        const auto& b = traj.states[l];
        const auto& c = traj.states[l + 1];
        forward_raw(g, a.u.values, Um);
        forward_raw(g, c.u.values, Up);
        forward_raw(g, b.u.values, U);
        forward_raw(g, a.N.values, Nm);
        forward_raw(g, c.N.values, Np);
        forward_raw(g, b.N.values, Nh);
        for (std::size_t i = 0; i < g.n; ++i) tmp[i] = b.u.values[i] * b.N.values[i].real();
        forward_raw(g, tmp, P);
        for (std::size_t i = 0; i < g.n; ++i) tmp[i] = std::norm(b.u.values[i]);
        forward_raw(g, tmp, S);
        const cplx I(0.0, 1.0);
        CVec ru(g.n), rn(g.n);
        for (std::size_t m = 0; m < g.n; ++m) {
            const double xi = g.xi(m), jb = japanese(xi);
            ru[m] = I * (Up[m] - Um[m]) / (2.0 * h) - xi * xi * U[m] - opt.coupling * P[m];
            rn[m] = I * (Np[m] - Nm[m]) / (2.0 * h) + jb * Nh[m] - opt.coupling * opt.kg_sign * S[m] / jb;
        }
        worst = std::max(worst, hs_norm_hat(g, ru, -2.0) + hs_norm_hat(g, rn, -1.0));
    }
    return worst / scale;
}

PicardResult picard_iterate(const RadialField& u0, const RadialField& N0, double T, double dt, int iterations,
                            const SolverOptions& opt) {
    if (iterations < 1) throw std::invalid_argument("picard_iterate: iterations must be >= 1");
    KGSState s0{u0, N0, 0.0};
    s0.check();
    const RadialGrid& g = *u0.grid;
    const long L = std::lround(T / dt);
    if (L < 1 || std::abs(L * dt - T) > 1e-9 * T) throw std::invalid_argument("picard_iterate: T must be a positive multiple of dt");
    const std::size_t nodes = static_cast<std::size_t>(L) + 1;

    CVec U0, NN0;
    forward_raw(g, u0.values, U0);
    forward_raw(g, N0.values, NN0);
    // iterate stored as spatial fields at every node
    std::vector<CVec> cu(nodes), cn(nodes);
    for (std::size_t l = 0; l < nodes; ++l) {
        CVec U = U0, Nh = NN0;
        linear_hat(g, l * dt, U, Nh);
        inverse_raw(g, U, cu[l]);
        inverse_raw(g, Nh, cn[l]);
    }
    PicardResult res;
    auto record = [&](const std::vector<CVec>& a, const std::vector<CVec>& b) {
        Trajectory tr;
        tr.dt = dt;
        tr.save_every = opt.save_every;
        tr.grid = u0.grid;
        tr.status = "picard";
        for (std::size_t l = 0; l < nodes; l += opt.save_every)
            tr.states.push_back({RadialField(u0.grid, a[l]), RadialField(u0.grid, b[l]), l * dt});
        tr.final_state = {RadialField(u0.grid, a.back()), RadialField(u0.grid, b.back()), T};
        res.iterates.push_back(std::move(tr));
    };
    record(cu, cn);

    const cplx mi(0.0, -opt.coupling);
    CVec tmp(g.n), F, G, accU(g.n), accN(g.n), prevU(g.n), prevN(g.n);
    for (int it = 0; it < iterations; ++it) {
        std::vector<CVec> nu(nodes), nn(nodes);
        std::fill(accU.begin(), accU.end(), cplx(0.0));
        std::fill(accN.begin(), accN.end(), cplx(0.0));
        double diff = 0.0;
        for (std::size_t l = 0; l < nodes; ++l) {
            const double t = l * dt;
            // pulled-back sources e^{+i s xi^2} F_u and e^{-i s <xi>} F_N at this node
            for (std::size_t i = 0; i < g.n; ++i) tmp[i] = cu[l][i] * cn[l][i].real();
            forward_raw(g, tmp, F);
            for (std::size_t i = 0; i < g.n; ++i) tmp[i] = std::norm(cu[l][i]);
            forward_raw(g, tmp, G);
            CVec curU(g.n), curN(g.n);
            for (std::size_t m = 0; m < g.n; ++m) {
                const double xi = g.xi(m), jb = japanese(xi);
                curU[m] = mi * F[m] * std::polar(1.0, t * xi * xi);
                curN[m] = mi * static_cast<double>(opt.kg_sign) * G[m] / jb * std::polar(1.0, -t * jb);
            }
            if (l > 0)
                for (std::size_t m = 0; m < g.n; ++m) {
                    accU[m] += 0.5 * dt * (prevU[m] + curU[m]);
                    accN[m] += 0.5 * dt * (prevN[m] + curN[m]);
                }
            prevU = curU;
            prevN = curN;
            CVec U(g.n), Nh(g.n);
            for (std::size_t m = 0; m < g.n; ++m) {
                U[m] = U0[m] + accU[m];
                Nh[m] = NN0[m] + accN[m];
            }
            linear_hat(g, t, U, Nh);
            inverse_raw(g, U, nu[l]);
            inverse_raw(g, Nh, nn[l]);
            CVec du(g.n), dn(g.n);
            for (std::size_t i = 0; i < g.n; ++i) {
                du[i] = nu[l][i] - cu[l][i];
                dn[i] = nn[l][i] - cn[l][i];
            }
            diff = std::max(diff, l2(g, du) + l2(g, dn));
        }
        res.differences.push_back(diff);
        if (res.differences.size() >= 2) {
            const double prev = res.differences[res.differences.size() - 2];
            const double r = prev > 0.0 ? diff / prev : 0.0;
            res.ratios.push_back(r);
            if (r >= 1.0) res.contractive = false;
        }
        cu.swap(nu);
        cn.swap(nn);
        record(cu, cn);
    }
    return res;
}

ScatterReport scattering_diagnostic(const Trajectory& traj, double eps) {
    ScatterReport rep;
    if (traj.states.empty()) return rep;
    const RadialGrid& g = *traj.grid;
    auto find = [&](double t) -> const KGSState* {
        for (const auto& s : traj.states)
            if (std::abs(s.t - t) < 1e-9 * std::max(1.0, t)) return &s;
        return nullptr;
    };
    auto pull = [&](const KGSState& s, CVec& W, CVec& M) {
        forward_raw(g, s.u.values, W);
        forward_raw(g, s.N.values, M);
        linear_hat(g, -s.t, W, M);
    };
    CVec W1, M1, W2, M2, d(g.n), e(g.n);
    const double T = traj.states.back().t;
    for (double t = 1.0; 2.0 * t <= T + 1e-12; t *= 2.0) {
        const KGSState* a = find(t);
        const KGSState* b = find(2.0 * t);
        if (!a || !b) continue;
        pull(*a, W1, M1);
        pull(*b, W2, M2);
        for (std::size_t m = 0; m < g.n; ++m) {
            d[m] = W2[m] - W1[m];
            e[m] = M2[m] - M1[m];
        }
        rep.pairs.push_back({t, 2.0 * t, hs_norm_hat(g, d, 0.0), hs_norm_hat(g, e, -0.5 + eps)});
    }
    CVec W0, M0;
    pull(traj.states.front(), W0, M0);
    pull(traj.states.back(), W2, M2);
    for (std::size_t m = 0; m < g.n; ++m) d[m] = W2[m] - W0[m];
    rep.correction = hs_norm_hat(g, d, 0.0);
    // the first pairs can grow while the interaction switches on
    rep.trend_pairs = rep.pairs.empty() ? 0 : 1;
    for (std::size_t i = 1; i < rep.pairs.size(); ++i) {
        if (rep.pairs[i].du < rep.pairs[i - 1].du && rep.pairs[i].dN < rep.pairs[i - 1].dN)
            ++rep.trend_pairs;
        else
            rep.trend_pairs = 1;
    }
    rep.decreasing = rep.trend_pairs >= 3;
    return rep;
}

KGSState gaussian_data(const GridPtr& grid, double delta, double width) {
    KGSState s{RadialField(grid), RadialField(grid), 0.0};
    const RadialGrid& g = *grid;
    for (std::size_t i = 0; i < g.n; ++i) {
        const double r = g.r(i);
        const double v = std::exp(-r * r / (width * width));
        s.u.values[i] = v;
        s.N.values[i] = v;
    }
    const double nrm = l2(g, s.u.values);
    for (std::size_t i = 0; i < g.n; ++i) {
        s.u.values[i] *= delta / nrm;
        s.N.values[i] *= delta / nrm;
    }
    return s;
}

}  // namespace kgs

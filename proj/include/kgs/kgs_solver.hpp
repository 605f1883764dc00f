// Radial Klein-Gordon-Schrodinger system in first-order form:
//   (i d_t + Lap) u = u Re N,   (i d_t + <D>) N = <D>^{-1} |u|^2
// with exact linear flows (u: exp(-i t xi^2), N: exp(+i t <xi>)).
#pragma once

#include <string>
#include <vector>

#include "kgs/function_norms.hpp"

namespace kgs {

struct KGSState {
    RadialField u;
    RadialField N;
    double t = 0.0;
    void check() const;
};

struct SecondOrderData {
    RadialField n0, n1;
    void check() const;  // imaginary parts <= 1e-12 relative
};

RadialField to_first_order(const SecondOrderData& data);  // N0 = n0 - i <D>^{-1} n1
SecondOrderData from_first_order(const RadialField& N);   // n0 = Re N, n1 = -<D> Im N

enum class Method { Strang, ExpRK2 };
const char* method_name(Method m);
Method parse_method(const std::string& s);

struct SolverOptions {
    double coupling = 1.0;   // scales both nonlinearities; 0 gives the free flows
    int kg_sign = +1;        // sign of the N-equation source
    double growth_limit = 10.0;
    double reflect_tol = 1e-6;
    int save_every = 1;      // keep every m-th state
};

// Linear flows over time t (u-equation and N-equation).
void linear_flow(const RadialGrid& g, double t, CVec& u, CVec& N);

KGSState step(const KGSState& s, double dt, Method method, const SolverOptions& opt = {});

struct Trajectory {
    std::vector<KGSState> states;  // uniform spacing save_every * dt
    KGSState final_state;          // last computed state, saved or not
    double dt = 0.0;               // stepping dt
    int save_every = 1;
    Method method = Method::Strang;
    GridPtr grid;
    std::vector<double> mass;      // ||u||_2 after every step, starting with the data
    double mass_drift = 0.0;       // max_t | ||u(t)|| - ||u(0)|| |
    double max_boundary = 0.0;
    std::string status = "ok";     // ok | unstable | reflect

    double snapshot_dt() const { return dt * save_every; }
    bool ok() const { return status == "ok"; }
};

Trajectory solve(const RadialField& u0, const RadialField& N0, double T, double dt, Method method, const SolverOptions& opt = {});

// Max over interior snapshots of ||i u_t + Lap u - u Re N||_{H^-2} + ||i N_t + <D> N - <D>^{-1}|u|^2||_{H^-1}
// with centered differences, divided by ||u0||_2 + ||N0||_2.
double residual(const Trajectory& traj, const SolverOptions& opt = {});

struct PicardResult {
    std::vector<Trajectory> iterates;  // states subsampled by save_every
    std::vector<double> differences;   // sup_t ||X^{m+1} - X^m||_2 (u and N summed)
    std::vector<double> ratios;        // successive difference ratios
    bool contractive = true;
};

PicardResult picard_iterate(const RadialField& u0, const RadialField& N0, double T, double dt, int iterations,
                            const SolverOptions& opt = {});

struct ScatterPair {
    double t1 = 0.0, t2 = 0.0;
    double du = 0.0;  // ||w(t2) - w(t1)||_{L2}
    double dN = 0.0;  // ||M(t2) - M(t1)||_{H^{-1/2+eps}}
};

struct ScatterReport {
    std::vector<ScatterPair> pairs;
    double correction = 0.0;  // ||w(T) - u0||_2
    int trend_pairs = 0;      // length of the final run of pairs where du and dN both decrease
    bool decreasing = false;  // trend_pairs >= 3
};

// Dyadic pairs (t, 2t), t = 1, 2, 4, ... within the trajectory.
ScatterReport scattering_diagnostic(const Trajectory& traj, double eps = 0.1);

// Default data: delta times a unit-L2 Gaussian of width w (u complex-valued, N real).
KGSState gaussian_data(const GridPtr& grid, double delta, double width = 2.0);

}  // namespace kgs

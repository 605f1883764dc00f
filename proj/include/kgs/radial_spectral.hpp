// Radial grids, the 3D radial Fourier transform (DST-I on v = r f), radial quadrature.
#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace kgs {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846;

// Interior nodes r_i = i*dr (i = 1..n), dual nodes xi_m = m*pi/r_max (m = 1..n).
// Stored zero-based: r(0) is the first interior node.
struct RadialGrid {
    double r_max = 0.0;
    std::size_t n = 0;
    double dr = 0.0;

    RadialGrid(double r_max_, std::size_t n_);

    double r(std::size_t i) const { return static_cast<double>(i + 1) * dr; }
    double xi(std::size_t m) const { return static_cast<double>(m + 1) * kPi / r_max; }
    double dxi() const { return kPi / r_max; }
    double xi_max() const { return xi(n - 1); }
    std::vector<double> nodes() const;
    std::vector<double> dual_nodes() const;
    bool same_as(const RadialGrid& o) const { return r_max == o.r_max && n == o.n; }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// Validating factory used by everything downstream: r_max > 0 and n >= 16.
GridPtr make_grid(double r_max, std::size_t n_points);

struct RadialField {
    GridPtr grid;
    CVec values;

    RadialField() = default;
    RadialField(GridPtr g);
    RadialField(GridPtr g, CVec v);
    std::size_t size() const { return values.size(); }
    void check() const;  // length + finiteness
};

struct FrequencyField {
    GridPtr grid;
    CVec coeffs;

    FrequencyField() = default;
    FrequencyField(GridPtr g);
    FrequencyField(GridPtr g, CVec c);
    void check() const;
};

FrequencyField forward_transform(const RadialField& f);
RadialField inverse_transform(const FrequencyField& F);

// Raw-buffer versions used by hot loops: the output buffer is resized as needed.
void forward_raw(const RadialGrid& g, const CVec& values, CVec& coeffs);
void inverse_raw(const RadialGrid& g, const CVec& coeffs, CVec& values);

// In-place DST-I (FFTW RODFT00) applied separately to real and imaginary parts.
void dst1_inplace(CVec& data);

cplx l2_inner(const RadialField& f, const RadialField& g);
double lq_norm(const RadialField& f, double q);  // q = +inf allowed
double lq_norm_raw(const RadialGrid& g, const CVec& values, double q);

// sqrt((2pi)^-3 * 4pi * sum |F_m|^2 xi_m^2 dxi); equals the L2 norm of the inverse.
double dual_l2_norm(const FrequencyField& F);

// Energy fraction of f in r > frac * r_max.
double boundary_fraction(const RadialGrid& g, const CVec& values, double frac = 0.9);

class grid_mismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

void require_same_grid(const GridPtr& a, const GridPtr& b);

}  // namespace kgs

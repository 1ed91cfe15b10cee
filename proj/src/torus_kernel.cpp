#include "svl/torus_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svl/error.hpp"

namespace svl
{
namespace
{
constexpr int lanes = 16;

// cos/sin(2 pi m x) for m in [-kmax, kmax] and one block of points, one axis.
struct AxisTable
{
    int kmax = 0;
    std::vector<double> c, s;  // [(m + kmax) * lanes + lane]

    explicit AxisTable(int k) : kmax(k), c((2 * k + 1) * lanes), s((2 * k + 1) * lanes) {}

    const double* cos_row(int m) const { return &c[(m + kmax) * lanes]; }
    const double* sin_row(int m) const { return &s[(m + kmax) * lanes]; }

    void fill(const double* x)
    {
        double* c0 = &c[kmax * lanes];
        double* s0 = &s[kmax * lanes];
        for (int l = 0; l < lanes; ++l)
        {
            c0[l] = 1.0;
            s0[l] = 0.0;
        }
        if (kmax == 0)
            return;
        double* c1 = c0 + lanes;
        double* s1 = s0 + lanes;
        for (int l = 0; l < lanes; ++l)
        {
            c1[l] = std::cos(two_pi * x[l]);
            s1[l] = std::sin(two_pi * x[l]);
        }
        for (int m = 2; m <= kmax; ++m)
        {
            double* cm = c0 + m * lanes;
            double* sm = s0 + m * lanes;
            const double* cp = cm - lanes;
            const double* sp = sm - lanes;
#pragma omp simd
            for (int l = 0; l < lanes; ++l)
            {
                cm[l] = cp[l] * c1[l] - sp[l] * s1[l];
                sm[l] = sp[l] * c1[l] + cp[l] * s1[l];
            }
        }
        for (int m = 1; m <= kmax; ++m)
        {
            double* cn = c0 - m * lanes;
            double* sn = s0 - m * lanes;
            const double* cm = c0 + m * lanes;
            const double* sm = s0 + m * lanes;
            for (int l = 0; l < lanes; ++l)
            {
                cn[l] = cm[l];
                sn[l] = -sm[l];
            }
        }
    }
};

// Walk every point block and every cube mode, calling
//   begin(block_start, count), op(mode_index, cos[], sin[]), end(block_start, count).
template<class Begin, class Op, class End>
void for_each_block_mode(const HalfCube& cube,
                         const std::array<std::span<const double>, 3>& x,
                         Begin&& begin, Op&& op, End&& end)
{
    const int kmax = cube.kmax();
    const std::size_t npts = x[0].size();
    std::array<AxisTable, 3> axes{AxisTable(kmax), AxisTable(kmax), AxisTable(kmax)};
    alignas(64) double xb[lanes];
    alignas(64) double c12[lanes], s12[lanes], cth[lanes], sth[lanes];

    for (std::size_t start = 0; start < npts; start += lanes)
    {
        const int count = int(std::min<std::size_t>(lanes, npts - start));
        for (int d = 0; d < 3; ++d)
        {
            for (int l = 0; l < lanes; ++l)
                xb[l] = l < count ? x[d][start + l] : 0.0;
            axes[d].fill(xb);
        }
        begin(start, count);
        long idx = 0;
        for (int a = 0; a <= kmax; ++a)
        {
            const double* ca = axes[0].cos_row(a);
            const double* sa = axes[0].sin_row(a);
            for (int b = (a == 0 ? 0 : -kmax); b <= kmax; ++b)
            {
                const double* cb = axes[1].cos_row(b);
                const double* sb = axes[1].sin_row(b);
#pragma omp simd
                for (int l = 0; l < lanes; ++l)
                {
                    c12[l] = ca[l] * cb[l] - sa[l] * sb[l];
                    s12[l] = sa[l] * cb[l] + ca[l] * sb[l];
                }
                for (int c = (a == 0 && b == 0 ? 1 : -kmax); c <= kmax; ++c)
                {
                    const double* cc = axes[2].cos_row(c);
                    const double* sc = axes[2].sin_row(c);
#pragma omp simd
                    for (int l = 0; l < lanes; ++l)
                    {
                        cth[l] = c12[l] * cc[l] - s12[l] * sc[l];
                        sth[l] = s12[l] * cc[l] + c12[l] * sc[l];
                    }
                    op(idx, cth, sth);
                    ++idx;
                }
            }
        }
        end(start, count);
    }
}

void check_resolution(const DensityGrid& grid, const SpectralKernel& kernel)
{
    if (grid.resolution() < 2 * kernel.mode_cutoff() + 2)
        throw ConfigError("grid resolution " + std::to_string(grid.resolution())
                          + " aliases kernel modes: need n >= 2K+2 = "
                          + std::to_string(2 * kernel.mode_cutoff() + 2));
}
}  // namespace

//---------------------------------------------------------------------------//
HalfCube::HalfCube(int kmax) : kmax_(kmax), modes_(half_cube_modes(kmax))
{
    require(kmax >= 0, "mode cutoff must be nonnegative");
}

long HalfCube::index_of(const Mode& k) const
{
    Mode h = k.in_positive_half() ? k : -k;
    if (!h.in_positive_half() || h.linf() > kmax_)
        return -1;
    // Closed form of the nested enumeration order.
    const long w = 2 * kmax_ + 1;
    if (h.k1 == 0 && h.k2 == 0)
        return h.k3 - 1;
    if (h.k1 == 0)
        return kmax_ + (h.k2 - 1) * w + (h.k3 + kmax_);
    return kmax_ + kmax_ * w + (h.k1 - 1) * w * w + (h.k2 + kmax_) * w
           + (h.k3 + kmax_);
}

void accumulate_spectrum(const HalfCube& cube,
                         const std::array<std::span<const double>, 3>& x,
                         std::span<const double> w, std::span<Complex> out)
{
    require(out.size() == cube.size(), "spectrum size does not match cube");
    alignas(64) double wb[lanes];
    for_each_block_mode(
        cube, x,
        [&](std::size_t start, int count) {
            for (int l = 0; l < lanes; ++l)
                wb[l] = l < count ? w[start + l] : 0.0;
        },
        [&](long idx, const double* c, const double* s) {
            double re = 0.0, im = 0.0;
#pragma omp simd reduction(+ : re, im)
            for (int l = 0; l < lanes; ++l)
            {
                re += wb[l] * c[l];
                im += wb[l] * s[l];
            }
            out[idx] += Complex(re, -im);
        },
        [](std::size_t, int) {});
}

void evaluate_gradient_series(const HalfCube& cube,
                              const std::array<std::span<const double>, 3>& x,
                              const GradientSeries& a, VectorField& out_a,
                              const GradientSeries* b, VectorField* out_b)
{
    require(a.alpha.size() == cube.size() && a.beta.size() == cube.size(),
            "gradient series size does not match cube");
    const bool two = b != nullptr;
    if (two)
        require(out_b != nullptr && b->alpha.size() == cube.size(),
                "second gradient series size does not match cube");
    const std::size_t npts = x[0].size();
    for (int d = 0; d < 3; ++d)
    {
        out_a[d].assign(npts, 0.0);
        if (two)
            (*out_b)[d].assign(npts, 0.0);
    }
    std::vector<std::array<double, 3>> kvec(cube.size());
    for (std::size_t m = 0; m < cube.size(); ++m)
        kvec[m] = cube.modes()[m].as_vec();

    alignas(64) double oa[3][lanes], ob[3][lanes];
    for_each_block_mode(
        cube, x,
        [&](std::size_t, int) {
            for (int d = 0; d < 3; ++d)
                for (int l = 0; l < lanes; ++l)
                    oa[d][l] = ob[d][l] = 0.0;
        },
        [&](long idx, const double* c, const double* s) {
            const double kx = kvec[idx][0], ky = kvec[idx][1], kz = kvec[idx][2];
            const double al = a.alpha[idx], be = a.beta[idx];
#pragma omp simd
            for (int l = 0; l < lanes; ++l)
            {
                double t = al * c[l] + be * s[l];
                oa[0][l] += kx * t;
                oa[1][l] += ky * t;
                oa[2][l] += kz * t;
            }
            if (two)
            {
                const double al2 = b->alpha[idx], be2 = b->beta[idx];
#pragma omp simd
                for (int l = 0; l < lanes; ++l)
                {
                    double t = al2 * c[l] + be2 * s[l];
                    ob[0][l] += kx * t;
                    ob[1][l] += ky * t;
                    ob[2][l] += kz * t;
                }
            }
        },
        [&](std::size_t start, int count) {
            for (int d = 0; d < 3; ++d)
                for (int l = 0; l < count; ++l)
                {
                    out_a[d][start + l] = oa[d][l];
                    if (two)
                        (*out_b)[d][start + l] = ob[d][l];
                }
        });
}

//---------------------------------------------------------------------------//
SpectralKernel::SpectralKernel(int mode_cutoff, double delta, double sign)
    : cube_(mode_cutoff), delta_(delta), sign_(sign)
{
    require(mode_cutoff >= 1, "kernel mode cutoff K must be >= 1");
    require(delta > 0.0 && delta < 0.5, "regularization delta must lie in (0, 1/2)");
    require(sign == 1.0 || sign == -1.0, "green sign must be +1 or -1");
    green_.reserve(cube_.size());
    for (const Mode& k : cube_.modes())
        green_.push_back(green(k));
}

double SpectralKernel::mollifier(const Mode& k) const
{
    return std::exp(-delta_ * delta_ * double(k.norm2()));
}

double SpectralKernel::green(const Mode& k) const
{
    require(k.norm2() > 0, "the k = 0 mode is excluded");
    return sign_ * mollifier(k) / double(k.norm2());
}

std::array<Complex, 3> SpectralKernel::coeffs(const Mode& k) const
{
    const double g = green(k);
    const Vec3 kv = k.as_vec();
    return {Complex(0.0, two_pi * kv[0] * g), Complex(0.0, two_pi * kv[1] * g),
            Complex(0.0, two_pi * kv[2] * g)};
}

SpectralKernel build_kernel(int mode_cutoff, double delta, double sign)
{
    return SpectralKernel(mode_cutoff, delta, sign);
}

//---------------------------------------------------------------------------//
DensityGrid::DensityGrid(int n) : n_(n)
{
    require(n >= 1, "grid resolution must be positive");
    values_.assign(std::size_t(n) * n * n, 0.0);
}

Vec3 DensityGrid::node(int i, int j, int l) const
{
    const double h = 1.0 / n_;
    return {-0.5 + i * h, -0.5 + j * h, -0.5 + l * h};
}

double DensityGrid::total_mass() const
{
    double s = 0.0;
    for (double v : values_)
        s += v;
    return s * cell_volume();
}

DensityGrid deposit_density(const ParticleEnsemble& ensemble, int n)
{
    require(n >= 4, "deposition grid needs n >= 4");
    require(!ensemble.empty(), "cannot deposit an empty ensemble");
    DensityGrid grid(n);
    const double inv_vol = 1.0 / grid.cell_volume();
    for (std::size_t p = 0; p < ensemble.size(); ++p)
    {
        int base[3];
        double frac[3];
        for (int d = 0; d < 3; ++d)
        {
            double s = (ensemble.x[d][p] + 0.5) * n;
            double fl = std::floor(s);
            frac[d] = s - fl;
            base[d] = int(fl);
            base[d] = ((base[d] % n) + n) % n;
        }
        const double q = ensemble.w[p] * inv_vol;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c)
                {
                    double wt = (a ? frac[0] : 1 - frac[0]) * (b ? frac[1] : 1 - frac[1])
                                * (c ? frac[2] : 1 - frac[2]);
                    grid.at((base[0] + a) % n, (base[1] + b) % n, (base[2] + c) % n)
                        += q * wt;
                }
    }
    return grid;
}

//---------------------------------------------------------------------------//
DensitySpectrum density_spectrum(std::span<const double> x0,
                                 std::span<const double> x1,
                                 std::span<const double> x2,
                                 std::span<const double> w, int kmax)
{
    DensitySpectrum rho(kmax);
    accumulate_spectrum(rho.cube, {x0, x1, x2}, w, rho.values);
    return rho;
}

DensitySpectrum density_spectrum(const ParticleEnsemble& ensemble, int kmax)
{
    return density_spectrum(ensemble.x[0], ensemble.x[1], ensemble.x[2],
                            ensemble.w, kmax);
}

DensitySpectrum density_spectrum(const DensityGrid& grid, int kmax)
{
    const int n = grid.resolution();
    const std::size_t total = std::size_t(n) * n * n;
    std::array<std::vector<double>, 3> pts;
    for (auto& p : pts)
        p.reserve(total);
    std::vector<double> w(total);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
            {
                Vec3 x = grid.node(i, j, l);
                for (int d = 0; d < 3; ++d)
                    pts[d].push_back(x[d]);
                w[grid.index(i, j, l)] = grid.at(i, j, l) * grid.cell_volume();
            }
    return density_spectrum(pts[0], pts[1], pts[2], w, kmax);
}

GradientSeries field_series(const DensitySpectrum& rho, const SpectralKernel& kernel)
{
    require(rho.cube.kmax() == kernel.mode_cutoff(),
            "density spectrum and kernel use different mode cutoffs");
    GradientSeries series(rho.cube.size());
    auto green = kernel.green_table();
    // E = sum_{k in Z+} 2 Re(2 pi i k G rho e^{i theta}).
    for (std::size_t m = 0; m < rho.cube.size(); ++m)
    {
        const double f = 2.0 * two_pi * green[m];
        series.alpha[m] = -f * rho.values[m].imag();
        series.beta[m] = -f * rho.values[m].real();
    }
    return series;
}

std::vector<Vec3> field_at_points(const DensitySpectrum& rho,
                                  const SpectralKernel& kernel,
                                  std::span<const Vec3> points)
{
    GradientSeries series = field_series(rho, kernel);
    std::array<std::vector<double>, 3> pts;
    for (int d = 0; d < 3; ++d)
    {
        pts[d].reserve(points.size());
        for (const Vec3& p : points)
            pts[d].push_back(p[d]);
    }
    VectorField out;
    evaluate_gradient_series(rho.cube, {pts[0], pts[1], pts[2]}, series, out);
    std::vector<Vec3> result(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        result[i] = {out[0][i], out[1][i], out[2][i]};
    return result;
}

std::vector<Vec3> field_at_points(const DensityGrid& grid,
                                  const SpectralKernel& kernel,
                                  std::span<const Vec3> points)
{
    check_resolution(grid, kernel);
    return field_at_points(density_spectrum(grid, kernel.mode_cutoff()), kernel,
                           points);
}

double potential_energy(const DensitySpectrum& rho, const SpectralKernel& kernel)
{
    require(rho.cube.kmax() == kernel.mode_cutoff(),
            "density spectrum and kernel use different mode cutoffs");
    auto green = kernel.green_table();
    double sum = 0.0;
    for (std::size_t m = 0; m < rho.cube.size(); ++m)
        sum += green[m] * std::norm(rho.values[m]);
    return -2.0 * sum;
}

double potential_energy(const DensityGrid& grid, const SpectralKernel& kernel)
{
    check_resolution(grid, kernel);
    return potential_energy(density_spectrum(grid, kernel.mode_cutoff()), kernel);
}
}  // namespace svl

#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "svl/ensemble.hpp"
#include "svl/vec.hpp"

namespace svl
{
using Complex = std::complex<double>;

//---------------------------------------------------------------------------//
// Blocked Fourier-phase kernels
//---------------------------------------------------------------------------//
/*!
 * The half lattice Z^3_+ restricted to |k|_inf <= kmax, in the nested order
 * produced by half_cube_modes. All mode sums in this library run over such a
 * cube; the partner -k of each mode is implied by conjugate symmetry.
 */
class HalfCube
{
  public:
    explicit HalfCube(int kmax);

    int kmax() const { return kmax_; }
    std::size_t size() const { return modes_.size(); }
    const std::vector<Mode>& modes() const { return modes_; }

    //! Index of k (or of -k if k lies in the negative half); -1 if outside.
    long index_of(const Mode& k) const;

  private:
    int kmax_;
    std::vector<Mode> modes_;
};

//! out[m] += sum_i w_i exp(-2 pi i k_m . x_i) over the cube modes.
void accumulate_spectrum(const HalfCube& cube,
                         const std::array<std::span<const double>, 3>& x,
                         std::span<const double> w, std::span<Complex> out);

//! Real coefficients of a gradient-type mode series
//!   u(x) = sum_k k (alpha_k cos 2 pi k.x + beta_k sin 2 pi k.x).
struct GradientSeries
{
    std::vector<double> alpha;
    std::vector<double> beta;

    explicit GradientSeries(std::size_t n = 0) : alpha(n, 0.0), beta(n, 0.0) {}
};

using VectorField = std::array<std::vector<double>, 3>;

/*!
 * Evaluate one or two gradient series (sharing a cube) at a set of points.
 *
 * Results are written (not accumulated) into out_a / out_b, which are resized
 * to the number of points. Pass nullptr for an unused second series.
 */
void evaluate_gradient_series(const HalfCube& cube,
                              const std::array<std::span<const double>, 3>& x,
                              const GradientSeries& a, VectorField& out_a,
                              const GradientSeries* b = nullptr,
                              VectorField* out_b = nullptr);

//---------------------------------------------------------------------------//
// Coulomb kernel on the unit torus
//---------------------------------------------------------------------------//
/*!
 * Truncated, mollified Fourier representation of G and grad G on T^3.
 *
 * With the e^{2 pi i k.x} convention, Ghat(k) = sign * mhat(delta, k) / |k|^2
 * and the gradient coefficient is 2 pi i k Ghat(k), so that the field and the
 * potential energy derive from the same G.
 */
class SpectralKernel
{
  public:
    SpectralKernel(int mode_cutoff, double delta, double sign);

    int mode_cutoff() const { return cube_.kmax(); }
    double delta() const { return delta_; }
    double sign() const { return sign_; }
    const HalfCube& cube() const { return cube_; }

    //! mhat(delta, k) = exp(-delta^2 |k|^2).
    double mollifier(const Mode& k) const;
    //! Ghat^delta(k) for any nonzero k.
    double green(const Mode& k) const;
    //! Fourier coefficient of grad G^delta at any nonzero k.
    std::array<Complex, 3> coeffs(const Mode& k) const;
    //! Ghat^delta for the cube modes, in cube order.
    std::span<const double> green_table() const { return green_; }

  private:
    HalfCube cube_;
    double delta_;
    double sign_;
    std::vector<double> green_;
};

SpectralKernel build_kernel(int mode_cutoff, double delta, double sign = 1.0);

//---------------------------------------------------------------------------//
// Densities
//---------------------------------------------------------------------------//
//! Nodal density on an n^3 periodic grid with nodes at -1/2 + j/n.
class DensityGrid
{
  public:
    explicit DensityGrid(int n);

    int resolution() const { return n_; }
    double cell_volume() const { return 1.0 / (double(n_) * n_ * n_); }
    std::size_t index(int i, int j, int l) const
    {
        return (std::size_t(i) * n_ + j) * n_ + l;
    }
    Vec3 node(int i, int j, int l) const;

    double& at(int i, int j, int l) { return values_[index(i, j, l)]; }
    double at(int i, int j, int l) const { return values_[index(i, j, l)]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double total_mass() const;

    //! Fill with samples of a function of position.
    template<class F>
    static DensityGrid sample(int n, F&& f)
    {
        DensityGrid g(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l)
                    g.at(i, j, l) = f(g.node(i, j, l));
        return g;
    }

  private:
    int n_;
    std::vector<double> values_;
};

//! Cloud-in-cell (trilinear) deposition of particle weights.
DensityGrid deposit_density(const ParticleEnsemble& ensemble, int n);

//! Fourier coefficients rho_hat(k) = int rho e^{-2 pi i k.x} on a half cube.
struct DensitySpectrum
{
    HalfCube cube;
    std::vector<Complex> values;

    explicit DensitySpectrum(int kmax) : cube(kmax), values(cube.size()) {}
};

//! Exact coefficients of the empirical measure sum_i w_i delta_{X_i}.
DensitySpectrum density_spectrum(const ParticleEnsemble& ensemble, int kmax);
DensitySpectrum density_spectrum(std::span<const double> x0,
                                 std::span<const double> x1,
                                 std::span<const double> x2,
                                 std::span<const double> w, int kmax);
//! Rectangle-rule coefficients of a gridded density (exact for trigonometric
//! polynomials of degree < n/2).
DensitySpectrum density_spectrum(const DensityGrid& grid, int kmax);

//! Gradient series of E = grad G^delta * rho.
GradientSeries field_series(const DensitySpectrum& rho,
                            const SpectralKernel& kernel);

std::vector<Vec3> field_at_points(const DensitySpectrum& rho,
                                  const SpectralKernel& kernel,
                                  std::span<const Vec3> points);
//! Requires resolution >= 2K + 2.
std::vector<Vec3> field_at_points(const DensityGrid& grid,
                                  const SpectralKernel& kernel,
                                  std::span<const Vec3> points);

//! V_delta = - sum_{k != 0} Ghat^delta(k) |rho_hat(k)|^2.
double potential_energy(const DensitySpectrum& rho, const SpectralKernel& kernel);
//! Requires resolution >= 2K + 2.
double potential_energy(const DensityGrid& grid, const SpectralKernel& kernel);
}  // namespace svl

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "svl/rng.hpp"
#include "svl/torus_kernel.hpp"
#include "svl/vec.hpp"

namespace svl
{
//---------------------------------------------------------------------------//
// Blob profile
//---------------------------------------------------------------------------//
/*!
 * Radial density bump theta on R^3, normalized to unit mass.
 *
 * The bump shape exp(-1/(1 - (r/r0)^2)) is compactly supported; its Fourier
 * transform is tabulated by radial quadrature. The Gaussian shape has a
 * closed-form transform and is used as a reference.
 */
class BlobProfile
{
  public:
    enum class Shape
    {
        bump,
        gaussian
    };

    static BlobProfile bump(double radius = 0.25);
    static BlobProfile gaussian(double width);

    Shape shape() const { return shape_; }
    //! Support radius (bump) or standard deviation (gaussian).
    double scale() const { return scale_; }
    double l1_norm() const { return 1.0; }

    double value(double r) const;
    //! thetahat(q) = int theta(x) exp(-2 pi i xi.x) dx at |xi| = q.
    double fourier(double q) const;

    std::string name() const;

  private:
    BlobProfile(Shape s, double scale);

    Shape shape_;
    double scale_;
    double norm_ = 1.0;
};

//! chi_N(k) = sqrt(ell_N^{-1} int_{ell_N}^{2 ell_N} thetahat(l |k|)^2 dl).
double blob_chi(const Mode& k, double ell, const BlobProfile& theta);
//! Same as blob_chi, keyed by |k|^2.
double blob_chi_radial(double k_norm2, double ell, const BlobProfile& theta);

//! sigma_N^2 = kT2 / (2 sum_{k in Z+, |k| <= M} chi_N^2(k)/|k|^2).
double blob_sigma(double ell, const BlobProfile& theta, int mode_cutoff,
                  double kT2);

//---------------------------------------------------------------------------//
// Noise specification
//---------------------------------------------------------------------------//
enum class NoiseVariant
{
    canonical,
    blob,
    renewal
};

std::string to_string(NoiseVariant v);
NoiseVariant noise_variant_from_string(const std::string& s);

struct NoiseSpec
{
    NoiseVariant variant = NoiseVariant::canonical;
    double kappa = 0.5;
    //! Canonical: cube cutoff M (|k|_inf); blob/renewal: ball radius M (|k|).
    int mode_cutoff = 4;
    //! Canonical family index N (1 <= N <= M).
    int family_index = 1;
    BlobProfile profile = BlobProfile::bump();
    double ell = 0.05;
    double tau = 0.01;
    double kT2 = 300.0;
    //! Mean of the renewal amplitude law R = mean +/- spread.
    double r_mean = 0.0;

    //! Throws ConfigError naming the violated constraint.
    void validate() const;
};

//! Flat coefficients Gamma_k = c_N on 0 < |k|_inf <= N (full lattice).
struct CanonicalCoefficients
{
    int family_index = 0;
    int mode_cutoff = 0;
    std::size_t count = 0;  //!< retained modes of Z^3 \ {0}
    double c = 0.0;

    double gamma(const Mode& k) const;
    double l2_norm() const;
    double linf_norm() const { return c; }
};

CanonicalCoefficients canonical_coefficients(int family_index, int mode_cutoff);

//! A half-lattice mode and its real amplitude a_k, with
//!   Q(lag) = sum_{k in Z+} a_k^2 (k k^T / |k|^2) cos(2 pi k.lag).
struct NoiseMode
{
    Mode k;
    double amplitude = 0.0;
    double chi = 0.0;    //!< blob families only
    double gamma = 0.0;  //!< canonical family only
};

/*!
 * Precomputed analytics and sampler for one noise specification.
 *
 * Amplitudes are renormalized after truncation so that Tr Q(0) = 6 kappa
 * holds to round-off.
 */
class NoiseField
{
  public:
    explicit NoiseField(const NoiseSpec& spec);

    const NoiseSpec& spec() const { return spec_; }
    const std::vector<NoiseMode>& modes() const { return modes_; }
    //! Smallest cube cutoff containing every mode.
    int cube_cutoff() const { return cube_cutoff_; }
    //! Blob intensity sigma_N^2 (zero for canonical).
    double sigma2() const { return sigma2_; }

    Mat3 covariance_at(const Vec3& lag) const;
    //! ||Q||_{L^r} with the pointwise Frobenius norm; r == 2 uses Parseval.
    double lr_norm(double r, int n) const;

    //! Gradient series of one increment dW over dt at a given step.
    GradientSeries increment_series(const HalfCube& cube, double dt,
                                    const RandomStream& rng,
                                    std::uint64_t step) const;

    void write_analytics_csv(std::ostream& os) const;

  private:
    NoiseSpec spec_;
    std::vector<NoiseMode> modes_;
    int cube_cutoff_ = 0;
    double sigma2_ = 0.0;
};

Mat3 covariance_at(const NoiseSpec& spec, const Vec3& lag);
double covariance_lr_norm(const NoiseSpec& spec, double r, int n);

//! Common-noise increments dW(x_i) over dt, sharing one draw per mode.
std::vector<Vec3> sample_field_increments(const NoiseField& field,
                                          std::span<const Vec3> points,
                                          double dt, const RandomStream& rng,
                                          std::uint64_t step);

//---------------------------------------------------------------------------//
// Renewal (piecewise-constant) blob field
//---------------------------------------------------------------------------//
struct Blob
{
    double amplitude = 0.0;  //!< R_n
    double scale = 0.0;      //!< L_n
    Vec3 center{};           //!< X_n
};

//! Blob n is drawn from (purpose renewal, step n).
Blob sample_blob(const NoiseSpec& spec, const NoiseField& field,
                 const RandomStream& rng, std::uint64_t n);

//! E'(y) = R grad(G * theta_L)(y - X), truncated to |k| <= M.
std::vector<Vec3> blob_field(const NoiseSpec& spec, const Blob& blob,
                             std::span<const Vec3> points);

//! <E', e_j cos(2 pi k0 . x)> in closed form.
double blob_projection(const NoiseSpec& spec, const Blob& blob, const Mode& k0,
                       int component);

//! Field values at each time of t_grid (multiples of tau).
std::vector<std::vector<Vec3>> sample_renewal_field(const NoiseField& field,
                                                    std::span<const double> t_grid,
                                                    std::span<const Vec3> points,
                                                    const RandomStream& rng);
}  // namespace svl

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "svl/ensemble.hpp"
#include "svl/torus_kernel.hpp"
#include "svl/vec.hpp"

namespace svl
{
//---------------------------------------------------------------------------//
// Observables
//---------------------------------------------------------------------------//
/*!
 * Test function phi(x, v) = trig(2 pi l.x) exp(-|v - v0|^2 / (2 s^2)).
 *
 * An infinite width s gives a constant velocity window.
 */
struct Observable
{
    enum class Kind
    {
        cos,
        sin
    };

    Mode l;
    Vec3 v0{};
    double s = 1.0;
    Kind kind = Kind::cos;

    double operator()(const Vec3& x, const Vec3& v) const;
    Vec3 grad_v(const Vec3& x, const Vec3& v) const;
    std::string name() const;
};

//! l in {0, e1, e1+e2} x v0 in {0, e1} x s in {0.5, 1}, cos kind.
std::vector<Observable> default_battery();

//! sum_i w_i phi(X_i, V_i).
double observable_value(const ParticleEnsemble& ensemble, const Observable& phi);

//---------------------------------------------------------------------------//
// Energy
//---------------------------------------------------------------------------//
//! sum_i w_i |V_i|^2.
double kinetic_energy(const ParticleEnsemble& ensemble);

struct EnergyLedger
{
    double kappa = 0.0;
    double total_weight = 0.0;
    std::vector<double> t;
    std::vector<double> kinetic;
    std::vector<double> potential;

    void append(double time, double k, double v)
    {
        t.push_back(time);
        kinetic.push_back(k);
        potential.push_back(v);
    }
    std::size_t size() const { return t.size(); }
};

//! M_est(t) = [K + V](t) - [K + V](0) - 6 kappa t W.
std::vector<double> energy_identity_residual(const EnergyLedger& ledger);

struct EnergyCheckRow
{
    double t = 0.0;
    double mean = 0.0;  //!< mean M_est minus calibrated bias
    double se = 0.0;
    double bias = 0.0;
    bool pass = false;
};

struct EnergyCheckReport
{
    std::vector<EnergyCheckRow> rows;
    bool pass = false;
};

/*!
 * Mean-zero test of the energy martingale across replicas.
 *
 * The deterministic scheme drift measured on the kappa = 0 ledgers is
 * subtracted; each recorded time passes iff |mean| <= nsigma * se.
 */
EnergyCheckReport energy_identity_check(std::span<const EnergyLedger> ledgers,
                                        std::span<const EnergyLedger> calibration,
                                        double nsigma = 3.0);

struct QvRow
{
    double t = 0.0;
    double second_moment = 0.0;  //!< estimate of E[M_t^2]
    double bound = 0.0;          //!< 24 kappa W int_0^t E[K] ds
    double slack = 0.0;          //!< relative CI slack on the estimate
    bool pass = false;
};

struct QvReport
{
    std::vector<QvRow> rows;
    bool pass = false;
};

/*!
 * Quadratic-variation bound E[M_t^2] <= 24 kappa W int_0^t E[K] ds.
 *
 * E[M_t^2] is the replica variance of M_est (bias-free in the mean). A time
 * passes iff the estimate is below bound * (1 + nsigma * slack), slack being
 * the relative standard error of a variance estimate, sqrt(2 / (R - 1)).
 * Needs at least 32 replicas.
 */
QvReport martingale_qv_check(std::span<const EnergyLedger> ledgers, double kappa,
                             double total_weight, double nsigma = 3.0);

//! Spectral curl of a vector field sampled on the nodes of an n^3 grid:
//! sqrt(sum |k x u_k|^2 / sum |k|^2 |u_k|^2) over 0 < |k|_inf <= kmax.
//! Zero for a gradient field.
double spectral_curl_ratio(const VectorField& samples, int n, int kmax);

//---------------------------------------------------------------------------//
// Norms and interpolation inequalities
//---------------------------------------------------------------------------//
constexpr double infinity = std::numeric_limits<double>::infinity();

//! ||rho||_{L^p} by cell quadrature; p may be infinity.
double density_lp_norm(const DensityGrid& grid, double p);

/*!
 * Piecewise-constant phase-space density on T^3 x [-vmax, vmax]^3.
 *
 * Cell (i, j) has spatial index i over nx^3 torus cells and velocity index j
 * over nv^3 cells of width 2 vmax / nv.
 */
class PhaseSpaceGrid
{
  public:
    PhaseSpaceGrid(int nx, int nv, double vmax);

    int nx() const { return nx_; }
    int nv() const { return nv_; }
    double vmax() const { return vmax_; }
    double dx() const { return 1.0 / nx_; }
    double dv() const { return 2.0 * vmax_ / nv_; }
    double cell_volume() const { return std::pow(dx() * dv(), 3); }
    std::size_t spatial_cells() const { return std::size_t(nx_) * nx_ * nx_; }
    std::size_t velocity_cells() const { return std::size_t(nv_) * nv_ * nv_; }

    double& at(std::size_t ix, std::size_t iv) { return f_[ix * velocity_cells() + iv]; }
    double at(std::size_t ix, std::size_t iv) const
    {
        return f_[ix * velocity_cells() + iv];
    }
    std::vector<double>& values() { return f_; }
    const std::vector<double>& values() const { return f_; }

    //! Center of velocity cell iv.
    Vec3 velocity_center(std::size_t iv) const;
    //! Nearest-grid-point histogram; particles outside the velocity box are
    //! dropped and counted.
    static PhaseSpaceGrid histogram(const ParticleEnsemble& ensemble, int nx, int nv,
                                    double vmax, double* dropped_weight = nullptr);

    double lp_norm(double p) const;
    //! Exact int |v|^2 f for the piecewise-constant density.
    double kinetic_energy() const;
    //! rho_K(x) = int_K f dv over velocity cells [lo, hi) per axis; cellwise.
    std::vector<double> velocity_marginal(std::array<int, 3> lo,
                                          std::array<int, 3> hi) const;
    double spatial_lp_norm(std::span<const double> rho, double p) const;

  private:
    int nx_, nv_;
    double vmax_;
    std::vector<double> f_;
};

//! Exponent r(p) = (2p + 3(p - 1)) / (2 + 3(p - 1)); 5/3 at p = infinity.
double interpolation_exponent(double p);
//! C = 1 + (omega_3 / 3)^{1/p'} with omega_3 = 4 pi the unit-sphere area.
double interpolation_constant(double p);

struct InequalityReport
{
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;  //!< lhs / rhs
    double exponent = 0.0;
    bool vacuous = false;
    bool pass = false;
};

//! ||rho||_r <= C ||f||_p^{2p'/(3+2p')} K(f)^{3/(3+2p')}.
InequalityReport interpolation_bound_check(const PhaseSpaceGrid& f, double p,
                                           double tolerance = 1e-12);

//! ||rho_K||_p <= lambda(K)^{1/p'} ||f||_p for a box of velocity cells.
InequalityReport compact_velocity_marginal_check(const PhaseSpaceGrid& f,
                                                 std::array<int, 3> lo,
                                                 std::array<int, 3> hi, double p,
                                                 double tolerance = 1e-12);
}  // namespace svl

#pragma once

#include <cstdint>
#include <optional>

#include "svl/config.hpp"
#include "svl/ensemble.hpp"
#include "svl/noise_model.hpp"
#include "svl/rng.hpp"
#include "svl/run_record.hpp"
#include "svl/torus_kernel.hpp"

namespace svl
{
struct StepConfig
{
    double dt = 5e-3;
    double magnetic = 1.0;  //!< B
    double delta = 0.1;
    int mode_cutoff = 4;  //!< K
    double green_sign = 1.0;
    bool self_consistent = true;  //!< false freezes E at zero
    //! Each step's noise is the sum of this many fine increments, keyed by
    //! fine step index, so runs at dt and dt/q share Brownian paths.
    int noise_substeps = 1;
    //! Evaluate the noise at the pre-drift position instead of the midpoint.
    bool noise_pre_drift = false;

    void validate() const;
};

StepConfig step_config(const ExperimentConfig& config);

//! Exact flow of dv/dt = B v x e3 over dt, with v x e3 = (v2, -v1, 0).
Vec3 rotate_magnetic(const Vec3& v, double magnetic, double dt);

/*!
 * Strang-type splitting for the stochastic characteristics.
 *
 * One step: half drift; field kick from the ensemble at the half-drift
 * positions; exact magnetic rotation; noise kick; half drift. Holds the
 * kernel and scratch buffers so repeated steps do not allocate.
 */
class Stepper
{
  public:
    //! noise may be null (no common noise).
    Stepper(const StepConfig& cfg, const NoiseField* noise);

    const StepConfig& config() const { return cfg_; }
    const SpectralKernel& kernel() const { return kernel_; }

    //! Common noise: all particles feel one realization of dW.
    void step_common(ParticleEnsemble& e, const RandomStream& rng, std::uint64_t step);
    //! Independent noise sqrt(2 kappa dt) eta_i per particle.
    void step_independent(ParticleEnsemble& e, double kappa, const RandomStream& rng,
                          std::uint64_t step);
    //! Same splitting with no noise at all.
    void step_deterministic(ParticleEnsemble& e);

    /*!
     * Advance probe (tracer) particles alongside the ensemble: they feel the
     * field and the same common noise but do not contribute to the density.
     */
    void step_common_with_probes(ParticleEnsemble& e, ParticleEnsemble& probes,
                                 const RandomStream& rng, std::uint64_t step);

    //! Potential energy of the ensemble at its current positions.
    double potential(const ParticleEnsemble& e);

  private:
    enum class Kick
    {
        none,
        common,
        independent
    };
    void step_impl(ParticleEnsemble& e, ParticleEnsemble* probes, Kick kick,
                   double kappa, const RandomStream* rng, std::uint64_t step);
    void half_drift(ParticleEnsemble& e) const;
    GradientSeries field_series_on_cube(const ParticleEnsemble& e);
    void kick_and_rotate(ParticleEnsemble& e, const GradientSeries& field,
                         const GradientSeries* noise);

    StepConfig cfg_;
    const NoiseField* noise_;
    SpectralKernel kernel_;
    HalfCube cube_;
    std::vector<double> green_;  //!< Ghat on cube_, zero beyond K
    std::vector<Complex> rho_;
    VectorField e_field_, w_field_;
};

ParticleEnsemble step_common_noise(ParticleEnsemble ensemble, const NoiseField& noise,
                                   const StepConfig& cfg, const RandomStream& rng,
                                   std::uint64_t step);
ParticleEnsemble step_independent_noise(ParticleEnsemble ensemble, double kappa,
                                        const StepConfig& cfg, const RandomStream& rng,
                                        std::uint64_t step);

/*!
 * Sample f0 = W (1 + a cos 2 pi x1) M_theta(v) with P equal weights:
 * inverse CDF in x1, uniform x2 and x3, Gaussian velocities.
 */
ParticleEnsemble sample_initial(const InitialCondition& ic, std::size_t particles,
                                const RandomStream& rng);

struct TrajectoryOptions
{
    //! Overrides the configured noise family index.
    std::optional<int> family_index;
    //! Overrides the configured kappa (0 gives the deterministic run).
    std::optional<double> kappa;
    std::optional<StepConfig> step;
    std::optional<std::size_t> particles;
};

/*!
 * Run one replica to the configured horizon, recording the energy ledger and
 * the observable battery every record_every steps (and at the final time).
 */
RunRecord run_trajectory(const ExperimentConfig& config, RunMode mode,
                         std::uint64_t replica, const TrajectoryOptions& opts = {});

struct JacobianProbeResult
{
    double determinant = 0.0;
    double defect = 0.0;  //!< |det - 1|
};

/*!
 * Estimate det(D Phi_t) at base_point by central differences of 12 probe
 * particles of size h advected with the ensemble through one noise path.
 */
JacobianProbeResult jacobian_probe(const StepConfig& cfg, const NoiseField& noise,
                                   const ParticleEnsemble& ensemble,
                                   const RandomStream& rng, const Vec3& x0,
                                   const Vec3& v0, double horizon, double h = 1e-4);

//! Several base points sharing one ensemble path; one determinant each.
std::vector<JacobianProbeResult>
jacobian_probes(const StepConfig& cfg, const NoiseField& noise,
                const ParticleEnsemble& ensemble, const RandomStream& rng,
                std::span<const Vec3> x0, std::span<const Vec3> v0, double horizon,
                double h = 1e-4);
}  // namespace svl

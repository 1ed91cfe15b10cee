#include "svl/particle_sde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "svl/error.hpp"

namespace svl
{
void StepConfig::validate() const
{
    require(dt > 0.0 && std::isfinite(dt), "time step dt must be positive");
    require(std::abs(magnetic) * dt < std::numbers::pi,
            "|B| dt must stay below pi for a resolved rotation");
    require(mode_cutoff >= 1, "field mode cutoff K must be >= 1");
    require(delta > 0.0 && delta < 0.5, "regularization delta must lie in (0, 1/2)");
    require(noise_substeps >= 1, "noise substeps must be >= 1");
}

StepConfig step_config(const ExperimentConfig& c)
{
    StepConfig s;
    s.dt = c.dt;
    s.magnetic = c.magnetic;
    s.delta = c.delta;
    s.mode_cutoff = c.mode_cutoff;
    s.green_sign = c.green_sign;
    s.self_consistent = c.self_consistent;
    return s;
}

Vec3 rotate_magnetic(const Vec3& v, double magnetic, double dt)
{
    const double a = magnetic * dt;
    const double c = std::cos(a), s = std::sin(a);
    return {c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]};
}

//---------------------------------------------------------------------------//
namespace
{
int cube_for(const StepConfig& cfg, const NoiseField* noise)
{
    cfg.validate();
    return std::max(cfg.mode_cutoff, noise ? noise->cube_cutoff() : 0);
}

std::array<std::span<const double>, 3> positions(const ParticleEnsemble& e)
{
    return {std::span<const double>(e.x[0]), std::span<const double>(e.x[1]),
            std::span<const double>(e.x[2])};
}
}  // namespace

Stepper::Stepper(const StepConfig& cfg, const NoiseField* noise)
    : cfg_(cfg),
      noise_(noise),
      kernel_(cfg.mode_cutoff, cfg.delta, cfg.green_sign),
      cube_(cube_for(cfg, noise))
{
    green_.resize(cube_.size());
    for (std::size_t m = 0; m < cube_.size(); ++m)
    {
        const Mode& k = cube_.modes()[m];
        green_[m] = k.linf() <= cfg_.mode_cutoff ? kernel_.green(k) : 0.0;
    }
    rho_.resize(cube_.size());
}

void Stepper::half_drift(ParticleEnsemble& e) const
{
    const double h = 0.5 * cfg_.dt;
    for (int d = 0; d < 3; ++d)
    {
        double* x = e.x[d].data();
        const double* v = e.v[d].data();
        for (std::size_t i = 0; i < e.size(); ++i)
            x[i] = wrap(x[i] + h * v[i]);
    }
}

GradientSeries Stepper::field_series_on_cube(const ParticleEnsemble& e)
{
    GradientSeries s(cube_.size());
    if (!cfg_.self_consistent)
        return s;
    std::fill(rho_.begin(), rho_.end(), Complex(0.0, 0.0));
    accumulate_spectrum(cube_, positions(e), e.w, rho_);
    const double f = 2.0 * two_pi;
    for (std::size_t m = 0; m < cube_.size(); ++m)
    {
        s.alpha[m] = -f * green_[m] * rho_[m].imag();
        s.beta[m] = -f * green_[m] * rho_[m].real();
    }
    return s;
}

double Stepper::potential(const ParticleEnsemble& e)
{
    std::fill(rho_.begin(), rho_.end(), Complex(0.0, 0.0));
    accumulate_spectrum(cube_, positions(e), e.w, rho_);
    double sum = 0.0;
    for (std::size_t m = 0; m < cube_.size(); ++m)
        sum += green_[m] * std::norm(rho_[m]);
    return -2.0 * sum;
}

void Stepper::kick_and_rotate(ParticleEnsemble& e, const GradientSeries& field,
                              const GradientSeries* noise)
{
    const bool pre = noise && cfg_.noise_pre_drift;
    if (noise && !pre)
        evaluate_gradient_series(cube_, positions(e), field, e_field_, noise, &w_field_);
    else
        evaluate_gradient_series(cube_, positions(e), field, e_field_);

    const double dt = cfg_.dt;
    const double a = cfg_.magnetic * dt;
    const double c = std::cos(a), s = std::sin(a);
    double* v0 = e.v[0].data();
    double* v1 = e.v[1].data();
    double* v2 = e.v[2].data();
    const double* e0 = e_field_[0].data();
    const double* e1 = e_field_[1].data();
    const double* e2 = e_field_[2].data();
    for (std::size_t i = 0; i < e.size(); ++i)
    {
        const double u0 = v0[i] + dt * e0[i];
        const double u1 = v1[i] + dt * e1[i];
        v0[i] = c * u0 + s * u1;
        v1[i] = -s * u0 + c * u1;
        v2[i] += dt * e2[i];
    }
    if (noise)
        for (int d = 0; d < 3; ++d)
        {
            double* v = e.v[d].data();
            const double* w = w_field_[d].data();
            for (std::size_t i = 0; i < e.size(); ++i)
                v[i] += w[i];
        }
}

void Stepper::step_impl(ParticleEnsemble& e, ParticleEnsemble* probes, Kick kick,
                        double kappa, const RandomStream* rng, std::uint64_t step)
{
    const int q = cfg_.noise_substeps;
    const double fine_dt = cfg_.dt / q;

    GradientSeries noise;
    if (kick == Kick::common)
    {
        require(noise_ != nullptr, "common-noise step without a noise field");
        noise = GradientSeries(cube_.size());
        for (int j = 0; j < q; ++j)
        {
            auto part = noise_->increment_series(cube_, fine_dt, *rng,
                                                 step * std::uint64_t(q) + j);
            for (std::size_t m = 0; m < cube_.size(); ++m)
            {
                noise.alpha[m] += part.alpha[m];
                noise.beta[m] += part.beta[m];
            }
        }
        if (cfg_.noise_pre_drift)
        {
            evaluate_gradient_series(cube_, positions(e), noise, w_field_);
            if (probes)
                throw ConfigError("probe particles need midpoint noise evaluation");
        }
    }

    half_drift(e);
    if (probes)
        half_drift(*probes);

    GradientSeries field = field_series_on_cube(e);
    const GradientSeries* np = kick == Kick::common ? &noise : nullptr;
    if (probes)
        kick_and_rotate(*probes, field, np);
    kick_and_rotate(e, field, np);

    if (kick == Kick::independent && kappa > 0.0)
    {
        const double amp = std::sqrt(2.0 * kappa * fine_dt);
        for (std::size_t i = 0; i < e.size(); ++i)
        {
            double s0 = 0.0, s1 = 0.0, s2 = 0.0;
            for (int j = 0; j < q; ++j)
            {
                auto eta = rng->normal3(Purpose::independent_noise,
                                        step * std::uint64_t(q) + j, std::uint32_t(i));
                s0 += eta[0];
                s1 += eta[1];
                s2 += eta[2];
            }
            e.v[0][i] += amp * s0;
            e.v[1][i] += amp * s1;
            e.v[2][i] += amp * s2;
        }
    }

    half_drift(e);
    if (probes)
        half_drift(*probes);
}

void Stepper::step_common(ParticleEnsemble& e, const RandomStream& rng,
                          std::uint64_t step)
{
    step_impl(e, nullptr, Kick::common, 0.0, &rng, step);
}

void Stepper::step_independent(ParticleEnsemble& e, double kappa,
                               const RandomStream& rng, std::uint64_t step)
{
    step_impl(e, nullptr, Kick::independent, kappa, &rng, step);
}

void Stepper::step_deterministic(ParticleEnsemble& e)
{
    step_impl(e, nullptr, Kick::none, 0.0, nullptr, 0);
}

void Stepper::step_common_with_probes(ParticleEnsemble& e, ParticleEnsemble& probes,
                                      const RandomStream& rng, std::uint64_t step)
{
    step_impl(e, &probes, noise_ ? Kick::common : Kick::none, 0.0, &rng, step);
}

ParticleEnsemble step_common_noise(ParticleEnsemble ensemble, const NoiseField& noise,
                                   const StepConfig& cfg, const RandomStream& rng,
                                   std::uint64_t step)
{
    Stepper s(cfg, &noise);
    s.step_common(ensemble, rng, step);
    return ensemble;
}

ParticleEnsemble step_independent_noise(ParticleEnsemble ensemble, double kappa,
                                        const StepConfig& cfg, const RandomStream& rng,
                                        std::uint64_t step)
{
    Stepper s(cfg, nullptr);
    s.step_independent(ensemble, kappa, rng, step);
    return ensemble;
}

//---------------------------------------------------------------------------//
ParticleEnsemble sample_initial(const InitialCondition& ic, std::size_t particles,
                                const RandomStream& rng)
{
    require(particles >= 1, "need at least one particle");
    require(std::abs(ic.amplitude) < 1.0, "density amplitude a must satisfy |a| < 1");
    require(ic.temperature >= 0.0, "temperature must be >= 0");
    require(ic.mass > 0.0, "total mass must be positive");
    ParticleEnsemble e;
    e.resize(particles);
    const double w = ic.mass / double(particles);
    const double a = ic.amplitude;
    const double sd = std::sqrt(ic.temperature);
    for (std::size_t i = 0; i < particles; ++i)
    {
        const auto idx = std::uint32_t(i);
        auto u = rng.uniform_pair(Purpose::initial_condition, 0, idx, 0);
        auto u2 = rng.uniform_pair(Purpose::initial_condition, 0, idx, 1);
        // Solve F(x) = x + 1/2 + a sin(2 pi x) / (2 pi) = u on [-1/2, 1/2].
        const double target = u[0];
        double lo = -0.5, hi = 0.5, x = target - 0.5;
        for (int it = 0; it < 60; ++it)
        {
            const double f = x + 0.5 + a * std::sin(two_pi * x) / two_pi - target;
            if (std::abs(f) < 1e-15)
                break;
            if (f > 0)
                hi = x;
            else
                lo = x;
            const double df = 1.0 + a * std::cos(two_pi * x);
            double xn = x - f / df;
            x = (xn > lo && xn < hi) ? xn : 0.5 * (lo + hi);
        }
        e.x[0][i] = wrap(x);
        e.x[1][i] = wrap(u[1] - 0.5);
        e.x[2][i] = wrap(u2[0] - 0.5);
        auto g = rng.normal_pair(Purpose::initial_condition, 1, idx, 0);
        auto g2 = rng.normal_pair(Purpose::initial_condition, 1, idx, 1);
        e.v[0][i] = sd * g[0];
        e.v[1][i] = sd * g[1];
        e.v[2][i] = sd * g2[0];
        e.w[i] = w;
    }
    return e;
}

//---------------------------------------------------------------------------//
RunRecord run_trajectory(const ExperimentConfig& config, RunMode mode,
                         std::uint64_t replica, const TrajectoryOptions& opts)
{
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config_hash = config.hash;
    rec.seed = config.seed;
    rec.replica = replica;
    rec.mode = to_string(mode);
    rec.family_index = opts.family_index.value_or(config.noise.family_index);
    for (const Observable& o : config.observables)
        rec.observable_names.push_back(o.name());

    const double kappa = opts.kappa.value_or(config.kappa);
    try
    {
        StepConfig cfg = opts.step.value_or(step_config(config));
        const long nsteps = std::lround(config.horizon / cfg.dt);
        require(std::abs(nsteps * cfg.dt - config.horizon)
                    <= 1e-9 * std::max(1.0, config.horizon),
                "horizon must be a multiple of dt");

        std::optional<NoiseField> noise;
        if (mode == RunMode::common && kappa > 0.0)
        {
            NoiseSpec spec = config.noise_spec(rec.family_index);
            if (spec.variant == NoiseVariant::canonical)
                spec.kappa = kappa;
            else
                require(kappa == spec.kappa, "blob noise kappa cannot be overridden");
            noise.emplace(spec);
        }
        Stepper stepper(cfg, noise ? &*noise : nullptr);
        RandomStream rng(config.seed, replica);
        ParticleEnsemble e
            = sample_initial(config.initial, opts.particles.value_or(config.particles), rng);

        rec.ledger.kappa = kappa;
        rec.ledger.total_weight = e.total_weight();
        auto record = [&](long n) {
            const double t = n * cfg.dt;
            rec.times.push_back(t);
            rec.ledger.append(t, kinetic_energy(e), stepper.potential(e));
            std::vector<double> row;
            row.reserve(config.observables.size());
            for (const Observable& o : config.observables)
                row.push_back(observable_value(e, o));
            rec.observables.push_back(std::move(row));
        };

        record(0);
        for (long n = 0; n < nsteps; ++n)
        {
            if (kappa == 0.0)
                stepper.step_deterministic(e);
            else if (mode == RunMode::common)
                stepper.step_common(e, rng, std::uint64_t(n));
            else
                stepper.step_independent(e, kappa, rng, std::uint64_t(n));
            rec.particle_steps += e.size();
            if ((n + 1) % config.record_every == 0 || n + 1 == nsteps)
                record(n + 1);
            for (int d = 0; d < 3; ++d)
                if (!std::isfinite(e.v[d][0]))
                    throw NumericalError("non-finite velocity at step "
                                         + std::to_string(n + 1));
        }
    }
    catch (const std::exception& ex)
    {
        rec.status = "failed";
        rec.diagnostic = ex.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now()
                                                     - start)
                           .count();
    return rec;
}

//---------------------------------------------------------------------------//
namespace
{
double determinant6(std::array<std::array<double, 6>, 6> a)
{
    double det = 1.0;
    for (int c = 0; c < 6; ++c)
    {
        int piv = c;
        for (int r = c + 1; r < 6; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c]))
                piv = r;
        if (a[piv][c] == 0.0)
            return 0.0;
        if (piv != c)
        {
            std::swap(a[piv], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (int r = c + 1; r < 6; ++r)
        {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 6; ++k)
                a[r][k] -= f * a[c][k];
        }
    }
    return det;
}
}  // namespace

std::vector<JacobianProbeResult>
jacobian_probes(const StepConfig& cfg, const NoiseField& noise,
                const ParticleEnsemble& ensemble, const RandomStream& rng,
                std::span<const Vec3> x0, std::span<const Vec3> v0, double horizon,
                double h)
{
    require(x0.size() == v0.size(), "probe base points need matching velocities");
    require(h > 0.0 && h < 0.01, "probe size h must lie in (0, 0.01)");
    ParticleEnsemble e = ensemble;
    ParticleEnsemble probes;
    for (std::size_t b = 0; b < x0.size(); ++b)
        for (int j = 0; j < 6; ++j)
            for (double sgn : {1.0, -1.0})
            {
                Vec3 x = x0[b], v = v0[b];
                if (j < 3)
                    x[j] += sgn * h;
                else
                    v[j - 3] += sgn * h;
                probes.push_back(x, v, 0.0);
            }

    const bool has_noise = noise.spec().kappa > 0.0;
    Stepper stepper(cfg, has_noise ? &noise : nullptr);
    const long nsteps = std::lround(horizon / cfg.dt);
    for (long n = 0; n < nsteps; ++n)
        stepper.step_common_with_probes(e, probes, rng, std::uint64_t(n));

    std::vector<JacobianProbeResult> out;
    for (std::size_t b = 0; b < x0.size(); ++b)
    {
        std::array<std::array<double, 6>, 6> jac{};
        for (int j = 0; j < 6; ++j)
        {
            const std::size_t ip = b * 12 + 2 * j, im = ip + 1;
            for (int d = 0; d < 3; ++d)
            {
                jac[d][j] = wrap(probes.x[d][ip] - probes.x[d][im]) / (2.0 * h);
                jac[d + 3][j] = (probes.v[d][ip] - probes.v[d][im]) / (2.0 * h);
            }
        }
        JacobianProbeResult r;
        r.determinant = determinant6(jac);
        if (!std::isfinite(r.determinant) || r.determinant <= 0.0)
            throw NumericalError("degenerate probe displacement matrix (det "
                                 + std::to_string(r.determinant) + ")");
        r.defect = std::abs(r.determinant - 1.0);
        out.push_back(r);
    }
    return out;
}

JacobianProbeResult jacobian_probe(const StepConfig& cfg, const NoiseField& noise,
                                   const ParticleEnsemble& ensemble,
                                   const RandomStream& rng, const Vec3& x0,
                                   const Vec3& v0, double horizon, double h)
{
    return jacobian_probes(cfg, noise, ensemble, rng, std::span<const Vec3>(&x0, 1),
                           std::span<const Vec3>(&v0, 1), horizon, h)[0];
}
}  // namespace svl

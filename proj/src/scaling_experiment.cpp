#include "svl/scaling_experiment.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <tuple>
#include <ostream>

#include <json.hpp>

#include "svl/error.hpp"
#include "svl/particle_sde.hpp"
#include "svl/stats.hpp"
#include "svl/worker_pool.hpp"

namespace svl
{
SweepPlan SweepPlan::from_config(const ExperimentConfig& config)
{
    SweepPlan p;
    p.config = config;
    p.family_indices = config.family_indices;
    p.workers = default_workers();
    return p;
}

double SweepPlan::particle_steps() const
{
    return double(family_indices.size() + 1) * config.replicas
           * double(config.particles) * double(config.steps());
}

void check_budget(const SweepPlan& plan)
{
    const double need = plan.particle_steps();
    if (need > plan.config.max_particle_steps)
        throw ConfigError("infeasible budget: sweep needs "
                          + std::to_string(need) + " particle-steps, ceiling is "
                          + std::to_string(plan.config.max_particle_steps));
}

std::vector<double> observable_scales(const ExperimentConfig& config,
                                      std::span<const std::uint64_t> replicas)
{
    require(!replicas.empty(), "observable scales need at least one replica");
    std::vector<double> scales(config.observables.size(), 0.0);
    for (std::uint64_t r : replicas)
    {
        RandomStream rng(config.seed, r);
        ParticleEnsemble e = sample_initial(config.initial, config.particles, rng);
        for (std::size_t k = 0; k < scales.size(); ++k)
        {
            double s = 0.0;
            for (std::size_t i = 0; i < e.size(); ++i)
                s += e.w[i] * std::abs(config.observables[k](e.position(i), e.velocity(i)));
            scales[k] += s / double(replicas.size());
        }
    }
    for (double s : scales)
        require(s > 0.0, "an observable vanishes on the initial ensemble");
    return scales;
}

std::vector<std::pair<double, double>> check_sweep_hygiene(const ExperimentConfig& config,
                                                           std::span<const int> indices)
{
    std::vector<std::pair<double, double>> norms;
    const double two_kappa = 2.0 * config.kappa;
    for (int n : indices)
    {
        NoiseField f(config.noise_spec(n));
        Mat3 q = f.covariance_at({0, 0, 0});
        double trace = q[0][0] + q[1][1] + q[2][2];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
            {
                double target = i == j ? two_kappa : 0.0;
                if (std::abs(q[i][j] - target) > 1e-12 * std::max(1.0, two_kappa))
                    throw ConfigError("covariance hygiene: Q_N(0) != 2 kappa I for N = "
                                      + std::to_string(n));
            }
        if (std::abs(trace - 3.0 * two_kappa) > 1e-12 * std::max(1.0, two_kappa))
            throw ConfigError("covariance hygiene: Tr Q_N(0) != 6 kappa for N = "
                              + std::to_string(n));
        const int res = 4 * f.cube_cutoff() + 2;
        norms.emplace_back(f.lr_norm(1.75, res), f.lr_norm(2.0, res));
    }
    for (std::size_t i = 1; i < norms.size(); ++i)
        if (!(norms[i].first < norms[i - 1].first))
            throw ConfigError("covariance hygiene: ||Q_N||_{L^7/4} is not strictly "
                              "decreasing across the sweep");
    return norms;
}

//---------------------------------------------------------------------------//
namespace
{
std::vector<const RunRecord*> sorted_ok(std::span<const RunRecord> recs)
{
    std::vector<const RunRecord*> out;
    for (const RunRecord& r : recs)
        out.push_back(&r);
    std::sort(out.begin(), out.end(),
              [](const RunRecord* a, const RunRecord* b) { return a->replica < b->replica; });
    return out;
}

// Replica variance of the final observables, averaged over observables.
std::pair<double, double> final_variance(const std::vector<const RunRecord*>& recs)
{
    if (recs.empty())
        return {0.0, 0.0};
    const std::size_t nobs = recs[0]->observable_names.size();
    double var = 0.0;
    for (std::size_t k = 0; k < nobs; ++k)
    {
        std::vector<double> xs;
        for (const RunRecord* r : recs)
            xs.push_back(r->observables.back()[k]);
        var += sample_variance(xs) / double(nobs);
    }
    const double se
        = recs.size() > 1 ? var * std::sqrt(2.0 / double(recs.size() - 1)) : 0.0;
    return {var, se};
}
}  // namespace

ConvergenceRow aggregate_row(int family_index, std::span<const RunRecord> common,
                             std::span<const RunRecord> limit,
                             std::span<const double> scales)
{
    ConvergenceRow row;
    row.family_index = family_index;
    auto c = sorted_ok(common);
    auto l = sorted_ok(limit);
    row.replicas = int(c.size());
    for (const RunRecord* r : c)
        row.failed += r->ok() ? 0 : 1;
    row.degraded = row.failed * 10 > row.replicas;

    // Pair replicas by id; drop pairs where either side failed.
    std::vector<std::pair<const RunRecord*, const RunRecord*>> pairs;
    for (const RunRecord* a : c)
    {
        if (!a->ok())
            continue;
        auto it = std::find_if(l.begin(), l.end(), [&](const RunRecord* b) {
            return b->replica == a->replica && b->ok();
        });
        if (it != l.end())
            pairs.emplace_back(a, *it);
    }
    if (pairs.size() < 2)
        throw StatisticalError("fewer than 2 paired replicas for N = "
                               + std::to_string(family_index));
    const std::size_t nt = pairs[0].first->times.size();
    const std::size_t nobs = scales.size();
    for (auto& p : pairs)
        if (p.first->times != p.second->times || p.first->times.size() != nt)
            throw StatisticalError("paired records use different time grids");

    // Squared normalized distance per replica.
    std::vector<double> s;
    std::vector<std::vector<double>> diff(nt * nobs);
    for (auto& [a, b] : pairs)
    {
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t t = 1; t < nt; ++t)
            for (std::size_t k = 0; k < nobs; ++k)
            {
                double d = (a->observables[t][k] - b->observables[t][k]) / scales[k];
                acc += d * d;
                ++cnt;
                diff[t * nobs + k].push_back(d);
            }
        s.push_back(cnt ? acc / double(cnt) : 0.0);
    }
    MeanEstimate ms = estimate_mean(s);
    row.err = std::sqrt(std::max(ms.mean, 0.0));
    row.err_se = row.err > 0.0 ? ms.se / (2.0 * row.err) : 0.0;

    double gap = 0.0, gap_se = 0.0;
    std::size_t cnt = 0;
    for (std::size_t t = 1; t < nt; ++t)
        for (std::size_t k = 0; k < nobs; ++k)
        {
            MeanEstimate m = estimate_mean(diff[t * nobs + k]);
            gap += std::abs(m.mean);
            gap_se += m.se;
            ++cnt;
        }
    if (cnt)
    {
        row.err_mean_gap = gap / double(cnt);
        row.err_mean_gap_se = gap_se / double(cnt);
    }

    std::vector<const RunRecord*> ok;
    for (auto& p : pairs)
        ok.push_back(p.first);
    std::tie(row.mart_var, row.mart_var_se) = final_variance(ok);
    return row;
}

void ConvergenceTable::write_csv(std::ostream& os) const
{
    os << "N,q_l74,q_l2,err,err_se,err_ci_lo,err_ci_hi,err_mean_gap,err_mean_gap_se,"
          "mart_var,mart_var_se,limit_var,replicas,failed,degraded\n";
    os.precision(17);
    for (const ConvergenceRow& r : rows)
        os << r.family_index << ',' << r.q_l74 << ',' << r.q_l2 << ',' << r.err << ','
           << r.err_se << ',' << r.err - ci_sigma * r.err_se << ','
           << r.err + ci_sigma * r.err_se << ',' << r.err_mean_gap << ','
           << r.err_mean_gap_se << ',' << r.mart_var << ',' << r.mart_var_se << ','
           << limit_var << ',' << r.replicas << ',' << r.failed << ','
           << (r.degraded ? 1 : 0) << '\n';
}

SweepResult run_sweep(const SweepPlan& plan, const Progress& progress)
{
    plan.config.validate();
    require(!plan.family_indices.empty(), "sweep needs at least one family index");
    check_budget(plan);
    auto norms = check_sweep_hygiene(plan.config, plan.family_indices);

    const std::size_t rows = plan.family_indices.size();
    const std::size_t reps = std::size_t(plan.config.replicas);
    auto replica_id = [&](std::size_t row, std::size_t r) {
        return plan.first_replica + (plan.crn ? r : row * reps + r);
    };

    SweepResult res;
    res.common.assign(rows, std::vector<RunRecord>(reps));
    res.limit.resize(reps);

    std::mutex progress_mutex;
    std::size_t done = 0;
    const std::size_t total = (rows + 1) * reps;
    parallel_for(total, plan.workers, [&](std::size_t task) {
        const std::size_t row = task / reps, r = task % reps;
        if (row < rows)
        {
            TrajectoryOptions opts;
            opts.family_index = plan.family_indices[row];
            res.common[row][r]
                = run_trajectory(plan.config, RunMode::common, replica_id(row, r), opts);
        }
        else
        {
            res.limit[r]
                = run_trajectory(plan.config, RunMode::independent, replica_id(rows, r));
        }
        if (progress)
        {
            std::lock_guard<std::mutex> lock(progress_mutex);
            ++done;
            progress("task " + std::to_string(done) + "/" + std::to_string(total));
        }
    });

    std::vector<std::uint64_t> ids;
    for (std::size_t r = 0; r < reps; ++r)
        ids.push_back(replica_id(rows, r));
    auto scales = observable_scales(plan.config, ids);
    res.table.ci_sigma = plan.config.ci_sigma;
    if (!plan.crn)
        // Without CRN the pairing is by position; re-key the limit records.
        for (std::size_t r = 0; r < reps; ++r)
            res.limit[r].replica = r;
    for (std::size_t row = 0; row < rows; ++row)
    {
        std::vector<RunRecord> common = res.common[row];
        if (!plan.crn)
            for (std::size_t r = 0; r < reps; ++r)
                common[r].replica = r;
        ConvergenceRow cr = aggregate_row(plan.family_indices[row], common, res.limit,
                                          scales);
        cr.q_l74 = norms[row].first;
        cr.q_l2 = norms[row].second;
        res.table.rows.push_back(cr);
    }
    res.table.limit_var = final_variance(sorted_ok(res.limit)).first;
    return res;
}

//---------------------------------------------------------------------------//
TrendReport martingale_trend(const ConvergenceTable& table, double nsigma)
{
    if (table.rows.size() < 3)
        throw StatisticalError("martingale trend needs at least 3 rows");
    std::vector<double> x, y;
    for (const ConvergenceRow& r : table.rows)
    {
        if (!(r.q_l74 > 0.0) || !(r.mart_var > 0.0))
            throw StatisticalError("martingale trend needs positive norms and variances");
        x.push_back(std::log(r.q_l74));
        y.push_back(std::log(r.mart_var));
    }
    TrendReport rep;
    LinearFit fit = fit_line(x, y);
    rep.slope = fit.slope;
    rep.slope_se = fit.slope_se;
    rep.intercept = fit.intercept;
    rep.degenerate = fit.degenerate;
    if (fit.degenerate)
    {
        rep.note = "slope undefined: all rows share the same covariance norm";
        return rep;
    }
    rep.pass = rep.slope - nsigma * rep.slope_se > 0.0;
    rep.note = rep.pass ? "positive slope, interval excludes 0"
                        : "slope interval does not exclude 0";
    return rep;
}

void write_trend_json(std::ostream& os, const TrendReport& rep)
{
    nlohmann::ordered_json j;
    j["schema_version"] = schema_version;
    j["slope"] = rep.slope;
    j["slope_se"] = rep.slope_se;
    j["intercept"] = rep.intercept;
    j["degenerate"] = rep.degenerate;
    j["pass"] = rep.pass;
    j["note"] = rep.note;
    os << j.dump(2) << '\n';
}

//---------------------------------------------------------------------------//
namespace
{
// Normalized final observable means, paired against a reference, per run.
// Weak error of a against ref: RMS over observables of the mean paired gap at
// the final time, with the Monte-Carlo floor se^2 subtracted from each m^2.
std::pair<double, double> weak_gap(const std::vector<RunRecord>& a,
                                   const std::vector<RunRecord>& ref,
                                   std::span<const double> scales)
{
    double acc = 0.0, floor = 0.0;
    for (std::size_t k = 0; k < scales.size(); ++k)
    {
        std::vector<double> d;
        for (std::size_t r = 0; r < a.size(); ++r)
            d.push_back((a[r].observables.back()[k] - ref[r].observables.back()[k])
                        / scales[k]);
        auto m = estimate_mean(d);
        acc += m.mean * m.mean - m.se * m.se;
        floor += m.se * m.se;
    }
    const double n = double(scales.size());
    return {std::sqrt(std::max(acc / n, 0.0)), std::sqrt(floor / n)};
}

double mean_se(const std::vector<RunRecord>& runs, std::span<const double> scales)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < scales.size(); ++k)
    {
        std::vector<double> xs;
        for (const RunRecord& r : runs)
            xs.push_back(r.observables.back()[k] / scales[k]);
        acc += estimate_mean(xs).se;
    }
    return acc / double(scales.size());
}
}  // namespace

LimitConvergenceReport limit_self_convergence(const LimitConvergencePlan& plan)
{
    ExperimentConfig cfg = plan.config;
    cfg.particles = plan.particles;
    cfg.replicas = plan.replicas;
    cfg.dt = plan.dt;
    cfg.horizon = plan.horizon;
    cfg.record_every = 1 << 30;
    cfg.validate();

    const std::size_t reps = std::size_t(plan.replicas);
    auto run_set = [&](double dt, int substeps, std::size_t particles) {
        std::vector<RunRecord> out(reps);
        StepConfig sc = step_config(cfg);
        sc.dt = dt;
        sc.noise_substeps = substeps;
        parallel_for(reps, plan.workers, [&](std::size_t r) {
            TrajectoryOptions o;
            o.step = sc;
            o.particles = particles;
            out[r] = run_trajectory(cfg, RunMode::independent, r, o);
            if (!out[r].ok())
                throw NumericalError("limit solver replica failed: " + out[r].diagnostic);
        });
        return out;
    };

    std::vector<std::uint64_t> ids(reps);
    for (std::size_t r = 0; r < reps; ++r)
        ids[r] = r;
    auto scales = observable_scales(cfg, ids);

    LimitConvergenceReport rep;
    auto coarse = run_set(plan.dt, 4, plan.particles);
    auto mid = run_set(plan.dt / 2, 2, plan.particles);
    auto fine = run_set(plan.dt / 4, 1, plan.particles);
    std::tie(rep.err_dt, rep.floor_dt) = weak_gap(coarse, fine, scales);
    std::tie(rep.err_dt2, rep.floor_dt2) = weak_gap(mid, fine, scales);
    rep.resolved = rep.err_dt >= 3.0 * rep.floor_dt;
    const double ratio = rep.err_dt2 > 0 ? rep.err_dt / rep.err_dt2 : infinity;
    rep.naive_order = std::log2(ratio);
    rep.order = ratio > 1.0 ? std::log2(ratio - 1.0) : -infinity;
    rep.order_pass = rep.resolved && rep.order >= 0.8;

    rep.mc_se[0] = mean_se(coarse, scales);
    rep.mc_se[1] = mean_se(run_set(plan.dt, 4, 2 * plan.particles), scales);
    rep.mc_se[2] = mean_se(run_set(plan.dt, 4, 4 * plan.particles), scales);
    rep.mc_ratio = rep.mc_se[2] / rep.mc_se[0];
    rep.mc_pass = std::abs(rep.mc_ratio - 0.5) <= 0.2 * 0.5;
    rep.pass = rep.order_pass && rep.mc_pass;
    return rep;
}
}  // namespace svl

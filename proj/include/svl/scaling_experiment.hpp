#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "svl/config.hpp"
#include "svl/run_record.hpp"

namespace svl
{
struct SweepPlan
{
    ExperimentConfig config;
    std::vector<int> family_indices;
    //! Common random numbers: replica r uses the same seed in every row and in
    //! the limit run (shared f0 sample and shared per-mode noise draws).
    bool crn = true;
    int workers = 1;
    //! First replica id; rows use ids first_replica .. first_replica + R - 1.
    std::uint64_t first_replica = 0;

    static SweepPlan from_config(const ExperimentConfig& config);

    //! (rows + 1) * R * P * steps.
    double particle_steps() const;
};

struct ConvergenceRow
{
    int family_index = 0;
    double q_l74 = 0.0;  //!< ||Q_N||_{L^{7/4}}
    double q_l2 = 0.0;   //!< ||Q_N||_{L^2}
    //! Paired RMS distance to the limit run, normalized per observable.
    double err = 0.0;
    double err_se = 0.0;
    //! |mean_r <f^N, phi> - mean_r <fbar, phi>| averaged over phi and t.
    double err_mean_gap = 0.0;
    double err_mean_gap_se = 0.0;
    //! Replica variance of <f^N_T, phi>, averaged over phi.
    double mart_var = 0.0;
    double mart_var_se = 0.0;
    int replicas = 0;
    int failed = 0;
    bool degraded = false;
};

struct ConvergenceTable
{
    std::vector<ConvergenceRow> rows;
    //! Replica variance of <fbar_T, phi> (sampling floor of mart_var).
    double limit_var = 0.0;
    double ci_sigma = 3.0;

    void write_csv(std::ostream& os) const;
};

struct SweepResult
{
    ConvergenceTable table;
    std::vector<std::vector<RunRecord>> common;  //!< [row][replica]
    std::vector<RunRecord> limit;
};

//! Per-observable normalization: mean over replicas of sum_i w_i |phi| at t = 0.
std::vector<double> observable_scales(const ExperimentConfig& config,
                                      std::span<const std::uint64_t> replicas);

/*!
 * Covariance hygiene for a sweep: each spec has Q_N(0) = 2 kappa I to 1e-12
 * and ||Q_N||_{L^{7/4}} strictly decreases. Throws ConfigError otherwise.
 * Returns the (L^{7/4}, L^2) norms per index.
 */
std::vector<std::pair<double, double>> check_sweep_hygiene(const ExperimentConfig& config,
                                                           std::span<const int> indices);

//! Throws ConfigError if the plan exceeds the configured particle-step budget.
void check_budget(const SweepPlan& plan);

//! Statistics of one row from its common-noise and limit records (sorted by
//! replica id internally, so the order of the inputs does not matter).
ConvergenceRow aggregate_row(int family_index, std::span<const RunRecord> common,
                             std::span<const RunRecord> limit,
                             std::span<const double> scales);

using Progress = std::function<void(const std::string&)>;

SweepResult run_sweep(const SweepPlan& plan, const Progress& progress = {});

struct TrendReport
{
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
    bool degenerate = false;
    bool pass = false;
    std::string note;
};

//! Fit log mart_var against log ||Q_N||_{L^{7/4}}; passes iff slope > 0 with
//! the nsigma interval excluding 0.
TrendReport martingale_trend(const ConvergenceTable& table, double nsigma = 3.0);
void write_trend_json(std::ostream& os, const TrendReport& rep);

struct LimitConvergencePlan
{
    ExperimentConfig config;
    std::size_t particles = 4000;
    //! The splitting bias shrinks like dt^2, so the coarsest step must be
    //! large for it to stand above the Monte-Carlo floor.
    int replicas = 128;
    double dt = 0.2;
    double horizon = 0.4;
    int workers = 1;
};

struct LimitConvergenceReport
{
    //! Weak error of the dt and dt/2 runs against the dt/4 run: RMS over
    //! observables of the replica-mean paired gap, noise floor subtracted.
    double err_dt = 0.0;
    double err_dt2 = 0.0;
    //! Monte-Carlo floor (RMS standard error) of each gap.
    double floor_dt = 0.0;
    double floor_dt2 = 0.0;
    //! err_dt exceeds three times its floor; otherwise no order is claimed.
    bool resolved = false;
    //! Order p solving e(dt)/e(dt/2) = (1 - 4^-p)/(2^-p - 4^-p).
    double order = 0.0;
    //! log2 e(dt)/e(dt/2), uncorrected.
    double naive_order = 0.0;
    //! Standard errors of the observable means at P, 2P, 4P.
    std::array<double, 3> mc_se{};
    //! se(4P)/se(P); 1/2 under the central limit theorem.
    double mc_ratio = 0.0;
    bool order_pass = false;
    bool mc_pass = false;
    bool pass = false;
};

/*!
 * Independent-noise solver at (dt, dt/2, dt/4) with shared Brownian paths and
 * f0 samples, and at (P, 2P, 4P). Passes iff the dt error is resolved above
 * its floor, the order is >= 0.8 and the standard error ratio for P -> 4P is
 * 1/2 within 20%.
 */
LimitConvergenceReport limit_self_convergence(const LimitConvergencePlan& plan);
}  // namespace svl

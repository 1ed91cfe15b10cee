#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "svl/error.hpp"
#include "svl/particle_sde.hpp"
#include "svl/scaling_experiment.hpp"

using namespace svl;

namespace
{
ExperimentConfig tiny()
{
    return parse_config(R"({"discretization": {"particles": 400, "dt": 0.01, "horizon": 0.04,
        "record_every": 2}, "statistics": {"replicas": 6}, "noise": {"family_indices": [1, 2, 3]}})");
}

ConvergenceTable synthetic(std::vector<double> norms, std::vector<double> vars)
{
    ConvergenceTable t;
    for (std::size_t i = 0; i < norms.size(); ++i)
    {
        ConvergenceRow r;
        r.family_index = int(i + 1);
        r.q_l74 = norms[i];
        r.mart_var = vars[i];
        t.rows.push_back(r);
    }
    return t;
}
}  // namespace

TEST_CASE("martingale trend fit")
{
    auto exact = martingale_trend(synthetic({0.5, 0.25, 0.1, 0.05}, {1.5, 0.75, 0.3, 0.15}));
    CHECK(exact.slope == doctest::Approx(1.0));
    CHECK(exact.slope_se == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(exact.pass);
    CHECK_FALSE(martingale_trend(synthetic({0.5, 0.25, 0.1}, {0.1, 0.2, 0.4})).pass);
    auto flat = martingale_trend(synthetic({0.3, 0.3, 0.3}, {0.1, 0.2, 0.3}));
    CHECK(flat.degenerate);
    CHECK_FALSE(flat.pass);
    CHECK_THROWS_AS(martingale_trend(synthetic({0.5, 0.25}, {1, 0.5})), StatisticalError);
    std::ostringstream os;
    write_trend_json(os, exact);
    CHECK(os.str().find("\"schema_version\": 1") != std::string::npos);
}

TEST_CASE("sweep hygiene and budget")
{
    auto c = tiny();
    std::vector<int> good{1, 2, 3};
    auto norms = check_sweep_hygiene(c, good);
    REQUIRE(norms.size() == 3);
    CHECK(norms[0].first > norms[1].first);
    CHECK(norms[1].first > norms[2].first);
    std::vector<int> repeated{2, 2};
    CHECK_THROWS_AS(check_sweep_hygiene(c, repeated), ConfigError);

    SweepPlan p = SweepPlan::from_config(c);
    CHECK(p.particle_steps() == doctest::Approx(4.0 * 6 * 400 * 4));
    CHECK_NOTHROW(check_budget(p));
    p.config.max_particle_steps = 100;
    CHECK_THROWS_WITH_AS(check_budget(p), doctest::Contains("infeasible budget"), ConfigError);
}

TEST_CASE("sweep statistics do not depend on replica order")
{
    auto c = tiny();
    SweepPlan p = SweepPlan::from_config(c);
    p.workers = 1;
    auto res = run_sweep(p);
    REQUIRE(res.table.rows.size() == 3);
    std::vector<std::uint64_t> ids{0, 1, 2, 3, 4, 5};
    auto scales = observable_scales(c, ids);
    auto common = res.common[1];
    auto limit = res.limit;
    std::mt19937 g(3);
    std::shuffle(common.begin(), common.end(), g);
    std::shuffle(limit.begin(), limit.end(), g);
    auto row = aggregate_row(2, common, limit, scales);
    const auto& ref = res.table.rows[1];
    CHECK(row.err == ref.err);
    CHECK(row.err_se == ref.err_se);
    CHECK(row.mart_var == ref.mart_var);
    CHECK(row.err_mean_gap == ref.err_mean_gap);
    for (const auto& r : res.table.rows)
    {
        CHECK(r.err > 0.0);
        CHECK(r.mart_var > 0.0);
        CHECK(r.replicas == 6);
        CHECK_FALSE(r.degraded);
    }
    std::ostringstream os;
    res.table.write_csv(os);
    CHECK(os.str().rfind("N,q_l74,q_l2,err,err_se,", 0) == 0);
}

TEST_CASE("zero horizon gives zero error")
{
    auto c = tiny();
    c.horizon = 0.0;
    SweepPlan p = SweepPlan::from_config(c);
    p.workers = 1;
    for (const auto& r : run_sweep(p).table.rows)
    {
        CHECK(r.err == 0.0);
        CHECK(r.err_mean_gap == 0.0);
    }
}

TEST_CASE("failed replicas degrade a row")
{
    auto c = tiny();
    std::vector<RunRecord> common, limit;
    for (std::uint64_t r = 0; r < 6; ++r)
    {
        common.push_back(run_trajectory(c, RunMode::common, r));
        limit.push_back(run_trajectory(c, RunMode::independent, r));
    }
    common[4].status = "failed";
    std::vector<std::uint64_t> ids{0, 1, 2, 3, 4, 5};
    auto row = aggregate_row(1, common, limit, observable_scales(c, ids));
    CHECK(row.failed == 1);
    CHECK(row.degraded);
    limit.resize(1);
    CHECK_THROWS_AS(aggregate_row(1, common, limit, observable_scales(c, ids)), StatisticalError);
}

TEST_CASE("self-calibration: with kappa = 0 both solvers coincide")
{
    auto c = tiny();
    std::vector<RunRecord> common, limit;
    for (std::uint64_t r = 0; r < 4; ++r)
    {
        TrajectoryOptions o;
        o.kappa = 0.0;
        common.push_back(run_trajectory(c, RunMode::common, r, o));
        limit.push_back(run_trajectory(c, RunMode::independent, r, o));
    }
    std::vector<std::uint64_t> ids{0, 1, 2, 3};
    auto row = aggregate_row(1, common, limit, observable_scales(c, ids));
    CHECK(row.err == 0.0);
}

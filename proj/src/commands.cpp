#include "svl/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "svl/diagnostics.hpp"
#include "svl/error.hpp"
#include "svl/noise_model.hpp"
#include "svl/particle_sde.hpp"
#include "svl/run_record.hpp"
#include "svl/scaling_experiment.hpp"
#include "svl/stats.hpp"
#include "svl/worker_pool.hpp"

namespace svl
{
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::pair<std::uint64_t, std::uint64_t> parse_replica_range(const std::string& s)
{
    auto parse = [&](const std::string& t) {
        if (t.empty() || !std::all_of(t.begin(), t.end(), ::isdigit))
            throw ConfigError("invalid replica range '" + s + "' (expected A..B)");
        return std::stoull(t);
    };
    auto pos = s.find("..");
    if (pos == std::string::npos)
    {
        auto a = parse(s);
        return {a, a};
    }
    auto a = parse(s.substr(0, pos));
    auto b = parse(s.substr(pos + 2));
    if (b < a)
        throw ConfigError("invalid replica range '" + s + "': B < A");
    return {a, b};
}

std::string resolve_output_dir(const ExperimentConfig& config,
                               const std::optional<std::string>& out)
{
    if (out)
        return *out;
    if (const char* env = std::getenv("SVL_OUTPUT_DIR"); env && *env)
        return env;
    return config.output_dir;
}

ExperimentConfig resolve_config(const CliOptions& opts)
{
    ExperimentConfig c;
    if (opts.config_path)
    {
        c = load_config(*opts.config_path);
    }
    else
    {
        c = parse_config("{}");
    }
    if (opts.seed)
        c.seed = *opts.seed;
    return c;
}

namespace
{
int workers_for(const CliOptions& o)
{
    return o.workers > 0 ? o.workers : default_workers();
}

bool wants(const ExperimentConfig& c, const std::string& fmt)
{
    return std::find(c.formats.begin(), c.formats.end(), fmt) != c.formats.end();
}

void write_file(const fs::path& p, const std::string& content)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + p.string() + "'");
    out << content;
}

template<class F>
std::string render(F&& f)
{
    std::ostringstream os;
    f(os);
    return os.str();
}

int report_error(std::ostream& err, const std::exception& e)
{
    std::string kind = "error";
    int code = 1;
    if (dynamic_cast<const ConfigError*>(&e))
    {
        kind = "config_error";
        code = 2;
    }
    else if (dynamic_cast<const NumericalError*>(&e))
    {
        kind = "numerical_error";
        code = 3;
    }
    else if (dynamic_cast<const StatisticalError*>(&e))
    {
        kind = "statistical_error";
        code = 4;
    }
    json j;
    j["schema_version"] = schema_version;
    j["status"] = "error";
    j["kind"] = kind;
    j["message"] = e.what();
    err << j.dump(2) << '\n';
    return code;
}

std::string fmt(double x)
{
    std::ostringstream os;
    os << std::setprecision(6) << x;
    return os.str();
}
}  // namespace

//---------------------------------------------------------------------------//
int cmd_run(const CliOptions& opts, std::ostream& log, std::ostream& err)
{
    try
    {
        ExperimentConfig c = resolve_config(opts);
        const RunMode mode = opts.mode.value_or(RunMode::common);
        auto [a, b] = opts.replicas.value_or(std::pair<std::uint64_t, std::uint64_t>{0, 0});
        fs::path dir = resolve_output_dir(c, opts.out);
        fs::create_directories(dir);
        write_file(dir / "config_resolved.json", serialize_config(c));

        const std::size_t n = std::size_t(b - a + 1);
        std::vector<RunRecord> recs(n);
        parallel_for(n, workers_for(opts), [&](std::size_t i) {
            recs[i] = run_trajectory(c, mode, a + i);
        });
        int failed = 0;
        for (const RunRecord& r : recs)
        {
            std::string stem = "run_" + r.mode + "_r" + std::to_string(r.replica);
            if (wants(c, "csv"))
                write_file(dir / (stem + ".csv"),
                           render([&](std::ostream& os) { write_record_csv(os, r); }));
            if (wants(c, "json"))
                write_file(dir / (stem + ".json"),
                           render([&](std::ostream& os) { write_record_json(os, r); }));
            write_file(dir / (stem + ".timing"),
                       "wall_seconds " + fmt(r.wall_seconds) + "\n");
            log << stem << ": " << r.status;
            if (!r.ok())
            {
                log << " (" << r.diagnostic << ")";
                ++failed;
            }
            log << '\n';
        }
        return failed ? 1 : 0;
    }
    catch (const std::exception& e)
    {
        return report_error(err, e);
    }
}

int cmd_sweep(const CliOptions& opts, std::ostream& log, std::ostream& err)
{
    try
    {
        ExperimentConfig c = resolve_config(opts);
        SweepPlan plan = SweepPlan::from_config(c);
        plan.workers = workers_for(opts);
        if (opts.replicas)
        {
            plan.first_replica = opts.replicas->first;
            plan.config.replicas = int(opts.replicas->second - opts.replicas->first + 1);
        }
        check_budget(plan);
        fs::path dir = resolve_output_dir(c, opts.out);
        fs::create_directories(dir / "records");
        write_file(dir / "config_resolved.json", serialize_config(plan.config));

        SweepResult res = run_sweep(plan, [&](const std::string& s) { log << s << '\n'; });
        write_file(dir / "convergence_table.csv",
                   render([&](std::ostream& os) { res.table.write_csv(os); }));
        for (std::size_t row = 0; row < res.common.size(); ++row)
            for (const RunRecord& r : res.common[row])
                write_file(dir / "records"
                               / ("common_N" + std::to_string(r.family_index) + "_r"
                                  + std::to_string(r.replica) + ".json"),
                           render([&](std::ostream& os) { write_record_json(os, r); }));
        for (const RunRecord& r : res.limit)
            write_file(dir / "records" / ("independent_r" + std::to_string(r.replica) + ".json"),
                       render([&](std::ostream& os) { write_record_json(os, r); }));

        if (res.table.rows.size() >= 3)
        {
            TrendReport t = martingale_trend(res.table, c.ci_sigma);
            write_file(dir / "martingale_trend.json",
                       render([&](std::ostream& os) { write_trend_json(os, t); }));
            log << "martingale trend slope " << t.slope << " +/- " << t.slope_se << '\n';
        }
        for (const ConvergenceRow& r : res.table.rows)
            log << "N=" << r.family_index << " err=" << r.err << " +/- " << r.err_se
                << " mart_var=" << r.mart_var << '\n';
        return 0;
    }
    catch (const std::exception& e)
    {
        return report_error(err, e);
    }
}

//---------------------------------------------------------------------------//
std::vector<VerifyCheck> run_verify(const ExperimentConfig& config, int workers,
                                    std::ostream* log)
{
    std::vector<VerifyCheck> checks;
    auto add = [&](std::string name, bool pass, std::string detail) {
        if (log)
            *log << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        checks.push_back({std::move(name), pass, std::move(detail)});
    };
    const double kappa = config.kappa;

    // Noise analytics.
    std::vector<NoiseSpec> specs;
    for (int n : config.family_indices)
    {
        NoiseSpec s = config.noise_spec(n);
        s.variant = NoiseVariant::canonical;
        s.mode_cutoff = std::max(s.mode_cutoff, n);
        specs.push_back(s);
    }
    NoiseSpec blob;
    blob.variant = NoiseVariant::blob;
    blob.kappa = kappa;
    blob.tau = 0.01;
    blob.kT2 = 6.0 * kappa / blob.tau;
    blob.mode_cutoff = 6;
    specs.push_back(blob);
    {
        double worst = 0.0, worst_tr = 0.0;
        for (const NoiseSpec& s : specs)
        {
            Mat3 q = NoiseField(s).covariance_at({0, 0, 0});
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    worst = std::max(worst, std::abs(q[i][j] - (i == j ? 2 * kappa : 0.0)));
            worst_tr = std::max(worst_tr, std::abs(q[0][0] + q[1][1] + q[2][2] - 6 * kappa));
        }
        add("covariance_exact", worst <= 1e-12 * std::max(1.0, kappa),
            "max |Q(0) - 2 kappa I| = " + fmt(worst));
        add("trace_identity", worst_tr <= 1e-12 * std::max(1.0, kappa),
            "max |Tr Q(0) - 6 kappa| = " + fmt(worst_tr));
    }
    {
        bool ok = true;
        std::string detail;
        double prev = infinity;
        for (std::size_t i = 0; i + 1 < specs.size(); ++i)
        {
            NoiseField f(specs[i]);
            auto g = canonical_coefficients(specs[i].family_index, specs[i].mode_cutoff);
            double l2 = f.lr_norm(2.0, 4 * f.cube_cutoff() + 2);
            double l74 = f.lr_norm(1.75, 4 * f.cube_cutoff() + 2);
            ok = ok && l2 <= 6 * kappa * g.linf_norm() * (1 + 1e-12) && l74 < prev;
            prev = l74;
            detail += "N=" + std::to_string(specs[i].family_index) + " L2=" + fmt(l2)
                      + " L7/4=" + fmt(l74) + "; ";
        }
        add("covariance_shrinkage", ok, detail);
    }
    {
        BlobProfile th = BlobProfile::bump();
        double a = blob_chi({3, 0, 0}, 0.05, th), b = blob_chi({2, 2, 1}, 0.05, th);
        add("chi_radiality", std::abs(a - b) <= 1e-8 * a,
            "chi(3,0,0) = " + fmt(a) + ", chi(2,2,1) = " + fmt(b));
    }

    // Sampler statistics and gradient structure.
    {
        NoiseField f(specs.front());
        RandomStream rng(config.seed, 0x5eed);
        const int draws = 20000;
        const double dt = 1.0;
        std::vector<Vec3> pts = {{0, 0, 0}, {0.1, 0.2, 0.05}};
        std::vector<std::array<double, 9>> s00(draws), s01(draws);
        for (int d = 0; d < draws; ++d)
        {
            auto w = sample_field_increments(f, pts, dt, rng, std::uint64_t(d));
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                {
                    s00[d][3 * i + j] = w[0][i] * w[0][j];
                    s01[d][3 * i + j] = w[0][i] * w[1][j];
                }
        }
        bool ok = true;
        double worst = 0.0;
        for (int lag = 0; lag < 2; ++lag)
        {
            Mat3 q = f.covariance_at(lag ? pts[0] - pts[1] : Vec3{0, 0, 0});
            auto& s = lag ? s01 : s00;
            for (int e = 0; e < 9; ++e)
            {
                std::vector<double> xs(draws);
                for (int d = 0; d < draws; ++d)
                    xs[d] = s[d][e];
                auto m = estimate_mean(xs);
                double target = q[e / 3][e % 3] * dt;
                worst = std::max(worst, std::abs(m.mean - target) / m.se);
                ok = ok && within_ci(m.mean, target, m.se, 3.0);
            }
        }
        add("sampler_covariance", ok, "worst z-score " + fmt(worst) + " over 18 entries");

        const int n = 4 * f.cube_cutoff() + 2;
        DensityGrid nodes(n);
        std::vector<Vec3> grid;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l)
                    grid.push_back(nodes.node(i, j, l));
        auto w = sample_field_increments(f, grid, 1.0, rng, 7);
        VectorField vf;
        for (int d = 0; d < 3; ++d)
            for (const Vec3& x : w)
                vf[d].push_back(x[d]);
        double ratio = spectral_curl_ratio(vf, n, f.cube_cutoff());
        add("gradient_structure", ratio < 1e-10, "spectral curl / gradient = " + fmt(ratio));
    }

    // Energy identity and quadratic variation on a reduced ensemble.
    {
        ExperimentConfig c = config;
        c.particles = 2000;
        c.horizon = 0.2;
        c.record_every = 10;
        const int reps = 32;
        std::vector<RunRecord> noisy(reps), calm(reps);
        parallel_for(2 * reps, workers, [&](std::size_t i) {
            TrajectoryOptions o;
            if (i >= std::size_t(reps))
                o.kappa = 0.0;
            auto rec = run_trajectory(c, RunMode::common, i % reps, o);
            (i < std::size_t(reps) ? noisy : calm)[i % reps] = std::move(rec);
        });
        std::vector<EnergyLedger> ln, lc;
        bool mass_ok = true;
        for (int r = 0; r < reps; ++r)
        {
            if (!noisy[r].ok() || !calm[r].ok())
                throw NumericalError("verification replica failed: " + noisy[r].diagnostic
                                     + calm[r].diagnostic);
            ln.push_back(noisy[r].ledger);
            lc.push_back(calm[r].ledger);
            mass_ok = mass_ok
                      && std::abs(noisy[r].ledger.total_weight - c.initial.mass)
                             <= 1e-12 * c.initial.mass;
        }
        add("mass_conservation", mass_ok, "total weight equals ||f0||_1 to 1e-12");
        auto e = energy_identity_check(ln, lc, 3.0);
        double worst = 0.0;
        for (auto& row : e.rows)
            if (row.se > 0)
                worst = std::max(worst, std::abs(row.mean) / row.se);
        add("energy_identity", e.pass, "worst |mean M| / se = " + fmt(worst));
        auto q = martingale_qv_check(ln, kappa, c.initial.mass, 3.0);
        double ratio = 0.0;
        for (auto& row : q.rows)
            if (row.bound > 0)
                ratio = std::max(ratio, row.second_moment / row.bound);
        add("qv_bound", q.pass, "max E[M^2] / bound = " + fmt(ratio));
    }

    // Liouville probes.
    {
        StepConfig sc = step_config(config);
        NoiseField f(config.noise_spec(config.noise.family_index));
        RandomStream rng(config.seed, 0x11);
        ParticleEnsemble e = sample_initial(config.initial, 2000, rng);
        std::vector<Vec3> x0, v0;
        for (std::uint32_t b = 0; b < 20; ++b)
        {
            auto u = rng.uniform_pair(Purpose::probe, 0, b, 0);
            auto u2 = rng.uniform_pair(Purpose::probe, 0, b, 1);
            auto g = rng.normal3(Purpose::probe, 1, b);
            x0.push_back({u[0] - 0.5, u[1] - 0.5, u2[0] - 0.5});
            v0.push_back(g);
        }
        const double h = 1e-4, horizon = 0.1;
        auto res = jacobian_probes(sc, f, e, rng, x0, v0, horizon, h);
        double worst = 0.0;
        for (auto& r : res)
            worst = std::max(worst, r.defect);
        const double tol = 10.0 * (sc.dt + h * h);
        add("liouville", worst <= tol,
            "max |det - 1| = " + fmt(worst) + " (tolerance " + fmt(tol) + ")");
    }

    // Interpolation inequalities along a reference trajectory.
    {
        ExperimentConfig c = config;
        StepConfig sc = step_config(c);
        NoiseField f(c.noise_spec(c.noise.family_index));
        Stepper stepper(sc, &f);
        RandomStream rng(c.seed, 0x22);
        ParticleEnsemble e = sample_initial(c.initial, 20000, rng);
        bool ok = true;
        double worst = 0.0;
        const long steps = std::lround(0.2 / sc.dt);
        for (long n = 0; n <= steps; ++n)
        {
            if (n % 10 == 0)
            {
                auto g = PhaseSpaceGrid::histogram(e, 6, 8, 5.0);
                for (double p : {2.0, infinity})
                {
                    auto r = interpolation_bound_check(g, p);
                    ok = ok && r.pass;
                    worst = std::max(worst, r.ratio);
                }
                for (double p : {1.0, 2.0, infinity})
                {
                    auto r = compact_velocity_marginal_check(g, {2, 2, 2}, {6, 6, 6}, p);
                    ok = ok && r.pass;
                    worst = std::max(worst, r.ratio);
                }
            }
            if (n < steps)
                stepper.step_common(e, rng, std::uint64_t(n));
        }
        add("interpolation_inequalities", ok, "max lhs / rhs = " + fmt(worst));
    }
    return checks;
}

int cmd_verify(const CliOptions& opts, std::ostream& log, std::ostream& err)
{
    try
    {
        ExperimentConfig c = resolve_config(opts);
        auto checks = run_verify(c, workers_for(opts), &log);
        bool pass = std::all_of(checks.begin(), checks.end(),
                                [](const VerifyCheck& v) { return v.pass; });
        json j;
        j["schema_version"] = schema_version;
        j["config_hash"] = c.hash;
        j["pass"] = pass;
        json arr = json::array();
        for (const VerifyCheck& v : checks)
            arr.push_back({{"name", v.name}, {"pass", v.pass}, {"detail", v.detail}});
        j["checks"] = arr;
        fs::path dir = resolve_output_dir(c, opts.out);
        fs::create_directories(dir);
        write_file(dir / "verify_report.json", j.dump(2) + "\n");
        log << (pass ? "verify: all checks passed" : "verify: FAILED") << '\n';
        return pass ? 0 : 1;
    }
    catch (const std::exception& e)
    {
        return report_error(err, e);
    }
}
}  // namespace svl

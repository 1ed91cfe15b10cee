#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "svl/commands.hpp"
#include "svl/error.hpp"
#include "svl/run_record.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic Vlasov particle simulator and verification harness"};
    app.require_subcommand(1);

    svl::CliOptions opts;
    std::string config, replicas, mode, out;
    std::uint64_t seed = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "JSON configuration file");
        sub->add_option("--seed", seed, "Master seed override");
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--workers", opts.workers, "Worker threads (0: all cores)");
    };
    auto* run = app.add_subcommand("run", "Run replicas of one trajectory");
    common(run);
    run->add_option("--replicas", replicas, "Replica id range A..B");
    run->add_option("--mode", mode, "common or independent")
        ->check(CLI::IsMember({"common", "independent"}));
    auto* sweep = app.add_subcommand("sweep", "Convergence sweep over the noise family");
    common(sweep);
    sweep->add_option("--replicas", replicas, "Replica id range A..B");
    auto* verify = app.add_subcommand("verify", "Invariant checks at verification scale");
    common(verify);

    CLI11_PARSE(app, argc, argv);

    try
    {
        for (CLI::App* sub : {run, sweep, verify})
        {
            if (sub->count("--config"))
                opts.config_path = config;
            if (sub->count("--seed"))
                opts.seed = seed;
            if (sub->count("--out"))
                opts.out = out;
        }
        if (!replicas.empty())
            opts.replicas = svl::parse_replica_range(replicas);
        if (!mode.empty())
            opts.mode = svl::run_mode_from_string(mode);
    }
    catch (const svl::ConfigError& e)
    {
        nlohmann::ordered_json j{{"schema_version", svl::schema_version},
                                 {"status", "error"},
                                 {"kind", "config_error"},
                                 {"message", e.what()}};
        std::cerr << j.dump(2) << '\n';
        return 2;
    }

    if (*run)
        return svl::cmd_run(opts, std::cout, std::cerr);
    if (*sweep)
        return svl::cmd_sweep(opts, std::cout, std::cerr);
    return svl::cmd_verify(opts, std::cout, std::cerr);
}

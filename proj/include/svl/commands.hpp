#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "svl/config.hpp"

namespace svl
{
struct CliOptions
{
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    //! Inclusive replica id range "A..B".
    std::optional<std::pair<std::uint64_t, std::uint64_t>> replicas;
    std::optional<std::string> out;
    std::optional<RunMode> mode;
    int workers = 0;  //!< 0 selects hardware concurrency
};

//! Parse "A..B" (inclusive, A <= B) or a single id "A".
std::pair<std::uint64_t, std::uint64_t> parse_replica_range(const std::string& s);

//! --out, then SVL_OUTPUT_DIR, then the config's output.directory.
std::string resolve_output_dir(const ExperimentConfig& config,
                               const std::optional<std::string>& out);

//! Config from --config (or built-in defaults) with the seed override applied.
ExperimentConfig resolve_config(const CliOptions& opts);

struct VerifyCheck
{
    std::string name;
    bool pass = false;
    std::string detail;
};

//! Invariant suite at verification scale (about a minute on one core).
std::vector<VerifyCheck> run_verify(const ExperimentConfig& config, int workers,
                                    std::ostream* log = nullptr);

//! Each returns the process exit status; errors are reported as JSON on err.
int cmd_run(const CliOptions& opts, std::ostream& log, std::ostream& err);
int cmd_sweep(const CliOptions& opts, std::ostream& log, std::ostream& err);
int cmd_verify(const CliOptions& opts, std::ostream& log, std::ostream& err);
}  // namespace svl

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "svl/diagnostics.hpp"

namespace svl
{
inline constexpr int schema_version = 1;

//! Outcome of one stochastic trajectory.
struct RunRecord
{
    std::string config_hash;
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
    std::string mode;
    int family_index = 0;
    std::string rng = "philox4x32-10/splitmix64(seed, replica)";

    std::vector<double> times;
    std::vector<std::string> observable_names;
    std::vector<std::vector<double>> observables;  //!< [time][observable]
    EnergyLedger ledger;

    std::uint64_t particle_steps = 0;
    double wall_seconds = 0.0;  //!< kept out of the reproducible outputs

    std::string status = "ok";
    std::string diagnostic;

    bool ok() const { return status == "ok"; }
};

//! t, K, V, M_est, then one column per observable.
void write_record_csv(std::ostream& os, const RunRecord& rec);
//! Metadata and final values; no timing.
void write_record_json(std::ostream& os, const RunRecord& rec);
}  // namespace svl

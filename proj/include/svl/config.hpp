#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "svl/diagnostics.hpp"
#include "svl/noise_model.hpp"

namespace svl
{
enum class RunMode
{
    common,
    independent
};

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct InitialCondition
{
    double amplitude = 0.1;    //!< a in 1 + a cos(2 pi x1)
    double temperature = 1.0;  //!< Maxwellian variance per axis
    double mass = 1.0;         //!< ||f0||_{L^1}
};

/*!
 * Everything needed to reproduce a run or a sweep.
 *
 * Loaded from a JSON tree; every field not present in the file is defaulted
 * and recorded as such in provenance.
 */
struct ExperimentConfig
{
    // physical
    double kappa = 0.5;
    double magnetic = 1.0;
    double delta = 0.1;
    double green_sign = 1.0;
    bool self_consistent = true;

    // noise
    NoiseSpec noise;
    std::vector<int> family_indices{1, 2, 3, 4};

    InitialCondition initial;

    // discretization
    std::size_t particles = 20000;
    double dt = 5e-3;
    double horizon = 0.5;
    int mode_cutoff = 4;
    int grid = 16;
    int record_every = 10;

    // statistics
    int replicas = 32;
    std::vector<Observable> observables = default_battery();
    double ci_sigma = 3.0;

    std::uint64_t seed = 20240917;

    std::string output_dir = "svl_out";
    std::vector<std::string> formats{"csv", "json"};

    double max_particle_steps = 2e9;

    //! FNV-1a of the bytes the config was loaded from (or of its
    //! serialization when built in code).
    std::string hash;
    //! Dotted key -> "file", "default" or "derived".
    std::map<std::string, std::string> provenance;

    //! Number of time steps; throws unless horizon is a multiple of dt.
    long steps() const;
    //! Noise spec for family index N (canonical) or the configured blob.
    NoiseSpec noise_spec(int family_index) const;
    void validate() const;
};

std::string fnv1a_hex(const std::string& bytes);

//! Parse and validate; ConfigError carries line/column for syntax errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
//! Canonical JSON text (stable key order) that parses back to an equal config.
std::string serialize_config(const ExperimentConfig& config);
}  // namespace svl

#include "svl/run_record.hpp"

#include <ostream>

#include <json.hpp>

namespace svl
{
using json = nlohmann::ordered_json;

void write_record_csv(std::ostream& os, const RunRecord& rec)
{
    os << "t,kinetic,potential,m_est";
    for (const std::string& n : rec.observable_names)
        os << ',' << n;
    os << '\n';
    auto m = energy_identity_residual(rec.ledger);
    os.precision(17);
    for (std::size_t i = 0; i < rec.times.size(); ++i)
    {
        os << rec.times[i] << ',' << rec.ledger.kinetic[i] << ','
           << rec.ledger.potential[i] << ',' << m[i];
        for (double v : rec.observables[i])
            os << ',' << v;
        os << '\n';
    }
}

void write_record_json(std::ostream& os, const RunRecord& rec)
{
    json j;
    j["schema_version"] = schema_version;
    j["config_hash"] = rec.config_hash;
    j["seed"] = rec.seed;
    j["replica"] = rec.replica;
    j["mode"] = rec.mode;
    j["family_index"] = rec.family_index;
    j["rng"] = rec.rng;
    j["status"] = rec.status;
    j["diagnostic"] = rec.diagnostic;
    j["kappa"] = rec.ledger.kappa;
    j["total_weight"] = rec.ledger.total_weight;
    j["particle_steps"] = rec.particle_steps;
    j["records"] = rec.times.size();
    if (!rec.times.empty())
    {
        j["final_time"] = rec.times.back();
        auto m = energy_identity_residual(rec.ledger);
        j["final_m_est"] = m.back();
        json obs;
        for (std::size_t k = 0; k < rec.observable_names.size(); ++k)
            obs[rec.observable_names[k]] = rec.observables.back()[k];
        j["final_observables"] = obs;
    }
    os << j.dump(2) << '\n';
}
}  // namespace svl

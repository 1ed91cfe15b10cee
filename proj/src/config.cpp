#include "svl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "svl/error.hpp"

namespace svl
{
using json = nlohmann::ordered_json;

std::string to_string(RunMode m)
{
    return m == RunMode::common ? "common" : "independent";
}

RunMode run_mode_from_string(const std::string& s)
{
    if (s == "common")
        return RunMode::common;
    if (s == "independent")
        return RunMode::independent;
    throw ConfigError("unknown mode '" + s + "' (expected common or independent)");
}

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

long ExperimentConfig::steps() const
{
    const long n = std::lround(horizon / dt);
    require(std::abs(double(n) * dt - horizon) <= 1e-9 * std::max(1.0, horizon),
            "horizon T must be a multiple of dt");
    return n;
}

NoiseSpec ExperimentConfig::noise_spec(int family_index) const
{
    NoiseSpec s = noise;
    s.kappa = kappa;
    if (s.variant == NoiseVariant::canonical)
        s.family_index = family_index;
    return s;
}

void ExperimentConfig::validate() const
{
    require(kappa >= 0.0 && std::isfinite(kappa), "physical.kappa must be >= 0");
    require(std::isfinite(magnetic), "physical.B must be finite");
    require(delta > 0.0 && delta < 0.5, "physical.delta must lie in (0, 1/2)");
    require(green_sign == 1.0 || green_sign == -1.0,
            "physical.green_sign must be +1 or -1");
    require(particles >= 1, "discretization.particles must be >= 1");
    require(dt > 0.0, "discretization.dt must be positive");
    require(horizon >= 0.0, "discretization.horizon must be >= 0");
    require(std::abs(magnetic) * dt < 3.141592653589793,
            "|B| dt must stay below pi");
    require(mode_cutoff >= 1, "discretization.mode_cutoff K must be >= 1");
    require(grid >= 2 * mode_cutoff + 2,
            "discretization.grid must be >= 2K+2 to avoid aliasing");
    require(record_every >= 1, "discretization.record_every must be >= 1");
    require(replicas >= 1, "statistics.replicas must be >= 1");
    require(ci_sigma > 0.0, "statistics.ci_sigma must be positive");
    require(!observables.empty(), "statistics.observables must not be empty");
    for (const Observable& o : observables)
        require(o.s > 0.0, "observable width s must be positive");
    require(!family_indices.empty(), "noise.family_indices must not be empty");
    for (std::size_t i = 1; i < family_indices.size(); ++i)
        require(family_indices[i] > family_indices[i - 1],
                "noise.family_indices must be strictly increasing");
    require(max_particle_steps > 0.0, "budget.max_particle_steps must be positive");
    for (const std::string& f : formats)
        require(f == "csv" || f == "json", "output.formats entries must be csv or json");
    steps();
    NoiseSpec s = noise_spec(noise.family_index);
    s.validate();
    if (noise.variant == NoiseVariant::canonical)
        for (int n : family_indices)
            noise_spec(n).validate();
    if (noise.variant == NoiseVariant::renewal)
        throw ConfigError("the renewal variant is an analysis tool and cannot drive "
                          "the particle stepper; use canonical or blob");
}

//---------------------------------------------------------------------------//
namespace
{
class Reader
{
  public:
    Reader(const json& root, ExperimentConfig& cfg) : root_(root), cfg_(cfg) {}

    const json* find(const std::string& section, const std::string& key) const
    {
        auto s = root_.find(section);
        if (s == root_.end())
            return nullptr;
        if (!s->is_object())
            throw ConfigError("section '" + section + "' must be an object");
        auto k = s->find(key);
        return k == s->end() ? nullptr : &*k;
    }

    template<class T>
    bool get(const std::string& section, const std::string& key, T& out)
    {
        const std::string path = section + "." + key;
        const json* j = find(section, key);
        if (!j)
        {
            cfg_.provenance[path] = "default";
            return false;
        }
        try
        {
            out = j->get<T>();
        }
        catch (const json::exception& e)
        {
            throw ConfigError("field '" + path + "' has the wrong type: " + e.what());
        }
        cfg_.provenance[path] = "file";
        return true;
    }

    void mark(const std::string& path, const std::string& how)
    {
        cfg_.provenance[path] = how;
    }

  private:
    const json& root_;
    ExperimentConfig& cfg_;
};

Vec3 vec3_from(const json& j, const std::string& what)
{
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(what + " must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Observable observable_from(const json& j)
{
    if (!j.is_object())
        throw ConfigError("each observable must be an object");
    Observable o;
    if (j.contains("l"))
    {
        Vec3 l = vec3_from(j["l"], "observable.l");
        o.l = {int(l[0]), int(l[1]), int(l[2])};
        require(o.l.as_vec() == l, "observable.l must be integers");
    }
    if (j.contains("v0"))
        o.v0 = vec3_from(j["v0"], "observable.v0");
    if (j.contains("s"))
    {
        if (j["s"].is_string())
        {
            require(j["s"].get<std::string>() == "inf",
                    "observable.s must be a number or \"inf\"");
            o.s = infinity;
        }
        else
        {
            o.s = j["s"].get<double>();
        }
    }
    if (j.contains("kind"))
    {
        std::string k = j["kind"].get<std::string>();
        require(k == "cos" || k == "sin", "observable.kind must be cos or sin");
        o.kind = k == "cos" ? Observable::Kind::cos : Observable::Kind::sin;
    }
    return o;
}

json observable_to(const Observable& o)
{
    json j;
    j["l"] = {o.l.k1, o.l.k2, o.l.k3};
    j["v0"] = {o.v0[0], o.v0[1], o.v0[2]};
    if (std::isinf(o.s))
        j["s"] = "inf";
    else
        j["s"] = o.s;
    j["kind"] = o.kind == Observable::Kind::cos ? "cos" : "sin";
    return j;
}

void check_known(const json& root)
{
    static const std::map<std::string, std::vector<std::string>> known = {
        {"physical", {"kappa", "tau", "kT2", "B", "delta", "green_sign", "self_consistent"}},
        {"noise",
         {"variant", "mode_cutoff", "family_index", "family_indices", "profile", "ell",
          "r_mean"}},
        {"initial", {"amplitude", "temperature", "mass"}},
        {"discretization",
         {"particles", "dt", "horizon", "mode_cutoff", "grid", "record_every"}},
        {"statistics", {"replicas", "observables", "ci_sigma"}},
        {"seeds", {"master"}},
        {"output", {"directory", "formats"}},
        {"budget", {"max_particle_steps"}},
    };
    if (!root.is_object())
        throw ConfigError("config root must be an object");
    for (auto it = root.begin(); it != root.end(); ++it)
    {
        auto k = known.find(it.key());
        if (k == known.end())
            throw ConfigError("unknown config section '" + it.key() + "'");
        if (!it->is_object())
            throw ConfigError("section '" + it.key() + "' must be an object");
        for (auto f = it->begin(); f != it->end(); ++f)
            if (std::find(k->second.begin(), k->second.end(), f.key()) == k->second.end())
                throw ConfigError("unknown field '" + it.key() + "." + f.key() + "'");
    }
}

std::string line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    {
        if (text[i] == '\n')
        {
            ++line;
            col = 1;
        }
        else
        {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}
}  // namespace

ExperimentConfig parse_config(const std::string& text)
{
    json root;
    try
    {
        root = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        // e.byte is one past the offending character.
        std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ConfigError("config parse error at " + line_column(text, at) + ": "
                          + e.what());
    }
    check_known(root);

    ExperimentConfig c;
    Reader r(root, c);

    bool has_kappa = r.get("physical", "kappa", c.kappa);
    bool has_tau = r.get("physical", "tau", c.noise.tau);
    bool has_kt2 = r.get("physical", "kT2", c.noise.kT2);
    r.get("physical", "B", c.magnetic);
    r.get("physical", "delta", c.delta);
    r.get("physical", "green_sign", c.green_sign);
    r.get("physical", "self_consistent", c.self_consistent);
    require(has_tau == has_kt2, "physical.tau and physical.kT2 must be given together");
    if (has_tau && has_kappa)
    {
        const double linked = c.noise.tau * c.noise.kT2 / 6.0;
        if (std::abs(c.kappa - linked) > 1e-12 * std::max(1.0, linked))
            throw ConfigError("constraint kappa = tau * k_T^2 / 6 violated: kappa = "
                              + std::to_string(c.kappa) + " but tau * kT2 / 6 = "
                              + std::to_string(linked));
    }
    else if (has_tau)
    {
        c.kappa = c.noise.tau * c.noise.kT2 / 6.0;
        r.mark("physical.kappa", "derived");
    }
    else
    {
        c.noise.kT2 = 6.0 * c.kappa / c.noise.tau;
        r.mark("physical.kT2", "derived");
    }
    c.noise.kappa = c.kappa;

    std::string variant = to_string(c.noise.variant);
    r.get("noise", "variant", variant);
    c.noise.variant = noise_variant_from_string(variant);
    r.get("noise", "mode_cutoff", c.noise.mode_cutoff);
    r.get("noise", "family_index", c.noise.family_index);
    r.get("noise", "family_indices", c.family_indices);
    r.get("noise", "ell", c.noise.ell);
    r.get("noise", "r_mean", c.noise.r_mean);
    if (const json* p = r.find("noise", "profile"))
    {
        r.mark("noise.profile", "file");
        if (!p->is_object())
            throw ConfigError("noise.profile must be an object");
        std::string shape = p->value("shape", std::string("bump"));
        double scale = p->value("scale", shape == "bump" ? 0.25 : 0.05);
        if (shape == "bump")
            c.noise.profile = BlobProfile::bump(scale);
        else if (shape == "gaussian")
            c.noise.profile = BlobProfile::gaussian(scale);
        else
            throw ConfigError("noise.profile.shape must be bump or gaussian");
    }
    else
    {
        r.mark("noise.profile", "default");
    }

    r.get("initial", "amplitude", c.initial.amplitude);
    r.get("initial", "temperature", c.initial.temperature);
    r.get("initial", "mass", c.initial.mass);

    r.get("discretization", "particles", c.particles);
    r.get("discretization", "dt", c.dt);
    r.get("discretization", "horizon", c.horizon);
    r.get("discretization", "mode_cutoff", c.mode_cutoff);
    r.get("discretization", "grid", c.grid);
    r.get("discretization", "record_every", c.record_every);

    r.get("statistics", "replicas", c.replicas);
    r.get("statistics", "ci_sigma", c.ci_sigma);
    if (const json* obs = r.find("statistics", "observables"))
    {
        r.mark("statistics.observables", "file");
        if (!obs->is_array())
            throw ConfigError("statistics.observables must be an array");
        c.observables.clear();
        for (const json& o : *obs)
            c.observables.push_back(observable_from(o));
    }
    else
    {
        r.mark("statistics.observables", "default");
    }

    r.get("seeds", "master", c.seed);
    r.get("output", "directory", c.output_dir);
    r.get("output", "formats", c.formats);
    r.get("budget", "max_particle_steps", c.max_particle_steps);

    c.validate();
    c.hash = fnv1a_hex(text);
    return c;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c)
{
    json root;
    root["physical"]["kappa"] = c.kappa;
    root["physical"]["tau"] = c.noise.tau;
    root["physical"]["kT2"] = c.noise.kT2;
    root["physical"]["B"] = c.magnetic;
    root["physical"]["delta"] = c.delta;
    root["physical"]["green_sign"] = c.green_sign;
    root["physical"]["self_consistent"] = c.self_consistent;

    root["noise"]["variant"] = to_string(c.noise.variant);
    root["noise"]["mode_cutoff"] = c.noise.mode_cutoff;
    root["noise"]["family_index"] = c.noise.family_index;
    root["noise"]["family_indices"] = c.family_indices;
    root["noise"]["profile"]["shape"] = c.noise.profile.name();
    root["noise"]["profile"]["scale"] = c.noise.profile.scale();
    root["noise"]["ell"] = c.noise.ell;
    root["noise"]["r_mean"] = c.noise.r_mean;

    root["initial"]["amplitude"] = c.initial.amplitude;
    root["initial"]["temperature"] = c.initial.temperature;
    root["initial"]["mass"] = c.initial.mass;

    root["discretization"]["particles"] = c.particles;
    root["discretization"]["dt"] = c.dt;
    root["discretization"]["horizon"] = c.horizon;
    root["discretization"]["mode_cutoff"] = c.mode_cutoff;
    root["discretization"]["grid"] = c.grid;
    root["discretization"]["record_every"] = c.record_every;

    root["statistics"]["replicas"] = c.replicas;
    json obs = json::array();
    for (const Observable& o : c.observables)
        obs.push_back(observable_to(o));
    root["statistics"]["observables"] = obs;
    root["statistics"]["ci_sigma"] = c.ci_sigma;

    root["seeds"]["master"] = c.seed;
    root["output"]["directory"] = c.output_dir;
    root["output"]["formats"] = c.formats;
    root["budget"]["max_particle_steps"] = c.max_particle_steps;
    return root.dump(2) + "\n";
}
}  // namespace svl

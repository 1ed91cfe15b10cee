#include "svl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "svl/error.hpp"
#include "svl/stats.hpp"

namespace svl
{
//---------------------------------------------------------------------------//
double Observable::operator()(const Vec3& x, const Vec3& v) const
{
    const double ph = two_pi * dot(l.as_vec(), x);
    const double trig = kind == Kind::cos ? std::cos(ph) : std::sin(ph);
    if (std::isinf(s))
        return trig;
    const Vec3 d = v - v0;
    return trig * std::exp(-dot(d, d) / (2.0 * s * s));
}

Vec3 Observable::grad_v(const Vec3& x, const Vec3& v) const
{
    if (std::isinf(s))
        return {0.0, 0.0, 0.0};
    const Vec3 d = v - v0;
    return (-(*this)(x, v) / (s * s)) * d;
}

std::string Observable::name() const
{
    std::ostringstream os;
    os << (kind == Kind::cos ? "cos" : "sin") << "_l" << l.k1 << '_' << l.k2 << '_'
       << l.k3 << "_v" << v0[0] << '_' << v0[1] << '_' << v0[2] << "_s";
    if (std::isinf(s))
        os << "inf";
    else
        os << s;
    return os.str();
}

std::vector<Observable> default_battery()
{
    std::vector<Observable> out;
    for (Mode l : {Mode{0, 0, 0}, Mode{1, 0, 0}, Mode{1, 1, 0}})
        for (Vec3 v0 : {Vec3{0, 0, 0}, Vec3{1, 0, 0}})
            for (double s : {0.5, 1.0})
                out.push_back({l, v0, s, Observable::Kind::cos});
    return out;
}

double observable_value(const ParticleEnsemble& e, const Observable& phi)
{
    const Vec3 l = phi.l.as_vec();
    const bool window = !std::isinf(phi.s);
    const double inv2s2 = window ? 1.0 / (2.0 * phi.s * phi.s) : 0.0;
    const bool is_cos = phi.kind == Observable::Kind::cos;
    double sum = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
    {
        const double ph
            = two_pi * (l[0] * e.x[0][i] + l[1] * e.x[1][i] + l[2] * e.x[2][i]);
        double val = is_cos ? std::cos(ph) : std::sin(ph);
        if (window)
        {
            const double d0 = e.v[0][i] - phi.v0[0];
            const double d1 = e.v[1][i] - phi.v0[1];
            const double d2 = e.v[2][i] - phi.v0[2];
            val *= std::exp(-(d0 * d0 + d1 * d1 + d2 * d2) * inv2s2);
        }
        sum += e.w[i] * val;
    }
    return sum;
}

//---------------------------------------------------------------------------//
double kinetic_energy(const ParticleEnsemble& e)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i)
        sum += e.w[i]
               * (e.v[0][i] * e.v[0][i] + e.v[1][i] * e.v[1][i] + e.v[2][i] * e.v[2][i]);
    return sum;
}

std::vector<double> energy_identity_residual(const EnergyLedger& ledger)
{
    std::vector<double> m(ledger.size(), 0.0);
    if (ledger.size() == 0)
        return m;
    const double e0 = ledger.kinetic[0] + ledger.potential[0];
    for (std::size_t i = 0; i < ledger.size(); ++i)
    {
        const double dt = ledger.t[i] - ledger.t[0];
        m[i] = ledger.kinetic[i] + ledger.potential[i] - e0
               - 6.0 * ledger.kappa * dt * ledger.total_weight;
    }
    if (!m.empty())
        m[0] = 0.0;
    return m;
}

namespace
{
void check_aligned(std::span<const EnergyLedger> ledgers)
{
    if (ledgers.empty())
        throw StatisticalError("no ledgers supplied");
    for (const EnergyLedger& l : ledgers)
        if (l.t != ledgers[0].t)
            throw StatisticalError("ledgers are recorded on different time grids");
}

// Column j of M_est across replicas.
std::vector<std::vector<double>> residual_columns(std::span<const EnergyLedger> ledgers)
{
    std::vector<std::vector<double>> cols(ledgers[0].size());
    for (const EnergyLedger& l : ledgers)
    {
        auto m = energy_identity_residual(l);
        for (std::size_t j = 0; j < m.size(); ++j)
            cols[j].push_back(m[j]);
    }
    return cols;
}
}  // namespace

EnergyCheckReport energy_identity_check(std::span<const EnergyLedger> ledgers,
                                        std::span<const EnergyLedger> calibration,
                                        double nsigma)
{
    check_aligned(ledgers);
    if (ledgers.size() < 2)
        throw StatisticalError("energy identity check needs at least 2 replicas");
    auto cols = residual_columns(ledgers);
    std::vector<std::vector<double>> bias_cols;
    if (!calibration.empty())
    {
        check_aligned(calibration);
        if (calibration[0].t != ledgers[0].t)
            throw StatisticalError("calibration ledgers use a different time grid");
        bias_cols = residual_columns(calibration);
    }
    EnergyCheckReport rep;
    rep.pass = true;
    for (std::size_t j = 0; j < cols.size(); ++j)
    {
        EnergyCheckRow row;
        row.t = ledgers[0].t[j];
        auto m = estimate_mean(cols[j]);
        double se2 = m.se * m.se;
        if (!bias_cols.empty())
        {
            auto b = estimate_mean(bias_cols[j]);
            row.bias = b.mean;
            se2 += b.se * b.se;
        }
        row.mean = m.mean - row.bias;
        row.se = std::sqrt(se2);
        row.pass = within_ci(row.mean, 0.0, row.se, nsigma);
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

QvReport martingale_qv_check(std::span<const EnergyLedger> ledgers, double kappa,
                             double total_weight, double nsigma)
{
    if (ledgers.size() < 32)
        throw StatisticalError("martingale QV check needs at least 32 replicas, got "
                               + std::to_string(ledgers.size()));
    check_aligned(ledgers);
    auto cols = residual_columns(ledgers);
    const std::size_t nt = ledgers[0].size();
    std::vector<double> mean_k(nt, 0.0);
    for (const EnergyLedger& l : ledgers)
        for (std::size_t j = 0; j < nt; ++j)
            mean_k[j] += l.kinetic[j] / double(ledgers.size());

    QvReport rep;
    rep.pass = true;
    const double slack = std::sqrt(2.0 / double(ledgers.size() - 1));
    double integral = 0.0;
    for (std::size_t j = 0; j < nt; ++j)
    {
        if (j > 0)
            integral += 0.5 * (mean_k[j] + mean_k[j - 1])
                        * (ledgers[0].t[j] - ledgers[0].t[j - 1]);
        QvRow row;
        row.t = ledgers[0].t[j];
        row.second_moment = sample_variance(cols[j]);
        row.bound = 24.0 * kappa * total_weight * integral;
        row.slack = slack;
        row.pass = row.second_moment <= row.bound * (1.0 + nsigma * slack)
                   || row.second_moment <= 1e-24;
        rep.pass = rep.pass && row.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

double spectral_curl_ratio(const VectorField& samples, int n, int kmax)
{
    require(n >= 2 * kmax + 1, "curl grid too coarse for the requested modes");
    const std::size_t total = std::size_t(n) * n * n;
    for (int d = 0; d < 3; ++d)
        require(samples[d].size() == total, "curl samples must cover the n^3 grid");
    DensityGrid nodes(n);
    std::array<std::vector<double>, 3> pts;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
            {
                Vec3 x = nodes.node(i, j, l);
                for (int d = 0; d < 3; ++d)
                    pts[d].push_back(x[d]);
            }
    HalfCube cube(kmax);
    std::array<std::vector<Complex>, 3> u;
    for (int d = 0; d < 3; ++d)
    {
        u[d].assign(cube.size(), Complex(0.0, 0.0));
        std::vector<double> w(total);
        for (std::size_t i = 0; i < total; ++i)
            w[i] = samples[d][i] / double(total);
        accumulate_spectrum(cube, {pts[0], pts[1], pts[2]}, w, u[d]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t m = 0; m < cube.size(); ++m)
    {
        Vec3 k = cube.modes()[m].as_vec();
        Complex c0 = k[1] * u[2][m] - k[2] * u[1][m];
        Complex c1 = k[2] * u[0][m] - k[0] * u[2][m];
        Complex c2 = k[0] * u[1][m] - k[1] * u[0][m];
        num += std::norm(c0) + std::norm(c1) + std::norm(c2);
        den += dot(k, k) * (std::norm(u[0][m]) + std::norm(u[1][m]) + std::norm(u[2][m]));
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

//---------------------------------------------------------------------------//
double density_lp_norm(const DensityGrid& grid, double p)
{
    require(p >= 1.0, "L^p exponent must be >= 1");
    const auto& vals = grid.values();
    if (std::isinf(p))
    {
        double m = 0.0;
        for (double v : vals)
            m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (double v : vals)
        s += std::pow(std::abs(v), p);
    return std::pow(s * grid.cell_volume(), 1.0 / p);
}

PhaseSpaceGrid::PhaseSpaceGrid(int nx, int nv, double vmax)
    : nx_(nx), nv_(nv), vmax_(vmax)
{
    require(nx >= 1 && nv >= 1, "phase-space grid needs positive resolutions");
    require(vmax > 0.0, "velocity box half-width must be positive");
    f_.assign(spatial_cells() * velocity_cells(), 0.0);
}

Vec3 PhaseSpaceGrid::velocity_center(std::size_t iv) const
{
    const std::size_t n = nv_;
    const std::size_t i = iv / (n * n), j = (iv / n) % n, l = iv % n;
    const double h = dv();
    return {-vmax_ + (i + 0.5) * h, -vmax_ + (j + 0.5) * h, -vmax_ + (l + 0.5) * h};
}

PhaseSpaceGrid PhaseSpaceGrid::histogram(const ParticleEnsemble& e, int nx, int nv,
                                         double vmax, double* dropped_weight)
{
    PhaseSpaceGrid g(nx, nv, vmax);
    const double inv_vol = 1.0 / g.cell_volume();
    double dropped = 0.0;
    for (std::size_t p = 0; p < e.size(); ++p)
    {
        std::size_t ix = 0, iv = 0;
        bool inside = true;
        for (int d = 0; d < 3; ++d)
        {
            int cx = int(std::floor((e.x[d][p] + 0.5) * nx));
            cx = ((cx % nx) + nx) % nx;
            ix = ix * nx + cx;
            double sv = (e.v[d][p] + vmax) / g.dv();
            if (sv < 0.0 || sv >= nv)
            {
                inside = false;
                break;
            }
            iv = iv * nv + std::size_t(sv);
        }
        if (!inside)
        {
            dropped += e.w[p];
            continue;
        }
        g.at(ix, iv) += e.w[p] * inv_vol;
    }
    if (dropped_weight)
        *dropped_weight = dropped;
    return g;
}

double PhaseSpaceGrid::lp_norm(double p) const
{
    require(p >= 1.0, "L^p exponent must be >= 1");
    if (std::isinf(p))
    {
        double m = 0.0;
        for (double v : f_)
            m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (double v : f_)
        if (v != 0.0)
            s += std::pow(std::abs(v), p);
    return std::pow(s * cell_volume(), 1.0 / p);
}

double PhaseSpaceGrid::kinetic_energy() const
{
    // int_cell |v|^2 dv = dv^3 (|v_c|^2 + dv^2 / 4).
    const double h2 = dv() * dv();
    std::vector<double> weight(velocity_cells());
    for (std::size_t iv = 0; iv < weight.size(); ++iv)
    {
        Vec3 c = velocity_center(iv);
        weight[iv] = dot(c, c) + h2 / 4.0;
    }
    double s = 0.0;
    for (std::size_t ix = 0; ix < spatial_cells(); ++ix)
        for (std::size_t iv = 0; iv < velocity_cells(); ++iv)
            s += at(ix, iv) * weight[iv];
    return s * cell_volume();
}

std::vector<double> PhaseSpaceGrid::velocity_marginal(std::array<int, 3> lo,
                                                      std::array<int, 3> hi) const
{
    for (int d = 0; d < 3; ++d)
        require(0 <= lo[d] && lo[d] <= hi[d] && hi[d] <= nv_,
                "velocity box indices out of range");
    const double dv3 = std::pow(dv(), 3);
    std::vector<double> rho(spatial_cells(), 0.0);
    const std::size_t n = nv_;
    for (std::size_t ix = 0; ix < spatial_cells(); ++ix)
    {
        double s = 0.0;
        for (int a = lo[0]; a < hi[0]; ++a)
            for (int b = lo[1]; b < hi[1]; ++b)
                for (int c = lo[2]; c < hi[2]; ++c)
                    s += at(ix, (std::size_t(a) * n + b) * n + c);
        rho[ix] = s * dv3;
    }
    return rho;
}

double PhaseSpaceGrid::spatial_lp_norm(std::span<const double> rho, double p) const
{
    if (std::isinf(p))
    {
        double m = 0.0;
        for (double v : rho)
            m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (double v : rho)
        s += std::pow(std::abs(v), p);
    return std::pow(s * std::pow(dx(), 3), 1.0 / p);
}

double interpolation_exponent(double p)
{
    require(p > 1.0, "interpolation exponent needs p > 1");
    if (std::isinf(p))
        return 5.0 / 3.0;
    return (2.0 * p + 3.0 * (p - 1.0)) / (2.0 + 3.0 * (p - 1.0));
}

namespace
{
// 1 / p' = 1 - 1/p.
double inv_conjugate(double p) { return std::isinf(p) ? 1.0 : 1.0 - 1.0 / p; }
}  // namespace

double interpolation_constant(double p)
{
    const double omega3 = 4.0 * std::numbers::pi;
    return 1.0 + std::pow(omega3 / 3.0, inv_conjugate(p));
}

InequalityReport interpolation_bound_check(const PhaseSpaceGrid& f, double p,
                                           double tolerance)
{
    InequalityReport rep;
    const double r = interpolation_exponent(p);
    rep.exponent = r;
    auto rho = f.velocity_marginal({0, 0, 0}, {f.nv(), f.nv(), f.nv()});
    rep.lhs = f.spatial_lp_norm(rho, r);
    if (rep.lhs == 0.0)
    {
        rep.vacuous = rep.pass = true;
        return rep;
    }
    // p' as a number; infinity maps to 1.
    const double pc = std::isinf(p) ? 1.0 : p / (p - 1.0);
    const double fp = f.lp_norm(p);
    const double kin = f.kinetic_energy();
    rep.rhs = interpolation_constant(p) * std::pow(fp, 2.0 * pc / (3.0 + 2.0 * pc))
              * std::pow(kin, 3.0 / (3.0 + 2.0 * pc));
    rep.ratio = rep.lhs / rep.rhs;
    rep.pass = rep.lhs <= rep.rhs * (1.0 + tolerance);
    return rep;
}

InequalityReport compact_velocity_marginal_check(const PhaseSpaceGrid& f,
                                                 std::array<int, 3> lo,
                                                 std::array<int, 3> hi, double p,
                                                 double tolerance)
{
    require(p >= 1.0, "L^p exponent must be >= 1");
    InequalityReport rep;
    rep.exponent = p;
    auto rho = f.velocity_marginal(lo, hi);
    rep.lhs = f.spatial_lp_norm(rho, p);
    double lambda = 1.0;
    for (int d = 0; d < 3; ++d)
        lambda *= (hi[d] - lo[d]) * f.dv();
    rep.rhs = std::pow(lambda, inv_conjugate(p)) * f.lp_norm(p);
    if (rep.lhs == 0.0)
    {
        rep.vacuous = rep.pass = true;
        return rep;
    }
    rep.ratio = rep.lhs / rep.rhs;
    rep.pass = rep.lhs <= rep.rhs * (1.0 + tolerance);
    return rep;
}
}  // namespace svl

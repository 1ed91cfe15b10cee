#include "svl/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "svl/error.hpp"

namespace svl
{
namespace
{
using boost::math::quadrature::gauss_kronrod;

constexpr double pi = std::numbers::pi;
constexpr double chi_rel_tol = 1e-8;

double bump_shape(double r, double radius)
{
    double u = r / radius;
    if (u >= 1.0)
        return 0.0;
    return std::exp(-1.0 / (1.0 - u * u));
}

double sinc(double x)
{
    if (std::abs(x) < 1e-4)
    {
        double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

template<class F>
double integrate_checked(F&& f, double a, double b, double rel_tol,
                         const char* what)
{
    double err = 0.0, l1 = 0.0;
    double value = gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol, &err, &l1);
    if (!std::isfinite(value) || err > 100 * rel_tol)
        throw NumericalError(std::string(what) + ": quadrature did not converge (value "
                             + std::to_string(value) + ", relative error estimate "
                             + std::to_string(err) + ", interval ["
                             + std::to_string(a) + ", " + std::to_string(b) + "])");
    return value;
}

Mat3 zero_mat() { return Mat3{}; }

void add_mode_cov(Mat3& q, const NoiseMode& m, double weight)
{
    const Vec3 k = m.k.as_vec();
    const double s = m.amplitude * m.amplitude * weight / double(m.k.norm2());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            q[i][j] += s * k[i] * k[j];
}
}  // namespace

//---------------------------------------------------------------------------//
BlobProfile::BlobProfile(Shape s, double scale) : shape_(s), scale_(scale)
{
    require(scale > 0.0, "blob profile scale must be positive");
    if (shape_ == Shape::bump)
    {
        require(scale <= 0.5, "bump radius must lie inside the unit cell");
        double m = integrate_checked(
            [&](double r) { return 4.0 * pi * r * r * bump_shape(r, scale_); },
            0.0, scale_, 1e-13, "bump normalization");
        norm_ = 1.0 / m;
    }
    else
    {
        norm_ = std::pow(2.0 * pi * scale_ * scale_, -1.5);
    }
}

BlobProfile BlobProfile::bump(double radius) { return {Shape::bump, radius}; }
BlobProfile BlobProfile::gaussian(double width) { return {Shape::gaussian, width}; }

double BlobProfile::value(double r) const
{
    if (shape_ == Shape::bump)
        return norm_ * bump_shape(r, scale_);
    return norm_ * std::exp(-r * r / (2.0 * scale_ * scale_));
}

double BlobProfile::fourier(double q) const
{
    if (shape_ == Shape::gaussian)
        return std::exp(-2.0 * pi * pi * scale_ * scale_ * q * q);
    if (q == 0.0)
        return 1.0;
    return integrate_checked(
        [&](double r) {
            return 4.0 * pi * r * r * value(r) * sinc(two_pi * q * r);
        },
        0.0, scale_, 1e-11, "blob Fourier transform");
}

std::string BlobProfile::name() const
{
    return shape_ == Shape::bump ? "bump" : "gaussian";
}

double blob_chi_radial(double k_norm2, double ell, const BlobProfile& theta)
{
    require(k_norm2 > 0.0, "chi is defined for k != 0");
    require(ell > 0.0 && ell <= 0.25, "blob scale ell_N must lie in (0, 1/4]");
    const double kn = std::sqrt(k_norm2);
    double integral = integrate_checked(
        [&](double l) {
            double t = theta.fourier(l * kn);
            return t * t;
        },
        ell, 2.0 * ell, chi_rel_tol, "chi_N");
    return std::sqrt(integral / ell);
}

double blob_chi(const Mode& k, double ell, const BlobProfile& theta)
{
    return blob_chi_radial(double(k.norm2()), ell, theta);
}

namespace
{
// sum_{k in Z+, |k| <= M} chi^2/|k|^2, with chi cached by |k|^2.
double chi_weight_sum(const std::vector<Mode>& modes, double ell,
                      const BlobProfile& theta, std::map<int, double>& cache)
{
    double sum = 0.0;
    for (const Mode& k : modes)
    {
        auto it = cache.find(k.norm2());
        if (it == cache.end())
            it = cache.emplace(k.norm2(), blob_chi(k, ell, theta)).first;
        sum += it->second * it->second / double(k.norm2());
    }
    return sum;
}
}  // namespace

double blob_sigma(double ell, const BlobProfile& theta, int mode_cutoff, double kT2)
{
    require(mode_cutoff >= 1, "blob mode cutoff M must be >= 1");
    require(kT2 > 0.0, "k_T^2 must be positive");
    auto modes = half_ball_modes(mode_cutoff);
    require(!modes.empty(), "empty blob mode set");
    std::map<int, double> cache;
    return kT2 / (2.0 * chi_weight_sum(modes, ell, theta, cache));
}

//---------------------------------------------------------------------------//
std::string to_string(NoiseVariant v)
{
    switch (v)
    {
    case NoiseVariant::canonical:
        return "canonical";
    case NoiseVariant::blob:
        return "blob";
    case NoiseVariant::renewal:
        return "renewal";
    }
    return "?";
}

NoiseVariant noise_variant_from_string(const std::string& s)
{
    if (s == "canonical")
        return NoiseVariant::canonical;
    if (s == "blob")
        return NoiseVariant::blob;
    if (s == "renewal")
        return NoiseVariant::renewal;
    throw ConfigError("unknown noise variant '" + s
                      + "' (expected canonical, blob or renewal)");
}

void NoiseSpec::validate() const
{
    require(kappa >= 0.0 && std::isfinite(kappa), "kappa must be finite and >= 0");
    require(mode_cutoff >= 1, "noise mode cutoff M must be >= 1");
    if (variant == NoiseVariant::canonical)
    {
        require(family_index >= 1, "canonical family index N must be >= 1");
        require(family_index <= mode_cutoff,
                "canonical family index N must not exceed the mode cutoff M");
        return;
    }
    require(tau > 0.0, "correlation time tau must be positive");
    require(kT2 > 0.0, "k_T^2 must be positive");
    require(ell > 0.0 && ell <= 0.25, "blob scale ell_N must lie in (0, 1/4]");
    double linked = tau * kT2 / 6.0;
    require(std::abs(kappa - linked) <= 1e-12 * std::max(1.0, linked),
            "kappa = tau * k_T^2 / 6 violated (kappa " + std::to_string(kappa)
                + ", tau * k_T^2 / 6 = " + std::to_string(linked) + ")");
}

double CanonicalCoefficients::gamma(const Mode& k) const
{
    int l = k.linf();
    return (l > 0 && l <= family_index) ? c : 0.0;
}

double CanonicalCoefficients::l2_norm() const
{
    return std::sqrt(double(count) * c * c);
}

CanonicalCoefficients canonical_coefficients(int family_index, int mode_cutoff)
{
    require(family_index >= 1, "canonical family index N must be >= 1");
    if (family_index > mode_cutoff)
        throw ConfigError("canonical family index N = " + std::to_string(family_index)
                          + " exceeds mode cutoff M = " + std::to_string(mode_cutoff));
    CanonicalCoefficients g;
    g.family_index = family_index;
    g.mode_cutoff = mode_cutoff;
    long side = 2 * family_index + 1;
    g.count = std::size_t(side * side * side - 1);
    g.c = 1.0 / std::sqrt(double(g.count));
    return g;
}

//---------------------------------------------------------------------------//
NoiseField::NoiseField(const NoiseSpec& spec) : spec_(spec)
{
    spec_.validate();
    if (spec_.variant == NoiseVariant::canonical)
    {
        auto gamma = canonical_coefficients(spec_.family_index, spec_.mode_cutoff);
        for (const Mode& k : half_cube_modes(spec_.family_index))
        {
            NoiseMode m;
            m.k = k;
            m.gamma = gamma.gamma(k);
            // Each half mode carries k and -k.
            m.amplitude = std::sqrt(12.0 * spec_.kappa) * m.gamma;
            modes_.push_back(m);
        }
        cube_cutoff_ = spec_.family_index;
    }
    else
    {
        auto ks = half_ball_modes(spec_.mode_cutoff);
        std::map<int, double> chi;
        sigma2_ = spec_.kT2 / (2.0 * chi_weight_sum(ks, spec_.ell, spec_.profile, chi));
        for (const Mode& k : ks)
        {
            NoiseMode m;
            m.k = k;
            m.chi = chi.at(k.norm2());
            m.amplitude = std::sqrt(2.0 * spec_.tau * sigma2_ / double(k.norm2())) * m.chi;
            modes_.push_back(m);
        }
        cube_cutoff_ = spec_.mode_cutoff;
    }

    double trace = 0.0;
    for (const NoiseMode& m : modes_)
        trace += m.amplitude * m.amplitude;
    if (trace > 0.0)
    {
        double s = std::sqrt(6.0 * spec_.kappa / trace);
        for (NoiseMode& m : modes_)
            m.amplitude *= s;
    }
}

Mat3 NoiseField::covariance_at(const Vec3& lag) const
{
    Mat3 q = zero_mat();
    for (const NoiseMode& m : modes_)
        add_mode_cov(q, m, std::cos(two_pi * dot(m.k.as_vec(), lag)));
    return q;
}

double NoiseField::lr_norm(double r, int n) const
{
    require(r >= 1.0 && std::isfinite(r), "L^r exponent must lie in [1, inf)");
    if (n < 2 * cube_cutoff_ + 2)
        throw ConfigError("L^r quadrature resolution " + std::to_string(n)
                          + " aliases noise modes: need n >= 2M+2 = "
                          + std::to_string(2 * cube_cutoff_ + 2));
    if (r == 2.0)
    {
        // Parseval: the k k^T/|k|^2 blocks have unit Frobenius norm and the
        // cos modes are orthogonal with mean square 1/2.
        double s = 0.0;
        for (const NoiseMode& m : modes_)
            s += std::pow(m.amplitude, 4) / 2.0;
        return std::sqrt(s);
    }

    struct Packed
    {
        int k1, k2, k3;
        double q[6];
    };
    std::vector<Packed> packed;
    packed.reserve(modes_.size());
    for (const NoiseMode& m : modes_)
    {
        Mat3 q = zero_mat();
        add_mode_cov(q, m, 1.0);
        packed.push_back({m.k.k1, m.k.k2, m.k.k3,
                          {q[0][0], q[0][1], q[0][2], q[1][1], q[1][2], q[2][2]}});
    }
    std::vector<double> cos_table(n);
    for (int j = 0; j < n; ++j)
        cos_table[j] = std::cos(two_pi * j / n);

    auto mod = [n](long v) { return int(((v % n) + n) % n); };
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
            {
                double q[6] = {0, 0, 0, 0, 0, 0};
                for (const Packed& p : packed)
                {
                    double cs = cos_table[mod(long(p.k1) * a + long(p.k2) * b
                                              + long(p.k3) * c)];
                    for (int e = 0; e < 6; ++e)
                        q[e] += p.q[e] * cs;
                }
                double f2 = q[0] * q[0] + q[3] * q[3] + q[5] * q[5]
                            + 2.0 * (q[1] * q[1] + q[2] * q[2] + q[4] * q[4]);
                acc += std::pow(f2, r / 2.0);
            }
    return std::pow(acc / (double(n) * n * n), 1.0 / r);
}

GradientSeries NoiseField::increment_series(const HalfCube& cube, double dt,
                                            const RandomStream& rng,
                                            std::uint64_t step) const
{
    require(cube.kmax() >= cube_cutoff_, "cube too small for noise modes");
    GradientSeries s(cube.size());
    const double sdt = std::sqrt(dt);
    for (const NoiseMode& m : modes_)
    {
        long idx = cube.index_of(m.k);
        auto xi = rng.normal_pair(Purpose::common_noise, step, m.k.key());
        const double f = m.amplitude * sdt / std::sqrt(double(m.k.norm2()));
        s.alpha[idx] = f * xi[0];
        s.beta[idx] = f * xi[1];
    }
    return s;
}

void NoiseField::write_analytics_csv(std::ostream& os) const
{
    os << "k1,k2,k3,norm,chi,gamma,amplitude,q11,q12,q13,q22,q23,q33\n";
    os.precision(17);
    for (const NoiseMode& m : modes_)
    {
        Mat3 q = zero_mat();
        add_mode_cov(q, m, 1.0);
        os << m.k.k1 << ',' << m.k.k2 << ',' << m.k.k3 << ','
           << std::sqrt(double(m.k.norm2())) << ',' << m.chi << ',' << m.gamma << ','
           << m.amplitude << ',' << q[0][0] << ',' << q[0][1] << ',' << q[0][2] << ','
           << q[1][1] << ',' << q[1][2] << ',' << q[2][2] << '\n';
    }
}

Mat3 covariance_at(const NoiseSpec& spec, const Vec3& lag)
{
    return NoiseField(spec).covariance_at(lag);
}

double covariance_lr_norm(const NoiseSpec& spec, double r, int n)
{
    return NoiseField(spec).lr_norm(r, n);
}

std::vector<Vec3> sample_field_increments(const NoiseField& field,
                                          std::span<const Vec3> points, double dt,
                                          const RandomStream& rng, std::uint64_t step)
{
    require(dt > 0.0, "time step must be positive");
    HalfCube cube(field.cube_cutoff());
    GradientSeries s = field.increment_series(cube, dt, rng, step);
    std::array<std::vector<double>, 3> pts;
    for (int d = 0; d < 3; ++d)
        for (const Vec3& p : points)
            pts[d].push_back(p[d]);
    VectorField out;
    evaluate_gradient_series(cube, {pts[0], pts[1], pts[2]}, s, out);
    std::vector<Vec3> result(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        result[i] = {out[0][i], out[1][i], out[2][i]};
    return result;
}

//---------------------------------------------------------------------------//
Blob sample_blob(const NoiseSpec& spec, const NoiseField& field,
                 const RandomStream& rng, std::uint64_t n)
{
    const double s2 = field.sigma2();
    require(s2 > spec.r_mean * spec.r_mean,
            "renewal amplitude mean must satisfy E[R]^2 < sigma_N^2");
    auto u0 = rng.uniform_pair(Purpose::renewal, n, 0);
    auto u1 = rng.uniform_pair(Purpose::renewal, n, 1);
    Blob b;
    b.center = {u0[0] - 0.5, u0[1] - 0.5, u1[0] - 0.5};
    b.scale = spec.ell * (1.0 + u1[1]);
    auto u2 = rng.uniform_pair(Purpose::renewal, n, 2);
    const double spread = std::sqrt(s2 - spec.r_mean * spec.r_mean);
    b.amplitude = spec.r_mean + (u2[0] <= 0.5 ? -spread : spread);
    return b;
}

std::vector<Vec3> blob_field(const NoiseSpec& spec, const Blob& blob,
                             std::span<const Vec3> points)
{
    HalfCube cube(spec.mode_cutoff);
    GradientSeries s(cube.size());
    const int m2 = spec.mode_cutoff * spec.mode_cutoff;
    for (std::size_t i = 0; i < cube.size(); ++i)
    {
        const Mode& k = cube.modes()[i];
        if (k.norm2() > m2)
            continue;
        // R (-2 k/|k|^2) thetahat(L|k|) sin(2 pi k.(y - X)).
        const double c = -2.0 * blob.amplitude
                         * spec.profile.fourier(blob.scale * std::sqrt(double(k.norm2())))
                         / double(k.norm2());
        const double ph = two_pi * dot(k.as_vec(), blob.center);
        s.alpha[i] = -c * std::sin(ph);
        s.beta[i] = c * std::cos(ph);
    }
    std::array<std::vector<double>, 3> pts;
    for (int d = 0; d < 3; ++d)
        for (const Vec3& p : points)
            pts[d].push_back(p[d]);
    VectorField out;
    evaluate_gradient_series(cube, {pts[0], pts[1], pts[2]}, s, out);
    std::vector<Vec3> result(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        result[i] = {out[0][i], out[1][i], out[2][i]};
    return result;
}

double blob_projection(const NoiseSpec& spec, const Blob& blob, const Mode& k0,
                       int component)
{
    require(component >= 0 && component < 3, "component must be 0, 1 or 2");
    if (k0.norm2() == 0 || k0.norm2() > spec.mode_cutoff * spec.mode_cutoff)
        return 0.0;
    const double n2 = double(k0.norm2());
    return blob.amplitude * k0.as_vec()[component] / n2
           * spec.profile.fourier(blob.scale * std::sqrt(n2))
           * std::sin(two_pi * dot(k0.as_vec(), blob.center));
}

std::vector<std::vector<Vec3>> sample_renewal_field(const NoiseField& field,
                                                    std::span<const double> t_grid,
                                                    std::span<const Vec3> points,
                                                    const RandomStream& rng)
{
    const NoiseSpec& spec = field.spec();
    require(spec.variant != NoiseVariant::canonical,
            "renewal sampling needs a blob or renewal spec");
    std::vector<std::vector<Vec3>> out;
    out.reserve(t_grid.size());
    for (double t : t_grid)
    {
        double q = t / spec.tau;
        double n = std::round(q);
        require(t >= 0.0 && std::abs(q - n) <= 1e-9 * std::max(1.0, q),
                "renewal time grid must be aligned to multiples of tau");
        Blob b = sample_blob(spec, field, rng, std::uint64_t(n));
        out.push_back(blob_field(spec, b, points));
    }
    return out;
}
}  // namespace svl

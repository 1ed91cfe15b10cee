#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "svl/diagnostics.hpp"
#include "svl/error.hpp"
#include "svl/noise_model.hpp"
#include "svl/stats.hpp"

using namespace svl;
using std::numbers::pi;

namespace
{
NoiseSpec canonical(int n, int m = 4, double kappa = 0.5)
{
    NoiseSpec s;
    s.kappa = kappa;
    s.family_index = n;
    s.mode_cutoff = m;
    return s;
}

NoiseSpec blob(double kappa = 0.5, int m = 5, double ell = 0.05)
{
    NoiseSpec s;
    s.variant = NoiseVariant::blob;
    s.tau = 0.01;
    s.kT2 = 6.0 * kappa / s.tau;
    s.kappa = kappa;
    s.mode_cutoff = m;
    s.ell = ell;
    return s;
}

double frob(const Mat3& q)
{
    double s = 0.0;
    for (auto& row : q)
        for (double x : row)
            s += x * x;
    return std::sqrt(s);
}

// ||Q||_{L^r} by direct evaluation of covariance_at on the n^3 grid.
double lr_direct(const NoiseField& f, double r, int n)
{
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                acc += std::pow(frob(f.covariance_at({double(a) / n, double(b) / n, double(c) / n})), r);
    return std::pow(acc / (double(n) * n * n), 1.0 / r);
}
}  // namespace

TEST_CASE("canonical coefficients count and normalization")
{
    auto g1 = canonical_coefficients(1, 4);
    CHECK(g1.count == 26);
    CHECK(g1.c == doctest::Approx(1.0 / std::sqrt(26.0)));
    auto g3 = canonical_coefficients(3, 4);
    CHECK(g3.count == 342);
    CHECK(g3.linf_norm() < g1.linf_norm());
    for (int n = 1; n <= 4; ++n)
    {
        auto g = canonical_coefficients(n, 4);
        double s = 0.0;
        for (const Mode& k : full_cube_modes(4))
            s += g.gamma(k) * g.gamma(k);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(g.l2_norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(g.gamma({n + 1, 0, 0}) == 0.0);
    }
    CHECK_THROWS_AS(canonical_coefficients(5, 4), ConfigError);
    CHECK_THROWS_AS(canonical_coefficients(0, 4), ConfigError);
}

TEST_CASE("bump profile is normalized, compactly supported and radial")
{
    auto th = BlobProfile::bump();
    CHECK(th.fourier(0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(th.value(0.25) == 0.0);
    CHECK(th.value(0.3) == 0.0);
    CHECK(th.value(0.1) > 0.0);
    // Midpoint rule for 4 pi int theta r^2 sin(2 pi q r)/(2 pi q r) dr.
    for (double q : {0.5, 2.0, 7.0})
    {
        const int n = 200000;
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
        {
            double r = 0.25 * (i + 0.5) / n;
            acc += 4 * pi * th.value(r) * r * r * std::sin(two_pi * q * r) / (two_pi * q * r);
        }
        CHECK(th.fourier(q) == doctest::Approx(acc * 0.25 / n).epsilon(1e-8));
    }
    CHECK_THROWS_AS(BlobProfile::bump(0.6), ConfigError);
}

TEST_CASE("chi for a Gaussian profile matches the closed-form ell integral")
{
    // thetahat(q) = exp(-2 pi^2 s^2 q^2), so with a = 2 pi s |k|
    // chi^2 = ell^{-1} sqrt(pi) / (2a) [erf(2 a ell) - erf(a ell)].
    for (double s : {0.02, 0.05})
    {
        auto th = BlobProfile::gaussian(s);
        for (double ell : {0.025, 0.1, 0.25})
            for (Mode k : {Mode{1, 0, 0}, Mode{2, 1, 0}, Mode{3, 3, 1}})
            {
                double a = two_pi * s * std::sqrt(double(k.norm2()));
                double chi2 = std::sqrt(pi) / (2 * a * ell)
                              * (std::erf(2 * a * ell) - std::erf(a * ell));
                CHECK(blob_chi(k, ell, th) == doctest::Approx(std::sqrt(chi2)).epsilon(1e-8));
            }
    }
}

TEST_CASE("chi is bounded by the L1 norm, radial, and tends to it")
{
    auto th = BlobProfile::bump();
    for (const Mode& k : half_ball_modes(3))
        CHECK(blob_chi(k, 0.1, th) <= 1.0 + 1e-12);
    CHECK(blob_chi({3, 0, 0}, 0.1, th)
          == doctest::Approx(blob_chi({2, 2, 1}, 0.1, th)).epsilon(1e-10));
    CHECK(blob_chi({1, 0, 0}, 1e-4, th) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(blob_chi({0, 0, 0}, 0.1, th), ConfigError);
    CHECK_THROWS_AS(blob_chi({1, 0, 0}, 0.3, th), ConfigError);
}

TEST_CASE("blob intensity")
{
    auto th = BlobProfile::bump();
    double s1 = blob_sigma(0.05, th, 4, 100.0);
    CHECK(blob_sigma(0.05, th, 4, 200.0) == doctest::Approx(2 * s1));
    // Defining identity at the truncation.
    double sum = 0.0;
    for (const Mode& k : half_ball_modes(4))
        sum += std::pow(blob_chi(k, 0.05, th), 2) / k.norm2();
    CHECK(2 * s1 * sum == doctest::Approx(100.0).epsilon(1e-12));
    // Point-blob limit: chi = 1 gives kT2 / (2 sum_{Z+} |k|^-2).
    auto point = BlobProfile::gaussian(1e-6);
    double harmonic = 0.0;
    for (const Mode& k : half_ball_modes(3))
        harmonic += 1.0 / k.norm2();
    CHECK(blob_sigma(0.01, point, 3, 50.0) == doctest::Approx(50.0 / (2 * harmonic)).epsilon(1e-8));
    // Decreasing in M, towards zero (sum |k|^-2 diverges linearly in M).
    double prev = 1e300;
    for (int m : {2, 4, 8, 16})
    {
        double s = blob_sigma(0.01, point, m, 50.0);
        CHECK(s < prev);
        prev = s;
    }
    CHECK(prev < 0.1 * blob_sigma(0.01, point, 2, 50.0));
    CHECK_THROWS_AS(blob_sigma(0.05, th, 0, 1.0), ConfigError);
}

TEST_CASE("covariance at lag zero is 2 kappa I")
{
    for (int n = 1; n <= 4; ++n)
    {
        Mat3 q = covariance_at(canonical(n, 4, 0.7), {0, 0, 0});
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(std::abs(q[i][j] - (i == j ? 1.4 : 0.0)) <= 1e-12);
    }
    NoiseSpec b = blob(0.5);
    Mat3 q = covariance_at(b, {0, 0, 0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(q[i][j] - (i == j ? b.tau * b.kT2 / 3.0 : 0.0)) <= 1e-12);
    // Symmetric and even in the lag.
    NoiseField f(canonical(2));
    Mat3 a = f.covariance_at({0.1, -0.2, 0.33}), c = f.covariance_at({-0.1, 0.2, -0.33});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
        {
            CHECK(a[i][j] == doctest::Approx(a[j][i]));
            CHECK(a[i][j] == doctest::Approx(c[i][j]));
        }
}

TEST_CASE("blob spec enforces the kappa, tau, k_T link")
{
    NoiseSpec b = blob();
    b.kappa = 0.6;
    try
    {
        b.validate();
        FAIL("expected a configuration error");
    }
    catch (const ConfigError& e)
    {
        CHECK(std::string(e.what()).find("kappa = tau * k_T^2 / 6") != std::string::npos);
    }
}

TEST_CASE("L^r norms of the covariance")
{
    const double kappa = 0.5;
    double prev[3] = {1e300, 1e300, 1e300};
    for (int n = 1; n <= 4; ++n)
    {
        NoiseField f(canonical(n, 4, kappa));
        const int res = 4 * f.cube_cutoff() + 2;
        double c = canonical_coefficients(n, 4).c;
        double l2 = f.lr_norm(2.0, res);
        CHECK(l2 <= 6 * kappa * c * (1 + 1e-12));
        // Parseval agrees with exact grid quadrature of the trigonometric polynomial.
        CHECK(l2 == doctest::Approx(lr_direct(f, 2.0, res)).epsilon(1e-10));
        CHECK(f.lr_norm(1.75, res) == doctest::Approx(lr_direct(f, 1.75, res)).epsilon(1e-10));
        for (double r : {3.0, 4.0})
            CHECK(f.lr_norm(r, res) <= 6 * kappa * std::pow(c, 2.0 / r) * (1 + 1e-9));
        int i = 0;
        for (double r : {1.0, 1.75, 2.0})
        {
            double v = f.lr_norm(r, res);
            CHECK(v < prev[i]);
            prev[i++] = v;
        }
    }
    CHECK_THROWS_AS(NoiseField(canonical(3)).lr_norm(1.75, 7), ConfigError);
    CHECK_THROWS_AS(NoiseField(canonical(1)).lr_norm(0.5, 8), ConfigError);
}

TEST_CASE("single-mode covariance norm matches the hand integral")
{
    // N = 1 at lag x: the ||k||_inf = 1 family reduces on the axis x = (s, 0, 0)
    // to a sum of cosines; instead compare a 1-mode field against its closed form:
    // Q = a^2 e1 e1^T cos(2 pi x1), ||Q||_r = a^2 (int |cos|^r)^{1/r}.
    NoiseSpec s = blob(0.5, 1);
    NoiseField f(s);
    REQUIRE(f.modes().size() == 3);
    // Three axis modes with equal amplitude a^2 = 2 kappa.
    const double a2 = 2 * 0.5;
    for (const NoiseMode& m : f.modes())
        CHECK(m.amplitude * m.amplitude == doctest::Approx(a2));
    // ||Q||_F^2 = a^4 (c1^2 + c2^2 + c3^2) with c_j = cos(2 pi x_j); its
    // mean is 3 a^4 / 2.
    CHECK(f.lr_norm(2.0, 4) == doctest::Approx(a2 * std::sqrt(1.5)));
    CHECK(lr_direct(f, 2.0, 8) == doctest::Approx(a2 * std::sqrt(1.5)));
    // r = 1: E sqrt(c1^2 + c2^2 + c3^2) by a 1D-separable fine quadrature.
    const int n = 60;
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
            {
                double c1 = std::cos(two_pi * i / n), c2 = std::cos(two_pi * j / n),
                       c3 = std::cos(two_pi * l / n);
                acc += std::sqrt(c1 * c1 + c2 * c2 + c3 * c3);
            }
    CHECK(f.lr_norm(1.0, n) == doctest::Approx(a2 * acc / (double(n) * n * n)).epsilon(1e-12));
}

TEST_CASE("sampled increments are centered with the analytic covariance")
{
    NoiseField f(canonical(2));
    RandomStream rng(99, 1);
    const double dt = 0.01;
    const int draws = 20000;
    std::vector<Vec3> pts{{0, 0, 0}, {0.15, -0.1, 0.3}};
    Mat3 q0 = f.covariance_at({0, 0, 0});
    Mat3 q1 = f.covariance_at(pts[0] - pts[1]);
    std::vector<double> mean[3], c00[9], c01[9];
    for (int d = 0; d < draws; ++d)
    {
        auto w = sample_field_increments(f, pts, dt, rng, std::uint64_t(d));
        for (int i = 0; i < 3; ++i)
        {
            mean[i].push_back(w[0][i]);
            for (int j = 0; j < 3; ++j)
            {
                c00[3 * i + j].push_back(w[0][i] * w[0][j]);
                c01[3 * i + j].push_back(w[0][i] * w[1][j]);
            }
        }
    }
    for (int i = 0; i < 3; ++i)
    {
        auto m = estimate_mean(mean[i]);
        CHECK(within_ci(m.mean, 0.0, m.se, 4.0));
    }
    for (int e = 0; e < 9; ++e)
    {
        auto a = estimate_mean(c00[e]);
        auto b = estimate_mean(c01[e]);
        CHECK(within_ci(a.mean, q0[e / 3][e % 3] * dt, a.se, 4.0));
        CHECK(within_ci(b.mean, q1[e / 3][e % 3] * dt, b.se, 4.0));
    }
}

TEST_CASE("increments are deterministic per step and shared across families")
{
    NoiseField f2(canonical(2)), f3(canonical(3));
    RandomStream rng(5, 0);
    HalfCube cube(3);
    auto a = f2.increment_series(cube, 0.01, rng, 4);
    auto b = f2.increment_series(cube, 0.01, rng, 4);
    CHECK(a.alpha == b.alpha);
    CHECK(a.beta == b.beta);
    // Common mode (1, 0, 0): same standard normal, different amplitude.
    auto c = f3.increment_series(cube, 0.01, rng, 4);
    long i = cube.index_of({1, 0, 0});
    double ratio2 = f2.modes()[HalfCube(2).index_of({1, 0, 0})].amplitude;
    double ratio3 = f3.modes()[HalfCube(3).index_of({1, 0, 0})].amplitude;
    CHECK(c.alpha[i] / a.alpha[i] == doctest::Approx(ratio3 / ratio2));
}

TEST_CASE("sampled fields are gradients")
{
    for (const NoiseSpec& s : {canonical(3), blob(0.5, 4)})
    {
        NoiseField f(s);
        const int n = 4 * f.cube_cutoff() + 2;
        DensityGrid nodes(n);
        std::vector<Vec3> pts;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l)
                    pts.push_back(nodes.node(i, j, l));
        RandomStream rng(3, 0);
        auto w = sample_field_increments(f, pts, 1.0, rng, 0);
        VectorField vf;
        for (int d = 0; d < 3; ++d)
            for (const Vec3& x : w)
                vf[d].push_back(x[d]);
        CHECK(spectral_curl_ratio(vf, n, f.cube_cutoff()) < 1e-10);
    }
}

TEST_CASE("analytics CSV lists every mode")
{
    NoiseField f(canonical(1));
    std::ostringstream os;
    f.write_analytics_csv(os);
    std::string s = os.str();
    CHECK(s.rfind("k1,k2,k3,norm,chi,gamma,amplitude,q11,q12,q13,q22,q23,q33\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 14);
}

TEST_CASE("single blob projection matches quadrature of the blob field")
{
    NoiseSpec s = blob(0.5, 3);
    s.variant = NoiseVariant::renewal;
    NoiseField f(s);
    RandomStream rng(8, 0);
    const int n = 16;
    DensityGrid nodes(n);
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
                pts.push_back(nodes.node(i, j, l));
    for (std::uint64_t b = 0; b < 3; ++b)
    {
        Blob bl = sample_blob(s, f, rng, b);
        auto e = blob_field(s, bl, pts);
        for (Mode k0 : {Mode{1, 0, 0}, Mode{1, -2, 1}, Mode{0, 1, 1}})
            for (int c = 0; c < 3; ++c)
            {
                double acc = 0.0;
                for (std::size_t p = 0; p < pts.size(); ++p)
                    acc += e[p][c] * std::cos(two_pi * dot(k0.as_vec(), pts[p]));
                acc /= double(pts.size());
                CHECK(std::abs(blob_projection(s, bl, k0, c) - acc) <= 1e-10 * (std::abs(acc) + 1e-3));
            }
    }
}

TEST_CASE("renewal field is centered and its time integral has covariance T Q")
{
    for (double r_mean : {0.0, 0.5})
    {
        NoiseSpec s = blob(0.5, 3);
        s.variant = NoiseVariant::renewal;
        s.r_mean = r_mean * std::sqrt(NoiseField(s).sigma2());
        NoiseField f(s);
        const Mode k0{1, 1, 0};
        const int comp = 0;
        const double horizon = 1.0;
        const int blobs = int(std::lround(horizon / s.tau));
        const int reps = 4000;
        std::vector<double> single, integral;
        for (int r = 0; r < reps; ++r)
        {
            RandomStream rng(17, std::uint64_t(r));
            double acc = 0.0;
            for (int b = 0; b < blobs; ++b)
            {
                double p = blob_projection(s, sample_blob(s, f, rng, std::uint64_t(b)), k0, comp);
                if (b == 0)
                    single.push_back(p);
                acc += s.tau * p;
            }
            integral.push_back(acc / std::sqrt(s.tau));
        }
        auto m = estimate_mean(single);
        CHECK(within_ci(m.mean, 0.0, m.se, 4.0));
        // T <Q phi, phi> with Q = Q_N / tau and phi = e_j cos(2 pi k0.x).
        double chi = blob_chi(k0, s.ell, s.profile);
        double n2 = k0.norm2();
        double target = horizon * f.sigma2() * chi * chi * std::pow(k0.as_vec()[comp], 2)
                        / (2 * n2 * n2);
        std::vector<double> sq;
        auto mi = estimate_mean(integral);
        for (double x : integral)
            sq.push_back((x - mi.mean) * (x - mi.mean));
        auto v = estimate_mean(sq);
        CHECK(within_ci(v.mean, target, v.se, 4.0));
        // Same value from the covariance function: <Q_N phi, phi> = a^2 k_j^2/|k|^2 / 4.
        double a2 = 0.0;
        for (const NoiseMode& md : f.modes())
            if (md.k == k0)
                a2 = md.amplitude * md.amplitude;
        CHECK(target == doctest::Approx(horizon * a2 * std::pow(k0.as_vec()[comp], 2) / n2 / 4 / s.tau));
    }
}

TEST_CASE("renewal time grid must be aligned to tau")
{
    NoiseSpec s = blob(0.5, 2);
    s.variant = NoiseVariant::renewal;
    NoiseField f(s);
    RandomStream rng(1, 0);
    std::vector<Vec3> pts{{0, 0, 0}};
    std::vector<double> ok{0.0, 0.01, 0.02}, bad{0.005};
    auto v = sample_renewal_field(f, ok, pts, rng);
    CHECK(v.size() == 3);
    CHECK_THROWS_AS(sample_renewal_field(f, bad, pts, rng), ConfigError);
    CHECK_THROWS_AS(sample_renewal_field(NoiseField(canonical(1)), ok, pts, rng), ConfigError);
}

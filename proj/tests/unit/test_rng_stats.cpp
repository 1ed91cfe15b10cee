#include <cmath>
#include <set>
#include <vector>

#include <doctest.h>

#include "svl/error.hpp"
#include "svl/rng.hpp"
#include "svl/stats.hpp"

using namespace svl;

TEST_CASE("philox4x32-10 known-answer vectors")
{
    // Published test vectors of the Random123 distribution.
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0})
          == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                        {0xffffffffu, 0xffffffffu})
          == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                        {0xa4093822u, 0x299f31d0u})
          == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("random streams are pure functions of their keys")
{
    RandomStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    auto x = a.normal_pair(Purpose::common_noise, 12, 5, 1);
    CHECK(x == b.normal_pair(Purpose::common_noise, 12, 5, 1));
    CHECK(x != c.normal_pair(Purpose::common_noise, 12, 5, 1));
    CHECK(x != d.normal_pair(Purpose::common_noise, 12, 5, 1));
    CHECK(x != a.normal_pair(Purpose::independent_noise, 12, 5, 1));
    CHECK(x != a.normal_pair(Purpose::common_noise, 13, 5, 1));
    // Steps beyond 32 bits still address distinct blocks.
    CHECK(a.uniform_pair(Purpose::generic, 1ull << 33, 0)
          != a.uniform_pair(Purpose::generic, 0, 0));
}

TEST_CASE("normal draws have unit variance and zero mean")
{
    RandomStream rng(1, 0);
    std::vector<double> xs, sq;
    for (std::uint32_t i = 0; i < 20000; ++i)
    {
        auto n = rng.normal3(Purpose::generic, 0, i);
        for (double v : n)
        {
            xs.push_back(v);
            sq.push_back(v * v);
        }
    }
    auto m = estimate_mean(xs);
    auto s = estimate_mean(sq);
    CHECK(within_ci(m.mean, 0.0, m.se, 4.0));
    CHECK(within_ci(s.mean, 1.0, s.se, 4.0));
}

TEST_CASE("uniform draws lie in (0, 1]")
{
    RandomStream rng(2, 0);
    double lo = 1, hi = 0;
    for (std::uint32_t i = 0; i < 10000; ++i)
        for (double u : rng.uniform_pair(Purpose::generic, 0, i))
        {
            lo = std::min(lo, u);
            hi = std::max(hi, u);
        }
    CHECK(lo > 0.0);
    CHECK(hi <= 1.0);
    CHECK(lo < 1e-3);
    CHECK(hi > 1 - 1e-3);
}

TEST_CASE("mean, variance and standard error")
{
    std::vector<double> xs{1, 2, 3, 4};
    auto m = estimate_mean(xs);
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(sample_variance(xs) == doctest::Approx(5.0 / 3.0));
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 12.0)));
    CHECK(within_ci(1.0, 1.0, 0.0, 3.0));
    CHECK_FALSE(within_ci(1.0, 1.1, 0.01, 3.0));
}

TEST_CASE("least squares recovers an exact line")
{
    std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    auto f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.slope_se == doctest::Approx(0.0).epsilon(1e-12));
    std::vector<double> flat{2, 2, 2};
    CHECK(fit_line(flat, std::vector<double>{1, 2, 3}).degenerate);
    CHECK_THROWS_AS(fit_line(std::vector<double>{1}, std::vector<double>{1}),
                    StatisticalError);
}

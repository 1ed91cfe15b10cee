#include "svl/rng.hpp"

#include <cmath>
#include <numbers>

namespace svl
{
namespace
{
constexpr std::uint32_t philox_m0 = 0xD2511F53u;
constexpr std::uint32_t philox_m1 = 0xCD9E8D57u;
constexpr std::uint32_t philox_w0 = 0x9E3779B9u;
constexpr std::uint32_t philox_w1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo)
{
    std::uint64_t p = std::uint64_t(a) * b;
    hi = std::uint32_t(p >> 32);
    lo = std::uint32_t(p);
}

inline double to_unit(std::uint32_t hi, std::uint32_t lo)
{
    std::uint64_t u = (std::uint64_t(hi) << 32) | lo;
    // 53 random bits mapped to (0, 1].
    return (double((u >> 11) + 1)) * 0x1.0p-53;
}
}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key)
{
    for (int round = 0; round < 10; ++round)
    {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(philox_m0, ctr[0], hi0, lo0);
        mulhilo(philox_m1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += philox_w0;
        key[1] += philox_w1;
    }
    return ctr;
}

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t replica)
    : seed_(seed), replica_(replica)
{
    std::uint64_t h = splitmix64(seed ^ splitmix64(replica + 0x632BE59BD9B4E019ull));
    key_ = {std::uint32_t(h), std::uint32_t(h >> 32)};
}

PhiloxCounter RandomStream::counter(Purpose purpose, std::uint64_t step,
                                    std::uint32_t index, std::uint32_t sub) const
{
    return {index, sub, std::uint32_t(step),
            (std::uint32_t(step >> 32) & 0x00ffffffu)
                | (std::uint32_t(purpose) << 24)};
}

std::array<double, 2> RandomStream::uniform_pair(Purpose purpose,
                                                 std::uint64_t step,
                                                 std::uint32_t index,
                                                 std::uint32_t sub) const
{
    auto r = philox4x32_10(counter(purpose, step, index, sub), key_);
    return {to_unit(r[0], r[1]), to_unit(r[2], r[3])};
}

std::array<double, 2> RandomStream::normal_pair(Purpose purpose,
                                                std::uint64_t step,
                                                std::uint32_t index,
                                                std::uint32_t sub) const
{
    auto u = uniform_pair(purpose, step, index, sub);
    double rad = std::sqrt(-2.0 * std::log(u[0]));
    double ang = 2.0 * std::numbers::pi * u[1];
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

std::array<double, 3> RandomStream::normal3(Purpose purpose, std::uint64_t step,
                                            std::uint32_t index) const
{
    auto a = normal_pair(purpose, step, index, 0);
    auto b = normal_pair(purpose, step, index, 1);
    return {a[0], a[1], b[0]};
}
}  // namespace svl

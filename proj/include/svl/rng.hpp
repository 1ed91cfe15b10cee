#pragma once

#include <array>
#include <cstdint>

namespace svl
{
//! Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);

// What a draw is used for. Part of the counter, so different consumers never
// share a block even when their (step, index) coincide.
enum class Purpose : std::uint32_t
{
    initial_condition = 1,
    common_noise = 2,
    independent_noise = 3,
    renewal = 4,
    probe = 5,
    generic = 6,
};

/*!
 * Counter-based random stream keyed by (master seed, replica id).
 *
 * Every draw is a pure function of (seed, replica, purpose, step, index,
 * sub); there is no hidden state, so results do not depend on the order or
 * thread in which draws are requested.
 */
class RandomStream
{
  public:
    RandomStream(std::uint64_t seed, std::uint64_t replica);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t replica() const { return replica_; }

    //! Two independent uniforms in (0, 1].
    std::array<double, 2> uniform_pair(Purpose purpose, std::uint64_t step,
                                       std::uint32_t index,
                                       std::uint32_t sub = 0) const;

    //! Two independent standard normals (Box-Muller on one Philox block).
    std::array<double, 2> normal_pair(Purpose purpose, std::uint64_t step,
                                      std::uint32_t index,
                                      std::uint32_t sub = 0) const;

    //! Three standard normals (consumes two blocks).
    std::array<double, 3> normal3(Purpose purpose, std::uint64_t step,
                                  std::uint32_t index) const;

  private:
    PhiloxCounter counter(Purpose purpose, std::uint64_t step,
                          std::uint32_t index, std::uint32_t sub) const;

    std::uint64_t seed_;
    std::uint64_t replica_;
    PhiloxKey key_;
};
}  // namespace svl

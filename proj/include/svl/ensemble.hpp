#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "svl/vec.hpp"

namespace svl
{
/*!
 * Weighted empirical measure on T^3 x R^3, stored structure-of-arrays.
 *
 * Positions live in the fundamental cell [-1/2, 1/2)^3. Weights never change
 * once the ensemble is built.
 */
struct ParticleEnsemble
{
    std::array<std::vector<double>, 3> x;
    std::array<std::vector<double>, 3> v;
    std::vector<double> w;

    std::size_t size() const { return w.size(); }
    bool empty() const { return w.empty(); }

    void resize(std::size_t n)
    {
        for (int d = 0; d < 3; ++d)
        {
            x[d].assign(n, 0.0);
            v[d].assign(n, 0.0);
        }
        w.assign(n, 0.0);
    }

    void push_back(const Vec3& pos, const Vec3& vel, double weight)
    {
        for (int d = 0; d < 3; ++d)
        {
            x[d].push_back(wrap(pos[d]));
            v[d].push_back(vel[d]);
        }
        w.push_back(weight);
    }

    Vec3 position(std::size_t i) const { return {x[0][i], x[1][i], x[2][i]}; }
    Vec3 velocity(std::size_t i) const { return {v[0][i], v[1][i], v[2][i]}; }

    double total_weight() const
    {
        double s = 0.0;
        for (double wi : w)
            s += wi;
        return s;
    }
};
}  // namespace svl

#include "svl/vec.hpp"

namespace svl
{
std::vector<Mode> half_cube_modes(int kmax)
{
    // Nested order shared with the blocked phase kernels in torus_kernel.cpp.
    std::vector<Mode> out;
    for (int a = 0; a <= kmax; ++a)
        for (int b = (a == 0 ? 0 : -kmax); b <= kmax; ++b)
            for (int c = (a == 0 && b == 0 ? 1 : -kmax); c <= kmax; ++c)
                out.push_back({a, b, c});
    return out;
}

std::vector<Mode> half_ball_modes(double radius)
{
    int kmax = int(std::floor(radius));
    double r2 = radius * radius;
    std::vector<Mode> out;
    for (const Mode& m : half_cube_modes(kmax))
        if (m.norm2() <= r2 + 1e-9)
            out.push_back(m);
    return out;
}

std::vector<Mode> full_cube_modes(int kmax)
{
    std::vector<Mode> out;
    for (int a = -kmax; a <= kmax; ++a)
        for (int b = -kmax; b <= kmax; ++b)
            for (int c = -kmax; c <= kmax; ++c)
                if (a != 0 || b != 0 || c != 0)
                    out.push_back({a, b, c});
    return out;
}
}  // namespace svl
